//! Seeded random instances and the benchmark cable catalogs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{CableCatalog, CableType, Instance, ModelError, Point};

/// Capacity / cost-per-km pairs of the published benchmark cable sets.
pub const BENCHMARK_CATALOGS: [&[(u32, f64)]; 9] = [
    &[(7, 0.37), (11, 0.39), (13, 0.43)],
    &[(7, 0.44), (12, 0.45)],
    &[(10, 0.44), (14, 0.62)],
    &[(5, 0.41), (10, 0.61)],
    &[(4, 0.38), (9, 0.63)],
    &[(4, 0.37), (6, 0.39), (8, 0.43)],
    &[(6, 0.44), (8, 0.62)],
    &[(7, 0.38), (15, 0.63)],
    &[(7, 0.44), (10, 0.62)],
];

pub fn benchmark_catalog(index: usize) -> CableCatalog {
    let raw: Vec<CableType> = BENCHMARK_CATALOGS[index].iter().map(|&(q, w)| CableType::new(q, w)).collect();
    CableCatalog::normalize(&raw).expect("benchmark catalogs are valid")
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("could not place node {placed} of {total} at least {min_separation} m from the others")]
    PlacementFailure { placed: usize, total: usize, min_separation: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_turbines: usize,
    pub n_substations: usize,
    /// Width and height of the site rectangle in meters, origin at (0, 0).
    pub area: (f64, f64),
    pub min_separation: f64,
    pub catalog: CableCatalog,
    pub neighbor_truncation: usize,
    /// Rejected draws allowed per node before giving up.
    pub max_attempts: usize,
}

impl GeneratorConfig {
    pub fn new(n_turbines: usize, n_substations: usize, catalog: CableCatalog) -> Self {
        GeneratorConfig {
            n_turbines,
            n_substations,
            area: (8000.0, 8000.0),
            min_separation: 500.0,
            catalog,
            neighbor_truncation: crate::model::DEFAULT_NEIGHBOR_TRUNCATION,
            max_attempts: 1000,
        }
    }
}

/// Uniform coordinates with minimum-separation rejection sampling;
/// substations are drawn first. The same seed gives the same instance.
pub fn generate_random_instance(seed: u64, config: &GeneratorConfig) -> Result<Instance, GenerateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = config.n_substations + config.n_turbines;
    let min_sq = config.min_separation * config.min_separation;
    let mut points: Vec<Point> = Vec::with_capacity(total);
    while points.len() < total {
        let mut attempts = 0;
        loop {
            if attempts == config.max_attempts {
                return Err(GenerateError::PlacementFailure {
                    placed: points.len(),
                    total,
                    min_separation: config.min_separation,
                });
            }
            attempts += 1;
            // whole meters keep instance files short and exact
            let p = Point::new(rng.gen_range(0.0..=config.area.0).round(), rng.gen_range(0.0..=config.area.1).round());
            let clear = points.iter().all(|q| {
                let (dx, dy) = (p.x - q.x, p.y - q.y);
                dx * dx + dy * dy >= min_sq && (dx, dy) != (0.0, 0.0)
            });
            if clear {
                points.push(p);
                break;
            }
        }
    }
    let turbines = points.split_off(config.n_substations);
    Ok(Instance::new(points, turbines, config.catalog.clone(), config.neighbor_truncation)?)
}
