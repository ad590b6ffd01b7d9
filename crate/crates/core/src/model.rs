//! Problem instances, cable catalogs and the step cost function.
//!
//! Node numbering is 1-based: ids `1..=n_S` are substations and
//! `n_S+1..=n_S+n_T` are turbines. Coordinates are in meters; every cost
//! evaluation works on lengths in kilometers because catalog prices are
//! quoted per km.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of nearest turbines kept per turbine in the candidate graph.
pub const DEFAULT_NEIGHBOR_TRUNCATION: usize = 15;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cable catalog has no valid entry")]
    EmptyCatalog,
    #[error("instance has no turbines")]
    NoTurbines,
    #[error("instance has no substations")]
    NoSubstations,
    #[error("node {0} has a non-finite coordinate")]
    NonFiniteCoordinate(NodeId),
    #[error("nodes {0} and {1} share the same coordinates")]
    DuplicateCoordinate(NodeId, NodeId),
    #[error("neighbor truncation must be at least 1")]
    ZeroTruncation,
    #[error("failed to read instance file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed instance file: {0}")]
    Json(#[from] serde_json::Error),
}

/// 1-based node identifier shared by substations and turbines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    /// Builds the id of the node stored at 0-based position `index`.
    pub fn from_index(index: usize) -> Self {
        NodeId(index as u32 + 1)
    }

    /// 0-based position of the node in per-node vectors.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Planar coordinate in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CableType {
    /// Maximum number of turbines supported downstream.
    pub capacity: u32,
    /// Cost per km of cable.
    pub unit_cost: f64,
}

impl CableType {
    pub const fn new(capacity: u32, unit_cost: f64) -> Self {
        CableType { capacity, unit_cost }
    }

    fn is_valid(&self) -> bool {
        self.capacity >= 1 && self.unit_cost.is_finite() && self.unit_cost > 0.0
    }
}

/// Cable types sorted with capacities and unit costs both strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CableCatalog {
    cables: Vec<CableType>,
}

impl CableCatalog {
    /// Sorts the raw list by capacity and drops every cable dominated by
    /// another one (no smaller capacity and no higher cost). Invalid entries
    /// are discarded; only an empty result is an error.
    pub fn normalize(raw: &[CableType]) -> Result<Self, ModelError> {
        let mut valid: Vec<CableType> = raw.iter().copied().filter(CableType::is_valid).collect();
        // Larger capacity first, then cheaper first: a forward scan keeps a
        // cable only if it is strictly cheaper than everything kept so far.
        valid.sort_by(|a, b| b.capacity.cmp(&a.capacity).then(a.unit_cost.total_cmp(&b.unit_cost)));
        let mut kept: Vec<CableType> = Vec::with_capacity(valid.len());
        for cable in valid {
            match kept.last() {
                Some(last) if last.unit_cost <= cable.unit_cost => {}
                _ => kept.push(cable),
            }
        }
        if kept.is_empty() {
            return Err(ModelError::EmptyCatalog);
        }
        kept.reverse();
        Ok(CableCatalog { cables: kept })
    }

    pub fn cables(&self) -> &[CableType] {
        &self.cables
    }

    pub fn len(&self) -> usize {
        self.cables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cables.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&CableType> {
        self.cables.get(index)
    }

    /// Largest capacity `Q`.
    pub fn max_capacity(&self) -> u32 {
        self.cables.last().map_or(0, |c| c.capacity)
    }

    /// Index of the cheapest cable able to carry `k` turbines. `None` when
    /// nothing needs to be installed (`k == 0`) or no cable is large enough.
    pub fn cheapest_cable_for(&self, k: u32) -> Option<usize> {
        if k == 0 {
            return None;
        }
        let idx = self.cables.partition_point(|c| c.capacity < k);
        (idx < self.cables.len()).then_some(idx)
    }

    /// Cost of an arc of `length_km` carrying `k` turbines: zero for an idle
    /// arc, infinity when `k` exceeds every capacity.
    pub fn step_cost(&self, length_km: f64, k: u32) -> f64 {
        if k == 0 {
            return 0.0;
        }
        match self.cheapest_cable_for(k) {
            Some(c) => self.cables[c].unit_cost * length_km,
            None => f64::INFINITY,
        }
    }
}

/// An immutable problem statement.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    substations: Vec<Point>,
    turbines: Vec<Point>,
    catalog: CableCatalog,
    neighbor_truncation: usize,
    max_feeders: Option<usize>,
}

impl Instance {
    pub fn new(
        substations: Vec<Point>,
        turbines: Vec<Point>,
        catalog: CableCatalog,
        neighbor_truncation: usize,
    ) -> Result<Self, ModelError> {
        if substations.is_empty() {
            return Err(ModelError::NoSubstations);
        }
        if turbines.is_empty() {
            return Err(ModelError::NoTurbines);
        }
        if neighbor_truncation == 0 {
            return Err(ModelError::ZeroTruncation);
        }
        let mut owner: HashMap<(u64, u64), NodeId> = HashMap::new();
        for (i, p) in substations.iter().chain(turbines.iter()).enumerate() {
            let id = NodeId::from_index(i);
            if !p.is_finite() {
                return Err(ModelError::NonFiniteCoordinate(id));
            }
            // -0.0 and 0.0 are the same location
            let key = ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits());
            if let Some(&first) = owner.get(&key) {
                return Err(ModelError::DuplicateCoordinate(first, id));
            }
            owner.insert(key, id);
        }
        Ok(Instance { substations, turbines, catalog, neighbor_truncation, max_feeders: None })
    }

    /// Attaches a report-only limit on the number of feeders per substation.
    pub fn with_max_feeders(mut self, max_feeders: Option<usize>) -> Self {
        self.max_feeders = max_feeders;
        self
    }

    pub fn with_neighbor_truncation(mut self, neighbor_truncation: usize) -> Result<Self, ModelError> {
        if neighbor_truncation == 0 {
            return Err(ModelError::ZeroTruncation);
        }
        self.neighbor_truncation = neighbor_truncation;
        Ok(self)
    }

    pub fn n_substations(&self) -> usize {
        self.substations.len()
    }

    pub fn n_turbines(&self) -> usize {
        self.turbines.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.substations.len() + self.turbines.len()
    }

    pub fn substations(&self) -> &[Point] {
        &self.substations
    }

    pub fn turbines(&self) -> &[Point] {
        &self.turbines
    }

    pub fn catalog(&self) -> &CableCatalog {
        &self.catalog
    }

    pub fn neighbor_truncation(&self) -> usize {
        self.neighbor_truncation
    }

    pub fn max_feeders(&self) -> Option<usize> {
        self.max_feeders
    }

    pub fn is_substation(&self, id: NodeId) -> bool {
        (id.0 as usize) <= self.substations.len()
    }

    pub fn is_turbine(&self, id: NodeId) -> bool {
        let i = id.0 as usize;
        i > self.substations.len() && i <= self.n_nodes()
    }

    pub fn point(&self, id: NodeId) -> Point {
        let i = id.index();
        if i < self.substations.len() {
            self.substations[i]
        } else {
            self.turbines[i - self.substations.len()]
        }
    }

    pub fn substation_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.substations.len()).map(NodeId::from_index)
    }

    pub fn turbine_ids(&self) -> impl Iterator<Item = NodeId> {
        (self.substations.len()..self.n_nodes()).map(NodeId::from_index)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n_nodes()).map(NodeId::from_index)
    }

    /// Euclidean distance between two nodes in kilometers.
    pub fn length_km(&self, a: NodeId, b: NodeId) -> f64 {
        crate::geometry::distance(self.point(a), self.point(b)) / 1000.0
    }

    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.into_instance()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            substations: self.substations.iter().map(|p| [p.x, p.y]).collect(),
            turbines: self.turbines.iter().map(|p| [p.x, p.y]).collect(),
            cables: self
                .catalog
                .cables()
                .iter()
                .map(|c| CableSpec { capacity: c.capacity, cost_per_km: c.unit_cost })
                .collect(),
            neighbor_truncation: self.neighbor_truncation,
            max_feeders: self.max_feeders,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance serializes")
    }
}

/// On-disk JSON layout of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub substations: Vec<[f64; 2]>,
    pub turbines: Vec<[f64; 2]>,
    pub cables: Vec<CableSpec>,
    #[serde(default = "default_truncation")]
    pub neighbor_truncation: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_feeders: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CableSpec {
    pub capacity: u32,
    pub cost_per_km: f64,
}

fn default_truncation() -> usize {
    DEFAULT_NEIGHBOR_TRUNCATION
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance, ModelError> {
        let raw: Vec<CableType> = self.cables.iter().map(|c| CableType::new(c.capacity, c.cost_per_km)).collect();
        let catalog = CableCatalog::normalize(&raw)?;
        let to_points = |v: &[[f64; 2]]| v.iter().map(|p| Point::new(p[0], p[1])).collect();
        Ok(Instance::new(to_points(&self.substations), to_points(&self.turbines), catalog, self.neighbor_truncation)?
            .with_max_feeders(self.max_feeders))
    }
}
