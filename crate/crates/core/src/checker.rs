//! Independent feasibility and cost audit of a design.
//!
//! Nothing here reuses the sizing code of the heuristics: topology, counts
//! and costs are rebuilt from node coordinates and the catalog.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::geometry::{all_crossings, distance, Segment};
use crate::model::{Instance, NodeId};
use crate::tsh::EdgeMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    /// Forest covering every turbine with exactly one path to a substation.
    pub c1: bool,
    /// Counts within capacity and every row sized with the cheapest cable.
    pub c2: bool,
    /// No crossing cables.
    pub c3: bool,
    pub crossings: usize,
    pub total_cost: f64,
    pub total_length_km: f64,
    /// Cables landing on each substation, by substation id order.
    pub feeders: Vec<usize>,
    pub max_feeders: Option<usize>,
    /// Informational only; never part of feasibility.
    pub feeders_ok: Option<bool>,
    pub issues: Vec<String>,
}

impl DesignReport {
    pub fn feasible(&self) -> bool {
        self.c1 && self.c2 && self.c3
    }
}

/// Recomputed downstream counts keyed by row, or the reason there are none.
fn recount(tree: &EdgeMatrix, instance: &Instance) -> Result<Vec<u32>, String> {
    let n = instance.n_nodes();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut seen_pairs = HashSet::new();
    for (i, r) in tree.rows.iter().enumerate() {
        for id in [r.a, r.b] {
            if id.0 == 0 || id.0 as usize > n {
                return Err(format!("row {i} references unknown node {id}"));
            }
        }
        if r.a == r.b {
            return Err(format!("row {i} is a self loop on {}", r.a));
        }
        if !seen_pairs.insert(r.key()) {
            return Err(format!("row {i} duplicates cable {}-{}", r.a, r.b));
        }
        if instance.is_substation(r.a) && instance.is_substation(r.b) {
            return Err(format!("row {i} joins substations {} and {}", r.a, r.b));
        }
        adj[r.a.index()].push((r.b.index(), i));
        adj[r.b.index()].push((r.a.index(), i));
    }
    if tree.rows.len() != instance.n_turbines() {
        return Err(format!("{} cables for {} turbines", tree.rows.len(), instance.n_turbines()));
    }

    let n_s = instance.n_substations();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    let mut bfs = Vec::with_capacity(n);
    for s in 0..n_s {
        root_of[s] = Some(s);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            bfs.push(u);
            for &(v, row) in &adj[u] {
                if parent[u].map(|p| p.1) == Some(row) {
                    continue;
                }
                if root_of[v].is_some() {
                    return Err(format!("node {} reached twice (cycle or two substations)", NodeId::from_index(v)));
                }
                root_of[v] = Some(s);
                parent[v] = Some((u, row));
                queue.push_back(v);
            }
        }
    }
    if let Some(t) = (n_s..n).find(|&t| root_of[t].is_none()) {
        return Err(format!("turbine {} is not connected to a substation", NodeId::from_index(t)));
    }

    let mut subtree = vec![0u32; n];
    let mut counts = vec![0u32; tree.rows.len()];
    for &u in bfs.iter().rev() {
        if let Some((p, row)) = parent[u] {
            subtree[u] += 1;
            counts[row] = subtree[u];
            subtree[p] += subtree[u];
        }
    }
    Ok(counts)
}

pub fn check_design(tree: &EdgeMatrix, instance: &Instance) -> DesignReport {
    let catalog = instance.catalog();
    let mut issues = Vec::new();

    let counts = match recount(tree, instance) {
        Ok(c) => Some(c),
        Err(msg) => {
            issues.push(msg);
            None
        }
    };
    let c1 = counts.is_some();

    let mut c2 = c1;
    if let Some(counts) = &counts {
        for (r, &k) in tree.rows.iter().zip(counts) {
            if k > catalog.max_capacity() {
                issues.push(format!("cable {}-{} carries {k} turbines", r.a, r.b));
                c2 = false;
            } else if r.downstream != Some(k) || r.cable != catalog.cheapest_cable_for(k) {
                issues.push(format!(
                    "cable {}-{} recorded as {:?}/{:?}, expected {k}/{:?}",
                    r.a,
                    r.b,
                    r.downstream,
                    r.cable,
                    catalog.cheapest_cable_for(k)
                ));
                c2 = false;
            }
        }
    }

    let valid_ids = tree.rows.iter().all(|r| {
        r.a.0 >= 1 && r.b.0 >= 1 && r.a.0 as usize <= instance.n_nodes() && r.b.0 as usize <= instance.n_nodes()
    });
    let mut total_cost = 0.0;
    let mut total_length_km = 0.0;
    let mut crossings = 0;
    let mut feeders = vec![0; instance.n_substations()];
    if valid_ids {
        let segments: Vec<Segment> =
            tree.rows.iter().map(|r| Segment::new(instance.point(r.a), instance.point(r.b), r.a, r.b)).collect();
        crossings = all_crossings(&segments).len();
        for (i, r) in tree.rows.iter().enumerate() {
            let length = distance(instance.point(r.a), instance.point(r.b)) / 1000.0;
            total_length_km += length;
            let k = counts.as_ref().map(|c| c[i]).or(r.downstream);
            total_cost += match k {
                Some(k) => catalog.step_cost(length, k),
                None => f64::NAN,
            };
            for id in [r.a, r.b] {
                if instance.is_substation(id) {
                    feeders[id.index()] += 1;
                }
            }
        }
    } else {
        total_cost = f64::NAN;
        total_length_km = f64::NAN;
    }
    if crossings > 0 {
        issues.push(format!("{crossings} crossing pairs"));
    }

    let max_feeders = instance.max_feeders();
    DesignReport {
        c1,
        c2,
        c3: valid_ids && crossings == 0,
        crossings,
        total_cost,
        total_length_km,
        feeders_ok: max_feeders.map(|phi| feeders.iter().all(|&f| f <= phi)),
        feeders,
        max_feeders,
        issues,
    }
}
