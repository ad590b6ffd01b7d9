//! The truncated directed candidate graph and its one-direction-per-pair view.
//!
//! Turbine-to-turbine arcs are kept for every pair where either end is among
//! the other's nearest turbines, in both directions. Every turbine also has
//! one arc to each substation. Substations never originate arcs.

use std::collections::{BTreeSet, HashMap};

use crate::geometry::{distance, Segment};
use crate::model::{Instance, NodeId, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub tail: NodeId,
    pub head: NodeId,
    pub length_km: f64,
}

#[derive(Debug, Clone)]
pub struct CandidateGraph {
    n_substations: usize,
    points: Vec<Point>,
    arcs: Vec<Arc>,
    out_arcs: Vec<Vec<usize>>,
    in_arcs: Vec<Vec<usize>>,
    arc_index: HashMap<(NodeId, NodeId), usize>,
    neighbor_truncation: usize,
    truncation_clamped: bool,
}

/// Nearest `k` turbines of every turbine, ties broken by node id.
fn nearest_turbines(instance: &Instance, k: usize) -> Vec<Vec<NodeId>> {
    let turbines: Vec<NodeId> = instance.turbine_ids().collect();
    turbines
        .iter()
        .map(|&t| {
            let p = instance.point(t);
            let mut others: Vec<(f64, NodeId)> =
                turbines.iter().filter(|&&u| u != t).map(|&u| (distance(p, instance.point(u)), u)).collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(k).map(|(_, u)| u).collect()
        })
        .collect()
}

pub fn build_candidate_graph(instance: &Instance) -> CandidateGraph {
    let n_t = instance.n_turbines();
    let requested = instance.neighbor_truncation();
    let effective = requested.min(n_t - 1);
    let truncation_clamped = effective < requested;
    if truncation_clamped {
        log::warn!("neighbor truncation {requested} clamped to {effective} for {n_t} turbines");
    }

    let mut pairs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let first_turbine = instance.n_substations();
    for (offset, near) in nearest_turbines(instance, effective).into_iter().enumerate() {
        let t = NodeId::from_index(first_turbine + offset);
        for u in near {
            pairs.insert((t, u));
            pairs.insert((u, t));
        }
    }
    for t in instance.turbine_ids() {
        for s in instance.substation_ids() {
            pairs.insert((t, s));
        }
    }

    let n = instance.n_nodes();
    let mut out_arcs = vec![Vec::new(); n];
    let mut in_arcs = vec![Vec::new(); n];
    let mut arc_index = HashMap::with_capacity(pairs.len());
    let arcs: Vec<Arc> = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (tail, head))| {
            out_arcs[tail.index()].push(i);
            in_arcs[head.index()].push(i);
            arc_index.insert((tail, head), i);
            Arc { tail, head, length_km: instance.length_km(tail, head) }
        })
        .collect();

    CandidateGraph {
        n_substations: instance.n_substations(),
        points: instance.node_ids().map(|id| instance.point(id)).collect(),
        arcs,
        out_arcs,
        in_arcs,
        arc_index,
        neighbor_truncation: effective,
        truncation_clamped,
    }
}

impl CandidateGraph {
    pub fn n_nodes(&self) -> usize {
        self.points.len()
    }

    pub fn n_substations(&self) -> usize {
        self.n_substations
    }

    pub fn is_substation(&self, id: NodeId) -> bool {
        id.index() < self.n_substations
    }

    pub fn point(&self, id: NodeId) -> Point {
        self.points[id.index()]
    }

    /// All arcs, sorted by `(tail, head)`.
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn out_arcs(&self, node: NodeId) -> impl Iterator<Item = &Arc> {
        self.out_arcs[node.index()].iter().map(|&i| &self.arcs[i])
    }

    pub fn in_arcs(&self, node: NodeId) -> impl Iterator<Item = &Arc> {
        self.in_arcs[node.index()].iter().map(|&i| &self.arcs[i])
    }

    pub fn arc(&self, tail: NodeId, head: NodeId) -> Option<&Arc> {
        self.arc_index.get(&(tail, head)).map(|&i| &self.arcs[i])
    }

    /// True when the pair is adjacent in either direction.
    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.arc_index.contains_key(&(a, b)) || self.arc_index.contains_key(&(b, a))
    }

    /// Undirected neighbours of a node, ascending by id.
    pub fn neighbors(&self, node: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> =
            self.out_arcs(node).map(|a| a.head).chain(self.in_arcs(node).map(|a| a.tail)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn segment(&self, a: NodeId, b: NodeId) -> Segment {
        Segment::new(self.point(a), self.point(b), a, b)
    }

    /// Truncation actually applied (the requested one capped at `n_T - 1`).
    pub fn neighbor_truncation(&self) -> usize {
        self.neighbor_truncation
    }

    pub fn truncation_clamped(&self) -> bool {
        self.truncation_clamped
    }
}

/// One arc per adjacent pair: lower id to higher id between turbines,
/// turbine to substation otherwise.
#[derive(Debug, Clone)]
pub struct ForwardArcSet {
    arcs: Vec<Arc>,
    lookup: HashMap<(NodeId, NodeId), usize>,
}

pub fn forward_arcs(graph: &CandidateGraph) -> ForwardArcSet {
    let arcs: Vec<Arc> =
        graph.arcs().iter().filter(|a| graph.is_substation(a.head) || a.tail < a.head).copied().collect();
    let lookup = arcs.iter().enumerate().map(|(i, a)| ((a.tail, a.head), i)).collect();
    ForwardArcSet { arcs, lookup }
}

/// Orientation of a traversal relative to the canonical forward arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Forward,
    Inverse,
}

impl ForwardArcSet {
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// Locates the forward arc joining `tail` and `head`, telling whether the
    /// requested direction matches it or runs against it.
    pub fn find(&self, tail: NodeId, head: NodeId) -> Option<(usize, Orientation)> {
        if let Some(&i) = self.lookup.get(&(tail, head)) {
            return Some((i, Orientation::Forward));
        }
        self.lookup.get(&(head, tail)).map(|&i| (i, Orientation::Inverse))
    }

    /// The inverse set: each forward arc reversed.
    pub fn inverse_arcs(&self) -> impl Iterator<Item = Arc> + '_ {
        self.arcs.iter().map(|a| Arc { tail: a.head, head: a.tail, length_km: a.length_km })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CableCatalog, CableType};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(subs: &[(f64, f64)], turbs: &[(f64, f64)], k: usize) -> Instance {
        let cat = CableCatalog::normalize(&[CableType::new(7, 0.37)]).unwrap();
        let p = |v: &[(f64, f64)]| v.iter().map(|&(x, y)| Point::new(x, y)).collect();
        Instance::new(p(subs), p(turbs), cat, k).unwrap()
    }

    fn ids(g: &CandidateGraph) -> Vec<(u32, u32)> {
        g.arcs().iter().map(|a| (a.tail.0, a.head.0)).collect()
    }

    #[test]
    fn two_turbines_one_substation() {
        let g = build_candidate_graph(&instance(&[(0.0, 0.0)], &[(0.0, 1000.0), (0.0, 2000.0)], 1));
        assert_eq!(ids(&g), vec![(2, 1), (2, 3), (3, 1), (3, 2)]);
        assert!(g.out_arcs(NodeId(1)).next().is_none());
        assert!(!g.truncation_clamped());
        assert_eq!(g.arc(NodeId(2), NodeId(3)).unwrap().length_km, 1.0);
    }

    #[test]
    fn no_substation_to_substation_arcs() {
        let g = build_candidate_graph(&instance(&[(0.0, 0.0), (5000.0, 0.0)], &[(2000.0, 1000.0)], 15));
        assert_eq!(ids(&g), vec![(3, 1), (3, 2)]);
        assert!(g.truncation_clamped());
        assert_eq!(g.neighbor_truncation(), 0);
    }

    #[test]
    fn forward_arc_orientation() {
        let g = build_candidate_graph(&instance(&[(0.0, 0.0)], &[(0.0, 1000.0), (0.0, 2000.0)], 1));
        let f = forward_arcs(&g);
        let got: Vec<(u32, u32)> = f.arcs().iter().map(|a| (a.tail.0, a.head.0)).collect();
        assert_eq!(got, vec![(2, 1), (2, 3), (3, 1)]);
        assert_eq!(f.find(NodeId(3), NodeId(2)), Some((1, Orientation::Inverse)));
        assert_eq!(f.find(NodeId(2), NodeId(3)), Some((1, Orientation::Forward)));
        assert_eq!(f.find(NodeId(1), NodeId(3)), Some((2, Orientation::Inverse)));
        assert_eq!(f.find(NodeId(1), NodeId(1)), None);
    }

    fn random_instance(seed: u64, n_s: usize, n_t: usize, k: usize) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = |n: usize| {
            (0..n).map(|_| (rng.gen_range(0..10_000) as f64, rng.gen_range(0..10_000) as f64)).collect::<Vec<_>>()
        };
        let s = pts(n_s);
        let t = pts(n_t);
        instance(&s, &t, k)
    }

    #[test]
    fn forward_arc_count_matches_pair_enumeration() {
        for seed in 0..20 {
            let inst = random_instance(seed, 2, 8, 3);
            let g = build_candidate_graph(&inst);
            // brute force: a turbine pair is adjacent if either is among the
            // other's 3 nearest by (distance, id); each turbine-substation
            // pair counts once
            let turbines: Vec<NodeId> = inst.turbine_ids().collect();
            let near = |t: NodeId, u: NodeId| {
                let dtu = distance(inst.point(t), inst.point(u));
                let closer = turbines
                    .iter()
                    .filter(|&&v| v != t && v != u)
                    .filter(|&&v| {
                        let d = distance(inst.point(t), inst.point(v));
                        d < dtu || (d == dtu && v < u)
                    })
                    .count();
                closer < 3
            };
            let mut mutual = 0;
            let mut asymmetric = 0;
            for (i, &t) in turbines.iter().enumerate() {
                for &u in &turbines[i + 1..] {
                    match (near(t, u), near(u, t)) {
                        (true, true) => mutual += 1,
                        (true, false) | (false, true) => asymmetric += 1,
                        _ => {}
                    }
                }
            }
            let to_subs = turbines.len() * inst.n_substations();
            assert_eq!(forward_arcs(&g).len(), mutual + asymmetric + to_subs, "seed {seed}");
        }
    }

    #[test]
    fn structural_invariants() {
        for seed in 0..10 {
            let inst = random_instance(100 + seed, 1 + (seed as usize % 2), 20, 5);
            let g = build_candidate_graph(&inst);
            for a in g.arcs() {
                assert!(!g.is_substation(a.tail));
                let back = g.arc(a.head, a.tail);
                if g.is_substation(a.head) {
                    assert!(back.is_none());
                } else {
                    assert_eq!(back.unwrap().length_km, a.length_km);
                }
                let d = distance(inst.point(a.tail), inst.point(a.head)) / 1000.0;
                assert_eq!(a.length_km, d);
            }
            for t in inst.turbine_ids() {
                let to_turbines = g.out_arcs(t).filter(|a| !g.is_substation(a.head)).count();
                let to_subs = g.out_arcs(t).filter(|a| g.is_substation(a.head)).count();
                assert!(to_turbines >= 5);
                assert_eq!(to_subs, inst.n_substations());
            }
            let f = forward_arcs(&g);
            let fwd: BTreeSet<(NodeId, NodeId)> = f.arcs().iter().map(|a| (a.tail, a.head)).collect();
            let inv: BTreeSet<(NodeId, NodeId)> = f.inverse_arcs().map(|a| (a.tail, a.head)).collect();
            assert!(fwd.is_disjoint(&inv));
            for a in g.arcs() {
                assert!(fwd.contains(&(a.tail, a.head)) || inv.contains(&(a.tail, a.head)));
            }
            // deterministic
            assert_eq!(ids(&g), ids(&build_candidate_graph(&inst)));
        }
    }

    #[test]
    fn default_truncation_gives_fifteen_successors() {
        let inst = random_instance(7, 1, 80, 15);
        let g = build_candidate_graph(&inst);
        let near = nearest_turbines(&inst, 15);
        for (offset, t) in inst.turbine_ids().enumerate() {
            assert_eq!(near[offset].len(), 15);
            for u in &near[offset] {
                assert!(g.arc(t, *u).is_some());
            }
            assert!(g.arc(t, NodeId(1)).is_some());
        }
    }
}
