//! Negative cycle cancelling refinement of a feasible design.
//!
//! Flows live on the forward arcs of the candidate graph as signed turbine
//! counts. The residual network is fixed: real nodes, a cluster transfer
//! node joining all substations, and a root with a zero arc to every node.
//! Only the residual costs change with the flow and the surplus `delta`.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::bellman_ford::{negative_closed_walk, negative_cycle, split_walk, CostedArc};
use crate::candidate_graph::{Arc, CandidateGraph, ForwardArcSet, Orientation};
use crate::geometry::{all_crossings, Segment};
use crate::model::{CableCatalog, Instance, NodeId};
use crate::tsh::{EdgeMatrix, EdgeRow};

/// Cycle costs at or above this are not treated as improvements.
const NEGATIVE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NccrhError {
    #[error("cable {0}-{1} is not an edge of the candidate graph")]
    ArcMissing(NodeId, NodeId),
    #[error("cable {0}-{1} has no downstream count")]
    Unsized(NodeId, NodeId),
}

/// Signed flow per forward arc: positive when turbines feed along the arc,
/// negative when they feed against it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowAssignment {
    pub flows: Vec<i32>,
}

impl FlowAssignment {
    pub fn zero(n_arcs: usize) -> Self {
        FlowAssignment { flows: vec![0; n_arcs] }
    }

    /// Net outflow of every real node.
    pub fn net_outflow(&self, arcs: &ForwardArcSet, n_nodes: usize) -> Vec<i64> {
        let mut out = vec![0i64; n_nodes];
        for (a, &f) in arcs.arcs().iter().zip(&self.flows) {
            out[a.tail.index()] += f as i64;
            out[a.head.index()] -= f as i64;
        }
        out
    }

    /// Turbines received by each substation.
    pub fn substation_inflows(&self, arcs: &ForwardArcSet, n_substations: usize) -> Vec<u32> {
        inflows(arcs.arcs(), &self.flows, n_substations)
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.flows.iter().enumerate().filter(|(_, &f)| f != 0).map(|(i, _)| i)
    }

    /// Distinct positive `|λ|` values, ascending.
    pub fn unique_magnitudes(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.flows.iter().filter(|&&f| f != 0).map(|f| f.unsigned_abs()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn cost(&self, arcs: &ForwardArcSet, catalog: &CableCatalog) -> f64 {
        arcs.arcs().iter().zip(&self.flows).map(|(a, &f)| catalog.step_cost(a.length_km, f.unsigned_abs())).sum()
    }

    /// Active arcs as sized rows, upstream endpoint first, sorted by node ids.
    pub fn to_edge_matrix(&self, arcs: &ForwardArcSet, catalog: &CableCatalog) -> EdgeMatrix {
        let mut rows: Vec<EdgeRow> = self
            .active()
            .map(|i| {
                let a = arcs.arcs()[i];
                let k = self.flows[i];
                let (up, down) = if k > 0 { (a.head, a.tail) } else { (a.tail, a.head) };
                EdgeRow {
                    a: up,
                    b: down,
                    length_km: a.length_km,
                    downstream: Some(k.unsigned_abs()),
                    cable: catalog.cheapest_cable_for(k.unsigned_abs()),
                }
            })
            .collect();
        rows.sort_by_key(|r| r.key());
        EdgeMatrix::new(rows)
    }
}

/// Flow of a sized design: each row carries its downstream count from the
/// downstream endpoint toward the upstream one.
pub fn flow_from_tree(tree: &EdgeMatrix, arcs: &ForwardArcSet) -> Result<FlowAssignment, NccrhError> {
    let mut flow = FlowAssignment::zero(arcs.len());
    for r in &tree.rows {
        let k = r.downstream.ok_or(NccrhError::Unsized(r.a, r.b))? as i32;
        match arcs.find(r.b, r.a) {
            Some((i, Orientation::Forward)) => flow.flows[i] = k,
            Some((i, Orientation::Inverse)) => flow.flows[i] = -k,
            None => return Err(NccrhError::ArcMissing(r.a, r.b)),
        }
    }
    Ok(flow)
}

/// Flow seen by every forward arc and by its inverse, which carries the
/// same value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MirroredFlow {
    values: Vec<i32>,
}

impl MirroredFlow {
    pub fn new(flow: &FlowAssignment) -> Self {
        let mut values = flow.flows.clone();
        values.extend_from_slice(&flow.flows);
        MirroredFlow { values }
    }

    pub fn forward(&self, arc: usize) -> i32 {
        self.values[arc]
    }

    pub fn inverse(&self, arc: usize) -> i32 {
        self.values[self.values.len() / 2 + arc]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualKind {
    /// Substation to the transfer node.
    ToTransfer(NodeId),
    /// Transfer node to a substation.
    FromTransfer(NodeId),
    Forward(usize),
    Inverse(usize),
    Root,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidualArc {
    pub tail: usize,
    pub head: usize,
    pub kind: ResidualKind,
}

#[derive(Debug, Clone)]
pub struct ResidualNetwork {
    n_nodes: usize,
    n_substations: usize,
    forward: Vec<Arc>,
    arcs: Vec<ResidualArc>,
    inverse: Vec<Option<usize>>,
}

impl ResidualNetwork {
    pub fn new(forward: &ForwardArcSet, n_nodes: usize, n_substations: usize) -> Self {
        let transfer = n_nodes;
        let root = n_nodes + 1;
        let mut arcs = Vec::new();
        for s in 0..n_substations {
            let id = NodeId::from_index(s);
            arcs.push(ResidualArc { tail: s, head: transfer, kind: ResidualKind::ToTransfer(id) });
            arcs.push(ResidualArc { tail: transfer, head: s, kind: ResidualKind::FromTransfer(id) });
        }
        for (i, a) in forward.arcs().iter().enumerate() {
            arcs.push(ResidualArc { tail: a.tail.index(), head: a.head.index(), kind: ResidualKind::Forward(i) });
            arcs.push(ResidualArc { tail: a.head.index(), head: a.tail.index(), kind: ResidualKind::Inverse(i) });
        }
        for v in 0..=transfer {
            arcs.push(ResidualArc { tail: root, head: v, kind: ResidualKind::Root });
        }
        arcs.sort_by_key(|a| (a.tail, a.head));

        let index: HashMap<(usize, usize), usize> = arcs
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind != ResidualKind::Root)
            .map(|(i, a)| ((a.tail, a.head), i))
            .collect();
        let inverse = arcs
            .iter()
            .map(|a| if a.kind == ResidualKind::Root { None } else { index.get(&(a.head, a.tail)).copied() })
            .collect();
        ResidualNetwork { n_nodes, n_substations, forward: forward.arcs().to_vec(), arcs, inverse }
    }

    pub fn transfer_node(&self) -> usize {
        self.n_nodes
    }

    pub fn root(&self) -> usize {
        self.n_nodes + 1
    }

    pub fn n_vertices(&self) -> usize {
        self.n_nodes + 2
    }

    pub fn arcs(&self) -> &[ResidualArc] {
        &self.arcs
    }

    pub fn inverse_of(&self, arc: usize) -> Option<usize> {
        self.inverse[arc]
    }

    /// Cost of pushing `delta` turbines through one residual arc, given the
    /// mirrored flow and the current inflow of each substation.
    pub fn residual_cost(
        &self,
        arc: usize,
        flow: &MirroredFlow,
        delta: u32,
        catalog: &CableCatalog,
        inflows: &[u32],
    ) -> f64 {
        let q = catalog.max_capacity() as i64;
        let delta = delta as i64;
        let g = |len: f64, k: i64| catalog.step_cost(len, k.unsigned_abs() as u32);
        match self.arcs[arc].kind {
            ResidualKind::ToTransfer(_) | ResidualKind::Root => 0.0,
            ResidualKind::FromTransfer(s) => {
                if delta <= inflows[s.index()] as i64 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ResidualKind::Forward(i) => {
                let (lambda, len) = (flow.forward(i) as i64, self.forward[i].length_km);
                if (lambda + delta).abs() > q {
                    f64::INFINITY
                } else {
                    g(len, lambda + delta) - g(len, lambda)
                }
            }
            ResidualKind::Inverse(i) => {
                let (lambda, len) = (flow.inverse(i) as i64, self.forward[i].length_km);
                let tail_is_substation = self.forward[i].head.index() < self.n_substations;
                if (tail_is_substation && delta > lambda) || (lambda - delta).abs() > q {
                    f64::INFINITY
                } else {
                    g(len, lambda - delta) - g(len, lambda)
                }
            }
        }
    }

    /// Residual costs of every arc, in arc order.
    pub fn costs(&self, flow: &FlowAssignment, delta: u32, catalog: &CableCatalog) -> Vec<CostedArc> {
        let mirror = MirroredFlow::new(flow);
        let inflows = inflows(&self.forward, &flow.flows, self.n_substations);
        (0..self.arcs.len())
            .map(|i| CostedArc {
                tail: self.arcs[i].tail,
                head: self.arcs[i].head,
                cost: self.residual_cost(i, &mirror, delta, catalog, &inflows),
            })
            .collect()
    }
}

fn inflows(arcs: &[Arc], flows: &[i32], n_substations: usize) -> Vec<u32> {
    let mut inflow = vec![0u32; n_substations];
    for (a, &f) in arcs.iter().zip(flows) {
        if a.head.index() < n_substations && f > 0 {
            inflow[a.head.index()] += f as u32;
        }
    }
    inflow
}

/// Closed walk of residual arcs and its total residual cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CostedCycle {
    pub arcs: Vec<usize>,
    pub cost: f64,
}

/// Runs Bellman-Ford from the root and splits the recovered walk into
/// cycles of at least three arcs. With `non_backtracking`, labels sit on
/// arcs and a walk may not turn straight back along the inverse arc.
pub fn find_negative_cycles(net: &ResidualNetwork, costs: &[CostedArc], non_backtracking: bool) -> Vec<CostedCycle> {
    let walk = if non_backtracking {
        negative_closed_walk(net.n_vertices(), costs, net.root(), &net.inverse)
    } else {
        negative_cycle(net.n_vertices(), costs, net.root())
    };
    let Some(walk) = walk else {
        return Vec::new();
    };
    split_walk(&walk, costs, &net.inverse)
        .into_iter()
        .filter(|c| c.len() >= 3)
        .map(|arcs| {
            let cost = arcs.iter().map(|&a| costs[a].cost).sum();
            CostedCycle { arcs, cost }
        })
        .collect()
}

/// Moves `delta` turbines around `cycle`: forward arcs gain it, inverse
/// arcs take it from their forward twin. Transfer and root arcs carry no
/// stored flow.
pub fn push_on_cycle(flow: &FlowAssignment, net: &ResidualNetwork, cycle: &[usize], delta: u32) -> FlowAssignment {
    let mut out = flow.clone();
    for &a in cycle {
        match net.arcs[a].kind {
            ResidualKind::Forward(i) => out.flows[i] += delta as i32,
            ResidualKind::Inverse(i) => out.flows[i] -= delta as i32,
            _ => {}
        }
    }
    out
}

/// Active arcs form a spanning forest with one substation per tree and no
/// two of them cross.
fn satisfies_c1_c3(flow: &FlowAssignment, arcs: &ForwardArcSet, instance: &Instance) -> bool {
    let n = instance.n_nodes();
    let n_s = instance.n_substations();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut has_sub: Vec<bool> = (0..n).map(|i| i < n_s).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut count = 0;
    let mut segments = Vec::new();
    for i in flow.active() {
        let a = arcs.arcs()[i];
        let (ra, rb) = (find(&mut parent, a.tail.index()), find(&mut parent, a.head.index()));
        if ra == rb || (has_sub[ra] && has_sub[rb]) {
            return false;
        }
        parent[ra] = rb;
        has_sub[rb] |= has_sub[ra];
        count += 1;
        segments.push(Segment::new(instance.point(a.tail), instance.point(a.head), a.tail, a.head));
    }
    count == instance.n_turbines() && all_crossings(&segments).is_empty()
}

/// One committed improvement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Commit {
    pub delta: u32,
    pub cycle_arcs: usize,
    pub cycle_cost: f64,
    pub cost_before: f64,
    pub cost_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub flow: FlowAssignment,
    pub tree: EdgeMatrix,
    pub iterations: usize,
    pub commits: Vec<Commit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefineOptions {
    /// Forbid immediate arc/inverse backtracking inside Bellman-Ford.
    pub non_backtracking: bool,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { non_backtracking: true }
    }
}

pub fn refine(flow: &FlowAssignment, instance: &Instance, graph: &CandidateGraph) -> RefineOutcome {
    refine_with(flow, instance, graph, RefineOptions::default())
}

/// Surplus values are the distinct flow magnitudes, tried in ascending
/// order. For each one the residual costs are rebuilt, one walk is
/// extracted and its negative cycles are pushed on a trial flow in turn.
/// The first trial whose active arcs still form a crossing-free spanning
/// forest is committed and the surplus list restarts from the new flow.
pub fn refine_with(
    flow: &FlowAssignment,
    instance: &Instance,
    graph: &CandidateGraph,
    options: RefineOptions,
) -> RefineOutcome {
    let catalog = instance.catalog();
    let arcs = crate::candidate_graph::forward_arcs(graph);
    let net = ResidualNetwork::new(&arcs, instance.n_nodes(), instance.n_substations());

    let mut flow = flow.clone();
    let mut deltas = flow.unique_magnitudes();
    let mut commits = Vec::new();
    let mut counter = 0;
    while counter < deltas.len() {
        let delta = deltas[counter];
        let costs = net.costs(&flow, delta, catalog);
        let cycles = find_negative_cycles(&net, &costs, options.non_backtracking);
        let mut improved = false;
        for cycle in cycles.iter().filter(|c| c.cost < -NEGATIVE_EPS) {
            let trial = push_on_cycle(&flow, &net, &cycle.arcs, delta);
            if !satisfies_c1_c3(&trial, &arcs, instance) {
                continue;
            }
            debug_assert!(trial.flows.iter().all(|f| f.unsigned_abs() <= catalog.max_capacity()));
            let cost_before = flow.cost(&arcs, catalog);
            let cost_after = trial.cost(&arcs, catalog);
            log::debug!("delta {delta}: {}-arc cycle, cost {cost_before:.6} -> {cost_after:.6}", cycle.arcs.len());
            commits.push(Commit {
                delta,
                cycle_arcs: cycle.arcs.len(),
                cycle_cost: cycle.cost,
                cost_before,
                cost_after,
            });
            flow = trial;
            deltas = flow.unique_magnitudes();
            improved = true;
            break;
        }
        counter = if improved { 0 } else { counter + 1 };
    }
    let tree = flow.to_edge_matrix(&arcs, catalog);
    RefineOutcome { flow, tree, iterations: commits.len(), commits }
}
