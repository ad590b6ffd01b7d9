//! Exact references for small inputs: exhaustive search for the optimal
//! design, and classic negative-cycle cancelling on linear-cost flow
//! networks. Both exist to validate the heuristics.

use std::collections::HashMap;

use thiserror::Error;

use crate::bellman_ford::{negative_cycle, CostedArc};
use crate::candidate_graph::build_candidate_graph;
use crate::geometry::segments_cross;
use crate::model::{Instance, NodeId};
use crate::tsh::{assign_cables, EdgeMatrix, EdgeRow};

pub const MAX_EXACT_TURBINES: usize = 9;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("{0} turbines exceed the exhaustive search bound of {MAX_EXACT_TURBINES}")]
    TooLarge(usize),
    #[error("no feasible design exists on the candidate graph")]
    NoFeasibleDesign,
    #[error("initial flow is infeasible: {0}")]
    InfeasibleInitial(String),
    #[error("no convergence within {0} cancellations")]
    IterationCap(usize),
}

struct Search<'a> {
    instance: &'a Instance,
    /// Parent options per turbine: (parent, undirected edge id, length).
    options: Vec<Vec<(NodeId, usize, f64)>>,
    crosses: Vec<Vec<bool>>,
    min_unit: Vec<f64>,
    crossing_free: bool,
    parent: Vec<Option<(NodeId, usize)>>,
    best: Option<(f64, Vec<(NodeId, NodeId)>)>,
}

impl Search<'_> {
    fn n_s(&self) -> usize {
        self.instance.n_substations()
    }

    fn creates_cycle(&self, t: usize, p: NodeId) -> bool {
        let mut v = p;
        while v.index() >= self.n_s() {
            let tv = v.index() - self.n_s();
            if tv == t {
                return true;
            }
            match self.parent[tv] {
                Some((next, _)) => v = next,
                None => return false,
            }
        }
        false
    }

    fn leaf(&mut self) {
        let n_s = self.n_s();
        let n_t = self.parent.len();
        let q = self.instance.catalog().max_capacity();
        let mut count = vec![0u32; n_t];
        for t in 0..n_t {
            let mut v = t;
            loop {
                count[v] += 1;
                let (p, _) = self.parent[v].expect("leaf has every parent");
                if p.index() < n_s {
                    break;
                }
                v = p.index() - n_s;
            }
        }
        if count.iter().any(|&k| k > q) {
            return;
        }
        let catalog = self.instance.catalog();
        let mut cost = 0.0;
        let mut keys = Vec::with_capacity(n_t);
        for (t, &k) in count.iter().enumerate() {
            let (p, _) = self.parent[t].unwrap();
            let id = NodeId::from_index(n_s + t);
            cost += catalog.step_cost(self.instance.length_km(p, id), k);
            keys.push((p.min(id), p.max(id)));
        }
        keys.sort_unstable();
        let better = match &self.best {
            None => true,
            Some((b, bk)) => {
                let eps = 1e-9 * b.abs().max(1.0);
                cost < b - eps || (cost <= b + eps && keys < *bk)
            }
        };
        if better {
            self.best = Some((cost, keys));
        }
    }

    fn descend(&mut self, t: usize, partial: f64) {
        if t == self.parent.len() {
            self.leaf();
            return;
        }
        let rest: f64 = self.min_unit[t..].iter().sum();
        if let Some((b, _)) = &self.best {
            if partial + rest > b + 1e-9 * b.abs().max(1.0) {
                return;
            }
        }
        for o in 0..self.options[t].len() {
            let (p, e, len) = self.options[t][o];
            if self.creates_cycle(t, p) {
                continue;
            }
            if self.crossing_free && self.parent[..t].iter().flatten().any(|&(_, f)| self.crosses[e][f]) {
                continue;
            }
            self.parent[t] = Some((p, e));
            let unit = self.instance.catalog().step_cost(len, 1);
            self.descend(t + 1, partial + unit);
            self.parent[t] = None;
        }
    }
}

fn exhaustive(instance: &Instance, crossing_free: bool) -> Result<(f64, EdgeMatrix), OracleError> {
    let n_t = instance.n_turbines();
    if n_t > MAX_EXACT_TURBINES {
        return Err(OracleError::TooLarge(n_t));
    }
    let graph = build_candidate_graph(instance);
    let mut edge_ids: HashMap<(NodeId, NodeId), usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut options = Vec::with_capacity(n_t);
    for t in instance.turbine_ids() {
        let mut opts: Vec<(NodeId, usize, f64)> = graph
            .out_arcs(t)
            .map(|a| {
                let key = (a.tail.min(a.head), a.tail.max(a.head));
                let next = edge_ids.len();
                let e = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(key);
                    next
                });
                (a.head, e, a.length_km)
            })
            .collect();
        opts.sort_by(|x, y| x.2.total_cmp(&y.2).then(x.0.cmp(&y.0)));
        options.push(opts);
    }
    let crosses: Vec<Vec<bool>> = edges
        .iter()
        .map(|&(a, b)| {
            let s = graph.segment(a, b);
            edges.iter().map(|&(c, d)| segments_cross(&s, &graph.segment(c, d))).collect()
        })
        .collect();
    let catalog = instance.catalog();
    let min_unit = options
        .iter()
        .map(|o| o.iter().map(|&(_, _, len)| catalog.step_cost(len, 1)).fold(f64::INFINITY, f64::min))
        .collect();

    let mut search =
        Search { instance, options, crosses, min_unit, crossing_free, parent: vec![None; n_t], best: None };
    search.descend(0, 0.0);
    let (_, keys) = search.best.ok_or(OracleError::NoFeasibleDesign)?;

    let rows = keys.iter().map(|&(a, b)| EdgeRow::new(a, b, instance.length_km(a, b))).collect();
    let tree = assign_cables(&EdgeMatrix::new(rows), &graph, catalog).map_err(|_| OracleError::NoFeasibleDesign)?;
    Ok((tree.total_cost(catalog), tree))
}

/// Cheapest crossing-free capacitated forest over the candidate graph.
/// Equal-cost designs are resolved by the lexicographically smallest sorted
/// edge list.
pub fn exact_design(instance: &Instance) -> Result<(f64, EdgeMatrix), OracleError> {
    exhaustive(instance, true)
}

/// Same search with crossings allowed.
pub fn exact_design_ignoring_crossings(instance: &Instance) -> Result<(f64, EdgeMatrix), OracleError> {
    exhaustive(instance, false)
}

/// Original arc index, direction (+1 forward, -1 inverse) and residual
/// capacity of a residual arc; `None` for root arcs.
pub type ResidualTag = Option<(usize, i8, u32)>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McfArc {
    pub tail: usize,
    pub head: usize,
    pub capacity: u32,
    /// Cost per unit of flow.
    pub cost: f64,
}

/// Linear-cost network; `demands[i]` is inflow minus outflow at node `i`,
/// negative at sources.
#[derive(Debug, Clone, PartialEq)]
pub struct McfProblem {
    pub demands: Vec<i64>,
    pub arcs: Vec<McfArc>,
}

impl McfProblem {
    pub fn n_nodes(&self) -> usize {
        self.demands.len()
    }

    pub fn cost(&self, flow: &[u32]) -> f64 {
        self.arcs.iter().zip(flow).map(|(a, &f)| a.cost * f as f64).sum()
    }

    pub fn check(&self, flow: &[u32]) -> Result<(), String> {
        if flow.len() != self.arcs.len() {
            return Err(format!("{} flows for {} arcs", flow.len(), self.arcs.len()));
        }
        let mut net = vec![0i64; self.n_nodes()];
        for (i, (a, &f)) in self.arcs.iter().zip(flow).enumerate() {
            if f > a.capacity {
                return Err(format!("arc {i} carries {f} above capacity {}", a.capacity));
            }
            net[a.head] += f as i64;
            net[a.tail] -= f as i64;
        }
        match (0..self.n_nodes()).find(|&i| net[i] != self.demands[i]) {
            Some(i) => Err(format!("node {i} balance {} differs from demand {}", net[i], self.demands[i])),
            None => Ok(()),
        }
    }

    /// Residual arcs for `flow` with their tags. The fictitious root is node
    /// `n_nodes()` and reaches every node at zero cost.
    pub fn residual(&self, flow: &[u32]) -> (Vec<CostedArc>, Vec<ResidualTag>) {
        let mut arcs = Vec::new();
        let mut tags = Vec::new();
        for (i, (a, &f)) in self.arcs.iter().zip(flow).enumerate() {
            if f < a.capacity {
                arcs.push(CostedArc { tail: a.tail, head: a.head, cost: a.cost });
                tags.push(Some((i, 1, a.capacity - f)));
            }
            if f > 0 {
                arcs.push(CostedArc { tail: a.head, head: a.tail, cost: -a.cost });
                tags.push(Some((i, -1, f)));
            }
        }
        let root = self.n_nodes();
        for j in 0..root {
            arcs.push(CostedArc { tail: root, head: j, cost: 0.0 });
            tags.push(None);
        }
        (arcs, tags)
    }

    pub fn has_negative_cycle(&self, flow: &[u32]) -> bool {
        let (arcs, _) = self.residual(flow);
        negative_cycle(self.n_nodes() + 1, &arcs, self.n_nodes()).is_some()
    }
}

/// Cancels negative cycles of the residual graph, pushing the smallest
/// residual capacity around each, until none remain. Returns the optimal
/// flow and the number of cancellations.
pub fn classic_ncc(problem: &McfProblem, initial: &[u32]) -> Result<(Vec<u32>, usize), OracleError> {
    problem.check(initial).map_err(OracleError::InfeasibleInitial)?;
    let max_cost = problem.arcs.iter().map(|a| a.cost.abs().ceil() as usize).max().unwrap_or(0).max(1);
    let max_cap = problem.arcs.iter().map(|a| a.capacity as usize).max().unwrap_or(0).max(1);
    let cap = problem.arcs.len().max(1) * max_cost * max_cap;

    let mut flow = initial.to_vec();
    let root = problem.n_nodes();
    for iteration in 0..=cap {
        let (arcs, tags) = problem.residual(&flow);
        let Some(cycle) = negative_cycle(root + 1, &arcs, root) else {
            return Ok((flow, iteration));
        };
        if iteration == cap {
            break;
        }
        let delta = cycle.iter().map(|&c| tags[c].expect("root arcs are never on a cycle").2).min().unwrap();
        for &c in &cycle {
            let (a, dir, _) = tags[c].unwrap();
            if dir > 0 {
                flow[a] += delta;
            } else {
                flow[a] -= delta;
            }
        }
    }
    Err(OracleError::IterationCap(cap))
}
