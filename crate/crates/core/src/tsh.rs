//! Two-steps heuristic: capacitated spanning forest by Esau-Williams, then
//! downstream counting and cheapest-cable sizing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidate_graph::CandidateGraph;
use crate::geometry::{all_crossings, Segment};
use crate::model::{CableCatalog, Instance, NodeId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TshError {
    #[error("no cable can host a single turbine")]
    CapacityInfeasible,
    #[error("edge {upstream}-{downstream} carries {count} turbines, above the largest capacity")]
    CapacityExceeded { upstream: NodeId, downstream: NodeId, count: u32 },
    #[error("edges close a cycle or join two substations at node {0}")]
    NotAForest(NodeId),
    #[error("turbine {0} has no path to a substation")]
    Disconnected(NodeId),
}

/// One cable of a design. After [`assign_cables`] `a` is the upstream
/// (substation-side) endpoint and the sizing columns are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeRow {
    pub a: NodeId,
    pub b: NodeId,
    pub length_km: f64,
    pub downstream: Option<u32>,
    pub cable: Option<usize>,
}

impl EdgeRow {
    pub fn new(a: NodeId, b: NodeId, length_km: f64) -> Self {
        EdgeRow { a, b, length_km, downstream: None, cable: None }
    }

    /// Endpoints in ascending id order.
    pub fn key(&self) -> (NodeId, NodeId) {
        if self.a <= self.b {
            (self.a, self.b)
        } else {
            (self.b, self.a)
        }
    }

    pub fn touches(&self, node: NodeId) -> bool {
        self.a == node || self.b == node
    }
}

/// A design: one row per installed cable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeMatrix {
    pub rows: Vec<EdgeRow>,
}

impl EdgeMatrix {
    pub fn new(rows: Vec<EdgeRow>) -> Self {
        EdgeMatrix { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn segments(&self, instance: &Instance) -> Vec<Segment> {
        self.rows.iter().map(|r| Segment::new(instance.point(r.a), instance.point(r.b), r.a, r.b)).collect()
    }

    pub fn crossings(&self, instance: &Instance) -> Vec<(usize, usize)> {
        all_crossings(&self.segments(instance))
    }

    /// Sum of length times unit cost. Rows without a cable index fall back
    /// to their downstream count; a row with neither makes the result NaN.
    pub fn total_cost(&self, catalog: &CableCatalog) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let cable = r.cable.or_else(|| r.downstream.and_then(|k| catalog.cheapest_cable_for(k)));
                match cable.and_then(|c| catalog.get(c)) {
                    Some(c) => c.unit_cost * r.length_km,
                    None => f64::NAN,
                }
            })
            .sum()
    }

    /// Total cable length in km.
    pub fn total_length(&self) -> f64 {
        self.rows.iter().map(|r| r.length_km).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Gate {
    length_km: f64,
    turbine: NodeId,
    substation: NodeId,
}

impl Gate {
    fn better_than(&self, other: &Gate) -> bool {
        (self.length_km, self.turbine, self.substation) < (other.length_km, other.turbine, other.substation)
    }
}

struct Component {
    size: usize,
    gate: Gate,
}

/// Esau-Williams capacitated spanning forest over the undirected candidate
/// edges. Every turbine starts wired to its nearest substation; the merge
/// with the most negative tradeoff (edge length minus the longer of the two
/// gate lengths) is applied until none is negative. Merged components keep
/// the shorter gate. Returned rows carry no sizing columns yet.
pub fn esau_williams(graph: &CandidateGraph, catalog: &CableCatalog) -> Result<EdgeMatrix, TshError> {
    let q = catalog.max_capacity() as usize;
    if q < 1 {
        return Err(TshError::CapacityInfeasible);
    }
    let n = graph.n_nodes();
    let n_s = graph.n_substations();

    let mut comp_of: Vec<usize> = (0..n).collect();
    let mut components: Vec<Option<Component>> = (0..n)
        .map(|i| {
            let id = NodeId::from_index(i);
            if graph.is_substation(id) {
                return None;
            }
            let gate = graph
                .out_arcs(id)
                .filter(|a| graph.is_substation(a.head))
                .map(|a| Gate { length_km: a.length_km, turbine: id, substation: a.head })
                .reduce(|best, g| if g.better_than(&best) { g } else { best })
                .expect("every turbine has an arc to each substation");
            Some(Component { size: 1, gate })
        })
        .collect();

    let edges: Vec<(NodeId, NodeId, f64)> = graph
        .arcs()
        .iter()
        .filter(|a| !graph.is_substation(a.head) && a.tail < a.head)
        .map(|a| (a.tail, a.head, a.length_km))
        .collect();
    let mut links: Vec<(NodeId, NodeId, f64)> = Vec::new();

    loop {
        let mut best: Option<(f64, f64, NodeId, NodeId)> = None;
        for &(u, v, len) in &edges {
            let (cu, cv) = (comp_of[u.index()], comp_of[v.index()]);
            if cu == cv {
                continue;
            }
            let (a, b) = (components[cu].as_ref().unwrap(), components[cv].as_ref().unwrap());
            if a.size + b.size > q {
                continue;
            }
            let tradeoff = len - a.gate.length_km.max(b.gate.length_km);
            if tradeoff >= 0.0 {
                continue;
            }
            let cand = (tradeoff, len, u, v);
            let wins = match &best {
                None => true,
                Some(b) => cand.0.total_cmp(&b.0).then(cand.1.total_cmp(&b.1)).then((u, v).cmp(&(b.2, b.3))).is_lt(),
            };
            if wins {
                best = Some(cand);
            }
        }
        let Some((_, len, u, v)) = best else { break };

        let (cu, cv) = (comp_of[u.index()], comp_of[v.index()]);
        let absorbed = components[cv].take().unwrap();
        let keep = components[cu].as_mut().unwrap();
        keep.size += absorbed.size;
        if absorbed.gate.better_than(&keep.gate) {
            keep.gate = absorbed.gate;
        }
        for c in comp_of.iter_mut().skip(n_s) {
            if *c == cv {
                *c = cu;
            }
        }
        links.push((u, v, len));
    }

    let mut rows: Vec<EdgeRow> = links.into_iter().map(|(u, v, len)| EdgeRow::new(u, v, len)).collect();
    rows.extend(components.iter().flatten().map(|c| EdgeRow::new(c.gate.substation, c.gate.turbine, c.gate.length_km)));
    rows.sort_by_key(|r| r.key());
    Ok(EdgeMatrix::new(rows))
}

/// Orients every row away from its substation by depth-first search (roots
/// and children in ascending id order), counts the turbines below each row
/// and picks the cheapest cable able to carry them.
pub fn assign_cables(
    tree: &EdgeMatrix,
    graph: &CandidateGraph,
    catalog: &CableCatalog,
) -> Result<EdgeMatrix, TshError> {
    let n = graph.n_nodes();
    let mut adj: Vec<Vec<(NodeId, usize)>> = vec![Vec::new(); n];
    for (i, r) in tree.rows.iter().enumerate() {
        if r.a == r.b {
            return Err(TshError::NotAForest(r.a));
        }
        adj[r.a.index()].push((r.b, i));
        adj[r.b.index()].push((r.a, i));
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    // parent row of each visited node; roots map to usize::MAX
    let mut parent_row: Vec<Option<usize>> = vec![None; n];
    let mut order: Vec<NodeId> = Vec::with_capacity(n);
    for s in 0..graph.n_substations() {
        let root = NodeId::from_index(s);
        if parent_row[s].is_some() {
            return Err(TshError::NotAForest(root));
        }
        parent_row[s] = Some(usize::MAX);
        let mut stack = vec![root];
        while let Some(node) = stack.pop() {
            order.push(node);
            let via = parent_row[node.index()].unwrap();
            // push in reverse so the smallest id is explored first
            for &(next, row) in adj[node.index()].iter().rev() {
                if row == via {
                    continue;
                }
                if parent_row[next.index()].is_some() || graph.is_substation(next) {
                    return Err(TshError::NotAForest(next));
                }
                parent_row[next.index()] = Some(row);
                stack.push(next);
            }
        }
    }
    if let Some(t) = (graph.n_substations()..n).find(|&i| parent_row[i].is_none()) {
        return Err(TshError::Disconnected(NodeId::from_index(t)));
    }

    let q = catalog.max_capacity();
    let mut below = vec![0u32; n];
    let mut rows = tree.rows.clone();
    for &node in order.iter().rev() {
        if graph.is_substation(node) {
            continue;
        }
        let count = below[node.index()] + 1;
        let row = parent_row[node.index()].unwrap();
        let r = &mut rows[row];
        let upstream = if r.a == node { r.b } else { r.a };
        if count > q {
            return Err(TshError::CapacityExceeded { upstream, downstream: node, count });
        }
        below[upstream.index()] += count;
        r.a = upstream;
        r.b = node;
        r.downstream = Some(count);
        r.cable = catalog.cheapest_cable_for(count);
    }
    Ok(EdgeMatrix::new(rows))
}

/// Esau-Williams followed by cable assignment; also reports how many
/// crossing pairs the result contains.
pub fn run_tsh(instance: &Instance, graph: &CandidateGraph) -> Result<(EdgeMatrix, usize), TshError> {
    let topology = esau_williams(graph, instance.catalog())?;
    let tree = assign_cables(&topology, graph, instance.catalog())?;
    let crossings = tree.crossings(instance).len();
    Ok((tree, crossings))
}
