//! Cable crossings repair: swap crossing cables for non-crossing candidate
//! edges one at a time, keeping the design a capacity-feasible forest.

use std::collections::HashSet;

use serde::Serialize;

use crate::candidate_graph::CandidateGraph;
use crate::geometry::{segments_cross, Segment};
use crate::model::{Instance, NodeId};
use crate::tsh::{assign_cables, EdgeMatrix, EdgeRow};

/// One row per crossed cable: the cable itself and every cable crossing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossingRow {
    pub edge: usize,
    pub crossers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CrossingList {
    pub rows: Vec<CrossingRow>,
}

impl CrossingList {
    /// Rows sorted by number of crossers, non-increasing; ties by edge index.
    pub fn build(tree: &EdgeMatrix, instance: &Instance) -> Self {
        let mut crossers = vec![Vec::new(); tree.len()];
        for (i, j) in tree.crossings(instance) {
            crossers[i].push(j);
            crossers[j].push(i);
        }
        let mut rows: Vec<CrossingRow> = crossers
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_empty())
            .map(|(edge, mut crossers)| {
                crossers.sort_unstable();
                CrossingRow { edge, crossers }
            })
            .collect();
        rows.sort_by(|a, b| b.crossers.len().cmp(&a.crossers.len()).then(a.edge.cmp(&b.edge)));
        CrossingList { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Edges of a row in the order they are tried for elimination: the row's
    /// own edge, then its crossers by descending crossing count (ties by index).
    pub fn elimination_order(&self, row: usize) -> Vec<usize> {
        let multiplicity = |e: usize| self.rows.iter().find(|r| r.edge == e).map_or(0, |r| r.crossers.len());
        let r = &self.rows[row];
        let mut rest = r.crossers.clone();
        rest.sort_by(|&a, &b| multiplicity(b).cmp(&multiplicity(a)).then(a.cmp(&b)));
        std::iter::once(r.edge).chain(rest).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Swap {
    pub removed: (NodeId, NodeId),
    pub added: (NodeId, NodeId),
    pub crossings_before: usize,
    pub crossings_after: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairOutcome {
    pub tree: EdgeMatrix,
    pub infeasible: bool,
    pub swaps: Vec<Swap>,
}

/// Nodes with no path to a substation over the rows of `pruned`.
pub fn orphaned_nodes(pruned: &EdgeMatrix, graph: &CandidateGraph) -> HashSet<NodeId> {
    let n = graph.n_nodes();
    let mut adj = vec![Vec::new(); n];
    for r in &pruned.rows {
        adj[r.a.index()].push(r.b);
        adj[r.b.index()].push(r.a);
    }
    let mut reached = vec![false; n];
    let mut stack: Vec<NodeId> = (0..graph.n_substations()).map(NodeId::from_index).collect();
    for s in &stack {
        reached[s.index()] = true;
    }
    while let Some(u) = stack.pop() {
        for &v in &adj[u.index()] {
            if !reached[v.index()] {
                reached[v.index()] = true;
                stack.push(v);
            }
        }
    }
    (0..n).filter(|&i| !reached[i]).map(NodeId::from_index).collect()
}

/// Candidate-graph edges with exactly one endpoint among `orphans` that
/// cross no edge of `pruned`, shortest first (ties by node ids). Edges are
/// returned with the orphan endpoint second.
pub fn candidate_edges_for(orphans: &HashSet<NodeId>, pruned: &EdgeMatrix, graph: &CandidateGraph) -> Vec<EdgeRow> {
    let existing: Vec<Segment> = pruned.rows.iter().map(|r| graph.segment(r.a, r.b)).collect();
    let mut seen = HashSet::new();
    let mut out: Vec<EdgeRow> = Vec::new();
    for arc in graph.arcs() {
        let (tail_in, head_in) = (orphans.contains(&arc.tail), orphans.contains(&arc.head));
        if tail_in == head_in {
            continue;
        }
        let (outside, inside) = if tail_in { (arc.head, arc.tail) } else { (arc.tail, arc.head) };
        if !seen.insert((outside, inside)) {
            continue;
        }
        let seg = graph.segment(outside, inside);
        if existing.iter().any(|s| segments_cross(s, &seg)) {
            continue;
        }
        out.push(EdgeRow::new(outside, inside, arc.length_km));
    }
    out.sort_by(|x, y| x.length_km.total_cmp(&y.length_km).then(x.key().cmp(&y.key())));
    out
}

fn crossing_count(tree: &EdgeMatrix, instance: &Instance) -> usize {
    tree.crossings(instance).len()
}

/// Repairs crossings in a sized forest. The outer counters walk the rows of
/// the crossing list and the edges within a row; the inner counter walks the
/// candidates reconnecting the orphaned subtree. A trial is kept as soon as
/// it passes cable assignment, after which all counters restart on a freshly
/// built crossing list. Each commit strictly lowers the crossing count.
pub fn repair_crossings(tree: &EdgeMatrix, instance: &Instance, graph: &CandidateGraph) -> RepairOutcome {
    let catalog = instance.catalog();
    let mut t = tree.clone();
    let mut swaps = Vec::new();
    let (mut counter1, mut counter2) = (0usize, 0usize);
    let mut crossings = CrossingList::default();
    let mut edges: Vec<usize> = Vec::new();

    let infeasible = loop {
        if counter1 == 0 && counter2 == 0 {
            crossings = CrossingList::build(&t, instance);
            if crossings.is_empty() {
                break false;
            }
        }
        if counter2 == crossings.len() {
            break true;
        }
        if counter1 == 0 {
            edges = crossings.elimination_order(counter2);
        }
        let eliminate = edges[counter1];

        let mut pruned = t.clone();
        let removed = pruned.rows.remove(eliminate);
        let orphans = orphaned_nodes(&pruned, graph);
        let candidates = candidate_edges_for(&orphans, &pruned, graph);

        let mut committed = false;
        for cand in &candidates {
            let mut trial = pruned.clone();
            trial.rows.insert(eliminate, *cand);
            if let Ok(sized) = assign_cables(&trial, graph, catalog) {
                let before = crossing_count(&t, instance);
                t = sized;
                let after = crossing_count(&t, instance);
                log::debug!(
                    "swap {}-{} for {}-{}: {before} -> {after} crossings",
                    removed.a,
                    removed.b,
                    cand.a,
                    cand.b
                );
                swaps.push(Swap {
                    removed: removed.key(),
                    added: cand.key(),
                    crossings_before: before,
                    crossings_after: after,
                });
                committed = true;
                break;
            }
        }
        if committed {
            counter1 = 0;
            counter2 = 0;
        } else {
            counter1 += 1;
            if counter1 == edges.len() {
                counter2 += 1;
                counter1 = 0;
            }
        }
    };
    RepairOutcome { tree: t, infeasible, swaps }
}
