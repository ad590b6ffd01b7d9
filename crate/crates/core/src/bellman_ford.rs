//! Bellman-Ford negative cycle detection and closed-walk splitting.

/// Relaxations must improve a label by more than this to count.
const RELAX_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostedArc {
    pub tail: usize,
    pub head: usize,
    /// `f64::INFINITY` marks an arc that is never relaxed.
    pub cost: f64,
}

/// Runs Bellman-Ford from `root`, relaxing arcs in slice order. If a label
/// still improves in pass `n_nodes`, the predecessor graph holds a negative
/// cycle; it is returned as arc indices in traversal order.
pub fn negative_cycle(n_nodes: usize, arcs: &[CostedArc], root: usize) -> Option<Vec<usize>> {
    let mut dist = vec![f64::INFINITY; n_nodes];
    let mut pred: Vec<Option<usize>> = vec![None; n_nodes];
    dist[root] = 0.0;

    let mut last_relaxed = None;
    for _ in 0..n_nodes {
        last_relaxed = None;
        for (i, a) in arcs.iter().enumerate() {
            if !a.cost.is_finite() || !dist[a.tail].is_finite() {
                continue;
            }
            let cand = dist[a.tail] + a.cost;
            if cand < dist[a.head] - RELAX_EPS {
                dist[a.head] = cand;
                pred[a.head] = Some(i);
                last_relaxed = Some(a.head);
            }
        }
        last_relaxed?;
    }

    // step back far enough to land on the cycle
    let mut node = last_relaxed?;
    for _ in 0..n_nodes {
        node = arcs[pred[node]?].tail;
    }
    let start = node;
    let mut cycle = Vec::new();
    loop {
        let arc = pred[node]?;
        cycle.push(arc);
        node = arcs[arc].tail;
        if node == start {
            break;
        }
        if cycle.len() > n_nodes {
            return None;
        }
    }
    cycle.reverse();
    Some(cycle)
}

/// Bellman-Ford over arc labels: a walk may continue from arc `e` along any
/// finite arc leaving its head except `inverse[e]`. Labels start on the arcs
/// leaving `root`. After every pass the predecessor links are searched for
/// a loop, which is a negative closed walk without immediate reversals;
/// nodes may repeat along it.
pub fn negative_closed_walk(
    n_nodes: usize,
    arcs: &[CostedArc],
    root: usize,
    inverse: &[Option<usize>],
) -> Option<Vec<usize>> {
    let m = arcs.len();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for (i, a) in arcs.iter().enumerate() {
        if a.cost.is_finite() {
            out[a.tail].push(i);
        }
    }
    let mut dist = vec![f64::INFINITY; m];
    let mut pred: Vec<Option<usize>> = vec![None; m];
    let mut changed = vec![false; m];
    for &e in &out[root] {
        dist[e] = arcs[e].cost;
        changed[e] = true;
    }

    for _ in 0..m {
        let mut any = false;
        for e in 0..m {
            if !changed[e] {
                continue;
            }
            changed[e] = false;
            for &f in &out[arcs[e].head] {
                if inverse[e] == Some(f) {
                    continue;
                }
                let cand = dist[e] + arcs[f].cost;
                if cand < dist[f] - RELAX_EPS {
                    dist[f] = cand;
                    pred[f] = Some(e);
                    changed[f] = true;
                    any = true;
                }
            }
        }
        if !any {
            return None;
        }
        if let Some(walk) = predecessor_loop(&pred) {
            return Some(walk);
        }
    }
    None
}

/// First loop among predecessor links, in traversal order.
fn predecessor_loop(pred: &[Option<usize>]) -> Option<Vec<usize>> {
    const NEW: usize = usize::MAX;
    let mut mark = vec![NEW; pred.len()];
    for start in 0..pred.len() {
        let mut x = start;
        while mark[x] == NEW {
            mark[x] = start;
            match pred[x] {
                Some(p) => x = p,
                None => break,
            }
        }
        if mark[x] == start && pred[x].is_some() {
            // x lies on a loop reached during this sweep
            let mut walk = vec![x];
            let mut y = pred[x].unwrap();
            while y != x {
                walk.push(y);
                y = pred[y].unwrap();
            }
            walk.reverse();
            return Some(walk);
        }
    }
    None
}

/// Breaks a closed walk into simple cycles. An arc immediately followed by
/// its inverse cancels out; every time the walk returns to a node on the
/// current path, the loop closed there becomes a cycle. Cycles are ordered
/// by the walk position of their first arc.
pub fn split_walk(walk: &[usize], arcs: &[CostedArc], inverse: &[Option<usize>]) -> Vec<Vec<usize>> {
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut cycles: Vec<(usize, Vec<usize>)> = Vec::new();
    for (pos, &arc) in walk.iter().enumerate() {
        if let Some(&(_, top)) = stack.last() {
            if inverse[top] == Some(arc) {
                stack.pop();
                continue;
            }
        }
        stack.push((pos, arc));
        let head = arcs[arc].head;
        if let Some(p) = stack.iter().position(|&(_, a)| arcs[a].tail == head) {
            let closed: Vec<(usize, usize)> = stack.drain(p..).collect();
            cycles.push((closed[0].0, closed.into_iter().map(|(_, a)| a).collect()));
        }
    }
    cycles.sort_by_key(|c| c.0);
    cycles.into_iter().map(|c| c.1).collect()
}

pub fn cycle_cost(cycle: &[usize], arcs: &[CostedArc]) -> f64 {
    cycle.iter().map(|&a| arcs[a].cost).sum()
}
