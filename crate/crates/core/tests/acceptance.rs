//! Acceptance gate. Prints one line per criterion and exits non-zero if any
//! criterion that can run fails.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cablenet::candidate_graph::build_candidate_graph;
use cablenet::checker::check_design;
use cablenet::generate::{benchmark_catalog, generate_random_instance, GeneratorConfig, BENCHMARK_CATALOGS};
use cablenet::geometry::{segments_cross, Segment};
use cablenet::milp_export::{build_milp, build_warm_start, evaluate_assignment};
use cablenet::oracle::{classic_ncc, exact_design, McfArc, McfProblem};
use cablenet::pipeline::{run_pipeline, PipelineOptions, PipelineResult, Stage, Status};
use cablenet::tsh::assign_cables;
use cablenet::{CandidateGraph, EdgeMatrix, EdgeRow, Instance, NodeId, Point};

/// Share of the tiny instances on which refinement must reach the exact
/// optimum. Measured against the oracle at 50/50 and frozen; the calibration
/// target is 30%.
const OPTIMUM_RATE_FLOOR: f64 = 1.0;

enum Verdict {
    Pass(String),
    Fail(String),
    NotRun(String),
}

fn report(n: u32, title: &str, v: &Verdict) -> bool {
    match v {
        Verdict::Pass(d) => {
            println!("criterion {n} ({title}): PASS  {d}");
            true
        }
        Verdict::Fail(d) => {
            println!("criterion {n} ({title}): FAIL  {d}");
            false
        }
        Verdict::NotRun(d) => {
            println!("criterion {n} ({title}): NOT RUN  {d}");
            true
        }
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}

struct Run {
    instance: Instance,
    result: PipelineResult,
    seconds: f64,
}

/// 200 seeded instances over turbine counts, substation counts and the
/// benchmark cable sets.
fn feasibility_runs() -> Vec<Run> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut runs = Vec::new();
    for i in 0..200u64 {
        let n_t = [20, 40, 60, 80][(i % 4) as usize];
        let n_s = 1 + (i / 4 % 2) as usize;
        let catalog = rng.gen_range(0..BENCHMARK_CATALOGS.len());
        let instance = generate_random_instance(1000 + i, &GeneratorConfig::new(n_t, n_s, benchmark_catalog(catalog)))
            .expect("default area fits 80 turbines");
        let started = Instant::now();
        let result = run_pipeline(&instance, PipelineOptions::default()).expect("pipeline runs");
        runs.push(Run { instance, result, seconds: started.elapsed().as_secs_f64() });
    }
    runs
}

fn criterion_1(runs: &[Run]) -> Verdict {
    let mut ok = 0;
    let mut bad = Vec::new();
    let mut slowest: f64 = 0.0;
    for (i, r) in runs.iter().enumerate() {
        slowest = slowest.max(r.seconds);
        if r.result.status == Status::Feasible {
            ok += 1;
            let check = check_design(r.result.final_design(), &r.instance);
            if !check.feasible() {
                bad.push(format!("run {i}: {:?}", check.issues));
            }
        }
    }
    let rate = ok as f64 / runs.len() as f64;
    let detail = format!("{ok}/{} feasible ({:.1}%), slowest {slowest:.2}s", runs.len(), 100.0 * rate);
    if bad.is_empty() && rate >= 0.95 && slowest < 120.0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; checker failures {bad:?}"))
    }
}

fn criterion_2(runs: &[Run]) -> Verdict {
    let mut refined = 0;
    let mut commits = 0;
    let mut failures = Vec::new();
    for (i, r) in runs.iter().enumerate() {
        let Some(after) = r.result.stage(Stage::Nccrh) else { continue };
        refined += 1;
        let before = r.result.stages.iter().rev().find(|s| s.stage != Stage::Nccrh).unwrap();
        if after.cost > before.cost + 1e-9 * before.cost {
            failures.push(format!("run {i}: {} -> {}", before.cost, after.cost));
        }
        let mut expected_start = before.cost;
        for c in &r.result.commits {
            commits += 1;
            if c.cost_after >= c.cost_before || c.cost_after.is_nan() {
                failures.push(format!("run {i}: commit {} -> {}", c.cost_before, c.cost_after));
            }
            if !rel_close(c.cost_after - c.cost_before, c.cycle_cost, 1e-6) {
                failures.push(format!("run {i}: change {} vs cycle {}", c.cost_after - c.cost_before, c.cycle_cost));
            }
            if !rel_close(c.cost_before, expected_start, 1e-9) {
                failures.push(format!("run {i}: commit starts at {} not {}", c.cost_before, expected_start));
            }
            expected_start = c.cost_after;
        }
        if !rel_close(expected_start, after.cost, 1e-9) {
            failures.push(format!("run {i}: last commit {expected_start} vs reported {}", after.cost));
        }
    }
    let detail = format!("{refined} refined runs, {commits} commits");
    if failures.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; {failures:?}"))
    }
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut optimal = 0;
    let mut constructed_optimal = 0;
    let mut failures = Vec::new();
    let total = 50;
    for i in 0..total {
        let n_t = rng.gen_range(2..=7);
        let n_s = rng.gen_range(1..=2);
        let mut cfg = GeneratorConfig::new(n_t, n_s, benchmark_catalog(rng.gen_range(0..BENCHMARK_CATALOGS.len())));
        cfg.area = (4000.0, 4000.0);
        cfg.min_separation = 400.0;
        let inst = generate_random_instance(5000 + i as u64, &cfg).unwrap();
        let (best, tree) = exact_design(&inst).expect("tiny instance has a design");
        if !check_design(&tree, &inst).feasible() {
            failures.push(format!("instance {i}: oracle design infeasible"));
        }
        let r = run_pipeline(&inst, PipelineOptions::default()).unwrap();
        for s in r.stages.iter().filter(|s| s.feasible) {
            if s.cost < best - 1e-9 * best {
                failures.push(format!("instance {i}: {} {} below oracle {}", s.stage, s.cost, best));
            }
        }
        if r.stages[0].feasible && rel_close(r.stages[0].cost, best, 1e-9) {
            constructed_optimal += 1;
        }
        if let Some(s) = r.stage(Stage::Nccrh).filter(|s| s.feasible) {
            if rel_close(s.cost, best, 1e-9) {
                optimal += 1;
            }
        }
    }
    let rate = optimal as f64 / total as f64;
    let detail = format!(
        "refinement optimal on {optimal}/{total} ({:.0}%, floor {:.0}%), construction alone on {constructed_optimal}",
        100.0 * rate,
        100.0 * OPTIMUM_RATE_FLOOR
    );
    if failures.is_empty() && rate >= OPTIMUM_RATE_FLOOR {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; {failures:?}"))
    }
}

fn brute_force_mcf(p: &McfProblem) -> f64 {
    let mut flow = vec![0u32; p.arcs.len()];
    let mut best = f64::INFINITY;
    'outer: loop {
        if p.check(&flow).is_ok() {
            best = best.min(p.cost(&flow));
        }
        for (f, a) in flow.iter_mut().zip(&p.arcs) {
            if *f < a.capacity {
                *f += 1;
                continue 'outer;
            }
            *f = 0;
        }
        return best;
    }
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut failures = Vec::new();
    let mut cancellations = 0;
    for i in 0..100 {
        let n = rng.gen_range(2..=6);
        let m = rng.gen_range(1..=7);
        let arcs: Vec<McfArc> = (0..m)
            .map(|_| {
                let tail = rng.gen_range(0..n);
                let head = (tail + rng.gen_range(1..n)) % n;
                McfArc { tail, head, capacity: rng.gen_range(0..=4), cost: rng.gen_range(-3..10) as f64 }
            })
            .collect();
        let initial: Vec<u32> = arcs.iter().map(|a| rng.gen_range(0..=a.capacity)).collect();
        let mut demands = vec![0i64; n];
        for (a, &f) in arcs.iter().zip(&initial) {
            demands[a.head] += f as i64;
            demands[a.tail] -= f as i64;
        }
        let p = McfProblem { demands, arcs };
        match classic_ncc(&p, &initial) {
            Ok((flow, it)) => {
                cancellations += it;
                let exact = brute_force_mcf(&p);
                if p.check(&flow).is_err() || p.cost(&flow) != exact {
                    failures.push(format!("network {i}: {} vs {exact}", p.cost(&flow)));
                }
            }
            Err(e) => failures.push(format!("network {i}: {e}")),
        }
    }
    let detail = format!("100 networks, {cancellations} cancellations");
    if failures.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; {failures:?}"))
    }
}

/// Capacity-feasible forest grown by attaching turbines in random order to a
/// random connected candidate neighbour; crossings are allowed.
fn random_tree(rng: &mut ChaCha8Rng, inst: &Instance, g: &CandidateGraph) -> Option<EdgeMatrix> {
    let q = inst.catalog().max_capacity();
    let mut order: Vec<NodeId> = inst.turbine_ids().collect();
    order.shuffle(rng);
    let mut parent: HashMap<NodeId, NodeId> = HashMap::new();
    let mut load: HashMap<NodeId, u32> = HashMap::new();
    let path_up = |parent: &HashMap<NodeId, NodeId>, mut v: NodeId| {
        let mut path = vec![v];
        while let Some(&p) = parent.get(&v) {
            v = p;
            path.push(v);
        }
        path
    };
    for &t in &order {
        let mut options: Vec<NodeId> = g
            .out_arcs(t)
            .map(|a| a.head)
            .filter(|&h| g.is_substation(h) || parent.contains_key(&h))
            .filter(|&h| path_up(&parent, h).iter().all(|v| g.is_substation(*v) || load[v] < q))
            .collect();
        options.sort();
        let &p = options.choose(rng)?;
        parent.insert(t, p);
        load.insert(t, 1);
        for v in path_up(&parent, p) {
            if let Some(l) = load.get_mut(&v) {
                *l += 1;
            }
        }
    }
    let rows = parent.iter().map(|(&c, &p)| EdgeRow::new(p, c, inst.length_km(p, c))).collect();
    assign_cables(&EdgeMatrix::new(rows), g, inst.catalog()).ok()
}

fn criterion_5(runs: &[Run]) -> Verdict {
    let mut failures = Vec::new();
    let mut audited = 0;
    for (i, r) in runs.iter().enumerate().filter(|(_, r)| r.result.status == Status::Feasible) {
        let graph = build_candidate_graph(&r.instance);
        let model = build_milp(&r.instance, &graph);
        let tree = r.result.final_design();
        match build_warm_start(tree, &model) {
            Ok(ws) => {
                let (objective, violated) = evaluate_assignment(&model, &ws);
                let cost = check_design(tree, &r.instance).total_cost;
                if !violated.is_empty() || !rel_close(objective, cost, 1e-6) {
                    failures.push(format!("run {i}: objective {objective} vs {cost}, violated {violated:?}"));
                }
            }
            Err(e) => failures.push(format!("run {i}: {e}")),
        }
        audited += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(515);
    let mut trees = 0;
    while trees < 1000 {
        let n_t = rng.gen_range(3..=12);
        let n_s = rng.gen_range(1..=2);
        let mut cfg = GeneratorConfig::new(n_t, n_s, benchmark_catalog(rng.gen_range(0..BENCHMARK_CATALOGS.len())));
        cfg.area = (5000.0, 5000.0);
        cfg.min_separation = 300.0;
        cfg.neighbor_truncation = rng.gen_range(2..=6);
        let inst = generate_random_instance(rng.gen(), &cfg).unwrap();
        let graph = build_candidate_graph(&inst);
        let Some(tree) = random_tree(&mut rng, &inst, &graph) else { continue };
        let model = build_milp(&inst, &graph);
        let ws = build_warm_start(&tree, &model).expect("capacity-feasible tree maps");
        let (_, violated) = evaluate_assignment(&model, &ws);
        let cut: Vec<_> = violated.iter().filter(|n| n.starts_with("valid_")).collect();
        let other: Vec<_> = violated.iter().filter(|n| !n.starts_with("valid_") && !n.starts_with("cross_")).collect();
        if !cut.is_empty() || !other.is_empty() {
            failures.push(format!("random tree {trees}: {cut:?} {other:?}"));
        }
        trees += 1;
    }
    let detail = format!("{audited} pipeline designs audited, {trees} random trees kept by the valid inequalities");
    if failures.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; {failures:?}"))
    }
}

fn criterion_6() -> Verdict {
    Verdict::NotRun("the published layouts are not available; criteria 1-5 stand as the gate".into())
}

type Seg = ((i64, i64), (i64, i64));

fn cross_i(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i128 {
    (a.0 - o.0) as i128 * (b.1 - o.1) as i128 - (a.1 - o.1) as i128 * (b.0 - o.0) as i128
}

/// Exact closed-segment intersection: solves `p + t d1 = q + u d2` in
/// rationals, falling back to interval overlap for collinear pairs.
fn exact_intersect(s: Seg, t: Seg) -> bool {
    let (p, p2) = s;
    let (q, q2) = t;
    let d1 = ((p2.0 - p.0) as i128, (p2.1 - p.1) as i128);
    let d2 = ((q2.0 - q.0) as i128, (q2.1 - q.1) as i128);
    let w = ((q.0 - p.0) as i128, (q.1 - p.1) as i128);
    let den = d1.0 * d2.1 - d1.1 * d2.0;
    let tn = w.0 * d2.1 - w.1 * d2.0;
    let un = w.0 * d1.1 - w.1 * d1.0;
    if den != 0 {
        let (den, tn, un) = if den < 0 { (-den, -tn, -un) } else { (den, tn, un) };
        return (0..=den).contains(&tn) && (0..=den).contains(&un);
    }
    if cross_i(p, p2, q) != 0 {
        return false;
    }
    let proj = |r: (i64, i64)| (r.0 - p.0) as i128 * d1.0 + (r.1 - p.1) as i128 * d1.1;
    let len = d1.0 * d1.0 + d1.1 * d1.1;
    let (a, b) = (proj(q).min(proj(q2)), proj(q).max(proj(q2)));
    a <= len && b >= 0
}

fn to_segment(s: Seg, ids: (u32, u32)) -> Segment {
    let pt = |c: (i64, i64)| Point::new(c.0 as f64, c.1 as f64);
    Segment::new(pt(s.0), pt(s.1), NodeId(ids.0), NodeId(ids.1))
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut disagreements = Vec::new();
    let mut hits = 0;
    for i in 0..10_000 {
        // a coarse grid yields many touching and collinear pairs
        let r: i64 = if i % 2 == 0 { 8 } else { 1_000_000 };
        let mut pt = || (rng.gen_range(-r..=r), rng.gen_range(-r..=r));
        let s = (pt(), pt());
        let t = (pt(), pt());
        if s.0 == s.1 || t.0 == t.1 {
            continue;
        }
        let exact = exact_intersect(s, t);
        hits += exact as usize;
        if segments_cross(&to_segment(s, (1, 2)), &to_segment(t, (3, 4))) != exact {
            disagreements.push(format!("{s:?} {t:?}"));
        }
    }

    // (segment, segment, shares a node, expected)
    let battery: [(Seg, Seg, bool, bool); 20] = [
        (((0, 0), (4, 0)), ((1, 0), (3, 0)), false, true), // collinear containment
        (((0, 0), (4, 0)), ((2, 0), (6, 0)), false, true), // collinear overlap
        (((0, 0), (4, 0)), ((4, 0), (6, 0)), false, true), // collinear end to end
        (((0, 0), (4, 0)), ((5, 0), (6, 0)), false, false), // collinear gap
        (((0, 0), (4, 0)), ((4, 0), (6, 0)), true, false), // shared node end to end
        (((0, 0), (4, 0)), ((0, 0), (0, 4)), true, false), // shared node corner
        (((0, 0), (4, 0)), ((0, 0), (2, 0)), true, false), // shared node, overlapping
        (((0, 0), (4, 0)), ((2, 0), (2, 3)), false, true), // T-junction on interior
        (((0, 0), (4, 0)), ((2, -3), (2, 0)), false, true), // T-junction from below
        (((0, 0), (4, 0)), ((2, 1), (2, 3)), false, false), // T stem short of the bar
        (((0, 0), (4, 4)), ((0, 4), (4, 0)), false, true), // proper X
        (((0, 0), (4, 4)), ((1, 0), (5, 4)), false, false), // parallel diagonals
        (((0, 0), (4, 4)), ((2, 2), (6, 6)), false, true), // diagonal overlap
        (((0, 0), (4, 4)), ((5, 5), (6, 6)), false, false), // diagonal gap
        (((0, 0), (0, 4)), ((0, 2), (3, 2)), false, true), // vertical T-junction
        (((0, 0), (0, 4)), ((0, 4), (0, 8)), false, true), // vertical touch
        (((0, 0), (3, 1)), ((6, 2), (9, 3)), false, false), // collinear, far apart
        (((0, 0), (3, 1)), ((3, 1), (6, 2)), false, true), // collinear touch
        (((0, 0), (10, 0)), ((3, 1), (7, -1)), false, true), // shallow crossing
        (((0, 0), (10, 0)), ((3, 1), (7, 1)), false, false), // parallel offset
    ];
    for (k, &(s, t, shared, expected)) in battery.iter().enumerate() {
        let ids = if shared { (1, 3) } else { (3, 4) };
        let got = segments_cross(&to_segment(s, (1, 2)), &to_segment(t, ids));
        let oracle = !shared && exact_intersect(s, t);
        if got != expected || oracle != expected {
            disagreements.push(format!("case {k}: got {got}, oracle {oracle}, expected {expected}"));
        }
    }

    let detail = format!(
        "10000 random pairs ({hits} intersecting) and 20 degenerate cases, {} disagreements",
        disagreements.len()
    );
    if disagreements.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}: {disagreements:?}"))
    }
}

fn main() -> ExitCode {
    let runs = feasibility_runs();
    let verdicts = [
        (1, "feasibility", criterion_1(&runs)),
        (2, "monotone refinement", criterion_2(&runs)),
        (3, "oracle equivalence", criterion_3()),
        (4, "classic cycle cancelling", criterion_4()),
        (5, "model consistency", criterion_5(&runs)),
        (6, "published benchmarks", criterion_6()),
        (7, "geometry robustness", criterion_7()),
    ];
    let mut all = true;
    for (n, title, v) in &verdicts {
        all &= report(*n, title, v);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
