//! Mixed-integer model of the design problem, written in LP format, plus
//! warm-start assignments derived from a heuristic design.
//!
//! `x_i_j` selects arc `i -> j`; `y_k_i_j` states that the arc carries the
//! `k` turbines at and below `i`. Arcs into a turbine carry at most `Q - 1`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::candidate_graph::CandidateGraph;
use crate::geometry::segments_cross;
use crate::model::{Instance, NodeId};
use crate::tsh::EdgeMatrix;

/// Slack allowed when auditing constraints.
const FEAS_TOL: f64 = 1e-9;
const LINE_WIDTH: usize = 78;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("cable {0}-{1} is not an arc of the model")]
    ArcMissing(NodeId, NodeId),
    #[error("design has no cables")]
    EmptyTree,
    #[error("cable {0}-{1} has no downstream count")]
    Unsized(NodeId, NodeId),
    #[error("cable {upstream}-{downstream} carries {count} turbines into a turbine, above Q - 1")]
    TurbineHeadOverCapacity { upstream: NodeId, downstream: NodeId, count: u32 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub variables: Vec<String>,
    pub objective: Vec<(usize, f64)>,
    pub constraints: Vec<Constraint>,
    /// Directed candidate arcs in lexicographic order.
    pub arcs: Vec<(NodeId, NodeId)>,
    /// Unordered crossing pairs of undirected candidate edges.
    pub crossing_pairs: Vec<((NodeId, NodeId), (NodeId, NodeId))>,
    max_capacity: u32,
    n_substations: usize,
    x_index: HashMap<(NodeId, NodeId), usize>,
    y_index: HashMap<(u32, NodeId, NodeId), usize>,
}

pub fn x_name(i: NodeId, j: NodeId) -> String {
    format!("x_{}_{}", i.0, j.0)
}

pub fn y_name(k: u32, i: NodeId, j: NodeId) -> String {
    format!("y_{}_{}_{}", k, i.0, j.0)
}

impl MilpModel {
    /// Largest count an arc into `j` may carry.
    pub fn h(&self, j: NodeId) -> u32 {
        if j.index() < self.n_substations {
            self.max_capacity
        } else {
            self.max_capacity - 1
        }
    }

    pub fn x(&self, i: NodeId, j: NodeId) -> Option<usize> {
        self.x_index.get(&(i, j)).copied()
    }

    pub fn y(&self, k: u32, i: NodeId, j: NodeId) -> Option<usize> {
        self.y_index.get(&(k, i, j)).copied()
    }

    pub fn n_binaries(&self) -> usize {
        self.variables.len()
    }
}

pub fn build_milp(instance: &Instance, graph: &CandidateGraph) -> MilpModel {
    let catalog = instance.catalog();
    let q = catalog.max_capacity();
    let n_s = instance.n_substations();
    let h = |j: NodeId| if j.index() < n_s { q } else { q - 1 };

    let arcs: Vec<(NodeId, NodeId)> = graph.arcs().iter().map(|a| (a.tail, a.head)).collect();
    let mut variables = Vec::new();
    let mut x_index = HashMap::new();
    let mut y_index = HashMap::new();
    for &(i, j) in &arcs {
        x_index.insert((i, j), variables.len());
        variables.push(x_name(i, j));
    }
    let mut objective = Vec::new();
    for a in graph.arcs() {
        for k in 1..=h(a.head) {
            y_index.insert((k, a.tail, a.head), variables.len());
            objective.push((variables.len(), catalog.step_cost(a.length_km, k)));
            variables.push(y_name(k, a.tail, a.head));
        }
    }
    let ys_out = |i: NodeId| {
        graph.out_arcs(i).flat_map(|a| (1..=h(a.head)).map(move |k| (k, a.tail, a.head))).collect::<Vec<_>>()
    };
    let ys_in = |i: NodeId| {
        graph.in_arcs(i).flat_map(|a| (1..=h(a.head)).map(move |k| (k, a.tail, a.head))).collect::<Vec<_>>()
    };

    let mut constraints = Vec::new();
    for i in instance.turbine_ids() {
        let terms = ys_out(i).into_iter().map(|key| (y_index[&key], 1.0)).collect();
        constraints.push(Constraint { name: format!("deg_{}", i.0), terms, sense: Sense::Eq, rhs: 1.0 });
    }
    for i in instance.turbine_ids() {
        let mut terms: Vec<(usize, f64)> = ys_out(i).into_iter().map(|key| (y_index[&key], key.0 as f64)).collect();
        terms.extend(ys_in(i).into_iter().map(|key| (y_index[&key], -(key.0 as f64))));
        constraints.push(Constraint { name: format!("flow_{}", i.0), terms, sense: Sense::Eq, rhs: 1.0 });
    }

    let mut edges: Vec<(NodeId, NodeId)> = arcs.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
    edges.sort_unstable();
    edges.dedup();
    let mut crossing_pairs = Vec::new();
    for (p, &e) in edges.iter().enumerate() {
        for &f in &edges[p + 1..] {
            if segments_cross(&graph.segment(e.0, e.1), &graph.segment(f.0, f.1)) {
                crossing_pairs.push((e, f));
            }
        }
    }
    for (n, &(e, f)) in crossing_pairs.iter().enumerate() {
        let terms = [(e.0, e.1), (e.1, e.0), (f.0, f.1), (f.1, f.0)]
            .iter()
            .filter_map(|key| x_index.get(key).map(|&v| (v, 1.0)))
            .collect();
        constraints.push(Constraint { name: format!("cross_{}", n + 1), terms, sense: Sense::Le, rhs: 1.0 });
    }

    for &(i, j) in &arcs {
        let mut terms: Vec<(usize, f64)> = (1..=h(j)).map(|k| (y_index[&(k, i, j)], 1.0)).collect();
        terms.push((x_index[&(i, j)], -1.0));
        constraints.push(Constraint { name: format!("link_{}_{}", i.0, j.0), terms, sense: Sense::Le, rhs: 0.0 });
    }

    for v in 2..q {
        for i in instance.turbine_ids() {
            let mut terms: Vec<(usize, f64)> = ys_out(i)
                .into_iter()
                .filter(|key| key.0 > v)
                .map(|key| (y_index[&key], -(((key.0 - 1) / v) as f64)))
                .collect();
            terms.extend(ys_in(i).into_iter().filter(|key| key.0 >= v).map(|key| (y_index[&key], 1.0)));
            constraints.push(Constraint { name: format!("valid_{}_{}", v, i.0), terms, sense: Sense::Le, rhs: 0.0 });
        }
    }

    MilpModel {
        variables,
        objective,
        constraints,
        arcs,
        crossing_pairs,
        max_capacity: q,
        n_substations: n_s,
        x_index,
        y_index,
    }
}

fn format_coef(c: f64) -> String {
    format!("{c:?}")
}

/// Appends `name: terms sense rhs` style content, wrapping long lines.
fn write_expression(out: &mut String, head: &str, terms: &[(usize, f64)], names: &[String], tail: &str) {
    let mut line = String::from(head);
    let mut first = true;
    for &(v, c) in terms {
        let sign = if c < 0.0 {
            "-"
        } else if first {
            ""
        } else {
            "+"
        };
        let mag = c.abs();
        let piece = if mag == 1.0 {
            format!("{sign} {}", names[v])
        } else {
            format!("{sign} {} {}", format_coef(mag), names[v])
        };
        let piece = piece.trim_start().to_string();
        if line.len() + piece.len() + 1 > LINE_WIDTH && line.trim().len() > head.trim().len() {
            out.push_str(line.trim_end());
            out.push('\n');
            line = String::from("   ");
        }
        line.push(' ');
        line.push_str(&piece);
        first = false;
    }
    if terms.is_empty() {
        line.push_str(" 0");
    }
    line.push(' ');
    line.push_str(tail);
    out.push_str(line.trim_end());
    out.push('\n');
}

/// LP-format text of the model. A warm start, when given, is embedded as a
/// comment block ahead of the objective.
pub fn lp_string(model: &MilpModel, warm_start: Option<&[(String, f64)]>) -> String {
    let mut out = String::new();
    out.push_str("\\ cable layout model\n");
    if let Some(ws) = warm_start {
        out.push_str("\\ warm start\n");
        for (name, value) in ws {
            let _ = writeln!(out, "\\   {name} {value}");
        }
    }
    out.push_str("Minimize\n");
    write_expression(&mut out, " obj:", &model.objective, &model.variables, "");
    out.push_str("Subject To\n");
    for c in &model.constraints {
        let tail = format!("{} {}", c.sense.symbol(), format_coef(c.rhs));
        write_expression(&mut out, &format!(" {}:", c.name), &c.terms, &model.variables, &tail);
    }
    out.push_str("Binary\n");
    for name in &model.variables {
        let _ = writeln!(out, " {name}");
    }
    out.push_str("End\n");
    out
}

pub fn write_lp(
    model: &MilpModel,
    warm_start: Option<&[(String, f64)]>,
    path: impl AsRef<Path>,
) -> Result<(), MilpError> {
    std::fs::write(path, lp_string(model, warm_start))?;
    Ok(())
}

/// Variable assignment of a sized design: each cable becomes the arc from
/// its downstream to its upstream endpoint with the matching count.
pub fn build_warm_start(tree: &EdgeMatrix, model: &MilpModel) -> Result<Vec<(String, f64)>, MilpError> {
    if tree.is_empty() {
        return Err(MilpError::EmptyTree);
    }
    let mut out = Vec::new();
    for r in &tree.rows {
        let k = r.downstream.ok_or(MilpError::Unsized(r.a, r.b))?;
        let (i, j) = (r.b, r.a);
        if model.x(i, j).is_none() {
            return Err(MilpError::ArcMissing(i, j));
        }
        if k > model.h(j) {
            return Err(MilpError::TurbineHeadOverCapacity { upstream: j, downstream: i, count: k });
        }
        out.push((x_name(i, j), 1.0));
        out.push((y_name(k, i, j), 1.0));
    }
    Ok(out)
}

pub fn warm_start_string(assignment: &[(String, f64)]) -> String {
    let mut out = String::from("# warm start: variables not listed are 0\n");
    for (name, value) in assignment {
        let _ = writeln!(out, "{name} {value}");
    }
    out
}

pub fn write_warm_start(
    tree: &EdgeMatrix,
    model: &MilpModel,
    path: impl AsRef<Path>,
) -> Result<Vec<(String, f64)>, MilpError> {
    let ws = build_warm_start(tree, model)?;
    std::fs::write(path, warm_start_string(&ws))?;
    Ok(ws)
}

pub fn parse_warm_start(text: &str) -> Result<Vec<(String, f64)>, MilpError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(name), Some(value), None) = (it.next(), it.next(), it.next()) else {
            return Err(MilpError::Parse { line: n + 1, msg: format!("expected `name value`, got `{line}`") });
        };
        let value = value.parse::<f64>().map_err(|e| MilpError::Parse { line: n + 1, msg: e.to_string() })?;
        out.push((name.to_string(), value));
    }
    Ok(out)
}

/// Objective value and the names of violated constraints. Variables not
/// listed count as zero; unknown names are ignored.
pub fn evaluate_assignment(model: &MilpModel, assignment: &[(String, f64)]) -> (f64, Vec<String>) {
    let index: HashMap<&str, usize> = model.variables.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut values = vec![0.0; model.variables.len()];
    for (name, v) in assignment {
        if let Some(&i) = index.get(name.as_str()) {
            values[i] = *v;
        }
    }
    let dot = |terms: &[(usize, f64)]| terms.iter().map(|&(v, c)| c * values[v]).sum::<f64>();
    let objective = dot(&model.objective);
    let violated = model
        .constraints
        .iter()
        .filter(|c| {
            let lhs = dot(&c.terms);
            match c.sense {
                Sense::Le => lhs > c.rhs + FEAS_TOL,
                Sense::Eq => (lhs - c.rhs).abs() > FEAS_TOL,
            }
        })
        .map(|c| c.name.clone())
        .collect();
    (objective, violated)
}

/// LP file contents as read back by [`parse_lp`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedLp {
    pub objective: BTreeMap<String, f64>,
    pub constraints: Vec<ParsedConstraint>,
    pub binaries: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConstraint {
    pub name: String,
    pub terms: BTreeMap<String, f64>,
    pub sense: Sense,
    pub rhs: f64,
}

fn parse_terms(tokens: &[&str], line: usize) -> Result<BTreeMap<String, f64>, MilpError> {
    let err = |msg: String| MilpError::Parse { line, msg };
    let mut terms = BTreeMap::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &tok in tokens {
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ => {
                if let Ok(c) = tok.parse::<f64>() {
                    if coef.is_some() {
                        return Err(err(format!("two coefficients in a row at `{tok}`")));
                    }
                    coef = Some(c);
                } else {
                    *terms.entry(tok.to_string()).or_insert(0.0) += sign * coef.take().unwrap_or(1.0);
                    sign = 1.0;
                }
            }
        }
    }
    if coef.is_some() {
        return Err(err("dangling coefficient".into()));
    }
    Ok(terms)
}

/// Reads the LP subset produced by [`lp_string`]: one objective, named
/// `<=`/`=` rows with constant right-hand sides, and a binary section.
pub fn parse_lp(text: &str) -> Result<ParsedLp, MilpError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Objective,
        Constraints,
        Binary,
        Done,
    }
    let mut section = Section::None;
    let mut parsed = ParsedLp::default();
    // statements are gathered until the next `name:` or section keyword
    let mut pending: Option<(usize, String)> = None;

    fn flush(pending: &mut Option<(usize, String)>, section: &Section, parsed: &mut ParsedLp) -> Result<(), MilpError> {
        let Some((line, stmt)) = pending.take() else { return Ok(()) };
        let (name, body) = stmt.split_once(':').ok_or(MilpError::Parse { line, msg: "missing row name".into() })?;
        let tokens: Vec<&str> = body.split_whitespace().collect();
        match section {
            Section::Objective => parsed.objective = parse_terms(&tokens, line)?,
            Section::Constraints => {
                let pos = tokens
                    .iter()
                    .position(|t| *t == "<=" || *t == "=")
                    .ok_or(MilpError::Parse { line, msg: "missing relation".into() })?;
                let sense = if tokens[pos] == "<=" { Sense::Le } else { Sense::Eq };
                let rhs = tokens
                    .get(pos + 1)
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or(MilpError::Parse { line, msg: "bad right-hand side".into() })?;
                let mut terms = parse_terms(&tokens[..pos], line)?;
                terms.retain(|k, _| k != "0");
                parsed.constraints.push(ParsedConstraint { name: name.trim().to_string(), terms, sense, rhs });
            }
            _ => return Err(MilpError::Parse { line, msg: "row outside a section".into() }),
        }
        Ok(())
    }

    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        let next = match line.to_ascii_lowercase().as_str() {
            "minimize" => Some(Section::Objective),
            "subject to" => Some(Section::Constraints),
            "binary" => Some(Section::Binary),
            "end" => Some(Section::Done),
            _ => None,
        };
        if let Some(next) = next {
            flush(&mut pending, &section, &mut parsed)?;
            section = next;
            continue;
        }
        match section {
            Section::Binary => parsed.binaries.extend(line.split_whitespace().map(String::from)),
            Section::Objective | Section::Constraints => {
                if line.contains(':') {
                    flush(&mut pending, &section, &mut parsed)?;
                    pending = Some((n + 1, line.to_string()));
                } else if let Some((_, stmt)) = pending.as_mut() {
                    stmt.push(' ');
                    stmt.push_str(line);
                } else {
                    return Err(MilpError::Parse { line: n + 1, msg: "continuation without a row".into() });
                }
            }
            Section::None | Section::Done => {
                return Err(MilpError::Parse { line: n + 1, msg: format!("unexpected `{line}`") })
            }
        }
    }
    flush(&mut pending, &section, &mut parsed)?;
    if section != Section::Done {
        return Err(MilpError::Parse { line: text.lines().count(), msg: "missing End".into() });
    }
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidate_graph::build_candidate_graph;
    use crate::model::{CableCatalog, CableType, Point};
    use crate::tsh::{assign_cables, run_tsh, EdgeRow};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(subs: &[(f64, f64)], turbs: &[(f64, f64)], cables: &[(u32, f64)], k: usize) -> Instance {
        let raw: Vec<CableType> = cables.iter().map(|&(q, w)| CableType::new(q, w)).collect();
        let cat = CableCatalog::normalize(&raw).unwrap();
        let p = |v: &[(f64, f64)]| v.iter().map(|&(x, y)| Point::new(x, y)).collect();
        Instance::new(p(subs), p(turbs), cat, k).unwrap()
    }

    fn random_instance(rng: &mut ChaCha8Rng, n_s: usize, n_t: usize, cables: &[(u32, f64)], k: usize) -> Instance {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        while pts.len() < n_s + n_t {
            let p = (rng.gen_range(0..40) as f64 * 200.0, rng.gen_range(0..40) as f64 * 200.0);
            if !pts.contains(&p) {
                pts.push(p);
            }
        }
        instance(&pts[..n_s], &pts[n_s..], cables, k)
    }

    const GOLDEN_ONE_TURBINE: &str = "\
\\ cable layout model
Minimize
 obj: 2.5 y_1_2_1
Subject To
 deg_2: y_1_2_1 = 1.0
 flow_2: y_1_2_1 = 1.0
 link_2_1: y_1_2_1 - x_2_1 <= 0.0
Binary
 x_2_1
 y_1_2_1
End
";

    #[test]
    fn one_turbine_model_matches_golden_file() {
        let inst = instance(&[(0.0, 0.0)], &[(3000.0, 4000.0)], &[(1, 0.5)], 15);
        let g = build_candidate_graph(&inst);
        let model = build_milp(&inst, &g);
        assert_eq!(model.variables, vec!["x_2_1", "y_1_2_1"]);
        assert_eq!(lp_string(&model, None), GOLDEN_ONE_TURBINE);
        let (inst_tree, _) = run_tsh(&inst, &g).unwrap();
        let ws = build_warm_start(&inst_tree, &model).unwrap();
        let (obj, violated) = evaluate_assignment(&model, &ws);
        assert_eq!(obj, 2.5);
        assert!(violated.is_empty());
    }

    #[test]
    fn variable_count_by_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let inst = random_instance(&mut rng, 2, 8, &[(4, 0.4), (6, 0.6)], 3);
        let g = build_candidate_graph(&inst);
        let model = build_milp(&inst, &g);
        let mut expected = 0;
        for a in 1..=10u32 {
            for b in 1..=10u32 {
                if g.arc(NodeId(a), NodeId(b)).is_some() {
                    expected += 1 + if b <= 2 { 6 } else { 5 };
                }
            }
        }
        assert_eq!(model.n_binaries(), expected);
        let count = |p: &str| model.constraints.iter().filter(|c| c.name.starts_with(p)).count();
        assert_eq!(count("deg_"), 8);
        assert_eq!(count("flow_"), 8);
        assert_eq!(count("link_"), g.arcs().len());
        assert_eq!(count("valid_"), 4 * 8);
        assert_eq!(count("cross_"), model.crossing_pairs.len());
    }

    #[test]
    fn capacity_two_has_no_valid_inequalities() {
        let inst = instance(&[(0.0, 0.0)], &[(0.0, 1000.0), (0.0, 2000.0)], &[(2, 1.0)], 15);
        let model = build_milp(&inst, &build_candidate_graph(&inst));
        assert!(!model.constraints.iter().any(|c| c.name.starts_with("valid_")));
    }

    #[test]
    fn chain_warm_start_lines() {
        // OSS 1, a = 3 next to it, b = 2 beyond it
        let inst = instance(&[(0.0, 0.0)], &[(0.0, 2000.0), (0.0, 1000.0)], &[(2, 1.0)], 15);
        let g = build_candidate_graph(&inst);
        let model = build_milp(&inst, &g);
        let (tree, _) = run_tsh(&inst, &g).unwrap();
        let mut ws = build_warm_start(&tree, &model).unwrap();
        ws.sort_by(|a, b| a.0.cmp(&b.0));
        let names: Vec<&str> = ws.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, vec!["x_2_3", "x_3_1", "y_1_2_3", "y_2_3_1"]);
        assert!(ws.iter().all(|(_, v)| *v == 1.0));
        assert!(matches!(build_warm_start(&EdgeMatrix::default(), &model), Err(MilpError::EmptyTree)));
    }

    #[test]
    fn audit_reports_crossings_and_degrees() {
        let inst = instance(&[(0.0, 0.0)], &[(2000.0, 2000.0), (0.0, 2000.0), (2000.0, 0.0)], &[(3, 1.0)], 15);
        let g = build_candidate_graph(&inst);
        let model = build_milp(&inst, &g);
        let (_, violated) = evaluate_assignment(&model, &[]);
        for t in 2..=4 {
            assert!(violated.contains(&format!("deg_{t}")));
        }
        // 1-2 crosses 3-4
        let ws = vec![("x_2_1".to_string(), 1.0), ("x_3_4".to_string(), 1.0)];
        let (_, violated) = evaluate_assignment(&model, &ws);
        assert!(violated.iter().any(|n| n.starts_with("cross_")));
        assert_eq!(model.crossing_pairs, vec![((NodeId(1), NodeId(2)), (NodeId(3), NodeId(4)))]);
    }

    #[test]
    fn lp_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = random_instance(&mut rng, 1, 9, &[(7, 0.37), (11, 0.39), (13, 0.43)], 4);
        let g = build_candidate_graph(&inst);
        let model = build_milp(&inst, &g);
        let (tree, _) = run_tsh(&inst, &g).unwrap();
        let ws = build_warm_start(&tree, &model).unwrap();
        let text = lp_string(&model, Some(&ws));
        assert!(text.lines().all(|l| l.len() <= 255));
        let parsed = parse_lp(&text).unwrap();
        assert_eq!(parsed.binaries, model.variables);
        assert_eq!(parsed.constraints.len(), model.constraints.len());
        for (p, c) in parsed.constraints.iter().zip(&model.constraints) {
            assert_eq!(p.name, c.name);
            assert_eq!(p.sense, c.sense);
            assert_eq!(p.rhs, c.rhs);
            let expect: BTreeMap<String, f64> = c.terms.iter().map(|&(v, k)| (model.variables[v].clone(), k)).collect();
            assert_eq!(p.terms, expect);
        }
        let obj: f64 = ws.iter().map(|(n, v)| parsed.objective.get(n).copied().unwrap_or(0.0) * v).sum();
        assert!((obj - tree.total_cost(inst.catalog())).abs() < 1e-9);
        assert_eq!(parse_warm_start(&warm_start_string(&ws)).unwrap(), ws);
    }

    #[test]
    fn parse_errors_are_reported() {
        assert!(parse_lp("Minimize\n obj: x\n").is_err());
        assert!(parse_lp("Minimize\n obj: 2 3 x\nEnd\n").is_err());
        assert!(parse_lp("Subject To\n c: x 1\nEnd\n").is_err());
        assert!(parse_warm_start("x_1_2\n").is_err());
        assert!(parse_warm_start("x_1_2 one\n").is_err());
    }

    /// Random capacity-feasible forest grown by attaching turbines in random
    /// order to a random already-connected candidate neighbour.
    fn random_tree(rng: &mut ChaCha8Rng, inst: &Instance, g: &CandidateGraph) -> Option<EdgeMatrix> {
        let q = inst.catalog().max_capacity();
        let mut order: Vec<NodeId> = inst.turbine_ids().collect();
        order.shuffle(rng);
        let mut parent: HashMap<NodeId, NodeId> = HashMap::new();
        let mut load: HashMap<NodeId, u32> = HashMap::new();
        let root_of = |parent: &HashMap<NodeId, NodeId>, mut v: NodeId| {
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
                .filter(|&h| {
                    let path = root_of(&parent, h);
                    path.iter().filter(|v| !g.is_substation(**v)).all(|v| load.get(v).copied().unwrap_or(1) < q)
                })
                .collect();
            options.sort();
            let &p = options.choose(rng)?;
            parent.insert(t, p);
            load.insert(t, 1);
            for v in root_of(&parent, p) {
                if !g.is_substation(v) {
                    *load.get_mut(&v).unwrap() += 1;
                }
            }
        }
        let rows = parent.iter().map(|(&c, &p)| EdgeRow::new(p, c, inst.length_km(p, c))).collect();
        assign_cables(&EdgeMatrix::new(rows), g, inst.catalog()).ok()
    }

    #[test]
    fn valid_inequalities_keep_random_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        while checked < 200 {
            let n_t = rng.gen_range(3..12);
            let n_s = rng.gen_range(1..3);
            let cables = [[(4, 0.3), (6, 0.5)], [(5, 0.41), (10, 0.61)], [(7, 0.38), (15, 0.63)]][rng.gen_range(0..3)];
            let inst = random_instance(&mut rng, n_s, n_t, &cables, 4);
            let g = build_candidate_graph(&inst);
            let model = build_milp(&inst, &g);
            let Some(tree) = random_tree(&mut rng, &inst, &g) else { continue };
            let ws = build_warm_start(&tree, &model).unwrap();
            let (obj, violated) = evaluate_assignment(&model, &ws);
            let structural: Vec<&String> = violated.iter().filter(|n| !n.starts_with("cross_")).collect();
            assert!(structural.is_empty(), "{structural:?}");
            assert!((obj - tree.total_cost(inst.catalog())).abs() < 1e-9 * obj.max(1.0));
            checked += 1;
        }
    }
}
