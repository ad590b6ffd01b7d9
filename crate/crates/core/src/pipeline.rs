//! End-to-end run: construction, crossing repair when needed, refinement,
//! and the per-stage report.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidate_graph::{build_candidate_graph, forward_arcs};
use crate::ccrh::{repair_crossings, Swap};
use crate::checker::{check_design, DesignReport};
use crate::model::{Instance, NodeId};
use crate::nccrh::{flow_from_tree, refine_with, Commit, NccrhError, RefineOptions};
use crate::tsh::{run_tsh, EdgeMatrix, EdgeRow, TshError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Tsh(#[from] TshError),
    #[error(transparent)]
    Nccrh(#[from] NccrhError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Tsh,
    Ccrh,
    Nccrh,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Tsh => "tsh",
            Stage::Ccrh => "ccrh",
            Stage::Nccrh => "nccrh",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    /// Checker recomputation, in the catalog's currency.
    pub cost: f64,
    pub time_ms: f64,
    pub crossings: usize,
    /// Committed swaps for repair, committed cycles for refinement.
    pub iterations: usize,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Feasible,
    CcrhInfeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineOptions {
    pub run_nccrh: bool,
    pub refine: RefineOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { run_nccrh: true, refine: RefineOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub status: Status,
    pub stages: Vec<StageReport>,
    /// Design produced by each stage, in stage order.
    pub designs: Vec<(Stage, EdgeMatrix)>,
    pub report: DesignReport,
    pub tsh_crossings: usize,
    pub swaps: Vec<Swap>,
    pub commits: Vec<Commit>,
}

impl PipelineResult {
    pub fn final_design(&self) -> &EdgeMatrix {
        &self.designs.last().expect("construction always yields a design").1
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    /// Relative cost change of refinement against its input, in percent.
    pub fn gain_pct(&self) -> Option<f64> {
        let refined = self.stage(Stage::Nccrh)?;
        let before = self.stages.iter().rev().find(|s| s.stage != Stage::Nccrh)?;
        Some(100.0 * (refined.cost - before.cost) / before.cost)
    }
}

fn stage_report(
    stage: Stage,
    tree: &EdgeMatrix,
    instance: &Instance,
    started: Instant,
    iterations: usize,
) -> (StageReport, DesignReport) {
    let time_ms = started.elapsed().as_secs_f64() * 1000.0;
    let check = check_design(tree, instance);
    let report = StageReport {
        stage,
        cost: check.total_cost,
        time_ms,
        crossings: check.crossings,
        iterations,
        feasible: check.feasible(),
    };
    (report, check)
}

pub fn run_pipeline(instance: &Instance, options: PipelineOptions) -> Result<PipelineResult, PipelineError> {
    let started = Instant::now();
    let graph = build_candidate_graph(instance);
    let (tree, tsh_crossings) = run_tsh(instance, &graph)?;
    let (report, mut check) = stage_report(Stage::Tsh, &tree, instance, started, 0);
    log::info!("tsh: cost {:.4}, {} crossings", report.cost, report.crossings);
    let mut stages = vec![report];
    let mut designs = vec![(Stage::Tsh, tree)];
    let mut swaps = Vec::new();
    let mut commits = Vec::new();

    if check.crossings > 0 {
        let started = Instant::now();
        let outcome = repair_crossings(&designs[0].1, instance, &graph);
        let (report, repaired) = stage_report(Stage::Ccrh, &outcome.tree, instance, started, outcome.swaps.len());
        log::info!("ccrh: cost {:.4}, {} swaps, infeasible: {}", report.cost, outcome.swaps.len(), outcome.infeasible);
        check = repaired;
        stages.push(report);
        designs.push((Stage::Ccrh, outcome.tree));
        swaps = outcome.swaps;
        if outcome.infeasible {
            return Ok(PipelineResult {
                status: Status::CcrhInfeasible,
                stages,
                designs,
                report: check,
                tsh_crossings,
                swaps,
                commits,
            });
        }
    }

    if options.run_nccrh {
        let started = Instant::now();
        let arcs = forward_arcs(&graph);
        let flow = flow_from_tree(&designs.last().unwrap().1, &arcs)?;
        let outcome = refine_with(&flow, instance, &graph, options.refine);
        let (report, refined) = stage_report(Stage::Nccrh, &outcome.tree, instance, started, outcome.iterations);
        log::info!("nccrh: cost {:.4}, {} iterations", report.cost, outcome.iterations);
        check = refined;
        stages.push(report);
        designs.push((Stage::Nccrh, outcome.tree));
        commits = outcome.commits;
    }

    let status = if check.feasible() { Status::Feasible } else { Status::CcrhInfeasible };
    Ok(PipelineResult { status, stages, designs, report: check, tsh_crossings, swaps, commits })
}

/// Two decimals, with no negative zero.
pub fn format_gain(pct: f64) -> String {
    let s = format!("{pct:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// One row per stage; the gain column is filled on the refinement row.
pub fn report_csv(result: &PipelineResult) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["stage", "cost", "time_ms", "crossings", "iterations", "feasible", "gain_pct"])
        .expect("in-memory write");
    let gain = result.gain_pct().map(format_gain).unwrap_or_default();
    for s in &result.stages {
        let g = if s.stage == Stage::Nccrh { gain.as_str() } else { "" };
        w.write_record([
            s.stage.to_string(),
            format!("{:.4}", s.cost),
            format!("{:.1}", s.time_ms),
            s.crossings.to_string(),
            s.iterations.to_string(),
            s.feasible.to_string(),
            g.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCable {
    pub upstream: NodeId,
    pub downstream: NodeId,
    pub length_km: f64,
    pub count: Option<u32>,
    pub cable: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignFile {
    pub n_substations: usize,
    pub n_turbines: usize,
    pub total_cost: f64,
    pub total_length_km: f64,
    pub crossings: usize,
    pub cables: Vec<DesignCable>,
}

impl DesignFile {
    pub fn new(tree: &EdgeMatrix, instance: &Instance) -> Self {
        let check = check_design(tree, instance);
        DesignFile {
            n_substations: instance.n_substations(),
            n_turbines: instance.n_turbines(),
            total_cost: check.total_cost,
            total_length_km: check.total_length_km,
            crossings: check.crossings,
            cables: tree
                .rows
                .iter()
                .map(|r| DesignCable {
                    upstream: r.a,
                    downstream: r.b,
                    length_km: r.length_km,
                    count: r.downstream,
                    cable: r.cable,
                })
                .collect(),
        }
    }

    pub fn to_edge_matrix(&self) -> EdgeMatrix {
        EdgeMatrix::new(
            self.cables
                .iter()
                .map(|c| EdgeRow {
                    a: c.upstream,
                    b: c.downstream,
                    length_km: c.length_km,
                    downstream: c.count,
                    cable: c.cable,
                })
                .collect(),
        )
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("design serializes")
    }
}
