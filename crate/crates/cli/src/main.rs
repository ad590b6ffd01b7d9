use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use rayon::prelude::*;

use cablenet::candidate_graph::build_candidate_graph;
use cablenet::generate::{benchmark_catalog, generate_random_instance, GeneratorConfig, BENCHMARK_CATALOGS};
use cablenet::milp_export::{build_milp, build_warm_start, evaluate_assignment, warm_start_string, write_lp};
use cablenet::pipeline::{
    format_gain, report_csv, run_pipeline, DesignFile, PipelineOptions, PipelineResult, Stage, Status,
};
use cablenet::svg::render_svg;
use cablenet::Instance;

/// Designs the cable network of an offshore wind farm: Esau-Williams
/// construction, crossing repair and negative-cycle refinement.
#[derive(Debug, Parser)]
#[command(name = "cablenet", version)]
struct Args {
    /// Instance JSON file.
    #[arg(long, conflicts_with_all = ["batch", "seed"])]
    instance: Option<PathBuf>,

    /// Directory of instance JSON files, solved concurrently.
    #[arg(long, conflicts_with = "seed")]
    batch: Option<PathBuf>,

    /// Generate a random instance with this seed instead of reading one.
    #[arg(long)]
    seed: Option<u64>,

    /// Turbines in a generated instance.
    #[arg(long, default_value_t = 74, requires = "seed")]
    turbines: usize,

    /// Substations in a generated instance.
    #[arg(long, default_value_t = 1, requires = "seed")]
    substations: usize,

    /// Benchmark cable set of a generated instance (0-based).
    #[arg(long, default_value_t = 0, requires = "seed")]
    catalog: usize,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Write the mixed-integer model and a warm start.
    #[arg(long)]
    export_milp: bool,

    /// Write one SVG drawing per stage.
    #[arg(long)]
    plot: bool,

    /// Stop after construction and crossing repair.
    #[arg(long)]
    nccrh_off: bool,

    /// Nearest-neighbour truncation of the candidate graph.
    #[arg(long)]
    neighbors: Option<usize>,

    /// Feeders allowed per substation; reported, not enforced.
    #[arg(long)]
    max_feeders: Option<usize>,
}

fn prepare(mut instance: Instance, args: &Args) -> Result<Instance> {
    if let Some(n) = args.neighbors {
        instance = instance.with_neighbor_truncation(n)?;
    }
    if args.max_feeders.is_some() {
        instance = instance.with_max_feeders(args.max_feeders);
    }
    Ok(instance)
}

fn write_outputs(instance: &Instance, result: &PipelineResult, args: &Args, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let design = DesignFile::new(result.final_design(), instance);
    fs::write(out.join("design.json"), design.to_json_string() + "\n")?;
    fs::write(out.join("report.csv"), report_csv(result))?;
    let summary = serde_json::json!({
        "status": result.status,
        "gain_pct": result.gain_pct().map(format_gain),
        "stages": result.stages,
        "check": result.report,
        "swaps": result.swaps,
        "commits": result.commits,
    });
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&summary)? + "\n")?;

    if args.plot {
        for (stage, tree) in &result.designs {
            let title = format!(
                "{stage}: cost {:.4}, {} crossings",
                design_cost(result, *stage),
                tree.crossings(instance).len()
            );
            fs::write(out.join(format!("{stage}.svg")), render_svg(instance, tree, &title))?;
        }
    }

    if args.export_milp {
        let graph = build_candidate_graph(instance);
        let model = build_milp(instance, &graph);
        let ws = if result.status == Status::Feasible {
            let ws = build_warm_start(result.final_design(), &model)?;
            let (objective, violated) = evaluate_assignment(&model, &ws);
            if !violated.is_empty() {
                bail!("warm start violates {}", violated.join(", "));
            }
            log::info!("warm start objective {objective:.4}");
            fs::write(out.join("warm_start.txt"), warm_start_string(&ws))?;
            Some(ws)
        } else {
            log::warn!("no feasible design; the model is written without a warm start");
            None
        };
        write_lp(&model, ws.as_deref(), out.join("model.lp"))?;
    }
    Ok(())
}

fn design_cost(result: &PipelineResult, stage: Stage) -> f64 {
    result.stage(stage).map(|s| s.cost).unwrap_or(f64::NAN)
}

fn print_table(name: &str, result: &PipelineResult) {
    println!("{name}");
    println!("  {:<6} {:>12} {:>10} {:>9} {:>5}", "stage", "cost", "time_ms", "crossings", "it");
    for s in &result.stages {
        println!(
            "  {:<6} {:>12.4} {:>10.1} {:>9} {:>5}",
            s.stage.to_string(),
            s.cost,
            s.time_ms,
            s.crossings,
            s.iterations
        );
    }
    if let Some(g) = result.gain_pct() {
        println!("  gain with refinement: {}%", format_gain(g));
    }
    if result.status == Status::CcrhInfeasible {
        println!("  crossing repair failed; the partial design was written");
    }
}

fn solve(instance: Instance, args: &Args, out: &Path) -> Result<PipelineResult> {
    let options = PipelineOptions { run_nccrh: !args.nccrh_off, ..Default::default() };
    let result = run_pipeline(&instance, options)?;
    write_outputs(&instance, &result, args, out)?;
    Ok(result)
}

fn run(args: &Args) -> Result<Status> {
    if let Some(dir) = &args.batch {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|p| p.extension().is_some_and(|e| e == "json"));
        files.sort();
        if files.is_empty() {
            bail!("no instance files in {}", dir.display());
        }
        let results: Vec<(PathBuf, Result<PipelineResult>)> = files
            .par_iter()
            .map(|path| {
                let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                let res = Instance::load(path)
                    .with_context(|| format!("loading {}", path.display()))
                    .and_then(|inst| prepare(inst, args))
                    .and_then(|inst| solve(inst, args, &args.out.join(&stem)));
                (path.clone(), res)
            })
            .collect();
        let mut status = Status::Feasible;
        let mut failed = false;
        for (path, res) in &results {
            match res {
                Ok(r) => {
                    print_table(&path.display().to_string(), r);
                    if r.status == Status::CcrhInfeasible {
                        status = Status::CcrhInfeasible;
                    }
                }
                Err(e) => {
                    eprintln!("{}: {e:#}", path.display());
                    failed = true;
                }
            }
        }
        if failed {
            bail!("some instances failed");
        }
        return Ok(status);
    }

    let (instance, name) = if let Some(path) = &args.instance {
        let inst = Instance::load(path).with_context(|| format!("loading {}", path.display()))?;
        (inst, path.display().to_string())
    } else if let Some(seed) = args.seed {
        if args.catalog >= BENCHMARK_CATALOGS.len() {
            bail!("catalog index {} out of range 0..{}", args.catalog, BENCHMARK_CATALOGS.len());
        }
        let cfg = GeneratorConfig::new(args.turbines, args.substations, benchmark_catalog(args.catalog));
        let inst = generate_random_instance(seed, &cfg)?;
        fs::create_dir_all(&args.out)?;
        fs::write(args.out.join("instance.json"), inst.to_json_string() + "\n")?;
        (inst, format!("random instance, seed {seed}"))
    } else {
        bail!("one of --instance, --batch or --seed is required");
    };
    let instance = prepare(instance, args)?;
    let result = solve(instance, args, &args.out)?;
    print_table(&name, &result);
    Ok(result.status)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(Status::Feasible) => ExitCode::SUCCESS,
        Ok(Status::CcrhInfeasible) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
