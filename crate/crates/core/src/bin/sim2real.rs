use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sim2real::pipeline::{run_pipeline, write_sim2real, ExperimentConfig, PipelineError, Stage};
use sim2real::planners::PlannerKind;

#[derive(Parser)]
#[command(name = "sim2real", version, about = "Sim-to-real driving data toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// JSON experiment config; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory shared by all stages.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Quota preset: HASS or nuScenes-like.
    #[arg(long, global = true)]
    quota: Option<String>,
    /// Mix sim data by relabelling instead of converting frames.
    #[arg(long, global = true)]
    no_align: bool,
    #[arg(long, global = true, value_parser = parse_planner)]
    planner: Option<PlannerKind>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Simulate episodes and write dataset.jsonl.
    Generate,
    /// Stratified sample of the dataset.
    Curate,
    /// Question/answer pairs for the curated records.
    RenderPrompts,
    /// Fit and score a planner on the curated records.
    Evaluate,
    /// Text tables and SVG overlays from the evaluation.
    Report,
    /// Real-only versus real-plus-sim comparison.
    Sim2real,
}

fn parse_planner(s: &str) -> Result<PlannerKind, String> {
    match s {
        "cv" | "ctrv" | "linear" => s.parse().map_err(|e| format!("{e}")),
        _ => Err(format!("expected cv, ctrv or linear, got {s:?}")),
    }
}

fn config(opts: &Opts) -> Result<ExperimentConfig, PipelineError> {
    let mut cfg = match &opts.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(o) = &opts.out {
        cfg.out_dir = o.clone();
    }
    if let Some(q) = &opts.quota {
        cfg.quota = q.clone();
    }
    if let Some(p) = opts.planner {
        cfg.planner.kind = p;
    }
    cfg.no_align |= opts.no_align;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let cfg = config(&cli.opts)?;
    let written = match cli.command {
        Command::Generate => run_pipeline(&cfg, Stage::Generate)?,
        Command::Curate => run_pipeline(&cfg, Stage::Curate)?,
        Command::RenderPrompts => run_pipeline(&cfg, Stage::RenderPrompts)?,
        Command::Evaluate => run_pipeline(&cfg, Stage::Evaluate)?,
        Command::Report => run_pipeline(&cfg, Stage::Report)?,
        Command::Sim2real => {
            let (report, files) = write_sim2real(&cfg)?;
            print!("{}", report.to_text());
            files
        }
    };
    for f in written {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
