//! `parareal` command-line driver.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use parareal_core::experiment::{ExperimentConfig, PRESETS};
use parareal_core::{build_strip_mesh, mesh_width_stats, preset, refine_uniform, run_experiment, StripGeometry};

#[derive(Parser)]
#[command(name = "parareal", version, about = "Parareal experiments for the 2D heat equation with strip coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset campaign or a JSON configuration and write CSV plus metadata.
    Run(RunArgs),
    /// Build a strip mesh and write its text dump.
    Mesh(MeshArgs),
    /// List the available presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Preset campaign.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS), conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Flat JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for the fine propagations.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parareal iterations after the coarse sweep.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct MeshArgs {
    /// Middle strip width.
    #[arg(long, default_value_t = 0.2)]
    w: f64,
    /// Left edge of the middle strip; centred when omitted.
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long, default_value_t = 0.08)]
    target_h: f64,
    #[arg(long, default_value_t = 0)]
    refinements: usize,
    /// Destination file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: RunArgs) -> Result<()> {
    let mut configs = match (&args.preset, &args.config) {
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => vec![ExperimentConfig::from_json_file(path)?],
        _ => bail!("exactly one of --preset and --config is required"),
    };
    for c in &mut configs {
        if let Some(w) = args.workers {
            c.workers = w;
        }
        if let Some(out) = &args.out {
            c.output = out.clone();
        }
        if let Some(k) = args.max_iter {
            c.max_iter = k;
        }
        c.validate()
            .with_context(|| format!("invalid configuration {}", c.file_stem()))?;
    }
    for c in &configs {
        let stem = c.file_stem();
        let (result, csv, _) = run_experiment(c).with_context(|| format!("run {stem} failed"))?;
        let last = result.defects().last().copied().unwrap_or(f64::NAN);
        let sigma = result
            .sigma
            .map_or(String::new(), |s| format!(" sigma_max={:.6}", s.sigma));
        println!(
            "{stem}: dofs={} iterations={} final_defect={last:.3e}{sigma} time={:.2}s -> {}",
            result.dofs,
            result.state.iterations(),
            result.elapsed_seconds,
            csv.display()
        );
    }
    Ok(())
}

fn mesh(args: MeshArgs) -> Result<()> {
    let geom = match args.x0 {
        Some(x0) => StripGeometry::new(x0, args.w)?,
        None => StripGeometry::centered(args.w)?,
    };
    let mut m = build_strip_mesh(&geom, args.target_h)?;
    for _ in 0..args.refinements {
        m = refine_uniform(&m);
    }
    match args.out {
        Some(path) => {
            m.write_text(&path)?;
            let (lo, hi) = mesh_width_stats(&m);
            eprintln!(
                "{} nodes, {} triangles, h in [{lo:.4}, {hi:.4}] -> {}",
                m.node_count(),
                m.element_count(),
                path.display()
            );
        }
        None => print!("{}", m.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Mesh(args) => mesh(args),
        Command::Presets => {
            for name in PRESETS {
                let n = preset(name).map_or(0, |v| v.len());
                println!("{name}: {n} configurations");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
