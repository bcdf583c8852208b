//! `vdelta` command-line driver.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or config errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vdelta::experiments::{
    emit_forward_csv, emit_restore_outputs, run_forward_experiment, run_restore_experiment,
    ExperimentConfig, ImageMode, StartState,
};
use vdelta::io::{read_grid_file, write_csv_matrix, write_pgm};
use vdelta::{
    block_masses, potential_v_delta, project, BlockPartition, MassVector, ToleranceBand,
};

#[derive(Parser)]
#[command(name = "vdelta", version, about = "Leak-tolerant block-mass projection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Baseline vs. projected reverse diffusion toward the data image.
    Restore(ExperimentArgs),
    /// Forward block-preserving blur; writes V and E_block per step.
    Forward(ExperimentArgs),
    /// Project a single grid file onto the tolerance band.
    Project(ProjectArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "L-x")]
    lx: Option<usize>,
    #[arg(long = "L-y")]
    ly: Option<usize>,
    #[arg(long = "B-x")]
    bx: Option<usize>,
    #[arg(long = "B-y")]
    by: Option<usize>,
    #[arg(long, value_parser = parse_image_mode)]
    image_mode: Option<ImageMode>,
    #[arg(long)]
    c_high: Option<f64>,
    #[arg(long)]
    c_low: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma_smooth: Option<f64>,
    #[arg(long = "T")]
    steps: Option<usize>,
    #[arg(long)]
    sigma_fwd: Option<f64>,
    #[arg(long)]
    forward_steps: Option<usize>,
    /// Comma-separated step indices, e.g. `0,10,20,40`.
    #[arg(long, value_delimiter = ',')]
    snapshot_steps: Option<Vec<usize>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_start)]
    start: Option<StartState>,
}

#[derive(Args)]
struct ProjectArgs {
    /// Grid to project: binary/ASCII graymap or CSV matrix.
    #[arg(long)]
    input: PathBuf,
    /// Destination; `.pgm` writes a graymap, anything else a CSV matrix.
    #[arg(long)]
    output: PathBuf,
    #[arg(long = "B-x")]
    bx: usize,
    #[arg(long = "B-y")]
    by: usize,
    #[arg(long)]
    delta: f64,
    /// Reference block masses, comma separated in block order.
    #[arg(long, value_delimiter = ',', conflicts_with = "reference")]
    w_ref: Option<Vec<f64>>,
    /// Grid file whose block masses serve as the reference.
    #[arg(long)]
    reference: Option<PathBuf>,
}

fn parse_image_mode(s: &str) -> Result<ImageMode, String> {
    match s {
        "checkerboard" => Ok(ImageMode::Checkerboard),
        "constant-random" => Ok(ImageMode::ConstantRandom),
        _ => Err(format!("unknown image mode {s:?} (checkerboard | constant-random)")),
    }
}

fn parse_start(s: &str) -> Result<StartState, String> {
    match s {
        "noise" => Ok(StartState::Noise),
        "blurred" => Ok(StartState::Blurred),
        "data" => Ok(StartState::Data),
        _ => Err(format!("unknown start {s:?} (noise | blurred | data)")),
    }
}

/// A failure tagged with the exit code it maps to.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure::Usage(e.to_string())
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path).map_err(Failure::usage)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = &self.$field { cfg.$target = v.clone(); })*
            };
        }
        apply!(
            lx => lx, ly => ly, bx => bx, by => by, image_mode => image_mode,
            c_high => c_high, c_low => c_low, seed => seed, delta => delta, beta => beta,
            sigma_smooth => sigma_smooth, steps => steps, sigma_fwd => sigma_fwd,
            forward_steps => forward_steps, snapshot_steps => snapshot_steps,
            out => output_dir, start => start,
        );
        cfg.validate().map_err(Failure::usage)?;
        Ok(cfg)
    }
}

fn cmd_restore(args: &ExperimentArgs) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let record = run_restore_experiment(&cfg).map_err(Failure::runtime)?;
    emit_restore_outputs(&record, &cfg.snapshot_steps, &cfg.output_dir).map_err(Failure::runtime)?;

    let last = record.series.last().expect("series holds the start state");
    let max_eblock_proj = record.series[1..]
        .iter()
        .map(|r| r.eblock_proj)
        .fold(0.0, f64::max);
    let final_gap = record
        .states_base
        .last()
        .unwrap()
        .max_abs_diff(record.states_proj.last().unwrap())
        .map_err(Failure::runtime)?;
    println!(
        "final Eblock_base={} Eblock_proj={} Epix_base={} Epix_proj={} max_Eblock_proj={} max_abs_diff_base_proj={}",
        last.eblock_base, last.eblock_proj, last.epix_base, last.epix_proj, max_eblock_proj, final_gap
    );
    Ok(())
}

fn cmd_forward(args: &ExperimentArgs) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let rows = run_forward_experiment(&cfg).map_err(Failure::runtime)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Failure::runtime(format!("{}: {e}", cfg.output_dir.display())))?;
    emit_forward_csv(&rows, &cfg.output_dir.join("forward_metrics.csv")).map_err(Failure::runtime)?;
    let last = rows.last().expect("trajectory holds p0");
    println!("final V={} Eblock={} steps={}", last.v, last.eblock, last.n);
    Ok(())
}

fn read_input(path: &Path) -> Result<vdelta::io::RawGrid, Failure> {
    // Unreadable or malformed inputs are usage errors.
    read_grid_file(path).map_err(Failure::usage)
}

fn cmd_project(args: &ProjectArgs) -> Result<(), Failure> {
    let p = read_input(&args.input)?.normalize().map_err(Failure::usage)?;
    let part = BlockPartition::new(p.lx(), p.ly(), args.bx, args.by).map_err(Failure::usage)?;
    let m = part.len();
    let w_ref = match (&args.w_ref, &args.reference) {
        (Some(w), _) => {
            if w.len() != m {
                return Err(Failure::usage(format!("--w-ref needs {m} entries, got {}", w.len())));
            }
            MassVector::new(w.clone())
        }
        (None, Some(path)) => {
            let q = read_input(path)?.normalize().map_err(Failure::usage)?;
            if (q.lx(), q.ly()) != (p.lx(), p.ly()) {
                return Err(Failure::usage("reference grid has different dimensions"));
            }
            block_masses(&q, &part).map_err(Failure::usage)?
        }
        (None, None) => MassVector::new(vec![1.0 / m as f64; m]),
    };
    let band = ToleranceBand::new(w_ref, args.delta).map_err(Failure::runtime)?;
    let before = potential_v_delta(&p, &part, &band).map_err(Failure::runtime)?;
    let q = project(&p, &part, &band).map_err(Failure::runtime)?;
    let after = potential_v_delta(&q, &part, &band).map_err(Failure::runtime)?;
    let is_pgm = args
        .output
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        write_pgm(&q, &args.output)
    } else {
        write_csv_matrix(&q, &args.output)
    }
    .map_err(Failure::runtime)?;
    println!("Vdelta_before={before} Vdelta_after={after}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap reports --help/--version as errors with exit code 0.
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(if code == 0 { 0 } else { 2 });
        }
    };
    let result = match &cli.command {
        Command::Restore(a) => cmd_restore(a),
        Command::Forward(a) => cmd_forward(a),
        Command::Project(a) => cmd_project(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
