use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phlab_harness::output::{export_report, read_details, read_records, revalidate, write_run};
use phlab_harness::{run, run_sweep, ConfigError, Experiment, ExperimentConfig, Outcome, Overrides};

/// Numerical experiments on partially hyperbolic maps of the 3-torus.
///
/// Settings are taken from built-in defaults, then the `--config` file, then flags.
/// Exit status: 0 when every asserted check passes, 1 when one fails, 2 for
/// configuration or file errors.
#[derive(Parser)]
#[command(name = "phlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form anchors: fixed points, eigenvalue relations, cs-plane, symmetry, volume.
    Verify(RunArgs),
    /// Lyapunov spectra at random seeds.
    Lyapunov(RunArgs),
    /// Periodic points by Newton, and the Morse-Smale dynamics on the fixed leaf.
    FixedPoints(RunArgs),
    /// Invariant splitting at random points.
    Splitting(RunArgs),
    /// Trace one center leaf and check closure and invariance.
    Leaf(RunArgs),
    /// Stable holonomy between two nearby center leaves.
    Holonomy(RunArgs),
    /// Rotation number of a periodic center leaf.
    Rotation(RunArgs),
    /// Grid coverage of the strong unstable curve of a fixed point.
    Cover(RunArgs),
    /// Contraction of long center intervals.
    Contract(RunArgs),
    /// Pushforward of leaf measure and atom counting.
    Disintegrate(RunArgs),
    /// Run the `sweep.experiment` over the (a, b) grid.
    Sweep(RunArgs),
    /// Re-read record files, re-validate details and regenerate the CSV files.
    Report {
        /// `*.records.jsonl` files.
        #[arg(required = true)]
        records: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

enum Failure {
    Config(String),
    Checks,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    args.overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn finish(out: &Path, stem: &str, mut outcomes: Vec<Outcome>) -> Result<(), Failure> {
    for o in &outcomes {
        println!("{}", o.record.summary_line());
    }
    let paths = write_run(out, stem, &mut outcomes).map_err(|e| Failure::Config(e.to_string()))?;
    for p in paths {
        log::info!("wrote {}", p.display());
    }
    if outcomes.iter().all(|o| o.record.passed()) {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn stem(cfg: &ExperimentConfig, kind: &str) -> String {
    let id: String = cfg.id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    format!("{kind}-{id}")
}

fn report(paths: &[PathBuf], out: &Path) -> Result<(), Failure> {
    let mut bad = false;
    for path in paths {
        let records = read_records(path).map_err(|e| Failure::Config(e.to_string()))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let details = match records.first().and_then(|r| r.detail.clone()) {
            Some(name) => read_details(&dir.join(name), records.len()).map_err(|e| Failure::Config(e.to_string()))?,
            None => vec![Vec::new(); records.len()],
        };
        for (r, d) in records.iter().zip(&details) {
            for problem in revalidate(r, d) {
                eprintln!("invalid: {problem}");
                bad = true;
            }
            println!("{}", r.summary_line());
            bad |= !r.passed();
        }
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("report");
        let stem = name.strip_suffix(".records.jsonl").unwrap_or(name);
        export_report(out, stem, &records, &details).map_err(|e| Failure::Config(e.to_string()))?;
    }
    if bad {
        Err(Failure::Checks)
    } else {
        Ok(())
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let cfgerr = |e: ConfigError| Failure::Config(e.to_string());
    let (kind, args) = match cli.command {
        Command::Report { records, out } => return report(&records, &out),
        Command::Sweep(args) => {
            let cfg = load(&args).map_err(cfgerr)?;
            let outcomes = run_sweep(&cfg).map_err(cfgerr)?;
            let name = format!("sweep-{}", cfg.sweep.experiment);
            return finish(&args.out, &stem(&cfg, &name), outcomes);
        }
        Command::Verify(a) => (Experiment::Verify, a),
        Command::Lyapunov(a) => (Experiment::Lyapunov, a),
        Command::FixedPoints(a) => (Experiment::FixedPoints, a),
        Command::Splitting(a) => (Experiment::Splitting, a),
        Command::Leaf(a) => (Experiment::Leaf, a),
        Command::Holonomy(a) => (Experiment::Holonomy, a),
        Command::Rotation(a) => (Experiment::Rotation, a),
        Command::Cover(a) => (Experiment::Cover, a),
        Command::Contract(a) => (Experiment::Contract, a),
        Command::Disintegrate(a) => (Experiment::Disintegrate, a),
    };
    let cfg = load(&args).map_err(cfgerr)?;
    let outcome = run(kind, &cfg).map_err(cfgerr)?;
    finish(&args.out, &stem(&cfg, kind.name()), vec![outcome])
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
