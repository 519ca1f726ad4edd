mod report;
mod solve;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stieltjes_cuts::instances::{self, GridSpec};
use stieltjes_cuts::verify::{self, Fault, Suite, VerifyConfig};

use crate::solve::SolveArgs;

#[derive(Parser)]
#[command(
    name = "stieltjes",
    version,
    about = "Polymatroid cuts for quadratic problems with indicators"
)]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate lattice denoising instances.
    Gen(GenArgs),
    /// Solve instance files with one model and append CSV rows.
    Solve(SolveArgs),
    /// Run the invariant suites.
    Verify(VerifyArgs),
    /// Average result CSVs by noise level and model.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Grid side length.
    #[arg(long, value_name = "M")]
    grid: usize,
    #[arg(long, value_parser = positive_f64)]
    sigma2: f64,
    /// Per-nonzero penalty; defaults to 0.25 at σ² = 0.5 and 0.12 otherwise.
    #[arg(long)]
    mu: Option<f64>,
    /// Cardinality cap; defaults to n (inactive).
    #[arg(long)]
    k: Option<usize>,
    /// Inclusive range `a..b` or a single seed.
    #[arg(long, value_parser = parse_seeds, env = "STIELTJES_SEED", default_value = "1")]
    seeds: SeedRange,
    /// Also write `y` and `X` as CSV grids.
    #[arg(long)]
    grids: bool,
    #[arg(short, long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    RhoSign,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_parser = parse_suite, default_value = "all")]
    suite: Suite,
    /// Largest dimension drawn.
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, env = "STIELTJES_SEED", default_value_t = 7)]
    seed: u64,
    #[arg(long, value_parser = positive_f64, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<FaultArg>,
}

#[derive(Args)]
struct ReportArgs {
    /// Result CSV files.
    inputs: Vec<PathBuf>,
    /// Also write the aggregated table as CSV.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct SeedRange {
    first: u64,
    last: u64,
}

fn parse_seeds(s: &str) -> Result<SeedRange, String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|e| format!("bad seed `{t}`: {e}"))
    };
    let (first, last) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if first > last {
        return Err(format!("empty seed range `{s}`"));
    }
    Ok(SeedRange { first, last })
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: stieltjes_cuts::Error| e.to_string())
}

pub(crate) fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` must be positive"))
    }
}

fn cmd_gen(args: &GenArgs) -> Result<(), String> {
    fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    let n = args.grid * args.grid;
    let mu = args
        .mu
        .unwrap_or_else(|| instances::default_mu(args.sigma2));
    for seed in args.seeds.first..=args.seeds.last {
        let spec = GridSpec::new(args.grid, args.sigma2, mu, args.k.unwrap_or(n), seed)
            .map_err(|e| e.to_string())?;
        let (inst, signal) = instances::assemble(&spec).map_err(|e| e.to_string())?;
        let id = instances::instance_id(&spec);
        let path = args.out.join(format!("{id}.json"));
        instances::write_file(&inst, &path).map_err(|e| e.to_string())?;
        if args.grids {
            let y = inst.meta.y.clone().unwrap_or_default();
            let write = |suffix: &str, values: &[f64]| {
                let p = args.out.join(format!("{id}-{suffix}.csv"));
                fs::write(&p, instances::grid_csv(values, args.grid))
                    .map_err(|e| format!("{}: {e}", p.display()))
            };
            write("y", &y)?;
            write("x", &signal.x)?;
        }
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, String> {
    let cfg = VerifyConfig {
        suite: args.suite,
        n: args.n,
        trials: args.trials,
        seed: args.seed,
        fault: args.inject_fault.map(|FaultArg::RhoSign| Fault::RhoSign),
        tol: args.tol,
    };
    let outcomes = verify::run(&cfg).map_err(|e| e.to_string())?;
    for o in &outcomes {
        println!(
            "{:<13} {} checks={} max_violation={:.3e}",
            o.suite.as_str(),
            if o.passed() { "PASS" } else { "FAIL" },
            o.checks,
            o.max_violation
        );
    }
    match outcomes.iter().find_map(|o| o.counterexample.as_ref()) {
        Some(ce) => {
            println!("{}", ce.to_json());
            Ok(false)
        }
        None => Ok(true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let result = match &cli.command {
        Command::Gen(args) => cmd_gen(args).map(|()| true),
        Command::Solve(args) => solve::run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Report(args) => report::run(&args.inputs, args.csv.as_deref()).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
