use std::fs::OpenOptions;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use stieltjes_cuts::conic::ConicSettings;
use stieltjes_cuts::instances::read_file;
use stieltjes_cuts::models::{
    branch_and_bound, cutting_plane_solve_with, exact_enumerate, pers_c_solve, BnbOptions,
    CuttingPlaneOptions, Model, CSV_HEADER,
};
use stieltjes_cuts::submodular::solve_exact_unconstrained;
use stieltjes_cuts::{Instance, SolveReport, Status};

use crate::positive_f64;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelArg {
    PersC,
    PersB,
    Poly,
    Exact,
    Sfm,
}

impl ModelArg {
    fn model(self) -> Model {
        match self {
            ModelArg::PersC => Model::PersC,
            ModelArg::PersB => Model::PersB,
            ModelArg::Poly => Model::Poly,
            ModelArg::Exact => Model::Exact,
            ModelArg::Sfm => Model::Sfm,
        }
    }
}

#[derive(Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Instance JSON files.
    #[arg(long = "instance", value_name = "PATH", num_args = 1.., required = true)]
    pub instances: Vec<PathBuf>,
    /// Conic solver tolerance.
    #[arg(long, value_parser = positive_f64, default_value_t = 1e-6)]
    pub tol: f64,
    /// Relative bound change that ends the cutting-plane loop.
    #[arg(long, value_parser = positive_f64, default_value_t = 1e-3)]
    pub tol_round: f64,
    #[arg(long, default_value_t = 50)]
    pub max_rounds: usize,
    /// Conic solver iteration cap per solve.
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
    /// Seconds per instance.
    #[arg(long, value_parser = positive_f64)]
    pub time_limit: Option<f64>,
    /// Results CSV, appended to; rows go to stdout when omitted.
    #[arg(short, long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Instances solved concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

fn solve_one(args: &SolveArgs, inst: &Instance) -> stieltjes_cuts::Result<SolveReport> {
    let conic = ConicSettings {
        tol: args.tol,
        max_iter: args.max_iter,
        time_limit: args.time_limit,
        ..ConicSettings::default()
    };
    match args.model {
        ModelArg::PersC => pers_c_solve(inst, &conic),
        ModelArg::PersB => branch_and_bound(
            inst,
            &BnbOptions {
                time_limit: args.time_limit.unwrap_or(BnbOptions::default().time_limit),
                conic: ConicSettings {
                    time_limit: None,
                    ..conic
                },
                ..BnbOptions::default()
            },
        ),
        ModelArg::Poly => cutting_plane_solve_with(
            inst,
            &CuttingPlaneOptions {
                tol_round: args.tol_round,
                max_rounds: args.max_rounds,
                conic,
                ..CuttingPlaneOptions::default()
            },
        ),
        ModelArg::Exact => exact_enumerate(inst),
        ModelArg::Sfm => solve_exact_unconstrained(inst),
    }
}

fn instance_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// One CSV record; failures become `failed` rows so that every instance is accounted for.
fn record(args: &SolveArgs, path: &Path) -> (Vec<String>, bool) {
    let id = instance_id(path);
    let start = Instant::now();
    let result = read_file(path).and_then(|inst| solve_one(args, &inst));
    match result {
        Ok(r) => {
            let ok = !matches!(r.status, Status::Failed | Status::InfeasibleLike);
            if !ok {
                log::warn!("{id}: {}", r.note.as_deref().unwrap_or(r.status.as_str()));
            }
            (r.csv_record(&id), ok)
        }
        Err(e) => {
            log::error!("{id}: {e}");
            let row = vec![
                id,
                args.model.model().to_string(),
                Status::Failed.to_string(),
                "NaN".into(),
                "NaN".into(),
                "NaN".into(),
                format!("{:.6}", start.elapsed().as_secs_f64()),
                "0".into(),
                "0".into(),
            ];
            (row, false)
        }
    }
}

/// Returns `Ok(false)` when some instance failed; its row is still written.
pub fn run(args: &SolveArgs) -> Result<bool, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| e.to_string())?;
    let rows: Vec<(Vec<String>, bool)> =
        pool.install(|| args.instances.par_iter().map(|p| record(args, p)).collect());

    match &args.out {
        Some(path) => {
            let fresh = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            write_rows(csv::Writer::from_writer(file), fresh, &rows)
        }
        None => write_rows(csv::Writer::from_writer(std::io::stdout()), true, &rows),
    }
    .map_err(|e| e.to_string())?;
    Ok(rows.iter().all(|(_, ok)| *ok))
}

fn write_rows<W: std::io::Write>(
    mut w: csv::Writer<W>,
    header: bool,
    rows: &[(Vec<String>, bool)],
) -> csv::Result<()> {
    if header {
        w.write_record(CSV_HEADER)?;
    }
    for (row, _) in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
