use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use crate::bootstrap::median_bootstrap_time;
use crate::error::{Error, Result};
use crate::exact::{exact_report, ExactReport};
use crate::family::UpdateFamily;
use crate::kcm::{batch, default_exterior, kcm_box, results_csv, SimParams};
use crate::VERSION;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "KCMLAB_THREADS";

/// Thread count from `KCMLAB_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` on a pool capped by `KCMLAB_THREADS`, or on the global pool.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads_from_env() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Comment line opening every CSV.
pub fn csv_header_line(seed: u64) -> String {
    format!("# kcm-lab v{VERSION} seed={seed}\n")
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub q: f64,
    pub size: u32,
    /// Output file name inside the output directory.
    pub file: String,
    pub status: String,
    pub error: Option<String>,
    /// Median time for `kcm` and `bootstrap`, `T_rel` for `exact`.
    pub time: Option<f64>,
    pub censored_fraction: f64,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepManifest {
    pub version: String,
    pub seed: u64,
    pub kind: ExperimentKind,
    pub family: String,
    pub config: ExperimentConfig,
    pub threads: Option<usize>,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    /// `complete`, `partial` or `failed`.
    pub status: String,
    pub cells: Vec<CellRecord>,
    pub summary_file: String,
}

impl SweepManifest {
    pub fn is_complete(&self) -> bool {
        self.status == "complete"
    }
}

struct CellOutput {
    contents: String,
    time: Option<f64>,
    censored_fraction: f64,
}

fn cell_file(kind: ExperimentKind, q: f64, size: u32) -> String {
    let ext = if kind == ExperimentKind::Exact { "json" } else { "csv" };
    format!("{}_q{q}_s{size}.{ext}", kind.label())
}

fn run_cell(config: &ExperimentConfig, family: &UpdateFamily, q: f64, size: u32) -> Result<CellOutput> {
    match config.kind {
        ExperimentKind::Kcm => {
            let region = Arc::new(kcm_box(size, config.box_height(family, size))?);
            let params = SimParams {
                family: family.clone(),
                q,
                exterior: default_exterior(family, &region),
                region,
                t_max: config.t_max,
                seed: config.seed,
                trial: 0,
            };
            let summary = batch(&params, config.trials, config.persistence)?;
            Ok(CellOutput {
                contents: results_csv(&params, &summary.results),
                time: summary.median,
                censored_fraction: summary.censored_fraction,
            })
        }
        ExperimentKind::Bootstrap => {
            let summary = median_bootstrap_time(family, q, size, config.trials, config.seed)?;
            let mut out = csv_header_line(config.seed);
            out.push_str("trial,seed,q,time,censored\n");
            for (t, time) in summary.times.iter().enumerate() {
                let shown = time.map_or("inf".to_string(), |v| v.to_string());
                let _ = writeln!(out, "{t},{},{q},{shown},{}", config.seed, u8::from(time.is_none()));
            }
            Ok(CellOutput {
                contents: out,
                time: summary.median.map(|m| m as f64),
                censored_fraction: summary.censored as f64 / config.trials as f64,
            })
        }
        ExperimentKind::Exact => {
            let region = kcm_box(size, config.box_height(family, size))?;
            let exterior = default_exterior(family, &region);
            let report = exact_report(family, &region, &exterior, q)?;
            #[derive(Serialize)]
            struct Dump<'a> {
                version: &'a str,
                family: &'a str,
                q: f64,
                size: u32,
                report: &'a ExactReport,
            }
            let dump = Dump {
                version: VERSION,
                family: family.name(),
                q,
                size,
                report: &report,
            };
            Ok(CellOutput {
                contents: serde_json::to_string_pretty(&dump).expect("report serializes") + "\n",
                time: Some(report.t_rel),
                censored_fraction: 0.0,
            })
        }
    }
}

/// Summary table consumed by `fit`: one row per cell.
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

fn summary_csv(seed: u64, cells: &[CellRecord]) -> String {
    let mut out = csv_header_line(seed);
    out.push_str("q,size,time,censored_fraction,status\n");
    for c in cells {
        let time = c.time.map_or("nan".to_string(), |t| format!("{t:.16e}"));
        let _ = writeln!(out, "{},{},{time},{},{}", c.q, c.size, c.censored_fraction, c.status);
    }
    out
}

/// Runs every `(q, size)` cell in parallel, writes one file per cell and a
/// summary table, then the manifest. Failed cells are recorded in the
/// manifest and do not stop the others.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepManifest> {
    let mut config = config.clone();
    let family = config.validate()?;
    let dir: PathBuf = config.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let cells: Vec<(f64, u32)> = config
        .q
        .iter()
        .flat_map(|&q| config.sizes.iter().map(move |&s| (q, s)))
        .collect();
    let records: Vec<CellRecord> = with_thread_cap(|| {
        cells
            .par_iter()
            .map(|&(q, size)| {
                let t0 = Instant::now();
                let file = cell_file(config.kind, q, size);
                let outcome = run_cell(&config, &family, q, size)
                    .and_then(|out| write_atomic(&dir.join(&file), &out.contents).map(|_| out));
                let (status, error, time, censored_fraction) = match outcome {
                    Ok(out) => ("ok".to_string(), None, out.time, out.censored_fraction),
                    Err(e) => ("failed".to_string(), Some(e.to_string()), None, 0.0),
                };
                CellRecord {
                    q,
                    size,
                    file,
                    status,
                    error,
                    time,
                    censored_fraction,
                    wall_clock_seconds: t0.elapsed().as_secs_f64(),
                }
            })
            .collect()
    })?;
    write_atomic(&dir.join(SUMMARY_FILE), &summary_csv(config.seed, &records))?;
    let failed = records.iter().filter(|r| r.status != "ok").count();
    let status = match failed {
        0 => "complete",
        n if n == records.len() => "failed",
        _ => "partial",
    };
    let manifest = SweepManifest {
        version: VERSION.to_string(),
        seed: config.seed,
        kind: config.kind,
        family: family.name().to_string(),
        threads: threads_from_env(),
        started_unix,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        status: status.to_string(),
        cells: records,
        summary_file: SUMMARY_FILE.to_string(),
        config,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_atomic(&dir.join(MANIFEST_FILE), &text)?;
    Ok(manifest)
}
