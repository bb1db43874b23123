//! `kcm-lab`: command-line front end to the kcm-lab library.
//!
//! Every flag can also be given in a JSON config file passed with
//! `--config`. Keys are the flag names with `_` for `-`. Top-level keys
//! apply to every subcommand, and an object stored under the subcommand's
//! name overrides them. Flags override both.

use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use kcm_lab::bootstrap::{closure_free, closure_region, dump_closure, median_bootstrap_time, parse_sites};
use kcm_lab::directions::stable_directions;
use kcm_lab::duarte::{
    event_b1, event_b2, paper_scales, profile_json, run_droplet_algorithm, ColumnGeometry,
};
use kcm_lab::exact::{
    an_reachability, check_proxy_bound, east_barrier, mean_hitting, spectral_gap, GeneratorOperator,
    TestFunctionTable, GAP_TOLERANCE, GENERATOR_CAP, REACH_BUDGET,
};
use kcm_lab::harness::{
    csv_header_line, estimate_uparrow_density, fit_scaling, fit_summary_file, run_sweep, threads_from_env,
    ExperimentConfig, FitReport, MAX_CENSORED_FRACTION, PREDICTORS,
};
use kcm_lab::kcm::{batch, default_exterior, kcm_box, results_csv, SimParams};
use kcm_lab::lattice::{sample_bernoulli, BoundaryCondition, Configuration, Exterior, Region};
use kcm_lab::UpdateFamily;

#[derive(Parser)]
#[command(name = "kcm-lab", version, about = "Bootstrap percolation and kinetically constrained models on Z^2")]
struct Cli {
    /// JSON file with default values for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stable directions and class of an update family.
    Classify(ClassifyArgs),
    /// Bootstrap closure of a set of sites.
    BootstrapClose(CloseArgs),
    /// Median bootstrap infection time of the origin.
    BootstrapTime(BootstrapTimeArgs),
    /// Monte Carlo hitting or persistence times of the KCM on a box.
    KcmRun(KcmArgs),
    /// Spectral gap and mean hitting time by exact linear algebra.
    Exact(ExactArgs),
    /// Energy barrier of the East chain.
    EastBarrier(BarrierArgs),
    /// Capped-empties reachability of the origin in a centred square.
    AnReach(AnArgs),
    /// Droplet algorithm, arrow profile and events on the column region V.
    DuartePhi(PhiArgs),
    /// Parameter sweep driven by an experiment config.
    Sweep(SweepArgs),
    /// Scaling-law fits of sweep medians.
    Fit(FitArgs),
}

/// Flags omitted on the command line are not serialized, so they do not
/// mask config values.
macro_rules! options {
    ($(#[$m:meta])* struct $name:ident { $($(#[$fm:meta])* $field:ident : $ty:ty,)* }) => {
        $(#[$m])*
        #[derive(Args, Serialize, Deserialize, Default, Clone)]
        struct $name {
            $(
                $(#[$fm])*
                #[serde(default, skip_serializing_if = "Option::is_none")]
                $field: Option<$ty>,
            )*
        }
    };
}

options! {
    struct ClassifyArgs {
        /// Built-in name (east1d, east2d, duarte) or family file.
        #[arg(long)]
        family: String,
    }
}

options! {
    struct CloseArgs {
        #[arg(long)]
        family: String,
        /// File of `x,y` lines; `-` reads standard input.
        #[arg(long)]
        sites: PathBuf,
        /// Close inside the square `[-B, B]²` instead of the whole plane.
        #[arg(long = "box")]
        #[serde(rename = "box")]
        box_half: u32,
        /// Boundary of the square: healthy, infected or mixed (∥ healthy, ⊥ infected).
        #[arg(long)]
        boundary: String,
        /// Window radius cap for the free closure.
        #[arg(long)]
        cap: u32,
        /// Write the closure here instead of standard output.
        #[arg(long)]
        out: PathBuf,
    }
}

options! {
    struct BootstrapTimeArgs {
        #[arg(long)]
        family: String,
        #[arg(long)]
        q: f64,
        /// Half-width of the centred square.
        #[arg(long = "box")]
        #[serde(rename = "box")]
        box_half: u32,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// Per-trial CSV.
        #[arg(long)]
        out: PathBuf,
    }
}

options! {
    struct KcmArgs {
        #[arg(long)]
        family: String,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        t_max: f64,
        #[arg(long)]
        seed: u64,
        /// Measure the first legal update at the origin instead of `τ₀`.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        persistence: bool,
        /// Per-trial CSV; standard output when absent.
        #[arg(long)]
        out: PathBuf,
    }
}

options! {
    struct ExactArgs {
        #[arg(long)]
        family: String,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
        /// Also check the proxy bound for the no-empties indicator of the box.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        proxy: bool,
        #[arg(long)]
        out: PathBuf,
    }
}

options! {
    struct BarrierArgs {
        #[arg(long)]
        ell: u32,
        #[arg(long)]
        budget: usize,
    }
}

options! {
    struct AnArgs {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        kappa: u32,
        #[arg(long)]
        budget: usize,
    }
}

options! {
    struct PhiArgs {
        /// Number of columns.
        #[arg(long = "columns", visible_alias = "N")]
        #[serde(rename = "columns")]
        n: usize,
        /// Droplet length.
        #[arg(long)]
        ell: usize,
        /// Sample `ω` with this empty density.
        #[arg(long)]
        q: f64,
        #[arg(long)]
        seed: u64,
        /// Read `ω` from an `x,y,value` CSV on V instead of sampling.
        #[arg(long)]
        input: PathBuf,
        /// Threshold for `B₁`.
        #[arg(long)]
        n1: usize,
        /// Threshold for `B₂`.
        #[arg(long)]
        n2: usize,
        /// Report the formula scales for `(q, ε)`.
        #[arg(long)]
        epsilon: f64,
        /// Estimate the up-arrow density over this many samples.
        #[arg(long)]
        density_trials: usize,
    }
}

options! {
    struct SweepArgs {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        family: String,
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<u32>,
        #[arg(long)]
        height: u32,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        t_max: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        persistence: bool,
        #[arg(long)]
        output_dir: PathBuf,
    }
}

options! {
    struct FitArgs {
        /// A sweep summary table.
        #[arg(long)]
        input: PathBuf,
        /// Inline `q:time` pairs separated by commas.
        #[arg(long, value_delimiter = ',')]
        points: Vec<String>,
        #[arg(long)]
        max_censored: f64,
        /// Print `x ln(time)` columns for this predictor instead of the report.
        #[arg(long)]
        columns: String,
    }
}

/// Config values for `section`: the top level overlaid with the section.
fn config_map(path: Option<&Path>, section: &str) -> Result<Map<String, Value>> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let Value::Object(top) = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    else {
        bail!("config {} is not a JSON object", path.display());
    };
    let mut out: Map<String, Value> = top
        .iter()
        .filter(|(_, v)| !v.is_object())
        .map(|(k, v)| (k.replace('-', "_"), v.clone()))
        .collect();
    if let Some(Value::Object(sec)) = top.get(section) {
        out.extend(sec.iter().map(|(k, v)| (k.replace('-', "_"), v.clone())));
    }
    Ok(out)
}

/// Flags layered over the config.
fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>, section: &str) -> Result<T> {
    let mut map = config_map(config, section)?;
    if let Value::Object(given) = serde_json::to_value(flags)? {
        map.extend(given);
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| anyhow!("config for {section}: {e}"))
}

fn need<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| anyhow!("missing --{}", name.replace('_', "-")))
}

/// Writes to stdout; a reader that closed the pipe early is not an error.
fn emit(text: &str) -> Result<()> {
    use std::io::Write as _;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r.context("writing to stdout"),
    }
}

fn print_json(v: &impl Serialize) -> Result<()> {
    emit(&(serde_json::to_string_pretty(v)? + "\n"))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => emit(text),
    }
}

fn family(name: Option<String>) -> Result<UpdateFamily> {
    Ok(UpdateFamily::resolve(&need(name, "family")?)?)
}

/// Default height: a chain for `east1d`, a square otherwise.
fn box_region(family: &UpdateFamily, width: Option<u32>, height: Option<u32>, default_width: u32) -> Result<Region> {
    let width = width.unwrap_or(default_width);
    let height = height.unwrap_or(if family.name() == "east1d" { 1 } else { width });
    Ok(kcm_box(width, height)?)
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let f = family(a.family)?;
    let report = stable_directions(&f);
    print_json(&json!({
        "family": f.name(),
        "rules": serde_json::from_str::<Value>(&f.to_json())?["rules"],
        "classification": report.classification,
        "full_circle": report.full_circle,
        "arcs": report.arcs,
    }))
}

fn bootstrap_close(a: CloseArgs) -> Result<()> {
    let f = family(a.family)?;
    let sites_path = need(a.sites, "sites")?;
    let text = if sites_path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(&sites_path).with_context(|| format!("reading {}", sites_path.display()))?
    };
    let y = parse_sites(&text)?;
    let result = match a.box_half {
        Some(half) => {
            let region = Arc::new(Region::centered_square(half)?);
            let tau = match a.boundary.as_deref().unwrap_or("healthy") {
                "healthy" => BoundaryCondition::uniform(&region, 1),
                "infected" => BoundaryCondition::uniform(&region, 0),
                "mixed" => BoundaryCondition::split(&region, 1, 0),
                other => bail!("unknown boundary `{other}`"),
            };
            closure_region(&f, &region, &Exterior::Boundary(tau), &y)?
        }
        None => closure_free(&f, &y, a.cap.unwrap_or(64))?,
    };
    write_or_print(a.out.as_deref(), &dump_closure(&result.closed))?;
    eprintln!(
        "{}",
        json!({"sites": result.closed.len(), "rounds": result.rounds, "touched_cap": result.touched_cap})
    );
    Ok(())
}

fn bootstrap_time(a: BootstrapTimeArgs) -> Result<()> {
    let f = family(a.family)?;
    let (q, seed) = (need(a.q, "q")?, a.seed.unwrap_or(0));
    let s = median_bootstrap_time(&f, q, a.box_half.unwrap_or(64), a.trials.unwrap_or(100), seed)?;
    if let Some(out) = &a.out {
        let mut csv = csv_header_line(seed) + "trial,time,censored\n";
        for (t, v) in s.times.iter().enumerate() {
            let shown = v.map_or("inf".into(), |v| v.to_string());
            csv += &format!("{t},{shown},{}\n", u8::from(v.is_none()));
        }
        std::fs::write(out, csv)?;
    }
    print_json(&json!({
        "family": f.name(),
        "q": q,
        "trials": s.times.len(),
        "median": s.median,
        "lower_quartile": s.lower_quartile,
        "upper_quartile": s.upper_quartile,
        "censored": s.censored,
    }))
}

fn kcm_run(a: KcmArgs) -> Result<()> {
    let f = family(a.family)?;
    let region = Arc::new(box_region(&f, a.width, a.height, 8)?);
    let params = SimParams {
        q: need(a.q, "q")?,
        exterior: default_exterior(&f, &region),
        family: f,
        region,
        t_max: a.t_max.unwrap_or(1e4),
        seed: a.seed.unwrap_or(0),
        trial: 0,
    };
    let s = batch(&params, a.trials.unwrap_or(100), a.persistence.unwrap_or(false))?;
    write_or_print(a.out.as_deref(), &results_csv(&params, &s.results))?;
    eprintln!(
        "{}",
        json!({"mean": s.mean, "standard_error": s.standard_error, "median": s.median,
               "censored_fraction": s.censored_fraction})
    );
    Ok(())
}

fn exact(a: ExactArgs) -> Result<()> {
    let f = family(a.family)?;
    let q = need(a.q, "q")?;
    let region = box_region(&f, a.width, a.height, 4)?;
    let exterior = default_exterior(&f, &region);
    let gen = GeneratorOperator::build(&f, &region, &exterior, q, GENERATOR_CAP)?.ergodic_component();
    let gap = spectral_gap(&gen, GAP_TOLERANCE)?;
    let hit = mean_hitting(&gen)?;
    let mut report = json!({
        "family": f.name(),
        "q": q,
        "sites": region.len(),
        "states": gen.dim(),
        "gap": gap.gap,
        "t_rel": gap.t_rel,
        "e_mu_tau0": hit.e_mu,
        "ratio_check": q * hit.e_mu <= gap.t_rel,
        "residuals": {"gap": gap.residual, "hitting": hit.residual},
    });
    if a.proxy.unwrap_or(false) {
        let window: Vec<usize> = (0..region.len()).collect();
        let phi = TestFunctionTable::no_empties(&gen, &window);
        report["proxy"] = serde_json::to_value(check_proxy_bound(&gen, &phi, hit.e_mu, &[])?)?;
    }
    write_or_print(a.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))
}

fn an_reach(a: AnArgs) -> Result<()> {
    let f = family(a.family)?;
    let r = an_reachability(&f, need(a.n, "n")?, a.kappa.unwrap_or(1), a.budget.unwrap_or(REACH_BUDGET))?;
    print_json(&r)
}

fn duarte_phi(a: PhiArgs) -> Result<()> {
    let n = need(a.n, "columns")?;
    let ell = need(a.ell, "ell")?;
    let geom = ColumnGeometry::new(n)?;
    let omega = match (&a.input, a.q) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Configuration::from_csv(&text, Exterior::AllHealthy)?
        }
        (None, Some(q)) => sample_bernoulli(geom.region().clone(), q, a.seed.unwrap_or(0), 0, Exterior::AllHealthy)?,
        (None, None) => bail!("give either --input or --q"),
    };
    let profile = run_droplet_algorithm(&omega, &geom, ell)?;
    let b1 = a.n1.map(|n1| event_b1(&profile, n1));
    let witness = a.n2.and_then(|n2| event_b2(omega.bits(), &profile, &geom, n2));
    let mut out = profile_json(&geom, ell, &profile, b1, witness.as_ref());
    if a.n2.is_some() {
        out["b2_holds"] = json!(witness.is_some());
    }
    if let (Some(q), Some(eps)) = (a.q, a.epsilon) {
        out["scales"] = serde_json::to_value(paper_scales(q, eps)?)?;
    }
    if let (Some(q), Some(trials)) = (a.q, a.density_trials) {
        let d = estimate_uparrow_density(q, n, ell, (1, n), trials, a.seed.unwrap_or(0))?;
        out["density"] = serde_json::to_value(d)?;
    }
    print_json(&out)
}

fn sweep(a: SweepArgs, config: Option<&Path>) -> Result<()> {
    let merged = merge(&a, config, "sweep")?;
    let cfg = ExperimentConfig::from_json(&serde_json::to_string(&merged)?)?;
    let m = run_sweep(&cfg)?;
    let failures: Vec<_> = m.cells.iter().filter(|c| c.status != "ok").collect();
    print_json(&json!({
        "status": m.status,
        "output_dir": cfg.output_dir,
        "cells": m.cells.len(),
        "failed": failures.iter().map(|c| json!({"q": c.q, "size": c.size, "error": c.error})).collect::<Vec<_>>(),
        "wall_clock_seconds": m.wall_clock_seconds,
    }))?;
    if !m.is_complete() {
        bail!("sweep {}", m.status);
    }
    Ok(())
}

fn parse_points(points: &[String]) -> Result<Vec<(f64, f64)>> {
    points
        .iter()
        .map(|p| {
            let (q, t) = p.split_once(':').ok_or_else(|| anyhow!("point `{p}` is not q:time"))?;
            Ok((q.trim().parse()?, t.trim().parse()?))
        })
        .collect()
}

fn fit(a: FitArgs) -> Result<()> {
    let max_censored = a.max_censored.unwrap_or(MAX_CENSORED_FRACTION);
    let (report, points): (FitReport, Vec<(f64, f64)>) = match (&a.input, &a.points) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            let rows = kcm_lab::harness::parse_summary(&text)?;
            let pts = rows
                .iter()
                .filter(|r| r.status == "ok" && r.censored_fraction <= max_censored)
                .filter_map(|r| r.time.map(|t| (r.q, t)))
                .collect();
            (fit_summary_file(path, max_censored)?, pts)
        }
        (None, Some(points)) => {
            let pts = parse_points(points)?;
            (fit_scaling(&pts)?, pts)
        }
        (None, None) => bail!("give either --input or --points"),
    };
    if let Some(name) = &a.columns {
        let (_, f) = PREDICTORS
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| anyhow!("unknown predictor `{name}`"))?;
        let mut text = String::new();
        for (q, t) in points.iter().filter(|p| p.1 > 0.0 && p.1.is_finite()) {
            text += &format!("{} {}\n", f(*q), t.ln());
        }
        return emit(&text);
    }
    print_json(&report)
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Classify(a) => classify(merge(&a, config, "classify")?),
        Command::BootstrapClose(a) => bootstrap_close(merge(&a, config, "bootstrap_close")?),
        Command::BootstrapTime(a) => bootstrap_time(merge(&a, config, "bootstrap_time")?),
        Command::KcmRun(a) => kcm_run(merge(&a, config, "kcm_run")?),
        Command::Exact(a) => exact(merge(&a, config, "exact")?),
        Command::EastBarrier(a) => {
            let a = merge(&a, config, "east_barrier")?;
            print_json(&east_barrier(need(a.ell, "ell")?, a.budget.unwrap_or(REACH_BUDGET))?)
        }
        Command::AnReach(a) => an_reach(merge(&a, config, "an_reach")?),
        Command::DuartePhi(a) => duarte_phi(merge(&a, config, "duarte_phi")?),
        Command::Sweep(a) => sweep(a, config),
        Command::Fit(a) => fit(merge(&a, config, "fit")?),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = threads_from_env() {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    run(cli)
}
