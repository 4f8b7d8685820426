use std::env;

use serde::Serialize;
use wscs_rdf::mc::{run_monte_carlo, BackwardChannelSpec};
use wscs_rdf::rdf::{
    evaluate, ratio_grid, rdf_series, sweep_distortion, sweep_n, sweep_ratio, EvalSettings, Mode, SweepResult,
};
use wscs_rdf::{
    dt_variance_period, CtVarianceProfile, solve_reverse_waterfill, DtVariancePeriod, SamplingSpec, SymbolicFraction,
};

use crate::config::{ExperimentConfig, SweepKind};
use crate::error::CliError;
use crate::output::{json_bytes, num, write_atomic, Csv};
use crate::svg::{line_plot, Series};

pub const THREADS_ENV: &str = "WSCS_RDF_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    RdfPoint,
    SweepN,
    SweepRatio,
    SweepDistortion,
    Mc,
}

impl Subcommand {
    pub fn kind(self) -> SweepKind {
        match self {
            Subcommand::RdfPoint => SweepKind::Point,
            Subcommand::SweepN => SweepKind::N,
            Subcommand::SweepRatio => SweepKind::Ratio,
            Subcommand::SweepDistortion => SweepKind::Distortion,
            Subcommand::Mc => SweepKind::Mc,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::RdfPoint => "rdf-point",
            Subcommand::SweepN => "sweep-n",
            Subcommand::SweepRatio => "sweep-ratio",
            Subcommand::SweepDistortion => "sweep-distortion",
            Subcommand::Mc => "mc",
        }
    }
}

/// JSON envelope: the result's fields plus the resolved config.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'static str,
    #[serde(flatten)]
    result: &'a T,
    config: &'a ExperimentConfig,
}

/// Sizes the global rayon pool from `WSCS_RDF_THREADS` (unset or 0 = auto).
pub fn configure_threads() -> Result<(), CliError> {
    let n = match env::var(THREADS_ENV) {
        Err(_) => return Ok(()),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
    };
    if n > 0 {
        // Fails only if the pool was already built, e.g. by an earlier call.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::debug!("thread pool already configured: {e}");
        }
    }
    Ok(())
}

/// Runs one subcommand and returns the one-line summary.
pub fn execute(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<String, CliError> {
    if let Some(kind) = cfg.sweep.kind {
        if kind != cmd.kind() {
            return Err(CliError::Config(format!(
                "config sweep.kind {:?} does not match subcommand {}",
                kind,
                cmd.name()
            )));
        }
    }
    if matches!(cmd, Subcommand::RdfPoint | Subcommand::Mc) && cfg.output.csv.is_some() {
        return Err(CliError::Config(format!("{} writes JSON only; drop the CSV output", cmd.name())));
    }
    if cfg.variances.is_some() && !matches!(cmd, Subcommand::RdfPoint | Subcommand::Mc) {
        return Err(CliError::Config("`variances` is only used by rdf-point and mc".into()));
    }
    match cmd {
        Subcommand::RdfPoint => rdf_point(cfg),
        Subcommand::SweepN => run_sweep_n(cfg),
        Subcommand::SweepRatio => run_sweep_ratio(cfg),
        Subcommand::SweepDistortion => run_sweep_distortion(cfg),
        Subcommand::Mc => run_mc(cfg),
    }
}

fn settings(cfg: &ExperimentConfig, kind: SweepKind) -> Result<EvalSettings, CliError> {
    Ok(EvalSettings { denominator_cap: cfg.denominator_cap(kind), tail: cfg.tail()?, ..Default::default() })
}

fn warn_high_distortion(profile: &CtVarianceProfile, ds: &[f64]) {
    let min = profile.min_variance();
    let n = ds.iter().filter(|&&d| d >= min).count();
    if n > 0 {
        log::warn!("{n} distortion value(s) >= min CT variance {min}; asynchronous estimates there are outside the low-distortion regime");
    }
}

fn sampling(cfg: &ExperimentConfig) -> Result<SamplingSpec, CliError> {
    Ok(SamplingSpec::new(cfg.sampling.p, cfg.eps()?, cfg.sampling.offset_abs)?)
}

fn write_json<T: Serialize>(cmd: Subcommand, cfg: &ExperimentConfig, result: &T) -> Result<(), CliError> {
    if let Some(path) = &cfg.output.json {
        let env = Envelope { command: cmd.name(), result, config: cfg };
        write_atomic(path, &json_bytes(&env)?)?;
    }
    Ok(())
}

fn write_sweep(
    cmd: Subcommand,
    cfg: &ExperimentConfig,
    result: &SweepResult,
    csv: &Csv,
    plot: impl FnOnce() -> String,
) -> Result<(), CliError> {
    if let Some(path) = &cfg.output.csv {
        write_atomic(path, csv.as_bytes())?;
    }
    write_json(cmd, cfg, result)?;
    if let Some(path) = &cfg.output.svg {
        write_atomic(path, plot().as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PointReport {
    rate_bits: f64,
    mode: Mode,
    source: &'static str,
    p: Option<u64>,
    eps: Option<SymbolicFraction>,
    n: Option<u64>,
    eps_n: Option<String>,
    p_n: Option<u64>,
    theta: f64,
    d: f64,
    tail_spread: f64,
}

fn rdf_point(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let d = cfg.single_distortion()?;
    let report = match &cfg.variances {
        Some(v) => {
            let sol = solve_reverse_waterfill(&DtVariancePeriod::new(v.clone())?, d, wscs_rdf::waterfill::DEFAULT_TOLERANCE)?;
            PointReport {
                rate_bits: sol.rate_bits,
                mode: Mode::Sync,
                source: "variances",
                p: None,
                eps: None,
                n: None,
                eps_n: None,
                p_n: Some(v.len() as u64),
                theta: sol.theta,
                d,
                tail_spread: 0.0,
            }
        }
        None => {
            let profile = cfg.profile.build()?;
            warn_high_distortion(&profile, &[d]);
            let e = evaluate(&profile, &sampling(cfg)?, d, &settings(cfg, SweepKind::Point)?)?;
            PointReport {
                rate_bits: e.rate_bits,
                mode: e.mode,
                source: "profile",
                p: Some(e.meta.p),
                eps: Some(e.meta.eps),
                n: e.meta.n,
                eps_n: Some(e.meta.eps_n.to_string()),
                p_n: Some(e.meta.p_n),
                theta: e.meta.theta,
                d,
                tail_spread: e.tail_spread,
            }
        }
    };
    write_json(Subcommand::RdfPoint, cfg, &report)?;
    if let Some(path) = &cfg.output.svg {
        log::warn!("rdf-point has nothing to plot; ignoring svg output {}", path.display());
    }
    let extra = match report.n {
        Some(n) => format!(", limsup over n in tail attained at n = {n}"),
        None => String::new(),
    };
    Ok(format!(
        "rdf-point: R({d}) = {:.6} bits/sample ({}, period {}{extra})",
        report.rate_bits,
        report.mode.as_str(),
        report.p_n.unwrap_or(0)
    ))
}

fn run_sweep_n(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let d = cfg.single_distortion()?;
    let spec = sampling(cfg)?;
    let tail = cfg.tail_for_series()?;
    let profile = cfg.profile.build()?;
    warn_high_distortion(&profile, &[d]);
    let series = rdf_series(&profile, &spec, d, cfg.sweep.n_max, tail)?;
    let result = sweep_n(&series, &spec, d);

    let mut csv = Csv::new(&["n", "eps_n_num", "eps_n_den", "p_n", "rate_bits"]);
    for e in &series.entries {
        csv.row(&[
            e.n.to_string(),
            e.eps_n.num().to_string(),
            e.eps_n.den().to_string(),
            e.p_n.to_string(),
            num(e.rate_bits),
        ]);
    }
    #[derive(Serialize)]
    struct NReport<'a> {
        tail_window: [u64; 2],
        limsup_estimate: f64,
        limsup_n: u64,
        tail_spread: f64,
        low_distortion_regime: bool,
        #[serde(flatten)]
        sweep: &'a SweepResult,
    }
    let report = NReport {
        tail_window: [tail.lo, tail.hi],
        limsup_estimate: series.limsup_estimate,
        limsup_n: series.limsup_n,
        tail_spread: series.tail_spread,
        low_distortion_regime: series.low_distortion_regime,
        sweep: &result,
    };
    if let Some(path) = &cfg.output.csv {
        write_atomic(path, csv.as_bytes())?;
    }
    write_json(Subcommand::SweepN, cfg, &report)?;
    if let Some(path) = &cfg.output.svg {
        let pts = series.entries.iter().map(|e| (e.n as f64, e.rate_bits)).collect();
        let svg = line_plot(
            &format!("R_n(D) for eps = {}, D = {d}", spec.eps()),
            "n",
            "bits/sample",
            &[Series { name: "R_n(D)".into(), points: pts }],
        );
        write_atomic(path, svg.as_bytes())?;
    }
    Ok(format!(
        "sweep-n: {} rows, limsup R_n over n in [{}, {}] = {:.6} bits/sample (n = {}, tail spread {:.2e})",
        csv.rows(),
        tail.lo,
        tail.hi,
        series.limsup_estimate,
        series.limsup_n,
        series.tail_spread
    ))
}

fn run_sweep_ratio(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let d = cfg.single_distortion()?;
    let g = cfg.sweep.ratio;
    let ratios = ratio_grid(g.start, g.stop, g.step)?;
    let profile = cfg.profile.build()?;
    warn_high_distortion(&profile, &[d]);
    let result = sweep_ratio(
        &profile,
        &ratios,
        d,
        cfg.sampling.offset_abs,
        &settings(cfg, SweepKind::Ratio)?,
    )?;
    let mut csv = Csv::new(&["ratio", "p", "eps_expr", "mode", "rate_bits"]);
    for pt in &result.points {
        csv.row(&[
            num(pt.x),
            pt.meta.p.to_string(),
            pt.meta.eps.to_string(),
            pt.mode.as_str().to_string(),
            num(pt.rate_bits),
        ]);
    }
    write_sweep(Subcommand::SweepRatio, cfg, &result, &csv, || {
        let pts = result.points.iter().map(|p| (p.x, p.rate_bits)).collect();
        line_plot(
            &format!("R(D) vs T_ps/T_s, D = {d}"),
            "T_ps/T_s",
            "bits/sample",
            &[Series { name: "R(D)".into(), points: pts }],
        )
    })?;
    let n_sync = result.points.iter().filter(|p| p.mode == Mode::Sync).count();
    let (lo, hi) = min_max(result.points.iter().map(|p| p.rate_bits));
    Ok(format!(
        "sweep-ratio: {} points ({n_sync} sync, {} async), R in [{lo:.6}, {hi:.6}] bits/sample",
        result.points.len(),
        result.points.len() - n_sync
    ))
}

fn run_sweep_distortion(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let grid = cfg.distortion_grid()?;
    let eps_list = cfg.eps_list()?;
    let profile = cfg.profile.build()?;
    warn_high_distortion(&profile, &grid);
    let result = sweep_distortion(
        &profile,
        cfg.sampling.p,
        cfg.sampling.offset_abs,
        &grid,
        &eps_list,
        &settings(cfg, SweepKind::Distortion)?,
    )?;
    let mut csv = Csv::new(&["D", "eps_expr", "rate_bits"]);
    for pt in &result.points {
        csv.row(&[num(pt.x), pt.meta.eps.to_string(), num(pt.rate_bits)]);
    }
    write_sweep(Subcommand::SweepDistortion, cfg, &result, &csv, || {
        let series: Vec<Series> = eps_list
            .iter()
            .map(|eps| Series {
                name: format!("eps = {eps}"),
                points: result.points.iter().filter(|p| p.meta.eps == *eps).map(|p| (p.x, p.rate_bits)).collect(),
            })
            .collect();
        line_plot(&format!("R(D), p = {}", cfg.sampling.p), "D", "bits/sample", &series)
    })?;
    Ok(format!(
        "sweep-distortion: {} points ({} D values x {} eps values)",
        result.points.len(),
        grid.len(),
        eps_list.len()
    ))
}

fn run_mc(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let d = cfg.single_distortion()?;
    let variances = match &cfg.variances {
        Some(v) => DtVariancePeriod::new(v.clone())?,
        None => {
            let profile = cfg.profile.build()?;
            let spec = sampling(cfg)?;
            let e = evaluate(&profile, &spec, d, &settings(cfg, SweepKind::Mc)?)?;
            if e.mode == Mode::Async {
                log::info!("asynchronous eps; simulating the period of eps_n = {} (n = {:?})", e.meta.eps_n, e.meta.n);
            }
            dt_variance_period(&profile, &spec, e.meta.eps_n)?
        }
    };
    let channel = BackwardChannelSpec::from_distortion(variances, d)?;
    let report = run_monte_carlo(&channel, &cfg.sweep.mc.to_config(cfg.seed))?;
    write_json(Subcommand::Mc, cfg, &report)?;
    if let Some(path) = &cfg.output.svg {
        log::warn!("mc has nothing to plot; ignoring svg output {}", path.display());
    }
    Ok(format!(
        "mc: emp_mse = {:.6} +/- {:.2e} (target {}), mean Z_k = {:.6} vs R = {:.6} bits, p-limsup ~ {:.6}, UI within bound: {}",
        report.emp_mse,
        report.emp_mse_half_width,
        report.target_d,
        report.info_density_mean,
        report.rate_bits,
        report.emp_plimsup,
        report.ui_within_bound
    ))
}

fn min_max(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}
