//! RDF of sampled CT WSCS sources: exact for synchronous sampling,
//! tail-limsup estimate of `R_n(D)` for asynchronous sampling, and the
//! parameter sweeps built on both.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fraction::{
    classify_sampling, decimal_to_rational, rational_approx, Rational, SamplingClass, SymbolicFraction,
    DEFAULT_DENOMINATOR_CAP,
};
use crate::variance::{dt_variance_period, CtVarianceProfile, DtVariancePeriod, SamplingSpec};
use crate::waterfill::{solve_reverse_waterfill, WaterfillSolution, DEFAULT_TOLERANCE};

/// Inclusive range of `n` over which the limit superior is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TailWindow {
    pub lo: u64,
    pub hi: u64,
}

impl TailWindow {
    pub fn new(lo: u64, hi: u64) -> Result<Self> {
        if lo == 0 || lo > hi {
            return Err(Error::Config(format!("tail window [{lo}, {hi}] must satisfy 1 <= lo <= hi")));
        }
        Ok(TailWindow { lo, hi })
    }

    fn range(&self) -> RangeInclusive<u64> {
        self.lo..=self.hi
    }
}

impl Default for TailWindow {
    fn default() -> Self {
        TailWindow { lo: 230, hi: 500 }
    }
}

/// Knobs shared by every evaluation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalSettings {
    /// `eps = u/v` with `v` above this is evaluated asynchronously.
    pub denominator_cap: u64,
    pub tail: TailWindow,
    pub tolerance: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            denominator_cap: DEFAULT_DENOMINATOR_CAP,
            tail: TailWindow::default(),
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Variances and water-filling solution of one synchronous evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynchronousPoint {
    pub eps: Rational,
    pub period: u64,
    pub variances: DtVariancePeriod,
    pub solution: WaterfillSolution,
}

/// Water-fills one DT period of the source sampled at `T_ps / (p + eps)`.
pub fn synchronous_point(
    profile: &CtVarianceProfile,
    spec: &SamplingSpec,
    eps: Rational,
    d: f64,
    tolerance: f64,
) -> Result<SynchronousPoint> {
    let variances = dt_variance_period(profile, spec, eps)?;
    let solution = solve_reverse_waterfill(&variances, d, tolerance)?;
    Ok(SynchronousPoint { eps, period: eps.period(spec.p()), variances, solution })
}

/// RDF in bits/sample for synchronous sampling with `eps = u/v`.
pub fn rdf_synchronous(profile: &CtVarianceProfile, spec: &SamplingSpec, eps: Rational, d: f64) -> Result<f64> {
    Ok(synchronous_point(profile, spec, eps, d, DEFAULT_TOLERANCE)?.solution.rate_bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesEntry {
    pub n: u64,
    pub eps_n: Rational,
    pub p_n: u64,
    pub rate_bits: f64,
    pub theta: f64,
}

/// The sequence `R_n(D)` and its tail-window limsup estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdfSeries {
    pub entries: Vec<SeriesEntry>,
    pub tail_window: TailWindow,
    /// Maximum of `R_n(D)` over the tail window.
    pub limsup_estimate: f64,
    /// `n` attaining the maximum (smallest such `n`).
    pub limsup_n: u64,
    /// Max minus min of `R_n(D)` over the tail window.
    pub tail_spread: f64,
    /// False when `D >= min_t sigma^2_Sc(t)`: the per-n values are still
    /// well defined, but the limsup no longer characterizes the RDF.
    pub low_distortion_regime: bool,
}

impl RdfSeries {
    pub fn tail(&self) -> impl Iterator<Item = &SeriesEntry> {
        let w = self.tail_window;
        self.entries.iter().filter(move |e| (w.lo..=w.hi).contains(&e.n))
    }
}

fn series_entry(
    profile: &CtVarianceProfile,
    spec: &SamplingSpec,
    d: f64,
    n: u64,
    tolerance: f64,
) -> Result<SeriesEntry> {
    let approx = rational_approx(spec.eps(), n, spec.p())?;
    let point = synchronous_point(profile, spec, approx.eps_n, d, tolerance)?;
    debug_assert_eq!(point.period, approx.p_n * approx.eps_n.den() / n);
    Ok(SeriesEntry {
        n,
        eps_n: approx.eps_n,
        p_n: approx.p_n,
        rate_bits: point.solution.rate_bits,
        theta: point.solution.theta,
    })
}

fn entries_over(
    profile: &CtVarianceProfile,
    spec: &SamplingSpec,
    d: f64,
    ns: RangeInclusive<u64>,
    tolerance: f64,
) -> Result<Vec<SeriesEntry>> {
    ns.into_par_iter()
        .map(|n| series_entry(profile, spec, d, n, tolerance))
        .collect()
}

fn summarize(entries: Vec<SeriesEntry>, tail: TailWindow, low_distortion_regime: bool) -> Result<RdfSeries> {
    let mut best: Option<&SeriesEntry> = None;
    let mut min = f64::INFINITY;
    for e in entries.iter().filter(|e| tail.range().contains(&e.n)) {
        if best.is_none_or(|b| e.rate_bits > b.rate_bits) {
            best = Some(e);
        }
        min = min.min(e.rate_bits);
    }
    let best = *best.ok_or_else(|| Error::Domain(format!("no entries in tail window [{}, {}]", tail.lo, tail.hi)))?;
    Ok(RdfSeries {
        tail_window: tail,
        limsup_estimate: best.rate_bits,
        limsup_n: best.n,
        tail_spread: best.rate_bits - min,
        low_distortion_regime,
        entries,
    })
}

fn check_low_distortion(profile: &CtVarianceProfile, d: f64) -> bool {
    let ok = d < profile.min_variance();
    if !ok {
        log::debug!(
            "D = {d} >= min CT variance {}; the tail limsup is outside its low-distortion validity",
            profile.min_variance()
        );
    }
    ok
}

/// Computes `R_n(D)` for `n = 1..=n_max` using `eps_n = floor(n eps)/n`
/// and estimates the limit superior as the maximum over `tail`.
pub fn rdf_series(
    profile: &CtVarianceProfile,
    spec: &SamplingSpec,
    d: f64,
    n_max: u64,
    tail: TailWindow,
) -> Result<RdfSeries> {
    if n_max < tail.hi {
        return Err(Error::Config(format!("n_max = {n_max} is below the tail window end {}", tail.hi)));
    }
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Domain(format!("distortion D = {d} must be positive and finite")));
    }
    let low = check_low_distortion(profile, d);
    let entries = entries_over(profile, spec, d, 1..=n_max, DEFAULT_TOLERANCE)?;
    summarize(entries, tail, low)
}

/// Like [`rdf_series`] but only evaluates `n` inside the tail window.
pub fn rdf_tail(
    profile: &CtVarianceProfile,
    spec: &SamplingSpec,
    d: f64,
    settings: &EvalSettings,
) -> Result<RdfSeries> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Domain(format!("distortion D = {d} must be positive and finite")));
    }
    let low = check_low_distortion(profile, d);
    let entries = entries_over(profile, spec, d, settings.tail.range(), settings.tolerance)?;
    summarize(entries, settings.tail, low)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sync,
    Async,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Sync => "sync",
            Mode::Async => "async",
        }
    }
}

/// Everything needed to recompute one rate: the synchronous `eps_n` and
/// period that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointMeta {
    pub p: u64,
    pub eps: SymbolicFraction,
    /// `n` of the entry that attained the tail maximum (async only).
    pub n: Option<u64>,
    pub eps_n: Rational,
    pub p_n: u64,
    pub theta: f64,
    pub d: f64,
}

/// Rate of one `(profile, spec, D)` configuration, computed exactly or as
/// a tail limsup depending on how `eps` classifies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub rate_bits: f64,
    pub mode: Mode,
    pub meta: PointMeta,
    /// Tail spread for async points, zero for sync points.
    pub tail_spread: f64,
}

/// Classifies `spec.eps()` against `settings.denominator_cap` and returns
/// the synchronous RDF or the tail-limsup estimate.
pub fn evaluate(
    profile: &CtVarianceProfile,
    spec: &SamplingSpec,
    d: f64,
    settings: &EvalSettings,
) -> Result<Evaluation> {
    match classify_sampling(spec.eps(), settings.denominator_cap) {
        SamplingClass::Synchronous(eps) => {
            let point = synchronous_point(profile, spec, eps, d, settings.tolerance)?;
            Ok(Evaluation {
                rate_bits: point.solution.rate_bits,
                mode: Mode::Sync,
                meta: PointMeta {
                    p: spec.p(),
                    eps: *spec.eps(),
                    n: None,
                    eps_n: eps,
                    p_n: point.period,
                    theta: point.solution.theta,
                    d,
                },
                tail_spread: 0.0,
            })
        }
        SamplingClass::Asynchronous => {
            let series = rdf_tail(profile, spec, d, settings)?;
            let best = series
                .entries
                .iter()
                .find(|e| e.n == series.limsup_n)
                .copied()
                .ok_or_else(|| Error::Internal("limsup entry missing from series".into()))?;
            Ok(Evaluation {
                rate_bits: series.limsup_estimate,
                mode: Mode::Async,
                meta: PointMeta {
                    p: spec.p(),
                    eps: *spec.eps(),
                    n: Some(best.n),
                    eps_n: best.eps_n,
                    p_n: best.p_n,
                    theta: best.theta,
                    d,
                },
                tail_spread: series.tail_spread,
            })
        }
    }
}

/// Recomputes the rate recorded in `meta` from scratch.
pub fn reproduce_point(profile: &CtVarianceProfile, offset_abs: f64, meta: &PointMeta, tolerance: f64) -> Result<f64> {
    let spec = SamplingSpec::new(meta.p, meta.eps, offset_abs)?;
    Ok(synchronous_point(profile, &spec, meta.eps_n, meta.d, tolerance)?.solution.rate_bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    N,
    Ratio,
    Distortion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub x: f64,
    pub rate_bits: f64,
    pub mode: Mode,
    pub meta: PointMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

/// Splits `T_ps / T_s` into `p = floor(ratio)` and `eps = frac(ratio)`.
/// The ratio is read as its shortest decimal, so `2.26` gives `eps = 13/50`.
pub fn split_ratio(ratio: f64) -> Result<(u64, SymbolicFraction)> {
    if !(ratio.is_finite() && ratio >= 1.0) {
        return Err(Error::Domain(format!("ratio T_ps/T_s = {ratio} must be >= 1")));
    }
    match decimal_to_rational(ratio) {
        Some(r) => {
            let p = r.num() / r.den();
            Ok((p, SymbolicFraction::rational(r.num() - p * r.den(), r.den())?))
        }
        None => {
            let p = ratio.floor();
            Ok((p as u64, SymbolicFraction::decimal(ratio - p)?))
        }
    }
}

/// Evenly spaced ratio grid `start, start + step, ..., <= stop`, built
/// from integer multiples so each point prints as a short decimal.
pub fn ratio_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0 && stop >= start) {
        return Err(Error::Config(format!("invalid grid start={start} stop={stop} step={step}")));
    }
    let scale = decimal_to_rational(step).map_or(1e12, |r| r.den() as f64);
    let (a, b, s) = ((start * scale).round(), (stop * scale).round(), (step * scale).round());
    let count = ((b - a) / s).floor() as u64;
    Ok((0..=count).map(|i| (a + i as f64 * s) / scale).collect())
}

/// RDF against `T_ps / T_s` over `ratios`. Ratios whose fractional part
/// has denominator within the cap are computed exactly; the rest through
/// the tail limsup.
pub fn sweep_ratio(
    profile: &CtVarianceProfile,
    ratios: &[f64],
    d: f64,
    offset_abs: f64,
    settings: &EvalSettings,
) -> Result<SweepResult> {
    let mut points: Vec<SweepPoint> = ratios
        .par_iter()
        .map(|&x| {
            if x <= 1.0 {
                return Err(Error::Domain(format!("ratio {x} must exceed 1")));
            }
            let (p, eps) = split_ratio(x)?;
            let spec = SamplingSpec::new(p, eps, offset_abs)?;
            let e = evaluate(profile, &spec, d, settings)?;
            Ok(SweepPoint { x, rate_bits: e.rate_bits, mode: e.mode, meta: e.meta })
        })
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(SweepResult { axis: SweepAxis::Ratio, points })
}

/// RDF against `D`, one curve per `eps` in `eps_list`. Points are ordered
/// by `D`, then by position in `eps_list`.
pub fn sweep_distortion(
    profile: &CtVarianceProfile,
    p: u64,
    offset_abs: f64,
    d_grid: &[f64],
    eps_list: &[SymbolicFraction],
    settings: &EvalSettings,
) -> Result<SweepResult> {
    if let Some(d) = d_grid.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(Error::Domain(format!("distortion D = {d} must be positive")));
    }
    let jobs: Vec<(usize, f64, SymbolicFraction)> = eps_list
        .iter()
        .enumerate()
        .flat_map(|(i, eps)| d_grid.iter().map(move |&d| (i, d, *eps)))
        .collect();
    let mut points: Vec<(usize, SweepPoint)> = jobs
        .par_iter()
        .map(|&(i, d, eps)| {
            let spec = SamplingSpec::new(p, eps, offset_abs)?;
            let e = evaluate(profile, &spec, d, settings)?;
            Ok((i, SweepPoint { x: d, rate_bits: e.rate_bits, mode: e.mode, meta: e.meta }))
        })
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.1.x.total_cmp(&b.1.x).then(a.0.cmp(&b.0)));
    Ok(SweepResult { axis: SweepAxis::Distortion, points: points.into_iter().map(|(_, p)| p).collect() })
}

/// `R_n(D)` against `n` as a sweep result.
pub fn sweep_n(series: &RdfSeries, spec: &SamplingSpec, d: f64) -> SweepResult {
    let points = series
        .entries
        .iter()
        .map(|e| SweepPoint {
            x: e.n as f64,
            rate_bits: e.rate_bits,
            mode: Mode::Sync,
            meta: PointMeta {
                p: spec.p(),
                eps: *spec.eps(),
                n: Some(e.n),
                eps_n: e.eps_n,
                p_n: e.p_n,
                theta: e.theta,
                d,
            },
        })
        .collect();
    SweepResult { axis: SweepAxis::N, points }
}

/// Rates of `(profile, D)` and of `(alpha^2 profile, alpha^2 D)`; the two
/// coincide.
pub fn scaling_check(
    profile: &CtVarianceProfile,
    spec: &SamplingSpec,
    d: f64,
    alpha: f64,
    settings: &EvalSettings,
) -> Result<(f64, f64)> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
    }
    let a2 = alpha * alpha;
    let original = evaluate(profile, spec, d, settings)?.rate_bits;
    let scaled = evaluate(&profile.scaled(a2)?, spec, a2 * d, settings)?.rate_bits;
    Ok((original, scaled))
}
