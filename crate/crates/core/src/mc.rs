//! Monte Carlo checks of the RDF-achieving backward channel
//! `S = S_hat + W`, with `S_hat ~ N(0, sigma^2_m - D_m)` and
//! `W ~ N(0, D_m)` independent, component `m = i mod N_p`.
//!
//! Each trial draws from its own ChaCha8 stream (selected by trial index),
//! so results do not depend on how trials are scheduled across threads.
//! Per-trial statistics are reduced in trial order with compensated sums.

use std::collections::BTreeMap;
use std::f64::consts::{LOG2_E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::compensated_sum;
use crate::variance::DtVariancePeriod;
use crate::waterfill::{solve_reverse_waterfill, WaterfillSolution, DEFAULT_TOLERANCE};

/// Identifier of the random stream construction, recorded in reports.
pub const RNG_ALGORITHM: &str =
    "chacha8 (rand_chacha 0.9, key=seed_from_u64(seed^tag), stream=trial); normal=ziggurat (rand_distr 0.5 StandardNormal)";

pub const DEFAULT_DELTA: f64 = 0.01;
pub const DEFAULT_BETA_GRID_POINTS: usize = 512;
const MIN_PLIMSUP_SAMPLES: usize = 100;
const MIN_UI_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy)]
enum Purpose {
    Distortion = 0x5111,
    Density = 0x5222,
    Integrability = 0x5333,
}

fn trial_rng(seed: u64, purpose: Purpose, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((purpose as u64) << 48));
    rng.set_stream(trial);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Source variances together with the water-filling solution that defines
/// the test channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackwardChannelSpec {
    variances: DtVariancePeriod,
    solution: WaterfillSolution,
    reproduction_variances: Vec<f64>,
}

impl BackwardChannelSpec {
    pub fn new(variances: DtVariancePeriod, solution: WaterfillSolution) -> Result<Self> {
        if solution.per_component_d.len() != variances.period() {
            return Err(Error::Domain(format!(
                "solution has {} components, variance period has {}",
                solution.per_component_d.len(),
                variances.period()
            )));
        }
        let reproduction_variances = variances
            .as_slice()
            .iter()
            .zip(&solution.per_component_d)
            .map(|(&s, &d)| s - d)
            .collect::<Vec<_>>();
        if let Some(m) = reproduction_variances.iter().position(|r| r.is_nan() || *r < 0.0) {
            return Err(Error::Internal(format!(
                "negative reproduction variance at component {m}: D_m exceeds sigma^2_m"
            )));
        }
        Ok(BackwardChannelSpec { variances, solution, reproduction_variances })
    }

    /// Water-fills `variances` at distortion `d` and builds the channel.
    pub fn from_distortion(variances: DtVariancePeriod, d: f64) -> Result<Self> {
        let solution = solve_reverse_waterfill(&variances, d, DEFAULT_TOLERANCE)?;
        Self::new(variances, solution)
    }

    pub fn variances(&self) -> &DtVariancePeriod {
        &self.variances
    }

    pub fn solution(&self) -> &WaterfillSolution {
        &self.solution
    }

    pub fn reproduction_variances(&self) -> &[f64] {
        &self.reproduction_variances
    }

    /// Draws `(m, S, S_hat)` for `i = 0..k`.
    fn draw<F: FnMut(usize, f64, f64)>(&self, k: u64, rng: &mut ChaCha8Rng, mut f: F) {
        let n_p = self.variances.period();
        let sd_hat: Vec<f64> = self.reproduction_variances.iter().map(|v| v.sqrt()).collect();
        let sd_w: Vec<f64> = self.solution.per_component_d.iter().map(|v| v.sqrt()).collect();
        for i in 0..k as usize {
            let m = i % n_p;
            let s_hat = sd_hat[m] * gaussian(rng);
            let w = sd_w[m] * gaussian(rng);
            f(m, s_hat + w, s_hat);
        }
    }
}

fn check_sizes(k: u64, trials: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("blocklength k must be >= 1".into()));
    }
    if trials == 0 {
        return Err(Error::Domain("trials must be >= 1".into()));
    }
    Ok(())
}

/// Sample mean and standard error of the mean.
fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionEstimate {
    pub k: u64,
    pub trials: usize,
    /// Mean over trials of `(1/k) sum_i (S[i] - S_hat[i])^2`.
    pub emp_mse: f64,
    pub std_err: f64,
    /// `3 * std_err`.
    pub half_width: f64,
    /// Empirical MSE restricted to each residue class `i mod N_p`.
    pub per_component_mse: Vec<f64>,
}

/// Empirical distortion of the backward channel.
pub fn simulate_backward_channel(
    spec: &BackwardChannelSpec,
    k: u64,
    trials: usize,
    seed: u64,
) -> Result<DistortionEstimate> {
    check_sizes(k, trials)?;
    let n_p = spec.variances.period();
    let per_trial: Vec<(f64, Vec<f64>, Vec<u64>, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, Purpose::Distortion, t);
            let mut sums = vec![0.0; n_p];
            let mut counts = vec![0u64; n_p];
            let mut errs = Vec::with_capacity(k as usize);
            spec.draw(k, &mut rng, |m, s, s_hat| {
                let e = (s - s_hat).powi(2);
                sums[m] += e;
                counts[m] += 1;
                errs.push(e);
            });
            let mse = compensated_sum(errs.iter().copied()) / k as f64;
            // within-trial standard error, used when only one trial is run
            let (_, se) = mean_and_std_err(&errs);
            (mse, sums, counts, se)
        })
        .collect();

    let mses: Vec<f64> = per_trial.iter().map(|t| t.0).collect();
    let (emp_mse, mut std_err) = mean_and_std_err(&mses);
    if trials == 1 {
        std_err = per_trial[0].3;
    }
    let per_component_mse = (0..n_p)
        .map(|m| {
            let total = compensated_sum(per_trial.iter().map(|t| t.1[m]));
            let count: u64 = per_trial.iter().map(|t| t.2[m]).sum();
            if count == 0 {
                f64::NAN
            } else {
                total / count as f64
            }
        })
        .collect();
    Ok(DistortionEstimate { k, trials, emp_mse, std_err, half_width: 3.0 * std_err, per_component_mse })
}

fn log2_normal_pdf(x: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).log2() - x * x / (2.0 * var) * LOG2_E
}

/// Realizations of the information density rate
/// `Z_k = (1/k) sum_i [log2 p_W(S[i] - S_hat[i]) - log2 p_S(S[i])]`.
///
/// Components with `D_m = sigma^2_m` have `S = W` and contribute exactly 0.
pub fn information_density_samples(
    spec: &BackwardChannelSpec,
    k: u64,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_sizes(k, trials)?;
    let sigma = spec.variances.as_slice();
    let dm = &spec.solution.per_component_d;
    let active: Vec<bool> = sigma.iter().zip(dm).map(|(s, d)| d < s).collect();
    Ok((0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, Purpose::Density, t);
            let mut terms = Vec::with_capacity(k as usize);
            spec.draw(k, &mut rng, |m, s, s_hat| {
                if active[m] {
                    terms.push(log2_normal_pdf(s - s_hat, dm[m]) - log2_normal_pdf(s, sigma[m]));
                }
            });
            compensated_sum(terms) / k as f64
        })
        .collect())
}

/// Finite-sample surrogate of the limit superior in probability: the
/// smallest grid `beta` with empirical `Pr(Z_k > beta) < delta` for every
/// provided `k` at or above the median `k`.
///
/// Without an explicit grid, 512 points spanning `[min Z, max Z]` are used.
pub fn empirical_plimsup(
    samples_by_k: &BTreeMap<u64, Vec<f64>>,
    delta: f64,
    beta_grid: Option<&[f64]>,
) -> Result<f64> {
    if samples_by_k.len() < 3 {
        return Err(Error::Diagnostic(format!(
            "need at least 3 distinct blocklengths, got {}",
            samples_by_k.len()
        )));
    }
    if let Some((k, s)) = samples_by_k.iter().find(|(_, s)| s.len() < MIN_PLIMSUP_SAMPLES) {
        return Err(Error::Diagnostic(format!(
            "blocklength {k} has {} samples, need at least {MIN_PLIMSUP_SAMPLES}",
            s.len()
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("tail probability delta = {delta} outside (0, 1)")));
    }
    if samples_by_k.values().flatten().any(|z| !z.is_finite()) {
        return Err(Error::Diagnostic("non-finite information density sample".into()));
    }

    let ks: Vec<u64> = samples_by_k.keys().copied().collect();
    let median_k = ks[ks.len() / 2];
    let mut batches: Vec<Vec<f64>> = samples_by_k.range(median_k..).map(|(_, s)| s.clone()).collect();
    for b in &mut batches {
        b.sort_by(f64::total_cmp);
    }

    let default_grid;
    let grid = match beta_grid {
        Some(g) if !g.is_empty() => g,
        Some(_) => return Err(Error::Domain("empty beta grid".into())),
        None => {
            let all = samples_by_k.values().flatten();
            let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
            let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
            let n = DEFAULT_BETA_GRID_POINTS;
            default_grid = (0..n)
                .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
                .collect::<Vec<_>>();
            &default_grid
        }
    };
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);

    let exceeds = |batch: &[f64], beta: f64| {
        let above = batch.len() - batch.partition_point(|z| *z <= beta);
        above as f64 / batch.len() as f64
    };
    grid.into_iter()
        .find(|&beta| batches.iter().all(|b| exceeds(b, beta) < delta))
        .ok_or_else(|| Error::Diagnostic("no grid point satisfies the tail condition".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UiPoint {
    pub k: u64,
    /// Estimate of `E{[(1/k) sum_i S[i]^2]^2}`.
    pub second_moment: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UiDiagnostic {
    pub per_k: Vec<UiPoint>,
    /// Largest second moment over `k`.
    pub max_second_moment: f64,
    /// `3 * (max sigma^2)^2`.
    pub bound: f64,
    /// Every `k` satisfies `second_moment <= bound + 3 * std_err`.
    pub within_bound: bool,
}

/// Estimates `E{d(S, 0)^2}` for each blocklength and compares it with the
/// l2 bound `3 sigma_max^4` that makes the distortion uniformly integrable.
pub fn uniform_integrability_diagnostic(
    variances: &DtVariancePeriod,
    k_list: &[u64],
    trials: usize,
    seed: u64,
) -> Result<UiDiagnostic> {
    if trials < MIN_UI_TRIALS {
        return Err(Error::Diagnostic(format!("need at least {MIN_UI_TRIALS} trials, got {trials}")));
    }
    if k_list.is_empty() || k_list.contains(&0) {
        return Err(Error::Domain("blocklength list must be non-empty and positive".into()));
    }
    let sd: Vec<f64> = variances.as_slice().iter().map(|v| v.sqrt()).collect();
    let n_p = sd.len();
    let bound = 3.0 * variances.max().powi(2);
    let per_k: Vec<UiPoint> = k_list
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let values: Vec<f64> = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(seed, Purpose::Integrability, ((j as u64) << 32) | t);
                    let energy = compensated_sum((0..k as usize).map(|i| (sd[i % n_p] * gaussian(&mut rng)).powi(2)));
                    (energy / k as f64).powi(2)
                })
                .collect();
            let (second_moment, std_err) = mean_and_std_err(&values);
            UiPoint { k, second_moment, std_err }
        })
        .collect();
    let max_second_moment = per_k.iter().map(|p| p.second_moment).fold(f64::NEG_INFINITY, f64::max);
    let within_bound = per_k.iter().all(|p| p.second_moment <= bound + 3.0 * p.std_err);
    Ok(UiDiagnostic { per_k, max_second_moment, bound, within_bound })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McConfig {
    pub k: u64,
    pub trials: usize,
    pub seed: u64,
    pub plimsup_ks: Vec<u64>,
    pub plimsup_trials: usize,
    pub delta: f64,
    pub ui_ks: Vec<u64>,
    pub ui_trials: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            k: 10_000,
            trials: 50,
            seed: 0,
            plimsup_ks: vec![1_000, 10_000, 100_000],
            plimsup_trials: 100,
            delta: DEFAULT_DELTA,
            ui_ks: vec![1, 10, 100, 1_000],
            ui_trials: 200,
        }
    }
}

/// Summary of one Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub k: u64,
    pub trials: usize,
    pub emp_mse: f64,
    /// Three standard errors of `emp_mse`.
    pub emp_mse_half_width: f64,
    pub target_d: f64,
    pub info_density_mean: f64,
    pub info_density_std: f64,
    pub info_density_std_err: f64,
    /// Water-filling rate the density mean should approach.
    pub rate_bits: f64,
    pub emp_plimsup: f64,
    pub plimsup_delta: f64,
    pub plimsup_ks: Vec<u64>,
    pub plimsup_kind: &'static str,
    pub ui_l2_bound: f64,
    pub ui_bound: f64,
    pub ui_within_bound: bool,
    pub rng_algorithm: &'static str,
    pub seed: u64,
}

/// Runs the distortion, information-density, p-limsup and uniform
/// integrability estimates for one channel.
pub fn run_monte_carlo(spec: &BackwardChannelSpec, config: &McConfig) -> Result<McReport> {
    let mse = simulate_backward_channel(spec, config.k, config.trials, config.seed)?;
    let z = information_density_samples(spec, config.k, config.trials, config.seed)?;
    let (info_density_mean, info_density_std_err) = mean_and_std_err(&z);
    let info_density_std = info_density_std_err * (z.len() as f64).sqrt();

    let mut by_k = BTreeMap::new();
    for &k in &config.plimsup_ks {
        let samples = information_density_samples(spec, k, config.plimsup_trials, config.seed.wrapping_add(k))?;
        by_k.insert(k, samples);
    }
    let emp_plimsup = empirical_plimsup(&by_k, config.delta, None)?;
    let ui = uniform_integrability_diagnostic(&spec.variances, &config.ui_ks, config.ui_trials, config.seed)?;

    Ok(McReport {
        k: config.k,
        trials: config.trials,
        emp_mse: mse.emp_mse,
        emp_mse_half_width: mse.half_width,
        target_d: spec.solution.achieved_d,
        info_density_mean,
        info_density_std,
        info_density_std_err,
        rate_bits: spec.solution.rate_bits,
        emp_plimsup,
        plimsup_delta: config.delta,
        plimsup_ks: config.plimsup_ks.clone(),
        plimsup_kind: "finite-sample surrogate: smallest grid beta with Pr(Z_k > beta) < delta for all k >= median k",
        ui_l2_bound: ui.max_second_moment,
        ui_bound: ui.bound,
        ui_within_bound: ui.within_bound,
        rng_algorithm: RNG_ALGORITHM,
        seed: config.seed,
    })
}
