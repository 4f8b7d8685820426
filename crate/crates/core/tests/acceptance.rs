//! Acceptance criteria. Each test prints one PASS/FAIL line; run with
//! `cargo test -p wscs-rdf --test acceptance -- --nocapture --test-threads=1`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wscs_rdf::mc::{information_density_samples, simulate_backward_channel, uniform_integrability_diagnostic};
use wscs_rdf::mc::BackwardChannelSpec;
use wscs_rdf::rdf::{evaluate, rdf_series, sweep_distortion, sweep_ratio, EvalSettings, Mode, TailWindow};
use wscs_rdf::{
    dt_variance_period, solve_reverse_waterfill, CtVarianceProfile, DtVariancePeriod, PulseParams, Rational,
    SamplingSpec, SymbolicFraction,
};

const T_PS: f64 = 5e-6;
const D: f64 = 0.18;

fn pulse(t_dc: f64, phi: f64) -> CtVarianceProfile {
    CtVarianceProfile::pulse(0.2, 4.8, PulseParams::new(t_dc, 0.01).unwrap(), T_PS, phi).unwrap()
}

fn pi_frac(a: i64, b: u64) -> SymbolicFraction {
    SymbolicFraction::irrational(a, b, 0, 1).unwrap()
}

fn report(id: &str, pass: bool, detail: String) -> bool {
    println!("criterion {id}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn criterion_1_ratio_2_5_sync_points() {
    let spec = SamplingSpec::new(2, SymbolicFraction::rational(1, 2).unwrap(), 0.0).unwrap();
    let settings = EvalSettings::default();
    let mut ok = true;
    for (phi, want) in [(0.0, 1.469), (1.0 / 16.0, 1.934)] {
        let start = Instant::now();
        let e = evaluate(&pulse(0.75, phi), &spec, D, &settings).unwrap();
        let took = start.elapsed();
        let pass = e.mode == Mode::Sync && (e.rate_bits - want).abs() <= 0.01 && took < Duration::from_secs(1);
        ok &= report(
            "1",
            pass,
            format!("phi={phi}: R={:.4} want {want}+-0.01, {:?} (< 1 s)", e.rate_bits, took),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_2_async_plateau() {
    let start = Instant::now();
    let tail = TailWindow::new(230, 500).unwrap();
    let mut ok = true;
    for eps in [pi_frac(1, 7), pi_frac(5, 32)] {
        let spec = SamplingSpec::new(2, eps, 0.0).unwrap();
        let mut rates = Vec::new();
        for phi in [0.0, 1.0 / 16.0] {
            let s = rdf_series(&pulse(0.75, phi), &spec, D, 500, tail).unwrap();
            let pass = (s.limsup_estimate - 1.85).abs() <= 0.02;
            ok &= report(
                "2",
                pass,
                format!(
                    "eps={eps} phi={phi}: limsup={:.4} (n={}) spread={:.4}, want 1.85+-0.02",
                    s.limsup_estimate, s.limsup_n, s.tail_spread
                ),
            );
            rates.push(s.limsup_estimate);
        }
        let diff = (rates[0] - rates[1]).abs();
        ok &= report("2", diff <= 0.03, format!("eps={eps}: |R(phi=0) - R(phi=1/16)| = {diff:.4} <= 0.03"));
    }
    let took = start.elapsed();
    ok &= report("2", took < Duration::from_secs(10), format!("runtime {took:?} < 10 s"));
    assert!(ok);
}

#[test]
fn criterion_3_sync_to_async_jump() {
    // Fractional parts with denominators up to 10 are synchronous; 2.26 = 2 + 13/50 and
    // 2.51 = 2 + 51/100 are evaluated as asynchronous.
    let settings = EvalSettings { denominator_cap: 10, ..Default::default() };
    let cases = [
        (0.75, 0.0, 2.25, Mode::Sync, 1.624, 0.01),
        (0.75, 0.0, 2.26, Mode::Async, 1.859, 0.02),
        (0.45, 1.0 / 16.0, 2.5, Mode::Sync, 1.005, 0.01),
        (0.45, 1.0 / 16.0, 2.51, Mode::Async, 1.154, 0.02),
    ];
    let mut ok = true;
    for (t_dc, phi, ratio, mode, want, tol) in cases {
        let r = sweep_ratio(&pulse(t_dc, phi), &[ratio], D, 0.0, &settings).unwrap();
        let pt = r.points[0];
        let pass = pt.mode == mode && (pt.rate_bits - want).abs() <= tol;
        ok &= report(
            "3",
            pass,
            format!(
                "t_dc={t_dc} phi={phi} ratio={ratio} ({}): R={:.4} want {want}+-{tol}",
                pt.mode.as_str(),
                pt.rate_bits
            ),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_4_distortion_sweep_deltas() {
    let settings = EvalSettings::default();
    let eps = [pi_frac(5, 32), SymbolicFraction::rational(1, 2).unwrap()];
    let mut ok = true;
    for (phi, want) in [(0.0, -20.0), (1.0 / 16.0, 4.0)] {
        let r = sweep_distortion(&pulse(0.75, phi), 2, 0.0, &[D], &eps, &settings).unwrap();
        let (r_async, r_sync) = (r.points[0], r.points[1]);
        assert_eq!((r_async.mode, r_sync.mode), (Mode::Async, Mode::Sync));
        let change = 100.0 * (r_sync.rate_bits - r_async.rate_bits) / r_async.rate_bits;
        let pass = (change - want).abs() <= 2.0;
        ok &= report(
            "4",
            pass,
            format!(
                "phi={phi}: 5pi/32 -> 1/2 changes R {:.4} -> {:.4} ({change:+.2}%), want {want:+}% +-2",
                r_async.rate_bits, r_sync.rate_bits
            ),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_5_early_n_band() {
    let spec = SamplingSpec::new(2, pi_frac(1, 7), 0.0).unwrap();
    let mut ok = true;
    for (phi, lo, hi) in [(0.0, 1.032, 1.143), (1.0 / 16.0, 1.071, 1.237)] {
        let s = rdf_series(&pulse(0.45, phi), &spec, D, 15, TailWindow::new(4, 15).unwrap()).unwrap();
        let band: Vec<f64> = s.tail().map(|e| e.rate_bits).collect();
        let min = band.iter().copied().fold(f64::INFINITY, f64::min);
        let max = band.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pass = min >= lo - 0.005 && max <= hi + 0.005;
        ok &= report(
            "5",
            pass,
            format!("phi={phi}: R_n for n in [4,15] spans [{min:.4}, {max:.4}], allowed [{lo}-0.005, {hi}+0.005]"),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_6_sine_variance_goldens() {
    let sine = CtVarianceProfile::sine(2.0, 0.5, 1.0, 0.0).unwrap();
    let ts = 1.0 / 3.0;
    let mut ok = true;
    for (offset, want, label) in [
        (0.0, [2.0, 2.433, 1.567], "offset 0"),
        (ts / (2.0 * std::f64::consts::PI), [2.155, 2.335, 1.510], "offset T_s/(2 pi)"),
    ] {
        let spec = SamplingSpec::new(3, SymbolicFraction::rational(0, 1).unwrap(), offset).unwrap();
        let dt = dt_variance_period(&sine, &spec, Rational::ZERO).unwrap();
        let err = dt.as_slice().iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
        ok &= report(
            "6",
            err <= 5e-4,
            format!("{label}: got {:.4?} want {want:?}, max err {err:.2e} (<= 5e-4)", dt.as_slice()),
        );
    }
    assert!(ok);
}

/// Water level by golden-section minimization of |distortion(theta) - D|,
/// written without reference to the library's solver.
fn golden_section_theta(v: &[f64], d: f64) -> f64 {
    let dist = |t: f64| v.iter().map(|s| s.min(t)).sum::<f64>() / v.len() as f64;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, v.iter().copied().fold(0.0, f64::max));
    for _ in 0..200 {
        let c = b - g * (b - a);
        let e = a + g * (b - a);
        if (dist(c) - d).abs() < (dist(e) - d).abs() {
            b = e;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn oracle_rate(v: &[f64], d: f64) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    if d >= mean {
        return 0.0;
    }
    let theta = golden_section_theta(v, d);
    v.iter().map(|s| (s / s.min(theta)).log2()).sum::<f64>() / (2.0 * v.len() as f64)
}

fn rate(v: &[f64], d: f64) -> f64 {
    solve_reverse_waterfill(&DtVariancePeriod::new(v.to_vec()).unwrap(), d, 1e-10).unwrap().rate_bits
}

#[test]
fn criterion_7_waterfill_property_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ok = true;

    let mut worst_theta = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=32);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        let max = v.iter().copied().fold(0.0, f64::max);
        let d = rng.random_range(1e-3..=1.0) * mean;
        let sol = solve_reverse_waterfill(&DtVariancePeriod::new(v.clone()).unwrap(), d, 1e-10).unwrap();
        if d < mean {
            let oracle = golden_section_theta(&v, d);
            worst_theta = worst_theta.max((sol.theta - oracle).abs() / max);
        }
    }
    ok &= report("7", worst_theta <= 1e-6, format!("bisection vs golden-section: max |dtheta|/max sigma^2 = {worst_theta:.2e}"));

    let mut mono = true;
    let mut convex = true;
    let mut scaling = 0.0f64;
    let mut perm = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=16);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        let grid: Vec<f64> = (1..=60).map(|i| mean * 1.1 * i as f64 / 60.0).collect();
        let r: Vec<f64> = grid.iter().map(|&d| rate(&v, d)).collect();
        mono &= r.windows(2).all(|w| w[1] <= w[0] + 1e-9);
        for i in 0..grid.len() {
            for j in (i + 2..grid.len()).step_by(2) {
                let mid = rate(&v, 0.5 * (grid[i] + grid[j]));
                convex &= mid <= 0.5 * (r[i] + r[j]) + 1e-9;
            }
        }
        let d = grid[20];
        for alpha in [0.5, 2.0, 10.0] {
            let a2: f64 = alpha * alpha;
            let scaled: Vec<f64> = v.iter().map(|s| s * a2).collect();
            scaling = scaling.max((rate(&scaled, a2 * d) - rate(&v, d)).abs());
        }
        let mut shuffled = v.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        perm = perm.max((rate(&shuffled, d) - rate(&v, d)).abs());
    }
    ok &= report("7", mono, "R(D) nonincreasing on grids".into());
    ok &= report("7", convex, "R(D) midpoint convex (+1e-9)".into());
    ok &= report("7", scaling <= 1e-9, format!("scaling invariance alpha in {{0.5,2,10}}: max diff {scaling:.2e}"));
    ok &= report("7", perm <= 1e-9, format!("permutation invariance: max diff {perm:.2e}"));

    // rate -> 0 continuously as D rises to the mean variance
    let v = [0.3, 1.0, 4.0, 2.2];
    let mean = v.iter().sum::<f64>() / 4.0;
    let near: Vec<f64> = [1e-2, 1e-4, 1e-6, 1e-8].iter().map(|h| rate(&v, mean * (1.0 - h))).collect();
    let continuous = near.windows(2).all(|w| w[1] < w[0]) && near[3] < 1e-6 && rate(&v, mean) == 0.0;
    ok &= report("7", continuous, format!(
            "zero-rate boundary: R(mean(1-h)) for h=1e-2..1e-8 = [{}]",
            near.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>().join(", ")
        ));

    let oracle_gap = (rate(&v, 0.9) - oracle_rate(&v, 0.9)).abs();
    ok &= report("7", oracle_gap <= 1e-6, format!("rate vs oracle rate at D=0.9: {oracle_gap:.2e}"));

    let took = start.elapsed();
    ok &= report("7", took < Duration::from_secs(30), format!("runtime {took:?} < 30 s"));
    assert!(ok);
}

#[test]
fn criterion_8_monte_carlo_fidelity() {
    let start = Instant::now();
    let variances = DtVariancePeriod::new(vec![1.0, 4.0]).unwrap();
    let ch = BackwardChannelSpec::from_distortion(variances.clone(), 1.0).unwrap();
    let seed = 2024;
    let mut ok = true;

    let est = simulate_backward_channel(&ch, 10_000, 50, seed).unwrap();
    ok &= report(
        "8",
        (est.emp_mse - 1.0).abs() <= 3.0 * est.std_err,
        format!("emp MSE {:.5} +- {:.5} (3 se) vs 1.0", est.emp_mse, 3.0 * est.std_err),
    );

    let z = information_density_samples(&ch, 10_000, 50, seed).unwrap();
    let (zm, zse) = mean_se(&z);
    let tol = (3.0 * zse).max(0.01);
    ok &= report("8", (zm - 0.5).abs() <= tol, format!("mean Z_k {zm:.5} vs 0.5, tol {tol:.4}"));

    let ui = uniform_integrability_diagnostic(&variances, &[1, 10, 100, 1_000, 10_000], 200, seed).unwrap();
    let ui_pass = ui.per_k.iter().all(|p| p.second_moment <= 48.0 + 3.0 * p.std_err);
    ok &= report(
        "8",
        ui_pass && ui.within_bound && ui.bound == 48.0,
        format!("UI second moments max {:.3} <= 3 (max sigma^2)^2 = {}", ui.max_second_moment, ui.bound),
    );

    let again = simulate_backward_channel(&ch, 10_000, 50, seed).unwrap();
    let z_again = information_density_samples(&ch, 10_000, 50, seed).unwrap();
    ok &= report("8", again == est && z_again == z, "identical seed reproduces bit-identical results".into());

    let took = start.elapsed();
    ok &= report("8", took < Duration::from_secs(30), format!("runtime {took:?} < 30 s"));
    assert!(ok);
}
