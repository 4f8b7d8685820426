//! Periodic CT variance profiles and the DT variance sequences produced by
//! uniform sampling.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraction::{Rational, SymbolicFraction};

/// Entries at or below this are rejected: the source variance must stay
/// bounded away from zero.
pub const MIN_VARIANCE: f64 = 1e-10;

/// Shape of a unit-period trapezoidal pulse with equal rise and fall time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    t_dc: f64,
    t_rf: f64,
}

impl PulseParams {
    pub const DEFAULT_RISE_FALL: f64 = 0.01;

    pub fn new(t_dc: f64, t_rf: f64) -> Result<Self> {
        if !(t_dc.is_finite() && (0.0..=0.98).contains(&t_dc)) {
            return Err(Error::Config(format!("duty cycle {t_dc} outside [0, 0.98]")));
        }
        if !(t_rf.is_finite() && t_rf > 0.0) {
            return Err(Error::Config(format!("rise/fall time {t_rf} must be positive")));
        }
        if t_dc + 2.0 * t_rf > 1.0 + 1e-12 {
            return Err(Error::Config(format!("t_dc + 2*t_rf = {} exceeds 1", t_dc + 2.0 * t_rf)));
        }
        Ok(PulseParams { t_dc, t_rf })
    }

    pub fn t_dc(&self) -> f64 {
        self.t_dc
    }

    pub fn t_rf(&self) -> f64 {
        self.t_rf
    }
}

/// Periodic pulse with period 1: linear rise on `[0, t_rf]`, plateau on
/// `(t_rf, t_dc + t_rf)`, linear fall on `[t_dc + t_rf, t_dc + 2 t_rf]`,
/// zero afterwards. Negative `t` wraps.
pub fn pulse_value(t: f64, params: &PulseParams) -> f64 {
    let PulseParams { t_dc, t_rf } = *params;
    let t = t - t.floor();
    let v = if t <= t_rf {
        t / t_rf
    } else if t < t_dc + t_rf {
        1.0
    } else if t <= t_dc + 2.0 * t_rf {
        1.0 - (t - t_dc - t_rf) / t_rf
    } else {
        0.0
    };
    v.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// `base + amplitude * Pi(t/T - phi)`
    Pulse { base: f64, amplitude: f64, pulse: PulseParams },
    /// `mean + amplitude * sin(2 pi (t/T - phi))`
    Sine { mean: f64, amplitude: f64 },
}

/// A bounded, strictly positive, periodic CT variance function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtVarianceProfile {
    shape: Shape,
    period: f64,
    phi: f64,
}

impl CtVarianceProfile {
    pub fn new(shape: Shape, period: f64, phi: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Config(format!("period {period} must be positive")));
        }
        if !(phi.is_finite() && (0.0..1.0).contains(&phi)) {
            return Err(Error::Config(format!("offset phi {phi} outside [0, 1)")));
        }
        let profile = CtVarianceProfile { shape, period, phi };
        let (lo, hi) = (profile.min_variance(), profile.max_variance());
        if !(lo.is_finite() && hi.is_finite()) || lo <= MIN_VARIANCE {
            return Err(Error::Config(format!(
                "variance range [{lo}, {hi}] must be finite and strictly positive"
            )));
        }
        Ok(profile)
    }

    pub fn pulse(base: f64, amplitude: f64, pulse: PulseParams, period: f64, phi: f64) -> Result<Self> {
        Self::new(Shape::Pulse { base, amplitude, pulse }, period, phi)
    }

    pub fn sine(mean: f64, amplitude: f64, period: f64, phi: f64) -> Result<Self> {
        Self::new(Shape::Sine { mean, amplitude }, period, phi)
    }

    /// A stationary source with variance `c`.
    pub fn constant(c: f64, period: f64) -> Result<Self> {
        Self::sine(c, 0.0, period, 0.0)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Variance at normalized time `x = t / T_ps`.
    pub fn at_phase(&self, x: f64) -> f64 {
        let x = x - self.phi;
        match self.shape {
            Shape::Pulse { base, amplitude, pulse } => base + amplitude * pulse_value(x, &pulse),
            Shape::Sine { mean, amplitude } => {
                let x = x - x.floor();
                mean + amplitude * (2.0 * PI * x).sin()
            }
        }
    }

    /// `sigma^2_Sc(t)` at absolute time `t`.
    pub fn ct_variance(&self, t: f64) -> f64 {
        self.at_phase(t / self.period)
    }

    pub fn min_variance(&self) -> f64 {
        match self.shape {
            Shape::Pulse { base, amplitude, .. } => base + amplitude.min(0.0),
            Shape::Sine { mean, amplitude } => mean - amplitude.abs(),
        }
    }

    pub fn max_variance(&self) -> f64 {
        match self.shape {
            Shape::Pulse { base, amplitude, .. } => base + amplitude.max(0.0),
            Shape::Sine { mean, amplitude } => mean + amplitude.abs(),
        }
    }

    /// The same profile with every variance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Domain(format!("scale factor {factor} must be positive")));
        }
        let shape = match self.shape {
            Shape::Pulse { base, amplitude, pulse } => Shape::Pulse {
                base: base * factor,
                amplitude: amplitude * factor,
                pulse,
            },
            Shape::Sine { mean, amplitude } => Shape::Sine {
                mean: mean * factor,
                amplitude: amplitude * factor,
            },
        };
        Self::new(shape, self.period, self.phi)
    }

    pub fn with_phi(&self, phi: f64) -> Result<Self> {
        Self::new(self.shape, self.period, phi)
    }
}

/// How the CT source is sampled: `T_ps / T_s = p + eps`, first sample at
/// `offset_abs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    p: u64,
    eps: SymbolicFraction,
    offset_abs: f64,
}

impl SamplingSpec {
    pub fn new(p: u64, eps: SymbolicFraction, offset_abs: f64) -> Result<Self> {
        if p == 0 {
            return Err(Error::Config("integer part p of T_ps/T_s must be >= 1".into()));
        }
        let e = eps.value();
        if !(0.0..1.0).contains(&e) {
            return Err(Error::Config(format!("eps = {eps} evaluates to {e}, outside [0, 1)")));
        }
        if !offset_abs.is_finite() {
            return Err(Error::Config("sampling offset must be finite".into()));
        }
        Ok(SamplingSpec { p, eps, offset_abs })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn eps(&self) -> &SymbolicFraction {
        &self.eps
    }

    pub fn offset_abs(&self) -> f64 {
        self.offset_abs
    }

    /// `T_s = T_ps / (p + eps)`.
    pub fn sampling_interval(&self, period: f64) -> f64 {
        period / (self.p as f64 + self.eps.value())
    }
}

/// One period of a periodic DT variance sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DtVariancePeriod {
    variances: Vec<f64>,
}

impl DtVariancePeriod {
    pub fn new(variances: Vec<f64>) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::Domain("variance period must be non-empty".into()));
        }
        if let Some((m, v)) = variances
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > MIN_VARIANCE))
        {
            return Err(Error::Domain(format!("variance[{m}] = {v} is not finite and positive")));
        }
        Ok(DtVariancePeriod { variances })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.variances
    }

    pub fn period(&self) -> usize {
        self.variances.len()
    }

    pub fn mean(&self) -> f64 {
        crate::sum::compensated_sum(self.variances.iter().copied()) / self.period() as f64
    }

    pub fn max(&self) -> f64 {
        self.variances.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.variances.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Variance of sample `i` of the periodic sequence.
    pub fn at(&self, i: usize) -> f64 {
        self.variances[i % self.variances.len()]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.variances.iter().map(|v| v * factor).collect())
    }
}

/// Samples `sigma^2_Sc(m T_ps / (p + u/v) + offset_abs)` for one DT period
/// `m = 0 .. p*v + u`.
///
/// The normalized sample time `m v / (p v + u)` is reduced modulo 1 in
/// integer arithmetic, so the result is exactly periodic.
pub fn dt_variance_period(
    profile: &CtVarianceProfile,
    spec: &SamplingSpec,
    eps_rational: Rational,
) -> Result<DtVariancePeriod> {
    if eps_rational.num() >= eps_rational.den() {
        return Err(Error::Domain(format!("eps = {eps_rational} is not in [0, 1)")));
    }
    let n_p = eps_rational.period(spec.p);
    let v = eps_rational.den() as u128;
    let shift = spec.offset_abs / profile.period;
    let variances = (0..n_p as u128)
        .map(|m| {
            let frac = ((m * v) % n_p as u128) as f64 / n_p as f64;
            profile.at_phase(frac + shift)
        })
        .collect();
    DtVariancePeriod::new(variances)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse(t_dc: f64) -> PulseParams {
        PulseParams::new(t_dc, 0.01).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pulse_examples() {
        let p = pulse(0.45);
        assert_eq!(pulse_value(0.0, &p), 0.0);
        assert!(close(pulse_value(0.005, &p), 0.5, 1e-12));
        assert_eq!(pulse_value(0.2, &p), 1.0);
        assert_eq!(pulse_value(1.2, &p), pulse_value(0.2, &p));
        assert_eq!(pulse_value(-0.8, &p), pulse_value(0.2, &p));
        // fall and zero segments
        assert!(close(pulse_value(0.465, &p), 0.5, 1e-9));
        assert_eq!(pulse_value(0.9, &p), 0.0);
    }

    #[test]
    fn pulse_boundaries_are_continuous() {
        let p = pulse(0.45);
        for b in [0.01, 0.46, 0.47] {
            let l = pulse_value(b - 1e-12, &p);
            let r = pulse_value(b + 1e-12, &p);
            assert!(close(l, r, 1e-9), "jump at {b}: {l} vs {r}");
        }
        assert_eq!(pulse_value(0.01, &p), 1.0);
        assert!(close(pulse_value(0.46, &p), 1.0, 1e-12));
        assert!(close(pulse_value(0.47, &p), 0.0, 1e-12));
    }

    #[test]
    fn invalid_pulse_params() {
        assert!(PulseParams::new(0.99, 0.01).is_err());
        assert!(PulseParams::new(-0.1, 0.01).is_err());
        assert!(PulseParams::new(0.5, 0.0).is_err());
        assert!(PulseParams::new(0.98, 0.02).is_err());
        assert!(PulseParams::new(0.98, 0.01).is_ok());
    }

    #[test]
    fn ct_variance_examples() {
        let prof = CtVarianceProfile::pulse(0.2, 4.8, pulse(0.75), 5e-6, 0.0).unwrap();
        assert!(close(prof.ct_variance(0.3 * 5e-6), 5.0, 1e-12));
        assert!(close(prof.ct_variance(0.0), 0.2, 1e-15));

        let sine = CtVarianceProfile::sine(2.0, 0.5, 1.0, 0.0).unwrap();
        assert!(close(sine.ct_variance(1.0 / 3.0), 2.433, 5e-4));
    }

    #[test]
    fn invalid_profiles() {
        assert!(CtVarianceProfile::sine(0.5, 0.5, 1.0, 0.0).is_err());
        assert!(CtVarianceProfile::pulse(0.0, 1.0, pulse(0.5), 1.0, 0.0).is_err());
        assert!(CtVarianceProfile::pulse(0.2, 4.8, pulse(0.5), -1.0, 0.0).is_err());
        assert!(CtVarianceProfile::pulse(0.2, 4.8, pulse(0.5), 1.0, 1.0).is_err());
    }

    #[test]
    fn sine_dt_period_without_offset() {
        let sine = CtVarianceProfile::sine(2.0, 0.5, 1.0, 0.0).unwrap();
        let spec = SamplingSpec::new(3, SymbolicFraction::rational(0, 1).unwrap(), 0.0).unwrap();
        let dt = dt_variance_period(&sine, &spec, Rational::ZERO).unwrap();
        assert_eq!(dt.period(), 3);
        for (got, want) in dt.as_slice().iter().zip([2.0, 2.433, 1.567]) {
            assert!(close(*got, want, 5e-4), "{got} vs {want}");
        }
    }

    #[test]
    fn sine_irrational_interval_literal_values() {
        // T_s = (1 + 1/2pi) T / 3 evaluated directly from the formula; these are
        // the literal values, which differ from the rounded sequence quoted for
        // this example in the literature (2.335 there vs 2.327 here). Expected
        // values computed with 30-digit mpmath.
        let sine = CtVarianceProfile::sine(2.0, 0.5, 1.0, 0.0).unwrap();
        let ts = (1.0 + 1.0 / (2.0 * PI)) / 3.0;
        let got: Vec<f64> = (0..6).map(|i| sine.ct_variance(i as f64 * ts)).collect();
        let want = [2.0, 2.3273796862965273, 1.5051083830608643, 2.4207354924039483, 1.8588763818616682, 1.792_597_522_722_473];
        for (g, w) in got.iter().zip(want) {
            assert!(close(*g, w, 1e-12), "{g} vs {w}");
        }
    }

    #[test]
    fn constant_profile_gives_constant_period() {
        let c = CtVarianceProfile::constant(2.0, 3.0).unwrap();
        let spec = SamplingSpec::new(2, SymbolicFraction::rational(3, 7).unwrap(), 0.4).unwrap();
        let dt = dt_variance_period(&c, &spec, Rational::new(3, 7).unwrap()).unwrap();
        assert_eq!(dt.period(), 17);
        assert!(dt.as_slice().iter().all(|v| *v == 2.0));
    }

    #[test]
    fn dt_period_rejects_improper_eps() {
        let c = CtVarianceProfile::constant(2.0, 1.0).unwrap();
        let spec = SamplingSpec::new(2, SymbolicFraction::rational(0, 1).unwrap(), 0.0).unwrap();
        assert!(dt_variance_period(&c, &spec, Rational::new(3, 3).unwrap()).is_err());
    }

    #[test]
    fn dt_variance_period_rejects_nonpositive() {
        assert!(DtVariancePeriod::new(vec![]).is_err());
        assert!(DtVariancePeriod::new(vec![1.0, 0.0]).is_err());
        assert!(DtVariancePeriod::new(vec![1.0, f64::NAN]).is_err());
        assert!(DtVariancePeriod::new(vec![1.0, 1e-11]).is_err());
    }

    #[test]
    fn sampling_interval() {
        let spec = SamplingSpec::new(2, SymbolicFraction::rational(1, 2).unwrap(), 0.0).unwrap();
        assert!(close(spec.sampling_interval(5e-6), 2e-6, 1e-18));
        assert!(SamplingSpec::new(0, SymbolicFraction::rational(1, 2).unwrap(), 0.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_profile() -> impl Strategy<Value = CtVarianceProfile> {
            prop_oneof![
                (0.05f64..2.0, 0.0f64..10.0, 0.0f64..=0.98, 0.0f64..1.0, 0.1f64..10.0).prop_map(
                    |(base, amp, dc, phi, per)| {
                        CtVarianceProfile::pulse(base, amp, PulseParams::new(dc, 0.01).unwrap(), per, phi).unwrap()
                    }
                ),
                (0.0f64..5.0, 0.1f64..3.0, 0.0f64..1.0, 0.1f64..10.0).prop_map(|(amp, gap, phi, per)| {
                    CtVarianceProfile::sine(amp + gap, amp, per, phi).unwrap()
                }),
            ]
        }

        /// Largest |d sigma^2 / dx| in normalized time. Rounding in t/T_ps is
        /// amplified by this much, mostly on the steep pulse ramps.
        fn max_slope(prof: &CtVarianceProfile) -> f64 {
            match prof.shape() {
                Shape::Pulse { amplitude, pulse, .. } => amplitude.abs() / pulse.t_rf(),
                Shape::Sine { amplitude, .. } => 2.0 * PI * amplitude.abs(),
            }
        }

        proptest! {
            #[test]
            fn profile_is_periodic(prof in any_profile()) {
                let t_ps = prof.period();
                for i in 0..1000 {
                    let t = (i as f64 / 1000.0 - 0.3) * 3.0 * t_ps;
                    let a = prof.ct_variance(t);
                    let b = prof.ct_variance(t + t_ps);
                    let phase_err = 4.0 * f64::EPSILON * (t / t_ps).abs().max(1.0);
                    prop_assert!((a - b).abs() <= 1e-12 * a + max_slope(&prof) * phase_err, "{} vs {}", a, b);
                }
            }

            #[test]
            fn dt_period_repeats_direct_sampling(
                prof in any_profile(),
                p in 1u64..4,
                u in 0u64..7,
                extra in 1u64..7,
                off in -1.0f64..1.0,
            ) {
                let v = u + extra;
                let eps = Rational::new(u, v).unwrap();
                let spec = SamplingSpec::new(p, SymbolicFraction::Rational(eps), off * prof.period()).unwrap();
                let dt = dt_variance_period(&prof, &spec, eps).unwrap();
                prop_assert_eq!(dt.period() as u64, eps.period(p));
                let ts = spec.sampling_interval(prof.period());
                let slope = max_slope(&prof);
                let lo = prof.min_variance();
                let hi = prof.max_variance();
                for m in 0..2 * dt.period() {
                    let direct = prof.ct_variance(m as f64 * ts + spec.offset_abs());
                    let periodic = dt.at(m);
                    let phase_err = 8.0 * f64::EPSILON * (m as f64 + off.abs() + 1.0);
                    prop_assert!((direct - periodic).abs() <= 1e-12 * direct + slope * phase_err,
                        "m={} direct={} periodic={}", m, direct, periodic);
                    prop_assert!(periodic >= lo - 1e-12 && periodic <= hi + 1e-12);
                }
            }
        }
    }
}
