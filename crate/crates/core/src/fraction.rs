//! Exact representation of the fractional part `eps` of `T_ps / T_s`.
//!
//! Floating point cannot tell `1/2` from `5*pi/32`, so `eps` is kept
//! symbolic and only evaluated when a sample time is needed.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default denominator cap above which a rational `eps` is treated as
/// asynchronous.
pub const DEFAULT_DENOMINATOR_CAP: u64 = 1_000_000;

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// A reduced nonnegative fraction `num/den` with `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRational")]
pub struct Rational {
    num: u64,
    den: u64,
}

#[derive(Deserialize)]
struct RawRational {
    num: u64,
    den: u64,
}

impl TryFrom<RawRational> for Rational {
    type Error = Error;

    fn try_from(raw: RawRational) -> Result<Self> {
        Rational::new(raw.num, raw.den)
    }
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };

    /// Builds `num/den` in lowest terms.
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain(format!("zero denominator in {num}/{den}")));
        }
        let g = gcd(num as u128, den as u128) as u64;
        Ok(Rational { num: num / g, den: den / g })
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `floor(n * self)` in exact integer arithmetic.
    pub fn floor_mul(&self, n: u64) -> u64 {
        ((n as u128 * self.num as u128) / self.den as u128) as u64
    }

    /// DT period `p*den + num` of a source sampled at `T_ps / (p + self)`.
    pub fn period(&self, p: u64) -> u64 {
        p * self.den + self.num
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Fractional part of `T_ps / T_s`, always in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SymbolicFraction {
    Rational(Rational),
    /// `pi_num * pi / pi_den + rat_num / rat_den`, with `pi_num != 0`.
    IrrationalExpr {
        pi_num: i64,
        pi_den: u64,
        rat_num: i64,
        rat_den: u64,
    },
    /// A decimal literal. Its exact value is the shortest decimal string
    /// that round-trips to the stored `f64`.
    Decimal(f64),
}

fn check_unit_interval(value: f64, what: &dyn fmt::Display) -> Result<()> {
    if value.is_finite() && (0.0..1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps = {what} evaluates to {value}, outside [0, 1)")))
    }
}

impl SymbolicFraction {
    pub fn rational(num: u64, den: u64) -> Result<Self> {
        let r = Rational::new(num, den)?;
        if r.num >= r.den {
            return Err(Error::Domain(format!("eps = {r} is not in [0, 1)")));
        }
        Ok(SymbolicFraction::Rational(r))
    }

    /// `pi_num * pi / pi_den + rat_num / rat_den`. Collapses to a rational
    /// when `pi_num == 0`.
    pub fn irrational(pi_num: i64, pi_den: u64, rat_num: i64, rat_den: u64) -> Result<Self> {
        if pi_den == 0 || rat_den == 0 {
            return Err(Error::Domain("zero denominator in eps expression".into()));
        }
        if pi_num == 0 {
            if rat_num < 0 {
                return Err(Error::Domain(format!("eps = {rat_num}/{rat_den} is negative")));
            }
            return Self::rational(rat_num as u64, rat_den);
        }
        let g = gcd(pi_num.unsigned_abs() as u128, pi_den as u128) as i64;
        let h = gcd(rat_num.unsigned_abs() as u128, rat_den as u128).max(1) as i64;
        let e = SymbolicFraction::IrrationalExpr {
            pi_num: pi_num / g,
            pi_den: pi_den / g as u64,
            rat_num: rat_num / h,
            rat_den: rat_den / h as u64,
        };
        check_unit_interval(e.value(), &e)?;
        Ok(e)
    }

    pub fn decimal(value: f64) -> Result<Self> {
        check_unit_interval(value, &value)?;
        Ok(SymbolicFraction::Decimal(value))
    }

    pub fn value(&self) -> f64 {
        match *self {
            SymbolicFraction::Rational(r) => r.value(),
            SymbolicFraction::IrrationalExpr { pi_num, pi_den, rat_num, rat_den } => {
                pi_num as f64 * PI / pi_den as f64 + rat_num as f64 / rat_den as f64
            }
            SymbolicFraction::Decimal(x) => x,
        }
    }

    /// The exact rational value, if the representation has one that fits
    /// in 64-bit integers. Irrational expressions return `None`.
    pub fn exact_rational(&self) -> Option<Rational> {
        match *self {
            SymbolicFraction::Rational(r) => Some(r),
            SymbolicFraction::IrrationalExpr { .. } => None,
            SymbolicFraction::Decimal(x) => decimal_to_rational(x),
        }
    }

    /// `floor(n * eps)`.
    pub fn floor_mul(&self, n: u64) -> u64 {
        match self.exact_rational() {
            Some(r) => r.floor_mul(n),
            None => (n as f64 * self.value()).floor() as u64,
        }
    }
}

impl fmt::Display for SymbolicFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SymbolicFraction::Rational(r) => write!(f, "{r}"),
            SymbolicFraction::IrrationalExpr { pi_num, pi_den, rat_num, rat_den } => {
                match pi_num {
                    1 => write!(f, "pi")?,
                    -1 => write!(f, "-pi")?,
                    a => write!(f, "{a}*pi")?,
                }
                if pi_den != 1 {
                    write!(f, "/{pi_den}")?;
                }
                match rat_num.signum() {
                    0 => {}
                    1 => write!(f, "+{rat_num}")?,
                    _ => write!(f, "-{}", rat_num.unsigned_abs())?,
                }
                if rat_num != 0 && rat_den != 1 {
                    write!(f, "/{rat_den}")?;
                }
                Ok(())
            }
            SymbolicFraction::Decimal(x) => write!(f, "{x}"),
        }
    }
}

/// Exact value of the shortest decimal representation of a nonnegative
/// `x`, e.g. `0.26 -> 13/50`. Returns `None` when it does not fit in
/// 64-bit integers.
pub fn decimal_to_rational(x: f64) -> Option<Rational> {
    if !x.is_finite() || x < 0.0 {
        return None;
    }
    // Display for f64 prints the shortest round-trip digits without an exponent.
    let s = format!("{x}");
    let (int_part, frac_part) = s.split_once('.').unwrap_or((&s, ""));
    if frac_part.len() > 19 {
        return None;
    }
    let den = 10u128.pow(frac_part.len() as u32);
    let digits: u128 = format!("{int_part}{frac_part}").parse().ok()?;
    let g = gcd(digits, den);
    let (num, den) = (digits / g, den / g);
    if num > u64::MAX as u128 || den > u64::MAX as u128 {
        return None;
    }
    Some(Rational { num: num as u64, den: den as u64 })
}

/// Continued-fraction expansion of `num/den`, truncated once a convergent
/// denominator would exceed `cap`. Returns the full value when the
/// expansion terminates within the cap.
fn continued_fraction_within_cap(r: Rational, cap: u64) -> Option<Rational> {
    let (mut a, mut b) = (r.num as u128, r.den as u128);
    // Convergent recurrences h_k / k_k.
    let (mut h_prev, mut h) = (0u128, 1u128);
    let (mut k_prev, mut k) = (1u128, 0u128);
    while b != 0 {
        let q = a / b;
        let (h_next, k_next) = (q * h + h_prev, q * k + k_prev);
        if k_next > cap as u128 {
            return None;
        }
        (h_prev, h, k_prev, k) = (h, h_next, k, k_next);
        (a, b) = (b, a - q * b);
    }
    Some(Rational { num: h as u64, den: k as u64 })
}

/// Whether sampling at `T_ps / (p + eps)` yields a WSCS (periodic-variance)
/// process of tractable period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SamplingClass {
    /// `eps = u/v`; the DT period is `p*v + u`.
    Synchronous(Rational),
    Asynchronous,
}

impl SamplingClass {
    pub fn is_synchronous(&self) -> bool {
        matches!(self, SamplingClass::Synchronous(_))
    }
}

/// Classifies `eps`. Rationals with denominator above `denominator_cap`
/// and all irrational expressions are asynchronous; decimals are expanded
/// as continued fractions truncated at the cap.
pub fn classify_sampling(eps: &SymbolicFraction, denominator_cap: u64) -> SamplingClass {
    match *eps {
        SymbolicFraction::Rational(r) if r.den <= denominator_cap => SamplingClass::Synchronous(r),
        SymbolicFraction::Rational(_) | SymbolicFraction::IrrationalExpr { .. } => SamplingClass::Asynchronous,
        SymbolicFraction::Decimal(x) => decimal_to_rational(x)
            .and_then(|r| continued_fraction_within_cap(r, denominator_cap))
            .map_or(SamplingClass::Asynchronous, SamplingClass::Synchronous),
    }
}

/// The `n`-th synchronous approximation of an `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RationalApprox {
    pub n: u64,
    /// `floor(n*eps)/n`, reduced.
    pub eps_n: Rational,
    /// `p*n + floor(n*eps)`.
    pub p_n: u64,
}

/// `eps_n = floor(n*eps)/n` and `p_n = p*n + floor(n*eps)`; satisfies
/// `eps - 1/n < eps_n <= eps`.
pub fn rational_approx(eps: &SymbolicFraction, n: u64, p: u64) -> Result<RationalApprox> {
    if n == 0 {
        return Err(Error::Domain("approximation index n must be >= 1".into()));
    }
    let k = eps.floor_mul(n);
    Ok(RationalApprox { n, eps_n: Rational::new(k, n)?, p_n: p * n + k })
}
