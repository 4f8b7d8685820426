//! Rate-distortion functions of sampled continuous-time wide-sense
//! cyclostationary (WSCS) Gaussian sources.
//!
//! A memoryless CT source with periodic variance is sampled at
//! `T_s = T_ps / (p + eps)`. When `eps = u/v` is rational the sampled
//! process is WSCS with period `p*v + u` and its RDF follows from reverse
//! water-filling over one period ([`waterfill`]). When `eps` is irrational
//! the RDF is the limit superior of the synchronous RDFs obtained from the
//! rational approximations `floor(n*eps)/n` ([`rdf`]); this crate estimates
//! it as the maximum over a tail window of `n`.
//!
//! [`mc`] simulates the backward test channel `S = S_hat + W` that achieves
//! the RDF and checks distortion and information-density statistics.

pub mod error;
pub mod fraction;
pub mod mc;
pub mod rdf;
mod sum;
pub mod variance;
pub mod waterfill;

pub use error::{Error, Result};
pub use fraction::{rational_approx, classify_sampling, Rational, RationalApprox, SamplingClass, SymbolicFraction};
pub use variance::{
    dt_variance_period, pulse_value, CtVarianceProfile, DtVariancePeriod, PulseParams, SamplingSpec, Shape,
};
pub use waterfill::{distortion_from_theta, rate_from_solution, solve_reverse_waterfill, WaterfillSolution};
