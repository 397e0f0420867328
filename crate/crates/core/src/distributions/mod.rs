//! CDFs and quantiles for the normal, chi-square, central t and non-central t
//! distributions. Every stochastic quantity elsewhere in the crate goes through
//! this module.

mod chisq;
mod noncentral;
mod normal;
pub mod special;
mod student;

pub use chisq::{chisq_cdf, chisq_quantile, ChiSquared};
pub use noncentral::{nct_cdf, NoncentralT};
pub use normal::{norm_cdf, norm_pdf, norm_quantile, StandardNormal};
pub use student::{t_cdf, t_quantile, StudentsT};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Residual tolerance every quantile inversion must meet.
pub const QUANTILE_TOLERANCE: f64 = 1e-10;
/// Iteration budget for quantile inversion; exhausting it is an error.
pub const QUANTILE_MAX_ITER: usize = 200;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(domain("probability", value, "0 <= p <= 1"))
        }
    }

    /// A probability strictly inside `(0, 1)`.
    pub fn open(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(domain("probability", value, "0 < p < 1"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Degrees of freedom; real-valued, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct DegreesOfFreedom(f64);

impl DegreesOfFreedom {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(domain("degrees of freedom", value, "df > 0 and finite"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Non-centrality parameter of the non-central t distribution.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct NonCentrality(f64);

impl NonCentrality {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Self(value))
        } else {
            Err(domain("non-centrality", value, "finite"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

pub(crate) fn finite(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(domain(name, x, "finite"))
    }
}

/// Safeguarded Newton inversion of a continuous CDF.
///
/// `lo` and `hi` must bracket the solution (`cdf(lo) <= p <= cdf(hi)`); Newton
/// steps that leave the bracket fall back to bisection.
/// Degrees of freedom above which t-type CDFs switch to a normal approximation.
pub(crate) const LARGE_DF: f64 = 1e5;

// P(T <= t) for (Z + δ) / √(χ²_ν / ν) with large ν: matching the first two
// moments of the scaled χ leaves an O(ν⁻²) error.
pub(crate) fn large_df_t_cdf(t: f64, nu: f64, delta: f64) -> Result<f64> {
    norm_cdf((t * (1.0 - 0.25 / nu) - delta) / (1.0 + 0.5 * t * t / nu).sqrt())
}

pub(crate) fn invert_cdf(
    routine: &'static str,
    p: f64,
    start: f64,
    mut lo: f64,
    mut hi: f64,
    cdf: impl Fn(f64) -> Result<f64>,
    pdf: impl Fn(f64) -> f64,
) -> Result<f64> {
    let mut x = start.clamp(lo, hi);
    let mut best = (f64::INFINITY, x);
    for _ in 0..QUANTILE_MAX_ITER {
        let resid = cdf(x)? - p;
        if resid.abs() < best.0 {
            best = (resid.abs(), x);
        }
        if resid == 0.0 {
            break;
        }
        if resid < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - resid / pdf(x);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        // Below this the residual is dominated by rounding in the CDF.
        let scale = x.abs().max(1e-300);
        if step <= 1e-14 * scale || hi - lo <= 4.0 * f64::EPSILON * scale {
            let resid = cdf(x)? - p;
            if resid.abs() < best.0 {
                best = (resid.abs(), x);
            }
            break;
        }
    }
    if best.0 <= QUANTILE_TOLERANCE * p {
        return Ok(best.1);
    }
    Err(Error::NoConvergence {
        routine,
        cap: QUANTILE_MAX_ITER,
    })
}
