use super::special::{gamma_p, ln_gamma};
use super::{invert_cdf, norm_quantile, DegreesOfFreedom, Probability};
use crate::error::{domain, Result};

/// Chi-square distribution with `df` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquared {
    df: DegreesOfFreedom,
}

impl ChiSquared {
    pub fn new(df: DegreesOfFreedom) -> Self {
        Self { df }
    }

    pub fn df(&self) -> f64 {
        self.df.get()
    }

    /// P(df/2, x/2).
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain("x", x, "x >= 0"));
        }
        gamma_p(0.5 * self.df(), 0.5 * x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let k = 0.5 * self.df();
        ((k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
    }

    pub fn quantile(&self, p: Probability) -> Result<f64> {
        let p = p.get();
        if p == 0.0 {
            return Ok(0.0);
        }
        if p >= 1.0 {
            return Err(domain("p", p, "0 <= p < 1"));
        }
        let df = self.df();
        // Wilson-Hilferty starting point.
        let z = norm_quantile(p)?;
        let h = 2.0 / (9.0 * df);
        let start = (df * (1.0 - h + z * h.sqrt()).powi(3)).max(df * 1e-3);
        let mut hi = start.max(1.0);
        while self.cdf(hi)? < p {
            hi *= 2.0;
        }
        invert_cdf(
            "chi-square quantile",
            p,
            start,
            0.0,
            hi,
            |x| self.cdf(x),
            |x| self.pdf(x),
        )
    }
}

pub fn chisq_cdf(x: f64, df: f64) -> Result<f64> {
    ChiSquared::new(DegreesOfFreedom::new(df)?).cdf(x)
}

pub fn chisq_quantile(p: f64, df: f64) -> Result<f64> {
    ChiSquared::new(DegreesOfFreedom::new(df)?).quantile(Probability::new(p)?)
}
