use super::special::{beta_inc_split, ln_beta};
use super::{
    finite, invert_cdf, large_df_t_cdf, norm_quantile, DegreesOfFreedom, Probability, LARGE_DF,
};
use crate::error::{domain, Result};

/// Central Student t distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentsT {
    df: DegreesOfFreedom,
}

impl StudentsT {
    pub fn new(df: DegreesOfFreedom) -> Self {
        Self { df }
    }

    pub fn df(&self) -> f64 {
        self.df.get()
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        let x = finite("x", x)?;
        if x == 0.0 {
            return Ok(0.5);
        }
        let tail = self.tail(x.abs())?;
        Ok(if x < 0.0 { tail } else { 1.0 - tail })
    }

    // P(T > t) for t > 0: I_{ν/(ν+t²)}(ν/2, 1/2) / 2.
    fn tail(&self, t: f64) -> Result<f64> {
        let nu = self.df();
        if nu > LARGE_DF {
            return large_df_t_cdf(-t, nu, 0.0);
        }
        let denom = nu + t * t;
        Ok(0.5 * beta_inc_split(0.5 * nu, 0.5, nu / denom, t * t / denom)?)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let nu = self.df();
        let ln_norm = -0.5 * nu.ln() - ln_beta(0.5 * nu, 0.5);
        (ln_norm - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()).exp()
    }

    pub fn quantile(&self, p: Probability) -> Result<f64> {
        let p = p.get();
        if !(p > 0.0 && p < 1.0) {
            return Err(domain("p", p, "0 < p < 1"));
        }
        if p == 0.5 {
            return Ok(0.0);
        }
        if p > 0.5 {
            return Ok(-self.lower_quantile(1.0 - p)?);
        }
        self.lower_quantile(p)
    }

    // Quantile for p < 1/2 (negative result), searched with the lower tail so
    // that small probabilities keep relative precision.
    fn lower_quantile(&self, p: f64) -> Result<f64> {
        let nu = self.df();
        let start = if nu == 1.0 {
            (std::f64::consts::PI * (p - 0.5)).tan()
        } else if nu == 2.0 {
            (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt()
        } else {
            let z = norm_quantile(p)?;
            let z3 = z * z * z;
            z + (z3 + z) / (4.0 * nu) + (5.0 * z3 * z * z + 16.0 * z3 + 3.0 * z) / (96.0 * nu * nu)
        };
        let mut lo = start.min(-1.0);
        while self.cdf(lo)? > p {
            lo *= 2.0;
        }
        invert_cdf(
            "t quantile",
            p,
            start,
            lo,
            0.0,
            |x| self.cdf(x),
            |x| self.pdf(x),
        )
    }
}

pub fn t_cdf(x: f64, df: f64) -> Result<f64> {
    StudentsT::new(DegreesOfFreedom::new(df)?).cdf(x)
}

pub fn t_quantile(p: f64, df: f64) -> Result<f64> {
    StudentsT::new(DegreesOfFreedom::new(df)?).quantile(Probability::new(p)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_closed_form() {
        assert!((t_quantile(0.75, 1.0).unwrap() - 1.0).abs() < 1e-9);
        for &x in &[-3.0, -0.5, 0.2, 1.0, 12.0] {
            let expected = 0.5 + f64::atan(x) / std::f64::consts::PI;
            assert!((t_cdf(x, 1.0).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn two_df_closed_form() {
        for &x in &[-4.0_f64, -1.0, 0.3, 2.0] {
            let expected = 0.5 + x / (2.0 * (2.0 + x * x).sqrt());
            assert!((t_cdf(x, 2.0).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn median_is_zero_and_errors() {
        assert_eq!(t_quantile(0.5, 7.0).unwrap(), 0.0);
        assert!(t_quantile(0.0, 7.0).is_err());
        assert!(t_cdf(f64::NAN, 7.0).is_err());
        assert!(t_cdf(1.0, -2.0).is_err());
    }
}
