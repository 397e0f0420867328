//! Pilot size for estimating the outcome standard deviation.
//!
//! The main study is sized from the pilot sample variance S². It ends up
//! underpowered when S² falls below σ_L², the variance at which the size that
//! would give the lower power threshold under the true σ already delivers the
//! target power. With normal data (df)·S²/σ² is χ²(df), so the pilot size is the
//! smallest one keeping Pr(S² < σ_L²) below the allowed probability. The
//! overpower side mirrors this with σ_U.

use serde::{Deserialize, Serialize};

use crate::distributions::{chisq_cdf, norm_quantile, Probability};
use crate::error::{domain, Error, Result};
use crate::power::{
    effect_size_for_n, nearest_size, threshold_size, EffectSpec, QuantileMode, TestDesign,
};

/// Upper end of the ascending pilot-size search in exact mode.
pub const EXACT_SEARCH_CAP: u64 = 1_000_000;

/// How pilot sizes are obtained from the variance ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PilotMode {
    /// Ascending search on the chi-square probability.
    Exact,
    /// Closed-form normal approximation to the chi-square search.
    #[default]
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Under,
    Over,
}

/// "Less than `prob` chance that the main study's power is below (or above) `power`."
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bound {
    pub prob: Probability,
    pub power: Probability,
}

impl Bound {
    pub fn new(prob: f64, power: f64) -> Result<Self> {
        Ok(Self {
            prob: Probability::open(prob)?,
            power: Probability::open(power)?,
        })
    }
}

/// Underpower bound with an optional overpower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBounds {
    pub lower: Bound,
    pub upper: Option<Bound>,
}

impl PowerBounds {
    pub fn new(underpower_prob: f64, underpower_threshold: f64) -> Result<Self> {
        Ok(Self {
            lower: Bound::new(underpower_prob, underpower_threshold)?,
            upper: None,
        })
    }

    pub fn with_upper(mut self, overpower_prob: f64, overpower_threshold: f64) -> Result<Self> {
        self.upper = Some(Bound::new(overpower_prob, overpower_threshold)?);
        Ok(self)
    }

    /// Checks the thresholds sit on the correct sides of the target power.
    pub fn validate(&self, target_power: f64) -> Result<()> {
        if self.lower.power.get() >= target_power {
            return Err(Error::InvalidConfig(format!(
                "underpower threshold {} must be below the target power {}",
                self.lower.power.get(),
                target_power
            )));
        }
        if let Some(upper) = self.upper {
            if upper.power.get() <= target_power {
                return Err(Error::InvalidConfig(format!(
                    "overpower threshold {} must be above the target power {}",
                    upper.power.get(),
                    target_power
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarianceOptions {
    pub pilot_mode: PilotMode,
    pub quantile_mode: QuantileMode,
    /// Estimate σ from a two-group pilot with `n` per group (df = 2n - 2)
    /// instead of a single sample of `n` (df = n - 1).
    pub pooled: bool,
}

/// Trace of the variance-driven planning steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariancePilotPlan {
    /// Main-study size at the threshold power, to the nearest integer; the
    /// later steps use the unrounded value.
    pub n_lower: u64,
    pub n_lower_unrounded: f64,
    pub n_upper: Option<u64>,
    pub n_upper_unrounded: Option<f64>,
    pub sigma_lower: f64,
    pub sigma_upper: Option<f64>,
    /// σ_L² / σ².
    pub ratio_lower: f64,
    pub ratio_upper: Option<f64>,
    pub pilot_n_lower: u64,
    pub pilot_n_upper: Option<u64>,
    pub pilot_n: u64,
    pub mode: PilotMode,
    /// Final pilot size under the exact search and under the approximation;
    /// one of them equals `pilot_n`.
    pub pilot_n_exact: u64,
    pub pilot_n_approx: u64,
}

fn pilot_df(n: u64, pooled: bool) -> f64 {
    if pooled {
        2.0 * n as f64 - 2.0
    } else {
        n as f64 - 1.0
    }
}

fn check_ratio(ratio_sq: f64) -> Result<f64> {
    if ratio_sq > 0.0 && ratio_sq.is_finite() {
        Ok(ratio_sq)
    } else {
        Err(domain("variance ratio", ratio_sq, "ratio > 0 and finite"))
    }
}

/// Pr(S² < ratio·σ²) or Pr(S² > ratio·σ²) for a sample variance on `df` degrees of freedom.
pub fn variance_tail_prob(df: f64, ratio_sq: f64, side: Side) -> Result<f64> {
    let ratio_sq = check_ratio(ratio_sq)?;
    let below = chisq_cdf(df * ratio_sq, df)?;
    Ok(match side {
        Side::Under => below,
        Side::Over => 1.0 - below,
    })
}

/// Pr(S² < σ_L²) for a single pilot sample of `n_p`, with `ratio_sq = σ_L²/σ²`.
pub fn variance_underpower_prob(n_p: u64, ratio_sq: f64) -> Result<f64> {
    if n_p < 2 {
        return Err(domain("pilot n", n_p as f64, "n >= 2"));
    }
    variance_tail_prob(n_p as f64 - 1.0, ratio_sq, Side::Under)
}

/// Pr(S² > σ_U²) for a single pilot sample of `n_p`, with `ratio_sq = σ_U²/σ²`.
pub fn variance_overpower_prob(n_p: u64, ratio_sq: f64) -> Result<f64> {
    if n_p < 2 {
        return Err(domain("pilot n", n_p as f64, "n >= 2"));
    }
    variance_tail_prob(n_p as f64 - 1.0, ratio_sq, Side::Over)
}

fn check_side(ratio_sq: f64, side: Side) -> Result<()> {
    match side {
        Side::Under if ratio_sq >= 1.0 => Err(domain(
            "variance ratio",
            ratio_sq,
            "ratio < 1 on the underpower side",
        )),
        Side::Over if ratio_sq <= 1.0 => Err(domain(
            "variance ratio",
            ratio_sq,
            "ratio > 1 on the overpower side",
        )),
        _ => Ok(()),
    }
}

/// Smallest pilot size whose tail probability is below `p`, by ascending search.
pub fn pilot_n_exact(ratio_sq: f64, p: f64, side: Side, pooled: bool) -> Result<u64> {
    let ratio_sq = check_ratio(ratio_sq)?;
    check_side(ratio_sq, side)?;
    let p = Probability::open(p)?.get();
    let prob = |n: u64| variance_tail_prob(pilot_df(n, pooled), ratio_sq, side);
    // The tail probability decreases in n, so failing at the cap means failing everywhere below it.
    if prob(EXACT_SEARCH_CAP)? >= p {
        return Err(Error::SearchCapExceeded {
            cap: EXACT_SEARCH_CAP,
            constraint: match side {
                Side::Under => format!("Pr(S²/σ² < {ratio_sq}) < {p}"),
                Side::Over => format!("Pr(S²/σ² > {ratio_sq}) < {p}"),
            },
        });
    }
    for n in 2..=EXACT_SEARCH_CAP {
        if prob(n)? < p {
            return Ok(n);
        }
    }
    unreachable!("the cap itself satisfies the constraint")
}

/// Closed-form pilot size: ceil(2 z²_{1-p} / (ratio - 1)² + 1) for a single sample,
/// or the per-group size carrying the same degrees of freedom when pooled.
pub fn pilot_n_approx(ratio_sq: f64, p: f64, pooled: bool) -> Result<u64> {
    let ratio_sq = check_ratio(ratio_sq)?;
    if ratio_sq == 1.0 {
        return Err(domain("variance ratio", ratio_sq, "ratio != 1"));
    }
    let z = norm_quantile(1.0 - Probability::open(p)?.get())?;
    let df = 2.0 * z * z / ((ratio_sq - 1.0) * (ratio_sq - 1.0));
    let n = if pooled { 0.5 * df + 1.0 } else { df + 1.0 };
    Ok((n.ceil() as u64).max(2))
}

fn pilot_n_for(ratio_sq: f64, p: f64, side: Side, mode: PilotMode, pooled: bool) -> Result<u64> {
    match mode {
        PilotMode::Exact => pilot_n_exact(ratio_sq, p, side, pooled),
        PilotMode::Approx => {
            check_side(ratio_sq, side)?;
            pilot_n_approx(ratio_sq, p, pooled)
        }
    }
}

struct SideSolution {
    n_main: u64,
    n_main_unrounded: f64,
    sigma: f64,
    ratio_sq: f64,
}

// Main size at `threshold_power` under the prior σ, then the σ for which that
// (unrounded) size reaches the target power instead.
fn solve_side(
    effect: &EffectSpec,
    design: &TestDesign,
    target_power: f64,
    threshold_power: f64,
    mode: QuantileMode,
) -> Result<SideSolution> {
    let es = effect.effect_size();
    let size = threshold_size(es, design, threshold_power, mode)?;
    let es_at_target = effect_size_for_n(size.unrounded, design, target_power, mode)?;
    let ratio = es / es_at_target;
    Ok(SideSolution {
        n_main: nearest_size(size.unrounded),
        n_main_unrounded: size.unrounded,
        sigma: effect.sigma() * ratio,
        ratio_sq: ratio * ratio,
    })
}

pub fn plan_variance_pilot(
    effect: &EffectSpec,
    design: &TestDesign,
    target_power: f64,
    bounds: &PowerBounds,
    options: VarianceOptions,
) -> Result<VariancePilotPlan> {
    let target_power = Probability::open(target_power)?.get();
    bounds.validate(target_power)?;
    let qmode = options.quantile_mode;

    let lower = solve_side(
        effect,
        design,
        target_power,
        bounds.lower.power.get(),
        qmode,
    )?;
    let upper = bounds
        .upper
        .map(|b| solve_side(effect, design, target_power, b.power.get(), qmode).map(|s| (s, b)))
        .transpose()?;

    let final_n = |mode: PilotMode| -> Result<(u64, Option<u64>)> {
        let lo = pilot_n_for(
            lower.ratio_sq,
            bounds.lower.prob.get(),
            Side::Under,
            mode,
            options.pooled,
        )?;
        let hi = upper
            .as_ref()
            .map(|(s, b)| pilot_n_for(s.ratio_sq, b.prob.get(), Side::Over, mode, options.pooled))
            .transpose()?;
        Ok((lo, hi))
    };

    let (lo_exact, hi_exact) = final_n(PilotMode::Exact)?;
    let (lo_approx, hi_approx) = final_n(PilotMode::Approx)?;
    let combine = |lo: u64, hi: Option<u64>| hi.map_or(lo, |h| h.max(lo));
    let pilot_n_exact = combine(lo_exact, hi_exact);
    let pilot_n_approx = combine(lo_approx, hi_approx);
    let (pilot_n_lower, pilot_n_upper, pilot_n) = match options.pilot_mode {
        PilotMode::Exact => (lo_exact, hi_exact, pilot_n_exact),
        PilotMode::Approx => (lo_approx, hi_approx, pilot_n_approx),
    };

    Ok(VariancePilotPlan {
        n_lower: lower.n_main,
        n_lower_unrounded: lower.n_main_unrounded,
        n_upper: upper.as_ref().map(|(s, _)| s.n_main),
        n_upper_unrounded: upper.as_ref().map(|(s, _)| s.n_main_unrounded),
        sigma_lower: lower.sigma,
        sigma_upper: upper.as_ref().map(|(s, _)| s.sigma),
        ratio_lower: lower.ratio_sq,
        ratio_upper: upper.as_ref().map(|(s, _)| s.ratio_sq),
        pilot_n_lower,
        pilot_n_upper,
        pilot_n,
        mode: options.pilot_mode,
        pilot_n_exact,
        pilot_n_approx,
    })
}
