//! Pilot size for estimating the study effect.
//!
//! The main study is sized from the pilot's effect estimate and ends up
//! underpowered when the estimate overshoots μ_L, the effect for which the size
//! giving the lower power threshold under μ₀ would already deliver the target
//! power. With σ known the estimate is normal with variance k·σ²/n (k = 1 for
//! one sample, 2 for a two-group difference), which gives the pilot size in
//! closed form.

use serde::Serialize;

use crate::distributions::{norm_cdf, norm_quantile, Probability};
use crate::error::{domain, Result};
use crate::power::{
    effect_size_for_n, nearest_size, threshold_size, EffectSpec, QuantileMode, TestDesign,
};
use crate::variance::{PowerBounds, Side};

/// Trace of the effect-driven planning steps. Means are on the scale of the
/// input effect (multiply by σ to undo an effect-size input).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectPilotPlan {
    /// Main-study size at the threshold power, to the nearest integer; the
    /// later steps use the unrounded value.
    pub n_lower: u64,
    pub n_lower_unrounded: f64,
    pub n_upper: Option<u64>,
    pub n_upper_unrounded: Option<f64>,
    pub mu_lower: f64,
    pub mu_upper: Option<f64>,
    /// `mu_lower / σ` and `mu_upper / σ`.
    pub effect_size_lower: f64,
    pub effect_size_upper: Option<f64>,
    pub pilot_n_lower: u64,
    pub pilot_n_upper: Option<u64>,
    pub pilot_n: u64,
}

// Pr(estimate beyond the bound) with the gap expressed in effect-size units.
fn tail_prob(n_p: u64, gap_es: f64, design: &TestDesign, side: Side) -> Result<f64> {
    if n_p < 1 {
        return Err(domain("pilot n", n_p as f64, "n >= 1"));
    }
    let z = gap_es * (n_p as f64 / design.kind.contrast_variance()).sqrt();
    Ok(match side {
        Side::Under => 1.0 - norm_cdf(z)?,
        Side::Over => norm_cdf(-z)?,
    })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(domain("sigma", sigma, "sigma > 0 and finite"))
    }
}

/// Pr(estimated effect > μ_L) for a pilot of `n_p` per group.
pub fn effect_underpower_prob(
    n_p: u64,
    mu0: f64,
    mu_l: f64,
    sigma: f64,
    design: &TestDesign,
) -> Result<f64> {
    check_sigma(sigma)?;
    tail_prob(n_p, (mu_l - mu0) / sigma, design, Side::Under)
}

/// Pr(estimated effect < μ_U) for a pilot of `n_p` per group.
pub fn effect_overpower_prob(
    n_p: u64,
    mu0: f64,
    mu_u: f64,
    sigma: f64,
    design: &TestDesign,
) -> Result<f64> {
    check_sigma(sigma)?;
    tail_prob(n_p, (mu0 - mu_u) / sigma, design, Side::Over)
}

fn pilot_n_from_gap(gap_es: f64, p: f64, design: &TestDesign, side: Side) -> Result<u64> {
    let p = Probability::open(p)?.get();
    if !(gap_es > 0.0) {
        return Err(domain(
            "effect gap",
            gap_es,
            "bound strictly beyond the prior effect",
        ));
    }
    let z = norm_quantile(1.0 - p)?;
    let n = z * z * design.kind.contrast_variance() / (gap_es * gap_es);
    if !n.is_finite() || n > u64::MAX as f64 / 2.0 {
        return Err(domain(
            "effect gap",
            gap_es,
            "large enough for a finite pilot",
        ));
    }
    let mut n = (n.ceil() as u64).max(1);
    while tail_prob(n, gap_es, design, side)? >= p {
        n += 1;
    }
    Ok(n)
}

/// Per-group pilot size keeping the chance of crossing `mu_bound` below `p`.
pub fn effect_pilot_n(
    mu0: f64,
    mu_bound: f64,
    sigma: f64,
    p: f64,
    design: &TestDesign,
    side: Side,
) -> Result<u64> {
    check_sigma(sigma)?;
    if mu_bound == mu0 {
        return Err(domain(
            "effect bound",
            mu_bound,
            "different from the prior effect",
        ));
    }
    let gap = match side {
        Side::Under => mu_bound - mu0,
        Side::Over => mu0 - mu_bound,
    };
    pilot_n_from_gap(gap / sigma, p, design, side)
}

pub fn plan_effect_pilot(
    effect: &EffectSpec,
    design: &TestDesign,
    target_power: f64,
    bounds: &PowerBounds,
    mode: QuantileMode,
) -> Result<EffectPilotPlan> {
    let target_power = Probability::open(target_power)?.get();
    bounds.validate(target_power)?;
    let es = effect.effect_size();
    let sigma = effect.sigma();

    // Main size at the threshold power, then the effect size at which that
    // (unrounded) size reaches the target power.
    let side = |threshold: f64| -> Result<(f64, f64)> {
        let size = threshold_size(es, design, threshold, mode)?;
        let es_bound = effect_size_for_n(size.unrounded, design, target_power, mode)?;
        Ok((size.unrounded, es_bound))
    };

    let (n_lower, es_lower) = side(bounds.lower.power.get())?;
    let pilot_n_lower =
        pilot_n_from_gap(es_lower - es, bounds.lower.prob.get(), design, Side::Under)?;

    let upper = match bounds.upper {
        Some(b) => {
            let (n_upper, es_upper) = side(b.power.get())?;
            let pilot = pilot_n_from_gap(es - es_upper, b.prob.get(), design, Side::Over)?;
            Some((n_upper, es_upper, pilot))
        }
        None => None,
    };

    let pilot_n_upper = upper.map(|u| u.2);
    Ok(EffectPilotPlan {
        n_lower: nearest_size(n_lower),
        n_lower_unrounded: n_lower,
        n_upper: upper.map(|u| nearest_size(u.0)),
        n_upper_unrounded: upper.map(|u| u.0),
        mu_lower: es_lower * sigma,
        mu_upper: upper.map(|u| u.1 * sigma),
        effect_size_lower: es_lower,
        effect_size_upper: upper.map(|u| u.1),
        pilot_n_lower,
        pilot_n_upper,
        pilot_n: pilot_n_upper.map_or(pilot_n_lower, |u| u.max(pilot_n_lower)),
    })
}
