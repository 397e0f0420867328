//! Main-study machinery: sample size, exact power and the inverse solves that
//! map a sample size back to the standard deviation or effect it is sized for.
//!
//! Power is the upper-tail rejection probability of the t statistic against the
//! two-sided critical value `t_{1-α/2}`, evaluated with the non-central t
//! distribution. Two-sample designs are equal-allocation and every size is per
//! group.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::distributions::{
    norm_quantile, DegreesOfFreedom, NonCentrality, NoncentralT, Probability, StudentsT,
};
use crate::error::{domain, Error, Result};
use crate::roots::brent;

const ROOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignKind {
    OneSample,
    TwoSample,
}

impl DesignKind {
    /// Degrees of freedom of the main-study t test with `n` per group.
    pub fn df(self, n: f64) -> f64 {
        match self {
            DesignKind::OneSample => n - 1.0,
            DesignKind::TwoSample => 2.0 * n - 2.0,
        }
    }

    /// Multiplier turning an effect size into the non-centrality parameter.
    pub fn ncp_scale(self, n: f64) -> f64 {
        match self {
            DesignKind::OneSample => n.sqrt(),
            DesignKind::TwoSample => (0.5 * n).sqrt(),
        }
    }

    /// Variance of the mean contrast in units of σ²/n.
    pub fn contrast_variance(self) -> f64 {
        match self {
            DesignKind::OneSample => 1.0,
            DesignKind::TwoSample => 2.0,
        }
    }
}

/// Test kind and type I error of the main study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestDesign {
    pub kind: DesignKind,
    alpha: Probability,
}

impl TestDesign {
    pub fn new(kind: DesignKind, alpha: f64) -> Result<Self> {
        Ok(Self {
            kind,
            alpha: Probability::open(alpha)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.get()
    }

    fn critical_value(&self, df: f64) -> Result<f64> {
        StudentsT::new(DegreesOfFreedom::new(df)?)
            .quantile(Probability::open(1.0 - 0.5 * self.alpha())?)
    }

    fn z_alpha(&self) -> Result<f64> {
        norm_quantile(1.0 - 0.5 * self.alpha())
    }
}

/// An effect (δ or μ₀) together with the outcome standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectSpec {
    effect: f64,
    sigma: f64,
}

impl EffectSpec {
    pub fn new(effect: f64, sigma: f64) -> Result<Self> {
        if !(effect > 0.0 && effect.is_finite()) {
            return Err(domain("effect", effect, "effect > 0 and finite"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(domain("sigma", sigma, "sigma > 0 and finite"));
        }
        Ok(Self { effect, sigma })
    }

    /// Unit-variance effect from two proportions via the arcsine transform.
    pub fn from_proportions(p1: f64, p2: f64) -> Result<Self> {
        Self::new(arcsine_effect(p1, p2)?, 1.0)
    }

    pub fn effect(&self) -> f64 {
        self.effect
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn effect_size(&self) -> f64 {
        self.effect / self.sigma
    }
}

/// How the main-study size and its inverses are computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantileMode {
    /// Closed form with normal quantiles in place of t quantiles.
    ZApprox,
    /// Exact non-central t power with the degrees of freedom tied to the size.
    #[default]
    TIterative,
}

/// A per-group main-study size and the real-valued solution it was rounded up from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MainSize {
    pub n: u64,
    pub unrounded: f64,
}

/// Main size at a threshold power, for the planners: the later steps need a
/// real-valued size above the two-subject floor.
pub(crate) fn threshold_size(
    effect_size: f64,
    design: &TestDesign,
    threshold: f64,
    mode: QuantileMode,
) -> Result<MainSize> {
    let size = size_for_effect_size(effect_size, design, threshold, mode)?;
    if size.unrounded <= 2.0 {
        return Err(Error::InvalidConfig(format!(
            "effect size {effect_size} already gives power {threshold} with the minimum main study of 2; \
             planning bounds are undefined"
        )));
    }
    Ok(size)
}

/// A real-valued size to the nearest integer, as quoted for intermediate
/// planning steps (never below 2).
pub fn nearest_size(unrounded: f64) -> u64 {
    unrounded.round().max(2.0) as u64
}

fn check_target(power: f64) -> Result<Probability> {
    Probability::open(power)
}

/// Power of a study with `n` per group (real-valued `n >= 2` allowed).
pub fn power_for_effect_size(n: f64, effect_size: f64, design: &TestDesign) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(domain("n", n, "n >= 2"));
    }
    let kind = design.kind;
    let df = kind.df(n);
    let crit = design.critical_value(df)?;
    let ncp = NonCentrality::new(effect_size * kind.ncp_scale(n))?;
    NoncentralT::new(DegreesOfFreedom::new(df)?, ncp).sf(crit)
}

/// Power of a main study with `n` subjects per group.
pub fn power_at(n: u64, effect: &EffectSpec, design: &TestDesign) -> Result<f64> {
    power_for_effect_size(n as f64, effect.effect_size(), design)
}

/// Smallest per-group size reaching `power_target`.
pub fn main_sample_size(
    effect: &EffectSpec,
    design: &TestDesign,
    power_target: f64,
    mode: QuantileMode,
) -> Result<MainSize> {
    size_for_effect_size(effect.effect_size(), design, power_target, mode)
}

pub fn size_for_effect_size(
    effect_size: f64,
    design: &TestDesign,
    power_target: f64,
    mode: QuantileMode,
) -> Result<MainSize> {
    let target = check_target(power_target)?.get();
    if !(effect_size > 0.0 && effect_size.is_finite()) {
        return Err(domain(
            "effect size",
            effect_size,
            "effect size > 0 and finite",
        ));
    }
    let z_guess = z_closed_form(effect_size, design, target)?;
    match mode {
        QuantileMode::ZApprox => Ok(MainSize {
            n: ceil_size(z_guess),
            unrounded: z_guess,
        }),
        QuantileMode::TIterative => {
            let power = |n: f64| power_for_effect_size(n, effect_size, design);
            if power(2.0)? >= target {
                return Ok(MainSize {
                    n: 2,
                    unrounded: 2.0,
                });
            }
            let mut hi = (2.0 * z_guess).max(4.0);
            while power(hi)? < target {
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(Error::InvalidConfig(
                        "power target unreachable for this effect".into(),
                    ));
                }
            }
            let root = brent(
                "main sample size",
                |n| Ok(power(n)? - target),
                2.0,
                hi,
                ROOT_TOL,
            )?;
            let mut n = ceil_size(root);
            while power(n as f64)? < target {
                n += 1;
            }
            while n > 2 && power((n - 1) as f64)? >= target {
                n -= 1;
            }
            Ok(MainSize { n, unrounded: root })
        }
    }
}

fn z_closed_form(effect_size: f64, design: &TestDesign, target: f64) -> Result<f64> {
    let z = design.z_alpha()? + norm_quantile(target)?;
    Ok(design.kind.contrast_variance() * z * z / (effect_size * effect_size))
}

fn ceil_size(n: f64) -> u64 {
    (n.ceil() as u64).max(2)
}

/// The effect size at which a study with `n` per group has exactly `power`.
pub fn effect_size_for_n(
    n: f64,
    design: &TestDesign,
    power: f64,
    mode: QuantileMode,
) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(domain("n", n, "n >= 2"));
    }
    let target = check_target(power)?.get();
    let z_guess =
        (design.z_alpha()? + norm_quantile(target)?) * (design.kind.contrast_variance() / n).sqrt();
    match mode {
        QuantileMode::ZApprox => Ok(z_guess),
        QuantileMode::TIterative => {
            if target <= 0.5 * design.alpha() {
                return Err(domain("power", target, "power > alpha/2"));
            }
            let f = |e: f64| Ok(power_for_effect_size(n, e, design)? - target);
            let mut hi = z_guess.abs().max(0.1) * 2.0;
            while f(hi)? < 0.0 {
                hi *= 2.0;
            }
            brent("effect size for n", f, 0.0, hi, ROOT_TOL)
        }
    }
}

/// Standard deviation at which `n` per group gives `power` for effect `delta`.
pub fn sigma_for_n(
    n: f64,
    delta: f64,
    design: &TestDesign,
    power: f64,
    mode: QuantileMode,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(domain("delta", delta, "delta > 0"));
    }
    Ok(delta / effect_size_for_n(n, design, power, mode)?)
}

/// Effect at which `n` per group gives `power` when the SD is `sigma`.
pub fn mu_for_n(
    n: f64,
    sigma: f64,
    design: &TestDesign,
    power: f64,
    mode: QuantileMode,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(domain("sigma", sigma, "sigma > 0"));
    }
    Ok(sigma * effect_size_for_n(n, design, power, mode)?)
}

/// 2·asin(√p1) − 2·asin(√p2): the variance-stabilised difference of two proportions.
pub fn arcsine_effect(p1: f64, p2: f64) -> Result<f64> {
    let p1 = Probability::new(p1)?.get();
    let p2 = Probability::new(p2)?.get();
    if p2 > p1 {
        return Err(Error::InvalidConfig(format!(
            "proportions must satisfy p2 <= p1 (got p1 = {p1}, p2 = {p2})"
        )));
    }
    Ok(2.0 * p1.sqrt().asin() - 2.0 * p2.sqrt().asin())
}

/// Repeated main-study sizing for one design and power target, as the
/// simulation needs it: the minimal effect size reaching the target at each
/// `n` is solved once and cached, after which sizing from an effect estimate
/// is a short walk over cached thresholds.
#[derive(Debug)]
pub struct MainSizer {
    design: TestDesign,
    target: f64,
    thresholds: Mutex<HashMap<u64, f64>>,
}

impl MainSizer {
    pub fn new(design: TestDesign, power_target: f64) -> Result<Self> {
        let target = check_target(power_target)?.get();
        if target <= 0.5 * design.alpha() {
            return Err(domain("power", target, "power > alpha/2"));
        }
        Ok(Self {
            design,
            target,
            thresholds: Mutex::new(HashMap::new()),
        })
    }

    pub fn design(&self) -> &TestDesign {
        &self.design
    }

    pub fn power_target(&self) -> f64 {
        self.target
    }

    /// Effect size at which `n` per group reaches the power target.
    pub fn threshold(&self, n: u64) -> Result<f64> {
        if let Some(&t) = self.thresholds.lock().unwrap().get(&n) {
            return Ok(t);
        }
        let t = effect_size_for_n(
            n as f64,
            &self.design,
            self.target,
            QuantileMode::TIterative,
        )?;
        self.thresholds.lock().unwrap().insert(n, t);
        Ok(t)
    }

    /// Same result as [`size_for_effect_size`] in t-iterative mode.
    pub fn size_for(&self, effect_size: f64) -> Result<u64> {
        if !(effect_size > 0.0 && effect_size.is_finite()) {
            return Err(domain(
                "effect size",
                effect_size,
                "effect size > 0 and finite",
            ));
        }
        if effect_size >= self.threshold(2)? {
            return Ok(2);
        }
        let guess = z_closed_form(effect_size, &self.design, self.target)?;
        if !(guess < 1e15) {
            return Err(domain(
                "effect size",
                effect_size,
                "large enough for a finite study",
            ));
        }
        let mut n = ceil_size(guess);
        if self.threshold(n)? <= effect_size {
            while n > 2 && self.threshold(n - 1)? <= effect_size {
                n -= 1;
            }
        } else {
            while self.threshold(n)? > effect_size {
                n += 1;
            }
        }
        Ok(n)
    }
}
