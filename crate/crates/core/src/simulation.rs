//! Monte Carlo check of the planners.
//!
//! Each replicate draws normal pilot data, estimates the standard deviation
//! (variance pipeline) or the standardized effect (effect pipeline), sizes the
//! main study from the estimate with exact t power, and records whether the
//! main study's true power falls below the underpower threshold.
//!
//! Replicate `i` draws from its own ChaCha8 stream (`seed`, stream `i`), so a
//! report depends only on the configuration and seed, never on scheduling.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::norm_quantile;
use crate::effect::plan_effect_pilot;
use crate::error::{Error, Result};
use crate::power::{
    size_for_effect_size, DesignKind, EffectSpec, MainSizer, QuantileMode, TestDesign,
};
use crate::variance::{plan_variance_pilot, PilotMode, PowerBounds, VarianceOptions};

pub const DEFAULT_REPLICATES: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Variance,
    Effect,
}

/// How the effect pipeline standardizes the observed mean difference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffectEstimator {
    /// Divide by the pooled sample SD (Cohen's d).
    #[default]
    PooledSd,
    /// Divide by the true σ.
    KnownSigma,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub scenario: Scenario,
    pub design: DesignKind,
    pub alpha: f64,
    pub target_power: f64,
    /// True outcome SD used to generate pilot data.
    pub sigma: f64,
    /// δ for the variance pipeline, true μ₀ for the effect pipeline.
    pub effect: f64,
    pub underpower_threshold: f64,
    /// Pilot size (per group for two-group pilots).
    pub pilot_n: u64,
    pub replicates: u64,
    pub seed: u64,
    /// Variance pipeline only: two groups of `pilot_n` with a pooled SD.
    pub pooled_pilot: bool,
    /// Effect pipeline only.
    pub estimator: EffectEstimator,
}

impl SimulationConfig {
    pub fn new(scenario: Scenario, effect: f64, sigma: f64, pilot_n: u64, seed: u64) -> Self {
        Self {
            scenario,
            design: DesignKind::TwoSample,
            alpha: 0.05,
            target_power: 0.8,
            sigma,
            effect,
            underpower_threshold: 0.6,
            pilot_n,
            replicates: DEFAULT_REPLICATES,
            seed,
            pooled_pilot: false,
            estimator: EffectEstimator::default(),
        }
    }

    pub fn test_design(&self) -> Result<TestDesign> {
        TestDesign::new(self.design, self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.replicates < 1 {
            return bad("replicates must be at least 1".into());
        }
        EffectSpec::new(self.effect, self.sigma)?;
        self.test_design()?;
        if !(self.target_power > 0.0 && self.target_power < 1.0) {
            return bad(format!(
                "target power {} must lie in (0, 1)",
                self.target_power
            ));
        }
        if !(self.underpower_threshold > 0.0 && self.underpower_threshold < self.target_power) {
            return bad(format!(
                "underpower threshold {} must lie in (0, target power {})",
                self.underpower_threshold, self.target_power
            ));
        }
        let min_n = match self.scenario {
            Scenario::Variance => 2,
            Scenario::Effect => match self.estimator {
                EffectEstimator::PooledSd => 2,
                EffectEstimator::KnownSigma => 1,
            },
        };
        if self.pilot_n < min_n {
            return bad(format!(
                "pilot size {} is below the minimum of {min_n} for this scenario",
                self.pilot_n
            ));
        }
        Ok(())
    }
}

/// Quantiles (nearest rank) of the main-study sizes chosen across replicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MainSizeSummary {
    pub min: u64,
    pub q25: u64,
    pub median: u64,
    pub q75: u64,
    pub max: u64,
}

impl MainSizeSummary {
    fn from_sizes(mut sizes: Vec<u64>) -> Option<Self> {
        if sizes.is_empty() {
            return None;
        }
        sizes.sort_unstable();
        let rank = |q: f64| {
            let k = ((q * sizes.len() as f64).ceil() as usize).clamp(1, sizes.len());
            sizes[k - 1]
        };
        Some(Self {
            min: sizes[0],
            q25: rank(0.25),
            median: rank(0.5),
            q75: rank(0.75),
            max: sizes[sizes.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub underpowered: u64,
    pub empirical_underpower: f64,
    pub mc_standard_error: f64,
    /// Effect pipeline: replicates whose estimated effect was ≤ 0.
    pub nonpositive_estimates: u64,
    /// Sizes of main studies that could be sized (estimate ≠ 0).
    pub main_n: Option<MainSizeSummary>,
}

/// Monte Carlo standard error of an empirical proportion.
pub fn mc_standard_error(p_hat: f64, replicates: u64) -> f64 {
    (p_hat * (1.0 - p_hat) / replicates as f64).sqrt()
}

pub(crate) fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Standard normal deviate by inversion of a uniform on (0, 1).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Result<f64> {
    norm_quantile(rng.sample(Open01))
}

// Mean and sum of squared deviations of `n` draws from N(mean, sd²).
fn draw_group<R: Rng>(
    rng: &mut R,
    n: u64,
    mean: f64,
    sd: f64,
    buf: &mut Vec<f64>,
) -> Result<(f64, f64)> {
    buf.clear();
    for _ in 0..n {
        buf.push(mean + sd * standard_normal(rng)?);
    }
    let m = buf.iter().sum::<f64>() / n as f64;
    let ss = buf.iter().map(|y| (y - m) * (y - m)).sum::<f64>();
    Ok((m, ss))
}

// Standardized effect estimate the main study is sized from.
fn replicate_estimate(config: &SimulationConfig, replicate: u64) -> Result<f64> {
    let mut rng = replicate_rng(config.seed, replicate);
    let mut buf = Vec::with_capacity(config.pilot_n as usize);
    let n = config.pilot_n;
    match config.scenario {
        Scenario::Variance => {
            let (_, mut ss) = draw_group(&mut rng, n, 0.0, config.sigma, &mut buf)?;
            let mut df = n as f64 - 1.0;
            if config.pooled_pilot {
                ss += draw_group(&mut rng, n, 0.0, config.sigma, &mut buf)?.1;
                df += n as f64 - 1.0;
            }
            let sd = (ss / df).sqrt();
            Ok(config.effect / sd)
        }
        Scenario::Effect => {
            let (diff, ss, df) = match config.design {
                DesignKind::TwoSample => {
                    let (m0, ss0) = draw_group(&mut rng, n, 0.0, config.sigma, &mut buf)?;
                    let (m1, ss1) = draw_group(&mut rng, n, config.effect, config.sigma, &mut buf)?;
                    (m1 - m0, ss0 + ss1, 2.0 * n as f64 - 2.0)
                }
                DesignKind::OneSample => {
                    let (m, ss) = draw_group(&mut rng, n, config.effect, config.sigma, &mut buf)?;
                    (m, ss, n as f64 - 1.0)
                }
            };
            let scale = match config.estimator {
                EffectEstimator::PooledSd => (ss / df).sqrt(),
                EffectEstimator::KnownSigma => config.sigma,
            };
            Ok(diff / scale)
        }
    }
}

struct Outcome {
    main_n: Option<u64>,
    underpowered: bool,
    nonpositive: bool,
}

/// Runs a configuration against a caller-supplied sizer, which must have been
/// built for the same design and target power. Sharing one sizer across many
/// configurations reuses its cached thresholds.
pub fn simulate_with_sizer(
    config: &SimulationConfig,
    sizer: &MainSizer,
) -> Result<SimulationReport> {
    config.validate()?;
    let design = config.test_design()?;
    if sizer.design() != &design || sizer.power_target() != config.target_power {
        return Err(Error::InvalidConfig(
            "sizer was built for a different design or power target".into(),
        ));
    }
    let true_es = config.effect / config.sigma;
    // Power rises with n, so "true power below the threshold" is "n below the
    // smallest size that reaches it".
    let adequate_from = size_for_effect_size(
        true_es,
        &design,
        config.underpower_threshold,
        QuantileMode::TIterative,
    )?
    .n;

    let outcomes = (0..config.replicates)
        .into_par_iter()
        .map(|i| {
            let estimate = replicate_estimate(config, i)?;
            let nonpositive = estimate <= 0.0;
            // A negative estimate is sized on its magnitude; a zero estimate
            // would need an unbounded study and is never underpowered.
            if estimate == 0.0 {
                return Ok(Outcome {
                    main_n: None,
                    underpowered: false,
                    nonpositive,
                });
            }
            let main_n = sizer.size_for(estimate.abs())?;
            Ok(Outcome {
                main_n: Some(main_n),
                underpowered: main_n < adequate_from,
                nonpositive,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let underpowered = outcomes.iter().filter(|o| o.underpowered).count() as u64;
    let nonpositive_estimates = outcomes.iter().filter(|o| o.nonpositive).count() as u64;
    let sizes = outcomes.iter().filter_map(|o| o.main_n).collect();
    let p_hat = underpowered as f64 / config.replicates as f64;
    Ok(SimulationReport {
        config: config.clone(),
        underpowered,
        empirical_underpower: p_hat,
        mc_standard_error: mc_standard_error(p_hat, config.replicates),
        nonpositive_estimates,
        main_n: MainSizeSummary::from_sizes(sizes),
    })
}

fn expect_scenario(config: &SimulationConfig, scenario: Scenario) -> Result<()> {
    if config.scenario == scenario {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "expected a {scenario:?} configuration, got {:?}",
            config.scenario
        )))
    }
}

pub fn simulate_variance_pipeline(config: &SimulationConfig) -> Result<SimulationReport> {
    expect_scenario(config, Scenario::Variance)?;
    simulate(config)
}

pub fn simulate_effect_pipeline(config: &SimulationConfig) -> Result<SimulationReport> {
    expect_scenario(config, Scenario::Effect)?;
    simulate(config)
}

/// Dispatches on `config.scenario`.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationReport> {
    config.validate()?;
    let sizer = MainSizer::new(config.test_design()?, config.target_power)?;
    simulate_with_sizer(config, &sizer)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableId {
    /// Pilot sizes for estimating the SD, over σ × δ × underpower probability.
    #[serde(rename = "1")]
    Variance,
    /// Pilot sizes for estimating the effect, over effect size × underpower probability.
    #[serde(rename = "2")]
    Effect,
}

impl TableId {
    pub fn number(self) -> u8 {
        match self {
            TableId::Variance => 1,
            TableId::Effect => 2,
        }
    }
}

pub const TABLE1_UNDERPOWER_PROBS: [f64; 3] = [0.1, 0.2, 0.3];
pub const TABLE1_DELTAS: [f64; 4] = [1.0, 2.0, 3.0, 4.0];
pub const TABLE1_SIGMAS: [f64; 5] = [2.0, 3.0, 4.0, 5.0, 6.0];
pub const TABLE2_UNDERPOWER_PROBS: [f64; 5] = [0.2, 0.25, 0.3, 0.35, 0.4];
pub const TABLE2_EFFECT_SIZES: [f64; 3] = [0.2, 0.5, 0.8];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableOptions {
    pub replicates: u64,
    pub seed: u64,
    pub alpha: f64,
    pub target_power: f64,
    pub underpower_threshold: f64,
    pub pilot_mode: PilotMode,
    pub quantile_mode: QuantileMode,
}

impl TableOptions {
    pub fn new(replicates: u64, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            alpha: 0.05,
            target_power: 0.8,
            underpower_threshold: 0.6,
            pilot_mode: PilotMode::Approx,
            quantile_mode: QuantileMode::TIterative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub underpower_prob: f64,
    /// δ for the variance table; absent for the effect table.
    pub delta: Option<f64>,
    pub pilot_n: Vec<u64>,
    pub empirical_underpower: Vec<f64>,
}

/// Both halves of a reproduced table: computed pilot sizes and their
/// simulated underpower probabilities, one entry per column value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableReport {
    pub id: TableId,
    pub options: TableOptions,
    /// σ values (variance table) or effect sizes (effect table).
    pub columns: Vec<f64>,
    pub rows: Vec<TableRow>,
    /// Main-study size at the target power per column (effect table only).
    pub main_study_n: Option<Vec<u64>>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for table cell `index`, derived from the table seed.
pub fn cell_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

pub fn reproduce_table(id: TableId, options: &TableOptions) -> Result<TableReport> {
    let design = TestDesign::new(DesignKind::TwoSample, options.alpha)?;
    let sizer = MainSizer::new(design, options.target_power)?;
    let mut cell = 0u64;
    let mut next_seed = || {
        let s = cell_seed(options.seed, cell);
        cell += 1;
        s
    };
    let base = |scenario, effect, sigma, pilot_n, seed| SimulationConfig {
        scenario,
        design: DesignKind::TwoSample,
        alpha: options.alpha,
        target_power: options.target_power,
        sigma,
        effect,
        underpower_threshold: options.underpower_threshold,
        pilot_n,
        replicates: options.replicates,
        seed,
        pooled_pilot: false,
        estimator: EffectEstimator::PooledSd,
    };

    match id {
        TableId::Variance => {
            let var_opts = VarianceOptions {
                pilot_mode: options.pilot_mode,
                quantile_mode: options.quantile_mode,
                pooled: false,
            };
            let mut rows = Vec::new();
            for &p in &TABLE1_UNDERPOWER_PROBS {
                let bounds = PowerBounds::new(p, options.underpower_threshold)?;
                for &delta in &TABLE1_DELTAS {
                    let mut pilot_n = Vec::new();
                    let mut sim = Vec::new();
                    for &sigma in &TABLE1_SIGMAS {
                        let effect = EffectSpec::new(delta, sigma)?;
                        let plan = plan_variance_pilot(
                            &effect,
                            &design,
                            options.target_power,
                            &bounds,
                            var_opts,
                        )?;
                        let cfg = base(Scenario::Variance, delta, sigma, plan.pilot_n, next_seed());
                        pilot_n.push(plan.pilot_n);
                        sim.push(simulate_with_sizer(&cfg, &sizer)?.empirical_underpower);
                    }
                    rows.push(TableRow {
                        underpower_prob: p,
                        delta: Some(delta),
                        pilot_n,
                        empirical_underpower: sim,
                    });
                }
            }
            Ok(TableReport {
                id,
                options: *options,
                columns: TABLE1_SIGMAS.to_vec(),
                rows,
                main_study_n: None,
            })
        }
        TableId::Effect => {
            let mut rows = Vec::new();
            for &p in &TABLE2_UNDERPOWER_PROBS {
                let bounds = PowerBounds::new(p, options.underpower_threshold)?;
                let mut pilot_n = Vec::new();
                let mut sim = Vec::new();
                for &es in &TABLE2_EFFECT_SIZES {
                    let effect = EffectSpec::new(es, 1.0)?;
                    let plan = plan_effect_pilot(
                        &effect,
                        &design,
                        options.target_power,
                        &bounds,
                        options.quantile_mode,
                    )?;
                    let cfg = base(Scenario::Effect, es, 1.0, plan.pilot_n, next_seed());
                    pilot_n.push(plan.pilot_n);
                    sim.push(simulate_with_sizer(&cfg, &sizer)?.empirical_underpower);
                }
                rows.push(TableRow {
                    underpower_prob: p,
                    delta: None,
                    pilot_n,
                    empirical_underpower: sim,
                });
            }
            let main_study_n = TABLE2_EFFECT_SIZES
                .iter()
                .map(|&es| {
                    Ok(size_for_effect_size(
                        es,
                        &design,
                        options.target_power,
                        options.quantile_mode,
                    )?
                    .n)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TableReport {
                id,
                options: *options,
                columns: TABLE2_EFFECT_SIZES.to_vec(),
                rows,
                main_study_n: Some(main_study_n),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_configs_fail_before_sampling() {
        let mut c = SimulationConfig::new(Scenario::Variance, 1.0, 4.0, 1, 3);
        assert!(simulate(&c).is_err());
        c.pilot_n = 12;
        c.replicates = 0;
        assert!(simulate(&c).is_err());
        c.replicates = 10;
        c.underpower_threshold = 0.9;
        assert!(simulate(&c).is_err());
        let e = SimulationConfig::new(Scenario::Effect, 0.5, 1.0, 10, 3);
        assert!(simulate_variance_pipeline(&e).is_err());
    }

    #[test]
    fn substreams_are_distinct_and_stable() {
        let a: f64 = replicate_rng(9, 0).sample(Open01);
        let b: f64 = replicate_rng(9, 1).sample(Open01);
        let a2: f64 = replicate_rng(9, 0).sample(Open01);
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn standard_error_formula() {
        assert!((mc_standard_error(0.2, 1000) - (0.16f64 / 1000.0).sqrt()).abs() < 1e-15);
        assert_eq!(mc_standard_error(0.0, 10), 0.0);
    }

    #[test]
    fn nearest_rank_summary() {
        let s = MainSizeSummary::from_sizes(vec![5, 1, 4, 2, 3]).unwrap();
        assert_eq!((s.min, s.q25, s.median, s.q75, s.max), (1, 2, 3, 4, 5));
        assert!(MainSizeSummary::from_sizes(vec![]).is_none());
    }
}
