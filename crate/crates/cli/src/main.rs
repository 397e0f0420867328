//! `pilotsize`: pilot-study sample size planning from the command line.
//!
//! Exit codes: 0 success, 1 computational failure, 2 usage error.

mod render;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pilot_core::effect::plan_effect_pilot;
use pilot_core::power::{
    arcsine_effect, main_sample_size, power_at, DesignKind, EffectSpec, QuantileMode, TestDesign,
};
use pilot_core::simulation::{
    reproduce_table, simulate, EffectEstimator, Scenario, SimulationConfig, TableId, TableOptions,
    DEFAULT_REPLICATES,
};
use pilot_core::variance::{plan_variance_pilot, PilotMode, PowerBounds, VarianceOptions};
use serde::Serialize;

use render::Format;

#[derive(Parser, Debug)]
#[command(
    name = "pilotsize",
    version,
    about = "Pilot-study sample sizes that bound the main study's risk of being under- or over-powered"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pilot size for estimating the outcome standard deviation.
    PlanVariance(PlanVarianceArgs),
    /// Pilot size for estimating the study effect.
    PlanEffect(PlanEffectArgs),
    /// Power of a study of a given size, and the size needed for the target power.
    Power(PowerArgs),
    /// Monte Carlo check of a pilot size.
    Simulate(SimulateArgs),
    /// Reproduce one of the two reference tables.
    Tables(TablesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Design {
    One,
    Two,
}

impl From<Design> for DesignKind {
    fn from(d: Design) -> Self {
        match d {
            Design::One => DesignKind::OneSample,
            Design::Two => DesignKind::TwoSample,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Quantile {
    Z,
    T,
}

impl From<Quantile> for QuantileMode {
    fn from(q: Quantile) -> Self {
        match q {
            Quantile::Z => QuantileMode::ZApprox,
            Quantile::T => QuantileMode::TIterative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Approx,
}

impl From<Mode> for PilotMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => PilotMode::Exact,
            Mode::Approx => PilotMode::Approx,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    Variance,
    Effect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Estimator {
    PooledSd,
    KnownSigma,
}

/// A probability given as a decimal strictly between 0 and 1.
fn probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 1.0 && v < 100.0 {
        return Err(format!(
            "{v} is not a probability; give probabilities as decimals (did you mean {}?)",
            v / 100.0
        ));
    }
    if !(v > 0.0 && v < 1.0) {
        return Err(format!("{v} must lie strictly between 0 and 1"));
    }
    Ok(v)
}

/// A proportion in [0, 1].
fn proportion(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 1.0 && v <= 100.0 {
        return Err(format!(
            "{v} is not a proportion; give proportions as decimals (did you mean {}?)",
            v / 100.0
        ));
    }
    if !(0.0..=1.0).contains(&v) {
        return Err(format!("{v} must lie in [0, 1]"));
    }
    Ok(v)
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(format!("{v} must be positive and finite"));
    }
    Ok(v)
}

#[derive(Args, Debug)]
struct DesignArgs {
    /// One-sample or two-sample main study.
    #[arg(long, value_enum, default_value = "two")]
    design: Design,
    /// Two-sided significance level.
    #[arg(long, default_value = "0.05", value_parser = probability)]
    alpha: f64,
    /// Target power of the main study.
    #[arg(long, default_value = "0.8", value_parser = probability)]
    power: f64,
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Allowed probability that the main study is underpowered.
    #[arg(long, value_parser = probability)]
    underpower_prob: f64,
    /// Power below which the main study counts as underpowered.
    #[arg(long, value_parser = probability)]
    underpower_threshold: f64,
    /// Allowed probability that the main study is overpowered.
    #[arg(long, value_parser = probability, requires = "overpower_threshold")]
    overpower_prob: Option<f64>,
    /// Power above which the main study counts as overpowered.
    #[arg(long, value_parser = probability, requires = "overpower_prob")]
    overpower_threshold: Option<f64>,
}

impl BoundArgs {
    fn bounds(&self) -> pilot_core::Result<PowerBounds> {
        let b = PowerBounds::new(self.underpower_prob, self.underpower_threshold)?;
        match (self.overpower_prob, self.overpower_threshold) {
            (Some(p), Some(t)) => b.with_upper(p, t),
            _ => Ok(b),
        }
    }
}

#[derive(Args, Debug)]
struct PlanVarianceArgs {
    /// Prior guess of the outcome standard deviation.
    #[arg(long, value_parser = positive)]
    sigma: f64,
    /// Smallest practically meaningful difference.
    #[arg(long, value_parser = positive)]
    delta: f64,
    #[command(flatten)]
    design: DesignArgs,
    #[command(flatten)]
    bounds: BoundArgs,
    /// Pilot size from the exact chi-square search or the normal approximation.
    #[arg(long, value_enum, default_value = "approx")]
    mode: Mode,
    /// How main-study sizes are solved.
    #[arg(long, value_enum, default_value = "t")]
    quantile: Quantile,
    /// Two pilot groups of N_p each with a pooled SD.
    #[arg(long)]
    pooled: bool,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("effect_entry").required(true).args(["mu0", "p1"]))]
struct PlanEffectArgs {
    /// Anticipated mean effect.
    #[arg(long, value_parser = positive, requires = "sigma", conflicts_with_all = ["p1", "p2"])]
    mu0: Option<f64>,
    /// Outcome standard deviation.
    #[arg(long, value_parser = positive, requires = "mu0")]
    sigma: Option<f64>,
    /// Anticipated proportion in the treated group.
    #[arg(long, value_parser = proportion, requires = "p2")]
    p1: Option<f64>,
    /// Anticipated proportion in the control group.
    #[arg(long, value_parser = proportion, requires = "p1")]
    p2: Option<f64>,
    #[command(flatten)]
    design: DesignArgs,
    #[command(flatten)]
    bounds: BoundArgs,
    #[arg(long, value_enum, default_value = "t")]
    quantile: Quantile,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args, Debug)]
struct PowerArgs {
    /// Mean effect.
    #[arg(long, value_parser = positive)]
    effect: f64,
    #[arg(long, value_parser = positive, default_value = "1")]
    sigma: f64,
    /// Sample size (per group for two-sample designs) to evaluate.
    #[arg(long)]
    n: Option<u64>,
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, value_enum, default_value = "t")]
    quantile: Quantile,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    /// δ for the variance scenario, true μ₀ for the effect scenario.
    #[arg(long, value_parser = positive)]
    effect: f64,
    /// True outcome standard deviation.
    #[arg(long, value_parser = positive, default_value = "1")]
    sigma: f64,
    /// Pilot size (per group in two-group pilots).
    #[arg(long)]
    pilot_n: u64,
    #[arg(long, value_parser = probability, default_value = "0.6")]
    underpower_threshold: f64,
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    reps: u64,
    #[arg(long)]
    seed: u64,
    /// Variance scenario: two pilot groups with a pooled SD.
    #[arg(long)]
    pooled: bool,
    /// Effect scenario: standardize by the pooled sample SD or the true σ.
    #[arg(long, value_enum, default_value = "pooled-sd")]
    estimator: Estimator,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Args, Debug)]
struct TablesArgs {
    #[arg(long, value_enum)]
    id: TableArg,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    reps: u64,
    #[arg(long)]
    seed: u64,
    /// Pilot-size rule used in the table.
    #[arg(long, value_enum, default_value = "approx")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "t")]
    quantile: Quantile,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

/// Failures are either the caller's (bad input, exit 2) or the computation's (exit 1).
enum Failure {
    Usage(String),
    Compute(String),
}

impl From<pilot_core::Error> for Failure {
    fn from(e: pilot_core::Error) -> Self {
        match e {
            pilot_core::Error::Domain { .. } | pilot_core::Error::InvalidConfig(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Compute(format!("{e:#}"))
    }
}

fn emit(
    format: Format,
    config: &impl Serialize,
    results: &impl Serialize,
    text: impl FnOnce() -> anyhow::Result<String>,
) -> Result<String, Failure> {
    Ok(match format {
        Format::Table => text()?,
        Format::Csv => render::csv_single(config, results)?,
        Format::Json => render::json_document(config, results)?,
    })
}

#[derive(Serialize)]
struct DesignConfig {
    design: Design,
    alpha: f64,
    power: f64,
}

impl From<&DesignArgs> for DesignConfig {
    fn from(d: &DesignArgs) -> Self {
        Self {
            design: d.design,
            alpha: d.alpha,
            power: d.power,
        }
    }
}

#[derive(Serialize)]
struct BoundConfig {
    underpower_prob: f64,
    underpower_threshold: f64,
    overpower_prob: Option<f64>,
    overpower_threshold: Option<f64>,
}

impl From<&BoundArgs> for BoundConfig {
    fn from(b: &BoundArgs) -> Self {
        Self {
            underpower_prob: b.underpower_prob,
            underpower_threshold: b.underpower_threshold,
            overpower_prob: b.overpower_prob,
            overpower_threshold: b.overpower_threshold,
        }
    }
}

fn test_design(d: &DesignArgs) -> Result<TestDesign, Failure> {
    Ok(TestDesign::new(d.design.into(), d.alpha)?)
}

fn plan_variance(a: &PlanVarianceArgs) -> Result<String, Failure> {
    #[derive(Serialize)]
    struct Config {
        command: &'static str,
        sigma: f64,
        delta: f64,
        #[serde(flatten)]
        design: DesignConfig,
        #[serde(flatten)]
        bounds: BoundConfig,
        pilot_mode: PilotMode,
        quantile: QuantileMode,
        pooled: bool,
    }
    let config = Config {
        command: "plan-variance",
        sigma: a.sigma,
        delta: a.delta,
        design: (&a.design).into(),
        bounds: (&a.bounds).into(),
        pilot_mode: a.mode.into(),
        quantile: a.quantile.into(),
        pooled: a.pooled,
    };
    let options = VarianceOptions {
        pilot_mode: a.mode.into(),
        quantile_mode: a.quantile.into(),
        pooled: a.pooled,
    };
    let plan = plan_variance_pilot(
        &EffectSpec::new(a.delta, a.sigma)?,
        &test_design(&a.design)?,
        a.design.power,
        &a.bounds.bounds()?,
        options,
    )?;
    emit(a.format, &config, &plan, || {
        render::variance_plan_text(&config, &plan)
    })
}

fn plan_effect(a: &PlanEffectArgs) -> Result<String, Failure> {
    #[derive(Serialize)]
    struct Config {
        command: &'static str,
        mu0: Option<f64>,
        sigma: Option<f64>,
        p1: Option<f64>,
        p2: Option<f64>,
        effect_size: f64,
        #[serde(flatten)]
        design: DesignConfig,
        #[serde(flatten)]
        bounds: BoundConfig,
        quantile: QuantileMode,
    }
    let effect = match (a.mu0, a.sigma, a.p1, a.p2) {
        (Some(mu0), Some(sigma), None, None) => EffectSpec::new(mu0, sigma)?,
        (None, None, Some(p1), Some(p2)) => EffectSpec::new(arcsine_effect(p1, p2)?, 1.0)?,
        _ => {
            return Err(Failure::Usage(
                "give either --mu0 with --sigma or --p1 with --p2".into(),
            ))
        }
    };
    let config = Config {
        command: "plan-effect",
        mu0: a.mu0,
        sigma: a.sigma,
        p1: a.p1,
        p2: a.p2,
        effect_size: effect.effect_size(),
        design: (&a.design).into(),
        bounds: (&a.bounds).into(),
        quantile: a.quantile.into(),
    };
    let plan = plan_effect_pilot(
        &effect,
        &test_design(&a.design)?,
        a.design.power,
        &a.bounds.bounds()?,
        a.quantile.into(),
    )?;
    emit(a.format, &config, &plan, || {
        render::effect_plan_text(&config, &plan)
    })
}

fn power(a: &PowerArgs) -> Result<String, Failure> {
    #[derive(Serialize)]
    struct Config {
        command: &'static str,
        effect: f64,
        sigma: f64,
        n: Option<u64>,
        #[serde(flatten)]
        design: DesignConfig,
        quantile: QuantileMode,
    }
    #[derive(Serialize)]
    struct Results {
        power_at_n: Option<f64>,
        required_n: u64,
        required_n_unrounded: f64,
    }
    let config = Config {
        command: "power",
        effect: a.effect,
        sigma: a.sigma,
        n: a.n,
        design: (&a.design).into(),
        quantile: a.quantile.into(),
    };
    let effect = EffectSpec::new(a.effect, a.sigma)?;
    let design = test_design(&a.design)?;
    let power_at_n = a.n.map(|n| power_at(n, &effect, &design)).transpose()?;
    let size = main_sample_size(&effect, &design, a.design.power, a.quantile.into())?;
    let results = Results {
        power_at_n,
        required_n: size.n,
        required_n_unrounded: size.unrounded,
    };
    emit(a.format, &config, &results, || {
        let mut s = String::new();
        if let (Some(n), Some(p)) = (a.n, power_at_n) {
            s.push_str(&format!("power at n = {n}: {p:.4}\n"));
        }
        s.push_str(&format!(
            "n for power {}: {} ({:.2} unrounded)\n",
            a.design.power, size.n, size.unrounded
        ));
        Ok(s)
    })
}

fn run_simulation(a: &SimulateArgs) -> Result<String, Failure> {
    let config = SimulationConfig {
        scenario: match a.scenario {
            ScenarioArg::Variance => Scenario::Variance,
            ScenarioArg::Effect => Scenario::Effect,
        },
        design: a.design.design.into(),
        alpha: a.design.alpha,
        target_power: a.design.power,
        sigma: a.sigma,
        effect: a.effect,
        underpower_threshold: a.underpower_threshold,
        pilot_n: a.pilot_n,
        replicates: a.reps,
        seed: a.seed,
        pooled_pilot: a.pooled,
        estimator: match a.estimator {
            Estimator::PooledSd => EffectEstimator::PooledSd,
            Estimator::KnownSigma => EffectEstimator::KnownSigma,
        },
    };
    let report = simulate(&config)?;
    #[derive(Serialize)]
    struct Results<'a> {
        underpowered: u64,
        empirical_underpower: f64,
        mc_standard_error: f64,
        nonpositive_estimates: u64,
        main_n: &'a Option<pilot_core::simulation::MainSizeSummary>,
    }
    let results = Results {
        underpowered: report.underpowered,
        empirical_underpower: report.empirical_underpower,
        mc_standard_error: report.mc_standard_error,
        nonpositive_estimates: report.nonpositive_estimates,
        main_n: &report.main_n,
    };
    emit(a.format, &report.config, &results, || {
        render::simulation_text(&report)
    })
}

fn tables(a: &TablesArgs) -> Result<String, Failure> {
    let id = match a.id {
        TableArg::One => TableId::Variance,
        TableArg::Two => TableId::Effect,
    };
    let mut options = TableOptions::new(a.reps, a.seed);
    options.pilot_mode = a.mode.into();
    options.quantile_mode = a.quantile.into();
    let report = reproduce_table(id, &options)?;
    Ok(match a.format {
        Format::Table => render::table_text(&report)?,
        Format::Csv => render::table_csv(&report)?,
        Format::Json => {
            #[derive(Serialize)]
            struct Results<'a> {
                table: u8,
                columns: &'a [f64],
                rows: &'a [pilot_core::simulation::TableRow],
                main_study_n: &'a Option<Vec<u64>>,
            }
            render::json_document(
                &report.options,
                &Results {
                    table: id.number(),
                    columns: &report.columns,
                    rows: &report.rows,
                    main_study_n: &report.main_study_n,
                },
            )?
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let out = match &cli.command {
        Command::PlanVariance(a) => plan_variance(a),
        Command::PlanEffect(a) => plan_effect(a),
        Command::Power(a) => power(a),
        Command::Simulate(a) => run_simulation(a),
        Command::Tables(a) => tables(a),
    };
    match out {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
