//! Output rendering: human-readable text, CSV and JSON.

use std::fmt::Write as _;

use anyhow::Result;
use clap::ValueEnum;
use pilot_core::effect::EffectPilotPlan;
use pilot_core::simulation::{SimulationReport, TableId, TableReport};
use pilot_core::variance::VariancePilotPlan;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    #[value(name = "table", alias = "human-table")]
    Table,
    Csv,
    Json,
}

/// `{config, results}` as pretty JSON.
pub fn json_document(config: &impl Serialize, results: &impl Serialize) -> Result<String> {
    let doc = json!({ "config": config, "results": results });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

// Flattens nested objects into dotted column names; arrays become `name.0`, ...
fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn columns(config: &impl Serialize, results: &impl Serialize) -> Result<Vec<(String, String)>> {
    let mut cols = Vec::new();
    flatten("", &serde_json::to_value(config)?, &mut cols);
    flatten("", &serde_json::to_value(results)?, &mut cols);
    Ok(cols)
}

fn write_csv(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Header plus one data row: every config value followed by every result.
pub fn csv_single(config: &impl Serialize, results: &impl Serialize) -> Result<String> {
    let (header, row): (Vec<_>, Vec<_>) = columns(config, results)?.into_iter().unzip();
    write_csv(&header, &[row])
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn variance_plan_text(config: &impl Serialize, plan: &VariancePilotPlan) -> Result<String> {
    let mut s = config_block(config)?;
    writeln!(s, "Variance pilot plan")?;
    writeln!(
        s,
        "  1. main-study size at the underpower threshold  N_L   = {}  ({:.2} unrounded)",
        plan.n_lower, plan.n_lower_unrounded
    )?;
    writeln!(
        s,
        "  2. SD at which N_L reaches the target power     σ_L   = {:.4}",
        plan.sigma_lower
    )?;
    writeln!(
        s,
        "     variance ratio (σ_L/σ)²                              = {:.4}",
        plan.ratio_lower
    )?;
    writeln!(
        s,
        "  3. pilot size for the underpower bound          N_pL  = {}",
        plan.pilot_n_lower
    )?;
    if let (Some(n), Some(nu), Some(sigma), Some(ratio), Some(np)) = (
        plan.n_upper,
        plan.n_upper_unrounded,
        plan.sigma_upper,
        plan.ratio_upper,
        plan.pilot_n_upper,
    ) {
        writeln!(
            s,
            "  4. main-study size at the overpower threshold   N_U   = {n}  ({nu:.2} unrounded)"
        )?;
        writeln!(
            s,
            "     SD at which N_U reaches the target power     σ_U   = {sigma:.4}"
        )?;
        writeln!(
            s,
            "     variance ratio (σ_U/σ)²                              = {ratio:.4}"
        )?;
        writeln!(
            s,
            "     pilot size for the overpower bound         N_pU  = {np}"
        )?;
    }
    writeln!(
        s,
        "Pilot sample size N_p = {}  ({:?} mode; exact {}, approx {})",
        plan.pilot_n, plan.mode, plan.pilot_n_exact, plan.pilot_n_approx
    )?;
    Ok(s)
}

pub fn effect_plan_text(config: &impl Serialize, plan: &EffectPilotPlan) -> Result<String> {
    let mut s = config_block(config)?;
    writeln!(s, "Effect pilot plan")?;
    writeln!(
        s,
        "  1. main-study size at the underpower threshold  N_L   = {}  ({:.2} unrounded)",
        plan.n_lower, plan.n_lower_unrounded
    )?;
    writeln!(
        s,
        "  2. effect at which N_L reaches the target power μ_L   = {:.4}  (effect size {:.4})",
        plan.mu_lower, plan.effect_size_lower
    )?;
    writeln!(
        s,
        "  3. pilot size for the underpower bound          N_pL  = {}",
        plan.pilot_n_lower
    )?;
    if let (Some(n), Some(nu), Some(mu), Some(es), Some(np)) = (
        plan.n_upper,
        plan.n_upper_unrounded,
        plan.mu_upper,
        plan.effect_size_upper,
        plan.pilot_n_upper,
    ) {
        writeln!(
            s,
            "  4. main-study size at the overpower threshold   N_U   = {n}  ({nu:.2} unrounded)"
        )?;
        writeln!(s, "     effect at which N_U reaches the target power μ_U   = {mu:.4}  (effect size {es:.4})")?;
        writeln!(
            s,
            "     pilot size for the overpower bound         N_pU  = {np}"
        )?;
    }
    writeln!(s, "Pilot sample size N_p = {} per group", plan.pilot_n)?;
    Ok(s)
}

pub fn simulation_text(report: &SimulationReport) -> Result<String> {
    let mut s = config_block(&report.config)?;
    writeln!(s, "Simulation report")?;
    writeln!(
        s,
        "  underpowered main studies   {} of {}",
        report.underpowered, report.config.replicates
    )?;
    writeln!(
        s,
        "  empirical underpower prob.  {:.4}",
        report.empirical_underpower
    )?;
    writeln!(
        s,
        "  Monte Carlo standard error  {:.4}",
        report.mc_standard_error
    )?;
    writeln!(
        s,
        "  non-positive estimates      {}",
        report.nonpositive_estimates
    )?;
    if let Some(m) = report.main_n {
        writeln!(
            s,
            "  main-study size  min {}  q25 {}  median {}  q75 {}  max {}",
            m.min, m.q25, m.median, m.q75, m.max
        )?;
    }
    Ok(s)
}

fn config_block(config: &impl Serialize) -> Result<String> {
    let mut cols = Vec::new();
    flatten("", &serde_json::to_value(config)?, &mut cols);
    let width = cols.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::from("Configuration\n");
    for (k, v) in cols {
        let v = if v.is_empty() { "-".to_string() } else { v };
        writeln!(s, "  {k:width$}  {v}")?;
    }
    s.push('\n');
    Ok(s)
}

fn pct(p: f64) -> String {
    format!("{:.1}%", 100.0 * p)
}

fn trim(x: f64) -> String {
    // 0.25 stays 0.25, 2.0 becomes 2.
    let s = format!("{x}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

/// The published table layout: pilot sizes on the left, simulated underpower
/// probabilities on the right.
pub fn table_text(report: &TableReport) -> Result<String> {
    let mut s = config_block(&report.options)?;
    let k = report.columns.len();
    let col_name = match report.id {
        TableId::Variance => "σ",
        TableId::Effect => "effect size",
    };
    let lead = match report.id {
        TableId::Variance => 16,
        TableId::Effect => 10,
    };
    writeln!(
        s,
        "Table {}: pilot sample size (left) and simulated underpower probability (right), {} replicates",
        report.id.number(),
        report.options.replicates
    )?;
    let heads: Vec<String> = report.columns.iter().map(|&c| trim(c)).collect();
    let mut header = format!("{:<lead$}", format!("underpower / {col_name}"));
    for h in &heads {
        write!(header, "{h:>7}")?;
    }
    header.push_str("   |");
    for h in &heads {
        write!(header, "{h:>8}")?;
    }
    writeln!(s, "{header}")?;
    writeln!(s, "{}", "-".repeat(header.chars().count()))?;
    for row in &report.rows {
        let label = match row.delta {
            Some(d) => format!("{:<6} δ={}", pct(row.underpower_prob), trim(d)),
            None => pct(row.underpower_prob),
        };
        let mut line = format!("{label:<lead$}");
        for n in &row.pilot_n {
            write!(line, "{n:>7}")?;
        }
        line.push_str("   |");
        for p in &row.empirical_underpower {
            write!(line, "{:>8}", pct(*p))?;
        }
        writeln!(s, "{line}")?;
    }
    if let Some(main) = &report.main_study_n {
        let mut line = format!("{:<lead$}", "main study");
        for n in main {
            write!(line, "{n:>7}")?;
        }
        line.push_str("   |");
        line.push_str(&" ".repeat(8 * k));
        writeln!(s, "{}", line.trim_end())?;
    }
    Ok(s)
}

/// One CSV row per table row, columns in the published order, followed by the
/// echoed options.
pub fn table_csv(report: &TableReport) -> Result<String> {
    let mut opts = Vec::new();
    flatten("", &serde_json::to_value(report.options)?, &mut opts);
    let col = match report.id {
        TableId::Variance => "sigma",
        TableId::Effect => "effect_size",
    };
    let mut header = vec![
        "table".to_string(),
        "row".to_string(),
        "underpower_prob".to_string(),
    ];
    if report.id == TableId::Variance {
        header.push("delta".to_string());
    }
    for c in &report.columns {
        header.push(format!("pilot_n.{col}={}", trim(*c)));
    }
    for c in &report.columns {
        header.push(format!("underpower.{col}={}", trim(*c)));
    }
    header.extend(opts.iter().map(|(k, _)| k.clone()));

    let table = report.id.number().to_string();
    let mut rows = Vec::new();
    for row in &report.rows {
        let mut r = vec![
            table.clone(),
            "pilot".to_string(),
            row.underpower_prob.to_string(),
        ];
        if report.id == TableId::Variance {
            r.push(opt(row.delta));
        }
        r.extend(row.pilot_n.iter().map(u64::to_string));
        r.extend(row.empirical_underpower.iter().map(f64::to_string));
        r.extend(opts.iter().map(|(_, v)| v.clone()));
        rows.push(r);
    }
    if let Some(main) = &report.main_study_n {
        let mut r = vec![table.clone(), "main-study".to_string(), String::new()];
        r.extend(main.iter().map(u64::to_string));
        r.extend(main.iter().map(|_| String::new()));
        r.extend(opts.iter().map(|(_, v)| v.clone()));
        rows.push(r);
    }
    write_csv(&header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_names_nested_fields() {
        let mut out = Vec::new();
        flatten(
            "",
            &json!({"a": 1, "b": {"c": [2, 3], "d": null}, "e": "x"}),
            &mut out,
        );
        let keys: Vec<_> = out.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["a", "b.c.0", "b.c.1", "b.d", "e"]);
        assert_eq!(out[4].1, "x");
        assert_eq!(out[3].1, "");
    }

    #[test]
    fn csv_single_has_one_header_and_one_row() {
        let text = csv_single(&json!({"alpha": 0.05}), &json!({"n": 12})).unwrap();
        assert_eq!(text, "alpha,n\n0.05,12\n");
    }

    #[test]
    fn trim_drops_integral_suffix() {
        assert_eq!(trim(2.0), "2");
        assert_eq!(trim(0.25), "0.25");
    }
}
