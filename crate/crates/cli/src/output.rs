//! Report and CSV writers.
//!
//! `report.json` goes through `serde_json::Value`, whose object keys are
//! ordered, and floats print as the shortest string that parses back to the
//! same bits; re-reading and re-printing a report is therefore byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use nearspace::pipeline::RunReport;
use nearspace::problems::{probability_current, GridProblem};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: &str = "v1";

pub fn canonical_json(value: &impl Serialize) -> anyhow::Result<String> {
    let v: Value = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Shortest round-trip form, in exponent notation for tiny or huge values.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn label(value: &impl Serialize) -> String {
    match serde_json::to_value(value) {
        Ok(Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

/// One row per candidate, in report order.
pub fn eigenvalues_csv(report: &RunReport) -> String {
    let mut s = String::from(
        "index,re_mu,im_mu,tau2,delta2,solver_residual,residual_complex,residual_real,lambda,final_tau2,tau2_alt,accepted,reason\n",
    );
    for (k, c) in report.candidates.iter().enumerate() {
        let _ = writeln!(
            s,
            "{k},{},{},{},{},{},{},{},{},{},{},{},{}",
            num(c.mu.re),
            num(c.mu.im),
            num(c.tau2),
            num(c.delta2),
            num(c.solver_residual),
            num(c.residual_complex),
            opt(c.residual_real),
            num(c.lambda),
            num(c.final_tau2),
            opt(c.tau2_alt),
            c.accepted,
            label(&c.reason),
        );
    }
    s
}

/// `mode_<k>_{re,im,current}.csv` for each accepted pair, `k` being the
/// candidate index; `current` holds the angular-momentum density.
pub fn write_fields(dir: &Path, report: &RunReport, grid: &GridProblem) -> anyhow::Result<usize> {
    let d = &grid.domain;
    for acc in &report.accepted {
        let k = acc.candidate;
        let re: Vec<f64> = acc.psi.iter().map(|z| z.re).collect();
        let im: Vec<f64> = acc.psi.iter().map(|z| z.im).collect();
        let j = probability_current(d, &acc.psi)?;
        write(dir, &format!("mode_{k}_re.csv"), &d.grid_csv(&re))?;
        write(dir, &format!("mode_{k}_im.csv"), &d.grid_csv(&im))?;
        write(dir, &format!("mode_{k}_current.csv"), &d.grid_csv(&j.lz))?;
    }
    Ok(report.accepted.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_numbers_round_trip() {
        for x in [0.0, 1.5, -162.98302515195445, 2.3e-11, 1e300, 1e-4, 0.1 + 0.2] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(num(2.5e-11), "2.5e-11");
    }

    #[test]
    fn canonical_json_is_a_fixed_point() {
        let v = serde_json::json!({"z": [0.1, 1e-300, 2.0 / 3.0, -0.0], "a": {"y": 1, "b": null}});
        let once = canonical_json(&v).unwrap();
        let back: Value = serde_json::from_str(&once).unwrap();
        assert_eq!(canonical_json(&back).unwrap(), once);
        assert!(once.find("\"a\"").unwrap() < once.find("\"z\"").unwrap());
    }
}
