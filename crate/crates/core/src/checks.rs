//! Advisory reports produced by the numerical condition checkers.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub pass: bool,
    /// Empirical constant for the inequality (meaning depends on the check).
    pub constant: f64,
    pub witness_x: Option<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl ConditionCheck {
    pub fn new(name: impl Into<String>, pass: bool, constant: f64, witness_x: Option<f64>) -> Self {
        ConditionCheck {
            name: name.into(),
            pass,
            constant,
            witness_x,
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub subject: String,
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn new(subject: impl Into<String>) -> Self {
        ConditionReport {
            subject: subject.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: ConditionCheck) {
        self.checks.push(check);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Least-squares slope of `ln(values)` against `ln(ns)`.
///
/// Returns `NaN` when fewer than two usable (positive, finite) points exist.
pub fn log_log_slope(ns: &[f64], values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(values)
        .filter(|(n, v)| **n > 0.0 && **v > 0.0 && v.is_finite())
        .map(|(n, v)| (n.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return f64::NAN;
    }
    sxy / sxx
}

/// `count` points spaced logarithmically in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// `count` points spaced uniformly in `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let ns = [2.0, 4.0, 8.0, 16.0];
        let vals: Vec<f64> = ns.iter().map(|n: &f64| 3.0 * n.powf(0.37)).collect();
        assert!((log_log_slope(&ns, &vals) - 0.37).abs() < 1e-12);
        assert!(log_log_slope(&[1.0], &[1.0]).is_nan());
    }

    #[test]
    fn grids_hit_endpoints() {
        let g = log_grid(1e-3, 10.0, 5);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[4] - 10.0).abs() < 1e-12);
        let l = linear_grid(-1.0, 1.0, 3);
        assert_eq!(l, vec![-1.0, 0.0, 1.0]);
    }
}
