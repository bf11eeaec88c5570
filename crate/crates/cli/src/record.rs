//! Sweep rows, PASS/FAIL checks and the small fits they rely on.

use std::cmp::Ordering;

use serde::Serialize;

use crate::config::{ExperimentConfig, Suite};

/// How a measured value is compared with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Measurement only.
    Info,
    AtMost,
    AtLeast,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Info => "",
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    /// `C<n>.<invariant>`, naming the acceptance criterion and the checked invariant.
    pub criterion_id: String,
    pub case: String,
    pub quantity: String,
    /// Mesh width, or `None` for mesh-independent rows.
    pub h: Option<f64>,
    pub value: f64,
    pub threshold: Option<f64>,
    pub relation: Relation,
}

impl Row {
    pub fn info(criterion_id: &str, case: impl Into<String>, quantity: &str, h: Option<f64>, value: f64) -> Self {
        Self { criterion_id: criterion_id.into(), case: case.into(), quantity: quantity.into(), h, value, threshold: None, relation: Relation::Info }
    }

    pub fn at_most(criterion_id: &str, case: impl Into<String>, quantity: &str, h: Option<f64>, value: f64, bound: f64) -> Self {
        Self { threshold: Some(bound), relation: Relation::AtMost, ..Self::info(criterion_id, case, quantity, h, value) }
    }

    pub fn at_least(criterion_id: &str, case: impl Into<String>, quantity: &str, h: Option<f64>, value: f64, bound: f64) -> Self {
        Self { threshold: Some(bound), relation: Relation::AtLeast, ..Self::info(criterion_id, case, quantity, h, value) }
    }

    /// `None` for measurement rows. NaN never passes.
    pub fn pass(&self) -> Option<bool> {
        let t = self.threshold?;
        Some(match self.relation {
            Relation::Info => return None,
            Relation::AtMost => self.value <= t,
            Relation::AtLeast => self.value >= t,
        })
    }

    /// Acceptance criterion number parsed from the id.
    pub fn criterion(&self) -> Option<u32> {
        self.criterion_id.strip_prefix('C')?.split('.').next()?.parse().ok()
    }

    fn sort_key(&self, other: &Self) -> Ordering {
        self.criterion_id
            .cmp(&other.criterion_id)
            .then_with(|| self.case.cmp(&other.case))
            .then_with(|| self.quantity.cmp(&other.quantity))
            .then_with(|| match (self.h, other.h) {
                // coarse to fine
                (Some(a), Some(b)) => b.total_cmp(&a),
                (a, b) => a.is_some().cmp(&b.is_some()),
            })
    }
}

/// A log-log series for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Row whose value annotates the plot, typically a fitted slope.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Rows of one experiment, sorted, all tagged with the config hash.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub suite: Suite,
    pub name: String,
    pub config_hash: String,
    pub rows: Vec<Row>,
    pub plots: Vec<Plot>,
}

impl SweepResult {
    pub fn new(config: &ExperimentConfig, mut rows: Vec<Row>, mut plots: Vec<Plot>) -> Self {
        rows.sort_by(Row::sort_key);
        plots.sort_by(|a, b| a.name.cmp(&b.name));
        Self { suite: config.suite, name: config.name.clone(), config_hash: config.hash(), rows, plots }
    }

    pub fn checks(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.pass().is_some())
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.pass() == Some(false))
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    /// Whether every check of criterion `n` passed; `None` without checks.
    pub fn criterion_passed(&self, n: u32) -> Option<bool> {
        let mut seen = false;
        for r in self.checks().filter(|r| r.criterion() == Some(n)) {
            seen = true;
            if r.pass() == Some(false) {
                return Some(false);
            }
        }
        seen.then_some(true)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Observed orders `log(e_i/e_{i+1}) / log(h_i/h_{i+1})` along a ladder.
pub fn observed_orders(hs: &[f64], errors: &[f64]) -> Vec<f64> {
    hs.windows(2).zip(errors.windows(2)).map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln()).collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// `max |vᵢ/median − 1|`.
pub fn relative_spread(values: &[f64]) -> f64 {
    let med = median(values);
    values.iter().map(|v| (v / med - 1.0).abs()).fold(0.0, f64::max)
}

/// `max / median`.
pub fn max_over_median(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max) / median(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [0.5, 0.25, 0.125].iter().map(|&x: &f64| (x, 3.0 * x.powf(1.5))).collect();
        assert!((loglog_slope(&pts) - 1.5).abs() < 1e-12);
        let o = observed_orders(&[0.1, 0.05], &[4e-2, 1e-2]);
        assert!((o[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nan_fails_checks() {
        assert_eq!(Row::at_most("C1.x", "", "q", None, f64::NAN, 1.0).pass(), Some(false));
        assert_eq!(Row::at_least("C1.x", "", "q", None, f64::NAN, 1.0).pass(), Some(false));
        assert_eq!(Row::info("C1.x", "", "q", None, 1.0).pass(), None);
        assert_eq!(Row::info("C10.x", "", "q", None, 1.0).criterion(), Some(10));
    }

    #[test]
    fn spread_statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert!((relative_spread(&[0.9, 1.0, 1.2]) - 0.2).abs() < 1e-12);
        assert!((max_over_median(&[1.0, 4.0, 2.0]) - 2.0).abs() < 1e-12);
    }
}
