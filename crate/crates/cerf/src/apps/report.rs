use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{CerfError, Result};

/// One measurement in a method comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub mac: u64,
    pub k: usize,
    pub density: f64,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
}

/// Mean ± standard error of one method across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub count: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// A collection of measurement rows sharing one metric.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
}

impl ComparisonReport {
    pub fn push(&mut self, row: ReportRow) -> Result<()> {
        if let Some(first) = self.rows.first() {
            if first.metric != row.metric {
                return Err(CerfError::InvalidParameter(format!(
                    "report already carries metric '{}', refusing to mix in '{}'",
                    first.metric, row.metric
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    /// Per-method mean and standard error of the mean, sorted by method name.
    pub fn summaries(&self) -> Vec<MethodSummary> {
        let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for row in &self.rows {
            groups.entry(&row.method).or_default().push(row.value);
        }
        groups
            .into_iter()
            .map(|(method, values)| {
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let var = if values.len() > 1 {
                    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                MethodSummary {
                    method: method.to_string(),
                    count: values.len(),
                    mean,
                    stderr: (var / n).sqrt(),
                }
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        self.render(",")
    }

    /// Tab-separated variant for direct gnuplot consumption.
    pub fn to_tsv(&self) -> String {
        self.render("\t")
    }

    fn render(&self, sep: &str) -> String {
        let mut out = String::new();
        out.push_str(&["method", "mac", "K", "density", "metric", "value", "seed"].join(sep));
        out.push('\n');
        for r in &self.rows {
            out.push_str(
                &[
                    r.method.clone(),
                    r.mac.to_string(),
                    r.k.to_string(),
                    format!("{}", r.density),
                    r.metric.clone(),
                    format!("{:.17e}", r.value),
                    r.seed.to_string(),
                ]
                .join(sep),
            );
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, value: f64, seed: u64) -> ReportRow {
        ReportRow {
            method: method.into(),
            mac: 100,
            k: 10,
            density: 0.4,
            metric: "kernel_error".into(),
            value,
            seed,
        }
    }

    #[test]
    fn rejects_mixed_metrics() {
        let mut rep = ComparisonReport::default();
        rep.push(row("a", 1.0, 0)).unwrap();
        let mut bad = row("a", 2.0, 1);
        bad.metric = "accuracy".into();
        assert!(rep.push(bad).is_err());
    }

    #[test]
    fn summary_mean_and_stderr() {
        let mut rep = ComparisonReport::default();
        for (i, v) in [1.0, 2.0, 3.0].iter().enumerate() {
            rep.push(row("m", *v, i as u64)).unwrap();
        }
        let s = &rep.summaries()[0];
        assert_eq!(s.count, 3);
        assert!((s.mean - 2.0).abs() < 1e-15);
        // sample sd = 1, stderr = 1/√3
        assert!((s.stderr - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn csv_roundtrip_is_stable() {
        let mut rep = ComparisonReport::default();
        rep.push(row("a", 0.125, 0)).unwrap();
        rep.push(row("b", 0.25, 1)).unwrap();
        assert_eq!(rep.to_csv(), rep.to_csv());
        assert_eq!(rep.to_csv().lines().count(), 3);
        assert!(rep.to_tsv().contains('\t'));
    }
}
