//! Statistical reporting of pose errors: mean +/- standard deviation per
//! metric, per tool, plus a Markdown rendering of the usual four-row layout
//! (position, roll, pitch, yaw) with one column per tool.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::navigate::Tool;
use crate::se3::PoseError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no error samples to aggregate")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    Position,
    Roll,
    Pitch,
    Yaw,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Position, Metric::Roll, Metric::Pitch, Metric::Yaw];

    pub fn label(&self) -> &'static str {
        match self {
            Metric::Position => "Position",
            Metric::Roll => "Roll",
            Metric::Pitch => "Pitch",
            Metric::Yaw => "Yaw",
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            Metric::Position => "mm",
            _ => "deg",
        }
    }

    fn extract(&self, e: &PoseError) -> f64 {
        match self {
            Metric::Position => e.position_mm,
            Metric::Roll => e.roll_deg,
            Metric::Pitch => e.pitch_deg,
            Metric::Yaw => e.yaw_deg,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorRow {
    pub tool: Tool,
    pub metric: Metric,
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator); 0 for a single sample.
    pub std: f64,
    pub n: usize,
    pub unit: String,
    /// Set when n = 1, where the sample deviation is defined as 0.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub warn_single_sample: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_range: Option<(u64, u64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub metadata: ReportMetadata,
}

/// Mean and sample standard deviation per metric for one tool's errors.
pub fn aggregate(errors: &[PoseError], tool: Tool) -> Result<Vec<ErrorRow>, MetricsError> {
    if errors.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = errors.len();
    Ok(Metric::ALL
        .iter()
        .map(|metric| {
            let values: Vec<f64> = errors.iter().map(|e| metric.extract(e)).collect();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
                var.sqrt()
            } else {
                0.0
            };
            ErrorRow {
                tool,
                metric: *metric,
                mean,
                std,
                n,
                unit: metric.unit().to_string(),
                warn_single_sample: n == 1,
            }
        })
        .collect())
}

impl ErrorReport {
    pub fn new(rows: Vec<ErrorRow>, metadata: ReportMetadata) -> Self {
        ErrorReport { rows, metadata }
    }

    fn cell(&self, tool: Tool, metric: Metric) -> String {
        self.rows
            .iter()
            .find(|r| r.tool == tool && r.metric == metric)
            .map(|r| format!("{:.2} ± {:.2} {}", r.mean, r.std, r.unit))
            .unwrap_or_else(|| "—".to_string())
    }

    /// Render as a Markdown table, one row per metric, one column per tool.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| Error | Rigid Drill Tip | Flexible Drill Tip |\n");
        out.push_str("|---|---|---|\n");
        for metric in Metric::ALL {
            out.push_str(&format!(
                "| {} | {} | {} |\n",
                metric.label(),
                self.cell(Tool::Rigid, metric),
                self.cell(Tool::Flexible, metric),
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pe(position: f64, roll: f64, pitch: f64, yaw: f64) -> PoseError {
        PoseError {
            position_mm: position,
            roll_deg: roll,
            pitch_deg: pitch,
            yaw_deg: yaw,
        }
    }

    #[test]
    fn single_sample_mean_with_zero_std_and_warning() {
        let rows = aggregate(&[pe(1.0, 0.0, 0.0, 0.0)], Tool::Rigid).unwrap();
        let pos = &rows[0];
        assert_eq!(pos.mean, 1.0);
        assert_eq!(pos.std, 0.0);
        assert_eq!(pos.n, 1);
        assert!(pos.warn_single_sample);
    }

    #[test]
    fn hand_computed_mean_and_sample_std() {
        let errors = [
            pe(1.0, 0.0, 0.0, 0.0),
            pe(2.0, 0.0, 0.0, 0.0),
            pe(3.0, 0.0, 0.0, 0.0),
        ];
        let rows = aggregate(&errors, Tool::Flexible).unwrap();
        let pos = rows.iter().find(|r| r.metric == Metric::Position).unwrap();
        assert!((pos.mean - 2.0).abs() < 1e-15);
        assert!(
            (pos.std - 1.0).abs() < 1e-15,
            "n-1 denominator gives std 1.0"
        );
        assert!(!pos.warn_single_sample);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            aggregate(&[], Tool::Rigid),
            Err(MetricsError::EmptyInput)
        ));
    }

    #[test]
    fn permutation_invariant() {
        let a = [
            pe(1.0, 0.1, 0.2, 0.3),
            pe(5.0, 0.4, 0.1, 0.0),
            pe(2.5, 0.0, 0.7, 0.9),
        ];
        let mut b = a;
        b.reverse();
        let ra = aggregate(&a, Tool::Rigid).unwrap();
        let rb = aggregate(&b, Tool::Rigid).unwrap();
        for (x, y) in ra.iter().zip(rb.iter()) {
            assert!((x.mean - y.mean).abs() < 1e-15);
            assert!((x.std - y.std).abs() < 1e-15);
        }
    }

    #[test]
    fn appending_the_mean_preserves_mean_and_shrinks_std() {
        let errors = vec![pe(1.0, 0.0, 0.0, 0.0), pe(3.0, 0.0, 0.0, 0.0)];
        let rows = aggregate(&errors, Tool::Rigid).unwrap();
        let before = rows
            .iter()
            .find(|r| r.metric == Metric::Position)
            .unwrap()
            .clone();

        let mut extended = errors;
        extended.push(pe(before.mean, 0.0, 0.0, 0.0));
        let rows = aggregate(&extended, Tool::Rigid).unwrap();
        let after = rows.iter().find(|r| r.metric == Metric::Position).unwrap();
        assert!((after.mean - before.mean).abs() < 1e-15);
        assert!(after.std <= before.std + 1e-15);
    }

    #[test]
    fn markdown_layout_has_four_metric_rows() {
        let rigid = aggregate(&[pe(1.14, 0.04, 0.12, 0.20)], Tool::Rigid).unwrap();
        let flex = aggregate(&[pe(1.74, 0.12, 0.26, 0.80)], Tool::Flexible).unwrap();
        let report = ErrorReport::new(
            rigid.into_iter().chain(flex).collect(),
            ReportMetadata::default(),
        );
        let md = report.to_markdown();
        assert_eq!(md.lines().count(), 6);
        assert!(md.contains("| Position | 1.14 ± 0.00 mm | 1.74 ± 0.00 mm |"));
        assert!(md.contains("| Yaw |"));
    }
}
