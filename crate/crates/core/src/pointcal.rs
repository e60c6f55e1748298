//! Point-offset calibrations: pivot calibration for the digitizer tip and
//! digitizer-aided calibration of the drill tip in the end-effector frame.
//!
//! Pivot calibration rotates the digitizer about a fixed physical point; each
//! capture `(R_i, p_i)` constrains the unknown tip offset `x_tip` (digitizer
//! frame) and pivot point `x_pivot` (tracker frame) through
//! `R_i x_tip + p_i = x_pivot`, stacked as `[R_i  -I] [x_tip; x_pivot] = -p_i`.
//!
//! Tip calibration points the (already calibrated) digitizer at the drill tip
//! while the robot holds different orientations; each capture constrains the
//! drill-tip offset in the end-effector frame through
//! `R_i x_drill_tip = t_i - p_i`, where `t_i` is the digitizer tip position in
//! the robot base frame.
//!
//! Both solvers run a dense QR least-squares path and reject rank-deficient
//! capture geometry outright: a silently wrong tip offset is worse than no
//! answer in this domain.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lsq;
use crate::se3::{Pose, Rot3};

/// Minimum captures for either solver.
pub const MIN_SAMPLES: usize = 3;

/// Normalized singular-value threshold for the rank / motion-diversity checks.
pub const RANK_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PointCalError {
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error(
        "degenerate capture geometry (diagnostic {diagnostic:.3e} <= {threshold:.0e}): {hint}"
    )]
    DegenerateGeometry {
        diagnostic: f64,
        threshold: f64,
        hint: &'static str,
    },
}

/// One pivot capture: the digitizer body pose expressed in the tracker frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PivotSample {
    pub rotation: Rot3,
    pub position_mm: [f64; 3],
}

impl PivotSample {
    pub fn new(rotation: Rot3, position_mm: Vector3<f64>) -> Self {
        PivotSample {
            rotation,
            position_mm: position_mm.into(),
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::from(self.position_mm)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PivotResult {
    /// Tip offset in the digitizer body frame.
    pub tip_offset_mm: [f64; 3],
    /// Fixed pivot point in the tracker frame.
    pub pivot_point_mm: [f64; 3],
    pub rms_residual_mm: f64,
    /// Normalized smallest singular value of the stacked system.
    pub condition_diagnostic: f64,
    pub n_samples: usize,
}

impl PivotResult {
    pub fn tip_offset(&self) -> Vector3<f64> {
        Vector3::from(self.tip_offset_mm)
    }

    pub fn pivot_point(&self) -> Vector3<f64> {
        Vector3::from(self.pivot_point_mm)
    }
}

/// One digitizer-aided tip capture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TipSample {
    /// End-effector orientation in the robot base frame.
    pub eef_rotation: Rot3,
    /// End-effector position in the robot base frame.
    pub eef_position_mm: [f64; 3],
    /// Digitizer body pose in the tracker frame at the moment of pointing.
    pub polaris_t_digitizer: Pose,
}

impl TipSample {
    pub fn eef_position(&self) -> Vector3<f64> {
        Vector3::from(self.eef_position_mm)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TipResult {
    /// Drill-tip offset in the end-effector frame.
    pub tip_offset_mm: [f64; 3],
    pub rms_residual_mm: f64,
    /// Motion-diversity margin of the capture set (see [`rotation_axis_spread`]).
    pub condition_diagnostic: f64,
    pub n_samples: usize,
}

impl TipResult {
    pub fn tip_offset(&self) -> Vector3<f64> {
        Vector3::from(self.tip_offset_mm)
    }
}

/// Solve the stacked pivot system by least squares.
pub fn solve_pivot(samples: &[PivotSample]) -> Result<PivotResult, PointCalError> {
    if samples.len() < MIN_SAMPLES {
        return Err(PointCalError::TooFewSamples {
            got: samples.len(),
            min: MIN_SAMPLES,
        });
    }
    let n = samples.len();
    let mut a = DMatrix::zeros(3 * n, 6);
    let mut b = DVector::zeros(3 * n);
    for (i, s) in samples.iter().enumerate() {
        a.view_mut((3 * i, 0), (3, 3))
            .copy_from(&s.rotation.to_matrix());
        a.view_mut((3 * i, 3), (3, 3))
            .copy_from(&(-nalgebra::Matrix3::identity()));
        b.rows_mut(3 * i, 3).copy_from(&(-s.position()));
    }

    let diagnostic = lsq::normalized_min_singular_value(&a);
    if diagnostic <= RANK_THRESHOLD {
        return Err(PointCalError::DegenerateGeometry {
            diagnostic,
            threshold: RANK_THRESHOLD,
            hint: "pivot captures need rotation about more than one axis",
        });
    }

    let x = lsq::solve_least_squares(&a, &b).ok_or(PointCalError::DegenerateGeometry {
        diagnostic,
        threshold: RANK_THRESHOLD,
        hint: "stacked pivot system is numerically singular",
    })?;
    let tip = Vector3::new(x[0], x[1], x[2]);
    let pivot = Vector3::new(x[3], x[4], x[5]);

    let sq_sum: f64 = samples
        .iter()
        .map(|s| (s.rotation.rotate(&tip) + s.position() - pivot).norm_squared())
        .sum();
    Ok(PivotResult {
        tip_offset_mm: tip.into(),
        pivot_point_mm: pivot.into(),
        rms_residual_mm: (sq_sum / n as f64).sqrt(),
        condition_diagnostic: diagnostic,
        n_samples: n,
    })
}

/// Digitizer tip position in the robot base frame for one capture:
/// chain the tracker-to-base transform (`x` is the tracker pose of the base,
/// so its inverse maps tracker coordinates into the base frame) through the
/// digitizer pose, then offset along the digitizer body frame.
pub fn digitizer_tip_in_world(
    sample: &TipSample,
    x: &Pose,
    digitizer_tip_offset_mm: &Vector3<f64>,
) -> Vector3<f64> {
    let base_t_digitizer = x.invert().compose(&sample.polaris_t_digitizer);
    base_t_digitizer.transform_point(digitizer_tip_offset_mm)
}

/// Spread of the rotation axes of `rotations` relative to the first entry:
/// the ratio of the second-largest to largest singular value of the stacked
/// relative-rotation axes. Zero when every orientation is identical or all
/// relative motion shares one axis.
pub fn rotation_axis_spread(rotations: &[Rot3]) -> f64 {
    let Some(first) = rotations.first() else {
        return 0.0;
    };
    let inv = first.inverse();
    let axes: Vec<Vector3<f64>> = rotations
        .iter()
        .skip(1)
        .filter_map(|r| inv.compose(r).axis_angle())
        .filter_map(|(axis, angle)| (angle.abs() > 1e-10).then_some(axis))
        .collect();
    if axes.len() < 2 {
        return 0.0;
    }
    let mut stacked = DMatrix::zeros(axes.len(), 3);
    for (i, axis) in axes.iter().enumerate() {
        stacked
            .view_mut((i, 0), (1, 3))
            .copy_from(&axis.transpose());
    }
    let sv = lsq::singular_values(&stacked);
    if sv[0] > 0.0 {
        sv[1] / sv[0]
    } else {
        0.0
    }
}

/// Solve the drill-tip offset from digitizer-aided captures.
///
/// `x` is the hand-eye result (tracker pose of the robot base) and
/// `digitizer_tip_offset_mm` comes from pivot calibration or a datasheet.
pub fn solve_tip(
    samples: &[TipSample],
    x: &Pose,
    digitizer_tip_offset_mm: &Vector3<f64>,
) -> Result<TipResult, PointCalError> {
    if samples.len() < MIN_SAMPLES {
        return Err(PointCalError::TooFewSamples {
            got: samples.len(),
            min: MIN_SAMPLES,
        });
    }
    let rotations: Vec<Rot3> = samples.iter().map(|s| s.eef_rotation).collect();
    let diagnostic = rotation_axis_spread(&rotations);
    if diagnostic <= RANK_THRESHOLD {
        return Err(PointCalError::DegenerateGeometry {
            diagnostic,
            threshold: RANK_THRESHOLD,
            hint: "tip captures need end-effector rotation about more than one axis",
        });
    }

    let n = samples.len();
    let mut a = DMatrix::zeros(3 * n, 3);
    let mut b = DVector::zeros(3 * n);
    for (i, s) in samples.iter().enumerate() {
        a.view_mut((3 * i, 0), (3, 3))
            .copy_from(&s.eef_rotation.to_matrix());
        let t_i = digitizer_tip_in_world(s, x, digitizer_tip_offset_mm);
        b.rows_mut(3 * i, 3).copy_from(&(t_i - s.eef_position()));
    }
    let sol = lsq::solve_least_squares(&a, &b).ok_or(PointCalError::DegenerateGeometry {
        diagnostic,
        threshold: RANK_THRESHOLD,
        hint: "stacked tip system is numerically singular",
    })?;
    let tip = Vector3::new(sol[0], sol[1], sol[2]);

    let residual = (&a * &sol - &b).norm_squared();
    Ok(TipResult {
        tip_offset_mm: tip.into(),
        rms_residual_mm: (residual / n as f64).sqrt(),
        condition_diagnostic: diagnostic,
        n_samples: n,
    })
}
