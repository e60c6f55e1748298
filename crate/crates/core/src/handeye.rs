//! Hand-eye / robot-world calibration: solve `A_i X = Z B_i` for the tracker
//! pose of the robot base (`X`) and the tool-to-flange transform (`Z`) from
//! paired pose streams.
//!
//! `A_i` is the tracker frame as seen from the drill-mounted tracking tool and
//! `B_i` is the robot base frame as seen from the end-effector, both for the
//! i-th capture.
//!
//! The solve is staged: rotations first through the Kronecker-product
//! linearization
//!
//! ```text
//! vec(R_Ai R_X) = (I (x) R_Ai) vec(R_X)
//! vec(R_Z R_Bi) = (R_Bi^T (x) I) vec(R_Z)
//! ```
//!
//! whose stacked homogeneous system is solved by SVD; the smallest-singular-
//! vector solution is reshaped and projected back to SO(3) by orthogonal
//! Procrustes with det-sign correction. Translations then come from the linear
//! system `R_Ai t_X - t_Z = R_Z t_Bi - t_Ai` by QR least squares.
//!
//! The solver is deterministic: the same input produces the same output
//! bit-for-bit.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lsq;
use crate::pointcal::rotation_axis_spread;
use crate::se3::{Pose, Rot3};

/// Minimum number of pose pairs.
pub const MIN_SAMPLES: usize = 3;

/// Threshold on the normalized singular values of the stacked relative
/// rotation axes; below this the capture cannot distinguish X from Z.
pub const MOTION_RANK_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum HandEyeError {
    #[error("need at least {min} pose pairs, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error(
        "insufficient motion: rotation axes span less than two directions \
         (diagnostic {diagnostic:.3e} <= {threshold:.0e})"
    )]
    InsufficientMotion { diagnostic: f64, threshold: f64 },
}

/// One paired capture of the drill tracking tool and the robot end-effector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HandEyeSample {
    /// Tracker frame relative to the drill tool frame (`A_i`).
    pub drill_t_polaris: Pose,
    /// Robot base frame relative to the end-effector frame (`B_i`).
    pub eef_t_base: Pose,
    /// Capture ordinal.
    pub index: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HandEyeResult {
    /// Tracker pose of the robot base frame (`X`); its inverse maps tracker
    /// coordinates into the base frame.
    pub x_polaris_t_base: Pose,
    /// Drill-tool pose of the end-effector frame (`Z`).
    pub z_drill_t_eef: Pose,
    /// RMS geodesic distance between the `A_i X` and `Z B_i` rotations.
    pub rotation_residual_rad: f64,
    /// RMS translation mismatch between the `A_i X` and `Z B_i` chains.
    pub translation_residual_mm: f64,
    pub n_samples: usize,
    /// Motion-diversity margin: normalized second singular value of the
    /// stacked relative rotation axes.
    pub condition_diagnostic: f64,
}

/// Rebuild a 3x3 matrix from its column-major 9-vector, matching the
/// Kronecker identities.
fn unvec9(v: &[f64]) -> Matrix3<f64> {
    Matrix3::from_column_slice(v)
}

pub fn solve_handeye(samples: &[HandEyeSample]) -> Result<HandEyeResult, HandEyeError> {
    if samples.len() < MIN_SAMPLES {
        return Err(HandEyeError::TooFewSamples {
            got: samples.len(),
            min: MIN_SAMPLES,
        });
    }
    let n = samples.len();

    let a_rotations: Vec<Rot3> = samples.iter().map(|s| s.drill_t_polaris.rotation).collect();
    let diagnostic = rotation_axis_spread(&a_rotations);
    if diagnostic <= MOTION_RANK_THRESHOLD {
        return Err(HandEyeError::InsufficientMotion {
            diagnostic,
            threshold: MOTION_RANK_THRESHOLD,
        });
    }

    // Stacked homogeneous system K [vec(R_X); vec(R_Z)] = 0.
    let identity = Matrix3::<f64>::identity();
    let mut k = DMatrix::zeros(9 * n, 18);
    for (i, s) in samples.iter().enumerate() {
        let r_a = s.drill_t_polaris.rotation.to_matrix();
        let r_b = s.eef_t_base.rotation.to_matrix();
        k.view_mut((9 * i, 0), (9, 9))
            .copy_from(&identity.kronecker(&r_a));
        k.view_mut((9 * i, 9), (9, 9))
            .copy_from(&(-(r_b.transpose().kronecker(&identity))));
    }

    let svd = k.svd(false, true);
    let v_t = svd.v_t.expect("SVD of the stacked system yields V^T");
    // row of V^T paired with the smallest singular value
    let min_idx = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite singular values"))
        .map(|(i, _)| i)
        .expect("at least one singular value");
    let null = v_t.row(min_idx).transpose();

    // Both blocks share one scale; a negative determinant means the scale is
    // negative, so flip the whole vector before projecting to SO(3).
    let mut coeffs: Vec<f64> = null.iter().copied().collect();
    if unvec9(&coeffs[0..9]).determinant() < 0.0 {
        coeffs.iter_mut().for_each(|c| *c = -*c);
    }
    let r_x = Rot3::nearest(&unvec9(&coeffs[0..9]));
    let r_z = Rot3::nearest(&unvec9(&coeffs[9..18]));

    // Translation stage: [R_Ai  -I] [t_X; t_Z] = R_Z t_Bi - t_Ai.
    let mut m = DMatrix::zeros(3 * n, 6);
    let mut rhs = DVector::zeros(3 * n);
    for (i, s) in samples.iter().enumerate() {
        m.view_mut((3 * i, 0), (3, 3))
            .copy_from(&s.drill_t_polaris.rotation.to_matrix());
        m.view_mut((3 * i, 3), (3, 3)).copy_from(&(-identity));
        let r = r_z.rotate(&s.eef_t_base.translation_mm) - s.drill_t_polaris.translation_mm;
        rhs.rows_mut(3 * i, 3).copy_from(&r);
    }
    let t = lsq::solve_least_squares(&m, &rhs).ok_or(HandEyeError::InsufficientMotion {
        diagnostic,
        threshold: MOTION_RANK_THRESHOLD,
    })?;
    let x = Pose::new(r_x, Vector3::new(t[0], t[1], t[2]));
    let z = Pose::new(r_z, Vector3::new(t[3], t[4], t[5]));

    let mut rot_sq = 0.0;
    let mut trans_sq = 0.0;
    for s in samples {
        let lhs = s.drill_t_polaris.compose(&x);
        let rhs = z.compose(&s.eef_t_base);
        rot_sq += lhs.rotation.angle_to(&rhs.rotation).powi(2);
        trans_sq += (lhs.translation_mm - rhs.translation_mm).norm_squared();
    }

    Ok(HandEyeResult {
        x_polaris_t_base: x,
        z_drill_t_eef: z,
        rotation_residual_rad: (rot_sq / n as f64).sqrt(),
        translation_residual_mm: (trans_sq / n as f64).sqrt(),
        n_samples: n,
        condition_diagnostic: diagnostic,
    })
}
