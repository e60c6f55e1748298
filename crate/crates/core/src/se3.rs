//! Rigid-transform arithmetic on SE(3) and orientation-error metrics.
//!
//! Every transform in the toolkit is a [`Pose`]: a rotation plus a translation
//! in millimetres. Rotations are stored as canonicalized unit quaternions
//! (non-negative scalar part) and convert losslessly to/from 3x3 matrices and
//! intrinsic Z-Y-X roll/pitch/yaw angles in degrees.
//!
//! Pose comparison uses the conjugate-quaternion method: the orientation error
//! between a measured and a desired pose is `q_err = conj(q_desired) * q_measured`,
//! decomposed to roll/pitch/yaw magnitudes.

use nalgebra::{Matrix3, Matrix4, Quaternion, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Quaternion norm drift beyond which `compose` renormalizes.
const QUAT_DRIFT_TOL: f64 = 1e-12;

/// Elementwise orthonormality tolerance accepted when building a rotation
/// from a raw 3x3 matrix.
const MATRIX_ORTHO_TOL: f64 = 1e-9;

/// Pitch proximity to +/-90 deg (in degrees) below which the Z-Y-X extraction
/// switches to the gimbal branch: roll is reported as 0 and the observable
/// yaw/roll combination is lumped into yaw.
const GIMBAL_PROXIMITY_DEG: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum Se3Error {
    #[error("quaternion norm {norm} too far from 1 to normalize safely")]
    NonUnitQuaternion { norm: f64 },
    #[error("matrix is not a rotation: {reason}")]
    NotARotation { reason: String },
}

/// A 3D rotation, stored as a canonical unit quaternion (scalar part >= 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot3(UnitQuaternion<f64>);

impl Rot3 {
    pub fn identity() -> Self {
        Rot3(UnitQuaternion::identity())
    }

    /// Canonicalize so `q` and `-q` map to the same representation: scalar
    /// part positive, ties at w = 0 (half-turn rotations) broken by the sign
    /// of the first nonzero vector component.
    pub fn from_unit_quaternion(q: UnitQuaternion<f64>) -> Self {
        let raw = q.into_inner();
        let lead = [raw.w, raw.i, raw.j, raw.k]
            .into_iter()
            .find(|c| *c != 0.0)
            .unwrap_or(1.0);
        if lead < 0.0 {
            Rot3(UnitQuaternion::new_unchecked(-raw))
        } else {
            Rot3(UnitQuaternion::new_unchecked(raw))
        }
    }

    /// Build from raw `(w, x, y, z)` components. Components within roundoff
    /// of unit norm are taken as-is (loads stay bit-exact); small drift is
    /// normalized away; anything further off is rejected.
    pub fn from_quaternion_wxyz(w: f64, x: f64, y: f64, z: f64) -> Result<Self, Se3Error> {
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !(norm.is_finite()) || (norm - 1.0).abs() > 1e-6 {
            return Err(Se3Error::NonUnitQuaternion { norm });
        }
        let unit = if (norm - 1.0).abs() <= QUAT_DRIFT_TOL {
            UnitQuaternion::new_unchecked(q)
        } else {
            UnitQuaternion::new_normalize(q)
        };
        Ok(Self::from_unit_quaternion(unit))
    }

    /// Build from a 3x3 matrix that must already be orthonormal with det +1
    /// (elementwise tolerance 1e-9).
    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self, Se3Error> {
        let gram = m.transpose() * m - Matrix3::identity();
        let max_dev = gram.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if max_dev > MATRIX_ORTHO_TOL {
            return Err(Se3Error::NotARotation {
                reason: format!("R^T R deviates from I by {max_dev:.3e}"),
            });
        }
        let det = m.determinant();
        if (det - 1.0).abs() > MATRIX_ORTHO_TOL {
            return Err(Se3Error::NotARotation {
                reason: format!("det = {det:.12} (want +1)"),
            });
        }
        Ok(Self::from_rotation_matrix_unchecked(m))
    }

    /// Nearest rotation to an arbitrary 3x3 matrix in the Frobenius sense:
    /// orthogonal Procrustes via SVD, with the last singular vector flipped
    /// when the determinant would come out negative.
    pub fn nearest(m: &Matrix3<f64>) -> Self {
        let svd = m.svd(true, true);
        let u = svd.u.expect("3x3 SVD always yields U");
        let v_t = svd.v_t.expect("3x3 SVD always yields V^T");
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            let mut u_fix = u;
            u_fix.column_mut(2).neg_mut();
            r = u_fix * v_t;
        }
        Self::from_rotation_matrix_unchecked(&r)
    }

    fn from_rotation_matrix_unchecked(m: &Matrix3<f64>) -> Self {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(*m);
        Self::from_unit_quaternion(UnitQuaternion::from_rotation_matrix(&rot))
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle_rad: f64) -> Self {
        let unit = Unit::new_normalize(*axis);
        Self::from_unit_quaternion(UnitQuaternion::from_axis_angle(&unit, angle_rad))
    }

    /// Intrinsic Z-Y-X composition: yaw about z, then pitch about the new y,
    /// then roll about the newest x. All angles in degrees.
    pub fn from_rpy_degrees(roll: f64, pitch: f64, yaw: f64) -> Self {
        let (r, p, y) = (roll.to_radians(), pitch.to_radians(), yaw.to_radians());
        Self::from_unit_quaternion(UnitQuaternion::from_euler_angles(r, p, y))
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        self.0.to_rotation_matrix().into_inner()
    }

    /// Quaternion components as `[w, x, y, z]`, scalar part non-negative.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = self.0.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn unit_quaternion(&self) -> UnitQuaternion<f64> {
        self.0
    }

    /// Decompose to intrinsic Z-Y-X (roll, pitch, yaw) in degrees.
    ///
    /// Within 1e-6 deg of the pitch = +/-90 deg singularity only yaw-roll
    /// combinations are observable; the decomposition then reports roll = 0
    /// and folds everything into yaw, deterministically.
    pub fn to_rpy_degrees(&self) -> (f64, f64, f64) {
        let m = self.to_matrix();
        let sp = (-m[(2, 0)]).clamp(-1.0, 1.0);
        // distance from the singularity in radians: |pitch| = 90deg - delta
        let delta = (2.0 * (1.0 - sp.abs())).max(0.0).sqrt();
        if delta < GIMBAL_PROXIMITY_DEG.to_radians() {
            let pitch = if sp > 0.0 { 90.0 } else { -90.0 };
            let yaw = (-m[(0, 1)]).atan2(m[(1, 1)]).to_degrees();
            return (0.0, pitch, yaw);
        }
        let pitch = sp.asin();
        let yaw = m[(1, 0)].atan2(m[(0, 0)]);
        let roll = m[(2, 1)].atan2(m[(2, 2)]);
        (roll.to_degrees(), pitch.to_degrees(), yaw.to_degrees())
    }

    /// Rotation axis and angle; `None` for the identity.
    pub fn axis_angle(&self) -> Option<(Vector3<f64>, f64)> {
        self.0
            .axis_angle()
            .map(|(axis, angle)| (axis.into_inner(), angle))
    }

    /// Geodesic distance to another rotation, in radians.
    pub fn angle_to(&self, other: &Rot3) -> f64 {
        self.0.angle_to(&other.0)
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    pub fn compose(&self, other: &Rot3) -> Rot3 {
        Self::from_unit_quaternion(self.0 * other.0)
    }

    pub fn inverse(&self) -> Rot3 {
        Self::from_unit_quaternion(self.0.inverse())
    }
}

impl Default for Rot3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Serialize for Rot3 {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.quaternion_wxyz().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Rot3 {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [w, x, y, z] = <[f64; 4]>::deserialize(deserializer)?;
        Rot3::from_quaternion_wxyz(w, x, y, z).map_err(serde::de::Error::custom)
    }
}

/// A rigid transform: rotation plus translation in millimetres.
///
/// `a * b` (via [`Pose::compose`]) maps `b`-frame coordinates through `a`,
/// matching the usual chained-superscript reading of frame products.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub rotation: Rot3,
    pub translation_mm: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(rotation: Rot3, translation_mm: Vector3<f64>) -> Self {
        Pose {
            rotation,
            translation_mm,
        }
    }

    pub fn from_translation(translation_mm: Vector3<f64>) -> Self {
        Pose {
            rotation: Rot3::identity(),
            translation_mm,
        }
    }

    /// SE(3) product `self . other`, renormalizing the rotation if quaternion
    /// drift exceeds 1e-12.
    pub fn compose(&self, other: &Pose) -> Pose {
        let raw = self.rotation.unit_quaternion().into_inner()
            * other.rotation.unit_quaternion().into_inner();
        let rotation = if (raw.norm() - 1.0).abs() > QUAT_DRIFT_TOL {
            Rot3::from_unit_quaternion(UnitQuaternion::new_normalize(raw))
        } else {
            Rot3::from_unit_quaternion(UnitQuaternion::new_unchecked(raw))
        };
        Pose {
            rotation,
            translation_mm: self.rotation.rotate(&other.translation_mm) + self.translation_mm,
        }
    }

    /// Inverse transform `(R^T, -R^T t)`.
    pub fn invert(&self) -> Pose {
        let rot_inv = self.rotation.inverse();
        Pose {
            translation_mm: -rot_inv.rotate(&self.translation_mm),
            rotation: rot_inv,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) + self.translation_mm
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.rotation.to_matrix());
        m.fixed_view_mut::<3, 1>(0, 3)
            .copy_from(&self.translation_mm);
        m
    }
}

/// Position and per-axis orientation error magnitudes between two poses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub position_mm: f64,
    pub roll_deg: f64,
    pub pitch_deg: f64,
    pub yaw_deg: f64,
}

impl PoseError {
    pub fn zero() -> Self {
        PoseError {
            position_mm: 0.0,
            roll_deg: 0.0,
            pitch_deg: 0.0,
            yaw_deg: 0.0,
        }
    }

    pub fn max_angle_deg(&self) -> f64 {
        self.roll_deg.max(self.pitch_deg).max(self.yaw_deg)
    }
}

/// Position error is the Euclidean distance between the two translations.
/// Orientation error is the conjugate-quaternion difference
/// `q_err = conj(q_desired) * q_measured`, decomposed to intrinsic Z-Y-X
/// roll/pitch/yaw and reported as magnitudes in degrees.
pub fn pose_error(measured: &Pose, desired: &Pose) -> PoseError {
    let position_mm = (measured.translation_mm - desired.translation_mm).norm();
    let q_err = desired.rotation.inverse().compose(&measured.rotation);
    let (roll, pitch, yaw) = q_err.to_rpy_degrees();
    PoseError {
        position_mm,
        roll_deg: roll.abs(),
        pitch_deg: pitch.abs(),
        yaw_deg: yaw.abs(),
    }
}

// --- serialization ---------------------------------------------------------
//
// A pose serializes as {"q": [w,x,y,z], "t_mm": [x,y,z]} and additionally
// deserializes from a 4x4 row-major homogeneous matrix. Both forms carry full
// double precision and survive write/read round trips bit-exactly.

#[derive(Serialize)]
struct PoseJson {
    q: [f64; 4],
    t_mm: [f64; 3],
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PoseRepr {
    Quat { q: [f64; 4], t_mm: [f64; 3] },
    Matrix([[f64; 4]; 4]),
}

impl Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let t = self.translation_mm;
        PoseJson {
            q: self.rotation.quaternion_wxyz(),
            t_mm: [t.x, t.y, t.z],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match PoseRepr::deserialize(deserializer)? {
            PoseRepr::Quat { q, t_mm } => {
                let rotation =
                    Rot3::from_quaternion_wxyz(q[0], q[1], q[2], q[3]).map_err(D::Error::custom)?;
                Ok(Pose::new(rotation, Vector3::new(t_mm[0], t_mm[1], t_mm[2])))
            }
            PoseRepr::Matrix(rows) => {
                let bottom = rows[3];
                if bottom != [0.0, 0.0, 0.0, 1.0] {
                    return Err(D::Error::custom(format!(
                        "homogeneous matrix bottom row must be [0,0,0,1], got {bottom:?}"
                    )));
                }
                let m = Matrix3::new(
                    rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2],
                    rows[2][0], rows[2][1], rows[2][2],
                );
                let rotation = Rot3::from_matrix(&m).map_err(D::Error::custom)?;
                Ok(Pose::new(
                    rotation,
                    Vector3::new(rows[0][3], rows[1][3], rows[2][3]),
                ))
            }
        }
    }
}
