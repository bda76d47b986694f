//! Frames, rotations, wrenches and the small amount of linear algebra the
//! grasp model needs.
//!
//! All moment transport uses the standard lever convention: a force `f`
//! applied at point `p` produces the moment `p × f` about the origin.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance used when checking that a matrix is a proper rotation.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Reference frames of the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    /// Inertial frame `F_i`.
    Inertial,
    /// UAV body frame at the centre of gravity `F_b`.
    Body,
    /// Manipulator base frame `F_m`.
    ManipulatorBase,
    /// End-effector / palm frame `F_e`.
    EndEffector,
    /// Contact frame on the gripper fingers `F_f1..F_f6`.
    Finger(u8),
    /// Object frame `F_o`.
    Object,
}

impl Frame {
    pub fn label(&self) -> String {
        match self {
            Frame::Inertial => "F_i".into(),
            Frame::Body => "F_b".into(),
            Frame::ManipulatorBase => "F_m".into(),
            Frame::EndEffector => "F_e".into(),
            Frame::Finger(n) => format!("F_f{n}"),
            Frame::Object => "F_o".into(),
        }
    }
}

/// A proper rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot3(Mat3);

impl Default for Rot3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rot3 {
    pub fn identity() -> Self {
        Rot3(Mat3::identity())
    }

    /// Wraps `m` if it is orthonormal with unit determinant.
    pub fn from_matrix(m: Mat3) -> Option<Self> {
        let ortho = (m.transpose() * m - Mat3::identity()).abs().max();
        let det = m.determinant();
        if m.iter().all(|v| v.is_finite())
            && ortho <= ROTATION_TOLERANCE
            && (det - 1.0).abs() <= ROTATION_TOLERANCE
        {
            Some(Rot3(m))
        } else {
            None
        }
    }

    /// Trusts the caller; used for matrices that are rotations by construction.
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Rot3(m)
    }

    /// Nearest rotation to `m` in the Frobenius sense (polar decomposition).
    pub fn orthonormalize(m: &Mat3) -> Self {
        let svd = m.svd(true, true);
        let u = svd.u.expect("svd u");
        let v_t = svd.v_t.expect("svd v_t");
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            // reflect the weakest singular direction
            let mut u = u;
            let (idx, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
            u.column_mut(idx).neg_mut();
            r = u * v_t;
        }
        Rot3(r)
    }

    /// Rotation from a unit quaternion given as `(w, x, y, z)`; the input is normalized.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        let (w, x, y, z) = (w / n, x / n, y / n, z / n);
        Rot3(Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ))
    }

    /// Rotation of `angle` radians about `axis` (Rodrigues).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 || angle == 0.0 {
            return Self::identity();
        }
        let k = skew(&(axis / n));
        Rot3(Mat3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos()))
    }

    /// Builds a rotation from its three column vectors (the rotated basis).
    pub fn from_columns(x: Vec3, y: Vec3, z: Vec3) -> Option<Self> {
        Self::from_matrix(Mat3::from_columns(&[x, y, z]))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rot3(self.0.transpose())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn compose(&self, other: &Rot3) -> Rot3 {
        Rot3(self.0 * other.0)
    }

    /// Angle of the relative rotation `selfᵀ·other`, in radians.
    pub fn angle_to(&self, other: &Rot3) -> f64 {
        let rel = self.0.transpose() * other.0;
        ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }
}

/// Position and orientation of one frame with respect to another.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub position: Vec3,
    pub rotation: Rot3,
}

impl Pose {
    pub fn new(position: Vec3, rotation: Rot3) -> Self {
        Self { position, rotation }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_position(position: Vec3) -> Self {
        Self { position, rotation: Rot3::identity() }
    }

    /// Maps a point expressed in the source frame into the target frame.
    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.position + self.rotation.apply(p)
    }

    /// `self ∘ other`: if `self` is B in A and `other` is C in B, the result is C in A.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            position: self.transform_point(&other.position),
            rotation: self.rotation.compose(&other.rotation),
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose { position: -rt.apply(&self.position), rotation: rt }
    }
}

/// A force-moment pair expressed in a given frame, moments taken about its origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vec3,
    pub moment: Vec3,
    pub frame: Frame,
}

impl Wrench {
    pub fn new(force: Vec3, moment: Vec3, frame: Frame) -> Self {
        Self { force, moment, frame }
    }

    pub fn zero(frame: Frame) -> Self {
        Self { force: Vec3::zeros(), moment: Vec3::zeros(), frame }
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.moment.iter()).all(|v| v.is_finite())
    }
}

/// Re-expresses `w` (given in the source frame) in the target frame, where
/// `pose_of_source_in_target` places the source frame inside the target:
/// `f' = R·f`, `m' = R·m + p × (R·f)`.
pub fn wrench_transform(w: &Wrench, pose_of_source_in_target: &Pose, target: Frame) -> Wrench {
    let f = pose_of_source_in_target.rotation.apply(&w.force);
    let m = pose_of_source_in_target.rotation.apply(&w.moment)
        + pose_of_source_in_target.position.cross(&f);
    Wrench { force: f, moment: m, frame: target }
}

/// Skew-symmetric matrix with `skew(v)·w = v × w`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`] on the skew-symmetric part of `m`.
pub fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    a.cross(b)
}

/// Relative tolerance applied to the largest singular value in [`pinv`].
pub const PINV_RELATIVE_TOLERANCE: f64 = 1e-10;

/// Moore–Penrose pseudoinverse; singular values below `1e-10·σ_max` are
/// treated as zero.
///
/// The singular triplets come from the symmetric eigenproblem of
/// `[[0, M], [Mᵀ, 0]]`, whose positive eigenvalues are the singular values of
/// `M` with eigenvectors `(u, v)/√2`. nalgebra's bidiagonal SVD occasionally
/// returns inaccurate factors for rank-deficient input.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let n = rows + cols;
    let mut aug = DMatrix::zeros(n, n);
    aug.view_mut((0, rows), (rows, cols)).copy_from(m);
    aug.view_mut((rows, 0), (cols, rows)).copy_from(&m.transpose());
    let eig = nalgebra::SymmetricEigen::new(aug);
    let sigma_max = eig.eigenvalues.max();
    let mut out = DMatrix::zeros(cols, rows);
    if sigma_max <= 0.0 {
        return out;
    }
    let cutoff = PINV_RELATIVE_TOLERANCE * sigma_max;
    for (k, &s) in eig.eigenvalues.iter().enumerate() {
        if s > cutoff {
            let col = eig.eigenvectors.column(k);
            let u = col.rows(0, rows);
            let v = col.rows(rows, cols);
            out += (v * u.transpose()) * (2.0 / s);
        }
    }
    out
}
