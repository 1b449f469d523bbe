//! 3D rotations interconvertible between axis-angle, matrix, and quaternion.
//!
//! Axis-angle vectors follow the usual convention: direction = rotation axis,
//! magnitude = angle in radians. Conversion to a matrix uses Rodrigues'
//! formula with a second-order series below [`SMALL_ANGLE`] to avoid the
//! catastrophic cancellation in `(1 - cos θ)/θ²`.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};

/// Below this angle (radians) the Rodrigues coefficients switch to their
/// Taylor expansions.
pub const SMALL_ANGLE: f64 = 1e-8;

/// A rotation stored as a 3×3 matrix (orthogonal, det +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    mat: Matrix3<f64>,
}

impl Rotation {
    pub fn identity() -> Self {
        Self {
            mat: Matrix3::identity(),
        }
    }

    /// Rodrigues' formula: `R = I + a·K + b·K²` with `K = hat(v)`,
    /// `a = sin θ / θ`, `b = (1 - cos θ)/θ²`.
    ///
    /// Total function; the zero vector maps to the exact identity.
    pub fn from_axis_angle(v: &Vector3<f64>) -> Self {
        let theta2 = v.norm_squared();
        let (a, b) = if theta2 < SMALL_ANGLE * SMALL_ANGLE {
            // sin θ/θ ≈ 1 - θ²/6,  (1 - cos θ)/θ² ≈ 1/2 - θ²/24
            (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
        } else {
            let theta = theta2.sqrt();
            (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
        };
        let k = Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0);
        let mat = Matrix3::identity() + k * a + k * k * b;
        Self { mat }
    }

    /// Wraps a matrix assumed orthogonal with det +1 (not re-checked).
    pub fn from_matrix(mat: Matrix3<f64>) -> Self {
        Self { mat }
    }

    /// Builds from quaternion components `(w, x, y, z)`; the input is
    /// normalised first, so any non-zero scaling (including `-q`) yields the
    /// same rotation.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z));
        Self {
            mat: q.to_rotation_matrix().into_inner(),
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.mat
    }

    /// Unit quaternion `(w, x, y, z)`. The sign is an arbitrary
    /// representative of the double cover.
    pub fn to_quaternion(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.mat));
        let c = q.coords; // (x, y, z, w)
        [c.w, c.x, c.y, c.z]
    }

    pub fn to_axis_angle(&self) -> Vector3<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.mat))
            .scaled_axis()
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation {
            mat: self.mat * other.mat,
        }
    }

    pub fn transpose(&self) -> Rotation {
        Rotation {
            mat: self.mat.transpose(),
        }
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.mat * v
    }

    /// Frobenius deviation of `RᵀR` from the identity; diagnostic for tests.
    pub fn orthogonality_error(&self) -> f64 {
        (self.mat.transpose() * self.mat - Matrix3::identity()).norm()
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

/// A rigid transform `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy)]
pub struct RigidTransform {
    pub rotation: Rotation,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Rotation::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Rotation by `r` about the fixed point `center`.
    pub fn about_point(r: Rotation, center: &Vector3<f64>) -> Self {
        let translation = center - r.apply(center);
        Self {
            rotation: r,
            translation,
        }
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.rotation.apply(&other.translation) + self.translation,
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.apply(p) + self.translation
    }
}
