//! Parametric face forward map.
//!
//! A posed mesh is produced in four stages: blendshape offsets build the
//! posed template (identity shape + pose correctives + expression), joints
//! are regressed from the identity-shaped rest mesh, linear blend skinning
//! rotates the template through the joint tree, and finally the global
//! rotation and translation move the whole head. The expression deformation
//! field is computed in template space before skinning, so it depends on the
//! expression coefficients alone — never on identity or pose.

pub mod inner_mouth;
pub mod rotation;
pub mod skinning;

pub use rotation::{RigidTransform, Rotation};
pub use skinning::{linear_blend_skinning, LbsOutput};

use nalgebra::{DVector, Vector3};
use thiserror::Error;

use crate::assets::{
    FaceModelAssets, FrameParams, JOINT_EYE_LEFT, JOINT_EYE_RIGHT, JOINT_JAW, JOINT_NECK,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{what} has length {found}, expected {expected}")]
    CoeffLength {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("blend-weight row {row} sums to {sum}; rows must be normalised")]
    WeightRow { row: usize, sum: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Pose parameters of one frame: the rotation slots of the rig plus the
/// global rigid motion applied after skinning.
#[derive(Debug, Clone, Default)]
pub struct PoseParams {
    pub global_rotation: Vector3<f64>,
    pub translation: Vector3<f64>,
    pub neck_rotation: Vector3<f64>,
    pub jaw_rotation: Vector3<f64>,
    pub eye_rotations: [Vector3<f64>; 2],
}

impl PoseParams {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_frame(frame: &FrameParams) -> Self {
        let v = |a: [f64; 3]| Vector3::new(a[0], a[1], a[2]);
        Self {
            global_rotation: v(frame.global_rotation),
            translation: v(frame.translation),
            neck_rotation: v(frame.neck_rotation),
            jaw_rotation: v(frame.jaw_rotation),
            eye_rotations: [v(frame.eye_rotations[0]), v(frame.eye_rotations[1])],
        }
    }

    /// Flattened rotation slots (global, neck, jaw, both eyes): 15 values.
    pub fn flattened_rotations(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(15);
        for v in [
            &self.global_rotation,
            &self.neck_rotation,
            &self.jaw_rotation,
            &self.eye_rotations[0],
            &self.eye_rotations[1],
        ] {
            out.extend_from_slice(&[v.x, v.y, v.z]);
        }
        out
    }
}

/// Output of the forward map.
#[derive(Debug, Clone)]
pub struct PosedMesh {
    /// `N_total × 3` posed coordinates (base mesh then inner-mouth cavity).
    pub vertices: Vec<Vector3<f64>>,
    /// Per-vertex expression offsets; cavity rows are exactly zero.
    pub delta_expr: Vec<Vector3<f64>>,
    /// Posed joint locations.
    pub joints: Vec<Vector3<f64>>,
}

/// Converts an axis-angle vector to a rotation via Rodrigues' formula.
pub fn rodrigues(axis_angle: &Vector3<f64>) -> Rotation {
    Rotation::from_axis_angle(axis_angle)
}

fn basis_offset(
    basis: &nalgebra::DMatrix<f64>,
    coeffs: &[f64],
    what: &'static str,
) -> Result<Vec<Vector3<f64>>, ModelError> {
    if coeffs.len() != basis.ncols() {
        return Err(ModelError::CoeffLength {
            what,
            expected: basis.ncols(),
            found: coeffs.len(),
        });
    }
    let flat = basis * DVector::from_column_slice(coeffs);
    Ok(flat
        .as_slice()
        .chunks_exact(3)
        .map(|c| Vector3::new(c[0], c[1], c[2]))
        .collect())
}

/// Identity-shape offsets `B_S(β)`.
pub fn shape_offset(
    assets: &FaceModelAssets,
    shape_coeffs: &[f64],
) -> Result<Vec<Vector3<f64>>, ModelError> {
    basis_offset(&assets.shape_basis, shape_coeffs, "shape coefficients")
}

/// Expression offsets `B_E(ψ)` — the deformation field of the driver map.
pub fn expression_offset(
    assets: &FaceModelAssets,
    expr_coeffs: &[f64],
) -> Result<Vec<Vector3<f64>>, ModelError> {
    basis_offset(&assets.expr_basis, expr_coeffs, "expression coefficients")
}

/// Pose-corrective offsets from a flattened pose feature vector.
pub fn pose_corrective_offset(
    assets: &FaceModelAssets,
    pose_features: &[f64],
) -> Result<Vec<Vector3<f64>>, ModelError> {
    basis_offset(
        &assets.pose_corrective_basis,
        pose_features,
        "pose features",
    )
}

/// Local rotation of every joint in the tree. Root stays at identity (the
/// global rotation is applied outside skinning); named slots take the frame's
/// neck / jaw / eye rotations; extra joints stay at identity.
pub fn local_joint_rotations(assets: &FaceModelAssets, pose: &PoseParams) -> Vec<Rotation> {
    let k = assets.n_joints();
    let mut rots = vec![Rotation::identity(); k];
    if k > JOINT_NECK {
        rots[JOINT_NECK] = rodrigues(&pose.neck_rotation);
    }
    if k > JOINT_JAW {
        rots[JOINT_JAW] = rodrigues(&pose.jaw_rotation);
    }
    if k > JOINT_EYE_LEFT {
        rots[JOINT_EYE_LEFT] = rodrigues(&pose.eye_rotations[0]);
    }
    if k > JOINT_EYE_RIGHT {
        rots[JOINT_EYE_RIGHT] = rodrigues(&pose.eye_rotations[1]);
    }
    rots
}

/// Pose feature vector for the corrective basis: the flattened `R_k − I`
/// matrices of every non-root joint, row-major, `9·(K−1)` values.
pub fn pose_features(joint_rotations: &[Rotation]) -> Vec<f64> {
    let mut out = Vec::with_capacity(9 * joint_rotations.len().saturating_sub(1));
    for r in joint_rotations.iter().skip(1) {
        let m = r.matrix();
        for row in 0..3 {
            for col in 0..3 {
                let i = if row == col { 1.0 } else { 0.0 };
                out.push(m[(row, col)] - i);
            }
        }
    }
    out
}

/// `joint_regressor · shaped_vertices`.
pub fn regress_joints(
    assets: &FaceModelAssets,
    shaped_vertices: &[Vector3<f64>],
) -> Result<Vec<Vector3<f64>>, ModelError> {
    if shaped_vertices.len() != assets.n_vertices() {
        return Err(ModelError::Dimension(format!(
            "{} shaped vertices, assets have {}",
            shaped_vertices.len(),
            assets.n_vertices()
        )));
    }
    Ok(crate::assets::regress_joints_raw(
        &assets.joint_regressor,
        shaped_vertices,
    ))
}

/// Appends the inner-mouth cavity to a skinned mesh.
///
/// `jaw_frame` maps jaw-local offsets to the mesh's current space: its
/// translation is the posed jaw joint, its rotation the jaw's world rotation.
/// Operates before the global rigid motion; cavity deformation rows are zero.
pub fn extend_inner_mouth(
    assets: &FaceModelAssets,
    mut mesh: PosedMesh,
    jaw_frame: &RigidTransform,
) -> PosedMesh {
    let cavity = assets.cavity();
    if cavity.is_empty() {
        return mesh;
    }
    mesh.vertices
        .extend(cavity.offsets.iter().map(|d| jaw_frame.apply(d)));
    mesh.delta_expr
        .extend(std::iter::repeat_n(Vector3::zeros(), cavity.len()));
    mesh
}

/// The full forward map: blendshapes, joint regression, skinning,
/// inner-mouth extension, then the global rigid motion.
pub fn evaluate_mesh(
    assets: &FaceModelAssets,
    shape_coeffs: &[f64],
    expr_coeffs: &[f64],
    pose: &PoseParams,
) -> Result<PosedMesh, ModelError> {
    let shape_off = shape_offset(assets, shape_coeffs)?;
    let expr_off = expression_offset(assets, expr_coeffs)?;
    let locals = local_joint_rotations(assets, pose);
    let pose_off = pose_corrective_offset(assets, &pose_features(&locals))?;

    let shaped: Vec<Vector3<f64>> = assets
        .template_vertices
        .iter()
        .zip(&shape_off)
        .map(|(t, s)| t + s)
        .collect();
    let rest_joints = regress_joints(assets, &shaped)?;

    let posed_template: Vec<Vector3<f64>> = shaped
        .iter()
        .zip(&pose_off)
        .zip(&expr_off)
        .map(|((v, p), e)| v + p + e)
        .collect();

    let lbs = linear_blend_skinning(
        &posed_template,
        &rest_joints,
        &locals,
        &assets.blend_weights,
        &assets.joint_parents,
    )?;

    let mut mesh = PosedMesh {
        vertices: lbs.vertices,
        delta_expr: expr_off,
        joints: lbs.joints,
    };

    if assets.inner_mouth_count > 0 {
        let jaw_frame = RigidTransform {
            rotation: lbs.world_transforms[JOINT_JAW].rotation,
            translation: mesh.joints[JOINT_JAW],
        };
        mesh = extend_inner_mouth(assets, mesh, &jaw_frame);
    }

    let global = rodrigues(&pose.global_rotation);
    for v in &mut mesh.vertices {
        *v = global.apply(v) + pose.translation;
    }
    for j in &mut mesh.joints {
        *j = global.apply(j) + pose.translation;
    }

    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::synthetic::{generate_synthetic_assets, SyntheticAssetConfig};
    use crate::assets::JOINT_JAW;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assets_with(inner_mouth: usize) -> crate::assets::FaceModelAssets {
        generate_synthetic_assets(&SyntheticAssetConfig {
            seed: 4,
            n_vertices: 42,
            n_shape_coeffs: 4,
            n_expr_coeffs: 3,
            n_joints: 5,
            inner_mouth_count: inner_mouth,
        })
        .unwrap()
    }

    fn random_coeffs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn all_zero_parameters_reproduce_the_template_bit_exactly() {
        let assets = assets_with(12);
        let mesh = evaluate_mesh(&assets, &[0.0; 4], &[0.0; 3], &PoseParams::zero()).unwrap();
        assert_eq!(mesh.vertices.len(), assets.n_total_vertices());
        for (v, t) in mesh.vertices.iter().zip(&assets.template_vertices) {
            assert_eq!(v, t);
        }
        for (v, t) in mesh.vertices[assets.n_vertices()..]
            .iter()
            .zip(&assets.cavity().template_positions)
        {
            assert_eq!(v, t);
        }
        assert!(mesh.delta_expr.iter().all(|d| *d == Vector3::zeros()));
    }

    #[test]
    fn zero_pose_reduces_to_blendshape_sum() {
        let assets = assets_with(0);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let beta = random_coeffs(&mut rng, 4);
        let psi = random_coeffs(&mut rng, 3);
        let mesh = evaluate_mesh(&assets, &beta, &psi, &PoseParams::zero()).unwrap();
        let b_s = shape_offset(&assets, &beta).unwrap();
        let b_e = expression_offset(&assets, &psi).unwrap();
        for i in 0..assets.n_vertices() {
            let expected = assets.template_vertices[i] + b_s[i] + b_e[i];
            assert_eq!(mesh.vertices[i], expected);
        }
    }

    #[test]
    fn deformation_field_ignores_identity_and_pose() {
        let assets = assets_with(12);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let psi = random_coeffs(&mut rng, 3);
        let reference = evaluate_mesh(&assets, &[0.0; 4], &psi, &PoseParams::zero()).unwrap();
        for _ in 0..5 {
            let beta = random_coeffs(&mut rng, 4);
            let pose = PoseParams {
                global_rotation: Vector3::new(rng.random(), rng.random(), rng.random()),
                neck_rotation: Vector3::new(0.1, -0.2, 0.05),
                jaw_rotation: Vector3::new(0.2, 0.0, 0.0),
                translation: Vector3::new(0.3, 0.1, -0.2),
                ..PoseParams::zero()
            };
            let mesh = evaluate_mesh(&assets, &beta, &psi, &pose).unwrap();
            assert_eq!(mesh.delta_expr, reference.delta_expr);
        }
    }

    #[test]
    fn offsets_are_linear_in_coefficients() {
        let assets = assets_with(0);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let psi = random_coeffs(&mut rng, 3);
        let zero = expression_offset(&assets, &[0.0; 3]).unwrap();
        assert!(zero.iter().all(|d| *d == Vector3::zeros()));

        let one = expression_offset(&assets, &psi).unwrap();
        let doubled_coeffs: Vec<f64> = psi.iter().map(|x| 2.0 * x).collect();
        let two = expression_offset(&assets, &doubled_coeffs).unwrap();
        for (a, b) in two.iter().zip(&one) {
            assert!((a - 2.0 * b).norm() <= 1e-6 * b.norm().max(1e-12));
        }

        // Additivity across two shape-coefficient vectors.
        let b1 = random_coeffs(&mut rng, 4);
        let b2 = random_coeffs(&mut rng, 4);
        let sum_coeffs: Vec<f64> = b1.iter().zip(&b2).map(|(a, b)| a + b).collect();
        let lhs = shape_offset(&assets, &sum_coeffs).unwrap();
        let o1 = shape_offset(&assets, &b1).unwrap();
        let o2 = shape_offset(&assets, &b2).unwrap();
        for i in 0..lhs.len() {
            assert!((lhs[i] - (o1[i] + o2[i])).norm() < 1e-9);
        }
    }

    #[test]
    fn coefficient_length_mismatch_is_an_error() {
        let assets = assets_with(0);
        assert!(matches!(
            expression_offset(&assets, &[0.0; 7]),
            Err(ModelError::CoeffLength { .. })
        ));
        assert!(matches!(
            evaluate_mesh(&assets, &[0.0; 2], &[0.0; 3], &PoseParams::zero()),
            Err(ModelError::CoeffLength { .. })
        ));
    }

    #[test]
    fn one_hot_and_uniform_regressor_rows() {
        let assets = assets_with(0);
        let n = assets.n_vertices();
        let mut regressor = nalgebra::DMatrix::zeros(2, n);
        regressor[(0, 7)] = 1.0; // one-hot on vertex 7
        for v in 0..n {
            regressor[(1, v)] = 1.0 / n as f64; // centroid
        }
        let joints = crate::assets::regress_joints_raw(&regressor, &assets.template_vertices);
        assert!((joints[0] - assets.template_vertices[7]).norm() < 1e-15);
        let centroid = assets.template_vertices.iter().sum::<Vector3<f64>>() / n as f64;
        assert!((joints[1] - centroid).norm() < 1e-12);
    }

    #[test]
    fn rest_joints_match_direct_multiply_oracle() {
        let assets = assets_with(0);
        let joints = regress_joints(&assets, &assets.template_vertices).unwrap();
        for (k, j) in joints.iter().enumerate() {
            let mut oracle = Vector3::zeros();
            for (v, vert) in assets.template_vertices.iter().enumerate() {
                oracle += assets.joint_regressor[(k, v)] * vert;
            }
            assert!((j - oracle).norm() < 1e-14);
        }
        assert_eq!(&joints[..], assets.rest_joints());
    }

    #[test]
    fn pose_features_are_zero_at_rest_and_sized_correctly() {
        let assets = assets_with(0);
        let locals = local_joint_rotations(&assets, &PoseParams::zero());
        let features = pose_features(&locals);
        assert_eq!(features.len(), 9 * (assets.n_joints() - 1));
        assert!(features.iter().all(|&x| x == 0.0));

        let pose = PoseParams {
            jaw_rotation: Vector3::new(0.3, 0.0, 0.0),
            ..PoseParams::zero()
        };
        let features = pose_features(&local_joint_rotations(&assets, &pose));
        assert!(features.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn extend_inner_mouth_with_zero_count_is_identity() {
        let assets = assets_with(0);
        let mesh = evaluate_mesh(&assets, &[0.0; 4], &[0.0; 3], &PoseParams::zero()).unwrap();
        let n_before = mesh.vertices.len();
        let extended = extend_inner_mouth(&assets, mesh, &RigidTransform::identity());
        assert_eq!(extended.vertices.len(), n_before);
    }

    #[test]
    fn cavity_counts_and_zero_deformation() {
        let assets = assets_with(12);
        let mesh = evaluate_mesh(
            &assets,
            &[0.2; 4],
            &[0.5, -0.3, 0.1],
            &PoseParams {
                jaw_rotation: Vector3::new(0.25, 0.0, 0.0),
                ..PoseParams::zero()
            },
        )
        .unwrap();
        assert_eq!(mesh.vertices.len(), assets.n_vertices() + 12);
        for d in &mesh.delta_expr[assets.n_vertices()..] {
            assert_eq!(*d, Vector3::zeros());
        }
    }

    #[test]
    fn cavity_follows_the_jaw_rigidly() {
        let assets = assets_with(12);
        let jaw_angle = Vector3::new(0.4, 0.1, -0.2);
        let posed = evaluate_mesh(
            &assets,
            &[0.0; 4],
            &[0.0; 3],
            &PoseParams {
                jaw_rotation: jaw_angle,
                ..PoseParams::zero()
            },
        )
        .unwrap();
        // With only the jaw rotated, the jaw's world transform is the local
        // rotation about the rest jaw joint (neck chain is identity).
        let jaw_rest = assets.rest_joints()[JOINT_JAW];
        let rot = rodrigues(&jaw_angle);
        for (i, offset) in assets.cavity().offsets.iter().enumerate() {
            let expected = jaw_rest + rot.apply(offset);
            let got = posed.vertices[assets.n_vertices() + i];
            assert!((got - expected).norm() < 1e-12);
        }
        // Pairwise distances within the cavity are preserved (rigidity).
        let rest = &assets.cavity().template_positions;
        let posed_cavity = &posed.vertices[assets.n_vertices()..];
        for i in (0..12).step_by(3) {
            for j in 0..12 {
                let d_rest = (rest[i] - rest[j]).norm();
                let d_posed = (posed_cavity[i] - posed_cavity[j]).norm();
                assert!((d_rest - d_posed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn global_rotation_and_translation_apply_last() {
        let assets = assets_with(0);
        let base = evaluate_mesh(&assets, &[0.1; 4], &[0.2; 3], &PoseParams::zero()).unwrap();
        let pose = PoseParams {
            global_rotation: Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2),
            translation: Vector3::new(1.0, -2.0, 0.5),
            ..PoseParams::zero()
        };
        let moved = evaluate_mesh(&assets, &[0.1; 4], &[0.2; 3], &pose).unwrap();
        let rot = rodrigues(&pose.global_rotation);
        for (m, b) in moved.vertices.iter().zip(&base.vertices) {
            let expected = rot.apply(b) + pose.translation;
            assert!((m - expected).norm() < 1e-12);
        }
        // The deformation field is untouched by the rigid motion.
        assert_eq!(moved.delta_expr, base.delta_expr);
    }
}
