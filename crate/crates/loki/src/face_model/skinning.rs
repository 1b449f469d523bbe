//! Linear blend skinning over a rooted joint tree.
//!
//! Each joint k rotates about its rest location; world transforms compose
//! parent-to-child, so a vertex bound to joint k inherits the whole chain
//! above it. Skinning is applied in displacement form,
//! `v' = v + Σ_k w_vk (G_k(v) - v)`,
//! which is algebraically identical to the classic blend for normalised
//! weight rows and reproduces the input bit-exactly when every rotation is
//! the identity.

use nalgebra::{DMatrix, Vector3};

use super::rotation::{RigidTransform, Rotation};
use super::ModelError;

#[derive(Debug, Clone)]
pub struct LbsOutput {
    pub vertices: Vec<Vector3<f64>>,
    pub joints: Vec<Vector3<f64>>,
    /// Rest-to-posed world transform of each joint.
    pub world_transforms: Vec<RigidTransform>,
}

/// Weight rows must sum to 1 within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-6;

pub fn linear_blend_skinning(
    rest_vertices: &[Vector3<f64>],
    rest_joints: &[Vector3<f64>],
    joint_rotations: &[Rotation],
    blend_weights: &DMatrix<f64>,
    joint_parents: &[i32],
) -> Result<LbsOutput, ModelError> {
    let n = rest_vertices.len();
    let k = rest_joints.len();
    if joint_rotations.len() != k || joint_parents.len() != k {
        return Err(ModelError::Dimension(format!(
            "{k} joints but {} rotations / {} parents",
            joint_rotations.len(),
            joint_parents.len()
        )));
    }
    if blend_weights.nrows() != n || blend_weights.ncols() != k {
        return Err(ModelError::Dimension(format!(
            "blend weights {}×{} do not match {n} vertices × {k} joints",
            blend_weights.nrows(),
            blend_weights.ncols()
        )));
    }
    for row in 0..n {
        let sum: f64 = (0..k).map(|c| blend_weights[(row, c)]).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(ModelError::WeightRow { row, sum });
        }
    }

    let world_transforms = world_transforms(rest_joints, joint_rotations, joint_parents);

    let joints = rest_joints
        .iter()
        .zip(&world_transforms)
        .map(|(j, g)| g.apply(j))
        .collect();

    let vertices = rest_vertices
        .iter()
        .enumerate()
        .map(|(vi, v)| {
            let mut out = *v;
            for (ji, g) in world_transforms.iter().enumerate() {
                let w = blend_weights[(vi, ji)];
                if w != 0.0 {
                    out += w * (g.apply(v) - v);
                }
            }
            out
        })
        .collect();

    Ok(LbsOutput {
        vertices,
        joints,
        world_transforms,
    })
}

/// Composes per-joint local rotations (each about its rest joint) down the
/// tree. Parents must precede children, root first.
pub fn world_transforms(
    rest_joints: &[Vector3<f64>],
    joint_rotations: &[Rotation],
    joint_parents: &[i32],
) -> Vec<RigidTransform> {
    let mut out: Vec<RigidTransform> = Vec::with_capacity(rest_joints.len());
    for (k, (&parent, rot)) in joint_parents.iter().zip(joint_rotations).enumerate() {
        let local = RigidTransform::about_point(*rot, &rest_joints[k]);
        let world = if parent < 0 {
            local
        } else {
            out[parent as usize].compose(&local)
        };
        out.push(world);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform_weights(n: usize, k: usize) -> DMatrix<f64> {
        DMatrix::from_element(n, k, 1.0 / k as f64)
    }

    #[test]
    fn identity_rotations_reproduce_input_bit_exactly() {
        let verts = vec![
            Vector3::new(0.13, -0.7, 2.0),
            Vector3::new(-1.0, 0.25, 0.5),
            Vector3::new(3.0, 1.0, -0.125),
        ];
        let joints = vec![Vector3::new(0.1, 0.2, 0.3), Vector3::new(-0.5, 0.0, 1.0)];
        let rots = vec![Rotation::identity(); 2];
        let w = uniform_weights(3, 2);
        let out = linear_blend_skinning(&verts, &joints, &rots, &w, &[-1, 0]).unwrap();
        assert_eq!(out.vertices, verts);
        assert_eq!(out.joints, joints);
    }

    #[test]
    fn single_joint_rotates_about_origin() {
        let verts = vec![Vector3::new(1.0, 0.0, 0.0)];
        let joints = vec![Vector3::zeros()];
        let r = Rotation::from_axis_angle(&Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2));
        let w = DMatrix::from_element(1, 1, 1.0);
        let out = linear_blend_skinning(&verts, &joints, &[r], &w, &[-1]).unwrap();
        assert!((out.vertices[0] - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn unnormalised_weight_row_is_rejected() {
        let verts = vec![Vector3::new(1.0, 0.0, 0.0)];
        let joints = vec![Vector3::zeros()];
        let w = DMatrix::from_element(1, 1, 0.7);
        let err =
            linear_blend_skinning(&verts, &joints, &[Rotation::identity()], &w, &[-1]).unwrap_err();
        assert!(matches!(err, ModelError::WeightRow { .. }));
    }

    /// Naive per-vertex per-joint loop: the independent reference the
    /// vectorised path must match.
    pub fn naive_lbs(
        rest_vertices: &[Vector3<f64>],
        rest_joints: &[Vector3<f64>],
        joint_rotations: &[Rotation],
        blend_weights: &DMatrix<f64>,
        joint_parents: &[i32],
    ) -> Vec<Vector3<f64>> {
        let k = rest_joints.len();
        // World chain recomputed longhand with homogeneous 4x4 matrices.
        let mut world: Vec<nalgebra::Matrix4<f64>> = Vec::with_capacity(k);
        for j in 0..k {
            let r = joint_rotations[j].matrix();
            let jpos = rest_joints[j];
            let mut local = nalgebra::Matrix4::identity();
            for a in 0..3 {
                for b in 0..3 {
                    local[(a, b)] = r[(a, b)];
                }
            }
            let t = jpos - r * jpos;
            local[(0, 3)] = t.x;
            local[(1, 3)] = t.y;
            local[(2, 3)] = t.z;
            let w = if joint_parents[j] < 0 {
                local
            } else {
                world[joint_parents[j] as usize] * local
            };
            world.push(w);
        }
        rest_vertices
            .iter()
            .enumerate()
            .map(|(vi, v)| {
                let mut acc = Vector3::zeros();
                for (ji, g) in world.iter().enumerate() {
                    let h = g * nalgebra::Vector4::new(v.x, v.y, v.z, 1.0);
                    acc += blend_weights[(vi, ji)] * Vector3::new(h.x, h.y, h.z);
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_naive_loop_on_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n = rng.random_range(5..40);
            let k = rng.random_range(2..5);
            let verts: Vec<Vector3<f64>> = (0..n)
                .map(|_| Vector3::new(rng.random(), rng.random(), rng.random()))
                .collect();
            let joints: Vec<Vector3<f64>> = (0..k)
                .map(|_| Vector3::new(rng.random(), rng.random(), rng.random()))
                .collect();
            let rots: Vec<Rotation> = (0..k)
                .map(|_| {
                    Rotation::from_axis_angle(&Vector3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    ))
                })
                .collect();
            let parents: Vec<i32> = (0..k)
                .map(|j| {
                    if j == 0 {
                        -1
                    } else {
                        rng.random_range(0..j) as i32
                    }
                })
                .collect();
            let mut w = DMatrix::from_fn(n, k, |_, _| rng.random_range(0.0..1.0));
            for row in 0..n {
                let s: f64 = (0..k).map(|c| w[(row, c)]).sum();
                for c in 0..k {
                    w[(row, c)] /= s;
                }
            }
            let fast = linear_blend_skinning(&verts, &joints, &rots, &w, &parents).unwrap();
            let slow = naive_lbs(&verts, &joints, &rots, &w, &parents);
            for (a, b) in fast.vertices.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }
}
