//! Head-pose follow (HPF).
//!
//! The rig exposes head orientation through two redundant slots — a global
//! rigid rotation applied after skinning and a neck rotation applied within
//! it — and a viewer only ever sees their composition. HPF therefore works
//! on the single visible head rotation `R_head = R(global)·R(neck)` per
//! frame.
//!
//! Predicted and target clips are fitted independently, so their absolute
//! orientations live in unrelated camera frames. Anchoring each trajectory
//! at its own frame 0, `ΔR[t] = R_head[t]·R_head[0]ᵀ`, cancels any constant
//! per-clip offset and leaves the pure pose trajectory; cumulative anchoring
//! (rather than inter-frame deltas) keeps slow systematic drift visible in
//! the score. The per-frame error is the geodesic angle between the two
//! deltas, computed through quaternions with the absolute dot product
//! handling the double cover.

use nalgebra::Vector3;

use crate::assets::ClipBundle;
use crate::face_model::{rodrigues, Rotation};

use super::{pairwise_mean, MetricError, MetricKind, MetricReport};

/// Per-frame visible head rotations of one clip.
#[derive(Debug, Clone)]
pub struct PoseTrajectory {
    pub rotations: Vec<Rotation>,
}

impl PoseTrajectory {
    pub fn new(rotations: Vec<Rotation>) -> Self {
        Self { rotations }
    }

    pub fn from_clip(clip: &ClipBundle) -> Self {
        let rotations = clip
            .frames
            .iter()
            .map(|f| {
                compose_head_rotation(
                    &Vector3::new(
                        f.global_rotation[0],
                        f.global_rotation[1],
                        f.global_rotation[2],
                    ),
                    &Vector3::new(f.neck_rotation[0], f.neck_rotation[1], f.neck_rotation[2]),
                )
            })
            .collect();
        Self { rotations }
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }
}

///`R(global)·R(neck)` — the orientation of any head-attached point.
pub fn compose_head_rotation(global: &Vector3<f64>, neck: &Vector3<f64>) -> Rotation {
    rodrigues(global).compose(&rodrigues(neck))
}

/// Frame-0-anchored deltas `ΔR[t] = R[t]·R[0]ᵀ`; `ΔR[0]` is the exact
/// identity.
pub fn delta_rotations(trajectory: &PoseTrajectory) -> Result<Vec<Rotation>, MetricError> {
    if trajectory.is_empty() {
        return Err(MetricError::EmptyTrajectory);
    }
    let anchor = trajectory.rotations[0].transpose();
    let mut out = Vec::with_capacity(trajectory.len());
    out.push(Rotation::identity());
    for r in &trajectory.rotations[1..] {
        out.push(r.compose(&anchor));
    }
    Ok(out)
}

/// Geodesic distance on the rotation group in degrees:
/// `2·arccos(clip(|q_a · q_b|, -1, 1))`. Symmetric, in [0°, 180°],
/// invariant to the quaternion sign.
pub fn geodesic_degrees(a: &Rotation, b: &Rotation) -> f64 {
    // arccos is ill-conditioned at 1, so a self-pair would report ~1e-6°
    // of rounding noise; identical rotations are exactly 0.
    if a.matrix() == b.matrix() {
        return 0.0;
    }
    let qa = a.to_quaternion();
    let qb = b.to_quaternion();
    let dot: f64 = qa.iter().zip(&qb).map(|(x, y)| x * y).sum();
    let angle = 2.0 * dot.abs().clamp(-1.0, 1.0).acos();
    angle.to_degrees()
}

/// Mean geodesic angle between the prediction's and target's delta
/// trajectories. Frame 0 contributes exactly 0 and is included in the mean.
pub fn hpf(
    pred: &PoseTrajectory,
    target: &PoseTrajectory,
    sample_id: impl Into<String>,
) -> Result<MetricReport, MetricError> {
    if pred.len() != target.len() {
        return Err(MetricError::FrameCount {
            target: target.len(),
            pred: pred.len(),
        });
    }
    let dp = delta_rotations(pred)?;
    let dt = delta_rotations(target)?;
    let per_frame: Vec<f64> = dp
        .iter()
        .zip(&dt)
        .map(|(a, b)| geodesic_degrees(a, b))
        .collect();
    Ok(MetricReport::new(sample_id, MetricKind::Hpf, per_frame))
}

/// Inter-frame variant (`R[t]·R[t-1]ᵀ`, averaged over the T−1 steps), kept
/// as a comparison oracle for the drift-sensitivity property; not used for
/// reporting.
pub fn hpf_inter_frame_mean(pred: &PoseTrajectory, target: &PoseTrajectory) -> f64 {
    let step = |traj: &PoseTrajectory, t: usize| {
        traj.rotations[t].compose(&traj.rotations[t - 1].transpose())
    };
    let per_step: Vec<f64> = (1..pred.len())
        .map(|t| geodesic_degrees(&step(pred, t), &step(target, t)))
        .collect();
    pairwise_mean(&per_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rot_z_deg(deg: f64) -> Rotation {
        rodrigues(&Vector3::new(0.0, 0.0, deg.to_radians()))
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation {
        rodrigues(&Vector3::new(
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
        ))
    }

    #[test]
    fn compose_zero_rotations_is_identity() {
        let r = compose_head_rotation(&Vector3::zeros(), &Vector3::zeros());
        assert_eq!(r.matrix(), Rotation::identity().matrix());
    }

    #[test]
    fn compose_with_zero_neck_is_global() {
        let yaw = Vector3::new(0.0, 30.0_f64.to_radians(), 0.0);
        let r = compose_head_rotation(&yaw, &Vector3::zeros());
        assert!((r.matrix() - rodrigues(&yaw).matrix()).norm() < 1e-15);
    }

    #[test]
    fn composition_order_matters_for_non_parallel_axes() {
        let a = Vector3::new(0.7, 0.0, 0.0);
        let b = Vector3::new(0.0, 0.9, 0.0);
        let ab = compose_head_rotation(&a, &b);
        let ba = compose_head_rotation(&b, &a);
        assert!((ab.matrix() - ba.matrix()).norm() > 1e-3);
    }

    #[test]
    fn constant_trajectory_has_identity_deltas() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let r = random_rotation(&mut rng);
        let traj = PoseTrajectory::new(vec![r; 5]);
        for d in delta_rotations(&traj).unwrap() {
            assert!((d.matrix() - Rotation::identity().matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn constant_offset_composed_first_cancels_in_deltas() {
        // A constant reference-frame change applied before every frame's
        // rotation drops out of R[t]·R[0]ᵀ algebraically.
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let offset = random_rotation(&mut rng);
        let base: Vec<Rotation> = (0..6).map(|_| random_rotation(&mut rng)).collect();
        let shifted: Vec<Rotation> = base.iter().map(|r| r.compose(&offset)).collect();
        let d0 = delta_rotations(&PoseTrajectory::new(base)).unwrap();
        let d1 = delta_rotations(&PoseTrajectory::new(shifted)).unwrap();
        for (a, b) in d0.iter().zip(&d1) {
            assert!((a.matrix() - b.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn anchored_deltas_reproduce_incremental_yaw() {
        let traj = PoseTrajectory::new((0..8).map(|t| rot_z_deg(t as f64)).collect());
        let deltas = delta_rotations(&traj).unwrap();
        for (t, d) in deltas.iter().enumerate() {
            assert!((d.matrix() - rot_z_deg(t as f64).matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn geodesic_zero_for_equal_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let r = random_rotation(&mut rng);
        assert_eq!(geodesic_degrees(&r, &r), 0.0);
    }

    #[test]
    fn geodesic_ten_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..20 {
            let axis = Vector3::new(rng.random(), rng.random(), rng.random());
            let axis = axis.normalize() * 10.0_f64.to_radians();
            let d = geodesic_degrees(&Rotation::identity(), &rodrigues(&axis));
            assert!((d - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn geodesic_ignores_quaternion_sign() {
        let r = rot_z_deg(47.0);
        let [w, x, y, z] = r.to_quaternion();
        let negated = Rotation::from_quaternion(-w, -x, -y, -z);
        assert!(geodesic_degrees(&r, &negated) < 1e-9);
    }

    #[test]
    fn geodesic_is_symmetric_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..50 {
            let a = random_rotation(&mut rng);
            let b = random_rotation(&mut rng);
            let ab = geodesic_degrees(&a, &b);
            let ba = geodesic_degrees(&b, &a);
            assert!((ab - ba).abs() < 1e-12);
            assert!((0.0..=180.0).contains(&ab));
        }
    }

    #[test]
    fn identical_trajectories_score_zero() {
        let traj = PoseTrajectory::new((0..16).map(|t| rot_z_deg(1.3 * t as f64)).collect());
        let report = hpf(&traj, &traj, "self").unwrap();
        assert_eq!(report.mean, 0.0);
    }

    #[test]
    fn drift_fixture_matches_closed_form() {
        // Constant target; prediction adds 1°/frame of yaw. Per-frame error
        // is t degrees, so the 16-frame mean is (Σ₀..₁₅ t)/16 = 7.5.
        let target = PoseTrajectory::new(vec![Rotation::identity(); 16]);
        let pred = PoseTrajectory::new((0..16).map(|t| rot_z_deg(t as f64)).collect());
        let report = hpf(&pred, &target, "drift").unwrap();
        assert_eq!(report.per_frame[0], 0.0);
        assert!((report.per_frame[5] - 5.0).abs() < 1e-9);
        assert!((report.mean - 7.5).abs() < 1e-9);
    }

    #[test]
    fn hpf_is_symmetric_in_its_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let a = PoseTrajectory::new((0..8).map(|_| random_rotation(&mut rng)).collect());
        let b = PoseTrajectory::new((0..8).map(|_| random_rotation(&mut rng)).collect());
        let ab = hpf(&a, &b, "ab").unwrap();
        let ba = hpf(&b, &a, "ba").unwrap();
        for (x, y) in ab.per_frame.iter().zip(&ba.per_frame) {
            assert!((x - y).abs() < 1e-12);
            assert!((0.0..=180.0).contains(x));
        }
        assert!((ab.mean - ba.mean).abs() < 1e-12);
    }

    #[test]
    fn camera_offset_leaves_mean_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let target = PoseTrajectory::new((0..16).map(|_| random_rotation(&mut rng)).collect());
        let pred = PoseTrajectory::new((0..16).map(|_| random_rotation(&mut rng)).collect());
        let offset = random_rotation(&mut rng);
        let shifted =
            PoseTrajectory::new(pred.rotations.iter().map(|r| r.compose(&offset)).collect());
        let base = hpf(&pred, &target, "a").unwrap().mean;
        let with_offset = hpf(&shifted, &target, "b").unwrap().mean;
        assert!((base - with_offset).abs() < 1e-9);
    }

    #[test]
    fn cumulative_anchoring_penalises_drift_inter_frame_misses() {
        // 0.3°/frame drift against a constant target: the anchored metric
        // integrates to 0.3·7.5 = 2.25°, while the inter-frame oracle sees a
        // constant 0.3° per step. The 7.5× ratio is what makes slow drift
        // visible.
        let target = PoseTrajectory::new(vec![Rotation::identity(); 16]);
        let pred = PoseTrajectory::new((0..16).map(|t| rot_z_deg(0.3 * t as f64)).collect());
        let cumulative = hpf(&pred, &target, "drift").unwrap().mean;
        assert!((cumulative - 2.25).abs() < 1e-9);
        let inter = hpf_inter_frame_mean(&pred, &target);
        assert!((inter - 0.3).abs() < 1e-9);
        assert!((cumulative / inter - 7.5).abs() < 1e-6);
    }

    #[test]
    fn frame_count_mismatch_is_an_error() {
        let a = PoseTrajectory::new(vec![Rotation::identity(); 4]);
        let b = PoseTrajectory::new(vec![Rotation::identity(); 5]);
        assert!(matches!(
            hpf(&a, &b, "x"),
            Err(MetricError::FrameCount { .. })
        ));
    }
}
