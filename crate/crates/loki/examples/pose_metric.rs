//! Head-pose-follow metric on synthetic trajectories: the closed-form drift
//! fixture, offset cancellation, and the cumulative-vs-inter-frame contrast.
//!
//! ```sh
//! cargo run --example pose_metric
//! ```

use loki::face_model::{rodrigues, Rotation};
use loki::metrics::{hpf, PoseTrajectory};
use nalgebra::Vector3;

fn rot_z_deg(deg: f64) -> Rotation {
    rodrigues(&Vector3::new(0.0, 0.0, deg.to_radians()))
}

fn main() {
    // A driver holding still while the prediction drifts 1°/frame.
    let target = PoseTrajectory::new(vec![Rotation::identity(); 16]);
    let drifting = PoseTrajectory::new((0..16).map(|t| rot_z_deg(t as f64)).collect());
    let report = hpf(&drifting, &target, "drift-1deg").unwrap();
    println!(
        "per-frame error (deg): {:?}",
        report
            .per_frame
            .iter()
            .map(|v| v.round())
            .collect::<Vec<_>>()
    );
    println!(
        "mean over 16 frames  : {:.6} (closed form: 7.5)",
        report.mean
    );

    // A constant orientation offset — a different camera mount — cancels.
    let offset = rodrigues(&Vector3::new(0.4, -0.8, 0.3));
    let offset_pred = PoseTrajectory::new(
        drifting
            .rotations
            .iter()
            .map(|r| offset.compose(r))
            .collect(),
    );
    let offset_report = hpf(&offset_pred, &target, "drift-offset").unwrap();
    println!(
        "mean with a constant camera offset: {:.12} (unchanged within {:.1e})",
        offset_report.mean,
        (offset_report.mean - report.mean).abs()
    );

    // A faithful prediction of a moving head: same trajectory, zero score.
    let moving = PoseTrajectory::new(
        (0..16)
            .map(|t| {
                rodrigues(&Vector3::new(
                    0.02 * t as f64,
                    0.03 * t as f64,
                    -0.01 * t as f64,
                ))
            })
            .collect(),
    );
    let faithful = hpf(&moving, &moving, "faithful").unwrap();
    println!("faithful prediction mean: {:.6}", faithful.mean);

    // Slow drift is invisible to inter-frame deltas but not to anchoring.
    let slow = PoseTrajectory::new((0..16).map(|t| rot_z_deg(0.3 * t as f64)).collect());
    let anchored = hpf(&slow, &target, "slow-drift").unwrap().mean;
    let inter = loki::metrics::pose::hpf_inter_frame_mean(&slow, &target);
    println!(
        "0.3°/frame drift — anchored: {anchored:.3}°, inter-frame: {inter:.3}° (ratio {:.1})",
        anchored / inter
    );
}
