//! Reenactment fidelity metrics.
//!
//! * [`pose`] — head-pose follow: geodesic distance between frame-0-anchored
//!   delta rotations of prediction and target, in degrees.
//! * [`expression`] — expression follow: mask-aware L1 between deformation
//!   maps rendered in a shared context that differs only in expression.
//! * [`calibration`] — empirical reference points spanning the expression
//!   metric's range.

pub mod calibration;
pub mod expression;
pub mod pose;

pub use calibration::{hef_calibrate, AnchorStats, CalibrationReport};
pub use expression::{hef, hef_frame, ExprParams, FrameFit};
pub use pose::{compose_head_rotation, delta_rotations, geodesic_degrees, hpf, PoseTrajectory};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("frame-count mismatch: target has {target}, prediction has {pred}")]
    FrameCount { target: usize, pred: usize },
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("frame {frame}: face fully off-screen, deformation mask is empty")]
    EmptyMask { frame: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("n_pairs must be at least 1")]
    NoPairs,
    #[error(transparent)]
    Model(#[from] crate::face_model::ModelError),
    #[error(transparent)]
    Map(#[from] crate::driver_map::MapError),
    #[error(transparent)]
    Raster(#[from] crate::raster::RasterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// Head-pose follow, degrees, lower is better.
    Hpf,
    /// Expression follow, normalised-deformation units, lower is better.
    Hef,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Hpf => "hpf",
            MetricKind::Hef => "hef",
        }
    }
}

/// Per-frame values and their mean for one evaluated sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub sample_id: String,
    pub metric: MetricKind,
    pub per_frame: Vec<f64>,
    pub mean: f64,
}

impl MetricReport {
    pub fn new(sample_id: impl Into<String>, metric: MetricKind, per_frame: Vec<f64>) -> Self {
        let mean = pairwise_mean(&per_frame);
        Self {
            sample_id: sample_id.into(),
            metric,
            per_frame,
            mean,
        }
    }

    /// Sample standard deviation of the per-frame values (0 for n < 2).
    pub fn std(&self) -> f64 {
        let n = self.per_frame.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean;
        let ss: f64 = self.per_frame.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / (n - 1) as f64).sqrt()
    }
}

/// Pairwise (cascade) summation: reproducible and more accurate than a naive
/// left-to-right fold, independent of any parallel evaluation schedule.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

pub fn pairwise_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}
