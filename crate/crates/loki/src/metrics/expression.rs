//! Expression follow (HEF).
//!
//! Comparing expression coefficient vectors across independently fitted
//! clips is unreliable — the visible effect of a coefficient depends on pose
//! and viewpoint. HEF instead compares expression *effects* in a shared
//! rendering context: the target's identity shape, pose, and camera are held
//! fixed, the prediction's expression parameters are substituted in, and two
//! deformation maps are rendered. Both maps come from one rasterisation of
//! the target's own posed mesh, so their masks coincide by construction and
//! only the deformation attribute values differ; the score is the mean
//! absolute difference over the three deformation channels, averaged over
//! on-mesh pixels only, in normalised deformation units (offsets divided by
//! the corpus sigma).
//!
//! Substituted eye and jaw rotations are carried alongside the expression
//! coefficients, but under this model's convention they move vertices
//! rigidly and contribute no deformation, so they cannot change the residual.

use nalgebra::Vector3;

use crate::assets::{ClipBundle, FaceModelAssets};
use crate::camera::Camera;
use crate::driver_map::{
    vertex_attributes, EncodedTemplate, DEFORMATION_CHANNELS, POSENC_CHANNELS,
};
use crate::face_model::{self, PoseParams};
use crate::raster;

use super::{MetricError, MetricKind, MetricReport};

/// One frame's full fit: everything needed to rebuild its rendering context.
#[derive(Debug, Clone)]
pub struct FrameFit<'a> {
    pub shape: &'a [f64],
    pub expression: &'a [f64],
    pub pose: PoseParams,
    pub camera: &'a Camera,
}

impl<'a> FrameFit<'a> {
    pub fn from_clip(clip: &'a ClipBundle, frame: usize) -> Self {
        Self {
            shape: &clip.shape,
            expression: &clip.frames[frame].expression,
            pose: PoseParams::from_frame(&clip.frames[frame]),
            camera: &clip.camera,
        }
    }
}

/// The expression parameters substituted into the target's context.
#[derive(Debug, Clone)]
pub struct ExprParams<'a> {
    pub expression: &'a [f64],
    pub jaw_rotation: Vector3<f64>,
    pub eye_rotations: [Vector3<f64>; 2],
}

impl<'a> ExprParams<'a> {
    pub fn from_clip(clip: &'a ClipBundle, frame: usize) -> Self {
        let f = &clip.frames[frame];
        let v = |a: [f64; 3]| Vector3::new(a[0], a[1], a[2]);
        Self {
            expression: &f.expression,
            jaw_rotation: v(f.jaw_rotation),
            eye_rotations: [v(f.eye_rotations[0]), v(f.eye_rotations[1])],
        }
    }

    pub fn from_fit(fit: &FrameFit<'a>) -> Self {
        Self {
            expression: fit.expression,
            jaw_rotation: fit.pose.jaw_rotation,
            eye_rotations: fit.pose.eye_rotations,
        }
    }
}

/// Per-frame expression-follow score.
pub fn hef_frame(
    assets: &FaceModelAssets,
    encoded: &EncodedTemplate,
    target: &FrameFit,
    pred: &ExprParams,
) -> Result<f64, MetricError> {
    hef_frame_at(assets, encoded, target, pred, 0)
}

fn hef_frame_at(
    assets: &FaceModelAssets,
    encoded: &EncodedTemplate,
    target: &FrameFit,
    pred: &ExprParams,
    frame: usize,
) -> Result<f64, MetricError> {
    // One rasterisation defines the shared context: the target's fully posed
    // mesh, including its own expression geometry.
    let mesh = face_model::evaluate_mesh(assets, target.shape, target.expression, &target.pose)?;
    let target_attrs = vertex_attributes(assets, encoded, &mesh.delta_expr)?;

    // Substituted deformation values: the prediction's expression offsets,
    // extended with zero rows for the cavity, in the same normalised units.
    let mut sub_delta = face_model::expression_offset(assets, pred.expression)?;
    sub_delta.extend(std::iter::repeat_n(
        Vector3::zeros(),
        assets.inner_mouth_count,
    ));
    let sub_attrs = vertex_attributes(assets, encoded, &sub_delta)?;

    let faces = assets.masked_extended_faces();
    let buffer = raster::rasterize(&mesh.vertices, &faces, target.camera);

    let target_map = raster::interpolate_attribute(&buffer, &target_attrs)?;
    let sub_map = raster::interpolate_attribute(&buffer, &sub_attrs)?;

    let mut acc = 0.0;
    let mut count = 0usize;
    for y in 0..buffer.height {
        for x in 0..buffer.width {
            if buffer.face_at(x, y) < 0 {
                continue;
            }
            let mut per_pixel = 0.0;
            for c in POSENC_CHANNELS..POSENC_CHANNELS + DEFORMATION_CHANNELS {
                per_pixel += (target_map[(y, x, c)] - sub_map[(y, x, c)]).abs();
            }
            acc += per_pixel / DEFORMATION_CHANNELS as f64;
            count += 1;
        }
    }
    if count == 0 {
        return Err(MetricError::EmptyMask { frame });
    }
    Ok(acc / count as f64)
}

/// Clip-level expression follow: mean of the per-frame scores.
pub fn hef(
    assets: &FaceModelAssets,
    encoded: &EncodedTemplate,
    target_clip: &ClipBundle,
    pred_clip: &ClipBundle,
    sample_id: impl Into<String>,
) -> Result<MetricReport, MetricError> {
    if target_clip.n_frames() != pred_clip.n_frames() {
        return Err(MetricError::FrameCount {
            target: target_clip.n_frames(),
            pred: pred_clip.n_frames(),
        });
    }
    let per_frame = (0..target_clip.n_frames())
        .map(|t| {
            hef_frame_at(
                assets,
                encoded,
                &FrameFit::from_clip(target_clip, t),
                &ExprParams::from_clip(pred_clip, t),
                t,
            )
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(MetricReport::new(sample_id, MetricKind::Hef, per_frame))
}
