//! Clip parameter bundles: per-frame face parameters plus the clip-wide
//! identity shape and camera, stored as UTF-8 JSON.
//!
//! Top-level keys: `shape`, `camera`, `fps`, `frames[]`. Unknown keys are
//! tolerated so bundles may carry optional extensions.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::Camera;

#[derive(Debug, Error)]
pub enum ClipError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ClipError {
    ClipError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Per-frame parameters: expression coefficients and the pose rotation slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameParams {
    pub expression: Vec<f64>,
    pub global_rotation: [f64; 3],
    pub translation: [f64; 3],
    pub neck_rotation: [f64; 3],
    pub jaw_rotation: [f64; 3],
    pub eye_rotations: [[f64; 3]; 2],
}

impl FrameParams {
    pub fn zero(n_expr: usize) -> Self {
        Self {
            expression: vec![0.0; n_expr],
            global_rotation: [0.0; 3],
            translation: [0.0; 3],
            neck_rotation: [0.0; 3],
            jaw_rotation: [0.0; 3],
            eye_rotations: [[0.0; 3]; 2],
        }
    }
}

/// All frames of one clip share a single identity shape and a single camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipBundle {
    pub shape: Vec<f64>,
    pub camera: Camera,
    pub fps: f64,
    pub frames: Vec<FrameParams>,
}

impl ClipBundle {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    /// Structural self-consistency: at least one frame, uniform expression
    /// lengths, finite values, rotation magnitudes below 2π.
    pub fn validate_self(&self) -> Result<(), ClipError> {
        if self.frames.is_empty() {
            return Err(schema("frames", "clip must contain at least one frame"));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(schema("fps", format!("must be positive, got {}", self.fps)));
        }
        self.camera.validate().map_err(|m| schema("camera", m))?;
        if self.shape.iter().any(|x| !x.is_finite()) {
            return Err(schema("shape", "non-finite value"));
        }
        let n_expr = self.frames[0].expression.len();
        const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
        for (i, f) in self.frames.iter().enumerate() {
            if f.expression.len() != n_expr {
                return Err(schema(
                    format!("frames[{i}].expression"),
                    format!(
                        "length {} differs from frames[0] length {n_expr}",
                        f.expression.len()
                    ),
                ));
            }
            if f.expression.iter().any(|x| !x.is_finite()) {
                return Err(schema(
                    format!("frames[{i}].expression"),
                    "non-finite value",
                ));
            }
            for (name, v) in [
                ("global_rotation", &f.global_rotation),
                ("neck_rotation", &f.neck_rotation),
                ("jaw_rotation", &f.jaw_rotation),
                ("eye_rotations[0]", &f.eye_rotations[0]),
                ("eye_rotations[1]", &f.eye_rotations[1]),
            ] {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(schema(format!("frames[{i}].{name}"), "non-finite value"));
                }
                let mag = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if mag >= TWO_PI {
                    return Err(schema(
                        format!("frames[{i}].{name}"),
                        format!("axis-angle magnitude {mag} exceeds 2π"),
                    ));
                }
            }
            if f.translation.iter().any(|x| !x.is_finite()) {
                return Err(schema(
                    format!("frames[{i}].translation"),
                    "non-finite value",
                ));
            }
        }
        Ok(())
    }

    /// Checks coefficient lengths against a declared model size.
    pub fn validate_dims(&self, n_shape: usize, n_expr: usize) -> Result<(), ClipError> {
        if self.shape.len() != n_shape {
            return Err(schema(
                "shape",
                format!(
                    "length {} does not match declared n_beta {n_shape}",
                    self.shape.len()
                ),
            ));
        }
        for (i, f) in self.frames.iter().enumerate() {
            if f.expression.len() != n_expr {
                return Err(schema(
                    format!("frames[{i}].expression"),
                    format!(
                        "length {} does not match declared n_psi {n_expr}",
                        f.expression.len()
                    ),
                ));
            }
        }
        Ok(())
    }
}

pub fn load_clip_bundle(path: impl AsRef<Path>) -> Result<ClipBundle, ClipError> {
    let text = std::fs::read_to_string(path)?;
    let bundle: ClipBundle = serde_json::from_str(&text)?;
    bundle.validate_self()?;
    Ok(bundle)
}

pub fn save_clip_bundle(bundle: &ClipBundle, path: impl AsRef<Path>) -> Result<(), ClipError> {
    let text = serde_json::to_string_pretty(bundle)?;
    std::fs::write(path, text)?;
    Ok(())
}
