//! Pinhole camera in OpenCV convention: `p_cam = R·p + t`, `u = fx·x/z + cx`,
//! `v = fy·y/z + cy`, with `+z` pointing into the scene.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::face_model::Rotation;

/// Points at or behind this camera-space depth are flagged behind-camera.
pub const NEAR_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Extrinsic rotation as an axis-angle vector.
    pub rotation: [f64; 3],
    pub translation: [f64; 3],
    pub width: u32,
    pub height: u32,
}

/// One projected point.
#[derive(Debug, Clone, Copy)]
pub struct Projected {
    pub u: f64,
    pub v: f64,
    /// Camera-space z.
    pub depth: f64,
    pub behind: bool,
}

impl Camera {
    /// A camera on the +z axis looking back at the origin, framing a
    /// unit-radius object at the given distance.
    pub fn front_facing(width: u32, height: u32, distance: f64) -> Self {
        Self {
            fx: 0.9 * width as f64,
            fy: 0.9 * width as f64,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            rotation: [0.0; 3],
            translation: [0.0, 0.0, distance],
            width,
            height,
        }
    }

    /// The same view at a different image resolution: intrinsics scale with
    /// the resolution change, extrinsics are untouched.
    pub fn rescaled(&self, width: u32, height: u32) -> Self {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Self {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: self.cx * sx,
            cy: self.cy * sy,
            width,
            height,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            ));
        }
        if self.width == 0 || self.height == 0 {
            return Err("image dimensions must be at least 1×1".into());
        }
        let all = [self.cx, self.cy]
            .into_iter()
            .chain(self.rotation)
            .chain(self.translation);
        for x in all {
            if !x.is_finite() {
                return Err("non-finite camera parameter".into());
            }
        }
        Ok(())
    }

    pub fn rotation_matrix(&self) -> Rotation {
        Rotation::from_axis_angle(&Vector3::new(
            self.rotation[0],
            self.rotation[1],
            self.rotation[2],
        ))
    }

    pub fn translation_vector(&self) -> Vector3<f64> {
        Vector3::new(
            self.translation[0],
            self.translation[1],
            self.translation[2],
        )
    }

    /// Projects points to pixel coordinates and camera-space depth.
    /// Behind-camera points are flagged, never an error.
    pub fn project(&self, points: &[Vector3<f64>]) -> Vec<Projected> {
        let r = self.rotation_matrix();
        let t = self.translation_vector();
        points
            .iter()
            .map(|p| {
                let cam = r.apply(p) + t;
                let behind = cam.z <= NEAR_EPSILON;
                let z = if behind { NEAR_EPSILON } else { cam.z };
                Projected {
                    u: self.fx * cam.x / z + self.cx,
                    v: self.fy * cam.y / z + self.cy,
                    depth: cam.z,
                    behind,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optical_axis_hits_principal_point() {
        let cam = Camera::front_facing(64, 64, 2.5);
        let p = cam.project(&[Vector3::new(0.0, 0.0, 0.5)]);
        assert_eq!(p[0].u, cam.cx);
        assert_eq!(p[0].v, cam.cy);
        assert!(!p[0].behind);
        assert!((p[0].depth - 3.0).abs() < 1e-15);
    }

    #[test]
    fn doubling_fx_doubles_horizontal_offset() {
        let mut cam = Camera::front_facing(64, 64, 2.0);
        let point = [Vector3::new(0.3, -0.1, 0.0)];
        let a = cam.project(&point)[0];
        cam.fx *= 2.0;
        let b = cam.project(&point)[0];
        assert!(((b.u - cam.cx) - 2.0 * (a.u - cam.cx)).abs() < 1e-12);
        assert_eq!(a.v, b.v);
    }

    #[test]
    fn near_plane_flags_behind_points() {
        let cam = Camera::front_facing(64, 64, 0.0);
        let p = cam.project(&[
            Vector3::new(0.0, 0.0, 1e-7),
            Vector3::new(0.0, 0.0, -1.0),
            Vector3::new(0.0, 0.0, 1e-3),
        ]);
        assert!(p[0].behind);
        assert!(p[1].behind);
        assert!(!p[2].behind);
    }

    #[test]
    fn extrinsic_rotation_applies_before_translation() {
        // 90° about y maps +x to -z; with t_z large the point lands left of centre.
        let cam = Camera {
            rotation: [0.0, std::f64::consts::FRAC_PI_2, 0.0],
            ..Camera::front_facing(64, 64, 4.0)
        };
        let p = cam.project(&[Vector3::new(1.0, 0.0, 0.0)])[0];
        assert!((p.depth - 3.0).abs() < 1e-12);
        assert_eq!(p.u, cam.cx);
    }
}
