//! Shared fixtures for the integration suites.

// Each test target compiles this module separately and uses a subset of it.
#![allow(dead_code)]

use loki::assets::synthetic::{generate_synthetic_assets, SyntheticAssetConfig};
use loki::assets::FaceModelAssets;
use loki::driver_map::{build_driver_map, DriverMap, EncodedTemplate, MapMode};
use loki::face_model::{evaluate_mesh, PoseParams};
use loki::raster::rasterize;
use loki::Camera;

/// Desk-scale assets: a 162-vertex icosphere with the five-joint rig.
pub fn desk_assets(seed: u64) -> FaceModelAssets {
    generate_synthetic_assets(&SyntheticAssetConfig {
        seed,
        n_vertices: 162,
        n_shape_coeffs: 8,
        n_expr_coeffs: 6,
        n_joints: 5,
        inner_mouth_count: 20,
    })
    .unwrap()
}

/// Index of the posed vertex nearest the camera (always visible on a convex
/// head from the front).
pub fn nearest_vertex_to_camera(
    assets: &FaceModelAssets,
    shape: &[f64],
    expr: &[f64],
    pose: &PoseParams,
    camera: &Camera,
) -> usize {
    let mesh = evaluate_mesh(assets, shape, expr, pose).unwrap();
    let projected = camera.project(&mesh.vertices[..assets.n_vertices()]);
    projected
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.depth.total_cmp(&b.depth))
        .map(|(i, _)| i)
        .unwrap()
}

/// Samples a driver map exactly at one vertex's projection.
///
/// The principal point is shifted so the vertex projects onto a pixel
/// centre; the interpolated value there is the vertex's own attribute (its
/// barycentric weight is 1 up to rounding). Panics if the vertex is not the
/// visible winner at that pixel.
pub fn sample_map_at_vertex(
    assets: &FaceModelAssets,
    encoded: &EncodedTemplate,
    shape: &[f64],
    expr: &[f64],
    pose: &PoseParams,
    camera: &Camera,
    vertex: usize,
) -> Vec<f32> {
    let mesh = evaluate_mesh(assets, shape, expr, pose).unwrap();
    let projected = camera.project(&mesh.vertices);
    let p = &projected[vertex];
    assert!(!p.behind, "vertex projects behind the camera");

    let half_w = camera.width as f64 / 2.0;
    let half_h = camera.height as f64 / 2.0;
    let px = (p.u - 0.5).round().clamp(2.0, camera.width as f64 - 3.0) as usize;
    let py = (p.v - 0.5).round().clamp(2.0, camera.height as f64 - 3.0) as usize;
    let mut cam = camera.clone();
    cam.cx += px as f64 + 0.5 - p.u;
    cam.cy += py as f64 + 0.5 - p.v;
    assert!(cam.cx.is_finite() && cam.cx.abs() < 4.0 * half_w);
    assert!(cam.cy.is_finite() && cam.cy.abs() < 4.0 * half_h);

    // Confirm the vertex is the visible winner at the aligned pixel.
    let buffer = rasterize(&mesh.vertices, &assets.masked_extended_faces(), &cam);
    let face = buffer.face_at(px, py);
    assert!(face >= 0, "aligned pixel is background");
    let corners = buffer.faces[face as usize];
    let slot = corners
        .iter()
        .position(|&c| c as usize == vertex)
        .expect("winning face is not incident to the sampled vertex");
    let weight = buffer.barycentric[buffer.idx(px, py)][slot];
    assert!(weight > 0.99, "vertex weight {weight} too small; occluded?");

    let map = build_map(assets, encoded, shape, expr, pose, &cam);
    map.pixel(px, py)
}

pub fn build_map(
    assets: &FaceModelAssets,
    encoded: &EncodedTemplate,
    shape: &[f64],
    expr: &[f64],
    pose: &PoseParams,
    camera: &Camera,
) -> DriverMap {
    build_driver_map(assets, encoded, shape, expr, pose, camera, MapMode::Full).unwrap()
}
