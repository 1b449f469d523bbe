//! Project and rasterise the synthetic head, then dump the raster buffer as
//! PGM images and cross-check perspective-correct interpolation against the
//! depth buffer.
//!
//! ```sh
//! cargo run --example rasterize_head
//! ```

use loki::assets::synthetic::{generate_synthetic_assets, SyntheticAssetConfig};
use loki::face_model::{evaluate_mesh, PoseParams};
use loki::raster::{interpolate_attribute, rasterize};
use loki::{viz, Camera};
use nalgebra::Vector3;
use ndarray::Array2;

fn main() {
    let assets = generate_synthetic_assets(&SyntheticAssetConfig {
        seed: 2,
        ..Default::default()
    })
    .unwrap();
    let camera = Camera::front_facing(256, 256, 2.5);
    let pose = PoseParams {
        global_rotation: Vector3::new(0.15, -0.4, 0.0),
        jaw_rotation: Vector3::new(0.35, 0.0, 0.0),
        ..PoseParams::zero()
    };
    let mesh = evaluate_mesh(&assets, &[0.0; 8], &[0.0; 6], &pose).unwrap();
    let faces = assets.masked_extended_faces();
    let buffer = rasterize(&mesh.vertices, &faces, &camera);

    let covered = buffer.coverage_count();
    println!("faces (head + cavity): {}", faces.len());
    println!("covered pixels       : {covered} / {}", 256 * 256);

    // Partition of unity on covered pixels.
    let worst = buffer
        .face_index
        .iter()
        .zip(&buffer.barycentric)
        .filter(|(&f, _)| f >= 0)
        .map(|(_, b)| (b[0] + b[1] + b[2] - 1.0).abs())
        .fold(0.0_f64, f64::max);
    println!("worst |Σλ - 1|       : {worst:.2e}");

    // Interpolating camera-space depth as an attribute reproduces the depth
    // buffer (perspective correction at work).
    let projected = camera.project(&mesh.vertices);
    let mut depth_attr = Array2::zeros((mesh.vertices.len(), 1));
    for (i, p) in projected.iter().enumerate() {
        depth_attr[(i, 0)] = p.depth;
    }
    let img = interpolate_attribute(&buffer, &depth_attr).unwrap();
    let mut max_rel = 0.0f64;
    for y in 0..256 {
        for x in 0..256 {
            if buffer.face_at(x, y) >= 0 {
                let z = buffer.depth[buffer.idx(x, y)];
                max_rel = max_rel.max((img[(y, x, 0)] - z).abs() / z);
            }
        }
    }
    println!("depth cross-check    : {max_rel:.2e} max relative deviation");

    let out = std::env::temp_dir().join("loki_raster");
    std::fs::create_dir_all(&out).unwrap();
    viz::save_face_index_pgm(out.join("face_index.pgm"), &buffer).unwrap();
    viz::save_depth_pgm(out.join("depth.pgm"), &buffer).unwrap();
    println!("wrote PGMs to {}", out.display());
}
