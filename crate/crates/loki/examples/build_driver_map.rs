//! Assemble the 45-channel driver map for one frame and write PNG
//! visualisations (deformation magnitude plus low/high-frequency encoding
//! slices).
//!
//! ```sh
//! cargo run --example build_driver_map
//! ```

use loki::assets::synthetic::{generate_synthetic_assets, SyntheticAssetConfig};
use loki::driver_map::{build_driver_map, EncodedTemplate, MapMode, POSENC_CHANNELS};
use loki::face_model::PoseParams;
use loki::viz;
use loki::Camera;
use nalgebra::Vector3;

fn main() {
    let assets = generate_synthetic_assets(&SyntheticAssetConfig {
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let encoded = EncodedTemplate::from_assets(&assets).unwrap();
    let camera = Camera::front_facing(256, 256, 2.5);

    let shape = vec![0.4, -0.2, 0.1, 0.3, 0.0, -0.1, 0.2, 0.0];
    let expr = vec![1.2, -0.8, 0.5, 0.9, -0.4, 0.6];
    let pose = PoseParams {
        global_rotation: Vector3::new(0.1, -0.3, 0.0),
        jaw_rotation: Vector3::new(0.25, 0.0, 0.0),
        ..PoseParams::zero()
    };

    let map = build_driver_map(
        &assets,
        &encoded,
        &shape,
        &expr,
        &pose,
        &camera,
        MapMode::Full,
    )
    .unwrap();
    println!(
        "map tensor           : {:?} (channels, height, width)",
        map.tensor.shape()
    );
    println!("normalisation sigma  : {:.6}", map.sigma);

    let on_mesh = map
        .tensor
        .slice(ndarray::s![0, .., ..])
        .iter()
        .filter(|&&v| v != 0.0)
        .count();
    println!("pixels carrying data : {on_mesh} of {}", 256 * 256);

    let pe_peak = map
        .tensor
        .slice(ndarray::s![..POSENC_CHANNELS, .., ..])
        .iter()
        .fold(0.0f32, |a, &b| a.max(b.abs()));
    println!("encoding channel peak: {pe_peak:.4} (bounded by 1)");

    let magnitude = viz::deformation_magnitude(&map);
    let max = magnitude.iter().fold(0.0f32, |a, &b| a.max(b)) as f64;
    println!("deformation magnitude max: {max:.4} (normalised units)");

    let out = std::env::temp_dir().join("loki_driver_map");
    std::fs::create_dir_all(&out).unwrap();
    viz::save_magnitude_png(out.join("deformation_magnitude.png"), magnitude.view(), max).unwrap();
    for (name, channel) in [
        ("posenc_sin_x_low.png", 0usize),
        ("posenc_sin_x_high.png", 6),
        ("posenc_sin_y_low.png", 14),
        ("posenc_cos_z_high.png", 41),
    ] {
        viz::save_channel_png(
            out.join(name),
            map.tensor.slice(ndarray::s![channel, .., ..]),
            -1.0,
            1.0,
        )
        .unwrap();
    }
    println!("wrote PNGs to {}", out.display());

    // Ablation modes keep the tensor shape and zero one channel group.
    for mode in [MapMode::NoDeformation, MapMode::NoPosenc] {
        let ablated =
            build_driver_map(&assets, &encoded, &shape, &expr, &pose, &camera, mode).unwrap();
        let pe_zero = ablated
            .tensor
            .slice(ndarray::s![..POSENC_CHANNELS, .., ..])
            .iter()
            .all(|&v| v == 0.0);
        let def_zero = ablated
            .tensor
            .slice(ndarray::s![POSENC_CHANNELS.., .., ..])
            .iter()
            .all(|&v| v == 0.0);
        println!(
            "{:<16} encoding zeroed: {pe_zero:<5} deformation zeroed: {def_zero}",
            mode.as_str()
        );
    }
}
