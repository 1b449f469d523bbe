//! Generate seeded synthetic face-model assets and inspect them.
//!
//! ```sh
//! cargo run --example generate_assets
//! ```

use loki::assets::synthetic::{generate_synthetic_assets, SyntheticAssetConfig};
use loki::assets::FaceModelAssets;

fn main() {
    let cfg = SyntheticAssetConfig {
        seed: 7,
        n_vertices: 162,
        n_shape_coeffs: 8,
        n_expr_coeffs: 6,
        n_joints: 5,
        inner_mouth_count: 20,
    };
    let assets = generate_synthetic_assets(&cfg).expect("valid config");

    println!("template vertices : {}", assets.n_vertices());
    println!("faces             : {}", assets.faces.len());
    println!(
        "inner mouth       : {} (total {})",
        assets.inner_mouth_count,
        assets.n_total_vertices()
    );
    println!(
        "joints            : {} (parents {:?})",
        assets.n_joints(),
        assets.joint_parents
    );
    println!(
        "shape basis       : {}x{}",
        assets.shape_basis.nrows(),
        assets.shape_basis.ncols()
    );
    println!(
        "expr basis        : {}x{}",
        assets.expr_basis.nrows(),
        assets.expr_basis.ncols()
    );
    println!("deformation sigma : {:.6}", assets.deformation_sigma);

    // Basis columns are orthonormal by construction.
    let gram = assets.expr_basis.transpose() * &assets.expr_basis;
    let eye = nalgebra::DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
    println!("expr basis |EᵀE - I| = {:.2e}", (gram - eye).norm());

    // Blend-weight rows are stochastic.
    let worst_row = (0..assets.blend_weights.nrows())
        .map(|r| {
            let s: f64 = (0..assets.blend_weights.ncols())
                .map(|c| assets.blend_weights[(r, c)])
                .sum();
            (s - 1.0).abs()
        })
        .fold(0.0_f64, f64::max);
    println!("worst |Σw - 1|       = {worst_row:.2e}");

    let out = std::env::temp_dir().join("loki_synthetic_assets.lka");
    assets.write_file(&out).expect("writable temp dir");
    let reloaded = FaceModelAssets::read_file(&out).expect("round trip");
    println!(
        "wrote {} ({} bytes), reload matches: {}",
        out.display(),
        std::fs::metadata(&out).unwrap().len(),
        reloaded.to_container().to_bytes() == assets.to_container().to_bytes()
    );
}
