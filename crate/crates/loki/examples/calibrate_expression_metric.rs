//! The four-anchor calibration that gives expression-follow scores concrete
//! meaning: an exact self-pair floor, a near-frame practical floor, a random
//! cross-clip no-skill baseline, and a neutral-vs-expressive ceiling.
//!
//! ```sh
//! cargo run --release --example calibrate_expression_metric
//! ```

use loki::assets::synthetic::{
    generate_synthetic_assets, generate_synthetic_corpus, SyntheticAssetConfig, SyntheticClipConfig,
};
use loki::driver_map::EncodedTemplate;
use loki::metrics::hef_calibrate;

fn main() {
    let assets = generate_synthetic_assets(&SyntheticAssetConfig {
        seed: 4,
        ..Default::default()
    })
    .unwrap();
    let encoded = EncodedTemplate::from_assets(&assets).unwrap();

    let corpus = generate_synthetic_corpus(
        &SyntheticClipConfig {
            seed: 400,
            n_frames: 16,
            image_width: 128,
            image_height: 128,
            ..Default::default()
        },
        50,
    );
    println!(
        "corpus: {} clips x {} frames at 128x128",
        corpus.len(),
        corpus[0].n_frames()
    );

    let report = hef_calibrate(&assets, &encoded, &corpus, 50, 12, 2).unwrap();

    println!();
    println!("anchor        mean      std       stderr    n");
    println!(
        "self          {:<9.4} -         -         1",
        report.self_anchor
    );
    for (name, stats) in [
        ("near_frame", &report.near_frame),
        ("no_skill", &report.no_skill),
    ] {
        let s = stats.as_ref().unwrap();
        println!(
            "{name:<13} {:<9.4} {:<9.4} {:<9.4} {}",
            s.mean, s.std, s.stderr, s.n
        );
    }
    println!(
        "ceiling       {:<9.4} -         -         1",
        report.ceiling.unwrap()
    );

    println!();
    println!("interpretation on this corpus:");
    let near = report.near_frame.unwrap().mean;
    let no_skill = report.no_skill.unwrap().mean;
    let ceiling = report.ceiling.unwrap();
    println!("  < {near:.3}          reconstruction-noise floor");
    println!("  {near:.3} - {no_skill:.3}  meaningful expression transfer");
    println!("  {no_skill:.3} - {ceiling:.3}  between no-skill and the realistic ceiling");
    println!("  > {ceiling:.3}          beyond plausible fits");
}
