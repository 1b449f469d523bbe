//! Schedule corrections and the deterministic-sampler oracle loop: a
//! denoiser that returns the true noise must reconstruct the clean latent
//! through 50 steps.
//!
//! ```sh
//! cargo run --example ddim_roundtrip
//! ```

use loki::diffusion::{
    add_noise, ddim_step, ddim_timestep_ladder, enforce_zero_terminal_snr, linear_schedule,
    temporal_shift, ShiftMode, DEFAULT_BETA_END, DEFAULT_BETA_START, DEFAULT_TRAIN_STEPS,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() {
    let schedule =
        linear_schedule(DEFAULT_TRAIN_STEPS, DEFAULT_BETA_START, DEFAULT_BETA_END).unwrap();
    println!(
        "linear schedule: {} steps, alpha_bar from {:.6} to {:.6}",
        schedule.len(),
        schedule.alphas_cumprod()[0],
        schedule.terminal()
    );

    let corrected = enforce_zero_terminal_snr(&schedule);
    println!(
        "zero-terminal correction: terminal {:.e} -> {:.e} (first entry preserved: {})",
        schedule.terminal(),
        corrected.terminal(),
        (corrected.alphas_cumprod()[0] - schedule.alphas_cumprod()[0]).abs() < 1e-12,
    );

    let shifted = temporal_shift(&schedule, 15, ShiftMode::LogSnr).unwrap();
    println!(
        "temporal shift for 15 jointly denoised frames: ratio {:.6} (SNR scaled by {:.6})",
        shifted.ratio,
        shifted.ratio * shifted.ratio
    );

    // Oracle loop: noise a latent to the top of the ladder, then denoise
    // with the true noise at every step.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let n = 512;
    let z0: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let eps: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();

    let ladder = ddim_timestep_ladder(DEFAULT_TRAIN_STEPS, 50);
    let mut z = add_noise(&z0, &eps, &schedule, ladder[0]).unwrap();

    let rel_err = |a: &[f64]| {
        let num: f64 = a.iter().zip(&z0).map(|(x, y)| (x - y) * (x - y)).sum();
        let den: f64 = z0.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    };

    println!("\nstep timestep  z0_estimate_rel_error");
    for (i, &t) in ladder.iter().enumerate() {
        let t_prev = ladder.get(i + 1).copied();
        let (z_next, z0_hat) = ddim_step(&z, &eps, &schedule, t, t_prev).unwrap();
        if i % 10 == 0 || i == ladder.len() - 1 {
            println!("{i:>4} {t:>8}  {:.3e}", rel_err(&z0_hat));
        }
        z = z_next;
    }
    println!(
        "\nfinal latent vs clean latent: {:.3e} relative error",
        rel_err(&z)
    );
}
