//! Noise-schedule and deterministic sampling math.
//!
//! Values are plain `f64` buffers; the denoiser is a caller-supplied closure,
//! so the module stays independent of any network. All schedule math runs in
//! float64; cast at external boundaries if needed.
//!
//! The forward process is `z_t = √ᾱ_t·z0 + √(1-ᾱ_t)·ε`. Sampling inverts it
//! with deterministic steps
//! `z_prev = √ᾱ_prev·ẑ0 + √(1-ᾱ_prev)·ε̂`, where
//! `ẑ0 = (z_t - √(1-ᾱ_t)·ε̂)/√ᾱ_t`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("invalid beta endpoints: need 0 < start < end < 1, got {start}..{end}")]
    BetaEndpoints { start: f64, end: f64 },
    #[error("schedule must have at least one step")]
    Empty,
    #[error("alphas_cumprod must lie in [0, 1] and strictly decrease (violated at index {0})")]
    NotDecreasing(usize),
    #[error("timestep {t} out of range ({len} steps)")]
    IndexOutOfRange { t: usize, len: usize },
    #[error("step requires t > t_prev, got t={t}, t_prev={t_prev}")]
    StepOrder { t: usize, t_prev: usize },
    #[error("alpha_bar is exactly 0 at t={t}; the clean-sample estimate is undefined there")]
    TerminalAlpha { t: usize },
    #[error("shape mismatch: {left} vs {right} elements")]
    ShapeMismatch { left: usize, right: usize },
    #[error("n_gen must be at least 1")]
    BadShift,
    #[error("invalid guidance config: {0}")]
    BadGuidance(String),
}

/// Cumulative signal table `ᾱ_t`, strictly decreasing; the terminal entry may
/// be exactly 0 after the zero-terminal correction.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    alphas_cumprod: Vec<f64>,
}

impl NoiseSchedule {
    pub fn from_alphas_cumprod(alphas_cumprod: Vec<f64>) -> Result<Self, ScheduleError> {
        if alphas_cumprod.is_empty() {
            return Err(ScheduleError::Empty);
        }
        for (i, &a) in alphas_cumprod.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) || !a.is_finite() {
                return Err(ScheduleError::NotDecreasing(i));
            }
            if i > 0 && a >= alphas_cumprod[i - 1] {
                return Err(ScheduleError::NotDecreasing(i));
            }
        }
        Ok(Self { alphas_cumprod })
    }

    pub fn alphas_cumprod(&self) -> &[f64] {
        &self.alphas_cumprod
    }

    pub fn len(&self) -> usize {
        self.alphas_cumprod.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas_cumprod.is_empty()
    }

    pub fn alpha_bar(&self, t: usize) -> Result<f64, ScheduleError> {
        self.alphas_cumprod
            .get(t)
            .copied()
            .ok_or(ScheduleError::IndexOutOfRange {
                t,
                len: self.alphas_cumprod.len(),
            })
    }

    pub fn terminal(&self) -> f64 {
        *self.alphas_cumprod.last().unwrap()
    }
}

/// Linear β ramp; `ᾱ_t = Π_{s≤t} (1 - β_s)`.
pub fn linear_schedule(
    n_steps: usize,
    beta_start: f64,
    beta_end: f64,
) -> Result<NoiseSchedule, ScheduleError> {
    if n_steps == 0 {
        return Err(ScheduleError::Empty);
    }
    if !(0.0 < beta_start && beta_start < beta_end && beta_end < 1.0) {
        return Err(ScheduleError::BetaEndpoints {
            start: beta_start,
            end: beta_end,
        });
    }
    let mut alphas = Vec::with_capacity(n_steps);
    let mut cum = 1.0;
    for t in 0..n_steps {
        let frac = if n_steps == 1 {
            0.0
        } else {
            t as f64 / (n_steps - 1) as f64
        };
        let beta = beta_start + (beta_end - beta_start) * frac;
        cum *= 1.0 - beta;
        alphas.push(cum);
    }
    NoiseSchedule::from_alphas_cumprod(alphas)
}

/// Default β endpoints of the common 1000-step linear recipe.
pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.02;
pub const DEFAULT_TRAIN_STEPS: usize = 1000;

/// Rescales `√ᾱ` affinely so the terminal entry is exactly 0 while the first
/// entry is preserved: the last step then carries pure noise. Idempotent.
pub fn enforce_zero_terminal_snr(schedule: &NoiseSchedule) -> NoiseSchedule {
    let sqrt: Vec<f64> = schedule.alphas_cumprod.iter().map(|a| a.sqrt()).collect();
    let first = sqrt[0];
    let last = *sqrt.last().unwrap();
    if last == 0.0 {
        return schedule.clone();
    }
    let scale = first / (first - last);
    let alphas: Vec<f64> = sqrt
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i == schedule.len() - 1 {
                0.0
            } else {
                let shifted = (s - last) * scale;
                shifted * shifted
            }
        })
        .collect();
    NoiseSchedule {
        alphas_cumprod: alphas,
    }
}

/// How the temporal shift is applied to the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftMode {
    /// Offset every entry's log-SNR by `2·ln(ratio)` (equivalently multiply
    /// the SNR by `ratio²`), then map back through `ᾱ = SNR/(1+SNR)`.
    #[default]
    LogSnr,
    /// Multiply `ᾱ` directly by `ratio²` (a cruder alternative, kept for
    /// comparison).
    DirectAlpha,
}

#[derive(Debug, Clone)]
pub struct ShiftedSchedule {
    pub schedule: NoiseSchedule,
    pub ratio: f64,
}

/// Shifts the schedule for jointly denoising `n_gen` frames, with ratio
/// `√(1/n_gen)`. Entries at exactly 0 or 1 pass through unshifted (their
/// SNR is 0 or infinite).
pub fn temporal_shift(
    schedule: &NoiseSchedule,
    n_gen: usize,
    mode: ShiftMode,
) -> Result<ShiftedSchedule, ScheduleError> {
    if n_gen == 0 {
        return Err(ScheduleError::BadShift);
    }
    let ratio = (1.0 / n_gen as f64).sqrt();
    let r2 = ratio * ratio;
    let alphas: Vec<f64> = schedule
        .alphas_cumprod
        .iter()
        .map(|&a| {
            if a == 0.0 || a == 1.0 {
                return a;
            }
            match mode {
                ShiftMode::LogSnr => {
                    let snr = a / (1.0 - a);
                    let shifted = r2 * snr;
                    shifted / (1.0 + shifted)
                }
                ShiftMode::DirectAlpha => r2 * a,
            }
        })
        .collect();
    Ok(ShiftedSchedule {
        schedule: NoiseSchedule {
            alphas_cumprod: alphas,
        },
        ratio,
    })
}

fn check_shapes(a: &[f64], b: &[f64]) -> Result<(), ScheduleError> {
    if a.len() != b.len() {
        return Err(ScheduleError::ShapeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Forward noising: `z_t = √ᾱ_t·z0 + √(1-ᾱ_t)·ε`, elementwise.
pub fn add_noise(
    z0: &[f64],
    eps: &[f64],
    schedule: &NoiseSchedule,
    t: usize,
) -> Result<Vec<f64>, ScheduleError> {
    check_shapes(z0, eps)?;
    let a = schedule.alpha_bar(t)?;
    let sa = a.sqrt();
    let sn = (1.0 - a).sqrt();
    Ok(z0.iter().zip(eps).map(|(&z, &e)| sa * z + sn * e).collect())
}

/// One deterministic denoising step from `t` down to `t_prev`
/// (`None` = the clean state, `ᾱ = 1`). Returns `(z_prev, ẑ0)`.
pub fn ddim_step(
    z_t: &[f64],
    eps_pred: &[f64],
    schedule: &NoiseSchedule,
    t: usize,
    t_prev: Option<usize>,
) -> Result<(Vec<f64>, Vec<f64>), ScheduleError> {
    check_shapes(z_t, eps_pred)?;
    if let Some(p) = t_prev {
        if t <= p {
            return Err(ScheduleError::StepOrder { t, t_prev: p });
        }
    }
    let a_t = schedule.alpha_bar(t)?;
    if a_t == 0.0 {
        return Err(ScheduleError::TerminalAlpha { t });
    }
    let a_prev = match t_prev {
        Some(p) => schedule.alpha_bar(p)?,
        None => 1.0,
    };
    let sa_t = a_t.sqrt();
    let sn_t = (1.0 - a_t).sqrt();
    let sa_p = a_prev.sqrt();
    let sn_p = (1.0 - a_prev).sqrt();

    let z0_hat: Vec<f64> = z_t
        .iter()
        .zip(eps_pred)
        .map(|(&z, &e)| (z - sn_t * e) / sa_t)
        .collect();
    let z_prev: Vec<f64> = z0_hat
        .iter()
        .zip(eps_pred)
        .map(|(&z0, &e)| sa_p * z0 + sn_p * e)
        .collect();
    Ok((z_prev, z0_hat))
}

/// Classifier-free guidance: `ε̃ = ε_uncond + s·(ε_cond − ε_uncond)`.
pub fn cfg_combine(
    eps_uncond: &[f64],
    eps_cond: &[f64],
    scale: f64,
) -> Result<Vec<f64>, ScheduleError> {
    check_shapes(eps_uncond, eps_cond)?;
    Ok(eps_uncond
        .iter()
        .zip(eps_cond)
        .map(|(&u, &c)| u + scale * (c - u))
        .collect())
}

/// Guidance configuration: scale applied at sampling, conditioning dropout
/// probability used at training time.
#[derive(Debug, Clone, Copy)]
pub struct GuidanceConfig {
    pub scale: f64,
    pub dropout: f64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            scale: 2.0,
            dropout: 0.1,
        }
    }
}

impl GuidanceConfig {
    pub fn new(scale: f64, dropout: f64) -> Result<Self, ScheduleError> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(ScheduleError::BadGuidance(format!(
                "scale must be non-negative, got {scale}"
            )));
        }
        if !(0.0..=1.0).contains(&dropout) {
            return Err(ScheduleError::BadGuidance(format!(
                "dropout must lie in [0, 1], got {dropout}"
            )));
        }
        Ok(Self { scale, dropout })
    }
}

/// Independent uniform timesteps on a `batch × frames` grid.
pub fn sample_frame_timesteps(
    batch: usize,
    frames: usize,
    n_steps: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..batch)
        .map(|_| (0..frames).map(|_| rng.random_range(0..n_steps)).collect())
        .collect()
}

/// Evenly spaced descending timestep ladder over `n_train` steps.
pub fn ddim_timestep_ladder(n_train: usize, n_sample: usize) -> Vec<usize> {
    if n_train == 0 || n_sample == 0 {
        return Vec::new();
    }
    if n_sample == 1 {
        return vec![n_train - 1];
    }
    let mut out: Vec<usize> = (0..n_sample)
        .map(|i| {
            let f = (n_sample - 1 - i) as f64 / (n_sample - 1) as f64;
            ((n_train - 1) as f64 * f).round() as usize
        })
        .collect();
    out.dedup();
    out
}

/// Runs the deterministic sampler along a descending ladder, calling
/// `denoiser(z, t)` for the noise estimate at each step. The final step
/// targets the clean state.
///
/// If the ladder starts at a zero-`ᾱ` index (a corrected schedule), the
/// clean-sample estimate is undefined there; the first update instead
/// evaluates it at the first sub-terminal index, which passes the latent
/// through unchanged and lets sampling proceed from pure noise.
pub fn ddim_sample<F>(
    schedule: &NoiseSchedule,
    ladder: &[usize],
    z_init: Vec<f64>,
    mut denoiser: F,
) -> Result<Vec<f64>, ScheduleError>
where
    F: FnMut(&[f64], usize) -> Vec<f64>,
{
    let mut z = z_init;
    for (i, &t) in ladder.iter().enumerate() {
        let t_prev = ladder.get(i + 1).copied();
        let eps = denoiser(&z, t);
        check_shapes(&z, &eps)?;
        if schedule.alpha_bar(t)? == 0.0 {
            // ẑ0 is undefined at a zero-ᾱ index; estimate it at the first
            // sub-terminal index instead. The update then telescopes to the
            // identity, re-labelling the pure-noise latent as z_{t_prev}.
            let sub = t_prev.ok_or(ScheduleError::TerminalAlpha { t })?;
            let a_sub = schedule.alpha_bar(sub)?;
            let sa = a_sub.sqrt();
            let sn = (1.0 - a_sub).sqrt();
            let z0_hat: Vec<f64> = z
                .iter()
                .zip(&eps)
                .map(|(&zv, &e)| (zv - sn * e) / sa)
                .collect();
            z = z0_hat
                .iter()
                .zip(&eps)
                .map(|(&z0, &e)| sa * z0 + sn * e)
                .collect();
            continue;
        }
        let (z_next, _) = ddim_step(&z, &eps, schedule, t, t_prev)?;
        z = z_next;
    }
    Ok(z)
}
