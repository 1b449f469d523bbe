//! Reference anchors that make expression-follow scores interpretable on a
//! given corpus.
//!
//! * **self** — a frame scored against itself; 0 by construction, and a
//!   check that rendering adds no residual of its own.
//! * **near-frame** — same-clip frames a couple of steps apart; at clip
//!   frame rates the expression hardly changes between them, so this is
//!   the floor a perfect system could reach.
//! * **no-skill** — one frame from each of two random clips; what an
//!   ignorant prediction scores, reported with its spread.
//! * **ceiling** — the corpus's most neutral frame against one at the 99th
//!   percentile of per-clip maximum expression norm; about the largest
//!   score plausible fits can produce.
//!
//! Every anchor is a single-frame measurement (no window averaging), and
//! random pairing is counter-based: pair `i` draws from its own seeded
//! stream, so results do not depend on evaluation order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assets::{ClipBundle, FaceModelAssets};
use crate::driver_map::EncodedTemplate;

use super::expression::{hef_frame, ExprParams, FrameFit};
use super::{pairwise_mean, MetricError};

#[derive(Debug, Clone, Serialize)]
pub struct AnchorStats {
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    pub n: usize,
}

impl AnchorStats {
    fn from_scores(scores: &[f64]) -> Self {
        let n = scores.len();
        let mean = pairwise_mean(scores);
        let std = if n < 2 {
            0.0
        } else {
            let ss: f64 = scores.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        };
        Self {
            mean,
            std,
            stderr: if n > 0 { std / (n as f64).sqrt() } else { 0.0 },
            n,
        }
    }
}

/// Anchors marked `None` were unavailable on the given corpus (too few
/// clips or frames).
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub self_anchor: f64,
    pub near_frame: Option<AnchorStats>,
    pub no_skill: Option<AnchorStats>,
    pub ceiling: Option<f64>,
    pub near_window: usize,
    pub n_pairs: usize,
    pub seed: u64,
}

const STREAM_NEAR: u64 = 1;
const STREAM_CROSS: u64 = 2;

fn pair_rng(seed: u64, domain: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 32) | index as u64);
    rng
}

fn expression_norm(clip: &ClipBundle, frame: usize) -> f64 {
    clip.frames[frame]
        .expression
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

pub fn hef_calibrate(
    assets: &FaceModelAssets,
    encoded: &EncodedTemplate,
    corpus: &[ClipBundle],
    n_pairs: usize,
    seed: u64,
    near_window: usize,
) -> Result<CalibrationReport, MetricError> {
    if corpus.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    if n_pairs == 0 {
        return Err(MetricError::NoPairs);
    }
    let near_window = near_window.max(1);

    // Self anchor: first frame of the first clip against itself.
    let fit = FrameFit::from_clip(&corpus[0], 0);
    let self_anchor = hef_frame(assets, encoded, &fit, &ExprParams::from_fit(&fit))?;

    // Near-frame anchor: same-clip pairs at most `near_window` frames apart.
    let eligible: Vec<usize> = (0..corpus.len())
        .filter(|&c| corpus[c].n_frames() >= 2)
        .collect();
    let near_frame = if eligible.is_empty() {
        None
    } else {
        let mut scores = Vec::with_capacity(n_pairs);
        for i in 0..n_pairs {
            let mut rng = pair_rng(seed, STREAM_NEAR, i);
            let clip = &corpus[eligible[rng.random_range(0..eligible.len())]];
            let n = clip.n_frames();
            let delta = rng.random_range(1..=near_window.min(n - 1));
            let t = rng.random_range(0..n - delta);
            scores.push(hef_frame(
                assets,
                encoded,
                &FrameFit::from_clip(clip, t),
                &ExprParams::from_clip(clip, t + delta),
            )?);
        }
        Some(AnchorStats::from_scores(&scores))
    };

    // No-skill anchor: one frame from each of two distinct clips.
    let no_skill = if corpus.len() < 2 {
        None
    } else {
        let mut scores = Vec::with_capacity(n_pairs);
        for i in 0..n_pairs {
            let mut rng = pair_rng(seed, STREAM_CROSS, i);
            let a = rng.random_range(0..corpus.len());
            let b = loop {
                let b = rng.random_range(0..corpus.len());
                if b != a {
                    break b;
                }
            };
            let fa = rng.random_range(0..corpus[a].n_frames());
            let fb = rng.random_range(0..corpus[b].n_frames());
            scores.push(hef_frame(
                assets,
                encoded,
                &FrameFit::from_clip(&corpus[a], fa),
                &ExprParams::from_clip(&corpus[b], fb),
            )?);
        }
        Some(AnchorStats::from_scores(&scores))
    };

    // Ceiling anchor: most neutral frame vs the p99-expressive frame.
    let mut neutral = (f64::INFINITY, 0usize, 0usize);
    let mut clip_maxima: Vec<(f64, usize, usize)> = Vec::with_capacity(corpus.len());
    for (c, clip) in corpus.iter().enumerate() {
        let mut clip_max = (f64::NEG_INFINITY, c, 0usize);
        for t in 0..clip.n_frames() {
            let norm = expression_norm(clip, t);
            if norm < neutral.0 {
                neutral = (norm, c, t);
            }
            if norm > clip_max.0 {
                clip_max = (norm, c, t);
            }
        }
        clip_maxima.push(clip_max);
    }
    clip_maxima.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    // Nearest-rank 99th percentile of per-clip maxima; for tiny corpora this
    // degenerates to the largest clip maximum.
    let p99_index =
        ((0.99 * clip_maxima.len() as f64).ceil() as usize).clamp(1, clip_maxima.len()) - 1;
    let expressive = clip_maxima[p99_index];
    let ceiling = if (neutral.1, neutral.2) == (expressive.1, expressive.2) {
        None
    } else {
        Some(hef_frame(
            assets,
            encoded,
            &FrameFit::from_clip(&corpus[neutral.1], neutral.2),
            &ExprParams::from_clip(&corpus[expressive.1], expressive.2),
        )?)
    };

    Ok(CalibrationReport {
        self_anchor,
        near_frame,
        no_skill,
        ceiling,
        near_window,
        n_pairs,
        seed,
    })
}
