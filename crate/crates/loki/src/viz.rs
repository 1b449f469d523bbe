//! PNG / PGM rendering of maps and raster buffers.
//!
//! Channel images use a symmetric blue–white–red diverging colormap over a
//! fixed range (encoding channels: [-1, 1]); magnitude images use the
//! positive half over [0, max], with the max recorded by the caller in a
//! sidecar so ranges stay comparable across frames.

use std::io::Write;
use std::path::Path;

use image::{Rgb, RgbImage};
use ndarray::ArrayView2;
use thiserror::Error;

use crate::driver_map::{DriverMap, DEFORMATION_CHANNELS, POSENC_CHANNELS};
use crate::raster::RasterBuffer;

#[derive(Debug, Error)]
pub enum VizError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("image encoding failed: {0}")]
    Image(#[from] image::ImageError),
}

const COLD: [f64; 3] = [59.0, 76.0, 192.0];
const WARM: [f64; 3] = [180.0, 4.0, 38.0];
const WHITE: [f64; 3] = [255.0, 255.0, 255.0];

/// Diverging colormap: `t = -1` cold blue, `t = 0` white, `t = +1` warm red.
pub fn diverging_rgb(t: f64) -> [u8; 3] {
    let t = t.clamp(-1.0, 1.0);
    let (from, to, s) = if t < 0.0 {
        (WHITE, COLD, -t)
    } else {
        (WHITE, WARM, t)
    };
    let mut out = [0u8; 3];
    for (o, (f, g)) in out.iter_mut().zip(from.iter().zip(&to)) {
        *o = (f + (g - f) * s).round() as u8;
    }
    out
}

/// Renders one channel with the diverging map over `[lo, hi]` (symmetric
/// ranges put zero at white).
pub fn channel_image(channel: ArrayView2<f32>, lo: f64, hi: f64) -> RgbImage {
    let (h, w) = (channel.nrows(), channel.ncols());
    let mut img = RgbImage::new(w as u32, h as u32);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    for y in 0..h {
        for x in 0..w {
            let t = 2.0 * (channel[(y, x)] as f64 - lo) / span - 1.0;
            img.put_pixel(x as u32, y as u32, Rgb(diverging_rgb(t)));
        }
    }
    img
}

pub fn save_channel_png(
    path: impl AsRef<Path>,
    channel: ArrayView2<f32>,
    lo: f64,
    hi: f64,
) -> Result<(), VizError> {
    channel_image(channel, lo, hi).save(path)?;
    Ok(())
}

/// Per-pixel L2 norm of the deformation channels.
pub fn deformation_magnitude(map: &DriverMap) -> ndarray::Array2<f32> {
    let (h, w) = (map.height(), map.width());
    let mut out = ndarray::Array2::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0f32;
            for c in POSENC_CHANNELS..POSENC_CHANNELS + DEFORMATION_CHANNELS {
                let v = map.tensor[(c, y, x)];
                acc += v * v;
            }
            out[(y, x)] = acc.sqrt();
        }
    }
    out
}

/// Magnitude image over `[0, max]`: white at zero, warm at the shared max.
pub fn save_magnitude_png(
    path: impl AsRef<Path>,
    magnitude: ArrayView2<f32>,
    max: f64,
) -> Result<(), VizError> {
    let (h, w) = (magnitude.nrows(), magnitude.ncols());
    let mut img = RgbImage::new(w as u32, h as u32);
    let max = max.max(f64::MIN_POSITIVE);
    for y in 0..h {
        for x in 0..w {
            let t = (magnitude[(y, x)] as f64 / max).clamp(0.0, 1.0);
            img.put_pixel(x as u32, y as u32, Rgb(diverging_rgb(t)));
        }
    }
    img.save(path)?;
    Ok(())
}

fn write_pgm(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    pixels: &[u8],
) -> Result<(), VizError> {
    let mut f = std::fs::File::create(path)?;
    write!(f, "P5\n{width} {height}\n255\n")?;
    f.write_all(pixels)?;
    Ok(())
}

/// Face indices as gray levels (background black, faces cycle 1..=255).
pub fn save_face_index_pgm(path: impl AsRef<Path>, raster: &RasterBuffer) -> Result<(), VizError> {
    let pixels: Vec<u8> = raster
        .face_index
        .iter()
        .map(|&f| if f < 0 { 0 } else { 1 + (f as u32 % 255) as u8 })
        .collect();
    write_pgm(path, raster.width, raster.height, &pixels)
}

/// Depth linearly mapped to 1..=255 over the finite range (background black).
pub fn save_depth_pgm(path: impl AsRef<Path>, raster: &RasterBuffer) -> Result<(), VizError> {
    let finite: Vec<f64> = raster
        .depth
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .collect();
    let (lo, hi) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let pixels: Vec<u8> = raster
        .depth
        .iter()
        .map(|&d| {
            if d.is_finite() {
                1 + (254.0 * (d - lo) / span).round() as u8
            } else {
                0
            }
        })
        .collect();
    write_pgm(path, raster.width, raster.height, &pixels)
}
