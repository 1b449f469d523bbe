//! Deterministic software triangle rasteriser.
//!
//! Pixel centres sample at `(x + 0.5, y + 0.5)`. Coverage uses edge functions
//! with a top-left style tie-break so a pixel centre on a shared edge is
//! owned by exactly one triangle; the depth test is a strict `<`, ties go to
//! the lower face index. Barycentric weights are perspective-correct
//! (interpolated in 1/z). Triangles with any behind-camera vertex are dropped
//! entirely; there is no backface culling, so interior surfaces (the mouth
//! cavity) stay visible.
//!
//! Work is split over fixed-height row bands; each band owns its rows
//! exclusively and scans faces in index order, so the output is bit-identical
//! for any thread count or band scheduling.

use nalgebra::Vector3;
use ndarray::{Array2, Array3};
use rayon::prelude::*;
use thiserror::Error;

use crate::camera::Camera;

const ROWS_PER_BAND: usize = 32;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("attribute array has {got} rows, raster references vertices up to {needed}")]
    AttributeRows { needed: usize, got: usize },
}

/// Per-pixel visibility: face index (−1 = background), barycentric weights of
/// the visible triangle's vertices, and camera-space depth (infinite on
/// background).
#[derive(Debug, Clone, PartialEq)]
pub struct RasterBuffer {
    pub width: usize,
    pub height: usize,
    pub face_index: Vec<i32>,
    pub barycentric: Vec<[f64; 3]>,
    pub depth: Vec<f64>,
    /// The face list the buffer was rasterised from (corner vertex ids).
    pub faces: Vec<[u32; 3]>,
}

impl RasterBuffer {
    #[inline]
    pub fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn face_at(&self, x: usize, y: usize) -> i32 {
        self.face_index[self.idx(x, y)]
    }

    pub fn coverage_count(&self) -> usize {
        self.face_index.iter().filter(|&&f| f >= 0).count()
    }
}

#[derive(Clone, Copy)]
struct Pixel {
    face: i32,
    bary: [f64; 3],
    depth: f64,
}

const BACKGROUND: Pixel = Pixel {
    face: -1,
    bary: [0.0; 3],
    depth: f64::INFINITY,
};

#[derive(Clone, Copy)]
struct ScreenVertex {
    u: f64,
    v: f64,
    z: f64,
}

#[inline]
fn orient2d(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Tie-break predicate for a pixel centre exactly on an edge: exactly one of
/// the two triangles sharing the edge (opposite directions) passes it.
#[inline]
fn owns_edge(dx: f64, dy: f64) -> bool {
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

pub fn rasterize(vertices: &[Vector3<f64>], faces: &[[u32; 3]], camera: &Camera) -> RasterBuffer {
    let width = camera.width as usize;
    let height = camera.height as usize;
    let projected = camera.project(vertices);
    let screen: Vec<ScreenVertex> = projected
        .iter()
        .map(|p| ScreenVertex {
            u: p.u,
            v: p.v,
            z: p.depth,
        })
        .collect();
    let behind: Vec<bool> = projected.iter().map(|p| p.behind).collect();

    let mut pixels = vec![BACKGROUND; width * height];
    let band_rows = ROWS_PER_BAND.min(height.max(1));
    pixels
        .par_chunks_mut(band_rows * width)
        .enumerate()
        .for_each(|(band, chunk)| {
            let y0 = band * band_rows;
            let y1 = (y0 + chunk.len() / width.max(1)).min(height);
            render_band(chunk, y0, y1, width, &screen, &behind, faces);
        });

    let mut face_index = Vec::with_capacity(pixels.len());
    let mut barycentric = Vec::with_capacity(pixels.len());
    let mut depth = Vec::with_capacity(pixels.len());
    for p in pixels {
        face_index.push(p.face);
        barycentric.push(p.bary);
        depth.push(p.depth);
    }
    RasterBuffer {
        width,
        height,
        face_index,
        barycentric,
        depth,
        faces: faces.to_vec(),
    }
}

#[allow(clippy::too_many_arguments)]
fn render_band(
    chunk: &mut [Pixel],
    y0: usize,
    y1: usize,
    width: usize,
    screen: &[ScreenVertex],
    behind: &[bool],
    faces: &[[u32; 3]],
) {
    for (fi, face) in faces.iter().enumerate() {
        let [i0, i1, i2] = [face[0] as usize, face[1] as usize, face[2] as usize];
        if behind[i0] || behind[i1] || behind[i2] {
            continue;
        }
        let (p0, p1, p2) = (screen[i0], screen[i1], screen[i2]);
        let a = (p0.u, p0.v);
        let b = (p1.u, p1.v);
        let c = (p2.u, p2.v);

        let area = orient2d(a, b, c);
        if area == 0.0 {
            continue;
        }
        let sign = if area > 0.0 { 1.0 } else { -1.0 };

        // Edge deltas oriented to match the sign-normalised winding.
        let edge = |from: (f64, f64), to: (f64, f64)| {
            if sign > 0.0 {
                (to.0 - from.0, to.1 - from.1)
            } else {
                (from.0 - to.0, from.1 - to.1)
            }
        };
        let e0 = edge(b, c);
        let e1 = edge(c, a);
        let e2 = edge(a, b);

        let min_u = p0.u.min(p1.u).min(p2.u);
        let max_u = p0.u.max(p1.u).max(p2.u);
        let min_v = p0.v.min(p1.v).min(p2.v);
        let max_v = p0.v.max(p1.v).max(p2.v);

        let x_start = (min_u - 0.5).ceil().max(0.0) as usize;
        let x_end = ((max_u - 0.5).floor() as isize).min(width as isize - 1);
        let y_start = ((min_v - 0.5).ceil().max(0.0) as usize).max(y0);
        let y_end = ((max_v - 0.5).floor() as isize).min(y1 as isize - 1);
        if x_end < x_start as isize || y_end < y_start as isize {
            continue;
        }

        for y in y_start..=(y_end as usize) {
            let py = y as f64 + 0.5;
            let row = &mut chunk[(y - y0) * width..(y - y0) * width + width];
            for (x, px_out) in row
                .iter_mut()
                .enumerate()
                .take(x_end as usize + 1)
                .skip(x_start)
            {
                let p = (x as f64 + 0.5, py);
                let w0 = sign * orient2d(b, c, p);
                let w1 = sign * orient2d(c, a, p);
                let w2 = sign * orient2d(a, b, p);

                let covered = (w0 > 0.0 || (w0 == 0.0 && owns_edge(e0.0, e0.1)))
                    && (w1 > 0.0 || (w1 == 0.0 && owns_edge(e1.0, e1.1)))
                    && (w2 > 0.0 || (w2 == 0.0 && owns_edge(e2.0, e2.1)));
                if !covered {
                    continue;
                }

                let wsum = w0 + w1 + w2;
                if wsum == 0.0 {
                    continue;
                }
                let l0 = w0 / wsum;
                let l1 = w1 / wsum;
                let l2 = w2 / wsum;

                // Perspective correction: weights proportional to λ/z.
                let s0 = l0 / p0.z;
                let s1 = l1 / p1.z;
                let s2 = l2 / p2.z;
                let denom = s0 + s1 + s2;
                let z = 1.0 / denom;
                if z < px_out.depth {
                    *px_out = Pixel {
                        face: fi as i32,
                        bary: [s0 / denom, s1 / denom, s2 / denom],
                        depth: z,
                    };
                }
            }
        }
    }
}

/// Barycentric interpolation of per-vertex attributes into image space.
/// Background pixels are zero in every channel.
pub fn interpolate_attribute(
    raster: &RasterBuffer,
    per_vertex_values: &Array2<f64>,
) -> Result<Array3<f64>, RasterError> {
    let channels = per_vertex_values.ncols();
    let needed = raster
        .faces
        .iter()
        .flat_map(|f| f.iter())
        .copied()
        .max()
        .map(|m| m as usize + 1)
        .unwrap_or(0);
    if per_vertex_values.nrows() < needed {
        return Err(RasterError::AttributeRows {
            needed,
            got: per_vertex_values.nrows(),
        });
    }

    let mut out = Array3::zeros((raster.height, raster.width, channels));
    for y in 0..raster.height {
        for x in 0..raster.width {
            let i = raster.idx(x, y);
            let face = raster.face_index[i];
            if face < 0 {
                continue;
            }
            let corners = raster.faces[face as usize];
            let bary = raster.barycentric[i];
            for c in 0..channels {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += bary[k] * per_vertex_values[(corners[k] as usize, c)];
                }
                out[(y, x, c)] = acc;
            }
        }
    }
    Ok(out)
}
