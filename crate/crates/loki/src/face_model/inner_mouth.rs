//! Procedural inner-mouth cavity.
//!
//! The base mesh has no oral cavity; when the jaw opens the mouth interior
//! would be empty. A half-sphere of procedural vertices fills it: built once
//! in template space from the rest jaw joint and an anchor lip vertex, and
//! posed rigidly with the jaw's world transform. Cavity vertices are not part
//! of linear blend skinning and carry zero expression deformation; they
//! contribute positional-encoding channels only.

use nalgebra::Vector3;

/// Template-space cavity geometry.
///
/// `offsets[i]` is vertex `i` relative to the template jaw joint, so the
/// posed position is `jaw_frame(offset)`; `template_positions` caches
/// `jaw + offset` for the positional encoding.
#[derive(Debug, Clone, Default)]
pub struct CavityMesh {
    pub offsets: Vec<Vector3<f64>>,
    pub template_positions: Vec<Vector3<f64>>,
    /// Triangles in cavity-local indexing (0-based within the cavity).
    pub faces: Vec<[u32; 3]>,
}

impl CavityMesh {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Builds `count` vertices on a half-sphere between the jaw joint and the
/// anchor lip vertex.
///
/// Construction: centre at the jaw–anchor midpoint, radius half the
/// jaw–anchor distance, dome opening away from the lip. Vertices lie on
/// `n_rings` latitude rings of `n_segments` points each
/// (`n_segments = ceil(sqrt(2·count))`), enumerated ring-major and truncated
/// to exactly `count`; rings are triangulated as quad strips, dropping quads
/// that lost vertices to truncation.
pub fn half_sphere(jaw: &Vector3<f64>, anchor: &Vector3<f64>, count: usize) -> CavityMesh {
    if count == 0 {
        return CavityMesh::empty();
    }
    let span = anchor - jaw;
    let dist = span.norm();
    // Degenerate anchor placement still yields a valid (collapsed) cavity.
    let axis = if dist > 0.0 {
        span / dist
    } else {
        Vector3::new(0.0, 0.0, 1.0)
    };
    let radius = dist / 2.0;
    let center_offset = span / 2.0; // centre relative to the jaw joint

    let e1 = if axis.x.abs() < 0.9 {
        axis.cross(&Vector3::new(1.0, 0.0, 0.0)).normalize()
    } else {
        axis.cross(&Vector3::new(0.0, 1.0, 0.0)).normalize()
    };
    let e2 = axis.cross(&e1);

    let n_segments = ((2 * count) as f64).sqrt().ceil() as usize;
    let n_segments = n_segments.max(3);
    let n_rings = count.div_ceil(n_segments);

    let mut offsets = Vec::with_capacity(count);
    'rings: for ring in 0..n_rings {
        let polar = std::f64::consts::FRAC_PI_2 * (ring as f64 + 0.5) / n_rings as f64;
        let (sp, cp) = polar.sin_cos();
        for seg in 0..n_segments {
            if offsets.len() == count {
                break 'rings;
            }
            let azimuth = 2.0 * std::f64::consts::PI * seg as f64 / n_segments as f64;
            let (sa, ca) = azimuth.sin_cos();
            let dir = e1 * (cp * ca) + e2 * (cp * sa) - axis * sp;
            offsets.push(center_offset + dir * radius);
        }
    }

    let mut faces = Vec::new();
    for ring in 0..n_rings.saturating_sub(1) {
        for seg in 0..n_segments {
            let a = ring * n_segments + seg;
            let b = ring * n_segments + (seg + 1) % n_segments;
            let c = (ring + 1) * n_segments + seg;
            let d = (ring + 1) * n_segments + (seg + 1) % n_segments;
            if a < count && b < count && c < count && d < count {
                faces.push([a as u32, b as u32, d as u32]);
                faces.push([a as u32, d as u32, c as u32]);
            }
        }
    }

    let template_positions = offsets.iter().map(|d| jaw + d).collect();
    CavityMesh {
        offsets,
        template_positions,
        faces,
    }
}
