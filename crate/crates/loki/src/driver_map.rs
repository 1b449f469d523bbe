//! The 45-channel driver map and its cross-identity substitution.
//!
//! Channels 1–42 are a sinusoidal positional encoding of *template-space*
//! vertex coordinates (mean-centred, max-normalised once per asset set),
//! axis-grouped: the seven sine octaves for x, then the seven cosine octaves
//! for x, then the same for y and z. Channels 43–45 carry the per-vertex
//! expression offsets divided by the corpus deformation scale.
//!
//! The live posed mesh determines only *where* values land in the image —
//! which triangle wins each pixel and with what barycentric weights. What
//! gets written never comes from the posed geometry: encoding values are
//! computed once from the canonical template, deformation values from the
//! expression coefficients alone. That split is what makes the map
//! identity-free — substituting a different identity shape or camera
//! re-lays-out the same content.

use nalgebra::Vector3;
use ndarray::{Array2, Array3};
use thiserror::Error;

use crate::assets::{ContainerError, FaceModelAssets, TensorContainer, TensorData};
use crate::camera::Camera;
use crate::face_model::{self, ModelError, PoseParams};
use crate::raster::{self, RasterError};

pub const POSENC_OCTAVES: usize = 7;
/// 3 axes × 7 octaves × 2 (sin/cos).
pub const POSENC_CHANNELS: usize = 42;
pub const DEFORMATION_CHANNELS: usize = 3;
pub const DRIVER_MAP_CHANNELS: usize = POSENC_CHANNELS + DEFORMATION_CHANNELS;

#[derive(Debug, Error)]
pub enum MapError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error("template is degenerate: all vertices identical")]
    DegenerateTemplate,
    #[error("encoded template has {got} rows, mesh has {expected} vertices")]
    TemplateRows { expected: usize, got: usize },
    #[error("invalid camera: {0}")]
    Camera(String),
    #[error("unknown map mode code {0}")]
    UnknownMode(i32),
}

/// Map-construction modes: the full map, or a map with one channel group
/// zeroed (the tensor keeps its 45-channel shape either way).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapMode {
    Full,
    NoDeformation,
    NoPosenc,
}

impl MapMode {
    pub fn code(self) -> i32 {
        match self {
            MapMode::Full => 0,
            MapMode::NoDeformation => 1,
            MapMode::NoPosenc => 2,
        }
    }

    pub fn from_code(code: i32) -> Result<Self, MapError> {
        match code {
            0 => Ok(MapMode::Full),
            1 => Ok(MapMode::NoDeformation),
            2 => Ok(MapMode::NoPosenc),
            other => Err(MapError::UnknownMode(other)),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MapMode::Full => "full",
            MapMode::NoDeformation => "no_deformation",
            MapMode::NoPosenc => "no_posenc",
        }
    }
}

impl std::str::FromStr for MapMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(MapMode::Full),
            "no_deformation" => Ok(MapMode::NoDeformation),
            "no_posenc" => Ok(MapMode::NoPosenc),
            other => Err(format!(
                "unknown mode {other:?} (expected full, no_deformation, or no_posenc)"
            )),
        }
    }
}

/// Sinusoidal encoding of one point, axis-grouped:
/// `[sin 2⁰x … sin 2⁶x, cos 2⁰x … cos 2⁶x, (y…), (z…)]`.
pub fn positional_encoding(p: &Vector3<f64>, octaves: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(6 * octaves);
    for axis in 0..3 {
        let x = p[axis];
        for k in 0..octaves {
            out.push(((1u64 << k) as f64 * x).sin());
        }
        for k in 0..octaves {
            out.push(((1u64 << k) as f64 * x).cos());
        }
    }
    out
}

/// Precomputed per-vertex encoding of the normalised template, shared across
/// every identity, expression, and pose.
#[derive(Debug, Clone)]
pub struct EncodedTemplate {
    /// `N_total × 42`.
    pub per_vertex_pe: Array2<f64>,
    pub mean: Vector3<f64>,
    pub scale: f64,
}

/// Mean-centres and max-normalises the template, then encodes every vertex.
pub fn normalize_template(template_vertices: &[Vector3<f64>]) -> Result<EncodedTemplate, MapError> {
    if template_vertices.is_empty() {
        return Err(MapError::DegenerateTemplate);
    }
    let mean = template_vertices.iter().sum::<Vector3<f64>>() / template_vertices.len() as f64;
    let scale = template_vertices
        .iter()
        .flat_map(|v| (v - mean).iter().map(|x| x.abs()).collect::<Vec<_>>())
        .fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Err(MapError::DegenerateTemplate);
    }
    let mut pe = Array2::zeros((template_vertices.len(), POSENC_CHANNELS));
    for (i, v) in template_vertices.iter().enumerate() {
        let normed = (v - mean) / scale;
        for (c, value) in positional_encoding(&normed, POSENC_OCTAVES)
            .into_iter()
            .enumerate()
        {
            pe[(i, c)] = value;
        }
    }
    Ok(EncodedTemplate {
        per_vertex_pe: pe,
        mean,
        scale,
    })
}

impl EncodedTemplate {
    /// Encodes the asset's extended template (base mesh plus inner-mouth
    /// cavity at rest).
    pub fn from_assets(assets: &FaceModelAssets) -> Result<Self, MapError> {
        normalize_template(&assets.extended_template_vertices())
    }
}

/// The rasterised conditioning tensor, channel-first `45 × H × W`.
#[derive(Debug, Clone)]
pub struct DriverMap {
    pub tensor: Array3<f32>,
    pub mode: MapMode,
    pub sigma: f64,
}

impl DriverMap {
    pub fn height(&self) -> usize {
        self.tensor.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.tensor.shape()[2]
    }

    /// All 45 channel values at one pixel.
    pub fn pixel(&self, x: usize, y: usize) -> Vec<f32> {
        (0..DRIVER_MAP_CHANNELS)
            .map(|c| self.tensor[(c, y, x)])
            .collect()
    }

    pub fn to_container(&self) -> TensorContainer {
        let mut c = TensorContainer::new();
        let shape = self.tensor.shape().to_vec();
        c.push(
            "driver_map",
            shape,
            TensorData::F32(self.tensor.iter().copied().collect()),
        )
        .unwrap();
        c.push("meta_mode", vec![], TensorData::I32(vec![self.mode.code()]))
            .unwrap();
        c.push("meta_sigma", vec![], TensorData::F64(vec![self.sigma]))
            .unwrap();
        c
    }

    pub fn from_container(c: &TensorContainer) -> Result<Self, MapError> {
        let (shape, data) = c.f32s("driver_map")?;
        let dims: [usize; 3] = [shape[0], shape[1], shape[2]];
        let tensor =
            Array3::from_shape_vec(dims, data.to_vec()).expect("shape validated by container");
        Ok(Self {
            tensor,
            mode: MapMode::from_code(c.scalar_i32("meta_mode")?)?,
            sigma: c.scalar_f64("meta_sigma")?,
        })
    }

    pub fn write_file(&self, path: impl AsRef<std::path::Path>) -> Result<(), MapError> {
        self.to_container().write_file(path)?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<std::path::Path>) -> Result<Self, MapError> {
        Self::from_container(&TensorContainer::read_file(path)?)
    }
}

/// Per-vertex attribute matrix fed to the rasteriser: 42 encoding columns
/// followed by 3 normalised deformation columns.
pub fn vertex_attributes(
    assets: &FaceModelAssets,
    encoded: &EncodedTemplate,
    delta_expr: &[Vector3<f64>],
) -> Result<Array2<f64>, MapError> {
    let n = delta_expr.len();
    if encoded.per_vertex_pe.nrows() != n {
        return Err(MapError::TemplateRows {
            expected: n,
            got: encoded.per_vertex_pe.nrows(),
        });
    }
    let mut attrs = Array2::zeros((n, DRIVER_MAP_CHANNELS));
    for i in 0..n {
        for c in 0..POSENC_CHANNELS {
            attrs[(i, c)] = encoded.per_vertex_pe[(i, c)];
        }
        let d = delta_expr[i] / assets.deformation_sigma;
        attrs[(i, POSENC_CHANNELS)] = d.x;
        attrs[(i, POSENC_CHANNELS + 1)] = d.y;
        attrs[(i, POSENC_CHANNELS + 2)] = d.z;
    }
    Ok(attrs)
}

/// Evaluates the mesh, rasterises it, and interpolates encoding and
/// deformation values into the camera's image plane.
pub fn build_driver_map(
    assets: &FaceModelAssets,
    encoded: &EncodedTemplate,
    shape_coeffs: &[f64],
    expr_coeffs: &[f64],
    pose: &PoseParams,
    camera: &Camera,
    mode: MapMode,
) -> Result<DriverMap, MapError> {
    camera.validate().map_err(MapError::Camera)?;
    let mesh = face_model::evaluate_mesh(assets, shape_coeffs, expr_coeffs, pose)?;
    let attrs = vertex_attributes(assets, encoded, &mesh.delta_expr)?;
    let faces = assets.masked_extended_faces();
    let buffer = raster::rasterize(&mesh.vertices, &faces, camera);
    let image = raster::interpolate_attribute(&buffer, &attrs)?;

    let (h, w) = (buffer.height, buffer.width);
    let mut tensor = Array3::<f32>::zeros((DRIVER_MAP_CHANNELS, h, w));
    for y in 0..h {
        for x in 0..w {
            for c in 0..DRIVER_MAP_CHANNELS {
                tensor[(c, y, x)] = image[(y, x, c)] as f32;
            }
        }
    }
    match mode {
        MapMode::Full => {}
        MapMode::NoDeformation => {
            tensor
                .slice_mut(ndarray::s![POSENC_CHANNELS.., .., ..])
                .fill(0.0);
        }
        MapMode::NoPosenc => {
            tensor
                .slice_mut(ndarray::s![..POSENC_CHANNELS, .., ..])
                .fill(0.0);
        }
    }
    Ok(DriverMap {
        tensor,
        mode,
        sigma: assets.deformation_sigma,
    })
}

/// Cross-identity substitution: the reference's identity shape and camera
/// composed with the driver's expression and pose. A pure function — exactly
/// [`build_driver_map`] on the substituted tuple.
pub fn retarget(
    assets: &FaceModelAssets,
    encoded: &EncodedTemplate,
    reference_shape: &[f64],
    reference_camera: &Camera,
    driver_expr: &[f64],
    driver_pose: &PoseParams,
) -> Result<DriverMap, MapError> {
    build_driver_map(
        assets,
        encoded,
        reference_shape,
        driver_expr,
        driver_pose,
        reference_camera,
        MapMode::Full,
    )
}

/// Ablation baseline: the concatenated parameter vector tiled across a
/// spatial grid (conventionally 64×64) instead of rasterised. No learned
/// projection here — this is the representational stand-in: every position
/// carries the same vector.
pub fn raw_vector_broadcast(
    shape_coeffs: &[f64],
    expr_coeffs: &[f64],
    pose: &PoseParams,
    grid_width: usize,
    grid_height: usize,
) -> Array3<f64> {
    let mut vector: Vec<f64> = Vec::new();
    vector.extend_from_slice(shape_coeffs);
    vector.extend_from_slice(expr_coeffs);
    vector.extend(pose.flattened_rotations());
    let channels = vector.len();
    let mut out = Array3::zeros((channels, grid_height, grid_width));
    for (c, &v) in vector.iter().enumerate() {
        out.slice_mut(ndarray::s![c, .., ..]).fill(v);
    }
    out
}
