//! On-disk containers and in-memory asset types for the face model.
//!
//! [`FaceModelAssets`] is the neutral bundle of template mesh, blendshape
//! bases, skinning data, and topology. [`ClipBundle`] carries the per-frame
//! parameters fitted to one video clip. Synthetic generation lives in
//! [`synthetic`] so the full pipeline is exercisable without licensed model
//! data.

pub mod clip;
pub mod container;
pub mod synthetic;

pub use clip::{load_clip_bundle, save_clip_bundle, ClipBundle, ClipError, FrameParams};
pub use container::{ContainerError, Dtype, TensorContainer, TensorData, TensorEntry};

use nalgebra::{DMatrix, Vector3};
use thiserror::Error;

use crate::face_model::inner_mouth::{half_sphere, CavityMesh};

/// Joint slots of the canonical rig layout. Extra joints beyond these chain
/// off the root and carry no pose parameters.
pub const JOINT_ROOT: usize = 0;
pub const JOINT_NECK: usize = 1;
pub const JOINT_JAW: usize = 2;
pub const JOINT_EYE_LEFT: usize = 3;
pub const JOINT_EYE_RIGHT: usize = 4;

/// Row-sum tolerance for blend-weight validation.
pub const WEIGHT_ROW_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AssetsError {
    #[error("{what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("blend-weight row {row} sums to {sum}, expected 1 within {tol}")]
    WeightRow { row: usize, sum: f64, tol: f64 },
    #[error("blend-weight row {row} has a negative entry")]
    NegativeWeight { row: usize },
    #[error("joint_parents does not form a rooted tree: {0}")]
    BadJointTree(String),
    #[error("face {face} references vertex {vertex}, mesh has {n_vertices}")]
    FaceIndex {
        face: usize,
        vertex: u32,
        n_vertices: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("lip anchor index {index} out of range ({n_vertices} vertices)")]
    LipAnchor { index: usize, n_vertices: usize },
    #[error("inner mouth requires a jaw joint (at least 3 joints), rig has {0}")]
    NoJawJoint(usize),
    #[error("degenerate size: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Container(#[from] ContainerError),
}

/// Template mesh, blendshape bases, skinning data, and topology.
///
/// Bases are stored as `(3·N_v) × n` matrices whose column `j` is the
/// flattened per-vertex offset field of coefficient `j` (vertex-major,
/// xyz within a vertex). Blend weights are `N_v × K` and row-stochastic;
/// the joint regressor is `K × N_v`.
#[derive(Debug, Clone)]
pub struct FaceModelAssets {
    pub template_vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[u32; 3]>,
    pub shape_basis: DMatrix<f64>,
    pub expr_basis: DMatrix<f64>,
    pub pose_corrective_basis: DMatrix<f64>,
    pub blend_weights: DMatrix<f64>,
    pub joint_regressor: DMatrix<f64>,
    /// Parent of each joint; the root holds `-1`. Parents must precede
    /// children (`parents[k] < k`).
    pub joint_parents: Vec<i32>,
    pub head_vertex_mask: Vec<bool>,
    pub inner_mouth_count: usize,
    pub lip_anchor_index: usize,
    /// Normalisation scale for the deformation channels: the standard
    /// deviation of expression-offset components over the asset's corpus.
    pub deformation_sigma: f64,

    // Derived once at construction; never serialised.
    rest_joints: Vec<Vector3<f64>>,
    cavity: CavityMesh,
}

impl FaceModelAssets {
    /// Validates invariants and precomputes the rest joints and the
    /// procedural inner-mouth cavity.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        template_vertices: Vec<Vector3<f64>>,
        faces: Vec<[u32; 3]>,
        shape_basis: DMatrix<f64>,
        expr_basis: DMatrix<f64>,
        pose_corrective_basis: DMatrix<f64>,
        blend_weights: DMatrix<f64>,
        joint_regressor: DMatrix<f64>,
        joint_parents: Vec<i32>,
        head_vertex_mask: Vec<bool>,
        inner_mouth_count: usize,
        lip_anchor_index: usize,
        deformation_sigma: f64,
    ) -> Result<Self, AssetsError> {
        let n_v = template_vertices.len();
        let k = joint_parents.len();

        check_dim("shape_basis rows", shape_basis.nrows(), 3 * n_v)?;
        check_dim("expr_basis rows", expr_basis.nrows(), 3 * n_v)?;
        check_dim(
            "pose_corrective_basis rows",
            pose_corrective_basis.nrows(),
            3 * n_v,
        )?;
        check_dim(
            "pose_corrective_basis columns",
            pose_corrective_basis.ncols(),
            9 * k.saturating_sub(1),
        )?;
        check_dim("blend_weights rows", blend_weights.nrows(), n_v)?;
        check_dim("blend_weights columns", blend_weights.ncols(), k)?;
        check_dim("joint_regressor rows", joint_regressor.nrows(), k)?;
        check_dim("joint_regressor columns", joint_regressor.ncols(), n_v)?;
        check_dim("head_vertex_mask length", head_vertex_mask.len(), n_v)?;

        for (i, f) in faces.iter().enumerate() {
            for &v in f {
                if v as usize >= n_v {
                    return Err(AssetsError::FaceIndex {
                        face: i,
                        vertex: v,
                        n_vertices: n_v,
                    });
                }
            }
        }

        validate_joint_tree(&joint_parents)?;
        validate_blend_weights(&blend_weights)?;

        for (name, m) in [
            ("shape_basis", &shape_basis),
            ("expr_basis", &expr_basis),
            ("pose_corrective_basis", &pose_corrective_basis),
            ("joint_regressor", &joint_regressor),
        ] {
            if m.iter().any(|x| !x.is_finite()) {
                return Err(AssetsError::NonFinite(name));
            }
        }
        if template_vertices
            .iter()
            .any(|v| !v.iter().all(|x| x.is_finite()))
        {
            return Err(AssetsError::NonFinite("template_vertices"));
        }
        if !deformation_sigma.is_finite() || deformation_sigma <= 0.0 {
            return Err(AssetsError::Degenerate(format!(
                "deformation_sigma must be finite and positive, got {deformation_sigma}"
            )));
        }

        if lip_anchor_index >= n_v {
            return Err(AssetsError::LipAnchor {
                index: lip_anchor_index,
                n_vertices: n_v,
            });
        }
        if inner_mouth_count > 0 && k <= JOINT_JAW {
            return Err(AssetsError::NoJawJoint(k));
        }

        let rest_joints = regress_joints_raw(&joint_regressor, &template_vertices);
        let cavity = if inner_mouth_count > 0 {
            half_sphere(
                &rest_joints[JOINT_JAW],
                &template_vertices[lip_anchor_index],
                inner_mouth_count,
            )
        } else {
            CavityMesh::empty()
        };

        Ok(Self {
            template_vertices,
            faces,
            shape_basis,
            expr_basis,
            pose_corrective_basis,
            blend_weights,
            joint_regressor,
            joint_parents,
            head_vertex_mask,
            inner_mouth_count,
            lip_anchor_index,
            deformation_sigma,
            rest_joints,
            cavity,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.template_vertices.len()
    }

    /// Base vertices plus inner-mouth cavity vertices.
    pub fn n_total_vertices(&self) -> usize {
        self.template_vertices.len() + self.inner_mouth_count
    }

    pub fn n_joints(&self) -> usize {
        self.joint_parents.len()
    }

    pub fn n_shape_coeffs(&self) -> usize {
        self.shape_basis.ncols()
    }

    pub fn n_expr_coeffs(&self) -> usize {
        self.expr_basis.ncols()
    }

    pub fn n_pose_features(&self) -> usize {
        self.pose_corrective_basis.ncols()
    }

    /// Joints of the raw template (`β = 0`).
    pub fn rest_joints(&self) -> &[Vector3<f64>] {
        &self.rest_joints
    }

    pub fn cavity(&self) -> &CavityMesh {
        &self.cavity
    }

    /// Template coordinates of all `N_total` vertices: base mesh followed by
    /// the inner-mouth cavity at its rest position.
    pub fn extended_template_vertices(&self) -> Vec<Vector3<f64>> {
        let mut out = self.template_vertices.clone();
        out.extend(self.cavity.template_positions.iter().copied());
        out
    }

    /// Faces used for conditioning-map rasterisation: base faces whose three
    /// vertices all pass the head mask, plus the cavity faces (offset to the
    /// extended index space).
    pub fn masked_extended_faces(&self) -> Vec<[u32; 3]> {
        let mut out: Vec<[u32; 3]> = self
            .faces
            .iter()
            .filter(|f| f.iter().all(|&v| self.head_vertex_mask[v as usize]))
            .copied()
            .collect();
        let base = self.n_vertices() as u32;
        out.extend(
            self.cavity
                .faces
                .iter()
                .map(|f| [f[0] + base, f[1] + base, f[2] + base]),
        );
        out
    }

    pub fn to_container(&self) -> TensorContainer {
        let mut c = TensorContainer::new();
        let n_v = self.n_vertices();
        let k = self.n_joints();

        let mut verts = Vec::with_capacity(3 * n_v);
        for v in &self.template_vertices {
            verts.extend_from_slice(&[v.x, v.y, v.z]);
        }
        c.push("template_vertices", vec![n_v, 3], TensorData::F64(verts))
            .unwrap();

        let mut face_idx = Vec::with_capacity(3 * self.faces.len());
        for f in &self.faces {
            face_idx.extend(f.iter().map(|&v| v as i32));
        }
        c.push(
            "faces",
            vec![self.faces.len(), 3],
            TensorData::I32(face_idx),
        )
        .unwrap();

        for (name, m) in [
            ("shape_basis", &self.shape_basis),
            ("expr_basis", &self.expr_basis),
            ("pose_corrective_basis", &self.pose_corrective_basis),
        ] {
            c.push(
                name,
                vec![n_v, 3, m.ncols()],
                TensorData::F64(flatten_row_major(m)),
            )
            .unwrap();
        }

        c.push(
            "blend_weights",
            vec![n_v, k],
            TensorData::F64(flatten_row_major(&self.blend_weights)),
        )
        .unwrap();
        c.push(
            "joint_regressor",
            vec![k, n_v],
            TensorData::F64(flatten_row_major(&self.joint_regressor)),
        )
        .unwrap();
        c.push(
            "joint_parents",
            vec![k],
            TensorData::I32(self.joint_parents.clone()),
        )
        .unwrap();
        c.push(
            "head_vertex_mask",
            vec![n_v],
            TensorData::I32(self.head_vertex_mask.iter().map(|&b| b as i32).collect()),
        )
        .unwrap();
        c.push(
            "inner_mouth_count",
            vec![],
            TensorData::I32(vec![self.inner_mouth_count as i32]),
        )
        .unwrap();
        c.push(
            "lip_anchor_index",
            vec![],
            TensorData::I32(vec![self.lip_anchor_index as i32]),
        )
        .unwrap();
        c.push(
            "deformation_sigma",
            vec![],
            TensorData::F64(vec![self.deformation_sigma]),
        )
        .unwrap();
        c
    }

    pub fn from_container(c: &TensorContainer) -> Result<Self, AssetsError> {
        let (vshape, vdata) = c.f64s("template_vertices")?;
        let n_v = vshape.first().copied().unwrap_or(0);
        let template_vertices: Vec<Vector3<f64>> = vdata
            .chunks_exact(3)
            .map(|ch| Vector3::new(ch[0], ch[1], ch[2]))
            .collect();
        check_dim("template_vertices", template_vertices.len(), n_v)?;

        let (fshape, fdata) = c.i32s("faces")?;
        let n_f = fshape.first().copied().unwrap_or(0);
        let faces: Vec<[u32; 3]> = fdata
            .chunks_exact(3)
            .map(|ch| [ch[0] as u32, ch[1] as u32, ch[2] as u32])
            .collect();
        check_dim("faces", faces.len(), n_f)?;

        let read_basis = |name: &str| -> Result<DMatrix<f64>, AssetsError> {
            let (shape, data) = c.f64s(name)?;
            let cols = shape.get(2).copied().unwrap_or(0);
            Ok(from_row_major(3 * n_v, cols, data))
        };
        let shape_basis = read_basis("shape_basis")?;
        let expr_basis = read_basis("expr_basis")?;
        let pose_corrective_basis = read_basis("pose_corrective_basis")?;

        let (wshape, wdata) = c.f64s("blend_weights")?;
        let k = wshape.get(1).copied().unwrap_or(0);
        let blend_weights = from_row_major(n_v, k, wdata);

        let (_, rdata) = c.f64s("joint_regressor")?;
        let joint_regressor = from_row_major(k, n_v, rdata);

        let (_, parents) = c.i32s("joint_parents")?;
        let (_, mask) = c.i32s("head_vertex_mask")?;

        Self::new(
            template_vertices,
            faces,
            shape_basis,
            expr_basis,
            pose_corrective_basis,
            blend_weights,
            joint_regressor,
            parents.to_vec(),
            mask.iter().map(|&x| x != 0).collect(),
            c.scalar_i32("inner_mouth_count")? as usize,
            c.scalar_i32("lip_anchor_index")? as usize,
            c.scalar_f64("deformation_sigma")?,
        )
    }

    pub fn write_file(&self, path: impl AsRef<std::path::Path>) -> Result<(), AssetsError> {
        self.to_container().write_file(path)?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<std::path::Path>) -> Result<Self, AssetsError> {
        Self::from_container(&TensorContainer::read_file(path)?)
    }
}

fn check_dim(what: &'static str, found: usize, expected: usize) -> Result<(), AssetsError> {
    if found != expected {
        return Err(AssetsError::Dimension {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

fn validate_joint_tree(parents: &[i32]) -> Result<(), AssetsError> {
    if parents.is_empty() {
        return Err(AssetsError::BadJointTree("no joints".into()));
    }
    if parents[0] != -1 {
        return Err(AssetsError::BadJointTree(format!(
            "joint 0 must be the root (parent -1), got {}",
            parents[0]
        )));
    }
    for (k, &p) in parents.iter().enumerate().skip(1) {
        if p < 0 || p as usize >= k {
            return Err(AssetsError::BadJointTree(format!(
                "joint {k} has parent {p}; parents must precede children"
            )));
        }
    }
    Ok(())
}

fn validate_blend_weights(w: &DMatrix<f64>) -> Result<(), AssetsError> {
    for row in 0..w.nrows() {
        let mut sum = 0.0;
        for col in 0..w.ncols() {
            let x = w[(row, col)];
            if x < 0.0 {
                return Err(AssetsError::NegativeWeight { row });
            }
            sum += x;
        }
        if (sum - 1.0).abs() > WEIGHT_ROW_TOL {
            return Err(AssetsError::WeightRow {
                row,
                sum,
                tol: WEIGHT_ROW_TOL,
            });
        }
    }
    Ok(())
}

/// `joint_regressor · vertices` as plain matrix multiplication.
pub(crate) fn regress_joints_raw(
    regressor: &DMatrix<f64>,
    vertices: &[Vector3<f64>],
) -> Vec<Vector3<f64>> {
    (0..regressor.nrows())
        .map(|k| {
            let mut j = Vector3::zeros();
            for (v, vert) in vertices.iter().enumerate() {
                j += regressor[(k, v)] * vert;
            }
            j
        })
        .collect()
}

fn flatten_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
    out
}

fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}
