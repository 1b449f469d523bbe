//! Parametric face conditioning and evaluation toolkit.
//!
//! The crate covers the full desk-scale pipeline for driving image
//! generation from a blendshape face model:
//!
//! * [`assets`] — binary tensor container (`.lka`), clip parameter bundles
//!   (JSON), and seeded synthetic face-model assets.
//! * [`face_model`] — the parametric forward map: blendshape offsets, joint
//!   regression, linear blend skinning, and the procedural inner-mouth
//!   extension.
//! * [`camera`] / [`raster`] — pinhole projection (OpenCV convention) and a
//!   deterministic software triangle rasteriser with perspective-correct
//!   barycentrics.
//! * [`driver_map`] — the 45-channel conditioning map (42 sinusoidal
//!   positional-encoding channels + 3 expression-deformation channels) and
//!   the cross-identity parametric substitution.
//! * [`metrics`] — head-pose-follow (HPF) and expression-follow (HEF)
//!   metrics plus the HEF calibration harness.
//! * [`diffusion`] — noise-schedule and DDIM sampling math with
//!   zero-terminal-SNR correction and temporal shift.
//! * [`cli`] — the command surface used by the `loki` binary.
//!
//! Everything is a pure function of its inputs; all randomness is funneled
//! through explicit seeds.

pub mod assets;
pub mod camera;
pub mod cli;
pub mod diffusion;
pub mod driver_map;
pub mod face_model;
pub mod metrics;
pub mod raster;
pub mod viz;

pub use assets::{ClipBundle, FaceModelAssets, FrameParams, TensorContainer};
pub use camera::Camera;
pub use driver_map::{DriverMap, EncodedTemplate, MapMode};
pub use face_model::{PoseParams, PosedMesh, Rotation};
pub use raster::RasterBuffer;
