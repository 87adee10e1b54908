//! Estimation of the dominant perspective scale gradient of a static-camera
//! scene from sparse optical-flow motion vectors.
//!
//! The scale gradient `zeta` is the relative change of scene depth per pixel
//! of downward image displacement, `zeta = -(dz/dv) / z`, in units of 1/px.
//! Two estimators are provided:
//!
//! * [`dense`]: a per-cell estimate from the vertical gradient of the
//!   time-averaged vertical velocity field, polled by a trimmed mean.
//! * [`coarse`]: a block grid whose mean motion magnitudes are related by
//!   transition-weighted mixture constraints with one unknown inter-row
//!   scale factor `omega`.
//!
//! [`scene`] contains a pinhole ground-plane simulator with an analytic
//! `zeta`, used as the reference for both estimators.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coarse;
pub mod dense;
mod error;
pub mod experiment;
pub mod flow;
pub mod format;
pub mod normalize;
pub mod scene;
pub mod stats;

pub use coarse::{
    estimate_coarse, BlockStats, CoarseConfig, CoarseEstimate, OmegaEstimate, RhoDenominator,
    SolverKind,
};
pub use dense::{estimate_dense, DenseAccumulator, DenseConfig, DenseEstimate, LocalZetaField};
pub use error::{Error, Result};
pub use flow::{parse_flow_stream, write_flow_stream, FlowSequence, Frame, GridSpec, MotionVector};
pub use scene::{oracle_zeta, simulate, CameraModel, SceneScript, SceneSurface, WorldObject};
pub use stats::TrimSpec;
