//! Synthetic two-view benchmark: pinhole cameras, procedural 3D point clouds
//! and the hemisphere pose sweep that traces score-vs-viewpoint surfaces.

mod camera;
mod cloud;
mod sweep;

pub use camera::{fundamental_from_cameras, ground_truth_epipoles, project, CameraModel};
pub use cloud::{generate_cloud, CloudKind, PointCloud3};
pub use sweep::{
    hemisphere_sweep, AngleGrid, ErrorSurface, PoseStatus, SurfaceCell, SweepConfig,
};

use crate::geometry::GeometryError;
use crate::matching::MatchError;
use thiserror::Error;

/// Errors raised while generating or sweeping synthetic scenes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("focal length must be positive and finite")]
    InvalidFocal,
    #[error("rotation must be orthonormal with determinant +1")]
    InvalidRotation,
    #[error("degenerate pose: {0}")]
    DegeneratePose(String),
    #[error("3D point {index} lies on or behind the camera plane")]
    BehindCamera { index: usize },
    #[error("camera centres coincide; epipolar geometry is undefined")]
    CoincidentCenters,
    #[error("invalid cloud: {0}")]
    InvalidCloud(String),
    #[error("invalid sweep configuration: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Match(#[from] MatchError),
}
