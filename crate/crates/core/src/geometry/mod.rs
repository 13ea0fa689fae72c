//! Projective-geometry primitives: homogeneous image points, isotropic point
//! conditioning, exact four-point homographies, fundamental-matrix estimation
//! and 3x3 eigenvalue extraction.

mod conditioning;
mod eigen;
mod fundamental;
mod homography;
mod point;

pub use conditioning::{collinearity_px, is_collinear, normalize_points};
pub use eigen::{eigenvalues_3x3, EigenTriple};
pub use fundamental::{
    epipoles_from_fundamental, estimate_fundamental, estimate_fundamental_ransac,
    sampson_distance_px, FundamentalMatrix, RansacConfig, DEFAULT_DEGENERACY_TOL,
};
pub use homography::{homography_from_4, Homography3x3};
pub use point::HomogeneousPoint2;

use thiserror::Error;

/// Errors raised by the low-level geometric kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    /// A homogeneous point was constructed from the zero vector or from
    /// non-finite components.
    #[error("homogeneous point must be a finite non-zero 3-vector")]
    InvalidPoint,
    /// A point at infinity (w ~ 0) reached an operation that needs finite
    /// pixel coordinates.
    #[error("point at infinity cannot be scaled to pixel coordinates")]
    PointAtInfinity,
    /// The input point set carries no usable spread (too few points, or all
    /// points coincide), so no conditioning transform exists.
    #[error("degenerate input: point set has no measurable spread")]
    DegenerateInput,
    /// Three of the four points handed to an exact homography solve are
    /// collinear within the configured pixel threshold.
    #[error("collinear point triplet (within {threshold_px} px)")]
    CollinearPoints { threshold_px: f64 },
    /// A linear system that must have a one-dimensional null space lost rank,
    /// or a matrix that must be invertible is singular.
    #[error("singular system: no unique solution")]
    SingularSystem,
    /// Fewer correspondences than the estimator's minimal-sample size.
    #[error("need at least {needed} correspondences, got {got}")]
    InsufficientCorrespondences { needed: usize, got: usize },
    /// The correspondence set does not determine an epipolar geometry
    /// (typically: all points lie on one 3D plane, or both views coincide).
    #[error("degenerate configuration: correspondences do not fix an epipolar geometry")]
    DegenerateConfiguration,
    /// A matrix expected to have rank exactly two does not.
    #[error("rank-two structure violated")]
    RankError,
    /// Robust estimation exhausted its iteration budget without a model that
    /// reaches the minimum inlier count.
    #[error("consensus search failed: best model explains {best_inliers} of {total} pairs")]
    ConsensusFailed { best_inliers: usize, total: usize },
}
