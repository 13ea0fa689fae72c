//! View-invariant matching of keypoint correspondence sets.
//!
//! Given 2D keypoint correspondences between a query image and one or more
//! reference (template) images of rigid objects, this crate scores how
//! consistent each correspondence set is with *some* rigid 3D configuration
//! seen from two arbitrary projective views — without reconstructing that
//! configuration. The test is purely projective, so it is invariant to the
//! (unknown) camera poses and intrinsics of both views.
//!
//! The mechanism: any three correspondences plus the epipole pair determine
//! the exact homography of the 3D plane through those three points. A
//! quadruple of correspondences yields two such plane maps `H1`, `H2`, and
//! the composite `H1 * H2^-1` must be a planar homology — a map with two
//! equal eigenvalues — exactly when the four points ride one rigid structure.
//! The relative gap between the two closest eigenvalues is the per-quadruple
//! score; the mean over (a cap-limited sample of) all quadruples is the pair
//! score, and template matching is the argmin over templates.
//!
//! Modules:
//! - [`geometry`]: homogeneous points, conditioning, exact homographies,
//!   fundamental-matrix estimation, 3x3 eigenvalues.
//! - [`homology`]: the per-quadruple eigenvalue-gap score.
//! - [`matching`]: correspondence sets, pair scoring, template libraries.
//! - [`synth`]: pinhole cameras, procedural clouds and the hemisphere
//!   benchmark sweep.
//! - [`fileio`]: the plain-text correspondence exchange format.
//! - [`config`]: tool-level run configuration.

pub mod config;
pub mod fileio;
pub mod geometry;
pub mod homology;
pub mod matching;
pub mod synth;

pub use config::{ClassFusion, EpipoleMode, RunConfig};
pub use fileio::CorrespondenceFile;
pub use geometry::{GeometryError, HomogeneousPoint2, Homography3x3};
pub use matching::{
    match_templates, score_pair, CorrespondenceSet, MatchConfig, MatchError, MatchResult,
    PairScore, TemplateEntry, TemplateLibrary,
};
pub use synth::{
    generate_cloud, hemisphere_sweep, CameraModel, CloudKind, ErrorSurface, PointCloud3,
    SweepConfig, SynthError,
};
