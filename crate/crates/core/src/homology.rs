//! Plane-pair homology scoring.
//!
//! Four correspondences plus the two epipoles induce two plane homographies
//! per plane pairing: each group of three keypoints, together with the
//! epipole pair, determines the exact map of its supporting 3D plane between
//! the views. When all four points come from one rigid 3D configuration seen
//! by the two cameras, the combined map `H1 * H2^-1` fixes the image of the
//! planes' common edge pointwise and fixes the query epipole, so it is a
//! planar homology and must have two equal eigenvalues. The relative gap of
//! the closest eigenvalue pair is therefore a view-invariant inconsistency
//! score: near zero for true matches, and pushed away from zero by any
//! rigidity violation.

use crate::geometry::{
    eigenvalues_3x3, homography_from_4, GeometryError, HomogeneousPoint2, Homography3x3,
};
use crate::matching::CorrespondenceSet;

/// Relative floor on `|a + b|` in the eigenvalue-gap ratio; below it the
/// denominator is considered to have cancelled and the score saturates.
const SUM_FLOOR_REL: f64 = 1e-12;

/// The two ways of splitting a quadruple into two keypoint triplets that
/// share an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanePairing {
    /// Planes `{1,2,3}` and `{1,2,4}` (shared edge `1-2`).
    First,
    /// Planes `{1,3,4}` and `{2,3,4}` (shared edge `3-4`).
    Second,
}

impl PlanePairing {
    /// Slot positions (within the canonically ordered quadruple) of the two
    /// triplets.
    pub fn plane_slots(&self) -> ([usize; 3], [usize; 3]) {
        match self {
            PlanePairing::First => ([0, 1, 2], [0, 1, 3]),
            PlanePairing::Second => ([0, 2, 3], [1, 2, 3]),
        }
    }
}

/// Four correspondence indices (strictly increasing) plus the pairing used to
/// split them into plane triplets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadrupleIndex {
    indices: [usize; 4],
    pairing: PlanePairing,
}

impl QuadrupleIndex {
    pub fn new(indices: [usize; 4], pairing: PlanePairing) -> Self {
        assert!(
            indices.windows(2).all(|w| w[0] < w[1]),
            "quadruple indices must be strictly increasing, got {indices:?}"
        );
        Self { indices, pairing }
    }

    pub fn indices(&self) -> [usize; 4] {
        self.indices
    }

    pub fn pairing(&self) -> PlanePairing {
        self.pairing
    }
}

/// Outcome of scoring one quadruple under one pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreOutcome {
    /// Both homographies solved; the eigenvalue-gap ratio in `[0, clamp]`.
    Scored(f64),
    /// A keypoint/epipole triplet was collinear within the pixel threshold.
    SkippedCollinear,
    /// A homography solve or inversion lost rank for another reason.
    SkippedSingular,
}

/// Score record for one `(quadruple, pairing)` evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrupleScore {
    pub quadruple: QuadrupleIndex,
    pub outcome: ScoreOutcome,
}

impl QuadrupleScore {
    pub fn value(&self) -> Option<f64> {
        match self.outcome {
            ScoreOutcome::Scored(v) => Some(v),
            _ => None,
        }
    }
}

/// Orders the four correspondence indices by reference-image position
/// (x, then y; query position breaks exact ties). Downstream plane splits are
/// defined on this geometric order, which makes every score independent of
/// how the input correspondences happened to be numbered.
fn canonical_slots(
    quad: &[usize; 4],
    set: &CorrespondenceSet,
) -> Result<[usize; 4], GeometryError> {
    // Correspondence index keyed by its reference and query pixel positions.
    type Keyed = (usize, (f64, f64), (f64, f64));
    let mut keyed: Vec<Keyed> = Vec::with_capacity(4);
    for &i in quad {
        keyed.push((
            i,
            set.reference_point(i).to_pixel()?,
            set.query_point(i).to_pixel()?,
        ));
    }
    keyed.sort_by(|a, b| {
        a.1 .0
            .total_cmp(&b.1 .0)
            .then(a.1 .1.total_cmp(&b.1 .1))
            .then(a.2 .0.total_cmp(&b.2 .0))
            .then(a.2 .1.total_cmp(&b.2 .1))
    });
    Ok([keyed[0].0, keyed[1].0, keyed[2].0, keyed[3].0])
}

/// Builds the combined plane-pair map `H1 * H2^-1` for one quadruple and
/// pairing. Each `H` is the exact four-point homography taking a reference
/// triplet plus `e1` to the matching query triplet plus `e2`. The result is
/// scale-canonical (unit Frobenius norm, positive determinant).
pub fn homology_matrix(
    quad: &QuadrupleIndex,
    set: &CorrespondenceSet,
    e1: &HomogeneousPoint2,
    e2: &HomogeneousPoint2,
    collinear_px: f64,
) -> Result<Homography3x3, GeometryError> {
    let indices = quad.indices();
    for &i in &indices {
        assert!(
            i < set.len(),
            "correspondence index {i} out of bounds for set of {}",
            set.len()
        );
    }
    let slots = canonical_slots(&indices, set)?;
    let (pa, pb) = quad.pairing().plane_slots();

    let solve = |plane: [usize; 3]| -> Result<Homography3x3, GeometryError> {
        let src = [
            *set.reference_point(slots[plane[0]]),
            *set.reference_point(slots[plane[1]]),
            *set.reference_point(slots[plane[2]]),
            *e1,
        ];
        let dst = [
            *set.query_point(slots[plane[0]]),
            *set.query_point(slots[plane[1]]),
            *set.query_point(slots[plane[2]]),
            *e2,
        ];
        homography_from_4(&src, &dst, collinear_px)
    };

    let h1 = solve(pa)?;
    let h2 = solve(pb)?;
    Ok(h1.compose(&h2.inverse()?)?.normalized())
}

/// Relative gap of the closest eigenvalue pair of a 3x3 map, clamped to
/// `[0, 1]`: `|a - b| / |a + b|` over the two closest of the three
/// eigenvalues. Zero exactly when the map is a planar homology (or any map
/// with a repeated eigenvalue); saturates at the clamp when the denominator
/// cancels.
pub fn homology_error(h: &Homography3x3) -> f64 {
    homology_error_clamped(h, 1.0)
}

/// [`homology_error`] with a configurable clamp in `(0, 1]`.
pub fn homology_error_clamped(h: &Homography3x3, clamp: f64) -> f64 {
    let eig = eigenvalues_3x3(h.matrix());
    let (a, b) = eig.closest_pair();
    let num = (a - b).norm();
    let den = (a + b).norm();
    let max_mod = eig
        .values()
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    if max_mod == 0.0 || den < SUM_FLOOR_REL * max_mod {
        return clamp;
    }
    (num / den).min(clamp)
}

/// Scores one base quadruple under both plane pairings.
pub fn score_quadruple(
    base: [usize; 4],
    set: &CorrespondenceSet,
    e1: &HomogeneousPoint2,
    e2: &HomogeneousPoint2,
    collinear_px: f64,
    clamp: f64,
) -> (QuadrupleScore, QuadrupleScore) {
    let score_one = |pairing: PlanePairing| {
        let quad = QuadrupleIndex::new(base, pairing);
        let outcome = match homology_matrix(&quad, set, e1, e2, collinear_px) {
            Ok(h) => ScoreOutcome::Scored(homology_error_clamped(&h, clamp)),
            Err(GeometryError::CollinearPoints { .. }) => ScoreOutcome::SkippedCollinear,
            Err(_) => ScoreOutcome::SkippedSingular,
        };
        QuadrupleScore {
            quadruple: quad,
            outcome,
        }
    };
    (
        score_one(PlanePairing::First),
        score_one(PlanePairing::Second),
    )
}
