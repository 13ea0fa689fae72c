//! Correspondence-set scoring and template matching.
//!
//! A correspondence set pairs keypoints of one query image with keypoints of
//! one reference (template) image. [`score_pair`] aggregates per-quadruple
//! homology errors into a single rigidity-consistency score; lower is more
//! consistent. [`match_templates`] scores a query against every template in a
//! library and returns the argmin.

mod quadruples;

pub use quadruples::enumerate_quadruples;

use thiserror::Error;

use crate::geometry::{
    epipoles_from_fundamental, estimate_fundamental, estimate_fundamental_ransac,
    homography_from_4, GeometryError, HomogeneousPoint2, Homography3x3, RansacConfig,
};
use crate::homology::{score_quadruple, QuadrupleScore};

/// Two points closer than this (in pixels) on the same side of a
/// correspondence set are considered duplicates of one keypoint.
const DUPLICATE_EPS_PX: f64 = 1e-6;

/// Errors raised while building correspondence structures or scoring them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("need at least {needed} correspondences, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("duplicate {side} point: pairs {first} and {second} coincide within 1e-6 px")]
    DuplicatePoint {
        side: &'static str,
        first: usize,
        second: usize,
    },
    #[error("template id `{0}` appears more than once")]
    DuplicateTemplateId(String),
    #[error("template id must be non-empty")]
    EmptyTemplateId,
    #[error("every enumerated quadruple was degenerate; no score can be formed")]
    AllQuadruplesDegenerate,
    #[error("no template produced a usable score")]
    NoScorableTemplates,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One correspondence as bare pixels: `((x_ref, y_ref), (x_query, y_query))`.
pub type PixelPair = ((f64, f64), (f64, f64));

/// A set of keypoint correspondences between one reference (template) image
/// and one query image, with optional image dimensions. Coordinates are
/// finite pixels; within each side, points are pairwise distinct (1e-6 px).
#[derive(Debug, Clone)]
pub struct CorrespondenceSet {
    reference_id: String,
    query_id: String,
    reference: Vec<HomogeneousPoint2>,
    query: Vec<HomogeneousPoint2>,
    dims: Option<(u32, u32)>,
}

impl CorrespondenceSet {
    pub fn new(
        reference_id: impl Into<String>,
        query_id: impl Into<String>,
        pixel_pairs: &[PixelPair],
        dims: Option<(u32, u32)>,
    ) -> Result<Self, MatchError> {
        let mut reference = Vec::with_capacity(pixel_pairs.len());
        let mut query = Vec::with_capacity(pixel_pairs.len());
        for &((xr, yr), (xq, yq)) in pixel_pairs {
            reference.push(
                HomogeneousPoint2::from_pixel(xr, yr).map_err(MatchError::Geometry)?,
            );
            query.push(HomogeneousPoint2::from_pixel(xq, yq).map_err(MatchError::Geometry)?);
        }
        for (side, pts) in [("reference", &reference), ("query", &query)] {
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    if pts[i].pixel_distance(&pts[j]).unwrap_or(f64::INFINITY) < DUPLICATE_EPS_PX
                    {
                        return Err(MatchError::DuplicatePoint {
                            side,
                            first: i,
                            second: j,
                        });
                    }
                }
            }
        }
        Ok(Self {
            reference_id: reference_id.into(),
            query_id: query_id.into(),
            reference,
            query,
            dims,
        })
    }

    pub fn reference_id(&self) -> &str {
        &self.reference_id
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn dims(&self) -> Option<(u32, u32)> {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    pub fn reference_point(&self, i: usize) -> &HomogeneousPoint2 {
        &self.reference[i]
    }

    pub fn query_point(&self, i: usize) -> &HomogeneousPoint2 {
        &self.query[i]
    }

    pub fn pairs(&self) -> Vec<(HomogeneousPoint2, HomogeneousPoint2)> {
        self.reference
            .iter()
            .copied()
            .zip(self.query.iter().copied())
            .collect()
    }
}

/// Scoring parameters shared by [`score_pair`] and [`match_templates`].
#[derive(Debug, Clone, Copy)]
pub struct MatchConfig {
    /// Maximum number of quadruples evaluated per pair; beyond it a uniform
    /// seeded subset is used.
    pub quadruple_cap: usize,
    /// Seed for quadruple subsampling and all other stochastic choices.
    pub seed: u64,
    /// Collinearity threshold (px) below which a triplet is degenerate.
    pub collinear_px: f64,
    /// Sampson-distance outlier threshold (px) applied before scoring when
    /// epipoles are estimated from the correspondences; `None` disables the
    /// pre-filter.
    pub sampson_px: Option<f64>,
    /// Upper clamp for per-quadruple scores, in `(0, 1]`.
    pub score_clamp: f64,
    /// Relative singular-value floor for declaring the epipolar estimation
    /// degenerate.
    pub degeneracy_tol: f64,
    /// Mean symmetric-transfer error (px) of a single global homography below
    /// which the pair is flagged as coplanar (score uninformative).
    pub planar_px: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            quadruple_cap: 2000,
            seed: 0,
            collinear_px: 1.0,
            sampson_px: Some(3.0),
            score_clamp: 1.0,
            degeneracy_tol: crate::geometry::DEFAULT_DEGENERACY_TOL,
            planar_px: 1.0,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        if self.quadruple_cap == 0 {
            return Err(MatchError::InvalidConfig("quadruple cap must be >= 1".into()));
        }
        if !(self.collinear_px.is_finite() && self.collinear_px >= 0.0) {
            return Err(MatchError::InvalidConfig(
                "collinearity threshold must be non-negative".into(),
            ));
        }
        if let Some(s) = self.sampson_px {
            if !(s.is_finite() && s > 0.0) {
                return Err(MatchError::InvalidConfig(
                    "Sampson threshold must be positive".into(),
                ));
            }
        }
        if !(self.score_clamp.is_finite() && self.score_clamp > 0.0 && self.score_clamp <= 1.0) {
            return Err(MatchError::InvalidConfig(
                "score clamp must lie in (0, 1]".into(),
            ));
        }
        if !(self.degeneracy_tol.is_finite() && self.degeneracy_tol > 0.0) {
            return Err(MatchError::InvalidConfig(
                "degeneracy tolerance must be positive".into(),
            ));
        }
        if !(self.planar_px.is_finite() && self.planar_px > 0.0) {
            return Err(MatchError::InvalidConfig(
                "planar threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// How the epipole pair used for scoring was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpipoleReport {
    /// Supplied by the caller (file metadata or exact synthetic geometry).
    Provided {
        e1: HomogeneousPoint2,
        e2: HomogeneousPoint2,
    },
    /// Estimated from the correspondences themselves.
    Estimated {
        e1: HomogeneousPoint2,
        e2: HomogeneousPoint2,
        /// Pairs dropped by the Sampson pre-filter before scoring.
        dropped_outliers: usize,
    },
    /// No epipolar geometry exists; only the planar fallback was evaluated.
    Unavailable,
}

/// Result of fitting one global homography to the whole correspondence set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarFit {
    /// Mean symmetric transfer error over all pairs, in pixels.
    pub mean_transfer_px: f64,
    /// The quadruple (original indices) whose homography was used.
    pub quadruple: [usize; 4],
}

/// Full outcome of scoring one correspondence set.
#[derive(Debug, Clone)]
pub struct PairScore {
    /// Mean of all successfully scored quadruple evaluations; `None` when the
    /// epipolar geometry is degenerate and only the planar fallback applies.
    pub aggregate: Option<f64>,
    /// Per-(quadruple, pairing) breakdown, two entries per enumerated
    /// quadruple.
    pub quadruples: Vec<QuadrupleScore>,
    pub evaluated: usize,
    pub skipped: usize,
    /// Set when the pair is consistent with a single global homography, which
    /// makes the homology score uninformative.
    pub coplanar_warning: bool,
    pub planar_fit: Option<PlanarFit>,
    pub epipoles: EpipoleReport,
}

/// Scores one correspondence set for rigidity consistency.
///
/// With `epipoles` given, they are used directly. Otherwise the epipolar
/// geometry is estimated from the correspondences (needs at least eight); an
/// optional Sampson pre-filter then drops gross outliers and refits. When
/// estimation reports a degenerate (single-plane) configuration the function
/// falls back to a pure homography fit: the returned score has
/// `aggregate = None`, the planar transfer error filled in and the coplanar
/// warning set.
pub fn score_pair(
    set: &CorrespondenceSet,
    epipoles: Option<(HomogeneousPoint2, HomogeneousPoint2)>,
    config: &MatchConfig,
) -> Result<PairScore, MatchError> {
    config.validate()?;
    if set.len() < 4 {
        return Err(MatchError::TooFewPoints {
            needed: 4,
            got: set.len(),
        });
    }

    let all: Vec<usize> = (0..set.len()).collect();
    let (e1, e2, scored_indices, report) = match epipoles {
        Some((e1, e2)) => (e1, e2, all, EpipoleReport::Provided { e1, e2 }),
        None => {
            if set.len() < 8 {
                return Err(MatchError::TooFewPoints {
                    needed: 8,
                    got: set.len(),
                });
            }
            let pairs = set.pairs();
            let (kept, f) = match config.sampson_px {
                Some(threshold) => {
                    // Consensus estimation: a single gross outlier skews the
                    // least-squares fit enough to disqualify the inliers too,
                    // so the model is found on minimal samples first.
                    let ransac = RansacConfig {
                        iterations: 500,
                        threshold_px: threshold,
                        seed: config.seed,
                        min_inliers: 8,
                        degeneracy_tol: config.degeneracy_tol,
                    };
                    match estimate_fundamental_ransac(&pairs, &ransac) {
                        Ok((f, inliers)) => (inliers, f),
                        Err(err @ GeometryError::ConsensusFailed { .. }) => {
                            // No epipolar geometry at all (single-plane scene)
                            // also fails consensus; tell the cases apart with
                            // the plain estimator.
                            if matches!(
                                estimate_fundamental(&pairs, config.degeneracy_tol),
                                Err(GeometryError::DegenerateConfiguration)
                            ) {
                                return planar_fallback(set, &all, config);
                            }
                            return Err(err.into());
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                None => match estimate_fundamental(&pairs, config.degeneracy_tol) {
                    Ok(f) => (all, f),
                    Err(GeometryError::DegenerateConfiguration) => {
                        return planar_fallback(set, &all, config);
                    }
                    Err(e) => return Err(e.into()),
                },
            };
            let (e1, e2) = match epipoles_from_fundamental(&f) {
                Ok(pair) => pair,
                Err(GeometryError::RankError) => return planar_fallback(set, &kept, config),
                Err(e) => return Err(e.into()),
            };
            let dropped = set.len() - kept.len();
            (
                e1,
                e2,
                kept,
                EpipoleReport::Estimated {
                    e1,
                    e2,
                    dropped_outliers: dropped,
                },
            )
        }
    };

    if scored_indices.len() < 4 {
        return Err(MatchError::TooFewPoints {
            needed: 4,
            got: scored_indices.len(),
        });
    }
    let quads = enumerate_quadruples(scored_indices.len(), config.quadruple_cap, config.seed)?;
    let mut records = Vec::with_capacity(quads.len() * 2);
    for q in &quads {
        let base = [
            scored_indices[q[0]],
            scored_indices[q[1]],
            scored_indices[q[2]],
            scored_indices[q[3]],
        ];
        let (a, b) = score_quadruple(
            base,
            set,
            &e1,
            &e2,
            config.collinear_px,
            config.score_clamp,
        );
        records.push(a);
        records.push(b);
    }

    let mut values: Vec<f64> = records.iter().filter_map(QuadrupleScore::value).collect();
    let evaluated = values.len();
    let skipped = records.len() - evaluated;
    if evaluated == 0 {
        return Err(MatchError::AllQuadruplesDegenerate);
    }
    // Summing in sorted order makes the aggregate bit-identical under any
    // relabelling of the input correspondences.
    values.sort_by(f64::total_cmp);
    let aggregate = values.iter().sum::<f64>() / evaluated as f64;

    let planar_fit = fit_planar(set, &scored_indices, config).ok();
    let coplanar_warning = planar_fit
        .as_ref()
        .is_some_and(|fit| fit.mean_transfer_px < config.planar_px);

    Ok(PairScore {
        aggregate: Some(aggregate),
        quadruples: records,
        evaluated,
        skipped,
        coplanar_warning,
        planar_fit,
        epipoles: report,
    })
}

fn planar_fallback(
    set: &CorrespondenceSet,
    indices: &[usize],
    config: &MatchConfig,
) -> Result<PairScore, MatchError> {
    let fit = fit_planar(set, indices, config)?;
    Ok(PairScore {
        aggregate: None,
        quadruples: Vec::new(),
        evaluated: 0,
        skipped: 0,
        coplanar_warning: true,
        planar_fit: Some(fit),
        epipoles: EpipoleReport::Unavailable,
    })
}

/// Fits one global homography through the best-conditioned candidate
/// quadruple and reports the mean symmetric transfer error over all pairs.
fn fit_planar(
    set: &CorrespondenceSet,
    indices: &[usize],
    config: &MatchConfig,
) -> Result<PlanarFit, MatchError> {
    use crate::geometry::collinearity_px;

    if indices.len() < 4 {
        return Err(MatchError::TooFewPoints {
            needed: 4,
            got: indices.len(),
        });
    }
    // Derived stream so the probe does not disturb quadruple subsampling.
    let probe_seed = config.seed ^ 0x9e37_79b9_7f4a_7c15;
    let candidates = enumerate_quadruples(indices.len(), 200, probe_seed)?;

    // Rank candidates by conditioning: the smallest triplet collinearity
    // across both images, larger is better.
    let mut ranked: Vec<([usize; 4], f64)> = Vec::with_capacity(candidates.len());
    for c in &candidates {
        let quad = [
            indices[c[0]],
            indices[c[1]],
            indices[c[2]],
            indices[c[3]],
        ];
        let mut cond = f64::INFINITY;
        for tri in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
            let r = collinearity_px(
                set.reference_point(quad[tri[0]]),
                set.reference_point(quad[tri[1]]),
                set.reference_point(quad[tri[2]]),
            )?;
            let q = collinearity_px(
                set.query_point(quad[tri[0]]),
                set.query_point(quad[tri[1]]),
                set.query_point(quad[tri[2]]),
            )?;
            cond = cond.min(r).min(q);
        }
        ranked.push((quad, cond));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));

    for (quad, cond) in ranked {
        if cond <= 0.0 {
            break;
        }
        let src = [
            *set.reference_point(quad[0]),
            *set.reference_point(quad[1]),
            *set.reference_point(quad[2]),
            *set.reference_point(quad[3]),
        ];
        let dst = [
            *set.query_point(quad[0]),
            *set.query_point(quad[1]),
            *set.query_point(quad[2]),
            *set.query_point(quad[3]),
        ];
        // The conditioning rank already filtered collinear sets; solve with a
        // tiny threshold so borderline candidates fall through to the next.
        let Ok(h) = homography_from_4(&src, &dst, 1e-9) else {
            continue;
        };
        let Ok(h_inv) = h.inverse() else { continue };
        if let Some(mean) = mean_symmetric_transfer_px(set, indices, &h, &h_inv) {
            return Ok(PlanarFit {
                mean_transfer_px: mean,
                quadruple: quad,
            });
        }
    }
    Err(MatchError::Geometry(GeometryError::DegenerateConfiguration))
}

fn mean_symmetric_transfer_px(
    set: &CorrespondenceSet,
    indices: &[usize],
    h: &Homography3x3,
    h_inv: &Homography3x3,
) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for &i in indices {
        let r = set.reference_point(i);
        let q = set.query_point(i);
        let fwd = h.apply(r).pixel_distance(q);
        let bwd = h_inv.apply(q).pixel_distance(r);
        if let (Ok(f), Ok(b)) = (fwd, bwd) {
            sum += 0.5 * (f + b);
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// One template: an identifier, its correspondence set against the query and
/// optionally a pre-computed epipole pair.
#[derive(Debug, Clone)]
pub struct TemplateEntry {
    pub id: String,
    pub correspondences: CorrespondenceSet,
    pub epipoles: Option<(HomogeneousPoint2, HomogeneousPoint2)>,
}

/// A collection of templates with unique, non-empty identifiers.
#[derive(Debug, Clone)]
pub struct TemplateLibrary {
    entries: Vec<TemplateEntry>,
}

impl TemplateLibrary {
    pub fn new(entries: Vec<TemplateEntry>) -> Result<Self, MatchError> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if e.id.is_empty() {
                return Err(MatchError::EmptyTemplateId);
            }
            if !seen.insert(e.id.clone()) {
                return Err(MatchError::DuplicateTemplateId(e.id.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[TemplateEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Per-template result inside a [`MatchResult`].
#[derive(Debug, Clone, PartialEq)]
pub enum TemplateOutcome {
    /// A full homology score was computed.
    Scored {
        aggregate: f64,
        evaluated: usize,
        skipped: usize,
        coplanar_warning: bool,
    },
    /// Only the planar fallback applied (no epipolar geometry).
    PlanarOnly { mean_transfer_px: f64 },
    /// Scoring failed outright.
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateReport {
    pub id: String,
    pub outcome: TemplateOutcome,
}

/// Outcome of matching a query against a template library.
#[derive(Debug, Clone)]
pub struct MatchResult {
    /// Identifier of the lowest-scoring (most rigidity-consistent) template.
    pub best_template: String,
    /// One report per library entry, in library order.
    pub reports: Vec<TemplateReport>,
}

/// Scores the query against every template and returns the argmin.
///
/// Templates that fall back to planar mode, or whose score carries a coplanar
/// warning, are reported but excluded from the argmin: their near-zero scores
/// say nothing about which template matches. Ties on the aggregate break
/// towards the lexicographically smaller identifier.
pub fn match_templates(
    library: &TemplateLibrary,
    config: &MatchConfig,
) -> Result<MatchResult, MatchError> {
    if library.is_empty() {
        return Err(MatchError::NoScorableTemplates);
    }
    let mut reports = Vec::with_capacity(library.len());
    for entry in library.entries() {
        let outcome = match score_pair(&entry.correspondences, entry.epipoles, config) {
            Ok(score) => match score.aggregate {
                Some(aggregate) => TemplateOutcome::Scored {
                    aggregate,
                    evaluated: score.evaluated,
                    skipped: score.skipped,
                    coplanar_warning: score.coplanar_warning,
                },
                None => TemplateOutcome::PlanarOnly {
                    mean_transfer_px: score
                        .planar_fit
                        .map(|f| f.mean_transfer_px)
                        .unwrap_or(f64::NAN),
                },
            },
            Err(e) => TemplateOutcome::Failed {
                reason: e.to_string(),
            },
        };
        reports.push(TemplateReport {
            id: entry.id.clone(),
            outcome,
        });
    }
    let best = select_best(&reports).ok_or(MatchError::NoScorableTemplates)?;
    Ok(MatchResult {
        best_template: best.to_owned(),
        reports,
    })
}

/// Argmin over scored, warning-free templates; `None` when there is none.
pub fn select_best(reports: &[TemplateReport]) -> Option<&str> {
    reports
        .iter()
        .filter_map(|r| match &r.outcome {
            TemplateOutcome::Scored {
                aggregate,
                coplanar_warning: false,
                ..
            } => Some((*aggregate, r.id.as_str())),
            _ => None,
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)))
        .map(|(_, id)| id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_cloud, ground_truth_epipoles, CameraModel, CloudKind};
    use nalgebra::{Vector2, Vector3};

    fn rig() -> (CameraModel, CameraModel) {
        let up = Vector3::new(0.0, 1.0, 0.0);
        let r = CameraModel::look_at(
            Vector3::new(0.0, 0.0, -5.0),
            Vector3::zeros(),
            up,
            1000.0,
            Vector2::zeros(),
        )
        .unwrap();
        let q = CameraModel::look_at(
            Vector3::new(2.2, 1.8, -4.2),
            Vector3::zeros(),
            up,
            1060.0,
            Vector2::zeros(),
        )
        .unwrap();
        (r, q)
    }

    /// Projects `world` into both views; optionally substitutes a different
    /// world set for the query view (index-aligned) to fabricate mismatches.
    fn build_set(
        world: &[Vector3<f64>],
        query_world: Option<&[Vector3<f64>]>,
        r: &CameraModel,
        q: &CameraModel,
    ) -> CorrespondenceSet {
        let qw = query_world.unwrap_or(world);
        let pairs: Vec<_> = world
            .iter()
            .zip(qw)
            .map(|(a, b)| {
                (
                    r.project_point(a).unwrap().to_pixel().unwrap(),
                    q.project_point(b).unwrap().to_pixel().unwrap(),
                )
            })
            .collect();
        CorrespondenceSet::new("ref", "query", &pairs, None).unwrap()
    }

    fn cloud_points(seed: u64, n: usize) -> Vec<Vector3<f64>> {
        generate_cloud(CloudKind::Blob, n, 0.8, seed)
            .unwrap()
            .points()
            .to_vec()
    }

    #[test]
    fn exact_match_scores_near_zero_with_provided_epipoles() {
        let (r, q) = rig();
        let world = cloud_points(11, 8);
        let set = build_set(&world, None, &r, &q);
        let eps = ground_truth_epipoles(&r, &q).unwrap();
        let score = score_pair(&set, Some(eps), &MatchConfig::default()).unwrap();
        let agg = score.aggregate.unwrap();
        assert!(agg < 1e-8, "aggregate {agg}");
        assert_eq!(score.evaluated + score.skipped, 140);
        assert!(!score.coplanar_warning);
        assert!(matches!(score.epipoles, EpipoleReport::Provided { .. }));
    }

    #[test]
    fn exact_match_scores_near_zero_with_estimated_epipoles() {
        let (r, q) = rig();
        let world = cloud_points(12, 10);
        let set = build_set(&world, None, &r, &q);
        let score = score_pair(&set, None, &MatchConfig::default()).unwrap();
        let agg = score.aggregate.unwrap();
        assert!(agg < 1e-6, "aggregate {agg}");
        match score.epipoles {
            EpipoleReport::Estimated {
                dropped_outliers, ..
            } => assert_eq!(dropped_outliers, 0),
            other => panic!("expected estimated epipoles, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_query_scores_clearly_nonzero() {
        let (r, q) = rig();
        let world = cloud_points(13, 8);
        let other = cloud_points(14, 8);
        let set = build_set(&world, Some(&other), &r, &q);
        let eps = ground_truth_epipoles(&r, &q).unwrap();
        let score = score_pair(&set, Some(eps), &MatchConfig::default()).unwrap();
        let agg = score.aggregate.unwrap();
        assert!(agg > 0.02, "mismatch aggregate {agg} suspiciously low");
    }

    #[test]
    fn planar_scene_with_estimated_epipoles_falls_back() {
        let (r, q) = rig();
        let world: Vec<_> = [
            (-0.4, -0.3),
            (0.45, -0.2),
            (0.3, 0.4),
            (-0.3, 0.35),
            (0.05, -0.45),
            (-0.5, 0.05),
            (0.5, 0.15),
            (0.1, 0.5),
        ]
        .iter()
        .map(|&(x, y)| Vector3::new(x, y, 0.15))
        .collect();
        let set = build_set(&world, None, &r, &q);
        let score = score_pair(&set, None, &MatchConfig::default()).unwrap();
        assert!(score.aggregate.is_none());
        assert!(score.coplanar_warning);
        assert_eq!(score.epipoles, EpipoleReport::Unavailable);
        let fit = score.planar_fit.unwrap();
        assert!(
            fit.mean_transfer_px < 1e-6,
            "planar transfer {}",
            fit.mean_transfer_px
        );
    }

    #[test]
    fn planar_scene_with_exact_epipoles_scores_zero_but_warns() {
        let (r, q) = rig();
        let world: Vec<_> = [
            (-0.4, -0.3),
            (0.45, -0.2),
            (0.3, 0.4),
            (-0.3, 0.35),
            (0.05, -0.45),
            (-0.5, 0.05),
            (0.5, 0.15),
            (0.1, 0.5),
        ]
        .iter()
        .map(|&(x, y)| Vector3::new(x, y, 0.15))
        .collect();
        let set = build_set(&world, None, &r, &q);
        let eps = ground_truth_epipoles(&r, &q).unwrap();
        let score = score_pair(&set, Some(eps), &MatchConfig::default()).unwrap();
        let agg = score.aggregate.unwrap();
        assert!(agg < 1e-8, "aggregate {agg}");
        assert!(score.coplanar_warning, "coplanar scene must be flagged");
    }

    #[test]
    fn sampson_prefilter_drops_planted_outliers() {
        let (r, q) = rig();
        let world = cloud_points(15, 14);
        let set = build_set(&world, None, &r, &q);
        let mut pairs: Vec<_> = (0..set.len())
            .map(|i| {
                (
                    set.reference_point(i).to_pixel().unwrap(),
                    set.query_point(i).to_pixel().unwrap(),
                )
            })
            .collect();
        pairs[4].1 .0 += 40.0;
        pairs[4].1 .1 -= 25.0;
        let noisy = CorrespondenceSet::new("ref", "query", &pairs, None).unwrap();

        let filtered = score_pair(&noisy, None, &MatchConfig::default()).unwrap();
        match filtered.epipoles {
            EpipoleReport::Estimated {
                dropped_outliers, ..
            } => assert_eq!(dropped_outliers, 1),
            other => panic!("expected estimated epipoles, got {other:?}"),
        }
        let unfiltered = score_pair(
            &noisy,
            None,
            &MatchConfig {
                sampson_px: None,
                ..MatchConfig::default()
            },
        )
        .unwrap();
        assert!(
            filtered.aggregate.unwrap() < unfiltered.aggregate.unwrap(),
            "pre-filter should improve the aggregate ({} vs {})",
            filtered.aggregate.unwrap(),
            unfiltered.aggregate.unwrap()
        );
        assert!(filtered.aggregate.unwrap() < 1e-6);
    }

    #[test]
    fn duplicate_points_are_rejected() {
        let pairs = vec![
            ((0.0, 0.0), (10.0, 10.0)),
            ((5.0, 5.0), (20.0, 10.0)),
            ((5.0, 5.0 + 5e-7), (30.0, 10.0)),
            ((9.0, 1.0), (40.0, 10.0)),
        ];
        match CorrespondenceSet::new("r", "q", &pairs, None) {
            Err(MatchError::DuplicatePoint {
                side,
                first,
                second,
            }) => {
                assert_eq!((side, first, second), ("reference", 1, 2));
            }
            other => panic!("expected duplicate rejection, got {other:?}"),
        }
    }

    #[test]
    fn aggregate_is_deterministic_and_relabelling_invariant() {
        let (r, q) = rig();
        let world = cloud_points(16, 9);
        let set = build_set(&world, None, &r, &q);
        let eps = ground_truth_epipoles(&r, &q).unwrap();
        let cfg = MatchConfig::default();

        let a = score_pair(&set, Some(eps), &cfg).unwrap().aggregate.unwrap();
        let b = score_pair(&set, Some(eps), &cfg).unwrap().aggregate.unwrap();
        assert_eq!(a.to_bits(), b.to_bits(), "reruns must be bit-identical");

        // Reverse the correspondence order entirely.
        let reversed_world: Vec<_> = world.iter().rev().copied().collect();
        let reversed = build_set(&reversed_world, None, &r, &q);
        let c = score_pair(&reversed, Some(eps), &cfg)
            .unwrap()
            .aggregate
            .unwrap();
        assert_eq!(
            a.to_bits(),
            c.to_bits(),
            "aggregate must not depend on correspondence labelling"
        );
    }

    #[test]
    fn template_matching_selects_the_rigid_template() {
        let (r, q) = rig();
        let world_a = cloud_points(21, 8);
        let world_b = cloud_points(22, 8);
        let eps = ground_truth_epipoles(&r, &q).unwrap();

        // The query view actually shows object A.
        let set_a = build_set(&world_a, None, &r, &q);
        let set_b = build_set(&world_b, Some(&world_a), &r, &q);
        let library = TemplateLibrary::new(vec![
            TemplateEntry {
                id: "object-a".into(),
                correspondences: set_a,
                epipoles: Some(eps),
            },
            TemplateEntry {
                id: "object-b".into(),
                correspondences: set_b,
                epipoles: Some(eps),
            },
        ])
        .unwrap();
        let result = match_templates(&library, &MatchConfig::default()).unwrap();
        assert_eq!(result.best_template, "object-a");
        assert_eq!(result.reports.len(), 2);
    }

    #[test]
    fn exact_ties_break_to_the_smaller_id() {
        let reports = vec![
            TemplateReport {
                id: "zeta".into(),
                outcome: TemplateOutcome::Scored {
                    aggregate: 0.25,
                    evaluated: 10,
                    skipped: 0,
                    coplanar_warning: false,
                },
            },
            TemplateReport {
                id: "alpha".into(),
                outcome: TemplateOutcome::Scored {
                    aggregate: 0.25,
                    evaluated: 10,
                    skipped: 0,
                    coplanar_warning: false,
                },
            },
        ];
        assert_eq!(select_best(&reports), Some("alpha"));
    }

    #[test]
    fn argmin_ignores_planar_and_failed_templates() {
        let reports = vec![
            TemplateReport {
                id: "planar".into(),
                outcome: TemplateOutcome::PlanarOnly {
                    mean_transfer_px: 0.001,
                },
            },
            TemplateReport {
                id: "warned".into(),
                outcome: TemplateOutcome::Scored {
                    aggregate: 1e-12,
                    evaluated: 140,
                    skipped: 0,
                    coplanar_warning: true,
                },
            },
            TemplateReport {
                id: "real".into(),
                outcome: TemplateOutcome::Scored {
                    aggregate: 0.3,
                    evaluated: 140,
                    skipped: 0,
                    coplanar_warning: false,
                },
            },
            TemplateReport {
                id: "failed".into(),
                outcome: TemplateOutcome::Failed {
                    reason: "x".into(),
                },
            },
        ];
        assert_eq!(select_best(&reports), Some("real"));
    }

    #[test]
    fn scaling_all_aggregates_preserves_the_argmin() {
        let base = [("a", 0.4), ("b", 0.02), ("c", 0.31)];
        let build = |scale: f64| {
            base.iter()
                .map(|(id, v)| TemplateReport {
                    id: (*id).into(),
                    outcome: TemplateOutcome::Scored {
                        aggregate: v * scale,
                        evaluated: 10,
                        skipped: 0,
                        coplanar_warning: false,
                    },
                })
                .collect::<Vec<_>>()
        };
        let plain = build(1.0);
        let scaled = build(17.5);
        assert_eq!(select_best(&plain), select_best(&scaled));
    }

    #[test]
    fn empty_library_and_duplicate_ids_are_rejected() {
        assert!(matches!(
            match_templates(&TemplateLibrary::new(vec![]).unwrap(), &MatchConfig::default()),
            Err(MatchError::NoScorableTemplates)
        ));
        let (r, q) = rig();
        let set = build_set(&cloud_points(23, 8), None, &r, &q);
        let dup = TemplateLibrary::new(vec![
            TemplateEntry {
                id: "same".into(),
                correspondences: set.clone(),
                epipoles: None,
            },
            TemplateEntry {
                id: "same".into(),
                correspondences: set,
                epipoles: None,
            },
        ]);
        assert!(matches!(dup, Err(MatchError::DuplicateTemplateId(_))));
    }

    #[test]
    fn too_few_points_for_estimation_is_reported() {
        let (r, q) = rig();
        let world = cloud_points(24, 6);
        let set = build_set(&world, None, &r, &q);
        assert!(matches!(
            score_pair(&set, None, &MatchConfig::default()),
            Err(MatchError::TooFewPoints { needed: 8, got: 6 })
        ));
        // But provided epipoles allow scoring from four points up.
        let eps = ground_truth_epipoles(&r, &q).unwrap();
        let score = score_pair(&set, Some(eps), &MatchConfig::default()).unwrap();
        assert!(score.aggregate.unwrap() < 1e-8);
    }
}
