use nalgebra::{DMatrix, Matrix3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::homography::smallest_right_singular_vector;
use super::{normalize_points, GeometryError, HomogeneousPoint2};

/// Default relative floor on the second-smallest singular value of the
/// estimation design matrix. Below it the correspondences admit a whole
/// family of epipolar geometries (the classic all-points-on-one-plane case)
/// and no fundamental matrix is returned.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

/// Relative floor on the middle singular value of a fundamental matrix; below
/// it the matrix has rank one and carries no epipolar-line structure.
const EPIPOLE_RANK_TOL: f64 = 1e-12;

/// A rank-two fundamental matrix `F` with the convention
/// `query^T * F * reference = 0`, stored with unit Frobenius norm and a
/// canonical sign (largest-magnitude entry positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalMatrix {
    m: Matrix3<f64>,
}

impl FundamentalMatrix {
    /// Wraps a matrix, enforcing rank two exactly (smallest singular value
    /// zeroed) and the canonical scale/sign.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        if m.iter().any(|v| !v.is_finite()) || m.norm() == 0.0 {
            return Err(GeometryError::RankError);
        }
        let svd = m.svd(true, true);
        let sv = svd.singular_values;
        if sv[1] / sv[0] < EPIPOLE_RANK_TOL {
            return Err(GeometryError::RankError);
        }
        let u = svd.u.ok_or(GeometryError::RankError)?;
        let v_t = svd.v_t.ok_or(GeometryError::RankError)?;
        let rank2 = u * Matrix3::from_diagonal(&nalgebra::Vector3::new(sv[0], sv[1], 0.0)) * v_t;
        Ok(Self {
            m: canonicalize(rank2),
        })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    /// Algebraic epipolar residual `query^T * F * reference` for w-scaled
    /// pixel points.
    pub fn algebraic_residual(
        &self,
        reference: &HomogeneousPoint2,
        query: &HomogeneousPoint2,
    ) -> Result<f64, GeometryError> {
        let (xr, yr) = reference.to_pixel()?;
        let (xq, yq) = query.to_pixel()?;
        let r = nalgebra::Vector3::new(xr, yr, 1.0);
        let q = nalgebra::Vector3::new(xq, yq, 1.0);
        Ok((q.transpose() * self.m * r)[0])
    }
}

fn canonicalize(m: Matrix3<f64>) -> Matrix3<f64> {
    let mut out = m / m.norm();
    let lead = out.iter().fold(0.0f64, |acc: f64, &c| {
        if c.abs() > acc.abs() {
            c
        } else {
            acc
        }
    });
    if lead < 0.0 {
        out = -out;
    }
    out
}

/// Fundamental-matrix estimation by the conditioned eight-point algorithm.
///
/// `pairs` holds `(reference, query)` correspondences; at least eight are
/// required. Both sides are isotropically conditioned, the homogeneous system
/// is solved by SVD, rank two is enforced on the conditioned solution and the
/// result de-conditioned. `degeneracy_tol` bounds the relative size of the
/// second-smallest design-matrix singular value; configurations below it
/// (e.g. all 3D points coplanar, or coincident cameras) yield
/// `DegenerateConfiguration`.
pub fn estimate_fundamental(
    pairs: &[(HomogeneousPoint2, HomogeneousPoint2)],
    degeneracy_tol: f64,
) -> Result<FundamentalMatrix, GeometryError> {
    if pairs.len() < 8 {
        return Err(GeometryError::InsufficientCorrespondences {
            needed: 8,
            got: pairs.len(),
        });
    }
    let refs: Vec<_> = pairs.iter().map(|p| p.0).collect();
    let queries: Vec<_> = pairs.iter().map(|p| p.1).collect();
    let (refs_c, t_ref) = normalize_points(&refs)?;
    let (queries_c, t_query) = normalize_points(&queries)?;

    // One row per correspondence; unknowns are F in row-major order, from
    // query^T F reference = 0. Pad with zero rows up to nine so the SVD
    // exposes all right singular vectors.
    let rows = pairs.len().max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (r, q)) in refs_c.iter().zip(&queries_c).enumerate() {
        let (xr, yr) = r.to_pixel()?;
        let (xq, yq) = q.to_pixel()?;
        let row = [
            xq * xr,
            xq * yr,
            xq,
            yq * xr,
            yq * yr,
            yq,
            xr,
            yr,
            1.0,
        ];
        for c in 0..9 {
            a[(i, c)] = row[c];
        }
    }
    let f = smallest_right_singular_vector(a, degeneracy_tol)
        .map_err(|_| GeometryError::DegenerateConfiguration)?;
    let f_cond = Matrix3::new(f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8]);

    // query^T F_cond ref holds for conditioned points T_q p_q, T_r p_r, so the
    // de-conditioned matrix is T_q^T * F_cond * T_r.
    let f_raw = t_query.matrix().transpose() * f_cond * t_ref.matrix();
    FundamentalMatrix::from_matrix(f_raw).map_err(|_| GeometryError::DegenerateConfiguration)
}

/// Extracts the epipoles of a fundamental matrix: `e1` (reference image) is
/// the right null vector, `e2` (query image) the left null vector. Both come
/// back with unit Euclidean norm and canonical sign; either may lie at
/// infinity.
pub fn epipoles_from_fundamental(
    f: &FundamentalMatrix,
) -> Result<(HomogeneousPoint2, HomogeneousPoint2), GeometryError> {
    let svd = f.m.svd(true, true);
    let sv = svd.singular_values;
    if sv[1] / sv[0] < EPIPOLE_RANK_TOL {
        return Err(GeometryError::RankError);
    }
    let u = svd.u.ok_or(GeometryError::RankError)?;
    let v_t = svd.v_t.ok_or(GeometryError::RankError)?;
    let e1 = HomogeneousPoint2::from_vector(v_t.row(2).transpose())?.unit_normalized();
    let e2 = HomogeneousPoint2::from_vector(u.column(2).into_owned())?.unit_normalized();
    Ok((e1, e2))
}

/// First-order geometric (Sampson) distance of a correspondence to the
/// epipolar constraint, in pixels.
pub fn sampson_distance_px(
    f: &FundamentalMatrix,
    reference: &HomogeneousPoint2,
    query: &HomogeneousPoint2,
) -> Result<f64, GeometryError> {
    let (xr, yr) = reference.to_pixel()?;
    let (xq, yq) = query.to_pixel()?;
    let r = nalgebra::Vector3::new(xr, yr, 1.0);
    let q = nalgebra::Vector3::new(xq, yq, 1.0);
    let fr = f.m * r;
    let ftq = f.m.transpose() * q;
    let residual = (q.transpose() * fr)[0];
    let grad_sq = fr[0] * fr[0] + fr[1] * fr[1] + ftq[0] * ftq[0] + ftq[1] * ftq[1];
    if grad_sq == 0.0 {
        return Err(GeometryError::RankError);
    }
    Ok(residual.abs() / grad_sq.sqrt())
}

/// Settings for consensus-based robust fundamental estimation.
#[derive(Debug, Clone, Copy)]
pub struct RansacConfig {
    pub iterations: usize,
    pub threshold_px: f64,
    pub seed: u64,
    pub min_inliers: usize,
    /// Degeneracy floor passed through to every per-sample estimation.
    pub degeneracy_tol: f64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            threshold_px: 1.0,
            seed: 0,
            min_inliers: 8,
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
        }
    }
}

/// Seeded random-sample consensus around [`estimate_fundamental`].
///
/// Draws eight-point minimal samples, keeps the model with the largest
/// Sampson-inlier count (first winner on ties, so runs are reproducible),
/// then refits on the full inlier set. Returns the refit model and the
/// indices of its inliers.
pub fn estimate_fundamental_ransac(
    pairs: &[(HomogeneousPoint2, HomogeneousPoint2)],
    config: &RansacConfig,
) -> Result<(FundamentalMatrix, Vec<usize>), GeometryError> {
    if pairs.len() < 8 {
        return Err(GeometryError::InsufficientCorrespondences {
            needed: 8,
            got: pairs.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut indices: Vec<usize> = (0..pairs.len()).collect();
    let mut best: Option<(usize, Vec<usize>)> = None;

    for _ in 0..config.iterations.max(1) {
        indices.shuffle(&mut rng);
        let sample: Vec<_> = indices[..8].iter().map(|&i| pairs[i]).collect();
        let Ok(model) = estimate_fundamental(&sample, config.degeneracy_tol) else {
            continue;
        };
        let inliers = inlier_indices(&model, pairs, config.threshold_px);
        if best.as_ref().is_none_or(|(n, _)| inliers.len() > *n) {
            best = Some((inliers.len(), inliers));
        }
    }

    let (count, inliers) = best.ok_or(GeometryError::ConsensusFailed {
        best_inliers: 0,
        total: pairs.len(),
    })?;
    if count < config.min_inliers.max(8) {
        return Err(GeometryError::ConsensusFailed {
            best_inliers: count,
            total: pairs.len(),
        });
    }
    let subset: Vec<_> = inliers.iter().map(|&i| pairs[i]).collect();
    let refit = estimate_fundamental(&subset, config.degeneracy_tol)?;
    let final_inliers = inlier_indices(&refit, pairs, config.threshold_px);
    Ok((refit, final_inliers))
}

fn inlier_indices(
    f: &FundamentalMatrix,
    pairs: &[(HomogeneousPoint2, HomogeneousPoint2)],
    threshold_px: f64,
) -> Vec<usize> {
    pairs
        .iter()
        .enumerate()
        .filter_map(|(i, (r, q))| {
            sampson_distance_px(f, r, q)
                .ok()
                .filter(|d| *d < threshold_px)
                .map(|_| i)
        })
        .collect()
}
