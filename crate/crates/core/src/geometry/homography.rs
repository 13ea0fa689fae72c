use nalgebra::{DMatrix, Matrix3};

use super::{collinearity_px, normalize_points, GeometryError, HomogeneousPoint2};

/// Relative determinant floor below which a 3x3 map is considered singular:
/// `|det| <= RANK_TOL_REL * ||M||_F^3` (both sides scale the same way, so the
/// test is invariant under rescaling of the matrix).
const RANK_TOL_REL: f64 = 1e-12;

/// Relative floor on the second-smallest singular value of the 8x9 design
/// matrix of a four-point homography solve; below it the system has more than
/// a one-dimensional null space and the solution is not unique.
const DLT_RANK_TOL: f64 = 1e-10;

/// An invertible 3x3 projective transform of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography3x3 {
    m: Matrix3<f64>,
}

impl Homography3x3 {
    /// Wraps a matrix after checking it is finite and comfortably invertible.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::SingularSystem);
        }
        let scale = m.norm();
        if scale == 0.0 || m.determinant().abs() <= RANK_TOL_REL * scale.powi(3) {
            return Err(GeometryError::SingularSystem);
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    /// Applies the transform to a homogeneous point.
    pub fn apply(&self, p: &HomogeneousPoint2) -> HomogeneousPoint2 {
        HomogeneousPoint2::from_vector(self.m * p.coords())
            .expect("invertible map sends non-zero points to non-zero points")
    }

    pub fn inverse(&self) -> Result<Self, GeometryError> {
        self.m
            .try_inverse()
            .ok_or(GeometryError::SingularSystem)
            .and_then(Self::from_matrix)
    }

    /// Composition: `(a.compose(b)).apply(p) == a.apply(b.apply(p))`.
    pub fn compose(&self, other: &Self) -> Result<Self, GeometryError> {
        Self::from_matrix(self.m * other.m)
    }

    /// Canonical representative of the projective class: unit Frobenius norm
    /// and positive determinant.
    pub fn normalized(&self) -> Self {
        let mut m = self.m / self.m.norm();
        if m.determinant() < 0.0 {
            m = -m;
        }
        Self { m }
    }

    /// True when the two transforms agree as projective maps within `tol`
    /// (Frobenius distance between canonical representatives).
    pub fn projectively_equal(&self, other: &Self, tol: f64) -> bool {
        let a = self.normalized().m;
        let b = other.normalized().m;
        ((a - b).norm()).min((a + b).norm()) < tol
    }
}

/// Exact homography from four point correspondences.
///
/// Solves the 8x9 homogeneous linear system for the unique (up to scale)
/// projective map with `H * src[i] ~ dst[i]`. Both point sets are isotropically
/// conditioned first and the solution de-conditioned afterwards, which keeps
/// the solve well-posed even when one of the four points (typically an
/// epipole) sits far outside the keypoint cluster.
///
/// Fails with `CollinearPoints` when any triplet on either side is collinear
/// within `collinear_px` pixels, and with `SingularSystem` when the linear
/// system does not pin down a unique invertible map.
pub fn homography_from_4(
    src: &[HomogeneousPoint2; 4],
    dst: &[HomogeneousPoint2; 4],
    collinear_px: f64,
) -> Result<Homography3x3, GeometryError> {
    for pts in [src, dst] {
        for i in 0..4 {
            for j in (i + 1)..4 {
                for k in (j + 1)..4 {
                    if collinearity_px(&pts[i], &pts[j], &pts[k])? < collinear_px {
                        return Err(GeometryError::CollinearPoints {
                            threshold_px: collinear_px,
                        });
                    }
                }
            }
        }
    }

    let (src_c, t_src) = normalize_points(src)?;
    let (dst_c, t_dst) = normalize_points(dst)?;

    // Two rows per correspondence: with dst = (u, v, 1) and src = (x, y, 1),
    //   [ x y 1 0 0 0 -ux -uy -u ] h = 0
    //   [ 0 0 0 x y 1 -vx -vy -v ] h = 0
    // where h is H in row-major order.
    let mut a = DMatrix::<f64>::zeros(9, 9);
    for (i, (s, d)) in src_c.iter().zip(&dst_c).enumerate() {
        let (x, y) = s.to_pixel()?;
        let (u, v) = d.to_pixel()?;
        let r0 = 2 * i;
        let row0 = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u];
        let row1 = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, -v];
        for c in 0..9 {
            a[(r0, c)] = row0[c];
            a[(r0 + 1, c)] = row1[c];
        }
    }
    // Ninth row stays zero: padding the system to 9x9 exposes the full set of
    // right singular vectors, including the null direction.
    let h = smallest_right_singular_vector(a, DLT_RANK_TOL)?;
    let h_cond = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);

    let t_dst_inv = t_dst.inverse()?;
    let m = t_dst_inv.matrix() * h_cond * t_src.matrix();
    Homography3x3::from_matrix(m).map(|h| h.normalized())
}

/// Returns the right singular vector of the smallest singular value of `a`
/// (square or tall), or `SingularSystem` when the second-smallest singular
/// value shows the null space is not one-dimensional.
pub(crate) fn smallest_right_singular_vector(
    a: DMatrix<f64>,
    rank_tol: f64,
) -> Result<Vec<f64>, GeometryError> {
    let ncols = a.ncols();
    debug_assert!(a.nrows() >= ncols);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().ok_or(GeometryError::SingularSystem)?;
    // Singular values are sorted in descending order; the last is the
    // residual of the solution, the one before it gauges rank deficiency.
    let sv = &svd.singular_values;
    if sv[0] == 0.0 || sv[ncols - 2] / sv[0] < rank_tol {
        return Err(GeometryError::SingularSystem);
    }
    Ok(v_t.row(ncols - 1).iter().copied().collect())
}
