use nalgebra::Vector3;

use super::GeometryError;

/// Relative tolerance below which the homogeneous w-component is treated as
/// zero, i.e. the point is considered to lie at infinity.
pub(crate) const W_EPS_REL: f64 = 1e-12;

/// A 2D point in homogeneous coordinates `(x, y, w)`.
///
/// The representation is projective: `(x, y, w)` and `(sx, sy, sw)` denote the
/// same point for any `s != 0`. The stored vector is guaranteed finite and
/// non-zero; beyond that no normalization is imposed, so points at infinity
/// (`w = 0`) are representable and flow through the homography and epipole
/// machinery unharmed.
///
/// `PartialEq` compares stored components exactly, which distinguishes scaled
/// representatives of the same projective point; use
/// [`projectively_equal`](Self::projectively_equal) for geometric identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousPoint2 {
    coords: Vector3<f64>,
}

impl HomogeneousPoint2 {
    /// Builds a point from raw homogeneous components.
    pub fn new(x: f64, y: f64, w: f64) -> Result<Self, GeometryError> {
        let v = Vector3::new(x, y, w);
        if !(x.is_finite() && y.is_finite() && w.is_finite()) || v.norm() == 0.0 {
            return Err(GeometryError::InvalidPoint);
        }
        Ok(Self { coords: v })
    }

    /// Builds a finite point from pixel coordinates (`w = 1`).
    pub fn from_pixel(x: f64, y: f64) -> Result<Self, GeometryError> {
        Self::new(x, y, 1.0)
    }

    pub(crate) fn from_vector(v: Vector3<f64>) -> Result<Self, GeometryError> {
        Self::new(v.x, v.y, v.z)
    }

    pub fn coords(&self) -> Vector3<f64> {
        self.coords
    }

    /// True when the point lies at infinity: `|w|` is negligible against the
    /// overall coordinate magnitude.
    pub fn is_at_infinity(&self) -> bool {
        self.coords.z.abs() < W_EPS_REL * self.coords.norm()
    }

    /// Scales the representation so `w = 1` and returns pixel coordinates.
    pub fn to_pixel(&self) -> Result<(f64, f64), GeometryError> {
        if self.is_at_infinity() {
            return Err(GeometryError::PointAtInfinity);
        }
        Ok((self.coords.x / self.coords.z, self.coords.y / self.coords.z))
    }

    /// Returns the same projective point scaled to unit Euclidean norm with a
    /// canonical sign (largest-magnitude component positive). Useful for
    /// comparing points produced along different computational routes.
    pub fn unit_normalized(&self) -> Self {
        let mut v = self.coords / self.coords.norm();
        let lead = v.iter().fold(0.0f64, |acc: f64, &c| {
            if c.abs() > acc.abs() {
                c
            } else {
                acc
            }
        });
        if lead < 0.0 {
            v = -v;
        }
        Self { coords: v }
    }

    /// Projective equality test: the cross product of the two (unit-scaled)
    /// representatives must vanish within `tol`.
    pub fn projectively_equal(&self, other: &Self, tol: f64) -> bool {
        let a = self.coords / self.coords.norm();
        let b = other.coords / other.coords.norm();
        a.cross(&b).norm() < tol
    }

    /// Euclidean pixel distance to another finite point.
    pub fn pixel_distance(&self, other: &Self) -> Result<f64, GeometryError> {
        let (ax, ay) = self.to_pixel()?;
        let (bx, by) = other.to_pixel()?;
        Ok(((ax - bx).powi(2) + (ay - by).powi(2)).sqrt())
    }
}
