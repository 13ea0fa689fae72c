use nalgebra::Matrix3;

use super::{GeometryError, HomogeneousPoint2, Homography3x3};

/// Isotropic conditioning: translates the centroid of a finite point set to
/// the origin and scales so the root-mean-square radius equals sqrt(2).
///
/// Returns the conditioned points (scaled to `w = 1`) together with the
/// similarity transform `T` that performs the conditioning, so that callers
/// can de-condition linear-system solutions afterwards.
pub fn normalize_points(
    points: &[HomogeneousPoint2],
) -> Result<(Vec<HomogeneousPoint2>, Homography3x3), GeometryError> {
    if points.len() < 2 {
        return Err(GeometryError::DegenerateInput);
    }
    let mut pixels = Vec::with_capacity(points.len());
    for p in points {
        pixels.push(p.to_pixel()?);
    }
    let n = pixels.len() as f64;
    let (mut cx, mut cy) = (0.0, 0.0);
    for &(x, y) in &pixels {
        cx += x;
        cy += y;
    }
    cx /= n;
    cy /= n;

    let mut mean_sq = 0.0;
    for &(x, y) in &pixels {
        mean_sq += (x - cx).powi(2) + (y - cy).powi(2);
    }
    let rms = (mean_sq / n).sqrt();
    let spread_floor = 1e-12 * (1.0 + cx.abs().max(cy.abs()));
    if rms < spread_floor {
        return Err(GeometryError::DegenerateInput);
    }

    let s = std::f64::consts::SQRT_2 / rms;
    let t = Homography3x3::from_matrix(Matrix3::new(
        s,
        0.0,
        -s * cx,
        0.0,
        s,
        -s * cy,
        0.0,
        0.0,
        1.0,
    ))?;
    let conditioned = pixels
        .iter()
        .map(|&(x, y)| {
            HomogeneousPoint2::new(s * (x - cx), s * (y - cy), 1.0)
                .expect("conditioned coordinates are finite")
        })
        .collect();
    Ok((conditioned, t))
}

/// Collinearity measure for a point triplet, in pixels: twice the triangle
/// area divided by the longest side. This equals the smallest distance from
/// any of the three points to the line through the other two, so a small
/// value means the triplet is within that distance of being collinear.
pub fn collinearity_px(
    a: &HomogeneousPoint2,
    b: &HomogeneousPoint2,
    c: &HomogeneousPoint2,
) -> Result<f64, GeometryError> {
    let (ax, ay) = a.to_pixel()?;
    let (bx, by) = b.to_pixel()?;
    let (cx, cy) = c.to_pixel()?;
    let twice_area = ((bx - ax) * (cy - ay) - (by - ay) * (cx - ax)).abs();
    let ab = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
    let ac = ((cx - ax).powi(2) + (cy - ay).powi(2)).sqrt();
    let bc = ((cx - bx).powi(2) + (cy - by).powi(2)).sqrt();
    let longest = ab.max(ac).max(bc);
    if longest == 0.0 {
        // All three points coincide; treat as fully collapsed.
        return Ok(0.0);
    }
    Ok(twice_area / longest)
}

/// True when the triplet is collinear within `threshold_px` pixels.
pub fn is_collinear(
    a: &HomogeneousPoint2,
    b: &HomogeneousPoint2,
    c: &HomogeneousPoint2,
    threshold_px: f64,
) -> Result<bool, GeometryError> {
    Ok(collinearity_px(a, b, c)? < threshold_px)
}
