use nalgebra::{Matrix3, Matrix3x4, Vector2, Vector3, Vector4};

use super::SynthError;
use crate::geometry::{FundamentalMatrix, HomogeneousPoint2};

/// Minimum forward depth (as a fraction of the camera-to-point distance)
/// for a point to count as visible.
const MIN_DEPTH_REL: f64 = 1e-9;

/// A finite pinhole camera: square pixels, zero skew, rotation `R` mapping
/// world coordinates into the camera frame and centre `C` in world
/// coordinates, so a world point `X` images at `K * R * (X - C)`.
#[derive(Debug, Clone, Copy)]
pub struct CameraModel {
    focal: f64,
    principal_point: Vector2<f64>,
    rotation: Matrix3<f64>,
    center: Vector3<f64>,
}

impl CameraModel {
    pub fn new(
        focal: f64,
        principal_point: Vector2<f64>,
        rotation: Matrix3<f64>,
        center: Vector3<f64>,
    ) -> Result<Self, SynthError> {
        if !(focal.is_finite() && focal > 0.0) {
            return Err(SynthError::InvalidFocal);
        }
        let defect = (rotation.transpose() * rotation - Matrix3::identity()).norm();
        if defect > 1e-9 || (rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(SynthError::InvalidRotation);
        }
        if !(principal_point.x.is_finite() && principal_point.y.is_finite())
            || center.iter().any(|v| !v.is_finite())
        {
            return Err(SynthError::DegeneratePose(
                "non-finite camera parameters".into(),
            ));
        }
        Ok(Self {
            focal,
            principal_point,
            rotation,
            center,
        })
    }

    /// Camera looking from `center` towards `target` with the image x axis
    /// chosen perpendicular to `up`.
    pub fn look_at(
        center: Vector3<f64>,
        target: Vector3<f64>,
        up: Vector3<f64>,
        focal: f64,
        principal_point: Vector2<f64>,
    ) -> Result<Self, SynthError> {
        let forward = target - center;
        if forward.norm() < 1e-12 {
            return Err(SynthError::DegeneratePose(
                "camera centre coincides with its target".into(),
            ));
        }
        let f = forward.normalize();
        let right = up.cross(&f);
        if right.norm() < 1e-9 {
            return Err(SynthError::DegeneratePose(
                "viewing direction is parallel to the up vector".into(),
            ));
        }
        let r = right.normalize();
        let u = f.cross(&r);
        let rotation = Matrix3::from_rows(&[r.transpose(), u.transpose(), f.transpose()]);
        Self::new(focal, principal_point, rotation, center)
    }

    pub fn focal(&self) -> f64 {
        self.focal
    }

    pub fn center(&self) -> Vector3<f64> {
        self.center
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn intrinsics(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.focal,
            0.0,
            self.principal_point.x,
            0.0,
            self.focal,
            self.principal_point.y,
            0.0,
            0.0,
            1.0,
        )
    }

    /// The 3x4 projection matrix `K * [R | -R C]`.
    pub fn projection_matrix(&self) -> Matrix3x4<f64> {
        let k_r = self.intrinsics() * self.rotation;
        let t = -(self.rotation * self.center);
        let kt = self.intrinsics() * t;
        Matrix3x4::from_columns(&[
            k_r.column(0).into_owned(),
            k_r.column(1).into_owned(),
            k_r.column(2).into_owned(),
            kt,
        ])
    }

    /// Projects one world point, requiring positive depth.
    pub fn project_point(&self, x: &Vector3<f64>) -> Result<HomogeneousPoint2, SynthError> {
        let cam = self.rotation * (x - self.center);
        let dist = cam.norm();
        if cam.z <= MIN_DEPTH_REL * dist.max(1.0) {
            return Err(SynthError::BehindCamera { index: 0 });
        }
        let img = self.intrinsics() * cam;
        Ok(HomogeneousPoint2::new(img.x, img.y, img.z)?)
    }
}

/// Projects a batch of world points; fails with the index of the first point
/// on or behind the camera plane.
pub fn project(
    camera: &CameraModel,
    points: &[Vector3<f64>],
) -> Result<Vec<HomogeneousPoint2>, SynthError> {
    points
        .iter()
        .enumerate()
        .map(|(index, x)| {
            camera
                .project_point(x)
                .map_err(|_| SynthError::BehindCamera { index })
        })
        .collect()
}

/// Exact epipoles of a camera pair: each camera centre projected into the
/// other view. No visibility requirement applies — an epipole may have
/// negative or zero depth (`w <= 0`), and points at infinity are admissible.
pub fn ground_truth_epipoles(
    reference: &CameraModel,
    query: &CameraModel,
) -> Result<(HomogeneousPoint2, HomogeneousPoint2), SynthError> {
    let baseline = query.center - reference.center;
    if baseline.norm() < 1e-12 * (1.0 + reference.center.norm()) {
        return Err(SynthError::CoincidentCenters);
    }
    let e1 = reference.intrinsics() * (reference.rotation * (query.center - reference.center));
    let e2 = query.intrinsics() * (query.rotation * (reference.center - query.center));
    Ok((
        HomogeneousPoint2::from_vector(e1)?.unit_normalized(),
        HomogeneousPoint2::from_vector(e2)?.unit_normalized(),
    ))
}

/// Fundamental matrix of a camera pair, built as `[e2]x * P_q * P_r^+` from
/// the projection matrices and the query-side epipole. Satisfies
/// `q^T F r = 0` for corresponding projections `r` (reference) and `q`
/// (query).
pub fn fundamental_from_cameras(
    reference: &CameraModel,
    query: &CameraModel,
) -> Result<FundamentalMatrix, SynthError> {
    let baseline = query.center - reference.center;
    if baseline.norm() < 1e-12 * (1.0 + reference.center.norm()) {
        return Err(SynthError::CoincidentCenters);
    }
    let p_r = reference.projection_matrix();
    let p_q = query.projection_matrix();
    let p_r_pinv = p_r
        .pseudo_inverse(1e-13)
        .map_err(|_| SynthError::DegeneratePose("projection matrix lost rank".into()))?;
    let c_r = Vector4::new(
        reference.center.x,
        reference.center.y,
        reference.center.z,
        1.0,
    );
    let e2 = p_q * c_r;
    let e2x = Matrix3::new(0.0, -e2.z, e2.y, e2.z, 0.0, -e2.x, -e2.y, e2.x, 0.0);
    let f = e2x * (p_q * p_r_pinv);
    FundamentalMatrix::from_matrix(f).map_err(|_| SynthError::CoincidentCenters)
}
