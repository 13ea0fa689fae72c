use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};

use super::SynthError;

/// Procedural cloud families used by the synthetic benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudKind {
    /// Points uniform in a solid ball — generic non-coplanar structure.
    Blob,
    /// Points uniform on the surface of an axis-aligned cuboid.
    Box,
    /// Points split between two perpendicular planar patches; exercises the
    /// coplanar degeneracy when quadruples stay within one patch.
    TwoPlane,
}

impl CloudKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CloudKind::Blob => "blob",
            CloudKind::Box => "box",
            CloudKind::TwoPlane => "two_plane",
        }
    }
}

impl std::str::FromStr for CloudKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "blob" => Ok(CloudKind::Blob),
            "box" => Ok(CloudKind::Box),
            "two_plane" => Ok(CloudKind::TwoPlane),
            other => Err(format!(
                "unknown cloud kind `{other}` (expected blob, box or two_plane)"
            )),
        }
    }
}

/// A labelled 3D point set centred near the origin.
#[derive(Debug, Clone)]
pub struct PointCloud3 {
    points: Vec<Vector3<f64>>,
    label: String,
}

impl PointCloud3 {
    pub fn new(points: Vec<Vector3<f64>>, label: impl Into<String>) -> Result<Self, SynthError> {
        if points.len() < 4 {
            return Err(SynthError::InvalidCloud(format!(
                "need at least 4 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(SynthError::InvalidCloud("non-finite coordinate".into()));
        }
        Ok(Self {
            points,
            label: label.into(),
        })
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Vector3<f64> {
        self.points.iter().sum::<Vector3<f64>>() / self.points.len() as f64
    }

    /// Smallest singular value of the centred point matrix: zero exactly when
    /// every point lies on one plane, and well away from zero for volumetric
    /// structure.
    pub fn coplanarity_measure(&self) -> f64 {
        let c = self.centroid();
        let mut m = DMatrix::<f64>::zeros(self.points.len(), 3);
        for (i, p) in self.points.iter().enumerate() {
            let d = p - c;
            m[(i, 0)] = d.x;
            m[(i, 1)] = d.y;
            m[(i, 2)] = d.z;
        }
        let sv = m.svd(false, false).singular_values;
        sv[sv.len() - 1]
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                best = best.max((self.points[i] - self.points[j]).norm());
            }
        }
        best
    }
}

/// Deterministic procedural cloud generation. Identical arguments always
/// produce identical clouds; the label records kind and seed.
pub fn generate_cloud(
    kind: CloudKind,
    point_count: usize,
    extent: f64,
    seed: u64,
) -> Result<PointCloud3, SynthError> {
    if point_count < 4 {
        return Err(SynthError::InvalidCloud(format!(
            "need at least 4 points, got {point_count}"
        )));
    }
    if !(extent.is_finite() && extent > 0.0) {
        return Err(SynthError::InvalidCloud(
            "extent must be positive and finite".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = match kind {
        CloudKind::Blob => (0..point_count)
            .map(|_| {
                let dir: [f64; 3] = UnitSphere.sample(&mut rng);
                let r = extent * rng.random_range(0.0..1.0f64).cbrt();
                Vector3::new(dir[0], dir[1], dir[2]) * r
            })
            .collect(),
        CloudKind::Box => {
            let half = Vector3::new(0.5, 0.35, 0.25) * extent;
            // Face areas for +-x, +-y, +-z faces.
            let areas = [
                half.y * half.z,
                half.y * half.z,
                half.x * half.z,
                half.x * half.z,
                half.x * half.y,
                half.x * half.y,
            ];
            let total: f64 = areas.iter().sum();
            (0..point_count)
                .map(|_| {
                    let mut pick = rng.random_range(0.0..total);
                    let mut face = 0;
                    for (i, a) in areas.iter().enumerate() {
                        if pick < *a {
                            face = i;
                            break;
                        }
                        pick -= a;
                    }
                    let u = rng.random_range(-1.0..1.0f64);
                    let v = rng.random_range(-1.0..1.0f64);
                    let sign = if face % 2 == 0 { 1.0 } else { -1.0 };
                    match face / 2 {
                        0 => Vector3::new(sign * half.x, u * half.y, v * half.z),
                        1 => Vector3::new(u * half.x, sign * half.y, v * half.z),
                        _ => Vector3::new(u * half.x, v * half.y, sign * half.z),
                    }
                })
                .collect()
        }
        CloudKind::TwoPlane => {
            let half = extent / 2.0;
            let first = point_count.div_ceil(2);
            (0..point_count)
                .map(|i| {
                    let u = rng.random_range(-half..half);
                    let v = rng.random_range(-half..half);
                    if i < first {
                        // Patch on the plane z = 0.
                        Vector3::new(u, v, 0.0)
                    } else {
                        // Patch on the perpendicular plane x = 0.
                        Vector3::new(0.0, u, v)
                    }
                })
                .collect()
        }
    };
    PointCloud3::new(points, format!("{}-{seed}", kind.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let a = generate_cloud(CloudKind::Blob, 64, 1.0, 9).unwrap();
        let b = generate_cloud(CloudKind::Blob, 64, 1.0, 9).unwrap();
        for (p, q) in a.points().iter().zip(b.points()) {
            assert_eq!(p, q);
        }
        let c = generate_cloud(CloudKind::Blob, 64, 1.0, 10).unwrap();
        assert!(a.points().iter().zip(c.points()).any(|(p, q)| p != q));
    }

    #[test]
    fn blob_is_bounded_and_volumetric() {
        let cloud = generate_cloud(CloudKind::Blob, 1000, 1.0, 3).unwrap();
        assert!(cloud.points().iter().all(|p| p.norm() <= 1.0 + 1e-12));
        assert!(
            cloud.coplanarity_measure() > 0.01,
            "blob coplanarity measure {}",
            cloud.coplanarity_measure()
        );
    }

    #[test]
    fn box_points_lie_on_the_surface() {
        let cloud = generate_cloud(CloudKind::Box, 500, 2.0, 4).unwrap();
        let half = Vector3::new(0.5, 0.35, 0.25) * 2.0;
        for p in cloud.points() {
            let on_face = (p.x.abs() - half.x).abs() < 1e-12
                || (p.y.abs() - half.y).abs() < 1e-12
                || (p.z.abs() - half.z).abs() < 1e-12;
            assert!(on_face, "point {p} not on cuboid surface");
            assert!(
                p.x.abs() <= half.x + 1e-12
                    && p.y.abs() <= half.y + 1e-12
                    && p.z.abs() <= half.z + 1e-12
            );
        }
        assert!(cloud.coplanarity_measure() > 0.01);
    }

    #[test]
    fn two_plane_halves_are_each_coplanar() {
        let cloud = generate_cloud(CloudKind::TwoPlane, 101, 1.0, 5).unwrap();
        let first = 101usize.div_ceil(2);
        for p in &cloud.points()[..first] {
            assert_eq!(p.z, 0.0);
        }
        for p in &cloud.points()[first..] {
            assert_eq!(p.x, 0.0);
        }
        // The union is not coplanar.
        assert!(cloud.coplanarity_measure() > 0.01);
        let half_a = PointCloud3::new(cloud.points()[..first].to_vec(), "a").unwrap();
        assert!(half_a.coplanarity_measure() < 1e-12);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(matches!(
            generate_cloud(CloudKind::Blob, 3, 1.0, 0),
            Err(SynthError::InvalidCloud(_))
        ));
        assert!(matches!(
            generate_cloud(CloudKind::Blob, 10, 0.0, 0),
            Err(SynthError::InvalidCloud(_))
        ));
    }

    #[test]
    fn labels_record_kind_and_seed() {
        let cloud = generate_cloud(CloudKind::TwoPlane, 12, 1.0, 77).unwrap();
        assert_eq!(cloud.label(), "two_plane-77");
    }
}
