//! Helpers shared by the integration suites: seeded random scenes made of a
//! solid 3D quadruple watched by two full-perspective cameras.

#![allow(dead_code)]

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use viewmatch::matching::CorrespondenceSet;
use viewmatch::synth::CameraModel;

/// Cheap stateless seed mixer so nearby trial indices get unrelated streams.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform direction via rejection sampling from the unit ball.
pub fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n < 1.0 {
            return v / n;
        }
    }
}

/// Random full-perspective camera: centre on a shell around the origin,
/// looking at the origin, with a random roll about the optical axis.
pub fn random_camera(rng: &mut ChaCha8Rng) -> CameraModel {
    loop {
        let dir = random_unit(rng);
        let radius = rng.random_range(4.0..6.0);
        let center = dir * radius;
        let focal = rng.random_range(900.0..1100.0);
        let up = Vector3::new(0.0, 1.0, 0.0);
        let Ok(base) = CameraModel::look_at(center, Vector3::zeros(), up, focal, Vector2::zeros())
        else {
            continue;
        };
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let (s, c) = theta.sin_cos();
        let roll = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        let rotation = roll * base.rotation();
        if let Ok(cam) = CameraModel::new(focal, Vector2::zeros(), rotation, center) {
            return cam;
        }
    }
}

/// Four random points in the unit cube with a guaranteed-solid tetrahedron
/// (volume above half a percent of the cube of the diameter), so no triplet
/// is close to collinear and no plane pairing is close to degenerate.
pub fn random_quadruple(rng: &mut ChaCha8Rng) -> [Vector3<f64>; 4] {
    loop {
        let p: Vec<Vector3<f64>> = (0..4)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let vol = (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0])).abs() / 6.0;
        let diam = diameter(&p);
        if vol > 0.005 * diam.powi(3) {
            return [p[0], p[1], p[2], p[3]];
        }
    }
}

/// Largest pairwise distance of a point set.
pub fn diameter(points: &[Vector3<f64>]) -> f64 {
    let mut diam: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            diam = diam.max((points[i] - points[j]).norm());
        }
    }
    diam
}

/// Projects paired world points into a reference/query camera pair. The two
/// slices usually alias the same rigid structure; a displaced query-side copy
/// models a non-rigid imposter. `None` when any point falls behind a camera.
pub fn project_set(
    world_ref: &[Vector3<f64>],
    world_query: &[Vector3<f64>],
    cam_ref: &CameraModel,
    cam_query: &CameraModel,
) -> Option<CorrespondenceSet> {
    let mut pairs = Vec::new();
    for (a, b) in world_ref.iter().zip(world_query) {
        let r = cam_ref.project_point(a).ok()?.to_pixel().ok()?;
        let q = cam_query.project_point(b).ok()?.to_pixel().ok()?;
        pairs.push((r, q));
    }
    CorrespondenceSet::new("ref", "query", &pairs, None).ok()
}
