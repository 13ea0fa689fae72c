//! Deterministic synthetic correspondence fixtures for `gen-fixture`.
//!
//! Every fixture projects a procedural 3D scene through one fixed two-camera
//! rig, embeds the exact epipoles of that rig, and depends only on the
//! requested kind, pair count and seed.

use std::str::FromStr;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use viewmatch::fileio::{CorrespondenceFile, FileEpipoles, FilePair};
use viewmatch::synth::{generate_cloud, ground_truth_epipoles, project, CameraModel, CloudKind};

/// Half-side of the region the scene points occupy, in world units.
const SCENE_EXTENT: f64 = 0.8;
/// Decorrelates the pixel-noise stream from the scene-geometry stream.
const NOISE_SALT: u64 = 0x6e6f_6973_6500;

/// What `gen-fixture` should produce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixtureKind {
    /// Both views see the same rigid 3D point set.
    Match,
    /// The query view sees an unrelated point set of the same size.
    NonMatch,
    /// Both views see the same points, all lying in a single plane.
    Planar,
    /// Like `Match`, with Gaussian pixel noise added in both views.
    Noisy { sigma: f64 },
}

impl FixtureKind {
    fn slug(&self) -> String {
        match self {
            FixtureKind::Match => "match".into(),
            FixtureKind::NonMatch => "nonmatch".into(),
            FixtureKind::Planar => "planar".into(),
            FixtureKind::Noisy { sigma } => format!("noisy-{sigma}"),
        }
    }
}

impl FromStr for FixtureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("noisy:") {
            let sigma: f64 = rest
                .parse()
                .map_err(|_| format!("invalid noise level `{rest}` in fixture kind"))?;
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err("noise level must be non-negative and finite".into());
            }
            return Ok(FixtureKind::Noisy { sigma });
        }
        match s {
            "match" => Ok(FixtureKind::Match),
            "nonmatch" => Ok(FixtureKind::NonMatch),
            "planar" => Ok(FixtureKind::Planar),
            other => Err(format!(
                "unknown fixture kind `{other}` (expected match, nonmatch, planar or noisy:<sigma>)"
            )),
        }
    }
}

/// The fixed rig every fixture is rendered with: two cameras on the negative-z
/// side of the scene, converging on the origin, with distinct focal lengths.
fn fixture_rig() -> Result<(CameraModel, CameraModel), String> {
    let up = Vector3::new(0.0, 1.0, 0.0);
    let pp = Vector2::new(640.0, 360.0);
    let reference = CameraModel::look_at(
        Vector3::new(0.0, 0.0, -5.0),
        Vector3::zeros(),
        up,
        1000.0,
        pp,
    )
    .map_err(|e| e.to_string())?;
    let query = CameraModel::look_at(
        Vector3::new(2.2, 1.8, -4.2),
        Vector3::zeros(),
        up,
        1060.0,
        pp,
    )
    .map_err(|e| e.to_string())?;
    Ok((reference, query))
}

fn blob(count: usize, seed: u64) -> Result<Vec<Vector3<f64>>, String> {
    Ok(generate_cloud(CloudKind::Blob, count, SCENE_EXTENT, seed)
        .map_err(|e| e.to_string())?
        .points()
        .to_vec())
}

/// Seeded points on the world plane `z = 0`.
fn planar_points(count: usize, seed: u64) -> Vec<Vector3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            Vector3::new(
                rng.random_range(-SCENE_EXTENT..SCENE_EXTENT),
                rng.random_range(-SCENE_EXTENT..SCENE_EXTENT),
                0.0,
            )
        })
        .collect()
}

/// Builds one fixture file. The result is a pure function of its arguments.
pub fn build_fixture(
    kind: FixtureKind,
    count: usize,
    seed: u64,
) -> Result<CorrespondenceFile, String> {
    if count < 4 {
        return Err(format!("a fixture needs at least 4 correspondences, got {count}"));
    }
    let (ref_cam, query_cam) = fixture_rig()?;
    let (world_ref, world_query) = match kind {
        FixtureKind::Match | FixtureKind::Noisy { .. } => {
            let w = blob(count, seed)?;
            (w.clone(), w)
        }
        FixtureKind::NonMatch => (blob(count, seed)?, blob(count, seed.wrapping_add(1))?),
        FixtureKind::Planar => {
            let w = planar_points(count, seed);
            (w.clone(), w)
        }
    };

    let ref_px = project(&ref_cam, &world_ref).map_err(|e| e.to_string())?;
    let query_px = project(&query_cam, &world_query).map_err(|e| e.to_string())?;
    let mut pairs = Vec::with_capacity(count);
    for (r, q) in ref_px.iter().zip(&query_px) {
        let (x_ref, y_ref) = r.to_pixel().map_err(|e| e.to_string())?;
        let (x_query, y_query) = q.to_pixel().map_err(|e| e.to_string())?;
        pairs.push(FilePair {
            x_ref,
            y_ref,
            x_query,
            y_query,
            confidence: None,
        });
    }
    if let FixtureKind::Noisy { sigma } = kind {
        let normal = Normal::new(0.0, sigma).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ NOISE_SALT);
        for pair in &mut pairs {
            pair.x_ref += normal.sample(&mut rng);
            pair.y_ref += normal.sample(&mut rng);
            pair.x_query += normal.sample(&mut rng);
            pair.y_query += normal.sample(&mut rng);
        }
    }

    let (e1, e2) = ground_truth_epipoles(&ref_cam, &query_cam).map_err(|e| e.to_string())?;
    let as_array = |p: &viewmatch::geometry::HomogeneousPoint2| {
        let c = p.coords();
        [c.x, c.y, c.z]
    };
    Ok(CorrespondenceFile {
        reference_id: format!("{}-s{}", kind.slug(), seed),
        query_id: "synthetic-query".into(),
        dims: Some((1280, 720)),
        epipoles: Some(FileEpipoles {
            e1: as_array(&e1),
            e2: as_array(&e2),
            source: "ground_truth".into(),
        }),
        pairs,
    })
}
