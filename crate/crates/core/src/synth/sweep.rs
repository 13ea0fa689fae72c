use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{ground_truth_epipoles, CameraModel, PointCloud3, SynthError};
use crate::matching::{score_pair, CorrespondenceSet, MatchConfig};

/// Inclusive angular grid in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleGrid {
    pub start_deg: f64,
    pub end_deg: f64,
    pub step_deg: f64,
}

impl AngleGrid {
    pub fn new(start_deg: f64, end_deg: f64, step_deg: f64) -> Self {
        Self {
            start_deg,
            end_deg,
            step_deg,
        }
    }

    fn validate(&self, name: &str) -> Result<(), SynthError> {
        if !(self.start_deg.is_finite() && self.end_deg.is_finite() && self.step_deg.is_finite()) {
            return Err(SynthError::InvalidSweep(format!(
                "{name} grid bounds must be finite"
            )));
        }
        if self.step_deg <= 0.0 {
            return Err(SynthError::InvalidSweep(format!(
                "{name} grid step must be positive"
            )));
        }
        if self.end_deg < self.start_deg {
            return Err(SynthError::InvalidSweep(format!(
                "{name} grid end lies before its start"
            )));
        }
        Ok(())
    }

    /// Grid values `start, start + step, ...` up to and including `end`
    /// (within a half-step rounding guard).
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.end_deg - self.start_deg) / self.step_deg + 0.5).floor() as usize + 1;
        (0..count)
            .map(|i| self.start_deg + self.step_deg * i as f64)
            .collect()
    }
}

/// Parameters of the two-view hemisphere sweep.
///
/// The reference camera sits at `camera_radius` along `-z` from the cloud
/// centroid; the query camera moves over the viewing hemisphere. Per pose and
/// trial, both focal lengths are drawn uniformly from
/// `focal_base +- focal_jitter`, `keypoint_count` cloud points are selected,
/// projected into both views, and Gaussian pixel noise of `noise_sigma` is
/// added to every image coordinate. The matching surface scores the selected
/// points against their own projections; the non-matching surface scores the
/// same reference projections against projections of the other cloud's first
/// `keypoint_count` points. Both scorings use the exact per-trial epipoles.
#[derive(Debug, Clone, Copy)]
pub struct SweepConfig {
    pub yaw: AngleGrid,
    pub pitch: AngleGrid,
    pub focal_base: f64,
    pub focal_jitter: f64,
    pub noise_sigma: f64,
    pub keypoint_count: usize,
    pub trials_per_pose: usize,
    pub seed: u64,
    pub camera_radius: f64,
    pub quadruple_cap: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            yaw: AngleGrid::new(-60.0, 60.0, 10.0),
            pitch: AngleGrid::new(0.0, 60.0, 10.0),
            focal_base: 1000.0,
            focal_jitter: 100.0,
            noise_sigma: 0.0,
            keypoint_count: 8,
            trials_per_pose: 5,
            seed: 0,
            camera_radius: 5.0,
            quadruple_cap: 2000,
        }
    }
}

impl SweepConfig {
    fn validate(&self, cloud_match: &PointCloud3, cloud_other: &PointCloud3) -> Result<(), SynthError> {
        self.yaw.validate("yaw")?;
        self.pitch.validate("pitch")?;
        if !(self.focal_base.is_finite() && self.focal_base > 0.0)
            || !(self.focal_jitter.is_finite() && self.focal_jitter >= 0.0)
            || self.focal_jitter >= self.focal_base
        {
            return Err(SynthError::InvalidSweep(
                "focal jitter must be non-negative and below the base focal".into(),
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SynthError::InvalidSweep(
                "noise sigma must be non-negative".into(),
            ));
        }
        if self.keypoint_count < 4 {
            return Err(SynthError::InvalidSweep(
                "keypoint count must be at least 4".into(),
            ));
        }
        if self.trials_per_pose == 0 {
            return Err(SynthError::InvalidSweep(
                "trials per pose must be at least 1".into(),
            ));
        }
        if !(self.camera_radius.is_finite() && self.camera_radius > 0.0) {
            return Err(SynthError::InvalidSweep(
                "camera radius must be positive".into(),
            ));
        }
        if self.quadruple_cap == 0 {
            return Err(SynthError::InvalidSweep(
                "quadruple cap must be at least 1".into(),
            ));
        }
        for (label, cloud) in [("matching", cloud_match), ("non-matching", cloud_other)] {
            if cloud.len() < self.keypoint_count {
                return Err(SynthError::InvalidSweep(format!(
                    "{label} cloud has {} points, fewer than keypoint count {}",
                    cloud.len(),
                    self.keypoint_count
                )));
            }
        }
        Ok(())
    }
}

/// Why a grid cell carries no scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoseStatus {
    Ok,
    /// A selected point projected on or behind a camera plane.
    SkippedBehind,
    /// The pose itself is degenerate (typically coincident camera centres at
    /// yaw = pitch = 0) or scoring failed for every trial.
    SkippedDegenerate,
}

impl PoseStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PoseStatus::Ok => "ok",
            PoseStatus::SkippedBehind => "skipped_behind",
            PoseStatus::SkippedDegenerate => "skipped_degenerate",
        }
    }
}

/// One pose of the sweep grid with trial-averaged scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCell {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub match_score: Option<f64>,
    pub nonmatch_score: Option<f64>,
    pub trials: usize,
    pub status: PoseStatus,
}

/// Score-versus-viewpoint surfaces for one noise level.
#[derive(Debug, Clone)]
pub struct ErrorSurface {
    sigma: f64,
    cells: Vec<SurfaceCell>,
}

impl ErrorSurface {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn cells(&self) -> &[SurfaceCell] {
        &self.cells
    }

    fn scored(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.cells.iter().filter_map(|c| {
            match (c.status, c.match_score, c.nonmatch_score) {
                (PoseStatus::Ok, Some(m), Some(n)) => Some((m, n)),
                _ => None,
            }
        })
    }

    /// Smallest `nonmatch - match` margin over scored poses.
    pub fn min_separation(&self) -> Option<f64> {
        self.scored().map(|(m, n)| n - m).min_by(f64::total_cmp)
    }

    /// Mean matching score over scored poses.
    pub fn mean_match(&self) -> Option<f64> {
        let (sum, count) = self
            .scored()
            .fold((0.0, 0usize), |(s, c), (m, _)| (s + m, c + 1));
        (count > 0).then(|| sum / count as f64)
    }

    /// Fraction of scored poses where the matching surface lies strictly
    /// below the non-matching surface.
    pub fn classification_accuracy(&self) -> Option<f64> {
        let (hits, count) = self.scored().fold((0usize, 0usize), |(h, c), (m, n)| {
            (h + usize::from(m < n), c + 1)
        });
        (count > 0).then(|| hits as f64 / count as f64)
    }

    /// Plain-text table, one row per grid pose, suitable for surface
    /// plotting. Skipped poses keep empty score fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("yaw_deg,pitch_deg,sigma,match_score,nonmatch_score,trials,status\n");
        for c in &self.cells {
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.yaw_deg,
                c.pitch_deg,
                self.sigma,
                fmt(c.match_score),
                fmt(c.nonmatch_score),
                c.trials,
                c.status.as_str()
            ));
        }
        out
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent per-trial stream: mixes the base seed with yaw index, pitch
/// index and trial index so any subset of poses can be reproduced.
fn trial_seed(seed: u64, yaw_idx: usize, pitch_idx: usize, trial: usize) -> u64 {
    let mut h = splitmix64(seed ^ 0x5bf0_3635_16f5_63a1);
    h = splitmix64(h ^ (yaw_idx as u64).wrapping_mul(0x0100_0000_01b3));
    h = splitmix64(h ^ (pitch_idx as u64).wrapping_mul(0x27d4_eb2f_1656_67c5));
    splitmix64(h ^ (trial as u64).wrapping_mul(0x1656_67b1_9e37_79f9))
}

enum TrialSkip {
    Behind,
    Degenerate,
}

/// Sweeps the query camera over the viewing hemisphere and returns the
/// matching and non-matching score surfaces.
///
/// The pose at yaw = pitch = 0 coincides with the reference camera and is
/// reported as a skipped cell rather than an error. Identical inputs produce
/// identical surfaces, bit for bit.
pub fn hemisphere_sweep(
    cloud_match: &PointCloud3,
    cloud_other: &PointCloud3,
    config: &SweepConfig,
) -> Result<ErrorSurface, SynthError> {
    config.validate(cloud_match, cloud_other)?;
    let yaws = config.yaw.values();
    let pitches = config.pitch.values();
    let mut cells = Vec::with_capacity(yaws.len() * pitches.len());

    for (yi, &yaw) in yaws.iter().enumerate() {
        for (pi, &pitch) in pitches.iter().enumerate() {
            let mut match_sum = 0.0;
            let mut nonmatch_sum = 0.0;
            let mut ok_trials = 0usize;
            let mut skip: Option<TrialSkip> = None;

            for trial in 0..config.trials_per_pose {
                let seed = trial_seed(config.seed, yi, pi, trial);
                match run_trial(cloud_match, cloud_other, config, yaw, pitch, seed) {
                    Ok((m, n)) => {
                        match_sum += m;
                        nonmatch_sum += n;
                        ok_trials += 1;
                    }
                    Err(s) => {
                        skip = Some(s);
                        break;
                    }
                }
            }

            let cell = match (skip, ok_trials) {
                (None, t) if t > 0 => SurfaceCell {
                    yaw_deg: yaw,
                    pitch_deg: pitch,
                    match_score: Some(match_sum / t as f64),
                    nonmatch_score: Some(nonmatch_sum / t as f64),
                    trials: t,
                    status: PoseStatus::Ok,
                },
                (skip, _) => SurfaceCell {
                    yaw_deg: yaw,
                    pitch_deg: pitch,
                    match_score: None,
                    nonmatch_score: None,
                    trials: 0,
                    status: match skip {
                        Some(TrialSkip::Behind) => PoseStatus::SkippedBehind,
                        _ => PoseStatus::SkippedDegenerate,
                    },
                },
            };
            cells.push(cell);
        }
    }
    Ok(ErrorSurface {
        sigma: config.noise_sigma,
        cells,
    })
}

fn run_trial(
    cloud_match: &PointCloud3,
    cloud_other: &PointCloud3,
    config: &SweepConfig,
    yaw_deg: f64,
    pitch_deg: f64,
    seed: u64,
) -> Result<(f64, f64), TrialSkip> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = config.focal_base - config.focal_jitter;
    let hi = config.focal_base + config.focal_jitter;
    let draw_focal = |rng: &mut ChaCha8Rng| {
        if config.focal_jitter == 0.0 {
            config.focal_base
        } else {
            rng.random_range(lo..hi)
        }
    };
    let focal_ref = draw_focal(&mut rng);
    let focal_query = draw_focal(&mut rng);

    // Seeded selection of distinct keypoints from the matching cloud.
    let n = cloud_match.len();
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..config.keypoint_count {
        let j = rng.random_range(i..n);
        indices.swap(i, j);
    }
    let selected = &indices[..config.keypoint_count];

    let target = cloud_match.centroid();
    let up = Vector3::new(0.0, 1.0, 0.0);
    let dir_ref = Vector3::new(0.0, 0.0, -1.0);
    let (sy, cy) = yaw_deg.to_radians().sin_cos();
    let (sp, cp) = pitch_deg.to_radians().sin_cos();
    let dir_query = Vector3::new(sy * cp, sp, -cy * cp);

    let center_ref = target + dir_ref * config.camera_radius;
    let center_query = target + dir_query * config.camera_radius;
    if (center_query - center_ref).norm() < 1e-9 * config.camera_radius {
        return Err(TrialSkip::Degenerate);
    }
    let cam_ref = CameraModel::look_at(center_ref, target, up, focal_ref, Vector2::zeros())
        .map_err(|_| TrialSkip::Degenerate)?;
    let cam_query = CameraModel::look_at(center_query, target, up, focal_query, Vector2::zeros())
        .map_err(|_| TrialSkip::Degenerate)?;

    let project_all = |cam: &CameraModel, pts: &[Vector3<f64>]| -> Result<Vec<(f64, f64)>, TrialSkip> {
        pts.iter()
            .map(|x| {
                cam.project_point(x)
                    .map_err(|_| TrialSkip::Behind)?
                    .to_pixel()
                    .map_err(|_| TrialSkip::Behind)
            })
            .collect()
    };

    let match_world: Vec<Vector3<f64>> =
        selected.iter().map(|&i| cloud_match.points()[i]).collect();
    let other_world: Vec<Vector3<f64>> = cloud_other.points()[..config.keypoint_count].to_vec();

    let mut ref_px = project_all(&cam_ref, &match_world)?;
    let mut query_match_px = project_all(&cam_query, &match_world)?;
    let mut query_other_px = project_all(&cam_query, &other_world)?;

    if config.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, config.noise_sigma).expect("validated sigma");
        let mut perturb = |pts: &mut Vec<(f64, f64)>| {
            for p in pts.iter_mut() {
                p.0 += normal.sample(&mut rng);
                p.1 += normal.sample(&mut rng);
            }
        };
        perturb(&mut ref_px);
        perturb(&mut query_match_px);
        perturb(&mut query_other_px);
    }

    let epipoles =
        ground_truth_epipoles(&cam_ref, &cam_query).map_err(|_| TrialSkip::Degenerate)?;

    let match_config = MatchConfig {
        quadruple_cap: config.quadruple_cap,
        seed,
        ..MatchConfig::default()
    };
    let score_of = |query_px: &[(f64, f64)]| -> Result<f64, TrialSkip> {
        let pairs: Vec<_> = ref_px.iter().copied().zip(query_px.iter().copied()).collect();
        let set = CorrespondenceSet::new("sweep-ref", "sweep-query", &pairs, None)
            .map_err(|_| TrialSkip::Degenerate)?;
        let score =
            score_pair(&set, Some(epipoles), &match_config).map_err(|_| TrialSkip::Degenerate)?;
        score.aggregate.ok_or(TrialSkip::Degenerate)
    };

    Ok((score_of(&query_match_px)?, score_of(&query_other_px)?))
}
