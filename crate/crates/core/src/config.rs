//! Shared run configuration, loadable from a TOML table by the CLI and
//! convertible into a scoring [`MatchConfig`].

use serde::{Deserialize, Serialize};

use crate::matching::{MatchConfig, MatchError};

/// Where the epipole pair for scoring comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpipoleMode {
    /// Estimate the epipolar geometry from the correspondences themselves.
    Estimate,
    /// Use the epipole pair embedded in the correspondence file.
    File,
    /// Use embedded epipoles only when marked as exact synthetic geometry.
    Gt,
}

/// How per-template scores combine into a class score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassFusion {
    /// Best (smallest) template score in the class.
    Min,
    /// Mean template score in the class.
    Mean,
}

/// Tool-level configuration: CLI flags and the optional TOML config file both
/// deserialize into this. Unknown keys are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for all randomized choices (subsampling, consensus, synthesis).
    pub seed: u64,
    /// Maximum number of quadruples scored per pair.
    pub cap: usize,
    /// Collinearity threshold in pixels.
    pub collinear_px: f64,
    /// Sampson outlier threshold in pixels; `0` disables the pre-filter.
    pub sampson_px: f64,
    /// Epipole policy.
    pub epipoles: EpipoleMode,
    /// Upper clamp for per-quadruple scores, in `(0, 1]`.
    pub score_clamp: f64,
    /// Class-level fusion rule for the `match` command.
    pub class_fusion: ClassFusion,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            cap: 2000,
            collinear_px: 1.0,
            sampson_px: 3.0,
            epipoles: EpipoleMode::Estimate,
            score_clamp: 1.0,
            class_fusion: ClassFusion::Min,
        }
    }
}

impl RunConfig {
    /// Scoring parameters implied by this configuration.
    pub fn to_match_config(&self) -> MatchConfig {
        MatchConfig {
            quadruple_cap: self.cap,
            seed: self.seed,
            collinear_px: self.collinear_px,
            sampson_px: (self.sampson_px > 0.0).then_some(self.sampson_px),
            score_clamp: self.score_clamp,
            ..MatchConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), MatchError> {
        if self.sampson_px < 0.0 || !self.sampson_px.is_finite() {
            return Err(MatchError::InvalidConfig(
                "sampson_px must be zero (off) or positive".into(),
            ));
        }
        self.to_match_config().validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_map_onto_match_config_defaults() {
        let rc = RunConfig::default();
        rc.validate().unwrap();
        let mc = rc.to_match_config();
        let def = MatchConfig::default();
        assert_eq!(mc.quadruple_cap, def.quadruple_cap);
        assert_eq!(mc.seed, def.seed);
        assert_eq!(mc.collinear_px, def.collinear_px);
        assert_eq!(mc.sampson_px, def.sampson_px);
        assert_eq!(mc.score_clamp, def.score_clamp);
    }

    #[test]
    fn zero_sampson_disables_the_prefilter() {
        let rc = RunConfig {
            sampson_px: 0.0,
            ..RunConfig::default()
        };
        rc.validate().unwrap();
        assert_eq!(rc.to_match_config().sampson_px, None);
    }

    #[test]
    fn invalid_values_fail_validation() {
        for rc in [
            RunConfig {
                cap: 0,
                ..RunConfig::default()
            },
            RunConfig {
                score_clamp: 1.5,
                ..RunConfig::default()
            },
            RunConfig {
                sampson_px: -1.0,
                ..RunConfig::default()
            },
        ] {
            assert!(rc.validate().is_err(), "{rc:?} should be invalid");
        }
    }
}
