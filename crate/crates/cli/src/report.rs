//! Report types for every subcommand, each with a text rendering for the
//! terminal and a JSON rendering (`--json`) matching the schemas under
//! `docs/`.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use viewmatch::config::ClassFusion;
use viewmatch::fileio::CorrespondenceFile;
use viewmatch::matching::{EpipoleReport, PairScore, TemplateOutcome, TemplateReport};
use viewmatch::synth::{ErrorSurface, PoseStatus};

/// Epipole diagnostics shared by the pair and match reports.
#[derive(Debug, Clone, Serialize)]
pub struct EpipoleInfo {
    /// `provided`, `estimated` or `unavailable`.
    pub mode: String,
    /// Reference-image epipole, homogeneous `[x, y, w]`.
    pub e1: Option<[f64; 3]>,
    /// Query-image epipole, homogeneous `[x, y, w]`.
    pub e2: Option<[f64; 3]>,
    /// Pairs removed by the outlier pre-filter (estimated mode only).
    pub dropped_outliers: Option<usize>,
}

impl EpipoleInfo {
    fn new(report: &EpipoleReport) -> Self {
        let arr = |p: &viewmatch::geometry::HomogeneousPoint2| {
            let c = p.coords();
            [c.x, c.y, c.z]
        };
        match report {
            EpipoleReport::Provided { e1, e2 } => Self {
                mode: "provided".into(),
                e1: Some(arr(e1)),
                e2: Some(arr(e2)),
                dropped_outliers: None,
            },
            EpipoleReport::Estimated {
                e1,
                e2,
                dropped_outliers,
            } => Self {
                mode: "estimated".into(),
                e1: Some(arr(e1)),
                e2: Some(arr(e2)),
                dropped_outliers: Some(*dropped_outliers),
            },
            EpipoleReport::Unavailable => Self {
                mode: "unavailable".into(),
                e1: None,
                e2: None,
                dropped_outliers: None,
            },
        }
    }

    fn describe(&self) -> String {
        match (self.e1, self.e2) {
            (Some(e1), Some(e2)) => {
                let fmt = |e: [f64; 3]| {
                    if e[2].abs() > 1e-12 {
                        format!("({:.2}, {:.2})", e[0] / e[2], e[1] / e[2])
                    } else {
                        format!("direction ({:.4}, {:.4})", e[0], e[1])
                    }
                };
                let dropped = match self.dropped_outliers {
                    Some(n) if n > 0 => format!(", {n} outlier(s) dropped"),
                    _ => String::new(),
                };
                format!("{} — e1 {} e2 {}{}", self.mode, fmt(e1), fmt(e2), dropped)
            }
            _ => self.mode.clone(),
        }
    }
}

/// Output of `score-pair`.
#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub reference: String,
    pub query: String,
    pub pairs: usize,
    /// Mean homology gap score; `null` when only the planar fallback applied.
    pub aggregate: Option<f64>,
    pub evaluated: usize,
    pub skipped: usize,
    pub coplanar_warning: bool,
    /// Mean symmetric transfer error of the best single homography, when one
    /// was fitted.
    pub planar_transfer_px: Option<f64>,
    pub epipoles: EpipoleInfo,
}

impl PairReport {
    pub fn new(file: &CorrespondenceFile, score: &PairScore) -> Self {
        Self {
            reference: file.reference_id.clone(),
            query: file.query_id.clone(),
            pairs: file.pairs.len(),
            aggregate: score.aggregate,
            evaluated: score.evaluated,
            skipped: score.skipped,
            coplanar_warning: score.coplanar_warning,
            planar_transfer_px: score.planar_fit.map(|f| f.mean_transfer_px),
            epipoles: EpipoleInfo::new(&score.epipoles),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "pair: {} vs {} ({} correspondences)",
            self.reference, self.query, self.pairs
        );
        match self.aggregate {
            Some(a) => {
                let _ = writeln!(out, "aggregate score: {a:.6e}");
            }
            None => {
                let _ = writeln!(out, "aggregate score: unavailable (no epipolar geometry)");
            }
        }
        let _ = writeln!(
            out,
            "quadruples: {} evaluated, {} skipped as degenerate",
            self.evaluated, self.skipped
        );
        let _ = writeln!(out, "epipoles: {}", self.epipoles.describe());
        if let Some(px) = self.planar_transfer_px {
            let _ = writeln!(out, "planar fit: {px:.3} px mean transfer error");
        }
        if self.coplanar_warning {
            let _ = writeln!(
                out,
                "warning: correspondences are consistent with a single plane; \
                 the score cannot distinguish matching from non-matching sets"
            );
        }
        out
    }
}

/// One template line inside a [`MatchReport`].
#[derive(Debug, Clone, Serialize)]
pub struct TemplateRow {
    pub id: String,
    /// `scored`, `planar_only` or `failed`.
    pub status: String,
    pub aggregate: Option<f64>,
    pub evaluated: Option<usize>,
    pub skipped: Option<usize>,
    pub coplanar_warning: Option<bool>,
    pub planar_transfer_px: Option<f64>,
    pub reason: Option<String>,
}

impl TemplateRow {
    pub fn new(report: &TemplateReport) -> Self {
        match &report.outcome {
            TemplateOutcome::Scored {
                aggregate,
                evaluated,
                skipped,
                coplanar_warning,
            } => Self {
                id: report.id.clone(),
                status: "scored".into(),
                aggregate: Some(*aggregate),
                evaluated: Some(*evaluated),
                skipped: Some(*skipped),
                coplanar_warning: Some(*coplanar_warning),
                planar_transfer_px: None,
                reason: None,
            },
            TemplateOutcome::PlanarOnly { mean_transfer_px } => Self {
                id: report.id.clone(),
                status: "planar_only".into(),
                aggregate: None,
                evaluated: None,
                skipped: None,
                coplanar_warning: None,
                planar_transfer_px: Some(*mean_transfer_px),
                reason: None,
            },
            TemplateOutcome::Failed { reason } => Self {
                id: report.id.clone(),
                status: "failed".into(),
                aggregate: None,
                evaluated: None,
                skipped: None,
                coplanar_warning: None,
                planar_transfer_px: None,
                reason: Some(reason.clone()),
            },
        }
    }

    /// Rank-eligible: scored without a coplanarity warning.
    fn ranked(&self) -> bool {
        self.status == "scored" && self.coplanar_warning == Some(false)
    }
}

/// A template file left out of the ranking, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct SkippedFile {
    pub file: String,
    pub reason: String,
}

/// Per-class fused score (only for `class/instance` template ids).
#[derive(Debug, Clone, Serialize)]
pub struct ClassRow {
    pub class: String,
    pub score: f64,
    pub templates: usize,
}

/// Output of `match`.
#[derive(Debug, Clone, Serialize)]
pub struct MatchReport {
    /// Query identifiers referenced by the template files.
    pub queries: Vec<String>,
    pub best_template: String,
    /// All templates, rank-eligible ones first in ascending score order.
    pub templates: Vec<TemplateRow>,
    pub skipped_files: Vec<SkippedFile>,
    /// `min` or `mean`.
    pub class_fusion: String,
    pub classes: Vec<ClassRow>,
}

impl MatchReport {
    pub fn new(
        queries: Vec<String>,
        mut templates: Vec<TemplateRow>,
        skipped_files: Vec<SkippedFile>,
        best_template: String,
        fusion: ClassFusion,
        classes: Vec<ClassRow>,
    ) -> Self {
        // Ascending by score among ranked rows; everything else after, by id.
        templates.sort_by(|a, b| {
            let key = |r: &TemplateRow| match (r.ranked(), r.aggregate) {
                (true, Some(s)) => (0u8, s),
                _ => (1u8, f64::INFINITY),
            };
            let (ka, sa) = key(a);
            let (kb, sb) = key(b);
            ka.cmp(&kb).then(sa.total_cmp(&sb)).then(a.id.cmp(&b.id))
        });
        let fusion = match fusion {
            ClassFusion::Min => "min",
            ClassFusion::Mean => "mean",
        };
        Self {
            queries,
            best_template,
            templates,
            skipped_files,
            class_fusion: fusion.into(),
            classes,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "query: {}", self.queries.join(", "));
        let _ = writeln!(out, "templates (ascending score):");
        for row in &self.templates {
            match (&row.status[..], row.aggregate) {
                ("scored", Some(score)) => {
                    let warn = if row.coplanar_warning == Some(true) {
                        "  [coplanar warning — excluded from ranking]"
                    } else {
                        ""
                    };
                    let _ = writeln!(out, "  {:<24} {score:.6e}{warn}", row.id);
                }
                ("planar_only", _) => {
                    let px = row.planar_transfer_px.unwrap_or(f64::NAN);
                    let _ = writeln!(
                        out,
                        "  {:<24} planar only ({px:.3} px) — excluded from ranking",
                        row.id
                    );
                }
                _ => {
                    let reason = row.reason.as_deref().unwrap_or("unknown");
                    let _ = writeln!(out, "  {:<24} failed: {reason}", row.id);
                }
            }
        }
        let _ = writeln!(out, "best template: {}", self.best_template);
        if !self.classes.is_empty() {
            let _ = writeln!(out, "classes ({} fusion):", self.class_fusion);
            for c in &self.classes {
                let _ = writeln!(
                    out,
                    "  {:<24} {:.6e} ({} template(s))",
                    c.class, c.score, c.templates
                );
            }
        }
        if !self.skipped_files.is_empty() {
            let _ = writeln!(out, "skipped:");
            for s in &self.skipped_files {
                let _ = writeln!(out, "  {}: {}", s.file, s.reason);
            }
        }
        out
    }
}

/// Output of `synth-surface`.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceSummary {
    pub csv: String,
    pub sigma: f64,
    pub poses: usize,
    pub scored_poses: usize,
    pub skipped_poses: usize,
    /// Smallest `nonmatch - match` margin over scored poses.
    pub min_separation: Option<f64>,
    /// Mean matching score over scored poses.
    pub mean_match: Option<f64>,
    /// Fraction of scored poses with the matching surface strictly below the
    /// non-matching one.
    pub classification_accuracy: Option<f64>,
}

impl SurfaceSummary {
    pub fn new(surface: &ErrorSurface, csv: &Path) -> Self {
        let poses = surface.cells().len();
        let scored = surface
            .cells()
            .iter()
            .filter(|c| c.status == PoseStatus::Ok)
            .count();
        Self {
            csv: csv.display().to_string(),
            sigma: surface.sigma(),
            poses,
            scored_poses: scored,
            skipped_poses: poses - scored,
            min_separation: surface.min_separation(),
            mean_match: surface.mean_match(),
            classification_accuracy: surface.classification_accuracy(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "wrote {}", self.csv);
        let _ = writeln!(
            out,
            "sigma {} px, {} poses ({} scored, {} skipped)",
            self.sigma, self.poses, self.scored_poses, self.skipped_poses
        );
        match (self.min_separation, self.mean_match) {
            (Some(sep), Some(mean)) => {
                let _ = writeln!(out, "min separation (nonmatch - match): {sep:.6e}");
                let _ = writeln!(out, "mean match score: {mean:.6e}");
                if let Some(acc) = self.classification_accuracy {
                    let _ = writeln!(out, "classification accuracy: {:.1}%", acc * 100.0);
                }
            }
            _ => {
                let _ = writeln!(out, "no pose produced both surfaces; nothing to summarize");
            }
        }
        out
    }
}

/// Output of `gen-fixture`.
#[derive(Debug, Clone, Serialize)]
pub struct FixtureReport {
    pub path: String,
    pub kind: String,
    pub reference: String,
    pub query: String,
    pub pairs: usize,
    pub ground_truth_epipoles: bool,
}

impl FixtureReport {
    pub fn new(file: &CorrespondenceFile, kind: &str, path: &Path) -> Self {
        Self {
            path: path.display().to_string(),
            kind: kind.to_owned(),
            reference: file.reference_id.clone(),
            query: file.query_id.clone(),
            pairs: file.pairs.len(),
            ground_truth_epipoles: file
                .epipoles
                .as_ref()
                .is_some_and(|e| e.source == "ground_truth"),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "wrote {}: {} fixture `{}` vs `{}`, {} pairs{}",
            self.path,
            self.kind,
            self.reference,
            self.query,
            self.pairs,
            if self.ground_truth_epipoles {
                " (ground-truth epipoles embedded)"
            } else {
                ""
            }
        );
        out
    }
}
