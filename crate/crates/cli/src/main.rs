//! `viewmatch` — score keypoint correspondences for rigid-3D consistency,
//! match a query against template libraries, and generate synthetic
//! benchmark data.
//!
//! Exit codes: `0` success, `1` input or configuration error, `2` geometric
//! degeneracy (no epipolar structure, coplanar scene, nothing scorable).

mod fixture;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use viewmatch::config::{ClassFusion, EpipoleMode, RunConfig};
use viewmatch::fileio::CorrespondenceFile;
use viewmatch::geometry::{GeometryError, HomogeneousPoint2};
use viewmatch::matching::{match_templates, score_pair, MatchError, TemplateEntry, TemplateLibrary};
use viewmatch::synth::{generate_cloud, hemisphere_sweep, AngleGrid, CloudKind, SweepConfig, SynthError};

use report::{ClassRow, MatchReport, PairReport, SkippedFile, SurfaceSummary, TemplateRow};

/// Failure with its exit-code class.
#[derive(Debug)]
enum CliError {
    /// Unusable input or configuration (exit 1).
    Input(String),
    /// Geometrically degenerate data: no score carries information (exit 2).
    Degenerate(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Degenerate(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Degenerate(m) => m,
        }
    }
}

/// Sorts a scoring failure into the exit-code classes: genuine geometric
/// degeneracies exit 2, everything else is an input problem.
fn classify_match_error(e: MatchError) -> CliError {
    match &e {
        MatchError::AllQuadruplesDegenerate | MatchError::NoScorableTemplates => {
            CliError::Degenerate(e.to_string())
        }
        MatchError::Geometry(
            GeometryError::DegenerateConfiguration
            | GeometryError::RankError
            | GeometryError::ConsensusFailed { .. },
        ) => CliError::Degenerate(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "viewmatch",
    version,
    about = "View-invariant scoring and matching of keypoint correspondence sets"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; unset values fall back to the config
/// file (when given) and then to built-in defaults.
#[derive(Args)]
struct GlobalFlags {
    /// Seed for all randomized choices
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Maximum quadruples scored per pair
    #[arg(long, global = true, value_name = "N")]
    cap: Option<usize>,
    /// Collinearity threshold in pixels
    #[arg(long, global = true, value_name = "PX")]
    collinear_px: Option<f64>,
    /// Sampson outlier threshold in pixels (0 disables the pre-filter)
    #[arg(long, global = true, value_name = "PX")]
    sampson_px: Option<f64>,
    /// Where the epipole pair for scoring comes from
    #[arg(long, global = true, value_enum, value_name = "MODE")]
    epipoles: Option<EpipoleModeArg>,
    /// Emit a machine-readable JSON report instead of text
    #[arg(long, global = true)]
    json: bool,
    /// TOML configuration file; explicit flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EpipoleModeArg {
    /// Estimate the epipolar geometry from the correspondences
    Estimate,
    /// Use the epipole pair embedded in each file
    File,
    /// Use embedded epipoles only when marked `ground_truth`
    Gt,
}

impl From<EpipoleModeArg> for EpipoleMode {
    fn from(value: EpipoleModeArg) -> Self {
        match value {
            EpipoleModeArg::Estimate => EpipoleMode::Estimate,
            EpipoleModeArg::File => EpipoleMode::File,
            EpipoleModeArg::Gt => EpipoleMode::Gt,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score one correspondence file for rigidity consistency
    ScorePair {
        /// Correspondence file to score
        file: PathBuf,
    },
    /// Match a query against a directory of template correspondence files
    Match {
        /// Directory holding one correspondence file per template
        dir: PathBuf,
    },
    /// Trace match and non-match error surfaces over the viewing hemisphere
    SynthSurface(SynthSurfaceArgs),
    /// Emit a deterministic synthetic correspondence fixture
    GenFixture(GenFixtureArgs),
}

#[derive(Args)]
struct SynthSurfaceArgs {
    /// Gaussian keypoint noise in pixels
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Output CSV path
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Shape of both procedural clouds
    #[arg(long, default_value = "blob")]
    cloud: CloudKind,
    /// Points per cloud
    #[arg(long, default_value_t = 1000)]
    points: usize,
    /// Cloud extent in world units
    #[arg(long, default_value_t = 1.0)]
    extent: f64,
    /// Yaw grid in degrees, `start:end:step`
    #[arg(long, default_value = "-60:60:10", allow_hyphen_values = true)]
    yaw: String,
    /// Pitch grid in degrees, `start:end:step`
    #[arg(long, default_value = "0:60:10", allow_hyphen_values = true)]
    pitch: String,
    /// Keypoints selected per trial
    #[arg(long, default_value_t = 8)]
    keypoints: usize,
    /// Trials averaged per grid pose
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Base focal length in pixels
    #[arg(long, default_value_t = 1000.0)]
    focal_base: f64,
    /// Uniform focal jitter in pixels
    #[arg(long, default_value_t = 100.0)]
    focal_jitter: f64,
    /// Camera distance from the cloud centroid
    #[arg(long, default_value_t = 5.0)]
    radius: f64,
}

#[derive(Args)]
struct GenFixtureArgs {
    /// Fixture kind: `match`, `nonmatch`, `planar` or `noisy:<sigma>`
    kind: String,
    /// Number of correspondences
    #[arg(long, default_value_t = 8)]
    count: usize,
    /// Output file path
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

/// Writes a finished report to stdout. When the consumer has closed the pipe
/// (`viewmatch ... | head`) the run ends quietly instead of panicking.
fn emit(text: String) {
    let mut out = std::io::stdout();
    if out.write_all(text.as_bytes()).is_err() || out.flush().is_err() {
        std::process::exit(0);
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let config = load_config(&cli.global)?;
    config
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let json = cli.global.json;
    match cli.command {
        Command::ScorePair { file } => cmd_score_pair(&file, &config, json),
        Command::Match { dir } => cmd_match(&dir, &config, json),
        Command::SynthSurface(args) => cmd_synth_surface(&args, &config, json),
        Command::GenFixture(args) => cmd_gen_fixture(&args, &config, json),
    }
}

/// Builds the effective configuration: defaults, then the config file, then
/// explicit flags.
fn load_config(flags: &GlobalFlags) -> Result<RunConfig, CliError> {
    let mut config = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            toml::from_str::<RunConfig>(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    if let Some(cap) = flags.cap {
        config.cap = cap;
    }
    if let Some(px) = flags.collinear_px {
        config.collinear_px = px;
    }
    if let Some(px) = flags.sampson_px {
        config.sampson_px = px;
    }
    if let Some(mode) = flags.epipoles {
        config.epipoles = mode.into();
    }
    Ok(config)
}

fn read_correspondence_file(path: &Path) -> Result<CorrespondenceFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    CorrespondenceFile::parse(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Applies the epipole policy to one parsed file.
fn resolve_epipoles(
    mode: EpipoleMode,
    file: &CorrespondenceFile,
    embedded: Option<(HomogeneousPoint2, HomogeneousPoint2)>,
) -> Result<Option<(HomogeneousPoint2, HomogeneousPoint2)>, String> {
    match mode {
        EpipoleMode::Estimate => Ok(None),
        EpipoleMode::File => match embedded {
            Some(pair) => Ok(Some(pair)),
            None => Err("epipole mode `file` needs an `epipoles` line in the file".into()),
        },
        EpipoleMode::Gt => match (&file.epipoles, embedded) {
            (Some(meta), Some(pair)) if meta.source == "ground_truth" => Ok(Some(pair)),
            (Some(meta), _) => Err(format!(
                "epipole mode `gt` needs source `ground_truth`, file has `{}`",
                meta.source
            )),
            _ => Err("epipole mode `gt` needs a ground-truth `epipoles` line in the file".into()),
        },
    }
}

fn cmd_score_pair(path: &Path, config: &RunConfig, json: bool) -> Result<u8, CliError> {
    let file = read_correspondence_file(path)?;
    let (set, embedded) = file
        .to_correspondence_set()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let epipoles = resolve_epipoles(config.epipoles, &file, embedded)
        .map_err(|m| CliError::Input(format!("{}: {m}", path.display())))?;
    let score = score_pair(&set, epipoles, &config.to_match_config()).map_err(classify_match_error)?;

    let report = PairReport::new(&file, &score);
    let degenerate = score.coplanar_warning || score.aggregate.is_none();
    emit(if json {
        report.to_json() + "\n"
    } else {
        report.to_text()
    });
    Ok(if degenerate { 2 } else { 0 })
}

fn cmd_match(dir: &Path, config: &RunConfig, json: bool) -> Result<u8, CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok())
        .filter(|entry| entry.file_type().map(|t| t.is_file()).unwrap_or(false))
        .map(|entry| entry.path())
        .collect();
    paths.sort();

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    let mut seen_ids = std::collections::HashSet::new();
    let mut query_ids = std::collections::BTreeSet::new();
    for path in &paths {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let skip = |reason: String, skipped: &mut Vec<SkippedFile>| {
            skipped.push(SkippedFile { file: name.clone(), reason });
        };
        let file = match read_correspondence_file(path) {
            Ok(f) => f,
            Err(e) => {
                skip(e.message().to_owned(), &mut skipped);
                continue;
            }
        };
        let (set, embedded) = match file.to_correspondence_set() {
            Ok(pair) => pair,
            Err(e) => {
                skip(e.to_string(), &mut skipped);
                continue;
            }
        };
        let epipoles = match resolve_epipoles(config.epipoles, &file, embedded) {
            Ok(eps) => eps,
            Err(reason) => {
                skip(reason, &mut skipped);
                continue;
            }
        };
        if !seen_ids.insert(file.reference_id.clone()) {
            skip(
                format!("duplicate template id `{}`", file.reference_id),
                &mut skipped,
            );
            continue;
        }
        query_ids.insert(file.query_id.clone());
        entries.push(TemplateEntry {
            id: file.reference_id.clone(),
            correspondences: set,
            epipoles,
        });
    }

    if entries.is_empty() {
        return Err(CliError::Degenerate(format!(
            "{}: no scorable template ({} file(s) skipped)",
            dir.display(),
            skipped.len()
        )));
    }

    let library = TemplateLibrary::new(entries).map_err(classify_match_error)?;
    let result = match_templates(&library, &config.to_match_config()).map_err(classify_match_error)?;

    let rows: Vec<TemplateRow> = result.reports.iter().map(TemplateRow::new).collect();
    let classes = class_ranking(&rows, config.class_fusion);
    let report = MatchReport::new(
        query_ids.into_iter().collect(),
        rows,
        skipped,
        result.best_template,
        config.class_fusion,
        classes,
    );
    emit(if json {
        report.to_json() + "\n"
    } else {
        report.to_text()
    });
    Ok(0)
}

/// Per-class fusion over scored, warning-free templates whose ids follow the
/// `class/instance` convention. Empty when no id carries a class prefix.
fn class_ranking(rows: &[TemplateRow], fusion: ClassFusion) -> Vec<ClassRow> {
    let mut by_class: std::collections::BTreeMap<&str, Vec<f64>> = std::collections::BTreeMap::new();
    for row in rows {
        let Some((class, _)) = row.id.split_once('/') else {
            continue;
        };
        if row.status == "scored" && row.coplanar_warning == Some(false) {
            if let Some(aggregate) = row.aggregate {
                by_class.entry(class).or_default().push(aggregate);
            }
        }
    }
    let mut ranking: Vec<ClassRow> = by_class
        .into_iter()
        .map(|(class, scores)| {
            let score = match fusion {
                ClassFusion::Min => scores.iter().copied().fold(f64::INFINITY, f64::min),
                ClassFusion::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
            };
            ClassRow {
                class: class.to_owned(),
                score,
                templates: scores.len(),
            }
        })
        .collect();
    ranking.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.class.cmp(&b.class)));
    ranking
}

fn parse_grid(text: &str, name: &str) -> Result<AngleGrid, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let err = || {
        CliError::Input(format!(
            "invalid {name} grid `{text}` (expected `start:end:step` in degrees)"
        ))
    };
    if parts.len() != 3 {
        return Err(err());
    }
    let mut vals = [0.0f64; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| err())?;
    }
    Ok(AngleGrid::new(vals[0], vals[1], vals[2]))
}

fn classify_synth_error(e: SynthError) -> CliError {
    match &e {
        SynthError::InvalidSweep(_) | SynthError::InvalidCloud(_) | SynthError::InvalidFocal => {
            CliError::Input(e.to_string())
        }
        SynthError::Match(inner) => classify_match_error(inner.clone()),
        _ => CliError::Degenerate(e.to_string()),
    }
}

fn cmd_synth_surface(args: &SynthSurfaceArgs, config: &RunConfig, json: bool) -> Result<u8, CliError> {
    let sweep = SweepConfig {
        yaw: parse_grid(&args.yaw, "yaw")?,
        pitch: parse_grid(&args.pitch, "pitch")?,
        focal_base: args.focal_base,
        focal_jitter: args.focal_jitter,
        noise_sigma: args.sigma,
        keypoint_count: args.keypoints,
        trials_per_pose: args.trials,
        seed: config.seed,
        camera_radius: args.radius,
        quadruple_cap: config.cap,
    };
    let cloud_match = generate_cloud(args.cloud, args.points, args.extent, config.seed)
        .map_err(classify_synth_error)?;
    let cloud_other = generate_cloud(args.cloud, args.points, args.extent, config.seed.wrapping_add(1))
        .map_err(classify_synth_error)?;
    let surface =
        hemisphere_sweep(&cloud_match, &cloud_other, &sweep).map_err(classify_synth_error)?;
    std::fs::write(&args.out, surface.to_csv())
        .map_err(|e| CliError::Input(format!("{}: {e}", args.out.display())))?;

    let summary = SurfaceSummary::new(&surface, &args.out);
    emit(if json {
        summary.to_json() + "\n"
    } else {
        summary.to_text()
    });
    Ok(0)
}

fn cmd_gen_fixture(args: &GenFixtureArgs, config: &RunConfig, json: bool) -> Result<u8, CliError> {
    let kind: fixture::FixtureKind = args
        .kind
        .parse()
        .map_err(|m: String| CliError::Input(m))?;
    let file = fixture::build_fixture(kind, args.count, config.seed)
        .map_err(CliError::Input)?;
    std::fs::write(&args.out, file.to_text())
        .map_err(|e| CliError::Input(format!("{}: {e}", args.out.display())))?;
    let report = report::FixtureReport::new(&file, &args.kind, &args.out);
    emit(if json {
        report.to_json() + "\n"
    } else {
        report.to_text()
    });
    Ok(0)
}
