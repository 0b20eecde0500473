//! Command-line front end: `generate`, `verify` and `plot`.
//!
//! Exit codes: 0 success, 1 a verification certificate failed, 2 usage or
//! configuration error, 3 runtime or construction failure.

pub mod config;
pub mod io;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::dioph::{make_bad_vector, BadVector, DiophError};
use crate::geom::UnitVector;
use crate::lift::LiftedSequence;
use crate::spiral::{generate, AngleUnit, SphericalSource, SpiralError};
use crate::tetra::{GreedyConfig, TetraError};
use crate::verify::{self, VerifyError};

pub const REPORT_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<SpiralError> for CliError {
    fn from(e: SpiralError) -> Self {
        match e {
            SpiralError::EmptyCount | SpiralError::Budget { .. } | SpiralError::ZeroIndex => {
                CliError::Config(e.to_string())
            }
            SpiralError::Tetra(TetraError::InvalidConfig(_)) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Geom(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<DiophError> for CliError {
    fn from(e: DiophError) -> Self {
        CliError::Config(format!("alpha: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spiral-delone",
    version,
    about = "Generate spiral point sets k^(1/n) u_k and certify their Delone property",
    after_help = "Options may also come from a key-value file given with --config FILE; flags win."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the first COUNT spiral points as CSV or JSON.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Run certificate suites on a family or a point file and emit a JSON report.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
    /// Draw a planar point file as SVG.
    #[command(args_override_self = true)]
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Fermat,
    Lifted,
    Tetra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnitArg {
    Turns,
    Radians,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Separation,
    Covering,
    Discreteness,
    CoveringRadius,
    Gaps,
    Density,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FamilyArgs {
    #[arg(long, value_enum, default_value = "fermat")]
    pub family: Family,
    /// Ambient dimension; implied by the family and alpha when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    /// golden, cos2pi7, liouville (fermat only), a decimal number (fermat
    /// only) or poly:c0,c1,...,cD (ascending integer coefficients, needs
    /// --bracket).
    #[arg(long)]
    pub alpha: Option<String>,
    /// Root bracket `lo,hi` for a polynomial alpha.
    #[arg(long)]
    pub bracket: Option<String>,
    /// Fermat angle k*alpha in turns (e(k alpha)) or radians.
    #[arg(long, value_enum, default_value = "turns")]
    pub angle_unit: AngleUnitArg,
    /// Cap-exclusion constant of the tetra family.
    #[arg(long, default_value_t = GreedyConfig::DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Greedy search limit per step of the tetra family.
    #[arg(long, default_value_t = GreedyConfig::DEFAULT_P_CUTOFF)]
    pub p_cutoff: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long)]
    pub count: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Point file to verify instead of generating a family.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Number of points to generate; derived from the suites when omitted.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "separation")]
    pub suite: Vec<Suite>,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 10)]
    pub k_min: usize,
    /// Default: 100000 (fermat), 10000 (lifted), 2000 (tetra), or the
    /// largest usable index of the input file.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Covering window constant.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Covering cap constant; calibrated at --calibrate-k when omitted.
    #[arg(long = "big-c")]
    pub big_c: Option<f64>,
    /// Calibration index for C (default k_max / 10); C is 1.5x the largest
    /// scaled distance observed there.
    #[arg(long)]
    pub calibrate_k: Option<usize>,
    /// Held-out covering indices (default k_max / 2 and k_max).
    #[arg(long, value_delimiter = ',')]
    pub k_samples: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub directions: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Discreteness passes when the minimum distance exceeds this.
    #[arg(long, default_value_t = 0.0)]
    pub min_distance: f64,
    /// Covering-radius annulus `lo,hi` (default 0.2 and 0.8 of the largest norm).
    #[arg(long)]
    pub annulus: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Covering-radius suite passes when the estimate is at most this.
    #[arg(long)]
    pub max_covering_radius: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
    #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
    pub gap_r: Vec<f64>,
    /// Gap suite passes when min R g_R exceeds this.
    #[arg(long, default_value_t = 0.0)]
    pub gap_min: f64,
    #[arg(long, value_delimiter = ',', default_value = "10,50,100")]
    pub density_r: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub caps: usize,
    #[arg(long, default_value_t = 0.02)]
    pub max_discrepancy: f64,
    /// Report file; standard output when omitted.
    #[arg(long, short)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlotArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    pub dot_radius: f64,
}

/// Sum of `10^(-j!)`, which is `0.110001` to double precision.
pub fn liouville_number() -> f64 {
    let mut fact = 1i32;
    let mut sum = 0.0;
    for j in 1..=4 {
        fact *= j;
        sum += 10f64.powi(-fact);
    }
    sum
}

/// What a family flag set resolves to.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedFamily {
    pub family: Family,
    pub n: usize,
    pub label: String,
    pub alpha: Vec<f64>,
    #[serde(skip)]
    pub source: SphericalSource,
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Config(format!("{what} must be `lo,hi`, got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok((a, b))
}

fn bad_vector_from_spec(spec: &str, bracket: Option<&str>) -> Result<BadVector, CliError> {
    match spec {
        "golden" => Ok(make_bad_vector(1)?),
        "cos2pi7" => Ok(make_bad_vector(2)?),
        _ => {
            if let Some(coeffs) = spec.strip_prefix("poly:") {
                let coeffs = coeffs
                    .split(',')
                    .map(|c| c.trim().parse::<i64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::Config(format!("bad coefficients in {spec:?}")))?;
                let bracket = bracket
                    .ok_or_else(|| CliError::Config("polynomial alpha needs --bracket".into()))?;
                let bracket = parse_pair(bracket, "--bracket")?;
                Ok(BadVector::from_polynomial(&coeffs, bracket, spec)?)
            } else {
                Err(CliError::Config(format!(
                    "alpha {spec:?} is not a badly approximable vector spec"
                )))
            }
        }
    }
}

pub fn resolve_family(f: &FamilyArgs) -> Result<ResolvedFamily, CliError> {
    let check_n = |n: usize| -> Result<(), CliError> {
        match f.n {
            Some(m) if m != n => Err(CliError::Config(format!(
                "family {:?} with this alpha has dimension {n}, not {m}",
                f.family
            ))),
            _ => Ok(()),
        }
    };
    match f.family {
        Family::Fermat => {
            check_n(2)?;
            let spec = f.alpha.as_deref().unwrap_or("golden");
            let (alpha, label) = match spec {
                "golden" => ((1.0 + 5f64.sqrt()) / 2.0, "golden".to_string()),
                "liouville" => (liouville_number(), "liouville".to_string()),
                _ => match spec.parse::<f64>() {
                    Ok(a) if a.is_finite() => (a, spec.to_string()),
                    _ => {
                        let bv = bad_vector_from_spec(spec, f.bracket.as_deref())?;
                        if bv.dim() != 1 {
                            return Err(CliError::Config(format!(
                                "fermat needs a scalar alpha, {spec:?} has dimension {}",
                                bv.dim()
                            )));
                        }
                        (bv.alpha()[0], bv.label().to_string())
                    }
                },
            };
            let unit = match f.angle_unit {
                AngleUnitArg::Turns => AngleUnit::Turns,
                AngleUnitArg::Radians => AngleUnit::Radians,
            };
            Ok(ResolvedFamily {
                family: f.family,
                n: 2,
                label,
                alpha: vec![alpha],
                source: SphericalSource::Fermat { alpha, unit },
            })
        }
        Family::Lifted => {
            let bv = match f.alpha.as_deref() {
                Some(spec) => bad_vector_from_spec(spec, f.bracket.as_deref())?,
                None => {
                    let n = f.n.unwrap_or(3);
                    if n < 2 {
                        return Err(CliError::Config(format!("dimension {n}")));
                    }
                    make_bad_vector(n - 1)?
                }
            };
            let n = bv.dim() + 1;
            check_n(n)?;
            Ok(ResolvedFamily {
                family: f.family,
                n,
                label: bv.label().to_string(),
                alpha: bv.alpha().to_vec(),
                source: SphericalSource::Lifted(LiftedSequence::new(bv)),
            })
        }
        Family::Tetra => {
            check_n(3)?;
            let bv = bad_vector_from_spec(
                f.alpha.as_deref().unwrap_or("cos2pi7"),
                f.bracket.as_deref(),
            )?;
            if bv.dim() != 2 {
                return Err(CliError::Config("tetra needs a 2-dimensional alpha".into()));
            }
            if !(f.gamma > 0.0 && f.gamma.is_finite()) || f.p_cutoff == 0 {
                return Err(CliError::Config(format!(
                    "gamma {} / p_cutoff {} must be positive",
                    f.gamma, f.p_cutoff
                )));
            }
            let cfg = GreedyConfig {
                alpha: bv.clone(),
                gamma: f.gamma,
                k_target: 1,
                p_cutoff: f.p_cutoff,
            };
            Ok(ResolvedFamily {
                family: f.family,
                n: 3,
                label: bv.label().to_string(),
                alpha: bv.alpha().to_vec(),
                source: SphericalSource::Tetra(cfg),
            })
        }
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Config(format!("cannot write {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Runtime(format!("write failed: {e}"))
}

fn read_point_file(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    io::read_points_csv(BufReader::new(file))
}

#[derive(Serialize)]
struct PointsDocument<'a> {
    report_version: u32,
    command: &'static str,
    config: &'a GenerateArgs,
    resolved: &'a ResolvedFamily,
    points: &'a [Vec<f64>],
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<i32, CliError> {
    if args.count == 0 {
        return Err(CliError::Config("count must be at least 1".into()));
    }
    let fam = resolve_family(&args.family)?;
    let set = generate(&fam.source, args.count)?;
    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        Format::Csv => io::write_points_csv(&mut out, set.points()).map_err(io_err)?,
        Format::Json => {
            let doc = PointsDocument {
                report_version: REPORT_VERSION,
                command: "generate",
                config: args,
                resolved: &fam,
                points: set.points(),
            };
            serde_json::to_writer_pretty(&mut out, &doc)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            writeln!(out).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)?;
    Ok(EXIT_OK)
}

pub fn cmd_plot(args: &PlotArgs) -> Result<i32, CliError> {
    let points = read_point_file(&args.input)?;
    if points[0].len() != 2 {
        return Err(CliError::Config(format!(
            "plot needs planar points, file has dimension {}",
            points[0].len()
        )));
    }
    if !(args.dot_radius > 0.0) {
        return Err(CliError::Config("dot radius must be positive".into()));
    }
    let mut out = open_output(args.output.as_deref())?;
    out.write_all(io::render_svg(&points, args.dot_radius).as_bytes())
        .map_err(io_err)?;
    out.flush().map_err(io_err)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct Calibration {
    k: usize,
    observed_max: f64,
    factor: f64,
    #[serde(rename = "C")]
    big_c: f64,
}

#[derive(Debug, Serialize)]
struct SuiteOutcome<T> {
    pass: bool,
    #[serde(flatten)]
    report: T,
}

#[derive(Debug, Serialize)]
struct DiscretenessReport {
    min_distance: f64,
    threshold: f64,
    points: usize,
}

#[derive(Debug, Serialize)]
struct CoveringOutcome {
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration: Option<Calibration>,
    #[serde(flatten)]
    check: verify::CoveringReport,
}

#[derive(Debug, Default, Serialize)]
struct Suites {
    #[serde(skip_serializing_if = "Option::is_none")]
    separation: Option<SuiteOutcome<verify::SeparationReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    covering: Option<SuiteOutcome<CoveringOutcome>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discreteness: Option<SuiteOutcome<DiscretenessReport>>,
    #[serde(rename = "covering-radius", skip_serializing_if = "Option::is_none")]
    covering_radius: Option<SuiteOutcome<verify::CoveringRadiusEstimate>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gaps: Option<SuiteOutcome<verify::GapReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<SuiteOutcome<verify::DensityReport>>,
}

#[derive(Debug, Serialize)]
struct VerifyDocument<'a> {
    report_version: u32,
    command: &'static str,
    config: &'a VerifyArgs,
    #[serde(skip_serializing_if = "Option::is_none")]
    resolved: Option<&'a ResolvedFamily>,
    points: usize,
    k_range: (usize, usize),
    suites: Suites,
    pass: bool,
}

/// Calibration factor applied to the observed covering statistic.
pub const CALIBRATION_FACTOR: f64 = 1.5;

struct Plan {
    k_min: usize,
    k_max: usize,
    calibrate_k: usize,
    k_samples: Vec<usize>,
}

fn plan(args: &VerifyArgs, n: usize, default_k_max: usize) -> Plan {
    let k_max = args.k_max.unwrap_or(default_k_max);
    let calibrate_k = args.calibrate_k.unwrap_or((k_max / 10).max(args.k_min));
    let k_samples = if args.k_samples.is_empty() {
        let mut v = vec![k_max / 2, k_max];
        v.retain(|&k| k >= 1);
        v.dedup();
        v
    } else {
        args.k_samples.clone()
    };
    let _ = n;
    Plan {
        k_min: args.k_min,
        k_max,
        calibrate_k,
        k_samples,
    }
}

/// Points needed by the selected suites.
fn required_count(args: &VerifyArgs, n: usize, p: &Plan) -> usize {
    let mut need = p.k_max;
    for suite in &args.suite {
        let extra = match suite {
            Suite::Separation => p.k_max + verify::window_size(args.kappa, p.k_max, n),
            Suite::Covering => {
                let top = p
                    .k_samples
                    .iter()
                    .copied()
                    .chain([p.calibrate_k])
                    .max()
                    .unwrap_or(0);
                top + verify::window_size(args.c, top, n)
            }
            Suite::Gaps => args
                .gap_r
                .iter()
                .map(|r| ((r + args.h) * (r + args.h)).ceil() as usize)
                .max()
                .unwrap_or(0),
            Suite::Density => args
                .density_r
                .iter()
                .map(|r| r.powi(n as i32).floor() as usize)
                .max()
                .unwrap_or(0),
            Suite::Discreteness | Suite::CoveringRadius => 0,
        };
        need = need.max(extra);
    }
    need
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32, CliError> {
    if args.suite.is_empty() {
        return Err(CliError::Config("no suite selected".into()));
    }
    let mut suites_sel = args.suite.clone();
    suites_sel.sort();
    suites_sel.dedup();

    let (points, directions, resolved, plan) = match &args.input {
        Some(path) => {
            let points = read_point_file(path)?;
            let n = points[0].len();
            if n < 2 {
                return Err(CliError::Config("points must have dimension >= 2".into()));
            }
            let directions = points
                .iter()
                .map(|p| UnitVector::normalize(p.clone()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(format!("point without direction: {e}")))?;
            // largest k whose separation window stays inside the file
            let len = points.len();
            let default_k_max = (1..=len)
                .rev()
                .find(|&k| k + verify::window_size(args.kappa, k, n) <= len)
                .unwrap_or(1);
            let plan = plan(args, n, default_k_max);
            (points, directions, None, plan)
        }
        None => {
            let fam = resolve_family(&args.family)?;
            let default_k_max = match fam.family {
                Family::Fermat => 100_000,
                Family::Lifted => 10_000,
                Family::Tetra => 2_000,
            };
            let plan = plan(args, fam.n, default_k_max);
            let count = args
                .count
                .unwrap_or_else(|| required_count(args, fam.n, &plan));
            if count == 0 {
                return Err(CliError::Config("count must be at least 1".into()));
            }
            log::info!("generating {count} points of the {:?} family", fam.family);
            let set = generate(&fam.source, count)?;
            (
                set.points().to_vec(),
                set.directions().to_vec(),
                Some(fam),
                plan,
            )
        }
    };
    let n = points[0].len();
    let mut suites = Suites::default();
    let mut all_pass = true;
    for suite in suites_sel {
        log::info!("running suite {suite:?}");
        let pass = match suite {
            Suite::Separation => {
                let r =
                    verify::separation_statistic(&directions, args.kappa, plan.k_min, plan.k_max)?;
                for &i in &r.failing_buckets {
                    let b = &r.per_decade_min[i];
                    eprintln!(
                        "separation: bucket k in [{}, {}] has min {:.6e} below {} x median {:.6e} (witness k = {}, m = {})",
                        b.lo, b.hi, b.min, verify::BUCKET_FLOOR, r.median_bucket_min, b.witness.0, b.witness.1
                    );
                }
                let pass = r.pass;
                suites.separation = Some(SuiteOutcome { pass, report: r });
                pass
            }
            Suite::Covering => {
                let (big_c, calibration) = match args.big_c {
                    Some(c) => (c, None),
                    None => {
                        let probe = verify::covering_check(
                            &directions,
                            args.c,
                            f64::MAX,
                            &[plan.calibrate_k],
                            args.directions,
                            args.seed,
                        )?;
                        let observed = probe.max_scaled_distance[0];
                        let big_c = CALIBRATION_FACTOR * observed;
                        (
                            big_c,
                            Some(Calibration {
                                k: plan.calibrate_k,
                                observed_max: observed,
                                factor: CALIBRATION_FACTOR,
                                big_c,
                            }),
                        )
                    }
                };
                let check = verify::covering_check(
                    &directions,
                    args.c,
                    big_c,
                    &plan.k_samples,
                    args.directions,
                    args.seed,
                )?;
                let pass = check.pass;
                if !pass {
                    eprintln!(
                        "covering: worst defect {:.6e} above C = {big_c:.6e}",
                        check.worst_defect
                    );
                }
                suites.covering = Some(SuiteOutcome {
                    pass,
                    report: CoveringOutcome { calibration, check },
                });
                pass
            }
            Suite::Discreteness => {
                let d = verify::min_pairwise_distance(&points)?;
                let pass = d > args.min_distance;
                suites.discreteness = Some(SuiteOutcome {
                    pass,
                    report: DiscretenessReport {
                        min_distance: d,
                        threshold: args.min_distance,
                        points: points.len(),
                    },
                });
                pass
            }
            Suite::CoveringRadius => {
                let annulus = match &args.annulus {
                    Some(s) => parse_pair(s, "--annulus")?,
                    None => {
                        let r = points
                            .iter()
                            .map(|p| crate::geom::norm2(p))
                            .fold(0.0, f64::max);
                        (0.2 * r, 0.8 * r)
                    }
                };
                let est =
                    verify::covering_radius_estimate(&points, annulus, args.samples, args.seed)?;
                let pass = est.value.is_finite()
                    && args.max_covering_radius.is_none_or(|m| est.value <= m);
                suites.covering_radius = Some(SuiteOutcome { pass, report: est });
                pass
            }
            Suite::Gaps => {
                if n != 2 {
                    return Err(CliError::Config("gap suite needs planar points".into()));
                }
                let x: Vec<f64> = directions
                    .iter()
                    .map(|u| u.coords()[1].atan2(u.coords()[0]) / std::f64::consts::TAU)
                    .collect();
                let g = verify::marklof_gaps(&x, args.h, &args.gap_r)?;
                let pass = g.min_stat > args.gap_min && g.max_stat.is_finite();
                suites.gaps = Some(SuiteOutcome { pass, report: g });
                pass
            }
            Suite::Density => {
                let d = verify::density_scan_points(
                    &points,
                    &directions,
                    &args.density_r,
                    args.caps,
                    args.seed,
                )?;
                let exact = d
                    .counts
                    .iter()
                    .zip(&d.r_values)
                    .all(|(&c, r)| c == r.powi(n as i32).floor() as usize);
                let pass = exact && d.cap_discrepancy <= args.max_discrepancy;
                suites.density = Some(SuiteOutcome { pass, report: d });
                pass
            }
        };
        eprintln!("{suite:?}: {}", if pass { "pass" } else { "FAIL" });
        all_pass &= pass;
    }
    let doc = VerifyDocument {
        report_version: REPORT_VERSION,
        command: "verify",
        config: args,
        resolved: resolved.as_ref(),
        points: points.len(),
        k_range: (plan.k_min, plan.k_max),
        suites,
        pass: all_pass,
    };
    let mut out = open_output(args.report.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(out).map_err(io_err)?;
    out.flush().map_err(io_err)?;
    Ok(if all_pass {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I>(argv: I) -> i32
where
    I: IntoIterator<Item = OsString>,
{
    let argv = match config::merge_config(argv.into_iter().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<OsString> {
        std::iter::once("spiral-delone")
            .chain(list.iter().copied())
            .map(OsString::from)
            .collect()
    }

    #[test]
    fn liouville_value() {
        assert_eq!(liouville_number(), 0.110001);
    }

    #[test]
    fn family_resolution() {
        let parse = |list: &[&str]| match Cli::try_parse_from(args(list)).unwrap().command {
            Command::Generate(g) => resolve_family(&g.family),
            _ => unreachable!(),
        };
        let f = parse(&["generate", "--count", "1"]).unwrap();
        assert_eq!(
            (f.family, f.n, f.label.as_str()),
            (Family::Fermat, 2, "golden")
        );
        let f = parse(&["generate", "--count", "1", "--family", "lifted"]).unwrap();
        assert_eq!((f.n, f.label.as_str()), (3, "cos2pi7"));
        let f = parse(&[
            "generate", "--count", "1", "--family", "lifted", "--alpha", "golden",
        ])
        .unwrap();
        assert_eq!(f.n, 2);
        let f = parse(&[
            "generate",
            "--count",
            "1",
            "--family",
            "lifted",
            "--alpha",
            "poly:-1,-1,0,1",
            "--bracket",
            "1,2",
        ])
        .unwrap();
        assert_eq!(f.n, 3);
        assert!(parse(&["generate", "--count", "1", "--family", "tetra", "--n", "4"]).is_err());
        assert!(parse(&[
            "generate",
            "--count",
            "1",
            "--family",
            "lifted",
            "--alpha",
            "liouville"
        ])
        .is_err());
        assert!(parse(&["generate", "--count", "1", "--alpha", "cos2pi7"]).is_err());
        assert!(parse(&["generate", "--count", "1", "--alpha", "poly:-1,-1,1"]).is_err());
        let f = parse(&["generate", "--count", "1", "--alpha", "0.25"]).unwrap();
        assert_eq!(f.alpha, vec![0.25]);
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("p.csv");
        let o = out.to_str().unwrap();
        assert_eq!(
            run(args(&["generate", "--count", "0", "-o", o])),
            EXIT_CONFIG
        );
        assert_eq!(run(args(&["generate", "--count", "5", "-o", o])), EXIT_OK);
        assert_eq!(run(args(&["frobnicate"])), EXIT_CONFIG);
        let missing = dir.path().join("none.csv");
        assert_eq!(
            run(args(&["verify", "--input", missing.to_str().unwrap()])),
            EXIT_CONFIG
        );
        let tetra = [
            "generate",
            "--family",
            "tetra",
            "--gamma",
            "3",
            "--p-cutoff",
            "5",
            "--count",
            "40",
            "-o",
            o,
        ];
        assert_eq!(run(args(&tetra)), EXIT_RUNTIME);
    }
}
