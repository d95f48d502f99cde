//! Command-line front end. Every run is described by a [`RunConfig`], which
//! can be given as flags or loaded from a JSON file with `--config`.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 on usage
//! or parameter errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::checks::{run_suite, Suite};
use crate::ensemble::{fidelity_with_pure, Ensemble};
use crate::error::{Error, Result};
use crate::fock::ModeId;
use crate::fusion::{fit_id_ghz, fuse_type_ii, ghz_pure, id_ghz, success_state, FusionOutcome, IdGhzSpec};
use crate::ghz::{analyze_output, canonical_layout, run_ghz_circuit, GhzCircuitLayout, OutputReport};
use crate::optics::{ClickOutcome, DetectorModel};
use crate::sources::{BellForm, DoublePairModel, SourceSpec};
use crate::threshold::{fmt_sig, sweep, write_csv, Axis, Scheme, SweepSpec, ThresholdParams};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "eprsim", version, about = "Exact simulation of linear-optical GHZ circuits")]
struct Cli {
    /// Run the command stored in a JSON config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the three-source GHZ circuit and report the post-selected state
    Ghz(GhzArgs),
    /// Run a named group of verification checks
    Verify(VerifyArgs),
    /// Fuse two ID GHZ states with a type-II gate
    Fusion(FusionArgs),
    /// Tabulate loss thresholds over a parameter grid
    Sweep(SweepArgs),
    /// Print the config equivalent to a command line instead of running it
    DumpConfig {
        #[command(subcommand)]
        command: DumpTarget,
    },
}

#[derive(Debug, Subcommand)]
enum DumpTarget {
    Ghz(GhzArgs),
    Verify(VerifyArgs),
    Fusion(FusionArgs),
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceKind {
    PerfectEpr,
    HeraldedEpr,
    Spdc,
    Cavity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BellArg {
    PhiPlus,
    PsiPlus,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DoublePairArg {
    Distinguishable,
    Bosonic,
}

#[derive(Debug, Clone, Args)]
struct SourceArgs {
    #[arg(long, value_enum, default_value = "heralded-epr")]
    source: SourceKind,
    /// Source efficiency
    #[arg(long, default_value_t = 1.0)]
    eta_s: f64,
    /// Relative double-pair strength of the SPDC source
    #[arg(long, default_value_t = 1.0)]
    x: f64,
    /// Cavity vacuum probability (default: 1 - p1 - p2 - p3)
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    p1: f64,
    #[arg(long, default_value_t = 0.0)]
    p2: f64,
    #[arg(long)]
    p3: Option<f64>,
    #[arg(long, value_enum, default_value = "phi-plus")]
    bell_form: BellArg,
    #[arg(long, value_enum, default_value = "distinguishable")]
    double_pair: DoublePairArg,
}

impl SourceArgs {
    fn spec(&self) -> Result<SourceSpec> {
        let spec = match self.source {
            SourceKind::PerfectEpr => SourceSpec::PerfectEpr,
            SourceKind::HeraldedEpr => SourceSpec::heralded(self.eta_s),
            SourceKind::Spdc => SourceSpec::Spdc {
                eta_s: self.eta_s,
                x: self.x,
                double_pair: match self.double_pair {
                    DoublePairArg::Distinguishable => DoublePairModel::Distinguishable,
                    DoublePairArg::Bosonic => DoublePairModel::Bosonic,
                },
            },
            SourceKind::Cavity => {
                let p3 = self.p3.ok_or_else(|| Error::invalid("the cavity source needs --p3"))?;
                let p0 = self.p0.unwrap_or(1.0 - self.p1 - self.p2 - p3);
                SourceSpec::Cavity {
                    p0,
                    p1: self.p1,
                    p2: self.p2,
                    p3,
                    bell_form: match self.bell_form {
                        BellArg::PhiPlus => BellForm::PhiPlus,
                        BellArg::PsiPlus => BellForm::PsiPlus,
                    },
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args)]
struct DetectorArgs {
    /// Detector efficiency
    #[arg(long, default_value_t = 1.0)]
    eta_d: f64,
    /// Use photon-number-resolving detectors instead of bucket detectors
    #[arg(long)]
    number_resolving: bool,
}

impl DetectorArgs {
    fn model(&self) -> Result<DetectorModel> {
        let d = DetectorModel { efficiency: self.eta_d, number_resolving: self.number_resolving };
        d.validate()?;
        Ok(d)
    }
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
    /// Write to this file instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct GhzArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    detector: DetectorArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Circuit layout as JSON (default: the built-in three-source layout)
    #[arg(long, value_name = "PATH")]
    layout: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct VerifyArgs {
    #[arg(value_enum, default_value = "all")]
    suite: Suite,
}

#[derive(Debug, Clone, Args)]
struct FusionArgs {
    /// Per-photon loss rate of both input states
    #[arg(long, default_value_t = 0.0)]
    f: f64,
    #[arg(long, default_value_t = 3)]
    left: usize,
    #[arg(long, default_value_t = 3)]
    right: usize,
    #[command(flatten)]
    detector: DetectorArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
struct SweepArgs {
    #[arg(long, default_value = "epr")]
    scheme: Scheme,
    /// Grid axis as name:min:max:steps, with name one of eta_s, eta_d, p2, p3
    #[arg(long = "grid", value_name = "AXIS", required = true)]
    grid: Vec<Axis>,
    #[arg(long, default_value_t = 1.0)]
    eta_s: f64,
    #[arg(long, default_value_t = 1.0)]
    eta_d: f64,
    #[arg(long)]
    p2: Option<f64>,
    #[arg(long)]
    p3: Option<f64>,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// A fully specified run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Ghz {
        source: SourceSpec,
        detector: DetectorModel,
        #[serde(default = "canonical_layout")]
        layout: GhzCircuitLayout,
        #[serde(default)]
        format: OutputFormat,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
    },
    Verify {
        suite: Suite,
    },
    Fusion {
        f: f64,
        left: usize,
        right: usize,
        detector: DetectorModel,
        #[serde(default)]
        format: OutputFormat,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
    },
    Sweep {
        #[serde(flatten)]
        spec: SweepSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
    },
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn read_layout(path: &Path) -> Result<GhzCircuitLayout> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    let layout: GhzCircuitLayout = serde_json::from_str(&text)?;
    layout.validate()?;
    Ok(layout)
}

fn config_from(target: DumpTarget) -> Result<RunConfig> {
    Ok(match target {
        DumpTarget::Ghz(a) => RunConfig::Ghz {
            source: a.source.spec()?,
            detector: a.detector.model()?,
            layout: match &a.layout {
                Some(p) => read_layout(p)?,
                None => canonical_layout(),
            },
            format: a.output.format,
            out: a.output.out,
        },
        DumpTarget::Verify(a) => RunConfig::Verify { suite: a.suite },
        DumpTarget::Fusion(a) => RunConfig::Fusion {
            f: a.f,
            left: a.left,
            right: a.right,
            detector: a.detector.model()?,
            format: a.output.format,
            out: a.output.out,
        },
        DumpTarget::Sweep(a) => {
            let spec = SweepSpec {
                scheme: a.scheme,
                axes: a.grid,
                fixed: ThresholdParams { eta_s: a.eta_s, eta_d: a.eta_d, f: None, p2: a.p2, p3: a.p3 },
            };
            spec.validate()?;
            RunConfig::Sweep { spec, out: a.out }
        }
    })
}

fn emit(out: &mut dyn Write, path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|source| Error::Io { path: p.display().to_string(), source }),
        None => out.write_all(bytes).map_err(|source| Error::Io { path: "<stdout>".into(), source }),
    }
}

#[derive(Serialize)]
struct GhzOutput<'a> {
    source: &'a SourceSpec,
    detector: &'a DetectorModel,
    probability: f64,
    click_pattern: &'a [ClickOutcome],
    outcome_tree: &'a [(Vec<ClickOutcome>, f64)],
    /// `None` when the post-selection event is impossible.
    report: Option<OutputReport>,
    state: Option<&'a Ensemble>,
}

const GHZ_CSV_HEADER: [&str; 11] =
    ["eta_s", "eta_d", "x", "p0", "p1", "p2", "p3", "probability", "ghz_fidelity", "fitted_f", "residual"];

fn source_columns(spec: &SourceSpec) -> [Option<f64>; 6] {
    match *spec {
        SourceSpec::PerfectEpr => [Some(1.0), None, None, None, None, None],
        SourceSpec::HeraldedEpr { eta_s } => [Some(eta_s), None, None, None, None, None],
        SourceSpec::Spdc { eta_s, x, .. } => [Some(eta_s), Some(x), None, None, None, None],
        SourceSpec::Cavity { p0, p1, p2, p3, .. } => [None, None, Some(p0), Some(p1), Some(p2), Some(p3)],
    }
}

fn csv_bytes(header: &[&str], row: &[Option<f64>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    w.write_record(row.iter().map(|v| v.map(fmt_sig).unwrap_or_default()))?;
    w.into_inner().map_err(|e| Error::Io { path: "<buffer>".into(), source: e.into_error() })
}

fn run_ghz(
    source: &SourceSpec,
    detector: &DetectorModel,
    layout: &GhzCircuitLayout,
    format: OutputFormat,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let result = run_ghz_circuit(&[*source; 3], detector, layout)?;
    let report = match analyze_output(&result) {
        Ok(r) => Some(r),
        Err(Error::ZeroProbability) => None,
        Err(e) => return Err(e),
    };
    let bytes = match format {
        OutputFormat::Json => {
            let doc = GhzOutput {
                source,
                detector,
                probability: result.probability,
                click_pattern: &result.click_pattern,
                outcome_tree: &result.outcome_tree,
                report: report.clone(),
                state: result.state.as_ref(),
            };
            let mut s = serde_json::to_vec_pretty(&doc)?;
            s.push(b'\n');
            s
        }
        OutputFormat::Csv => {
            let [eta_s, x, p0, p1, p2, p3] = source_columns(source);
            let r = report.as_ref();
            csv_bytes(
                &GHZ_CSV_HEADER,
                &[
                    eta_s,
                    Some(detector.efficiency),
                    x,
                    p0,
                    p1,
                    p2,
                    p3,
                    Some(result.probability),
                    r.map(|r| r.ghz_fidelity),
                    r.map(|r| r.fitted_f),
                    r.map(|r| r.residual),
                ],
            )?
        }
    };
    emit(out, path, &bytes)
}

#[derive(Serialize)]
struct FusionOutput<'a> {
    f: f64,
    left: usize,
    right: usize,
    detector: &'a DetectorModel,
    outcomes: &'a [FusionOutcome],
    success_probability: f64,
    fused_qubits: usize,
    ghz_fidelity: Option<f64>,
    fitted_f: Option<f64>,
    residual: Option<f64>,
}

fn run_fusion(
    f: f64,
    left: usize,
    right: usize,
    detector: &DetectorModel,
    format: OutputFormat,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    if left < 2 || right < 2 || left + right > 16 {
        return Err(Error::invalid(format!("fusion needs 2..=16 qubits in total and at least 2 per input, got {left} + {right}")));
    }
    detector.validate()?;
    let modes = |lo: usize, n: usize| -> Vec<ModeId> { (lo..lo + n).map(|m| ModeId(m as u16 + 1)).collect() };
    let left_modes = modes(0, left);
    let right_modes = modes(left, right);
    let a = *left_modes.last().expect("non-empty");
    let b = right_modes[0];
    let l = id_ghz(&IdGhzSpec::new(f, left_modes.clone()))?;
    let r = id_ghz(&IdGhzSpec::new(f, right_modes.clone()))?;
    let outcomes = fuse_type_ii(&l, &r, a, b, detector)?;
    let fused_modes: Vec<ModeId> = left_modes.iter().chain(&right_modes).copied().filter(|&m| m != a && m != b).collect();
    let fused_qubits = fused_modes.len();
    let (p, fit, fid) = match success_state(&outcomes)? {
        Some((p, s)) => (p, Some(fit_id_ghz(&s, fused_qubits)?), Some(fidelity_with_pure(&s, &ghz_pure(&fused_modes)))),
        None => (0.0, None, None),
    };
    let bytes = match format {
        OutputFormat::Json => {
            let doc = FusionOutput {
                f,
                left,
                right,
                detector,
                outcomes: &outcomes,
                success_probability: p,
                fused_qubits,
                ghz_fidelity: fid,
                fitted_f: fit.map(|x| x.f),
                residual: fit.map(|x| x.residual),
            };
            let mut s = serde_json::to_vec_pretty(&doc)?;
            s.push(b'\n');
            s
        }
        OutputFormat::Csv => csv_bytes(
            &["f", "eta_d", "left", "right", "success_probability", "ghz_fidelity", "fitted_f", "residual"],
            &[
                Some(f),
                Some(detector.efficiency),
                Some(left as f64),
                Some(right as f64),
                Some(p),
                fid,
                fit.map(|x| x.f),
                fit.map(|x| x.residual),
            ],
        )?,
    };
    emit(out, path, &bytes)
}

/// Runs a config and returns the exit code.
pub fn execute(config: &RunConfig, out: &mut dyn Write) -> Result<u8> {
    match config {
        RunConfig::Ghz { source, detector, layout, format, out: path } => {
            layout.validate()?;
            run_ghz(source, detector, layout, *format, path.as_deref(), out)?;
        }
        RunConfig::Verify { suite } => {
            let results = run_suite(*suite)?;
            let failed = results.iter().filter(|r| !r.passed).count();
            let mut text = String::new();
            for r in &results {
                text.push_str(&format!("{r}\n"));
            }
            text.push_str(&format!("{} passed, {failed} failed\n", results.len() - failed));
            emit(out, None, text.as_bytes())?;
            if failed > 0 {
                return Ok(EXIT_CHECK_FAILED);
            }
        }
        RunConfig::Fusion { f, left, right, detector, format, out: path } => {
            run_fusion(*f, *left, *right, detector, *format, path.as_deref(), out)?;
        }
        RunConfig::Sweep { spec, out: path } => {
            let rows = sweep(spec)?;
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            emit(out, path.as_deref(), &buf)?;
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Diagnostics go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = (|| -> Result<u8> {
        let config = match (cli.config, cli.command) {
            (Some(_), Some(_)) => return Err(Error::invalid("--config cannot be combined with a subcommand")),
            (Some(path), None) => RunConfig::load(&path)?,
            (None, Some(Command::DumpConfig { command })) => {
                let mut s = serde_json::to_vec_pretty(&config_from(command)?)?;
                s.push(b'\n');
                emit(out, None, &s)?;
                return Ok(EXIT_OK);
            }
            (None, Some(cmd)) => config_from(match cmd {
                Command::Ghz(a) => DumpTarget::Ghz(a),
                Command::Verify(a) => DumpTarget::Verify(a),
                Command::Fusion(a) => DumpTarget::Fusion(a),
                Command::Sweep(a) => DumpTarget::Sweep(a),
                Command::DumpConfig { .. } => unreachable!("handled above"),
            })?,
            (None, None) => return Err(Error::invalid("no subcommand given (try --help)")),
        };
        execute(&config, out)
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

/// Entry point for the binary.
pub fn main() -> std::process::ExitCode {
    let code = run(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::ExitCode::from(code)
}
