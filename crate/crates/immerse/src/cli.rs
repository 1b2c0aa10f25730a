//! Command-line driver: `check`, `integrate`, `family`, `s2xs2` and `fixtures`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use immerse_core::compat::{compatibility_report, describe_failure};
use immerse_core::dataset::GeometricDataset;
use immerse_core::error::ReconstructError;
use immerse_core::family::{generate_family, max_trace};
use immerse_core::fixtures::{generate, list_fixtures, FixtureBundle, FixtureGrid, FixtureName};
use immerse_core::immersion::{reconstruct, ImmersionField};
use immerse_core::report::{CompatReport, Profile, ResidualField, Tolerances};
use immerse_core::s2xs2::{
    check_complex_relations, classify_surface, decompose_complex, gauss_curvature_s2s2, kahler_functions,
};
use serde::Serialize;
use thiserror::Error;

use crate::io::{
    csv_table, dataset_to_json, fmt_f64, immersion_csv, immersion_obj, load_dataset, obj_projections,
    to_json_pretty, write_text, IoError,
};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_VERDICT: u8 = 2;
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_INTERNAL: u8 = 4;

const DEFAULT_CELLS: usize = 32;

#[derive(Debug, Parser)]
#[command(name = "immerse", version, about = "Check, integrate and classify submanifold data in products of space forms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Check,
    Integrate,
    Family,
    S2xS2,
    Fixtures,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the compatibility checks and write the verdict report.
    Check(Options),
    /// Reconstruct the immersion and write meshes plus its verification report.
    Integrate(Options),
    /// Reconstruct the associated family of a minimal surface at the given angles.
    Family(Options),
    /// Complex-structure analysis of a surface in S²×S².
    #[command(name = "s2xs2")]
    S2xS2(Options),
    /// Dump fixture datasets as JSON.
    Fixtures(Options),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum ExportFormat {
    Obj,
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Dataset JSON file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Tolerance profile: default or strict.
    #[arg(long, default_value = "default")]
    pub profile: String,
    /// Comma-separated angles for `family`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
    /// Base node as `iu,iv` (default: chart centre).
    #[arg(long)]
    pub base: Option<String>,
    /// Named fixture used as input.
    #[arg(long)]
    pub fixture: Option<String>,
    /// Fixture grid as `<Nu>x<Nv>` cells.
    #[arg(long)]
    pub grid: Option<String>,
    /// Artifact formats (default: all).
    #[arg(long, value_delimiter = ',', value_enum)]
    pub export: Vec<ExportFormat>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    File(PathBuf),
    Fixture(FixtureName),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub input: InputSource,
    pub out: PathBuf,
    pub profile: Profile,
    pub grid: Option<(usize, usize)>,
    pub thetas: Vec<f64>,
    pub base: Option<(usize, usize)>,
    pub exports: Vec<ExportFormat>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }

    fn write(e: IoError) -> Self {
        CliError::Internal(format!("writing output: {e}"))
    }
}

fn parse_pair(s: &str, sep: char, what: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("{what}: expected two integers separated by `{sep}`, found `{s}`"));
    let (a, b) = s.split_once(sep).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let (command, o) = match cli.command {
            Command::Check(o) => (CommandKind::Check, o),
            Command::Integrate(o) => (CommandKind::Integrate, o),
            Command::Family(o) => (CommandKind::Family, o),
            Command::S2xS2(o) => (CommandKind::S2xS2, o),
            Command::Fixtures(o) => (CommandKind::Fixtures, o),
        };
        let profile = Profile::parse(&o.profile)
            .ok_or_else(|| CliError::Usage(format!("--profile must be default or strict, found `{}`", o.profile)))?;
        let input = match (o.input, o.fixture) {
            (Some(_), Some(_)) => return Err(CliError::Usage("--input and --fixture are exclusive".into())),
            (Some(p), None) => InputSource::File(p),
            (None, Some(name)) => InputSource::Fixture(FixtureName::parse(&name).map_err(CliError::input)?),
            (None, None) => InputSource::None,
        };
        if input == InputSource::None && command != CommandKind::Fixtures {
            return Err(CliError::Usage("one of --input or --fixture is required".into()));
        }
        let grid = o.grid.as_deref().map(|g| parse_pair(g, 'x', "--grid")).transpose()?;
        if grid.is_some() && matches!(input, InputSource::File(_)) {
            return Err(CliError::Usage("--grid applies to fixtures only".into()));
        }
        if command == CommandKind::Family && o.theta.is_empty() {
            return Err(CliError::Usage("family requires a nonempty --theta list".into()));
        }
        if o.theta.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Usage("--theta values must be finite".into()));
        }
        let base = o.base.as_deref().map(|b| parse_pair(b, ',', "--base")).transpose()?;
        let mut exports = if o.export.is_empty() {
            vec![ExportFormat::Obj, ExportFormat::Csv, ExportFormat::Json]
        } else {
            o.export
        };
        exports.sort();
        exports.dedup();
        Ok(Self {
            command,
            input,
            out: o.out,
            profile,
            grid,
            thetas: o.theta,
            base,
            exports,
        })
    }

    fn exports(&self, f: ExportFormat) -> bool {
        self.exports.contains(&f)
    }

    fn fixture_grid(&self) -> FixtureGrid {
        let (cu, cv) = self.grid.unwrap_or((DEFAULT_CELLS, DEFAULT_CELLS));
        FixtureGrid {
            cells_u: cu,
            cells_v: cv,
            periodic_u: false,
            periodic_v: false,
        }
    }
}

/// Result of a successful run: the combined verdict and the files written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub artifacts: Vec<PathBuf>,
    pub messages: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.passed {
            EXIT_PASS
        } else {
            EXIT_VERDICT
        }
    }
}

struct Source {
    label: String,
    dataset: GeometricDataset,
    bundle: Option<FixtureBundle>,
}

fn load_source(cfg: &RunConfig) -> Result<Source, CliError> {
    match &cfg.input {
        InputSource::File(path) => Ok(Source {
            label: path.display().to_string(),
            dataset: load_dataset(path).map_err(CliError::input)?,
            bundle: None,
        }),
        InputSource::Fixture(name) => {
            let bundle = generate(*name, cfg.fixture_grid()).map_err(CliError::input)?;
            Ok(Source {
                label: bundle.name.clone(),
                dataset: bundle.dataset.clone(),
                bundle: Some(bundle),
            })
        }
        InputSource::None => Err(CliError::Usage("no input".into())),
    }
}

fn base_node(cfg: &RunConfig, ds: &GeometricDataset) -> Result<(usize, (usize, usize)), CliError> {
    let c = &ds.chart;
    let (iu, iv) = cfg.base.unwrap_or((c.nu / 2, c.nv / 2));
    if iu >= c.nu || iv >= c.nv {
        return Err(CliError::Input(format!(
            "--base ({iu}, {iv}) outside the {} x {} node grid",
            c.nu, c.nv
        )));
    }
    Ok((c.node(iu, iv), (iu, iv)))
}

struct Writer<'a> {
    dir: &'a Path,
    outcome: Outcome,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Self {
        Self {
            dir,
            outcome: Outcome {
                passed: true,
                artifacts: Vec::new(),
                messages: Vec::new(),
            },
        }
    }

    fn file(&mut self, name: &str, text: &str) -> Result<String, CliError> {
        let path = self.dir.join(name);
        write_text(&path, text).map_err(CliError::write)?;
        self.outcome.artifacts.push(path);
        Ok(name.to_string())
    }

    fn verdict(&mut self, what: &str, report: &CompatReport) {
        self.outcome.passed &= report.passed();
        match describe_failure(report) {
            Some(worst) => self.outcome.messages.push(format!("{what}: FAIL ({worst})")),
            None => self.outcome.messages.push(format!("{what}: pass")),
        }
    }

    fn meshes(&mut self, cfg: &RunConfig, stem: &str, im: &ImmersionField) -> Result<Vec<String>, CliError> {
        let mut files = Vec::new();
        if cfg.exports(ExportFormat::Obj) {
            for (suffix, coords) in obj_projections(&im.spec) {
                let name = if suffix.is_empty() {
                    format!("{stem}.obj")
                } else {
                    format!("{stem}_{suffix}.obj")
                };
                files.push(self.file(&name, &immersion_obj(im, &coords))?);
            }
        }
        if cfg.exports(ExportFormat::Csv) {
            files.push(self.file(&format!("{stem}.csv"), &immersion_csv(im))?);
        }
        Ok(files)
    }
}

fn reconstruct_error(e: ReconstructError) -> CliError {
    match e {
        ReconstructError::Frame(f) => CliError::input(f),
        ReconstructError::Alignment(a) => CliError::Internal(format!("alignment to ground truth: {a}")),
    }
}

#[derive(Serialize)]
struct CheckDoc<'a> {
    source: &'a str,
    profile: &'static str,
    report: &'a CompatReport,
}

fn run_check(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let src = load_source(cfg)?;
    let report = compatibility_report(&src.dataset, &cfg.profile.tolerances()).map_err(CliError::input)?;
    w.verdict("compatibility", &report);
    if cfg.exports(ExportFormat::Json) {
        let doc = CheckDoc {
            source: &src.label,
            profile: cfg.profile.name(),
            report: &report,
        };
        w.file("report.json", &to_json_pretty(&doc))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FrameDiagnostics {
    gram_drift: f64,
    eigen_drift: f64,
    sweep_discrepancy: f64,
    flat_sweep_discrepancy: f64,
}

#[derive(Serialize)]
struct IntegrateDoc<'a> {
    source: &'a str,
    profile: &'static str,
    base_node: [usize; 2],
    compatibility: &'a CompatReport,
    verification: &'a CompatReport,
    frame: FrameDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    alignment_residual: Option<f64>,
    files: Vec<String>,
}

fn run_integrate(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let src = load_source(cfg)?;
    let tol = cfg.profile.tolerances();
    let (node, base) = base_node(cfg, &src.dataset)?;
    let compat = compatibility_report(&src.dataset, &tol).map_err(CliError::input)?;
    w.verdict("compatibility", &compat);
    let truth = src.bundle.as_ref().map(|b| &b.truth);
    let rec = reconstruct(&src.dataset, node, None, truth, &tol).map_err(reconstruct_error)?;
    w.verdict("verification", &rec.report);
    let files = w.meshes(cfg, "immersion", &rec.immersion)?;
    if cfg.exports(ExportFormat::Json) {
        let doc = IntegrateDoc {
            source: &src.label,
            profile: cfg.profile.name(),
            base_node: [base.0, base.1],
            compatibility: &compat,
            verification: &rec.report,
            frame: FrameDiagnostics {
                gram_drift: rec.frame.gram_drift,
                eigen_drift: rec.frame.eigen_drift,
                sweep_discrepancy: rec.frame.sweep_discrepancy,
                flat_sweep_discrepancy: rec.flat_sweep_discrepancy,
            },
            alignment_residual: rec.alignment.as_ref().map(|a| a.residual),
            files,
        };
        w.file("verification.json", &to_json_pretty(&doc))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MemberDoc {
    index: usize,
    theta: f64,
    max_trace: f64,
    passed: bool,
    files: Vec<String>,
    verification: CompatReport,
}

#[derive(Serialize)]
struct ManifestDoc<'a> {
    source: &'a str,
    profile: &'static str,
    base_node: [usize; 2],
    passed: bool,
    members: Vec<MemberDoc>,
}

fn run_family(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let src = load_source(cfg)?;
    let tol = cfg.profile.tolerances();
    let (node, base) = base_node(cfg, &src.dataset)?;
    let family = generate_family(&src.dataset, &cfg.thetas, node, &tol).map_err(CliError::input)?;
    let mut members = Vec::with_capacity(family.len());
    for (index, m) in family.iter().enumerate() {
        w.verdict(&format!("theta[{index}] = {}", m.theta), &m.reconstruction.report);
        let (max_trace, _) = max_trace(&m.rotated.dataset).map_err(CliError::input)?;
        let files = w.meshes(cfg, &format!("theta_{index:02}"), &m.reconstruction.immersion)?;
        members.push(MemberDoc {
            index,
            theta: m.theta,
            max_trace,
            passed: m.reconstruction.report.passed(),
            files,
            verification: m.reconstruction.report.clone(),
        });
    }
    if cfg.exports(ExportFormat::Json) {
        let doc = ManifestDoc {
            source: &src.label,
            profile: cfg.profile.name(),
            base_node: [base.0, base.1],
            passed: w.outcome.passed,
            members,
        };
        w.file("manifest.json", &to_json_pretty(&doc))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    min: f64,
    max: f64,
    mean: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        Self {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: values.iter().sum::<f64>() / n,
        }
    }
}

#[derive(Serialize)]
struct S2xS2Doc<'a> {
    source: &'a str,
    profile: &'static str,
    immersion: &'static str,
    classification_tolerance: f64,
    classes: BTreeMap<String, usize>,
    gauss_curvature: Summary,
    closed_formula_discrepancy: &'a ResidualField,
    relations: &'a CompatReport,
    curvature_equations: &'a CompatReport,
}

fn run_s2xs2(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let src = load_source(cfg)?;
    if !src.dataset.spec.is_s2_x_s2() {
        return Err(CliError::Input("s2xs2 requires a dataset targeting S²×S²".into()));
    }
    let tol: Tolerances = cfg.profile.tolerances();
    let (immersion, kind) = match &src.bundle {
        Some(b) => (b.truth.clone(), "ground_truth"),
        None => {
            let (node, _) = base_node(cfg, &src.dataset)?;
            let rec = reconstruct(&src.dataset, node, None, None, &tol).map_err(reconstruct_error)?;
            (rec.immersion, "reconstructed")
        }
    };
    let cd = decompose_complex(&immersion).map_err(CliError::input)?;
    let relations = check_complex_relations(&cd, &src.dataset, &tol).map_err(CliError::input)?;
    w.verdict("complex relations", &relations);
    let curvature = gauss_curvature_s2s2(&cd, &src.dataset, &tol).map_err(CliError::input)?;
    w.verdict("complex curvature equations", &curvature.report);
    w.outcome.messages.push(format!(
        "closed Gauss formula discrepancy: max {:e}",
        curvature.closed_discrepancy.max
    ));

    let classes = classify_surface(&cd, tol.differential);
    let kahler = kahler_functions(&cd);
    let chart = &cd.chart;
    let mut counts = BTreeMap::new();
    for c in &classes {
        *counts.entry(c.labels().join(";")).or_insert(0) += 1;
    }
    if cfg.exports(ExportFormat::Csv) {
        let node_ix = |k: usize| {
            let (iu, iv) = chart.indices(k);
            [iu.to_string(), iv.to_string()]
        };
        let yes = |b: bool| u8::from(b).to_string();
        let rows = classes.iter().enumerate().map(|(k, c)| {
            let mut r = node_ix(k).to_vec();
            r.extend([yes(c.complex[0]), yes(c.complex[1]), yes(c.lagrangian[0]), yes(c.lagrangian[1])]);
            r.push(c.labels().join(";"));
            r
        });
        let header = ["iu", "iv", "complex_j1", "complex_j2", "lagrangian_j1", "lagrangian_j2", "labels"];
        w.file("classification.csv", &csv_table(&header, rows))?;
        let rows = kahler.iter().enumerate().map(|(k, c)| {
            let mut r = node_ix(k).to_vec();
            r.extend([fmt_f64(c[0]), fmt_f64(c[1])]);
            r
        });
        w.file("kahler.csv", &csv_table(&["iu", "iv", "c1", "c2"], rows))?;
        let rows = (0..chart.num_nodes()).map(|k| {
            let mut r = node_ix(k).to_vec();
            let (g, p) = (curvature.k_general[k], curvature.k_closed[k]);
            r.extend([fmt_f64(g), fmt_f64(p), fmt_f64(p - g)]);
            r
        });
        w.file("curvature.csv", &csv_table(&["iu", "iv", "k_general", "k_closed", "discrepancy"], rows))?;
    }
    if cfg.exports(ExportFormat::Json) {
        let doc = S2xS2Doc {
            source: &src.label,
            profile: cfg.profile.name(),
            immersion: kind,
            classification_tolerance: tol.differential,
            classes: counts,
            gauss_curvature: Summary::of(&curvature.k_general),
            closed_formula_discrepancy: &curvature.closed_discrepancy,
            relations: &relations,
            curvature_equations: &curvature.report,
        };
        w.file("s2xs2_report.json", &to_json_pretty(&doc))?;
    }
    Ok(())
}

/// File stem for a fixture label: alphanumerics kept, runs of anything else become `_`.
pub fn file_stem(label: &str) -> String {
    let mut out = String::new();
    for ch in label.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn run_fixtures(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let names = match &cfg.input {
        InputSource::Fixture(name) => vec![*name],
        InputSource::None => list_fixtures()
            .iter()
            .map(|(label, _)| FixtureName::parse(label))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Internal(e.to_string()))?,
        InputSource::File(_) => return Err(CliError::Usage("fixtures takes --fixture, not --input".into())),
    };
    if !cfg.exports(ExportFormat::Json) {
        return Ok(());
    }
    for name in names {
        let bundle = generate(name, cfg.fixture_grid()).map_err(CliError::input)?;
        w.file(&format!("{}.json", file_stem(&bundle.name)), &dataset_to_json(&bundle.dataset))?;
        w.outcome.messages.push(format!("{}: written", bundle.name));
    }
    Ok(())
}

/// Runs one pipeline and writes its artifacts under `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut w = Writer::new(&cfg.out);
    match cfg.command {
        CommandKind::Check => run_check(cfg, &mut w)?,
        CommandKind::Integrate => run_integrate(cfg, &mut w)?,
        CommandKind::Family => run_family(cfg, &mut w)?,
        CommandKind::S2xS2 => run_s2xs2(cfg, &mut w)?,
        CommandKind::Fixtures => run_fixtures(cfg, &mut w)?,
    }
    Ok(w.outcome)
}

/// Parses arguments, runs, reports on stdout/stderr and returns the exit code.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
        }
    };
    let result = RunConfig::from_cli(cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(outcome) => {
            for m in &outcome.messages {
                println!("{m}");
            }
            for a in &outcome.artifacts {
                println!("wrote {}", a.display());
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> ExitCode {
    ExitCode::from(main_with(std::env::args_os()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> Result<RunConfig, CliError> {
        let mut full = vec!["immerse"];
        full.extend_from_slice(args);
        RunConfig::from_cli(Cli::try_parse_from(full).map_err(|e| CliError::Usage(e.to_string()))?)
    }

    #[test]
    fn parses_full_flag_set() {
        let cfg = config(&[
            "family", "--fixture", "helicoid", "--theta", "0,-1.5", "--base", "3,4", "--grid", "16x8",
            "--profile", "strict", "--export", "obj,json", "--out", "x",
        ])
        .unwrap();
        assert_eq!(cfg.command, CommandKind::Family);
        assert_eq!(cfg.input, InputSource::Fixture(FixtureName::Helicoid));
        assert_eq!(cfg.thetas, [0.0, -1.5]);
        assert_eq!(cfg.base, Some((3, 4)));
        assert_eq!(cfg.grid, Some((16, 8)));
        assert_eq!(cfg.profile, Profile::Strict);
        assert_eq!(cfg.exports, [ExportFormat::Obj, ExportFormat::Json]);
        assert_eq!(cfg.out, PathBuf::from("x"));
    }

    #[test]
    fn defaults() {
        let cfg = config(&["check", "--fixture", "slice"]).unwrap();
        assert_eq!(cfg.profile, Profile::Default);
        assert_eq!(cfg.exports.len(), 3);
        assert_eq!(cfg.out, PathBuf::from("out"));
        assert_eq!(cfg.fixture_grid(), FixtureGrid::square(DEFAULT_CELLS));
    }

    #[test]
    fn rejects_invalid_configs() {
        let usage = |args: &[&str]| matches!(config(args), Err(CliError::Usage(_)));
        assert!(usage(&["family", "--fixture", "helicoid"]));
        assert!(usage(&["check", "--fixture", "slice", "--profile", "lenient"]));
        assert!(usage(&["check"]));
        assert!(usage(&["check", "--fixture", "slice", "--input", "a.json"]));
        assert!(usage(&["check", "--input", "a.json", "--grid", "8x8"]));
        assert!(usage(&["check", "--fixture", "slice", "--grid", "8by8"]));
        assert!(usage(&["check", "--fixture", "slice", "--base", "3"]));
        assert!(matches!(config(&["check", "--fixture", "torus"]), Err(CliError::Input(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), EXIT_INPUT);
        assert_eq!(CliError::Input(String::new()).exit_code(), EXIT_INPUT);
        assert_eq!(CliError::Internal(String::new()).exit_code(), EXIT_INTERNAL);
        let mut o = Outcome {
            passed: true,
            artifacts: vec![],
            messages: vec![],
        };
        assert_eq!(o.exit_code(), EXIT_PASS);
        o.passed = false;
        assert_eq!(o.exit_code(), EXIT_VERDICT);
    }

    #[test]
    fn stems() {
        assert_eq!(file_stem("product_of_curves(0.5,1)"), "product_of_curves_0_5_1");
        assert_eq!(file_stem("slice"), "slice");
    }

    #[test]
    fn base_outside_grid_is_input_error() {
        let cfg = config(&["integrate", "--fixture", "plane", "--grid", "8x8", "--base", "9,0"]).unwrap();
        assert!(matches!(run(&cfg), Err(CliError::Input(_))));
    }

    #[test]
    fn s2xs2_rejects_other_targets() {
        let cfg = config(&["s2xs2", "--fixture", "helicoid", "--grid", "8x8"]).unwrap();
        assert!(matches!(run(&cfg), Err(CliError::Input(_))));
    }
}
