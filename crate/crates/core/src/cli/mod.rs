//! Command-line front end.
//!
//! Exit codes: 0 on completion (a diverged classification is a result),
//! 1 when a suite comparison fails, 2 on invalid input.

pub mod manifest;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::assembly::{assemble, ElementConfig, SolverOptions, DEFAULT_TOL};
use crate::error::WgError;
use crate::mesh::{build_mesh, MeshKind};
use crate::polyspace::GradientSpaceDesc;
use crate::study::{emit_table, fmt_real, run_study, solution_by_name, ConvergenceReport, TableFormat};
use crate::weakop::StabilizerExponent;

pub use manifest::{parse_manifest, ManifestEntry, ManifestError, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "wglab", version, about = "Weak Galerkin element convergence laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one element study and write its per-level CSV.
    Run(RunArgs),
    /// Run every entry of a manifest and compare against expected rates.
    Suite(SuiteArgs),
    /// Print the plain-text mesh dump.
    Mesh(MeshArgs),
    /// Print the assembled system matrix in coordinate text.
    System(SystemArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Summary,
    Markdown,
}

impl From<OutputFormat> for TableFormat {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => TableFormat::Csv,
            OutputFormat::Summary => TableFormat::Summary,
            OutputFormat::Markdown => TableFormat::Markdown,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ElementArgs {
    #[arg(long, default_value = "rect")]
    pub mesh: String,
    #[arg(long)]
    pub l: usize,
    #[arg(long)]
    pub s: usize,
    /// `P:<m>` or `RT:<m>`.
    #[arg(long)]
    pub grad: String,
    /// `-1`, `0`, `1` or `inf`.
    #[arg(long, allow_hyphen_values = true)]
    pub j: String,
}

impl ElementArgs {
    fn resolve(&self) -> Result<(MeshKind, ElementConfig), WgError> {
        let mesh: MeshKind = self.mesh.parse()?;
        let grad: GradientSpaceDesc = self.grad.parse()?;
        let j: StabilizerExponent = self.j.parse()?;
        Ok((mesh, ElementConfig::new(self.l, self.s, grad, j)?))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long = "solver-tol", default_value_t = DEFAULT_TOL)]
    pub solver_tol: f64,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Skip the random right-hand-side singularity probe.
    #[arg(long = "no-probe")]
    pub no_probe: bool,
}

impl SolverArgs {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver_tol,
            max_iter: self.max_iter,
            singularity_probe: !self.no_probe,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub element: ElementArgs,
    /// Level range `lo:hi`.
    #[arg(long, default_value = "3:6")]
    pub levels: String,
    #[arg(long, default_value = "sinsin")]
    pub solution: String,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Expected `r1,r2` (use `-inf` for divergence); prints a comparison line.
    #[arg(long, allow_hyphen_values = true)]
    pub expect: Option<String>,
    #[arg(long, default_value_t = manifest::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SuiteArgs {
    pub manifest: PathBuf,
    /// Directory for table CSVs and the summary; defaults to the manifest's directory.
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    /// Overrides the manifest's `tol` header.
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MeshArgs {
    #[arg(long, default_value = "rect")]
    pub mesh: String,
    #[arg(long)]
    pub level: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    #[command(flatten)]
    pub element: ElementArgs,
    #[arg(long)]
    pub level: usize,
    #[arg(long, default_value = "sinsin")]
    pub solution: String,
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run(a) => run_single(&a),
        Command::Suite(a) => run_suite(&a),
        Command::Mesh(a) => dump_mesh(&a),
        Command::System(a) => dump_system(&a),
    }
}

fn invalid(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    2
}

/// Writes through a temporary sibling and renames into place.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

fn parse_expect(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `r1,r2`")?;
    Ok((manifest::parse_rate(a.trim())?, manifest::parse_rate(b.trim())?))
}

pub fn run_single(args: &RunArgs) -> i32 {
    let (mesh, config) = match args.element.resolve() {
        Ok(v) => v,
        Err(e) => return invalid(e),
    };
    let (lo, hi) = match manifest::parse_levels(&args.levels) {
        Ok(v) => v,
        Err(e) => return invalid(e),
    };
    let solution = match solution_by_name(&args.solution) {
        Ok(s) => s,
        Err(e) => return invalid(e),
    };
    let expected = match args.expect.as_deref().map(parse_expect).transpose() {
        Ok(v) => v,
        Err(e) => return invalid(e),
    };
    let report = match run_study(&config, mesh, lo..=hi, &solution, &args.solver.options()) {
        Ok(r) => r,
        Err(e) => return invalid(e),
    };
    let text = emit_table(std::slice::from_ref(&report), args.format.into());
    match &args.out {
        Some(path) => {
            if let Err(e) = write_atomic(path, &text) {
                return invalid(format!("cannot write {}: {e}", path.display()));
            }
        }
        None => print!("{text}"),
    }
    for row in &report.rows {
        if let Some(why) = &row.solve.breakdown {
            eprintln!(
                "level {}: {why} after {} iterations (residual {:.3e})",
                row.level, row.solve.iterations, row.solve.residual
            );
        }
    }
    let (r1, r2) = report.summary_rates();
    eprintln!(
        "{config} on {mesh}: r1={} r2={} ({})",
        fmt_real(r1),
        fmt_real(r2),
        report.classification.as_str()
    );
    if let Some(exp) = expected {
        let verdict = if report.matches(exp, args.tol) { "PASS" } else { "FAIL" };
        eprintln!("{verdict} expected r1={} r2={} tol={}", fmt_real(exp.0), fmt_real(exp.1), args.tol);
    }
    0
}

/// Outcome of one manifest entry.
#[derive(Debug, Clone)]
pub struct EntryOutcome {
    pub entry: ManifestEntry,
    pub report: ConvergenceReport,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Warn => "WARN",
            Verdict::Fail => "FAIL",
        }
    }
}

/// Runs every entry (in parallel) and returns the outcomes in manifest order.
pub fn execute_manifest(
    manifest: &RunManifest,
    tol: f64,
    opts: &SolverOptions,
) -> Result<Vec<EntryOutcome>, WgError> {
    manifest
        .entries
        .par_iter()
        .map(|entry| {
            let solution = solution_by_name(&entry.solution)?;
            let report = run_study(&entry.config, entry.mesh, entry.levels.0..=entry.levels.1, &solution, opts)?;
            let verdict = if report.matches(entry.expected, tol) {
                Verdict::Pass
            } else if entry.soft {
                Verdict::Warn
            } else {
                Verdict::Fail
            };
            Ok(EntryOutcome {
                entry: entry.clone(),
                report,
                verdict,
            })
        })
        .collect()
}

pub const SUITE_SUMMARY_HEADER: &str =
    "line,table,mesh,element_l,element_s,grad_family,grad_degree,j,levels,expected_r1,expected_r2,r1,r2,classification,verdict";

/// Table CSVs keyed by output path (manifest order) and the summary CSV.
pub fn render_outputs(outcomes: &[EntryOutcome]) -> (Vec<(PathBuf, String)>, String) {
    let mut tables: Vec<(PathBuf, Vec<ConvergenceReport>)> = Vec::new();
    for o in outcomes {
        match tables.iter_mut().find(|(p, _)| *p == o.entry.out) {
            Some((_, v)) => v.push(o.report.clone()),
            None => tables.push((o.entry.out.clone(), vec![o.report.clone()])),
        }
    }
    let rendered = tables
        .into_iter()
        .map(|(p, reports)| (p, emit_table(&reports, TableFormat::Csv)))
        .collect();

    let mut summary = String::from(SUITE_SUMMARY_HEADER);
    summary.push('\n');
    for o in outcomes {
        let (r1, r2) = o.report.summary_rates();
        let c = &o.entry.config;
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{}:{},{},{},{},{},{},{}",
            o.entry.line,
            o.entry.out.display(),
            o.entry.mesh,
            c.l,
            c.s,
            c.grad.family_tag(),
            c.grad.degree,
            c.j,
            o.entry.levels.0,
            o.entry.levels.1,
            fmt_real(o.entry.expected.0),
            fmt_real(o.entry.expected.1),
            fmt_real(r1),
            fmt_real(r2),
            o.report.classification.as_str(),
            o.verdict.as_str()
        );
    }
    (rendered, summary)
}

pub fn run_suite(args: &SuiteArgs) -> i32 {
    let text = match fs::read_to_string(&args.manifest) {
        Ok(t) => t,
        Err(e) => return invalid(format!("cannot read {}: {e}", args.manifest.display())),
    };
    let manifest = match parse_manifest(&text) {
        Ok(m) => m,
        Err(e) => return invalid(format!("{}: {e}", args.manifest.display())),
    };
    let out_dir = args.out_dir.clone().unwrap_or_else(|| {
        args.manifest
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    });
    if let Err(e) = fs::create_dir_all(&out_dir) {
        return invalid(format!("cannot create {}: {e}", out_dir.display()));
    }
    let tol = args.tol.unwrap_or(manifest.tol);
    let outcomes = match execute_manifest(&manifest, tol, &args.solver.options()) {
        Ok(o) => o,
        Err(e) => return invalid(e),
    };
    let (tables, summary) = render_outputs(&outcomes);
    for (path, csv) in &tables {
        let target = out_dir.join(path);
        if let Err(e) = write_atomic(&target, csv) {
            return invalid(format!("cannot write {}: {e}", target.display()));
        }
    }
    let summary_path = out_dir.join(format!("{}_summary.csv", manifest.suite));
    if let Err(e) = write_atomic(&summary_path, &summary) {
        return invalid(format!("cannot write {}: {e}", summary_path.display()));
    }
    let mut failed = 0;
    for o in &outcomes {
        let (r1, r2) = o.report.summary_rates();
        println!(
            "{} line {:>3} {} {} on {}: r1={} r2={} expected {} {}",
            o.verdict.as_str(),
            o.entry.line,
            o.entry.out.display(),
            o.entry.config,
            o.entry.mesh,
            short(r1),
            short(r2),
            short(o.entry.expected.0),
            short(o.entry.expected.1)
        );
        if o.verdict == Verdict::Fail {
            failed += 1;
        }
    }
    println!(
        "{}: {} entries, {} failed, summary in {}",
        manifest.suite,
        outcomes.len(),
        failed,
        summary_path.display()
    );
    i32::from(failed > 0)
}

fn short(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.2}")
    } else {
        fmt_real(v)
    }
}

fn dump_mesh(args: &MeshArgs) -> i32 {
    let kind: MeshKind = match args.mesh.parse() {
        Ok(k) => k,
        Err(e) => return invalid(e),
    };
    match build_mesh(kind, args.level) {
        Ok(m) => {
            print!("{}", m.dump());
            0
        }
        Err(e) => invalid(e),
    }
}

fn dump_system(args: &SystemArgs) -> i32 {
    let run = || -> Result<String, WgError> {
        let (kind, config) = args.element.resolve()?;
        let mesh = build_mesh(kind, args.level)?;
        let sol = solution_by_name(&args.solution)?;
        let sys = assemble(&mesh, &config, &sol.f, &sol.u)?;
        Ok(sys.matrix.to_coordinate_text())
    };
    match run() {
        Ok(t) => {
            print!("{t}");
            0
        }
        Err(e) => invalid(e),
    }
}
