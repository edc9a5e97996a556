//! Command-line front end: parses problem files, dispatches to the
//! library, and emits deterministic reports.
//!
//! Exit codes: 0 subnormal / pass, 1 not subnormal / fail, 2 evidence or
//! undecided, 3 processing error, 64 usage error.

pub mod builtin;
pub mod problem;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use problem::{parse_problem, resolve, Overrides, ProblemFile, ResolvedProblem};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use treeshift::classify::{classify, ClassifyOptions, ReportFormat};
use treeshift::consistency::{
    moments_match, nonzero_weight_specialization_check, propagate, verify_system,
    ConsistencyReport, MomentsMatchReport, SpecializationReport,
};
use treeshift::moments::{
    carleman_terms, divergence_certificate, is_stieltjes_prefix, theta_lower_bound,
    DivergenceVerdict, MomentPrefix, StieltjesReport,
};
use treeshift::render_report;
use treeshift::scalar::ExtReal;
use treeshift::tree::VertexId;
use treeshift::truncate::{
    convergence_report, truncate_triplet, verify_truncated, ConvergenceTable, TruncationReport,
};
use treeshift::{MeasureSystem, Scalar};

pub const EXIT_EVIDENCE: i32 = 2;
pub const EXIT_ERROR: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "treeshift",
    version,
    about = "Subnormality verification for weighted shifts on directed trees",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct CommonArgs {
    /// Problem file; reads stdin when absent or "-"
    #[arg(short = 'f', long = "file")]
    file: Option<PathBuf>,
    /// Analysis order N
    #[arg(short = 'N', long = "order")]
    order: Option<usize>,
    /// Numerical tolerance for floating comparisons
    #[arg(long)]
    tol: Option<f64>,
    /// Materialization depth (default: N + 2)
    #[arg(long)]
    depth: Option<usize>,
    /// Report format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct TruncateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated truncation levels, e.g. "2,4" or "3/2,5/2"
    #[arg(long)]
    levels: Option<String>,
    /// Vertex whose convergence table is emitted
    #[arg(long, default_value_t = 0)]
    vertex: usize,
    /// Largest power in the convergence table
    #[arg(long)]
    n_max: Option<usize>,
}

#[derive(Args)]
struct ExamplesArgs {
    /// Write one JSON problem file per example into this directory
    /// instead of printing a single JSON object
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit this many seeded random problems
    #[arg(long)]
    random: Option<usize>,
    /// Seed for random corpus generation
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full verdict pipeline on a problem file
    Classify(CommonArgs),
    /// Verify a supplied or propagated measure system
    Verify(CommonArgs),
    /// Truncation study: bounded triplets and convergence tables
    #[command(alias = "truncation-study")]
    Truncate(TruncateArgs),
    /// Per-vertex Stieltjes moment reports
    Moments(CommonArgs),
    /// Emit the built-in example corpus
    Examples(ExamplesArgs),
}

fn vertex_cap() -> usize {
    std::env::var("TREESHIFT_MAX_VERTICES")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(treeshift::tree::DEFAULT_VERTEX_CAP)
}

fn load_problem(path: &Option<PathBuf>, err: &mut dyn Write) -> Result<ProblemFile, i32> {
    let from_stdin = path.as_ref().is_none_or(|p| p == Path::new("-"));
    let result = if from_stdin {
        parse_problem(std::io::stdin().lock())
    } else {
        let path = path.as_ref().expect("checked above");
        match File::open(path) {
            Ok(f) => parse_problem(f),
            Err(e) => {
                let _ = writeln!(err, "cannot open {}: {e}", path.display());
                return Err(EXIT_ERROR);
            }
        }
    };
    result.map_err(|e| {
        let _ = writeln!(err, "{e}");
        EXIT_ERROR
    })
}

fn parse_levels(raw: &str) -> Result<Vec<Scalar>, String> {
    raw.split(',')
        .map(|part| Scalar::parse(part.trim()))
        .collect::<Result<Vec<_>, _>>()
}

fn resolve_common(
    common: &CommonArgs,
    levels: Option<Vec<Scalar>>,
    err: &mut dyn Write,
) -> Result<ResolvedProblem, i32> {
    let pf = load_problem(&common.file, err)?;
    let overrides = Overrides {
        order: common.order,
        tol: common.tol,
        depth: common.depth,
        levels,
    };
    resolve(&pf, &overrides, vertex_cap()).map_err(|e| {
        let _ = writeln!(err, "{e}");
        EXIT_ERROR
    })
}

/// The measure system to verify: the one supplied in the file, or a
/// propagation from the frontier measures.
fn obtain_system(resolved: &ResolvedProblem) -> Result<MeasureSystem, String> {
    if let Some(s) = &resolved.system {
        return Ok(s.clone());
    }
    if let Some(fm) = &resolved.frontier_measures {
        return propagate(&resolved.shift, fm).map_err(|e| e.to_string());
    }
    Err("the problem supplies neither a system nor frontier measures".into())
}

// ---------------------------------------------------------------- verify

#[derive(Serialize)]
struct VerifyReport {
    consistency: ConsistencyReport,
    moments: Vec<MomentsMatchReport>,
    specialization: SpecializationReport,
    pass: bool,
}

fn run_verify(resolved: &ResolvedProblem, format: Format, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let system = match obtain_system(resolved) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "verify: {e}");
            return EXIT_ERROR;
        }
    };
    let shift = &resolved.shift;
    let region = shift.region();
    let consistency = verify_system(shift, &system, resolved.tol, 3);
    let mut moments = Vec::new();
    let mut moments_pass = true;
    for u in region.vertices() {
        let order = resolved.order.min(region.depth() - region.depth_of(u));
        match moments_match(shift, &system, u, order, resolved.tol) {
            Ok(report) => {
                moments_pass &= report.pass;
                moments.push(report);
            }
            Err(e) => {
                let _ = writeln!(err, "verify: {e}");
                return EXIT_ERROR;
            }
        }
    }
    let specialization = nonzero_weight_specialization_check(shift, &system, resolved.tol);
    let pass = consistency.pass && moments_pass && specialization.pass;
    let report = VerifyReport { consistency, moments, specialization, pass };
    match format {
        Format::Json => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializable"));
        }
        Format::Text => {
            let _ = writeln!(out, "consistency: pass = {}", report.consistency.pass);
            for entry in &report.consistency.entries {
                let _ = writeln!(
                    out,
                    "  vertex {}: residual {}, condition {}, eps {} (pass = {})",
                    entry.vertex, entry.residual, entry.condition, entry.eps_stored, entry.pass
                );
            }
            let _ = writeln!(out, "moments: pass = {moments_pass}");
            let _ = writeln!(
                out,
                "nonzero-weight specialization: applicable = {}, pass = {}",
                report.specialization.applicable, report.specialization.pass
            );
            let _ = writeln!(out, "verdict: {}", if pass { "PASS" } else { "FAIL" });
        }
    }
    i32::from(!pass)
}

// -------------------------------------------------------------- truncate

#[derive(Serialize)]
struct TruncateReport {
    levels: Vec<Scalar>,
    verifications: Vec<TruncationReport>,
    convergence: ConvergenceTable,
}

fn run_truncate(
    resolved: &ResolvedProblem,
    vertex: usize,
    n_max: Option<usize>,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let system = match obtain_system(resolved) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "truncate: {e}");
            return EXIT_ERROR;
        }
    };
    let shift = &resolved.shift;
    let region = shift.region();
    if vertex >= region.vertex_count() {
        let _ = writeln!(err, "truncate: vertex {vertex} is outside the region");
        return EXIT_ERROR;
    }
    let u = VertexId(vertex);
    let n_max = n_max.unwrap_or_else(|| resolved.order.min(region.depth() - region.depth_of(u)));
    let mut verifications = Vec::new();
    for level in &resolved.levels {
        let step = truncate_triplet(shift, &system, level)
            .and_then(|t| verify_truncated(shift, &t, resolved.tol));
        match step {
            Ok(report) => verifications.push(report),
            Err(e) => {
                let _ = writeln!(err, "truncate: {e}");
                return EXIT_ERROR;
            }
        }
    }
    let convergence = match convergence_report(shift, &system, u, n_max, &resolved.levels) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "truncate: {e}");
            return EXIT_ERROR;
        }
    };
    let report = TruncateReport { levels: resolved.levels.clone(), verifications, convergence };
    match format {
        Format::Json => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializable"));
        }
        Format::Text => {
            for v in &report.verifications {
                let _ = writeln!(
                    out,
                    "level {}: consistency pass = {}, support bounded = {} (norm^2 <= {})",
                    v.level, v.consistency.pass, v.support_bounded, v.norm_bound_sq
                );
            }
            let _ = writeln!(
                out,
                "{:>8} {:>3} {:>14} {:>14} {:>14} {:>14} {:>12}",
                "level", "n", "truncated", "target", "gap", "vec-dist^2", "inner-gap"
            );
            for row in &report.convergence.rows {
                let _ = writeln!(
                    out,
                    "{:>8} {:>3} {:>14} {:>14} {:>14} {:>14} {:>12.3e}",
                    row.level.to_string(),
                    row.n,
                    row.truncated_norm_sq.to_string(),
                    row.target_norm_sq.to_string(),
                    row.gap.to_string(),
                    row.vector_distance_sq.to_string(),
                    row.max_inner_gap
                );
            }
        }
    }
    0
}

// --------------------------------------------------------------- moments

#[derive(Serialize)]
struct VertexMomentReport {
    vertex: VertexId,
    prefix: Vec<Scalar>,
    stieltjes: StieltjesReport,
    theta_lower_bound: Option<ExtReal>,
    carleman_terms: Vec<ExtReal>,
    divergence: DivergenceVerdict,
}

#[derive(Serialize)]
struct MomentsReport {
    vertices: Vec<VertexMomentReport>,
    pass: bool,
}

fn run_moments(resolved: &ResolvedProblem, format: Format, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let shift = &resolved.shift;
    let region = shift.region();
    let weight_bound = {
        let nb = shift.norm_bound();
        if nb.region_local {
            None
        } else {
            Some(nb.max_child_sum)
        }
    };
    let mut vertices = Vec::new();
    let mut pass = true;
    for u in region.vertices() {
        let order = resolved.order.min(region.depth() - region.depth_of(u));
        let prefix_values = match shift.norm_sq_prefix(u, order) {
            Ok(v) => v,
            Err(e) => {
                let _ = writeln!(err, "moments: {e}");
                return EXIT_ERROR;
            }
        };
        let prefix = MomentPrefix::new(prefix_values.clone()).expect("norms are nonnegative");
        let stieltjes = match is_stieltjes_prefix(&prefix, resolved.tol) {
            Ok(r) => r,
            Err(e) => {
                let _ = writeln!(err, "moments: {e}");
                return EXIT_ERROR;
            }
        };
        pass &= stieltjes.pass;
        let theta = prefix
            .shifted()
            .filter(|s| s.get(0).is_positive())
            .map(|s| theta_lower_bound(&s).expect("t_0 > 0 checked"));
        let carleman = carleman_terms(&prefix);
        let divergence =
            divergence_certificate(&prefix, resolved.support_bound.as_ref(), weight_bound.as_ref());
        vertices.push(VertexMomentReport {
            vertex: u,
            prefix: prefix_values,
            stieltjes,
            theta_lower_bound: theta,
            carleman_terms: carleman,
            divergence,
        });
    }
    let report = MomentsReport { vertices, pass };
    match format {
        Format::Json => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializable"));
        }
        Format::Text => {
            for v in &report.vertices {
                let values: Vec<String> = v.prefix.iter().map(Scalar::to_string).collect();
                let _ = writeln!(
                    out,
                    "vertex {}: prefix ({}) stieltjes pass = {}",
                    v.vertex,
                    values.join(", "),
                    v.stieltjes.pass
                );
            }
            let _ = writeln!(out, "verdict: {}", if report.pass { "PASS" } else { "FAIL" });
        }
    }
    i32::from(!pass)
}

// -------------------------------------------------------------- examples

fn run_examples(args: &ExamplesArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut entries: Vec<(String, ProblemFile)> =
        builtin::corpus().into_iter().map(|(n, p)| (n.to_string(), p)).collect();
    if let Some(count) = args.random {
        entries.extend(builtin::random_corpus(count, args.seed));
    }
    match &args.out {
        Some(dir) => {
            if let Err(e) = std::fs::create_dir_all(dir) {
                let _ = writeln!(err, "examples: cannot create {}: {e}", dir.display());
                return EXIT_ERROR;
            }
            for (name, pf) in &entries {
                let path = dir.join(format!("{name}.json"));
                let body = serde_json::to_string_pretty(pf).expect("serializable");
                if let Err(e) = std::fs::write(&path, body) {
                    let _ = writeln!(err, "examples: cannot write {}: {e}", path.display());
                    return EXIT_ERROR;
                }
                let _ = writeln!(out, "wrote {}", path.display());
            }
        }
        None => {
            let map: BTreeMap<String, &ProblemFile> =
                entries.iter().map(|(n, p)| (n.clone(), p)).collect();
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&map).expect("serializable"));
        }
    }
    0
}

// -------------------------------------------------------------- classify

fn run_classify(resolved: ResolvedProblem, format: Format, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let opts = ClassifyOptions {
        order: resolved.order,
        tol: resolved.tol,
        system: resolved.system,
        frontier_measures: resolved.frontier_measures,
        support_bound: resolved.support_bound,
    };
    match classify(&resolved.shift, &opts) {
        Ok(classification) => {
            let rendered = render_report(
                &classification,
                match format {
                    Format::Json => ReportFormat::Json,
                    Format::Text => ReportFormat::Text,
                },
            );
            let _ = writeln!(out, "{rendered}");
            classification.exit_code()
        }
        Err(e) => {
            let _ = writeln!(err, "classify: {e}");
            EXIT_ERROR
        }
    }
}

/// Dispatches a full command line; the first argument is the program
/// name, as in `std::env::args`.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match cli.command {
        Command::Classify(common) => match resolve_common(&common, None, err) {
            Ok(resolved) => run_classify(resolved, common.format, out, err),
            Err(code) => code,
        },
        Command::Verify(common) => match resolve_common(&common, None, err) {
            Ok(resolved) => run_verify(&resolved, common.format, out, err),
            Err(code) => code,
        },
        Command::Truncate(args) => {
            let levels = match &args.levels {
                Some(raw) => match parse_levels(raw) {
                    Ok(l) => Some(l),
                    Err(e) => {
                        let _ = writeln!(err, "truncate: {e}");
                        return EXIT_USAGE;
                    }
                },
                None => None,
            };
            match resolve_common(&args.common, levels, err) {
                Ok(resolved) => {
                    run_truncate(&resolved, args.vertex, args.n_max, args.common.format, out, err)
                }
                Err(code) => code,
            }
        }
        Command::Moments(common) => match resolve_common(&common, None, err) {
            Ok(resolved) => run_moments(&resolved, common.format, out, err),
            Err(code) => code,
        },
        Command::Examples(args) => run_examples(&args, out, err),
    }
}
