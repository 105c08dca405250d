//! The `lrin` command-line tool.
//!
//! Exit codes: 0 success, 1 numerical failure (divergence, SVD), 2 invalid
//! input or arguments, 3 prox certificate failure, 4 self-test failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use rand::RngCore;
use serde::Serialize;

use crate::error::{LrinError, Result};
use crate::gauges::{NormFlavor, NormSpec, ScaledNorm};
use crate::instances;
use crate::io::{format_value, read_mask, read_matrix_csv, write_mask, write_matrix_csv};
use crate::mat_prox::{
    certify_matrix_prox, matrix_dual_norm_value, matrix_norm_value, matrix_prox_with_threshold,
    DEFAULT_RANK_THRESHOLD,
};
use crate::oracle::{read_manifest, Audit, Certificate, InstanceDescriptor, CERTIFICATE_TOL};
use crate::rng;
use crate::solvers::{solve_matrix_completion, ProblemSpec, SolverConfig};
use crate::vec_prox::SearchMode;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CERTIFICATE: i32 = 3;
pub const EXIT_SELFTEST: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "lrin",
    version,
    about = "Low-rank inducing norms: values, proxes and matrix completion"
)]
pub struct Cli {
    /// Cap on kernel threads. All kernels currently run on one thread, so
    /// results are bit-identical for every value.
    #[arg(long, global = true, env = "LRIN_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the norm (or dual norm) of a CSV matrix.
    Norm(NormCmd),
    /// Prox of the scaled norm at a CSV matrix, with an optimality certificate.
    Prox(ProxCmd),
    /// Matrix completion by Douglas-Rachford.
    Complete(CompleteCmd),
    /// Write a seeded low-rank completion instance.
    Generate(GenerateCmd),
    /// Randomized certificate and search-mode agreement checks.
    Selftest(SelftestCmd),
}

#[derive(Debug, Args)]
pub struct NormArgs {
    /// Norm flavor: `fro` (dual of truncated l2) or `spec` (dual of truncated l1).
    #[arg(long = "norm", default_value = "fro")]
    pub flavor: NormFlavor,
    /// Target rank.
    #[arg(long)]
    pub r: usize,
}

impl NormArgs {
    fn spec(&self) -> Result<NormSpec> {
        NormSpec::new(self.flavor, self.r)
    }
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    /// Scale of the norm term.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Use `(gamma / 2) N^2` instead of `gamma N`.
    #[arg(long)]
    pub squared: bool,
    /// Candidate search: `binary` or `enumerate`.
    #[arg(long, default_value = "binary")]
    pub mode: SearchMode,
    /// Relative cutoff for counting singular values.
    #[arg(long, default_value_t = DEFAULT_RANK_THRESHOLD)]
    pub rank_threshold: f64,
}

#[derive(Debug, Args)]
pub struct NormCmd {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub norm: NormArgs,
    /// Print the dual norm instead.
    #[arg(long)]
    pub dual: bool,
}

#[derive(Debug, Args)]
pub struct ProxCmd {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// JSON report path; printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub norm: NormArgs,
    #[command(flatten)]
    pub scale: ScaleArgs,
}

#[derive(Debug, Args)]
pub struct CompleteCmd {
    /// Data matrix; entries outside the mask are ignored and may be `nan`.
    #[arg(long)]
    pub input: PathBuf,
    /// Observed entries, one 1-based `i j` pair per line.
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-iteration CSV `iter,objective,residual`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub norm: NormArgs,
    #[command(flatten)]
    pub scale: ScaleArgs,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    /// Douglas-Rachford step.
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Douglas-Rachford relaxation in (0, 2).
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct GenerateCmd {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub rows: usize,
    #[arg(long, default_value_t = 20)]
    pub cols: usize,
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    /// Fraction of observed entries.
    #[arg(long, default_value_t = 0.7)]
    pub fraction: f64,
    /// Observed data (unobserved entries written as 0).
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    /// Full ground-truth matrix.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestCmd {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    /// Largest vector length drawn.
    #[arg(long, default_value_t = 50)]
    pub max_q: usize,
    /// Replay the instances listed in this manifest instead of sampling.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Certify with a sign-flipped tolerance so every check fails.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Serialize)]
struct ProxReport {
    norm_value: f64,
    certificate: Certificate,
    numerical_rank: usize,
    candidate_solves: usize,
    wall_time_ms: f64,
}

#[derive(Debug, Serialize)]
struct CompletionReport {
    objective: f64,
    fixed_point_residual: f64,
    iterations: usize,
    numerical_rank: usize,
    converged: bool,
    wall_time_ms: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

fn exit_code(e: &LrinError) -> i32 {
    match e {
        LrinError::Diverged(_) | LrinError::Svd(_) => EXIT_FAILURE,
        _ => EXIT_INVALID,
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(LrinError::InvalidParameter(
                "--threads must be at least 1".into(),
            ));
        }
    }
    match &cli.command {
        Command::Norm(c) => cmd_norm(c, out),
        Command::Prox(c) => cmd_prox(c, out),
        Command::Complete(c) => cmd_complete(c, out),
        Command::Generate(c) => cmd_generate(c),
        Command::Selftest(c) => cmd_selftest(c, out, err),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| LrinError::Io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| LrinError::Io(format!("{}: {e}", path.display())))
}

fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    read_matrix_csv(open(path)?).map_err(|e| match e {
        LrinError::Parse(m) => LrinError::Parse(format!("{}: {m}", path.display())),
        LrinError::Empty => LrinError::Parse(format!("{}: no data", path.display())),
        other => other,
    })
}

fn check_finite(x: &DMatrix<f64>, path: &Path) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(LrinError::Parse(format!(
            "{}: non-finite entry at row {}, column {}",
            path.display(),
            k % x.nrows() + 1,
            k / x.nrows() + 1
        ))),
        None => Ok(()),
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LrinError::InvalidParameter(format!(
            "{name} must be a positive number, got {v}"
        )))
    }
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| LrinError::Io(format!("report serialization: {e}")))?;
    match path {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{text}")?;
            w.flush()?;
        }
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

fn cmd_norm(c: &NormCmd, out: &mut dyn Write) -> Result<i32> {
    let spec = c.norm.spec()?;
    let z = load_matrix(&c.input)?;
    check_finite(&z, &c.input)?;
    let v = if c.dual {
        matrix_dual_norm_value(&z, &spec)?
    } else {
        matrix_norm_value(&z, &spec)?
    };
    writeln!(out, "{}", format_value(v))?;
    Ok(EXIT_OK)
}

fn cmd_prox(c: &ProxCmd, out: &mut dyn Write) -> Result<i32> {
    let spec = c.norm.spec()?;
    check_positive("--gamma", c.scale.gamma)?;
    check_positive("--rank-threshold", c.scale.rank_threshold)?;
    let f = ScaledNorm::new(spec, c.scale.gamma, c.scale.squared)?;
    let z = load_matrix(&c.input)?;
    check_finite(&z, &c.input)?;
    let start = Instant::now();
    let res = matrix_prox_with_threshold(&z, &f, c.scale.mode, c.scale.rank_threshold)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let certificate = certify_matrix_prox(&z, &res.x, &f)?;
    write_matrix_csv(create(&c.output)?, &res.x)?;
    let report = ProxReport {
        norm_value: matrix_norm_value(&res.x, &spec)?,
        certificate,
        numerical_rank: res.numerical_rank,
        candidate_solves: res.candidate_solves,
        wall_time_ms,
    };
    emit_json(&report, c.report.as_deref(), out)?;
    Ok(if certificate.pass {
        EXIT_OK
    } else {
        EXIT_CERTIFICATE
    })
}

fn cmd_complete(c: &CompleteCmd, out: &mut dyn Write) -> Result<i32> {
    let spec = c.norm.spec()?;
    check_positive("--gamma", c.scale.gamma)?;
    check_positive("--rank-threshold", c.scale.rank_threshold)?;
    check_positive("--tol", c.tol)?;
    check_positive("--step", c.step)?;
    if c.max_iter == 0 {
        return Err(LrinError::InvalidParameter(
            "--max-iter must be at least 1".into(),
        ));
    }
    let f = ScaledNorm::new(spec, c.scale.gamma, c.scale.squared)?;
    let mut data = load_matrix(&c.input)?;
    let mask = read_mask(open(&c.mask)?)?;
    if mask.is_empty() {
        return Err(LrinError::InvalidParameter(format!(
            "{}: mask has no entries",
            c.mask.display()
        )));
    }
    let (n, m) = data.shape();
    let mut observed = DMatrix::from_element(n, m, false);
    for &(i, j) in &mask {
        if i >= n || j >= m {
            return Err(LrinError::Shape(format!(
                "mask entry ({}, {}) outside the {n}x{m} data matrix",
                i + 1,
                j + 1
            )));
        }
        observed[(i, j)] = true;
    }
    for (v, &seen) in data.iter_mut().zip(observed.iter()) {
        if !seen {
            *v = 0.0;
        }
    }
    check_finite(&data, &c.input)?;
    let cfg = SolverConfig {
        tol: c.tol,
        max_iter: c.max_iter,
        gamma: c.step,
        alpha: c.alpha,
        mode: c.scale.mode,
        rank_threshold: c.scale.rank_threshold,
        record_trace: c.trace.is_some(),
        ..SolverConfig::default()
    };
    let (x, report) = solve_matrix_completion(&ProblemSpec::completion(data, mask, f), &cfg)?;
    write_matrix_csv(create(&c.output)?, &x)?;
    if let (Some(path), Some(trace)) = (&c.trace, &report.trace) {
        let mut w = create(path)?;
        writeln!(w, "iter,objective,residual")?;
        for (k, (obj, res)) in trace.iter().enumerate() {
            writeln!(w, "{},{:.16e},{:.16e}", k + 1, obj, res)?;
        }
        w.flush()?;
    }
    let summary = CompletionReport {
        objective: report.objective,
        fixed_point_residual: report.fixed_point_residual,
        iterations: report.iterations,
        numerical_rank: report.numerical_rank,
        converged: report.converged,
        wall_time_ms: report.wall_time_ms,
        warnings: report.warnings,
    };
    emit_json(&summary, c.report.as_deref(), out)?;
    Ok(EXIT_OK)
}

fn cmd_generate(c: &GenerateCmd) -> Result<i32> {
    if c.rows == 0 || c.cols == 0 {
        return Err(LrinError::InvalidParameter(
            "--rows and --cols must be at least 1".into(),
        ));
    }
    if c.rank > c.rows.min(c.cols) {
        return Err(LrinError::InvalidParameter(format!(
            "--rank {} exceeds min(rows, cols) = {}",
            c.rank,
            c.rows.min(c.cols)
        )));
    }
    if !(c.fraction > 0.0 && c.fraction <= 1.0) {
        return Err(LrinError::InvalidParameter(format!(
            "--fraction must lie in (0, 1], got {}",
            c.fraction
        )));
    }
    let (truth, mask) = instances::completion_instance(c.seed, c.rows, c.cols, c.rank, c.fraction);
    let mut data = DMatrix::zeros(c.rows, c.cols);
    for &(i, j) in &mask {
        data[(i, j)] = truth[(i, j)];
    }
    write_matrix_csv(create(&c.output)?, &data)?;
    write_mask(create(&c.mask)?, &mask)?;
    if let Some(p) = &c.truth {
        write_matrix_csv(create(p)?, &truth)?;
    }
    Ok(EXIT_OK)
}

fn cmd_selftest(c: &SelftestCmd, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let descriptors: Vec<InstanceDescriptor> = match &c.manifest {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LrinError::Io(format!("{}: {e}", path.display())))?;
            read_manifest(&text)?
        }
        None => {
            if c.max_q == 0 {
                return Err(LrinError::InvalidParameter(
                    "--max-q must be at least 1".into(),
                ));
            }
            let mut seeds = rng::stream(c.seed, "selftest");
            (0..c.count)
                .map(|_| InstanceDescriptor::sample(seeds.next_u64(), c.max_q))
                .collect()
        }
    };
    let tol = if c.inject_fault {
        -CERTIFICATE_TOL
    } else {
        CERTIFICATE_TOL
    };
    let total = descriptors.len();
    let mut failed = 0usize;
    for d in &descriptors {
        let problem = match Audit::run(d, tol) {
            Ok(audit) => audit.failure(),
            Err(e) => Some(e.to_string()),
        };
        if let Some(msg) = problem {
            failed += 1;
            writeln!(err, "FAIL {d}: {msg}")?;
        }
    }
    if failed > 0 {
        writeln!(out, "FAILED: {failed}/{total} instances")?;
        return Ok(EXIT_SELFTEST);
    }
    writeln!(out, "OK: {total}/{total} certified, modes agree")?;
    Ok(EXIT_OK)
}
