//! Command-line interface of the `specrep` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use specrep::measure::MeasureDoc;
use specrep::nnsm::{check_nnsm, NnsmDoc};
use specrep::report::{Check, CheckList};
use specrep::unbounded::BlockModelDoc;
use specrep::{BlockModel, NonNegSpectralMeasure, Real, SpectralMeasure};

use crate::error::{HarnessError, HarnessResult};
use crate::pipelines::{family_for, verify, verify_c, verify_d, BlockOptions};
use crate::report::VerificationReport;
use crate::scenario::{Caps, Kind};

#[derive(Debug, Parser)]
#[command(name = "specrep", version, about = "Seeded verification of spectral representations")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Commuting normal generators and their spectral measure
    VerifyA(RunArgs),
    /// Tensor-model representations and non-negative spectral measures
    VerifyB(RunArgs),
    /// Unbounded commutative block models
    VerifyC(ModelArgs),
    /// Unbounded block models with a von Neumann algebra
    VerifyD(ModelArgs),
    /// Random scenarios of the given kinds until the time budget runs out
    Fuzz(FuzzArgs),
    /// Validate a measure or block-model document
    CheckMeasure(CheckArgs),
    /// Reports for several kinds, optionally written to a file
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, env = "SPECREP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    /// Size caps, e.g. `h=4,k=16,points=6,blocks=64`
    #[arg(long, default_value = "")]
    pub caps: String,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Record wall-clock time in each report
    #[arg(long)]
    pub timing: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Verify a block model read from a JSON document instead
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[arg(long, default_value = "a,b,c,d")]
    pub kinds: String,
    #[arg(long, default_value_t = 10.0)]
    pub seconds: f64,
    #[arg(long, env = "SPECREP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "")]
    pub caps: String,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, default_value = "a,b,c,d")]
    pub kinds: String,
    #[arg(long, env = "SPECREP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long, default_value = "")]
    pub caps: String,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub timing: bool,
    /// Output file (default: standard output)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// Parses `argv` and runs the command, returning the process exit code:
/// 0 when every report passes, 1 on any failed check, 2 on usage errors.
pub fn run_cli<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return e.exit_code();
        }
    };
    match execute(cli.command, out, err) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(HarnessError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(e @ HarnessError::CapExceeded { .. }) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn parse_caps(s: &str) -> HarnessResult<Caps> {
    s.parse()
}

fn parse_kinds(s: &str) -> HarnessResult<Vec<Kind>> {
    let mut kinds = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect::<HarnessResult<Vec<Kind>>>()?;
    kinds.sort();
    kinds.dedup();
    if kinds.is_empty() {
        return Err(HarnessError::Usage("no scenario kinds given".into()));
    }
    Ok(kinds)
}

fn pool(jobs: Option<usize>) -> HarnessResult<rayon::ThreadPool> {
    if jobs == Some(0) {
        return Err(HarnessError::Usage("--jobs must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Usage(e.to_string()))
}

/// Runs the scenarios in parallel; the result keeps the order of `jobs`.
fn run_batch(
    pool: &rayon::ThreadPool,
    jobs: &[(Kind, u64)],
    caps: &Caps,
    timing: bool,
) -> HarnessResult<Vec<VerificationReport>> {
    pool.install(|| jobs.par_iter().map(|(k, s)| verify(*k, *s, caps, timing)).collect())
}

fn emit(out: &mut dyn Write, reports: &[VerificationReport], format: Format) -> HarnessResult<()> {
    for r in reports {
        match format {
            Format::Json => writeln!(out, "{}", r.to_json())?,
            Format::Text => write!(out, "{}", r.to_text())?,
        }
    }
    Ok(())
}

fn seeds(seed: u64, count: u64) -> HarnessResult<impl Iterator<Item = u64>> {
    if count == 0 {
        return Err(HarnessError::Usage("--count must be positive".into()));
    }
    Ok((0..count).map(move |i| seed.wrapping_add(i)))
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> HarnessResult<bool> {
    match command {
        Command::VerifyA(a) => run_kind(Kind::A, &a, out),
        Command::VerifyB(a) => run_kind(Kind::B, &a, out),
        Command::VerifyC(m) => run_model(Kind::Cprime, &m, out),
        Command::VerifyD(m) => run_model(Kind::D, &m, out),
        Command::Fuzz(f) => fuzz(&f, out, err),
        Command::CheckMeasure(c) => {
            let report = check_measure_file(&c.file);
            emit(out, std::slice::from_ref(&report), c.format)?;
            Ok(report.pass)
        }
        Command::Report(r) => {
            let caps = parse_caps(&r.caps)?;
            let kinds = parse_kinds(&r.kinds)?;
            let pool = pool(r.jobs)?;
            let mut jobs = Vec::new();
            for k in kinds {
                jobs.extend(seeds(r.seed, r.count)?.map(|s| (k, s)));
            }
            let reports = run_batch(&pool, &jobs, &caps, r.timing)?;
            match &r.out {
                Some(path) => {
                    let mut buf = Vec::new();
                    emit(&mut buf, &reports, r.format)?;
                    std::fs::write(path, buf)?;
                    let passed = reports.iter().filter(|r| r.pass).count();
                    writeln!(out, "{passed}/{} reports pass; written to {}", reports.len(), path.display())?;
                }
                None => emit(out, &reports, r.format)?,
            }
            Ok(reports.iter().all(|r| r.pass))
        }
    }
}

fn run_kind(kind: Kind, a: &RunArgs, out: &mut dyn Write) -> HarnessResult<bool> {
    let caps = parse_caps(&a.caps)?;
    let pool = pool(a.jobs)?;
    let jobs: Vec<(Kind, u64)> = seeds(a.seed, a.count)?.map(|s| (kind, s)).collect();
    let reports = run_batch(&pool, &jobs, &caps, a.timing)?;
    emit(out, &reports, a.format)?;
    Ok(reports.iter().all(|r| r.pass))
}

fn run_model(kind: Kind, m: &ModelArgs, out: &mut dyn Write) -> HarnessResult<bool> {
    let Some(path) = &m.model else {
        return run_kind(kind, &m.run, out);
    };
    let start = Instant::now();
    let text = std::fs::read_to_string(path)?;
    let doc: BlockModelDoc = serde_json::from_str(&text)?;
    let model = BlockModel::from_doc(&doc)?;
    let opts = BlockOptions::default();
    let checks = match kind {
        Kind::D => verify_d(&model, m.run.seed, &opts),
        _ => verify_c(&model, m.run.seed, &opts),
    };
    let mut report = VerificationReport::new(format!("{kind}-{}", path.display()), checks);
    if m.run.timing {
        report.wall_ms = start.elapsed().as_millis() as u64;
    }
    emit(out, std::slice::from_ref(&report), m.run.format)?;
    Ok(report.pass)
}

fn fuzz(f: &FuzzArgs, out: &mut dyn Write, err: &mut dyn Write) -> HarnessResult<bool> {
    if !(f.seconds >= 0.0) {
        return Err(HarnessError::Usage("--seconds must be non-negative".into()));
    }
    let caps = parse_caps(&f.caps)?;
    let kinds = parse_kinds(&f.kinds)?;
    let pool = pool(f.jobs)?;
    let budget = Duration::from_secs_f64(f.seconds);
    let start = Instant::now();
    let batch = pool.current_num_threads().max(1) as u64;
    let mut next = f.seed;
    let (mut total, mut failed) = (0usize, 0usize);
    loop {
        let jobs: Vec<(Kind, u64)> = (0..batch)
            .flat_map(|i| kinds.iter().map(move |k| (*k, next.wrapping_add(i))))
            .collect();
        next = next.wrapping_add(batch);
        let reports = run_batch(&pool, &jobs, &caps, false)?;
        total += reports.len();
        let failures: Vec<VerificationReport> = reports.into_iter().filter(|r| !r.pass).collect();
        failed += failures.len();
        emit(out, &failures, f.format)?;
        if start.elapsed() >= budget {
            break;
        }
    }
    writeln!(err, "fuzz: {total} scenarios, {failed} failing, seeds {}..{}", f.seed, next)?;
    Ok(failed == 0)
}

/// Validates a measure document: `spectral`, `nnsm` or `block-model`.
/// Unreadable or malformed input yields a failing `document` check.
pub fn check_measure_file(path: &Path) -> VerificationReport {
    let name = format!("file-{}", path.display());
    let checks = match std::fs::read_to_string(path) {
        Ok(text) => check_measure(&text),
        Err(e) => {
            let mut c = CheckList::new();
            c.push(Check::failed("document", e.to_string()));
            c
        }
    };
    VerificationReport::new(name, checks)
}

pub fn check_measure(text: &str) -> CheckList {
    let mut checks = CheckList::new();
    if let Err(e) = check_document(text, &mut checks) {
        checks.push(Check::failed("document", e.to_string()));
    }
    checks
}

fn check_document(text: &str, checks: &mut CheckList) -> HarnessResult<()> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let kind = value.get("kind").and_then(|k| k.as_str()).unwrap_or_default().to_string();
    match kind.as_str() {
        "spectral" => {
            let doc: MeasureDoc = serde_json::from_value(value)?;
            let e = SpectralMeasure::from_doc_unchecked(&doc)?;
            checks.extend(e.validate());
        }
        "nnsm" => {
            let doc: NnsmDoc = serde_json::from_value(value)?;
            let m = NonNegSpectralMeasure::from_doc(&doc)?;
            checks.push(Check::new("normalization", m.normalization_residual(), f64::tolerances().recon));
            let family = family_for(m.w1(), 10, 0)?;
            checks.extend(check_nnsm(&m, &family, 20, 0)?);
        }
        "block-model" => {
            let doc: BlockModelDoc = serde_json::from_value(value)?;
            let model = BlockModel::from_doc(&doc)?;
            checks.extend(verify_d(&model, 0, &BlockOptions::default()));
        }
        other => {
            return Err(HarnessError::Usage(format!(
                "unknown document kind {other:?} (expected spectral, nnsm or block-model)"
            )))
        }
    }
    Ok(())
}
