//! Command-line driver.
//!
//! Exit codes: 0 pass, 1 failure or runtime error, 2 incomplete (skipped
//! rows), 64 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use crate::catalog::{builtin, builtin_names, builtins, euler_char, link_infinity_chi, load_set_file, LinkPolicy, SetDescriptor, SetKind};
use crate::cubature::{curvature_integrals, CubatureSpec};
use crate::error::{Error, Result};
use crate::geomconst::ball_volume;
use crate::grassmann::{grassmann_mean, haar_sample, shift_subspace, stream_rng, SampleError};
use crate::limits::{check_schedule, normalized_lks, SweepOptions};
use crate::par::with_workers;
use crate::report::TheoremId;
use crate::spherical::apex_lambda0;
use crate::verify::{verify, VerifyConfig};

pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 64;
pub const DEFAULT_SEED: u64 = 42;
pub const MIN_SAMPLES: usize = 100;
/// Environment variable that replaces the default seed.
pub const SEED_ENV: &str = "LK_DEFAULT_SEED";

#[derive(Debug, Parser)]
#[command(name = "lkcurv", version, about = "Lipschitz-Killing curvatures and Gauss-Bonnet identities of semi-algebraic sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Built-in sets.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Checks one identity on one set and emits a report.
    Verify(VerifyArgs),
    /// Prints Λ_k(X, X ∩ B_R) and its normalized value.
    Curvature(CurvatureArgs),
    /// Haar subspace sampling.
    #[command(subcommand)]
    Grassmann(GrassmannCommand),
}

#[derive(Debug, Subcommand)]
enum CatalogCommand {
    List,
}

#[derive(Debug, Subcommand)]
enum GrassmannCommand {
    /// Draws Haar k-planes of R^n, or with --set averages χ(Lk^∞(X ∩ H)).
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct Common {
    /// Monte Carlo samples (at least 100).
    #[arg(long, default_value_t = 4000)]
    samples: usize,
    /// Seed; defaults to $LK_DEFAULT_SEED or 42.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Built-in name or path to a set file.
    #[arg(long)]
    set: String,
    /// Identity id: prop3.1, thm3.7, cor3.8, du_lambda0, thm3.9, thm4.1,
    /// thm4.2, thm4.3, odd_d_corollary, base_point or spherical_gb.
    #[arg(long)]
    theorem: String,
    /// Doubling radius schedule.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    radii: Vec<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Comma-separated base point x0 (required by base_point).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    base_point: Option<Vec<f64>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct CurvatureArgs {
    /// Built-in name or path to a set file.
    #[arg(long)]
    set: String,
    /// Curvature index, 0 <= k <= n.
    #[arg(long)]
    k: usize,
    /// Ball radius R.
    #[arg(long)]
    radius: f64,
    /// Comma-separated ball center; defaults to the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    base_point: Option<Vec<f64>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Subspace dimension.
    #[arg(long)]
    k: usize,
    /// Ambient dimension; taken from the set when --set is given.
    #[arg(long)]
    n: Option<usize>,
    /// Average χ(Lk^∞(X ∩ H)) over --samples draws instead of printing frames.
    #[arg(long)]
    set: Option<String>,
    /// Frames to print without --set.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Comma-separated point the affine flats are shifted by.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    base_point: Option<Vec<f64>>,
    #[command(flatten)]
    common: Common,
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::InvalidSet { .. } | Error::InvalidGraph(_) | Error::InvalidSubspace(_) | Error::Json(_) => {
                EXIT_USAGE
            }
            _ => EXIT_FAIL,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Catalog(CatalogCommand::List) => catalog_list(out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Curvature(a) => cmd_curvature(a, out),
        Command::Grassmann(GrassmannCommand::Sample(a)) => cmd_sample(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// Resolves a built-in name or a set file.
pub fn resolve_set(reference: &str) -> Result<SetDescriptor> {
    if builtin_names().contains(&reference) {
        return builtin(reference);
    }
    let path = Path::new(reference);
    if path.exists() {
        return load_set_file(path);
    }
    Err(Error::InvalidArgument(format!("`{reference}` is neither a built-in set nor a readable file")))
}

fn seed(explicit: Option<u64>) -> std::result::Result<u64, Failure> {
    if let Some(s) = explicit {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text.trim().parse().map_err(|_| usage(format!("{SEED_ENV}=`{text}` is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn check_samples(n: usize) -> std::result::Result<(), Failure> {
    if n < MIN_SAMPLES {
        return Err(usage(format!("--samples must be at least {MIN_SAMPLES}, got {n}")));
    }
    Ok(())
}

fn base_point(set: &SetDescriptor, bp: Option<Vec<f64>>) -> std::result::Result<Option<DVector<f64>>, Failure> {
    match bp {
        None => Ok(None),
        Some(v) if v.len() != set.ambient_dim => {
            Err(usage(format!("--base-point has {} coordinates, `{}` lives in R^{}", v.len(), set.name, set.ambient_dim)))
        }
        Some(v) if v.iter().any(|c| !c.is_finite()) => Err(usage("--base-point must be finite")),
        Some(v) => Ok(Some(DVector::from_vec(v))),
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::from(Error::Io(e))
}

fn catalog_list(out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    for set in builtins() {
        let chi = euler_char(&set).map(|c| c.to_string()).unwrap_or_else(|_| "?".into());
        writeln!(out, "{}  n={} d={} chi={} {}", set.name, set.ambient_dim, set.dim(), chi, set.kind_tag()).map_err(io)?;
    }
    Ok(0)
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    check_samples(a.common.samples)?;
    let theorem: TheoremId = a.theorem.parse()?;
    check_schedule(&a.radii)?;
    let set = resolve_set(&a.set)?;
    let x0 = base_point(&set, a.base_point)?;
    if theorem == TheoremId::BasePoint && x0.is_none() {
        return Err(usage("--theorem base_point needs --base-point"));
    }
    let cfg = VerifyConfig { n_samples: a.common.samples, seed: seed(a.common.seed)?, radii: a.radii, ..VerifyConfig::default() };
    let report = with_workers(a.common.workers, || verify(&set, theorem, &cfg, x0.as_ref()))?;

    let mut body = Vec::new();
    match a.format {
        Format::Json => {
            body.extend_from_slice(report.to_json()?.as_bytes());
            body.push(b'\n');
        }
        Format::Csv => report.write_csv(&mut body)?,
    }
    match &a.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(io)?);
            w.write_all(&body).map_err(io)?;
            w.flush().map_err(io)?;
            for r in &report.rows {
                let verdict = if r.skipped {
                    "SKIP"
                } else if r.pass {
                    "PASS"
                } else {
                    "FAIL"
                };
                writeln!(
                    out,
                    "{verdict} {} k={} {}: lhs={} rhs={} uncertainty={}",
                    report.theorem, r.k, r.label, r.lhs, r.rhs, r.uncertainty
                )
                .map_err(io)?;
            }
            writeln!(out, "{} {} on {}: {:?}", report.theorem, report.set, path.display(), report.status).map_err(io)?;
        }
        None => out.write_all(&body).map_err(io)?,
    }
    Ok(report.exit_code())
}

#[derive(Serialize)]
struct CurvatureValue<'a> {
    set: &'a str,
    k: usize,
    radius: f64,
    value: f64,
    uncertainty: f64,
    normalized: f64,
    normalized_uncertainty: f64,
}

/// `Λ_k(X, X ∩ B_R(x0))` with its uncertainty.
pub fn lk_measure(set: &SetDescriptor, k: usize, radius: f64, x0: &DVector<f64>, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    let n = set.ambient_dim;
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds the ambient dimension {n}")));
    }
    if k >= 1 {
        let opts = SweepOptions { n_samples, seed, cubature: CubatureSpec::default() };
        let s = normalized_lks(set, radius, x0, &opts)?;
        let scale = ball_volume(k) * radius.powi(k as i32);
        let (v, u) = s.normalized[k - 1];
        return Ok((v * scale, u * scale));
    }
    match &set.kind {
        SetKind::Linear(_) => Ok((0.0, 0.0)),
        SetKind::Conic(g) if x0.norm() < radius => {
            let m = apex_lambda0(g, n_samples, seed)?;
            Ok((m.mean, m.stderr))
        }
        SetKind::Conic(_) => Ok((0.0, 0.0)),
        SetKind::Smooth(s) => Ok(curvature_integrals(s, n, radius, x0, &CubatureSpec::default())?.lk(0)),
    }
}

fn cmd_curvature(a: CurvatureArgs, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    check_samples(a.common.samples)?;
    if !(a.radius > 0.0 && a.radius.is_finite()) {
        return Err(usage(format!("--radius must be positive, got {}", a.radius)));
    }
    let set = resolve_set(&a.set)?;
    let x0 = base_point(&set, a.base_point)?.unwrap_or_else(|| DVector::zeros(set.ambient_dim));
    let seed = seed(a.common.seed)?;
    let (value, uncertainty) = with_workers(a.common.workers, || lk_measure(&set, a.k, a.radius, &x0, a.common.samples, seed))?;
    let scale = ball_volume(a.k) * a.radius.powi(a.k as i32);
    let v = CurvatureValue {
        set: &set.name,
        k: a.k,
        radius: a.radius,
        value,
        uncertainty,
        normalized: value / scale,
        normalized_uncertainty: uncertainty / scale,
    };
    writeln!(out, "{}", serde_json::to_string(&v).map_err(Error::from)?).map_err(io)?;
    Ok(0)
}

#[derive(Serialize)]
struct LinkMean<'a> {
    set: &'a str,
    k: usize,
    mean: f64,
    stderr: f64,
    n_samples: usize,
    seed: u64,
    rejected: usize,
}

fn cmd_sample(a: SampleArgs, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let seed = seed(a.common.seed)?;
    let Some(reference) = &a.set else {
        let n = a.n.ok_or_else(|| usage("grassmann sample needs --n or --set"))?;
        if a.k > n {
            return Err(usage(format!("--k {} exceeds --n {n}", a.k)));
        }
        for i in 0..a.count {
            let h = haar_sample(n, a.k, &mut stream_rng(seed, i as u64));
            let columns: Vec<Vec<f64>> = h.frame().column_iter().map(|c| c.iter().copied().collect()).collect();
            writeln!(out, "{}", serde_json::to_string(&columns).map_err(Error::from)?).map_err(io)?;
        }
        return Ok(0);
    };
    check_samples(a.common.samples)?;
    let set = resolve_set(reference)?;
    let n = set.ambient_dim;
    if a.n.is_some_and(|m| m != n) {
        return Err(usage(format!("--n disagrees with the set's ambient dimension {n}")));
    }
    if a.k > n {
        return Err(usage(format!("--k {} exceeds the ambient dimension {n}", a.k)));
    }
    let x0 = base_point(&set, a.base_point)?.unwrap_or_else(|| DVector::zeros(n));
    let policy = LinkPolicy::default();
    let m = with_workers(a.common.workers, || {
        grassmann_mean(
            n,
            a.k,
            |h| {
                let flat = shift_subspace(h, &x0).map_err(SampleError::Fatal)?;
                link_infinity_chi(&set, &flat, &policy).map(|l| l.chi as f64).map_err(SampleError::from)
            },
            a.common.samples,
            seed,
        )
    })?;
    let v = LinkMean { set: &set.name, k: a.k, mean: m.mean, stderr: m.stderr, n_samples: m.n_samples, seed, rejected: m.rejected };
    writeln!(out, "{}", serde_json::to_string(&v).map_err(Error::from)?).map_err(io)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let mut full = vec!["lkcurv"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn catalog_listing() {
        let (code, out, _) = call(&["catalog", "list"]);
        assert_eq!(code, 0);
        assert!(out.contains("cross_r2  n=2 d=1 chi=1 conic"));
        assert!(out.contains("hyperboloid_r3  n=3 d=2 chi=0 smooth"));
        assert!(out.contains("sphere_s2  n=3 d=2 chi=2 compact"));
    }

    #[test]
    fn usage_errors_exit_64() {
        assert_eq!(call(&["verify", "--set", "cross_r2"]).0, EXIT_USAGE);
        assert_eq!(call(&["verify", "--set", "cross_r2", "--theorem", "thm9.9"]).0, EXIT_USAGE);
        assert_eq!(call(&["verify", "--set", "nope", "--theorem", "thm3.9"]).0, EXIT_USAGE);
        assert_eq!(call(&["verify", "--set", "cross_r2", "--theorem", "thm3.9", "--samples", "10"]).0, EXIT_USAGE);
        assert_eq!(call(&["verify", "--set", "cross_r2", "--theorem", "thm3.9", "--radii", "8,24,72"]).0, EXIT_USAGE);
        assert_eq!(call(&["verify", "--set", "cross_r2", "--theorem", "base_point"]).0, EXIT_USAGE);
        assert_eq!(call(&["verify", "--set", "cross_r2", "--theorem", "thm3.9", "--base-point", "1,2,3"]).0, EXIT_USAGE);
        assert_eq!(call(&["bogus"]).0, EXIT_USAGE);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn curvature_examples() {
        let (code, out, _) = call(&["curvature", "--set", "cross_r2", "--k", "1", "--radius", "3"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["value"], 12.0);
        assert_eq!(v["normalized"], 2.0);

        let (_, out, _) = call(&["curvature", "--set", "sphere_s2", "--k", "0", "--radius", "2"]);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);

        let (_, out, _) = call(&["curvature", "--set", "plane_r2_in_r3", "--k", "2", "--radius", "4"]);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["value"].as_f64().unwrap() - 16.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn grassmann_sampling() {
        let (code, out, _) = call(&["grassmann", "sample", "--n", "3", "--k", "2", "--count", "2"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 2);
        let frame: Vec<Vec<f64>> = serde_json::from_str(out.lines().next().unwrap()).unwrap();
        assert_eq!((frame.len(), frame[0].len()), (2, 3));

        let (code, out, _) = call(&["grassmann", "sample", "--set", "cross_r2", "--k", "2", "--samples", "100"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["mean"], 4.0);
    }

    #[test]
    fn verify_writes_reports() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let p = path.to_str().unwrap();
        let (code, out, _) = call(&["verify", "--set", "cross_r2", "--theorem", "thm3.9", "--samples", "200", "--out", p]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("PASS thm3.9"));
        let report = crate::report::TheoremReport::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert!(report.overall_pass);

        let (code, out, _) = call(&["verify", "--set", "cross_r2", "--theorem", "prop3.1", "--samples", "200", "--format", "csv"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("theorem,set,seed"));
    }
}
