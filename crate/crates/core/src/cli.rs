//! Command-line front end: parameter calculation, extraction, family audits
//! and verification suites. Exit codes: 0 pass, 1 property violation,
//! 2 usage or input error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_traits::ToPrimitive;
use serde_json::json;

use crate::bounds::{classical_delta, extractable_bits, short_seed_params, BoundReport};
use crate::error::{Error, Result};
use crate::gf2poly::BitPolynomial;
use crate::hash_families::{audit_collision_prob, HashFamily, HashFamilyDescriptor, Seed};
use crate::verify::run_suite;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "leftover", version, about = "Seeded randomness extraction and its security bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Output length or distance from uniform for a given min-entropy.
    Params(ParamsArgs),
    /// Hashes an input file with an externally supplied seed.
    Extract(ExtractArgs),
    /// Exhaustively measures the collision probability of a small family.
    FamilyAudit(AuditArgs),
    /// Runs a randomized verification suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct ParamsArgs {
    /// Input length in bits (with --eps: short-seed construction parameters).
    #[arg(long)]
    pub n: Option<u64>,
    /// Output length in bits; the distance is computed.
    #[arg(long)]
    pub l: Option<u64>,
    /// Target distance from uniform; the output length is computed.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Min-entropy of the source.
    #[arg(long)]
    pub hmin: Option<f64>,
    /// Smoothing parameter of the short-seed construction.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Family descriptor, e.g. `concatenated:1024:128:160`.
    #[arg(long)]
    pub family: String,
    /// Seed as little-endian hex, exactly ceil(seed_bits / 4) digits.
    #[arg(long = "seed-hex")]
    pub seed_hex: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output file; `<out>.hdr` records the bit count and family.
    #[arg(long = "out")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[arg(long)]
    pub family: String,
    /// Optional path for the JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Suite name.
    pub suite: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long = "rng-seed", default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Params(a) => cmd_params(a, out),
        Command::Extract(a) => cmd_extract(a, out),
        Command::FamilyAudit(a) => cmd_family_audit(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn usage(msg: &str) -> Error {
    Error::Parameter(msg.to_string())
}

pub fn cmd_params(a: &ParamsArgs, out: &mut dyn Write) -> Result<i32> {
    let h = a.hmin.ok_or_else(|| usage("--hmin is required"))?;
    let mut report = BoundReport::default();
    match (a.l, a.delta) {
        (Some(_), Some(_)) | (None, None) => {
            return Err(usage("give exactly one of --l and --delta"));
        }
        (None, Some(delta)) => {
            let l = extractable_bits(h, delta)?;
            report.l = Some(l);
            report.delta = Some(delta);
            if let (Some(n), Some(eps)) = (a.n, a.eps) {
                if l > 0 && l < n {
                    fill_short_seed(&mut report, n, l, eps)?;
                }
            }
        }
        (Some(l), None) => {
            report.l = Some(l);
            match (a.n, a.eps) {
                (Some(n), Some(eps)) => {
                    let p = fill_short_seed(&mut report, n, l, eps)?;
                    report.delta = Some(p.delta_bound(h));
                }
                (None, None) => {
                    report.delta = Some(classical_delta(l as f64, h));
                    report.eps_star = Some(0.0);
                }
                _ => return Err(usage("--n and --eps go together")),
            }
        }
    }
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(EXIT_PASS)
}

fn fill_short_seed(
    report: &mut BoundReport,
    n: u64,
    l: u64,
    eps: f64,
) -> Result<crate::bounds::ShortSeedParams> {
    let p = short_seed_params(n, l, eps)?;
    report.k = Some(p.k);
    report.s = Some(p.s);
    report.delta1 = Some(p.delta1);
    report.delta2 = Some(p.delta2);
    Ok(p)
}

/// Path of the header file written next to an extraction output.
pub fn header_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

/// Hashes the first `n` bits of `input` (bit `i` is bit `i % 8` of byte
/// `i / 8`) and returns the `l` output bits packed the same way.
pub fn extract_bytes(desc: &HashFamilyDescriptor, seed_hex: &str, input: &[u8]) -> Result<Vec<u8>> {
    let n = desc.n();
    if input.len() * 8 < n {
        return Err(Error::InputLength {
            expected: n,
            got: input.len() * 8,
        });
    }
    let seed = Seed::from_hex(seed_hex, desc.seed_bits())?;
    let family = HashFamily::new(desc.clone())?;
    let x = BitPolynomial::from_bytes_le(input, n);
    let z = family.hash(&x, &seed)?;
    Ok(z.to_bytes_le(desc.l()))
}

pub fn cmd_extract(a: &ExtractArgs, out: &mut dyn Write) -> Result<i32> {
    let desc: HashFamilyDescriptor = a.family.parse()?;
    let input = fs::read(&a.input)?;
    let bytes = extract_bytes(&desc, &a.seed_hex, &input)?;
    fs::write(&a.output, &bytes)?;
    fs::write(
        header_path(&a.output),
        format!("bits={}\nfamily={}\n", desc.l(), desc),
    )?;
    writeln!(out, "{}", json!({ "bits": desc.l(), "family": desc.to_string(), "bytes": bytes.len() }))?;
    Ok(EXIT_PASS)
}

pub fn cmd_family_audit(a: &AuditArgs, out: &mut dyn Write) -> Result<i32> {
    let desc: HashFamilyDescriptor = a.family.parse()?;
    let audited = audit_collision_prob(&desc)?;
    let bound = desc.theoretical_delta();
    let pass = audited <= bound;
    let report = json!({
        "family": desc.to_string(),
        "audited_delta": audited.to_string(),
        "audited_delta_f64": audited.to_f64(),
        "theoretical_delta": bound.to_string(),
        "theoretical_delta_f64": bound.to_f64(),
        "pass": pass,
    });
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(path) = &a.report {
        fs::write(path, &text)?;
    }
    writeln!(out, "{text}")?;
    Ok(if pass { EXIT_PASS } else { EXIT_VIOLATION })
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let report = run_suite(&a.suite, a.trials, a.rng_seed)?;
    let text = report.to_json()?;
    if let Some(path) = &a.report {
        fs::write(path, &text)?;
    }
    writeln!(
        out,
        "{} trials={} seed={} worst_margin={:e} failures={} {}",
        report.suite,
        report.trials,
        report.seed,
        report.worst_margin,
        report.failures.len(),
        if report.passed { "PASS" } else { "FAIL" }
    )?;
    Ok(if report.passed { EXIT_PASS } else { EXIT_VIOLATION })
}
