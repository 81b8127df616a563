//! Command-line front end: closed-form DoF evaluation, curve sweeps for
//! plotting, seeded design construction + verification, rate-slope
//! estimation, and minimum-relay search.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use relay_dof::channel::{sample_channel, SystemConfig};
use relay_dof::designer::{design, select_strategy};
use relay_dof::formulas::{
    corollary2_region, linspace, min_relays, normalized_asymptotic_dof, symmetric_design_bound,
    sweep_curves, theorem1_dof, upper_bound_dof, write_sweep_csv,
};
use relay_dof::io::{channel_to_dto, design_to_dto, DesignFile, RunManifest};
use relay_dof::verifier::{estimate_rate_slope, verify, write_rate_csv};
use relay_dof::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "relay-dof",
    version,
    about = "DoF formulas and certified transceiver designs for the multi-relay MIMO Y channel"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the closed-form DoF expressions at one (M, N, K).
    Formula {
        #[arg(short = 'M')]
        m: usize,
        #[arg(short = 'N')]
        n: usize,
        #[arg(short = 'K')]
        k: usize,
        /// Emit a JSON record instead of plain text.
        #[arg(long)]
        json: bool,
    },
    /// Emit the achievable/symmetric/upper-bound curves over a ratio grid.
    Sweep {
        #[arg(short = 'K')]
        k: usize,
        #[arg(short = 'N', default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        ratio_min: f64,
        #[arg(long, default_value_t = 3.0)]
        ratio_max: f64,
        #[arg(long, default_value_t = 301)]
        points: usize,
        /// Output CSV path (a `.manifest.json` sidecar is written next to it).
        #[arg(long)]
        out: PathBuf,
        /// Omit the timestamp from the manifest for byte-identical reruns.
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Sample a channel, construct a design, verify it, and write the record.
    Design {
        #[arg(short = 'M')]
        m: usize,
        #[arg(short = 'N')]
        n: usize,
        #[arg(short = 'K')]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output JSON path; without it a summary is printed.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the full design record as JSON to stdout.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Estimate the rate slope of a stored design between SNR endpoints.
    Slope {
        /// Design record produced by the `design` subcommand.
        design: PathBuf,
        /// SNR points in dB, comma-separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![40.0, 50.0, 60.0])]
        snr: Vec<f64>,
        /// Optional CSV output of the rate trace.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Smallest relay count achieving a target total DoF.
    MinRelays {
        #[arg(short = 'M')]
        m: usize,
        #[arg(short = 'N')]
        n: usize,
        #[arg(long)]
        target: f64,
        #[arg(long)]
        json: bool,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Self {
            code,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DegenerateInstance { .. } | Error::Unverified(_) | Error::NonFiniteInput => {
                EXIT_DEGENERATE
            }
            _ => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(EXIT_IO, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::new(EXIT_IO, format!("bad JSON: {e}"))
    }
}

fn check_positive(vals: &[(&str, usize)]) -> Result<(), Failure> {
    for (name, v) in vals {
        if *v == 0 {
            return Err(Failure::new(EXIT_USAGE, format!("{name} must be >= 1")));
        }
    }
    Ok(())
}

fn make_manifest(
    subcommand: &str,
    params: serde_json::Value,
    seed: Option<u64>,
    outputs: Vec<String>,
    no_timestamp: bool,
) -> RunManifest {
    let timestamp = (!no_timestamp).then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    RunManifest {
        subcommand: subcommand.to_string(),
        params,
        seed,
        outputs,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

fn cmd_formula(m: usize, n: usize, k: usize, json: bool) -> Result<(), Failure> {
    check_positive(&[("M", m), ("N", n), ("K", k)])?;
    let (mf, nf, kk) = (m as f64, n as f64, k as u32);
    let upper = upper_bound_dof(mf, nf, kk);
    let achievable = theorem1_dof(mf, nf, kk);
    let symmetric = symmetric_design_bound(mf, nf, kk);
    let normalized = normalized_asymptotic_dof(mf, nf, kk);
    let region = corollary2_region(mf, nf, kk).ok();
    if json {
        let rec = serde_json::json!({
            "M": m, "N": n, "K": k,
            "upper": upper,
            "achievable": achievable,
            "symmetric": symmetric,
            "normalized": normalized,
            "region": region,
        });
        println!("{}", serde_json::to_string_pretty(&rec)?);
    } else {
        println!("upper bound     : {upper:.6}");
        println!("achievable      : {achievable:.6}");
        println!("symmetric bound : {symmetric:.6}");
        println!("normalized (/KN): {normalized:.6}");
        match region {
            Some(r) => {
                let hi = r
                    .upper
                    .map_or("inf".to_string(), |u| format!("{u:.6}"));
                println!("region          : {:?} (M/N in [{:.6}, {hi}))", r.region, r.lower);
            }
            None => println!("region          : n/a (requires K >= 2)"),
        }
    }
    Ok(())
}

fn cmd_sweep(
    k: usize,
    n: usize,
    ratio_min: f64,
    ratio_max: f64,
    points: usize,
    out: &Path,
    no_timestamp: bool,
) -> Result<(), Failure> {
    check_positive(&[("K", k), ("N", n)])?;
    if !(ratio_min < ratio_max) || points < 2 {
        return Err(Failure::new(
            EXIT_USAGE,
            "need ratio-min < ratio-max and points >= 2",
        ));
    }
    let grid = linspace(ratio_min, ratio_max, points);
    // Rows are independent; compute in parallel, emit in grid order.
    let pts: Vec<_> = grid
        .par_iter()
        .map(|&r| sweep_curves(k as u32, n as f64, &[r])[0])
        .collect();
    let mut csv = Vec::new();
    write_sweep_csv(&pts, &mut csv).map_err(Failure::from)?;
    write_file(out, &csv)?;
    let manifest = make_manifest(
        "sweep",
        serde_json::json!({
            "K": k, "N": n, "ratio_min": ratio_min,
            "ratio_max": ratio_max, "points": points,
        }),
        None,
        vec![out.display().to_string()],
        no_timestamp,
    );
    let sidecar = out.with_extension("csv.manifest.json");
    write_file(&sidecar, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    eprintln!("wrote {} rows to {}", pts.len(), out.display());
    Ok(())
}

fn cmd_design(
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
    out: Option<&Path>,
    json: bool,
    no_timestamp: bool,
) -> Result<(), Failure> {
    check_positive(&[("M", m), ("N", n), ("K", k)])?;
    let strategy = select_strategy(m, n, k)?;
    let config = SystemConfig::new(m, n, k, strategy.d.min(m))?;
    let ch = sample_channel(config, seed);
    let (dsn, vch) = design(&ch, &strategy, seed)?;
    let report = verify(&vch, &dsn)?;

    let manifest = make_manifest(
        "design",
        serde_json::json!({"M": m, "N": n, "K": k}),
        Some(seed),
        out.iter().map(|p| p.display().to_string()).collect(),
        no_timestamp,
    );
    let file = DesignFile {
        manifest: Some(manifest),
        channel: channel_to_dto(&vch),
        strategy: strategy.clone(),
        design: design_to_dto(&dsn),
        report: (&report).into(),
    };
    let text = serde_json::to_string_pretty(&file)?;
    if let Some(path) = out {
        write_file(path, text.as_bytes())?;
    }
    if json {
        println!("{text}");
    } else {
        println!(
            "strategy {:?}, d = {}, d' = {}, passed = {}, retries = {}",
            strategy.kind, strategy.d, strategy.d_prime, report.passed, report.retries_used
        );
        println!(
            "max residual {:.3e}, ranks {:?}",
            report
                .neutralization_residuals
                .iter()
                .cloned()
                .fold(0.0f64, f64::max),
            report.decodability_ranks
        );
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::new(EXIT_DEGENERATE, "design failed verification"))
    }
}

fn cmd_slope(
    path: &Path,
    snr: &[f64],
    out: Option<&Path>,
    json: bool,
) -> Result<(), Failure> {
    if snr.len() < 2 {
        return Err(Failure::new(EXIT_USAGE, "need at least 2 SNR points"));
    }
    let text = std::fs::read_to_string(path)?;
    let file: DesignFile = serde_json::from_str(&text)?;
    let ch = relay_dof::io::channel_from_dto(&file.channel)?;
    let dsn = relay_dof::io::design_from_dto(&file.strategy, &file.design)?;
    let trace = estimate_rate_slope(&ch, &dsn, snr, 1.0)?;
    let d_sum = 3.0 * dsn.d() as f64;
    let deviation = if d_sum > 0.0 {
        (trace.slope_estimate - d_sum).abs() / d_sum
    } else {
        0.0
    };
    if json {
        let rec = serde_json::json!({
            "slope": trace.slope_estimate,
            "target": d_sum,
            "deviation": deviation,
            "snr_db": trace.snr_db,
            "sum_rate_bits": trace.sum_rate_bits,
        });
        println!("{}", serde_json::to_string_pretty(&rec)?);
    } else {
        println!(
            "slope {:.4} vs 3d = {:.1} (deviation {:.2}%)",
            trace.slope_estimate,
            d_sum,
            100.0 * deviation
        );
    }
    if let Some(csv_path) = out {
        let mut csv = Vec::new();
        write_rate_csv(&trace, &mut csv).map_err(Failure::from)?;
        write_file(csv_path, &csv)?;
    }
    Ok(())
}

fn cmd_min_relays(m: usize, n: usize, target: f64, json: bool) -> Result<(), Failure> {
    check_positive(&[("M", m), ("N", n)])?;
    let k = min_relays(m as f64, n as f64, target)?;
    if json {
        println!(
            "{}",
            serde_json::json!({"M": m, "N": n, "target": target, "min_relays": k})
        );
    } else {
        println!("{k}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Formula { m, n, k, json } => cmd_formula(m, n, k, json),
        Cmd::Sweep {
            k,
            n,
            ratio_min,
            ratio_max,
            points,
            out,
            no_timestamp,
        } => cmd_sweep(k, n, ratio_min, ratio_max, points, &out, no_timestamp),
        Cmd::Design {
            m,
            n,
            k,
            seed,
            out,
            json,
            no_timestamp,
        } => cmd_design(m, n, k, seed, out.as_deref(), json, no_timestamp),
        Cmd::Slope {
            design,
            snr,
            out,
            json,
        } => cmd_slope(&design, &snr, out.as_deref(), json),
        Cmd::MinRelays { m, n, target, json } => cmd_min_relays(m, n, target, json),
    }
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("RELAY_DOF_THREADS") {
        if let Ok(t) = v.parse::<usize>() {
            if t >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
