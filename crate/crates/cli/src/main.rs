//! Command-line front-end: construct relay streaming codes, dump their
//! matrices, simulate schedule pairs, verify exhaustively or at random, and
//! sweep parameter grids into CSV.
//!
//! Exit codes: 0 success, 1 usage error, 2 infeasible parameters,
//! 3 verification failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use streamcode::{
    build_tbsc, default_horizon, feasibility, predicted_profile_a, predicted_profile_b,
    verify_tbsc, worst_case_delays, DelayProfile, ErasureSchedule, Error, RelayNetworkSpec,
    TypeAParams, TypeBParams, VerifyMode,
};

const SCHEMA_VERSION: u32 = 1;

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "streamcode",
    version,
    about = "Relay streaming codes for burst-erasure channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a (b1, b2, T) code and write its manifest and matrix dumps.
    Construct(ConstructArgs),
    /// Check a code against many admissible erasure schedule pairs.
    Verify(VerifyArgs),
    /// Run one schedule pair through the full pipeline.
    Simulate(SimulateArgs),
    /// Tabulate feasibility, rate and verification over a parameter grid.
    Sweep(SweepArgs),
    /// Reproduce the (2, 3, 7) worked example and assert every value.
    Example,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long = "b1")]
    b1: usize,
    #[arg(long = "b2")]
    b2: usize,
    #[arg(long = "T")]
    t: usize,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Output directory (default: $STREAMCODE_OUT_DIR or "." plus a
    /// per-instance folder).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Enumerate every admissible schedule pair instead of sampling.
    #[arg(long)]
    exhaustive: bool,
    /// Number of random schedule pairs in randomized mode.
    #[arg(long, default_value_t = 1000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Simulated packets (default 4*(T+1); exhaustive default 2*(T+1)).
    #[arg(long)]
    horizon: Option<usize>,
    /// Write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// SR-hop erasures: "0,1,8-9", or "@file" with the same syntax.
    #[arg(long = "sr-erase", default_value = "")]
    sr_erase: String,
    /// RD-hop erasures, same syntax.
    #[arg(long = "rd-erase", default_value = "")]
    rd_erase: String,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    /// Single value or inclusive range "a..b".
    #[arg(long = "b1")]
    b1: String,
    #[arg(long = "b2")]
    b2: String,
    #[arg(long = "T")]
    t: String,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Serialize)]
struct Document<T: Serialize> {
    schema_version: u32,
    tool_version: String,
    #[serde(flatten)]
    body: T,
}

fn document<T: Serialize>(body: T) -> Document<T> {
    Document {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        body,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_USAGE)
            };
        }
    };
    let result = match cli.command {
        Command::Construct(args) => cmd_construct(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Example => cmd_example(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e.downcast_ref::<Error>() {
                Some(Error::InfeasibleParams(_)) | Some(Error::InvalidParams(_)) => EXIT_INFEASIBLE,
                _ => EXIT_USAGE,
            };
            ExitCode::from(code)
        }
    }
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

/// Predicted delay profiles of the two hops per the construction recipe.
fn predicted_profiles(b1: usize, b2: usize, t: usize) -> (DelayProfile, DelayProfile) {
    if b2 >= b1 {
        (
            predicted_profile_a(&TypeAParams {
                b: b1,
                w: b2,
                k: t - b1,
                horizon: t - b2,
            }),
            predicted_profile_b(&TypeBParams {
                b: b2,
                k: t - b1,
                horizon: t - b1,
            }),
        )
    } else {
        (
            predicted_profile_b(&TypeBParams {
                b: b1,
                k: t - b2,
                horizon: t - b2,
            }),
            predicted_profile_a(&TypeAParams {
                b: b2,
                w: b1,
                k: t - b2,
                horizon: t - b1,
            }),
        )
    }
}

fn profile_str(p: &DelayProfile) -> String {
    p.0.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn out_dir_default() -> PathBuf {
    std::env::var_os("STREAMCODE_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn build_checked(p: &ParamArgs) -> AnyResult<RelayNetworkSpec> {
    Ok(build_tbsc(p.b1, p.b2, p.t)?)
}

fn cmd_construct(args: ConstructArgs) -> AnyResult<ExitCode> {
    let p = &args.params;
    let report = feasibility(p.b1, p.b2, p.t)?;
    let spec = build_checked(p)?;
    let (pred_sr, pred_rd) = predicted_profiles(p.b1, p.b2, p.t);

    let dir = args
        .out
        .unwrap_or_else(|| out_dir_default().join(format!("tbsc-{}-{}-{}", p.b1, p.b2, p.t)));
    std::fs::create_dir_all(&dir)?;
    std::fs::write(
        dir.join("spec.json"),
        serde_json::to_string_pretty(&document(&spec))? + "\n",
    )?;
    let mut matrix_files = 0;
    for (name, code) in [("sr", &spec.sr), ("rd", &spec.rd)] {
        for i in code.nonzero_parity_indices() {
            std::fs::write(
                dir.join(format!("{name}_P{i}.txt")),
                code.parity[i].to_text(),
            )?;
            matrix_files += 1;
        }
    }

    println!("rate: {}", spec.rate());
    println!("path: {}", report.path);
    println!(
        "feasible: {} (sufficient: {}, prior-work divisibility: {})",
        report.feasible, report.sufficient, report.prior_work
    );
    println!("SR profile: {}", profile_str(&pred_sr));
    println!("RD profile: {}", profile_str(&pred_rd));
    println!(
        "wrote spec.json and {matrix_files} matrix files to {}",
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> AnyResult<ExitCode> {
    let p = &args.params;
    let spec = build_checked(p)?;
    let (mode, horizon) = if args.exhaustive {
        (
            VerifyMode::Exhaustive,
            args.horizon.unwrap_or(2 * (p.t + 1)),
        )
    } else {
        (
            VerifyMode::Randomized {
                budget: args.budget,
                seed: args.seed,
            },
            args.horizon.unwrap_or_else(|| default_horizon(p.t)),
        )
    };
    let report = verify_tbsc(&spec, mode, horizon)?;

    let rendered =
        match args.format {
            Format::Json => serde_json::to_string_pretty(&document(&report))? + "\n",
            _ => {
                let mut s =
                    format!(
                "verify ({},{},{}) mode={} horizon={} pairs={}\nmax-delay: {}\nresult: {}\n",
                report.b1,
                report.b2,
                report.deadline,
                report.mode,
                report.horizon,
                report.pairs_checked,
                report.max_delay.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","),
                if report.pass { "pass" } else { "FAIL" },
            );
                if let Some(f) = &report.failure {
                    s.push_str(&format!(
                        "failure: sr={:?} rd={:?}: {}\n",
                        f.sr_erased, f.rd_erased, f.detail
                    ));
                }
                s
            }
        };
    emit(args.out.as_deref(), &rendered)?;
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAILED)
    })
}

/// Parse "0,1,8-9" (or "@file" containing the same) into indices.
fn parse_indices(input: &str) -> AnyResult<Vec<usize>> {
    let text = if let Some(path) = input.strip_prefix('@') {
        std::fs::read_to_string(path)?
    } else {
        input.to_string()
    };
    let mut out = Vec::new();
    for piece in text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
    {
        match piece.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
                out.extend(a..=b);
            }
            None => out.push(piece.trim().parse()?),
        }
    }
    Ok(out)
}

fn cmd_simulate(args: SimulateArgs) -> AnyResult<ExitCode> {
    let p = &args.params;
    let spec = build_checked(p)?;
    let horizon = args.horizon.unwrap_or_else(|| default_horizon(p.t));
    let sr = ErasureSchedule::new(parse_indices(&args.sr_erase)?, p.b1, p.t + 1);
    let rd = ErasureSchedule::new(parse_indices(&args.rd_erase)?, p.b2, p.t + 1);
    let report = streamcode::simulate_with_random_source(&spec, &sr, &rd, horizon, args.seed)?;

    let rendered =
        match args.format {
            Format::Json => serde_json::to_string_pretty(&document(&report))? + "\n",
            _ => {
                let mut s =
                    format!(
                "simulate ({},{},{}) horizon={} sr={:?} rd={:?}\nmax-delay: {}\nresult: {}\n",
                p.b1,
                p.b2,
                p.t,
                report.horizon,
                report.sr_erased,
                report.rd_erased,
                report.max_delay.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","),
                if report.success { "pass" } else { "FAIL" },
            );
                if let Some(f) = &report.failure {
                    s.push_str(&format!("failure: {f}\n"));
                }
                s
            }
        };
    emit(args.out.as_deref(), &rendered)?;
    Ok(if report.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAILED)
    })
}

/// Single value "n" or inclusive range "a..b".
fn parse_range(input: &str) -> AnyResult<Vec<usize>> {
    if let Some((a, b)) = input.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
        Ok((a..=b).collect())
    } else {
        Ok(vec![input.trim().parse()?])
    }
}

#[derive(Serialize)]
struct SweepRow {
    b1: usize,
    b2: usize,
    t: usize,
    feasible: bool,
    path: String,
    rate: String,
    sufficient: bool,
    prior_work: bool,
    pass: String,
}

fn cmd_sweep(args: SweepArgs) -> AnyResult<ExitCode> {
    let mut grid = Vec::new();
    for &b1 in &parse_range(&args.b1)? {
        for &b2 in &parse_range(&args.b2)? {
            for &t in &parse_range(&args.t)? {
                grid.push((b1, b2, t));
            }
        }
    }
    // Cells are independent; order of results is fixed by the grid order.
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&(b1, b2, t)| {
            let Ok(report) = feasibility(b1, b2, t) else {
                return SweepRow {
                    b1,
                    b2,
                    t,
                    feasible: false,
                    path: "none".into(),
                    rate: String::new(),
                    sufficient: false,
                    prior_work: false,
                    pass: String::new(),
                };
            };
            let pass = if report.feasible {
                let verified = build_tbsc(b1, b2, t).and_then(|spec| worst_case_delays(&spec));
                if verified.is_ok() { "pass" } else { "fail" }.to_string()
            } else {
                String::new()
            };
            SweepRow {
                b1,
                b2,
                t,
                feasible: report.feasible,
                path: report.path.to_string(),
                rate: report.optimal_rate.to_string(),
                sufficient: report.sufficient,
                prior_work: report.prior_work,
                pass,
            }
        })
        .collect();

    let rendered = match args.format {
        Format::Json => serde_json::to_string_pretty(&document(&rows))? + "\n",
        _ => {
            let mut s = String::from("b1,b2,T,feasible,path,rate,sufficient,prior_work,pass\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.b1, r.b2, r.t, r.feasible, r.path, r.rate, r.sufficient, r.prior_work, r.pass
                ));
            }
            s
        }
    };
    emit(args.out.as_deref(), &rendered)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_example() -> AnyResult<ExitCode> {
    let spec = build_tbsc(2, 3, 7)?;
    assert_eq!(spec.rate().to_string(), "5/8");
    println!("rate: 5/8");

    assert_eq!(spec.sr.nonzero_parity_indices(), vec![2, 4]);
    assert_eq!(
        spec.sr.parity[2].to_text(),
        "5 3\n100\n010\n001\n000\n000\n"
    );
    assert_eq!(
        spec.sr.parity[4].to_text(),
        "5 3\n000\n000\n000\n100\n010\n"
    );
    println!("SR nonzero parity: P2, P4 (as printed)");

    assert_eq!(spec.rd.nonzero_parity_indices(), vec![1, 2, 3, 5]);
    assert_eq!(
        spec.rd.parity[1].to_text(),
        "5 3\n001\n000\n000\n000\n000\n"
    );
    assert_eq!(
        spec.rd.parity[2].to_text(),
        "5 3\n000\n001\n000\n000\n000\n"
    );
    assert_eq!(
        spec.rd.parity[3].to_text(),
        "5 3\n100\n010\n000\n000\n000\n"
    );
    assert_eq!(
        spec.rd.parity[5].to_text(),
        "5 3\n000\n000\n100\n010\n001\n"
    );
    println!("RD nonzero parity: P1, P2, P3, P5 (as printed)");

    let (pred_sr, pred_rd) = predicted_profiles(2, 3, 7);
    assert_eq!(profile_str(&pred_sr), "2,2,2,4,4");
    assert_eq!(profile_str(&pred_rd), "3,3,5,5,5");
    assert_eq!(streamcode::measure_delay_profile(&spec.sr)?, pred_sr);
    assert_eq!(streamcode::measure_delay_profile(&spec.rd)?, pred_rd);
    println!("SR profile: 2,2,2,4,4");
    println!("RD profile: 3,3,5,5,5");

    let worst = worst_case_delays(&spec)?;
    assert_eq!(profile_str(&worst), "7,7,7,7,7");
    println!("worst-case end-to-end delay: 7,7,7,7,7");
    println!("all worked-example values reproduced");
    Ok(ExitCode::SUCCESS)
}

fn emit(path: Option<&std::path::Path>, content: &str) -> AnyResult<()> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => print!("{content}"),
    }
    Ok(())
}
