//! Command-line front end: solve one instance, verify the solver's
//! invariants on an instance, or benchmark solvers over generated instances.
//!
//! Exit codes: 0 success, 1 input/flag errors, 2 solver failure,
//! 3 invariant failure in `verify`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use pathtsp::audit::{AuditLevel, CheckId};
use pathtsp::oracle::{self, TjoinCheck};
use pathtsp::parity::odd_parity_set;
use pathtsp::report::{self, RunReport, StatsReport};
use pathtsp::{
    christofides_hoogeveen, gen_random, parse_instance, solve_rdp, Error, Format, GenFamily,
    MetricInstance, RdpOptions, TourResult,
};
use rayon::prelude::*;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "pathtsp", version, about = "Metric s-t-path TSP solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print a JSON run report.
    Solve(SolveArgs),
    /// Run the invariant suites on one instance and report per-check lines.
    Verify(VerifyArgs),
    /// Benchmark the solvers over generated instances.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Tsplib,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Christofides,
    Rdp,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    #[value(name = "euclidean-unit-square", alias = "euclidean")]
    EuclideanUnitSquare,
    #[value(name = "random-metric-closure", alias = "random")]
    RandomMetricClosure,
}

impl From<FamilyArg> for GenFamily {
    fn from(f: FamilyArg) -> GenFamily {
        match f {
            FamilyArg::EuclideanUnitSquare => GenFamily::EuclideanUnitSquare,
            FamilyArg::RandomMetricClosure => GenFamily::RandomMetricClosure,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    #[arg(long, value_enum, default_value = "rdp")]
    algorithm: AlgorithmArg,
    /// Target slack of the recursive DP guarantee (3/2 + epsilon).
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    /// Solve the LPs and the assembly in exact rational arithmetic.
    #[arg(long)]
    rational: bool,
    /// Write per-call JSONL trace records (includes generated LP rows).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Instance file; omit to generate one instead.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    #[arg(long, value_enum, default_value = "euclidean-unit-square")]
    family: FamilyArg,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long)]
    rational: bool,
    /// Window-size cap for the exhaustive cut enumerations.
    #[arg(long, default_value_t = 10)]
    cap: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "euclidean-unit-square")]
    family: FamilyArg,
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Number of instances; seeds are `seed, seed+1, ...`.
    #[arg(long, default_value_t = 10)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    /// Emit CSV instead of JSON.
    #[arg(long)]
    csv: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn read_instance(path: &PathBuf, format: FormatArg) -> Result<MetricInstance, ExitCode> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(ExitCode::from(1));
        }
    };
    let format = match format {
        FormatArg::Json => Format::Json,
        FormatArg::Tsplib => Format::Tsplib,
    };
    parse_instance(&text, format).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}

fn exact_opt(inst: &MetricInstance) -> Option<f64> {
    if inst.n() <= oracle::HELD_KARP_CAP {
        oracle::held_karp_path(inst, oracle::HELD_KARP_CAP)
            .ok()
            .map(|r| r.opt_cost)
    } else {
        None
    }
}

fn cmd_solve(args: SolveArgs) -> ExitCode {
    let inst = match read_instance(&args.input, args.format) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let started = Instant::now();
    let report = match args.algorithm {
        AlgorithmArg::Christofides => match christofides_hoogeveen(&inst) {
            Ok(tour) => finish_report(report::ALGO_CHRISTOFIDES, tour, &inst, started),
            Err(e) => return solver_failure(e),
        },
        AlgorithmArg::Exact => match oracle::held_karp_path(&inst, oracle::HELD_KARP_CAP) {
            Ok(exact) => finish_report(report::ALGO_EXACT, exact.opt_tour, &inst, started),
            Err(e) => return solver_failure(e),
        },
        AlgorithmArg::Rdp => {
            let opts = RdpOptions {
                rational: args.rational,
                trace_path: args.trace.clone(),
                ..RdpOptions::default()
            };
            match solve_rdp(&inst, args.epsilon, &opts) {
                Ok(out) => {
                    let mut report =
                        finish_report(report::ALGO_RDP, out.tour.clone(), &inst, started);
                    report.epsilon = Some(out.epsilon);
                    report.k = Some(out.k);
                    report.lambda_1 = Some(out.lambda1);
                    report.lp_value_top = Some(out.lp_value_top);
                    report.parity_vector_cost = Some(out.parity_cost);
                    report.stats =
                        StatsReport::from_snapshot(out.stats, started.elapsed().as_millis() as u64);
                    report
                }
                Err(e) => return solver_failure(e),
            }
        }
    };
    if let (Some(ratio), Some(bound)) = (
        report.ratio_vs_exact,
        report::guarantee(&report.algorithm, report.lambda_1),
    ) {
        if ratio > bound * (1.0 + 1e-6) {
            eprintln!("error: tour ratio {ratio} exceeds the {bound} guarantee");
            return ExitCode::from(2);
        }
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("report"));
    ExitCode::SUCCESS
}

fn finish_report(
    algorithm: &str,
    tour: TourResult,
    inst: &MetricInstance,
    started: Instant,
) -> RunReport {
    let ratio = exact_opt(inst).map(|opt| if opt > 0.0 { tour.cost / opt } else { 1.0 });
    RunReport {
        algorithm: algorithm.to_string(),
        epsilon: None,
        k: None,
        lambda_1: None,
        tour,
        lp_value_top: None,
        parity_vector_cost: None,
        stats: StatsReport {
            wall_ms: started.elapsed().as_millis() as u64,
            ..StatsReport::default()
        },
        ratio_vs_exact: ratio,
    }
}

fn solver_failure(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let inst = match &args.input {
        Some(path) => match read_instance(path, args.format) {
            Ok(inst) => inst,
            Err(code) => return code,
        },
        None => match gen_random(args.n, args.family.into(), args.seed) {
            Ok(inst) => inst,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        },
    };

    let opts = RdpOptions {
        rational: args.rational,
        audit_level: AuditLevel::Exhaustive,
        audit_cap: args.cap,
        ..RdpOptions::default()
    };
    let out = match solve_rdp(&inst, args.epsilon, &opts) {
        Ok(out) => out,
        Err(e) => return solver_failure(e),
    };

    let mut failed = false;
    let mut report_check = |name: &str, witness: Option<String>| match witness {
        None => println!("{name}: PASS"),
        Some(w) => {
            failed = true;
            println!("{name}: FAIL ({w})");
        }
    };

    // Per-node solver checks, grouped by invariant.
    for check in [
        CheckId::ChainShape,
        CheckId::FreshLonelyEdges,
        CheckId::TreeUnitCrossing,
        CheckId::PathCostIdentity,
        CheckId::SupportUnit,
        CheckId::LpFeasibility,
        CheckId::BusyLowerBound,
        CheckId::LowCutsChosen,
        CheckId::NarrowComplete,
        CheckId::TJoinMembership,
    ] {
        let witness = out
            .violations
            .iter()
            .find(|v| v.check == check)
            .map(|v| v.detail.clone());
        report_check(&format!("{check}"), witness);
    }

    // Cost-chain checks against the exact optimum.
    if let Some(opt) = exact_opt(&inst) {
        let bound = (1.0 + out.lambda1) * opt;
        report_check(
            "tree-plus-vector cost bound",
            (out.tree_cost + out.lambda1 * out.parity_cost > bound * (1.0 + 1e-9)).then(|| {
                format!(
                    "c(S)+lambda_1*c(y) = {} exceeds {bound}",
                    out.tree_cost + out.lambda1 * out.parity_cost
                )
            }),
        );
        report_check(
            "tour ratio guarantee",
            (out.tour.cost > bound * (1.0 + 1e-6))
                .then(|| format!("tour cost {} exceeds {bound}", out.tour.cost)),
        );
    }

    // Scaled parity vector in the T-join polyhedron, by full enumeration.
    if inst.n() <= oracle::TJOIN_ENUM_CAP {
        let t_set = odd_parity_set(&out.tree, inst.s(), inst.t(), inst.n());
        let witness = match oracle::enumerate_tjoin_cuts(
            &out.y_star,
            &t_set,
            out.lambda1,
            inst.n(),
            oracle::TJOIN_ENUM_CAP,
        ) {
            Ok(TjoinCheck::Ok) => None,
            Ok(TjoinCheck::Violated { side, value }) => {
                Some(format!("cut {side} has scaled value {value}"))
            }
            Err(e) => Some(format!("{e}")),
        };
        report_check("T-join polyhedron enumeration", witness);
    }

    report_check(
        "matching certified by scaled vector",
        (out.matching_cost > out.lambda1 * out.parity_cost + 1e-7 * (1.0 + out.parity_cost)).then(
            || {
                format!(
                    "matching {} exceeds lambda_1*c(y*) = {}",
                    out.matching_cost,
                    out.lambda1 * out.parity_cost
                )
            },
        ),
    );

    if failed {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

#[derive(serde::Serialize)]
struct BenchRow {
    seed: u64,
    n: usize,
    opt: Option<f64>,
    christofides_cost: f64,
    rdp_cost: f64,
    christofides_ratio: Option<f64>,
    rdp_ratio: Option<f64>,
    wall_ms: u64,
}

fn cmd_bench(args: BenchArgs) -> ExitCode {
    // Solves are independent; run seeds in parallel and keep row order.
    let results: Vec<Result<BenchRow, Error>> = (0..args.count)
        .into_par_iter()
        .map(|i| {
            let seed = args.seed + i;
            let inst = gen_random(args.n, args.family.into(), seed)?;
            let started = Instant::now();
            let chr = christofides_hoogeveen(&inst)?;
            let rdp = solve_rdp(&inst, args.epsilon, &RdpOptions::default())?;
            let wall_ms = started.elapsed().as_millis() as u64;
            let opt = exact_opt(&inst);
            Ok(BenchRow {
                seed,
                n: args.n,
                opt,
                christofides_cost: chr.cost,
                rdp_cost: rdp.tour.cost,
                christofides_ratio: opt.map(|o| chr.cost / o),
                rdp_ratio: opt.map(|o| rdp.tour.cost / o),
                wall_ms,
            })
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for result in results {
        match result {
            Ok(row) => rows.push(row),
            Err(e @ Error::InvalidInstance(_)) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            Err(e) => return solver_failure(e),
        }
    }

    if args.csv {
        println!("seed,n,opt,christofides_cost,rdp_cost,christofides_ratio,rdp_ratio,wall_ms");
        for r in &rows {
            let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
            println!(
                "{},{},{},{},{},{},{},{}",
                r.seed,
                r.n,
                fmt(r.opt),
                r.christofides_cost,
                r.rdp_cost,
                fmt(r.christofides_ratio),
                fmt(r.rdp_ratio),
                r.wall_ms
            );
        }
    } else {
        println!("{}", serde_json::to_string_pretty(&rows).expect("rows"));
    }
    ExitCode::SUCCESS
}
