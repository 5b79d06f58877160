use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcast_sinr::balancer::write_trace_csv;
use mcast_sinr::generate::seeded_uniform_model;
use mcast_sinr::region::{
    direction_fan, golden_deviation, read_region_csv, trace_boundary, write_region_csv,
    zero_outage_map,
};
use mcast_sinr::scenario::{load_zero_outage, Scenario, ScenarioFile};
use mcast_sinr::verify::{self, VerifyOptions};
use mcast_sinr::{
    check_constrained, check_unconstrained, lp_oracle, power_balance, solve_beta_constrained,
    Error, Method, SinrTarget, SolveOptions, Status, Verdict,
};

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_BOUNDARY: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_INTERNAL: u8 = 70;

const EXIT_CODES: &str = "\
Exit codes:
  0   success; for `check`, the target is feasible
  1   `check`: infeasible; `verify`: a property failed; `trace`: golden mismatch
  2   `check`: within 1e-9 of the feasibility threshold
  64  bad arguments, unreadable or invalid input files
  70  internal or numerical failure";

/// Hard-coded relative tolerance for `trace --verify-golden`.
const GOLDEN_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(
    name = "mcast-sinr",
    version,
    about = "SINR feasibility and power balancing for interfering multicast sessions",
    after_help = EXIT_CODES
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether an SINR target is achievable.
    #[command(after_help = EXIT_CODES)]
    Check(CheckArgs),
    /// Maximise the common SINR scaling along a target direction.
    #[command(after_help = EXIT_CODES)]
    Balance(BalanceArgs),
    /// Trace boundary points of the feasible region along a direction fan.
    #[command(after_help = EXIT_CODES)]
    Trace(TraceArgs),
    /// Write a random scenario.
    #[command(after_help = EXIT_CODES)]
    Gen(GenArgs),
    /// Run the randomized property suite.
    #[command(after_help = EXIT_CODES)]
    Verify(VerifyArgs),
    /// Turn a time-varying unicast instance into a multicast scenario.
    #[command(name = "map-zero-outage", after_help = EXIT_CODES)]
    MapZeroOutage(MapArgs),
}

#[derive(Args)]
struct TargetArgs {
    /// Comma-separated SINR targets, one per session.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    mu: Option<Vec<f64>>,
    /// Read --mu in decibels.
    #[arg(long)]
    db: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Brute,
    Iterative,
}

#[derive(Args)]
struct CheckArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
    /// Apply the scenario's power caps.
    #[arg(long)]
    constrained: bool,
    #[arg(long, value_enum, default_value = "brute")]
    method: MethodArg,
    /// Also decide the target by linear programming and report agreement.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct BalanceArgs {
    scenario: PathBuf,
    /// Direction to balance along; all ones by default.
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long)]
    constrained: bool,
    /// Write the per-iteration beta trace as CSV.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    scenario: PathBuf,
    /// Number of directions.
    #[arg(long, default_value_t = 64)]
    fan: usize,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    constrained: bool,
    /// Seed for random fans (more than three sessions).
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Compare against a stored CSV instead of writing one.
    #[arg(long)]
    verify_golden: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    sessions: usize,
    /// Receivers per session.
    #[arg(long)]
    receivers: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, hide = true)]
    inject_bug: bool,
}

#[derive(Args)]
struct MapArgs {
    /// Zero-outage instance JSON file.
    instance: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidModel(_)
            | Error::InvalidTarget(_)
            | Error::InvalidPower(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidSelection { .. }
            | Error::SessionCount { .. }
            | Error::InvalidConstraint(_)
            | Error::Json(_) => EXIT_USAGE,
            _ => EXIT_INTERNAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Balance(a) => cmd_balance(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Verify(a) => cmd_verify(a),
        Command::MapZeroOutage(a) => cmd_map(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    Scenario::from_json(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn target(args: &TargetArgs, n: usize) -> Result<SinrTarget, Failure> {
    let Some(values) = &args.mu else {
        return Ok(SinrTarget::ones(n));
    };
    if values.len() != n {
        return Err(Failure::usage(format!(
            "--mu has {} values but the scenario has {n} sessions",
            values.len()
        )));
    }
    let mu = if args.db {
        SinrTarget::from_db(values)
    } else {
        SinrTarget::new(values.clone())
    };
    mu.map_err(|e| Failure::usage(e.to_string()))
}

fn caps(s: &Scenario, constrained: bool) -> Result<Option<&mcast_sinr::ConstraintSet>, Failure> {
    match (constrained, &s.constraints) {
        (false, _) => Ok(None),
        (true, Some(c)) => Ok(Some(c)),
        (true, None) => Err(Failure::usage(
            "--constrained given but the scenario has no constraints",
        )),
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.10e}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Feasible => "feasible",
        Status::Infeasible => "infeasible",
        Status::Boundary => "boundary",
    }
}

fn cmd_check(a: CheckArgs) -> Outcome {
    let s = load(&a.scenario)?;
    if a.mu_missing() {
        return Err(Failure::usage("--mu is required"));
    }
    let mu = target(&a.target, s.model.num_sessions())?;
    let cons = caps(&s, a.constrained)?;
    let method = match a.method {
        MethodArg::Brute => Method::Brute,
        MethodArg::Iterative => Method::Iterative,
    };
    let v: Verdict = match cons {
        None => check_unconstrained(&s.model, &mu, method)?,
        Some(c) => check_constrained(&s.model, &mu, c, method)?,
    };
    println!("verdict: {}", status_name(v.status));
    println!("criterion: {:.12}", v.criterion_value);
    println!("margin: {:.6e}", v.margin);
    if let Some(w) = &v.witness {
        println!("witness: {}", fmt_vec(w.as_slice()));
    }
    if a.oracle {
        let o = lp_oracle(&s.model, &mu, cons)?;
        let agree = match v.status {
            Status::Boundary => None,
            st => Some(st == o.status),
        };
        let note = match agree {
            None => "not compared in the boundary band",
            Some(true) => "agree",
            Some(false) => "DISAGREE",
        };
        println!("oracle: {} ({note})", status_name(o.status));
        if agree == Some(false) {
            return Err(Failure {
                code: EXIT_INTERNAL,
                message: "spectral verdict and LP oracle disagree".into(),
            });
        }
    }
    Ok(match v.status {
        Status::Feasible => 0,
        Status::Infeasible => EXIT_INFEASIBLE,
        Status::Boundary => EXIT_BOUNDARY,
    })
}

impl CheckArgs {
    fn mu_missing(&self) -> bool {
        self.target.mu.is_none()
    }
}

fn cmd_balance(a: BalanceArgs) -> Outcome {
    let s = load(&a.scenario)?;
    let mu = target(&a.target, s.model.num_sessions())?;
    let opts = SolveOptions::default();
    let report = match caps(&s, a.constrained)? {
        None if a.target.mu.is_none() => power_balance(&s.model, &opts)?,
        None => mcast_sinr::solve_beta(&s.model, &mu, &opts)?,
        Some(c) => {
            let r = solve_beta_constrained(&s.model, &mu, c, &opts)?;
            println!("binding constraint: {}", r.binding + 1);
            r.per_constraint[r.binding].clone()
        }
    };
    println!("beta_star: {:.15e}", report.beta_star);
    println!("p_star: {}", fmt_vec(&report.p_star));
    println!("iterations: {}", report.iterations);
    println!("upper_bound: {:.15e}", report.upper_bound);
    println!("converged: {}", report.converged);
    println!("primitive_set: {}", report.set_primitive);
    println!(
        "fallback: {}",
        report.fallback_used.map_or("none".to_string(), |f| f.to_string())
    );
    if let Some(path) = &a.trace_out {
        write_trace_csv(&report, BufWriter::new(File::create(path)?))?;
        println!("trace: {}", path.display());
    }
    Ok(0)
}

fn cmd_trace(a: TraceArgs) -> Outcome {
    let s = load(&a.scenario)?;
    if a.fan == 0 {
        return Err(Failure::usage("--fan must be at least 1"));
    }
    let cons = caps(&s, a.constrained)?;
    let fan = direction_fan(s.model.num_sessions(), a.fan, a.seed);
    let points = trace_boundary(&s.model, &fan, cons)?;
    if let Some(golden) = &a.verify_golden {
        let rows = read_region_csv(golden)
            .map_err(|e| Failure::usage(format!("{}: {e}", golden.display())))?;
        return match golden_deviation(&points, &rows) {
            Ok(dev) if dev <= GOLDEN_TOL => {
                println!("golden match: max relative deviation {dev:.3e}");
                Ok(0)
            }
            Ok(dev) => {
                println!("golden MISMATCH: max relative deviation {dev:.3e} > {GOLDEN_TOL:e}");
                Ok(EXIT_INFEASIBLE)
            }
            Err(e) => {
                println!("golden MISMATCH: {e}");
                Ok(EXIT_INFEASIBLE)
            }
        };
    }
    match &a.out {
        Some(path) => mcast_sinr::region::emit_region_csv(&points, path)?,
        None => write_region_csv(&points, io::stdout().lock())?,
    }
    Ok(0)
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Outcome {
    if a.sessions == 0 || a.receivers == 0 {
        return Err(Failure::usage("--sessions and --receivers must be at least 1"));
    }
    let model = seeded_uniform_model(a.seed, a.sessions, a.receivers)?;
    let s = Scenario {
        model,
        constraints: None,
        description: Some(format!(
            "random: {} sessions x {} receivers, seed {}",
            a.sessions, a.receivers, a.seed
        )),
    };
    write_text(a.out.as_deref(), &s.to_json()?)?;
    Ok(0)
}

fn cmd_verify(a: VerifyArgs) -> Outcome {
    if a.trials == 0 {
        eprintln!("warning: --trials 0 runs nothing; passing vacuously");
    }
    let report = verify::run(&VerifyOptions {
        trials: a.trials,
        seed: a.seed,
        inject_bug: a.inject_bug,
    });
    for p in &report.properties {
        let mark = if p.failed == 0 { "PASS" } else { "FAIL" };
        println!("{mark} {} ({} passed, {} failed)", p.name, p.passed, p.failed);
        if let Some((seed, msg)) = &p.first_failure {
            println!("     first failure at trial seed {seed}: {msg}");
        }
    }
    println!("total: {} passed, {} failed", report.passed(), report.failed());
    Ok(if report.all_passed() { 0 } else { EXIT_INFEASIBLE })
}

fn cmd_map(a: MapArgs) -> Outcome {
    let inst = load_zero_outage(&a.instance)
        .map_err(|e| Failure::usage(format!("{}: {e}", a.instance.display())))?;
    let model = zero_outage_map(&inst)?;
    let file = ScenarioFile::from_model(
        &model,
        None,
        Some(format!("zero-outage map of {}", a.instance.display())),
    );
    write_text(a.out.as_deref(), &file.to_json()?)?;
    Ok(0)
}
