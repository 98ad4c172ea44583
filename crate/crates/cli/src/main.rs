//! `spinfactor` command-line front end.
//!
//! JSON goes to stdout, diagnostics to stderr. Exit codes: 0 success,
//! 1 failing verification, 2 malformed input, 3 unexpected monotonicity
//! outcome, 4 capacity solver did not converge.

mod dsl;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use spinfactor::capacity::{capacity_closed_form, capacity_finite, CapacityResult};
use spinfactor::divergence::{bregman, local_divergence};
use spinfactor::monotonicity::{
    critical_alpha, critical_function, empirical_monotonicity, write_violations_csv, ChannelFamily,
};
use spinfactor::verify::{run_suite, Suite};
use spinfactor::{Error, Generator, State};

use dsl::{common_dim, StateArg};

const EXIT_VERIFY: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_MONOTONE: u8 = 3;
const EXIT_CONVERGENCE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "spinfactor", version, about = "Divergences, monotonicity and capacity on spin factors")]
struct Cli {
    /// Omit the timestamp field so identical runs print identical bytes.
    #[arg(long, global = true)]
    reproducible: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bregman divergence D_F(rho, sigma) and local divergence D^F(rho, sigma).
    ///
    /// States: `center`, `pure:eK` (K from 1), `v:[..]` (Bloch vector, pure
    /// states at radius 1/2) or JSON `{"d":..,"v":[..],"s":0.5}`.
    Div {
        #[arg(long = "gen")]
        generator: String,
        #[arg(long)]
        rho: String,
        #[arg(long)]
        sigma: String,
        /// Dimension for `center` / `pure:eK` when no explicit state fixes it (default 2).
        #[arg(long)]
        d: Option<usize>,
    },
    /// Critical Tsallis order alpha* where alpha = ((alpha-3)/2)^(alpha-3).
    CriticalAlpha {
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Write `alpha,g` for 500 points on [3, 8], g(alpha) = alpha - ((alpha-3)/2)^(alpha-3).
        #[arg(long)]
        emit_curve: Option<PathBuf>,
    },
    /// Monte-Carlo monotonicity test under random channels.
    ///
    /// Exit 0 when no violation is found (with --expect-violations: when at
    /// least one is found), 3 otherwise. CSV columns: trial,d,excess,A,c,rho,sigma
    /// with `;`-separated vectors (A row-major) and 17 significant digits.
    Monotone {
        #[arg(long = "gen")]
        generator: String,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = spinfactor::monotonicity::MONOTONE_TOL)]
        tol: f64,
        /// Sample dilations around random states only.
        #[arg(long)]
        dilations_only: bool,
        #[arg(long)]
        expect_violations: bool,
        /// Write witness rows to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Minimax regret: closed form on the ball, or Frank-Wolfe over a finite set.
    Capacity {
        #[arg(long = "gen")]
        generator: String,
        #[arg(long, conflicts_with = "states", requires = "d")]
        ball: bool,
        #[arg(long)]
        d: Option<usize>,
        /// JSON array of states (any shorthand, Bloch vectors or state objects).
        #[arg(long, required_unless_present = "ball")]
        states: Option<PathBuf>,
        #[arg(long, default_value_t = spinfactor::capacity::CAPACITY_TOL)]
        tol: f64,
        #[arg(long, default_value_t = spinfactor::capacity::CAPACITY_MAX_ITER)]
        max_iter: usize,
    },
    /// Run a property suite: algebra, oracle, divergence, monotonicity, capacity, recovery or all.
    Verify {
        suite: String,
        #[command(flatten)]
        seed: SeedArg,
    },
}

#[derive(Args, Debug)]
struct SeedArg {
    #[arg(long, env = "SPINFACTOR_SEED", default_value_t = 0)]
    seed: u64,
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn float_or_inf(x: f64) -> Value {
    if x == f64::INFINITY {
        json!("inf")
    } else {
        json!(x)
    }
}

/// Prints a JSON object, adding a timestamp unless reproducible.
fn emit(mut obj: Map<String, Value>, reproducible: bool) -> io::Result<()> {
    if !reproducible {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        obj.insert("timestamp".into(), json!(now));
    }
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, &Value::Object(obj)).map_err(io::Error::other)?;
    writeln!(out)
}

fn to_object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("serialized structs are objects"),
    }
}

fn parse_generator(s: &str) -> Result<Generator, Failure> {
    let g: Generator = s.parse()?;
    g.validate()?;
    Ok(g)
}

fn cmd_div(gen: &str, rho: &str, sigma: &str, d: Option<usize>, reproducible: bool) -> Result<(), Failure> {
    let f = parse_generator(gen)?;
    let (rho, sigma) = (StateArg::parse(rho)?, StateArg::parse(sigma)?);
    let d = common_dim(&[&rho, &sigma], d)?;
    let (rho, sigma) = (rho.resolve(d)?, sigma.resolve(d)?);
    let value = bregman(&f, &rho, &sigma)?;
    // The Hessian form blows up at a singular sigma when f'' does.
    let local = match local_divergence(&f, &rho, &sigma) {
        Ok(v) => v,
        Err(Error::Domain { .. }) => f64::INFINITY,
        Err(e) => return Err(e.into()),
    };
    let mut obj = Map::new();
    obj.insert("D_F".into(), float_or_inf(value));
    obj.insert("D^F".into(), float_or_inf(local));
    emit(obj, reproducible)?;
    Ok(())
}

fn write_curve(path: &PathBuf) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["alpha", "g"]).map_err(io::Error::other)?;
    for k in 0..500 {
        let alpha = 3.0 + 5.0 * k as f64 / 499.0;
        w.write_record([format!("{alpha:.16e}"), format!("{:.16e}", critical_function(alpha))])
            .map_err(io::Error::other)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_critical_alpha(tol: f64, curve: Option<&PathBuf>, reproducible: bool) -> Result<(), Failure> {
    if !(tol > 0.0) {
        return Err(input_error(format!("tolerance must be positive, got {tol}")));
    }
    let c = critical_alpha(tol)?;
    if let Some(path) = curve {
        write_curve(path)?;
    }
    let obj = to_object(serde_json::to_value(&c).map_err(io::Error::other)?);
    emit(obj, reproducible)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_monotone(
    gen: &str,
    d: usize,
    trials: u64,
    seed: u64,
    tol: f64,
    dilations_only: bool,
    expect_violations: bool,
    csv: Option<&PathBuf>,
    reproducible: bool,
) -> Result<(), Failure> {
    let f = parse_generator(gen)?;
    let family = if dilations_only {
        ChannelFamily::Dilations
    } else {
        ChannelFamily::General
    };
    let report = empirical_monotonicity(&f, d, trials, seed, tol, family)?;
    if let Some(path) = csv {
        write_violations_csv(&report, BufWriter::new(File::create(path)?))?;
    }
    let mut obj = to_object(serde_json::to_value(&report).map_err(io::Error::other)?);
    obj.insert("generator".into(), json!(f.to_string()));
    obj.insert("violation_count".into(), json!(report.violations.len()));
    emit(obj, reproducible)?;
    let found = !report.violations.is_empty();
    if found == expect_violations {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_MONOTONE,
            message: if found {
                format!("{} monotonicity violations", report.violations.len())
            } else {
                "no violations found".into()
            },
        })
    }
}

fn load_states(path: &PathBuf) -> Result<Vec<State>, Failure> {
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let Value::Array(items) = value else {
        return Err(input_error("states file must hold a JSON array"));
    };
    let args: Vec<StateArg> = items.into_iter().map(StateArg::from_json).collect::<Result<_, _>>()?;
    if args.is_empty() {
        return Err(input_error("states file is empty"));
    }
    let d = common_dim(&args.iter().collect::<Vec<_>>(), None)?;
    Ok(args.iter().map(|a| a.resolve(d)).collect::<Result<_, _>>()?)
}

fn capacity_json(r: &CapacityResult, method: &str) -> Result<Map<String, Value>, Failure> {
    let mut obj = to_object(serde_json::to_value(r).map_err(io::Error::other)?);
    if r.optimizer.is_center(0.0) {
        obj.insert("optimizer".into(), json!("center"));
    }
    obj.insert("method".into(), json!(method));
    Ok(obj)
}

fn cmd_capacity(
    gen: &str,
    ball: bool,
    d: Option<usize>,
    states: Option<&PathBuf>,
    tol: f64,
    max_iter: usize,
    reproducible: bool,
) -> Result<(), Failure> {
    let f = parse_generator(gen)?;
    let (result, method) = if ball {
        let d = d.ok_or_else(|| input_error("--ball needs --d"))?;
        (capacity_closed_form(&f, d)?, "closed_form")
    } else {
        let path = states.ok_or_else(|| input_error("need --ball or --states"))?;
        let states = load_states(path)?;
        (capacity_finite(&f, &states, tol, max_iter)?, "frank_wolfe")
    };
    emit(capacity_json(&result, method)?, reproducible)?;
    if result.converged {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_CONVERGENCE,
            message: format!("not converged after {} iterations, gap {:e}", result.iterations, result.gap),
        })
    }
}

fn cmd_verify(suite: &str, seed: u64) -> Result<(), Failure> {
    let suites = Suite::parse_list(suite)?;
    let mut out = io::stdout().lock();
    let mut failures = 0;
    for s in suites {
        for o in run_suite(s, seed) {
            writeln!(
                out,
                "{:<4} {:<13} {:<55} {}",
                if o.passed { "PASS" } else { "FAIL" },
                o.suite.name(),
                o.property,
                o.detail
            )?;
            if !o.passed {
                failures += 1;
                if let Some((seed, trial)) = o.failing_trial {
                    writeln!(out, "     replay: seed {seed}, trial {trial}")?;
                }
            }
        }
    }
    if failures == 0 {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFY,
            message: format!("{failures} properties failed"),
        })
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let rep = cli.reproducible;
    match cli.command {
        Command::Div {
            generator,
            rho,
            sigma,
            d,
        } => cmd_div(&generator, &rho, &sigma, d, rep),
        Command::CriticalAlpha { tol, emit_curve } => cmd_critical_alpha(tol, emit_curve.as_ref(), rep),
        Command::Monotone {
            generator,
            d,
            trials,
            seed,
            tol,
            dilations_only,
            expect_violations,
            csv,
        } => cmd_monotone(
            &generator,
            d,
            trials,
            seed.seed,
            tol,
            dilations_only,
            expect_violations,
            csv.as_ref(),
            rep,
        ),
        Command::Capacity {
            generator,
            ball,
            d,
            states,
            tol,
            max_iter,
        } => cmd_capacity(&generator, ball, d, states.as_ref(), tol, max_iter, rep),
        Command::Verify { suite, seed } => cmd_verify(&suite, seed.seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("spinfactor: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
