use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use netbound::correlators::{behavior_from_json, TriangleBehavior};
use netbound::fme::{
    derive_random_marginal_inequalities, mixed_linear_subsumed, reduce_by_symmetry, FamilyKind,
};
use netbound::inequalities::{run_checks, IneqSelection};
use netbound::lpfeas::{max_feasible_e2, nice2_bound, nsi_feasible};
use netbound::scalar::{format_rational, parse_rational, Scalar};
use netbound::scan::{emit_csv, scan, Plane, ScanConfig};
use netbound::trilocal::{
    model_e1e3_zero, model_e2_minus_third, model_max_e1, search_with, SearchConfig, SearchTarget,
    TrilocalModel,
};
use netbound::Error;

#[derive(Parser)]
#[command(
    name = "netbound",
    version,
    about = "Correlation bounds for the triangle network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide compatibility with the hexagon inflation constraints.
    Feasible {
        /// Behavior as inline JSON or a path to a JSON file.
        #[arg(long)]
        behavior: String,
    },
    /// Largest symmetric E2 allowed at a given E1, by LP bisection.
    Maxe2 {
        #[arg(long, allow_hyphen_values = true)]
        e1: String,
        #[arg(long, default_value = "1/10000")]
        tol: String,
    },
    /// Derive the zero-marginal inequalities by Fourier-Motzkin elimination.
    Derive {
        /// Print every irredundant row instead of the symmetry families.
        #[arg(long)]
        raw: bool,
    },
    /// Evaluate closed-form inequalities on a behavior.
    Check {
        #[arg(long)]
        behavior: String,
        #[arg(long, default_value = "all")]
        ineq: String,
    },
    /// Trilocal model evaluation and search.
    Trilocal {
        #[command(subcommand)]
        command: TrilocalCommand,
    },
    /// Classify a grid over a two-dimensional slice.
    Scan(ScanArgs),
}

#[derive(Subcommand)]
enum TrilocalCommand {
    /// Correlators and distribution of a model.
    Eval {
        #[arg(long)]
        model: String,
    },
    /// Search for a model reproducing target correlators.
    Search {
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20_000)]
        budget: usize,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
    },
    /// Print one of the explicit boundary models.
    Explicit {
        #[arg(value_enum)]
        name: Explicit,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Explicit {
    MinusThird,
    MaxE1,
    E1e3Zero,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlaneArg {
    E1e2,
    E2e3,
    Pairwise,
    Finner,
}

#[derive(clap::Args)]
struct ScanArgs {
    #[arg(long, value_enum)]
    plane: PlaneArg,
    /// Fixed E_AC for the pairwise plane.
    #[arg(long, allow_hyphen_values = true)]
    eac: Option<String>,
    #[arg(long, default_value_t = 201)]
    res: usize,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20_000)]
    budget: usize,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-7)]
    threshold: f64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print a JSON report instead of CSV on standard output.
    #[arg(long)]
    json: bool,
}

fn read_json(arg: &str) -> netbound::Result<Value> {
    let text = if arg.trim_start().starts_with(['{', '[']) {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|source| Error::Io {
            path: arg.into(),
            source,
        })?
    };
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))
}

/// A closed pipe on standard output is not an error worth reporting.
fn print_json(v: &Value) {
    let text = serde_json::to_string_pretty(v).expect("values serialize");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn behavior_json(b: &TriangleBehavior) -> Value {
    serde_json::to_value(b).expect("behaviors serialize")
}

fn run(cli: Cli) -> netbound::Result<()> {
    match cli.command {
        Command::Feasible { behavior } => {
            let b = behavior_from_json(&read_json(&behavior)?)?;
            let out = match nsi_feasible(&b) {
                Ok(r) => r.to_json(),
                Err(Error::PositivityViolation { outcome }) => {
                    json!({"status": "positivity-violated", "outcome": outcome.to_string()})
                }
                Err(e) => return Err(e),
            };
            print_json(&out);
        }
        Command::Maxe2 { e1, tol } => {
            let e1 = parse_rational(&e1)?;
            let tol = parse_rational(&tol)?;
            let e2 = max_feasible_e2(&e1, &tol)?;
            let closed = nice2_bound(e1.to_f64());
            print_json(&json!({
                "e1": format_rational(&e1),
                "e2": e2.to_f64(),
                "e2_exact": format_rational(&e2),
                "closed_form": closed,
                "gap_exceeds_tol": (e2.to_f64() - closed).abs() > tol.to_f64(),
            }));
        }
        Command::Derive { raw } => {
            let system = derive_random_marginal_inequalities();
            let mut out = std::io::stdout().lock();
            if raw {
                let _ = write!(out, "{system}");
            } else {
                for family in reduce_by_symmetry(&system)? {
                    let note = if family.kind == FamilyKind::MixedLinear && mixed_linear_subsumed()
                    {
                        " [implied by square-difference]"
                    } else {
                        ""
                    };
                    let _ = writeln!(
                        out,
                        "{} ({} members): {}{note}",
                        family.kind.name(),
                        family.members.len(),
                        system.format_row(&family.representative)
                    );
                }
            }
        }
        Command::Check { behavior, ineq } => {
            let b = behavior_from_json(&read_json(&behavior)?)?;
            let sel: IneqSelection = ineq.parse()?;
            let reports = run_checks(&b, sel)?;
            print_json(&Value::Array(
                reports.iter().map(|r| r.to_json(format_rational)).collect(),
            ));
        }
        Command::Trilocal { command } => run_trilocal(command)?,
        Command::Scan(args) => run_scan(args)?,
    }
    Ok(())
}

fn run_trilocal(command: TrilocalCommand) -> netbound::Result<()> {
    match command {
        TrilocalCommand::Eval { model } => {
            let m = TrilocalModel::from_json(&read_json(&model)?)?;
            let b = m.behavior();
            let d = m.evaluate();
            print_json(&json!({
                "behavior": behavior_json(&b),
                "distribution": d.probs.iter().map(format_rational).collect::<Vec<_>>(),
            }));
        }
        TrilocalCommand::Search {
            target,
            d,
            seed,
            budget,
            restarts,
        } => {
            let target = SearchTarget::from_json(&read_json(&target)?)?;
            let cfg = SearchConfig {
                restarts,
                budget,
                seed,
                ..SearchConfig::default()
            };
            let out = search_with(&target, d, &cfg)?;
            if let Some(w) = &out.warning {
                eprintln!("warning: {w}");
            }
            print_json(&out.to_json());
        }
        TrilocalCommand::Explicit { name } => {
            let out = match name {
                Explicit::MinusThird => {
                    let m = model_e2_minus_third();
                    json!({"model": m.to_json_exact(), "behavior": behavior_json(&m.behavior())})
                }
                Explicit::MaxE1 | Explicit::E1e3Zero => {
                    let (m, res) = match name {
                        Explicit::MaxE1 => model_max_e1()?,
                        _ => model_e1e3_zero()?,
                    };
                    json!({
                        "model": m.to_json_f64(),
                        "correlators": netbound::trilocal::correlators_f64(&m),
                        "resolution": res.to_json(),
                    })
                }
            };
            print_json(&out);
        }
    }
    Ok(())
}

fn run_scan(args: ScanArgs) -> netbound::Result<()> {
    let plane = match args.plane {
        PlaneArg::E1e2 => Plane::E1E2,
        PlaneArg::E2e3 => Plane::E2E3,
        PlaneArg::Finner => Plane::Finner,
        PlaneArg::Pairwise => {
            let eac = args
                .eac
                .as_deref()
                .ok_or_else(|| Error::InvalidConfig("--plane pairwise needs --eac".into()))?;
            Plane::Pairwise {
                eac: parse_rational(eac)?,
            }
        }
    };
    if args.eac.is_some() && !matches!(plane, Plane::Pairwise { .. }) {
        return Err(Error::InvalidConfig(
            "--eac applies to the pairwise plane only".into(),
        ));
    }
    let cfg = ScanConfig {
        res: args.res,
        d: args.d,
        seed: args.seed,
        budget: args.budget,
        restarts: args.restarts,
        threshold: args.threshold,
        ..ScanConfig::new(plane)
    };
    let result = scan(&cfg)?;
    if let Some(path) = &args.out {
        emit_csv(&result, path)?;
    }
    if args.json {
        print_json(&result.to_json());
    } else if args.out.is_none() {
        match result.write_csv(std::io::stdout().lock()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                return Err(Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
            }
            _ => {}
        }
    }
    let nesting = result.audit_nesting();
    eprintln!(
        "{} cells, gap fraction {:.4}, nesting violations {}",
        result.cells.len(),
        result.gap_fraction(),
        nesting.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::Parse(_) | Error::Json(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
