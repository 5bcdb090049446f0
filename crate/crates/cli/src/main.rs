use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use sentinel_core::ltl::{parse_formula, Alphabet, Formula};
use sentinel_core::monitor::{Compiler, SafetyClass, TruthValue};
use sentinel_core::reach::validate_high_assurance;
use sentinel_core::sim::{delorean_scenario, simulate, Scenario, SimError, Trace};
use sentinel_gateway::GatewayConfig;
use thiserror::Error;

/// Runtime assurance toolkit: LTL monitors, reachability checks and shielded simulation.
#[derive(Parser)]
#[command(name = "sentinel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a minimized three-valued monitor and write it as JSON.
    Compile {
        #[arg(long)]
        formula: String,
        /// Comma-separated atomic propositions.
        #[arg(long, value_delimiter = ',')]
        ap: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Also write a Graphviz rendering.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Print Safety or NotSafety; exits 1 for NotSafety.
    CheckSafety {
        #[arg(long)]
        formula: String,
        #[arg(long, value_delimiter = ',')]
        ap: Vec<String>,
    },
    /// Check that the scenario's high assurance region is invariant under its backup law.
    ValidateSb {
        #[arg(long)]
        scenario: PathBuf,
        /// Grid cell side.
        #[arg(long, default_value_t = 0.05)]
        cell: f64,
    },
    /// Simulate one seeded run and write the trace (CSV if the path ends in .csv, JSON otherwise).
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        ticks: u64,
        #[arg(long)]
        out: PathBuf,
        /// Apply the driver's inputs without verification.
        #[arg(long)]
        no_shield: bool,
    },
    /// Run the built-in DeLorean case study and print its summary.
    Casestudy {
        /// safe, faulty-late or full-throttle.
        #[arg(long)]
        driver: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Start the operator gateway.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = sentinel_gateway::DEFAULT_TICK_MS)]
        tick_ms: u64,
        /// Scenario file; the built-in case study if omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Parse(_) | SimError::Invalid(_) | SimError::UnknownProfile(_) => {
                CliError::Usage(e.to_string())
            }
            e => CliError::Internal(e.to_string()),
        }
    }
}

/// 0 when the checked property holds, 1 when it is violated.
enum Status {
    Holds,
    Violated,
}

fn formula(text: &str, ap: &[String]) -> Result<(Formula, Alphabet), CliError> {
    let alphabet = Alphabet::new(ap).map_err(|e| CliError::Usage(e.to_string()))?;
    let f = parse_formula(text, ap).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((f, alphabet))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Scenario::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_trace(path: &Path, t: &Trace) -> Result<(), CliError> {
    let text = if path.extension().is_some_and(|e| e == "csv") {
        t.to_csv()?
    } else {
        t.to_json()
    };
    write(path, &text)
}

fn print_summary(t: &Trace) {
    let s = &t.summary;
    println!(
        "scenario {} driver {} seed {} ({})",
        t.scenario,
        t.driver,
        t.seed,
        if t.shielded { "shielded" } else { "unshielded" }
    );
    println!("ticks: {}", s.ticks);
    match s.first_fault_tick {
        Some(k) => println!(
            "first intervention: tick {k} ({} intervened ticks)",
            s.interventions
        ),
        None => println!("first intervention: none"),
    }
    match (&s.watch, s.crossing_tick, &s.crossing_state) {
        (Some(w), Some(k), Some(x)) => {
            println!(
                "{w} crossing: tick {k} at x = {:.4}, v = {:.4}",
                x[0],
                x.get(1).copied().unwrap_or(f64::NAN)
            )
        }
        (Some(w), _, _) => println!("{w} crossing: none"),
        _ => {}
    }
    println!(
        "final state: {} ({})",
        s.final_state,
        s.final_verdict.symbol()
    );
    println!("violation reached: {}", s.bot_reached);
}

fn run(cli: Cli) -> Result<Status, CliError> {
    match cli.command {
        Command::Compile {
            formula: text,
            ap,
            out,
            dot,
        } => {
            let (f, alphabet) = formula(&text, &ap)?;
            let m = Compiler::default()
                .build_monitor(&f, &alphabet)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            write(&out, &m.to_json())?;
            if let Some(dot) = dot {
                write(&dot, &m.to_dot())?;
            }
            let count = |v| m.states_with(v).len();
            println!(
                "{f}: {} states ({} top, {} bot, {} inconclusive)",
                m.len(),
                count(TruthValue::Top),
                count(TruthValue::Bot),
                count(TruthValue::Inc)
            );
            Ok(Status::Holds)
        }
        Command::CheckSafety { formula: text, ap } => {
            let (f, alphabet) = formula(&text, &ap)?;
            let class = Compiler::default()
                .classify_safety(&f, &alphabet)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            Ok(match class {
                SafetyClass::Safety => {
                    println!("Safety");
                    Status::Holds
                }
                SafetyClass::NotSafety => {
                    println!("NotSafety");
                    Status::Violated
                }
            })
        }
        Command::ValidateSb { scenario, cell } => {
            if !(cell.is_finite() && cell > 0.0) {
                return Err(CliError::Usage(format!(
                    "cell must be positive, got {cell}"
                )));
            }
            let sc = load_scenario(&scenario)?;
            let cfg = &sc.config;
            let report = validate_high_assurance(
                &cfg.sb,
                &cfg.backup,
                &cfg.dynamics,
                &cfg.labels,
                &cfg.monitor,
                cell,
                sc.doc.frame.as_ref(),
            )
            .map_err(|e| CliError::Usage(e.to_string()))?;
            println!("cells checked: {}", report.cells_checked);
            println!("witnesses: {}", report.witnesses.len());
            for w in report.witnesses.iter().take(10) {
                let escapes: Vec<String> = w
                    .escapes_to
                    .iter()
                    .map(|&q| cfg.monitor.state_name(q))
                    .collect();
                println!(
                    "  state {} cell {} {:?} escapes to {}",
                    cfg.monitor.state_name(w.q),
                    w.cell_index,
                    w.cell.0.iter().map(|i| [i.lo, i.hi]).collect::<Vec<_>>(),
                    escapes.join(", ")
                );
            }
            Ok(if report.passed() {
                Status::Holds
            } else {
                Status::Violated
            })
        }
        Command::Run {
            scenario,
            seed,
            ticks,
            out,
            no_shield,
        } => {
            let sc = load_scenario(&scenario)?;
            let t = simulate(&sc, seed, ticks, !no_shield)?;
            write_trace(&out, &t)?;
            print_summary(&t);
            Ok(if t.summary.bot_reached {
                Status::Violated
            } else {
                Status::Holds
            })
        }
        Command::Casestudy { driver, seed, out } => {
            let sc = delorean_scenario(&driver)?;
            let t = simulate(&sc, seed, sc.doc.horizon, true)?;
            if let Some(out) = out {
                write_trace(&out, &t)?;
            }
            print_summary(&t);
            Ok(if t.summary.bot_reached {
                Status::Violated
            } else {
                Status::Holds
            })
        }
        Command::Serve {
            port,
            tick_ms,
            scenario,
        } => {
            if tick_ms == 0 {
                return Err(CliError::Usage("tick-ms must be positive".into()));
            }
            let sc = match scenario {
                Some(path) => load_scenario(&path)?,
                None => delorean_scenario("faulty-late")?,
            };
            let mut cfg = GatewayConfig::new(sc);
            cfg.tick = Duration::from_millis(tick_ms);
            let rt =
                tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port))
                    .await
                    .map_err(|e| CliError::Internal(format!("cannot bind port {port}: {e}")))?;
                let addr = listener
                    .local_addr()
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                println!("gateway listening on ws://{addr}/ws");
                sentinel_gateway::serve(listener, cfg)
                    .await
                    .map_err(|e| CliError::Internal(e.to_string()))
            })?;
            Ok(Status::Holds)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Holds) => ExitCode::SUCCESS,
        Ok(Status::Violated) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
