use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use mhn_core::navigator::{GoalStatus, GoalTarget, Proposer};
use mhn_core::simkit::{self, CohortConfig, DirectorySink};
use mhn_service::client::Client;
use mhn_service::journal::{state_hash, JOURNAL_FILE};
use mhn_service::model::{GoalCommand, GuidanceRequest};
use mhn_service::{engine, Engine, EngineOptions};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "mhn", version, about = "Personalized mental health navigator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Clone)]
struct Remote {
    #[arg(long, env = "MHN_SERVER", default_value = "http://127.0.0.1:8080")]
    server: String,
    #[arg(long, env = "MHN_TOKEN", default_value = "provider")]
    token: String,
}

impl Remote {
    fn client(&self) -> Result<Client, Box<dyn std::error::Error>> {
        Ok(Client::new(&self.server, &self.token)?)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "MHN_DATA_DIR", default_value = "mhn-data")]
        data_dir: PathBuf,
        #[arg(long, env = "MHN_BIND_ADDR", default_value = "127.0.0.1:8080")]
        bind: String,
        /// TOML pipeline configuration.
        #[arg(long, env = "MHN_CONFIG")]
        config: Option<PathBuf>,
    },
    /// Upload a raw data directory to a running server, then close open days.
    Ingest {
        dir: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        speed: f64,
        #[arg(long)]
        no_flush: bool,
        #[command(flatten)]
        remote: Remote,
    },
    /// Print the latest state estimate.
    Estimate {
        subject: String,
        #[command(flatten)]
        remote: Remote,
    },
    /// Print the latest depression screen.
    Screen {
        subject: String,
        #[command(flatten)]
        remote: Remote,
    },
    /// Agree a goal if needed, plan a route to it and print the plan.
    Plan {
        subject: String,
        /// Target region label.
        #[arg(long, default_value = "healthy")]
        target: String,
        #[arg(long)]
        provider_approved: bool,
        #[arg(long)]
        dry_run: bool,
        #[command(flatten)]
        remote: Remote,
    },
    /// Synthetic cohorts.
    Simkit {
        #[command(subcommand)]
        cmd: SimCmd,
    },
    /// Request journal tools.
    Journal {
        #[command(subcommand)]
        cmd: JournalCmd,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    January,
    April,
    Regime,
    Loop,
}

#[derive(Subcommand)]
enum SimCmd {
    /// Write a cohort's raw streams and ground-truth ledger.
    Generate {
        /// Cohort JSON; overrides --scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "april")]
        scenario: Scenario,
        #[arg(long)]
        seed: Option<u64>,
        /// Three-minute physio windows instead of fifteen.
        #[arg(long)]
        short_windows: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Feed a data directory to a server URL or into another directory.
    Replay {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        speed: f64,
        /// `http://host:port` or a directory path.
        #[arg(long)]
        target: String,
        #[arg(long, env = "MHN_TOKEN", default_value = "provider")]
        token: String,
    },
}

#[derive(Subcommand)]
enum JournalCmd {
    /// Rebuild a fresh data directory from a journal and print its state hash.
    Replay {
        #[arg(long)]
        journal: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "MHN_CONFIG")]
        config: Option<PathBuf>,
    },
    /// Print the state hash of a data directory.
    Hash {
        #[arg(long, env = "MHN_DATA_DIR")]
        data_dir: PathBuf,
    },
}

fn print_json<T: Serialize>(v: &T) -> Result<(), Box<dyn std::error::Error>> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn replay_to_server(data: &Path, speed: f64, client: &Client) -> Result<usize, Box<dyn std::error::Error>> {
    let n = simkit::replay(data, speed, |b| {
        client.ingest(&b).map(|_| ()).map_err(|e| simkit::SimError::Sink(e.to_string()))
    })?;
    Ok(n)
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.cmd {
        Cmd::Serve { data_dir, bind, config } => {
            let engine = Arc::new(Engine::open(&data_dir, EngineOptions::load(config.as_deref())?)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(mhn_service::api::serve(engine, &bind))?;
        }
        Cmd::Ingest { dir, speed, no_flush, remote } => {
            let client = remote.client()?;
            let n = replay_to_server(&dir, speed, &client)?;
            let closed = if no_flush { Vec::new() } else { client.flush()? };
            let subjects = client.subjects()?;
            print_json(&serde_json::json!({ "batches": n, "flushed": closed.len(), "subjects": subjects }))?;
        }
        Cmd::Estimate { subject, remote } => print_json(&remote.client()?.state(&subject)?)?,
        Cmd::Screen { subject, remote } => {
            let s = remote.client()?.state(&subject)?;
            let screen = s.screen.ok_or("no screen yet")?;
            print_json(&serde_json::json!({
                "subject": subject,
                "date": s.date,
                "score": screen.score,
                "band": screen.band,
                "alert_band": s.screen_alert_band,
                "contributors": screen.contributors,
            }))?;
        }
        Cmd::Plan { subject, target, provider_approved, dry_run, remote } => {
            let client = remote.client()?;
            let want = GoalTarget::Region(target);
            let existing = client
                .goals(&subject)?
                .into_iter()
                .rev()
                .find(|g| g.target == want && g.status == GoalStatus::Consensus);
            let goal = match existing {
                Some(g) => g,
                None => {
                    let g = client.propose_goal(&subject, want, Proposer::Provider)?;
                    client.update_goal(&g, GoalCommand::ProviderAgree)?
                }
            };
            let req = GuidanceRequest { goal_id: Some(goal.id), dry_run, provider_approved, ..Default::default() };
            print_json(&client.guidance(&subject, &req)?)?;
        }
        Cmd::Simkit { cmd } => match cmd {
            SimCmd::Generate { config, scenario, seed, short_windows, out } => {
                let mut cfg = match config {
                    Some(p) => CohortConfig::from_json(&std::fs::read_to_string(p)?)?,
                    None => match scenario {
                        Scenario::January => CohortConfig::january_like(),
                        Scenario::April => CohortConfig::april_like(),
                        Scenario::Regime => CohortConfig::regime_cohort(seed.unwrap_or(7)),
                        Scenario::Loop => CohortConfig::loop_cohort(),
                    },
                };
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                if short_windows {
                    cfg = cfg.with_short_windows();
                }
                let ledger = simkit::generate(&cfg, &out)?;
                eprintln!("wrote {} subjects x {} days to {}", ledger.subjects.len(), cfg.days, out.display());
            }
            SimCmd::Replay { data, speed, target, token } => {
                let n = if target.starts_with("http://") || target.starts_with("https://") {
                    let client = Client::new(&target, &token)?;
                    let n = replay_to_server(&data, speed, &client)?;
                    client.flush()?;
                    n
                } else {
                    let mut sink = DirectorySink::new(PathBuf::from(&target), chrono_tz::UTC);
                    simkit::replay(&data, speed, |b| sink.deliver(b))?
                };
                eprintln!("replayed {n} batches");
            }
        },
        Cmd::Journal { cmd } => match cmd {
            JournalCmd::Replay { journal, out, config } => {
                println!("{}", engine::replay_journal(&journal, &out, EngineOptions::load(config.as_deref())?)?)
            }
            JournalCmd::Hash { data_dir } => {
                if !data_dir.join(JOURNAL_FILE).exists() {
                    eprintln!("warning: {} has no journal", data_dir.display());
                }
                println!("{}", state_hash(&data_dir)?)
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("MHN_LOG").unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
