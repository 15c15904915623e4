use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, RwLock};

use anyhow::Context;
use clap::{Parser, Subcommand};

use cobuild_core::eval::{generate_dataset, generate_dataset_in, run_eval, write_report, TaskId};
use cobuild_core::gateway::build_backend;
use cobuild_core::memory::ShapeLibrary;
use cobuild_core::pipeline::Session;
use cobuild_core::session::{replay_log, ServiceConfig, SessionManager};
use cobuild_server::{load_config, router, AppState};

#[derive(Parser)]
#[command(name = "cobuild", version, about = "Build structures on a 16x16x16 board from plain-language instructions")]
struct Cli {
    /// TOML service config. Env vars fill in remote backend settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory for session logs; overrides the config.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Feed a file of instructions, one per line, to a fresh session.
    Build {
        #[arg(long)]
        script: PathBuf,
    },
    /// Rebuild a session from its log and print the board.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Run an evaluation task and write a report.
    Eval {
        /// i, ii, iii, iv, iv-single, iv-two, v, toolbench or all.
        #[arg(long)]
        task: String,
        /// deterministic or remote; overrides the config.
        #[arg(long)]
        backend: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Exit nonzero when any criterion fails.
        #[arg(long)]
        strict: bool,
        /// Read fixture files from here instead of the built-in copies.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
}

fn config(path: Option<&Path>) -> anyhow::Result<ServiceConfig> {
    let mut config = match path {
        Some(p) => load_config(p)?,
        None => ServiceConfig::default(),
    };
    config.backend = config.backend.with_env();
    Ok(config)
}

fn library(config: &ServiceConfig) -> anyhow::Result<ShapeLibrary> {
    match &config.shape_library {
        Some(p) => Ok(ShapeLibrary::load(p)?),
        None => Ok(ShapeLibrary::new()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut config = config(cli.config.as_deref())?;
    match cli.command {
        Command::Serve { port, data } => {
            if data.is_some() {
                config.data_dir = data;
            }
            serve(config, port)?;
        }
        Command::Build { script } => {
            let backend = build_backend(&config.backend)?;
            let memory = Arc::new(RwLock::new(library(&config)?));
            let mut session = Session::new(backend, memory);
            let file = std::fs::File::open(&script).with_context(|| script.display().to_string())?;
            for line in BufReader::new(file).lines() {
                let line = line?;
                let text = line.trim();
                if text.is_empty() || text.starts_with('#') {
                    continue;
                }
                let outcome = session.submit(text);
                println!("> {text}");
                println!("{}", serde_json::to_string(&outcome)?);
            }
            println!("{}", session.snapshot());
        }
        Command::Replay { log } => {
            let backend = build_backend(&config.backend)?;
            let memory = Arc::new(RwLock::new(library(&config)?));
            let session = replay_log(&log, backend, memory)?;
            println!("{}", session.snapshot());
        }
        Command::Eval {
            task,
            backend,
            seed,
            out,
            strict,
            fixtures,
        } => {
            if let Some(kind) = backend {
                config.backend.kind = serde_json::from_value(serde_json::Value::String(kind.clone()))
                    .map_err(|_| anyhow::anyhow!("unknown backend {kind}"))?;
            }
            let tasks = TaskId::expand(&task)?;
            let backend_name = serde_json::to_value(config.backend.kind)?.as_str().unwrap_or("?").to_string();
            let backend = build_backend(&config.backend)?;
            let dir = out.join(format!("run-{}", chrono::Local::now().format("%Y%m%d-%H%M%S")));
            std::fs::create_dir_all(&dir)?;
            let mut all_passed = true;
            for t in tasks {
                let cases = match &fixtures {
                    Some(f) => generate_dataset_in(t, seed, f)?,
                    None => generate_dataset(t, seed)?,
                };
                let mut report = run_eval(t, backend.clone(), &cases);
                report.backend = backend_name.clone();
                report.seed = Some(seed);
                write_report(&report, &dir)?;
                for c in report.criteria() {
                    println!("{} [{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, t, c.name, c.detail);
                }
                all_passed &= report.passed();
            }
            println!("report written to {}", dir.display());
            if strict && !all_passed {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(config: ServiceConfig, port: u16) -> anyhow::Result<()> {
    let manager = SessionManager::new(config)?;
    let app = router(AppState::new(manager));
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
        log::info!("listening on {}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
