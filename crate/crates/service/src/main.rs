use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use chrono::Utc;
use clap::{Parser, Subcommand};
use winofusion::app::{generate, App};
use winofusion::config::Config;
use winofusion::server;
use winofusion_core::pipeline::{serve_protocol, RuleAnnotator, BUNDLED_CORPUS};
use winofusion_core::quality::Role;
use winofusion_core::text::Lexicon;

#[derive(Parser)]
#[command(name = "winofusion", version, about = "Collaborative Winograd schema development")]
struct Cli {
    /// Configuration file (overridden by WINOFUSION_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API and the aggregation scheduler.
    Serve,
    /// Generate drafts from a corpus and write them as JSON lines.
    Gen {
        /// Corpus file, one sentence per line; the bundled corpus by default.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Override the sentence length bound.
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Inspect the adaptivity state.
    Adapt {
        /// Print counters, weights and the length bound.
        #[arg(long)]
        show: bool,
    },
    /// Write valid-finished schemas as schemas-<date>.jsonl files.
    Export {
        #[arg(long)]
        out: PathBuf,
    },
    /// Create an account and print its key.
    Provision {
        #[arg(long)]
        id: String,
        #[arg(long, value_parser = parse_role)]
        role: Role,
        /// Use this key instead of a generated one.
        #[arg(long)]
        key: Option<String>,
    },
    /// Answer annotation requests on stdin with the built-in annotator.
    AnnotateStdio,
}

fn parse_role(s: &str) -> Result<Role, String> {
    match s {
        "qualificator" => Ok(Role::Qualificator),
        "supervisor" => Ok(Role::Supervisor),
        "admin" => Ok(Role::Admin),
        _ => Err(format!("unknown role '{s}'")),
    }
}

fn open(config: Config) -> Result<App> {
    let (app, restored) = App::open(config, Utc::now()).context("opening the event store")?;
    if let Some(h) = restored.halt {
        eprintln!("warning: event log stopped at line {} ({}); later lines were moved aside", h.line, h.error);
    }
    Ok(app)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let config = Config::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Serve => {
            let app = open(config)?;
            tokio::runtime::Runtime::new()?.block_on(server::serve(app))?;
        }
        Command::Gen { corpus, out, max_len } => {
            let mut cfg = config.platform.pipeline.clone();
            if let Some(n) = max_len {
                cfg.sentence_length_max = n;
            }
            cfg.validate()?;
            let (bytes, name) = match &corpus {
                Some(p) => (fs::read(p).with_context(|| format!("reading {}", p.display()))?, p.display().to_string()),
                None => (BUNDLED_CORPUS.as_bytes().to_vec(), "bundled".to_string()),
            };
            let name = name.rsplit('/').next().unwrap_or(&name).to_string();
            let generated = generate(&bytes, &name, &cfg, 1);
            let mut w = BufWriter::new(fs::File::create(&out)?);
            for d in &generated.drafts {
                serde_json::to_writer(&mut w, d)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
            for d in &generated.dropped {
                eprintln!("dropped line {}: {}", d.line, serde_json::to_string(&d.reason)?);
            }
            eprintln!("{} drafts written to {}", generated.drafts.len(), out.display());
        }
        Command::Adapt { show } => {
            if !show {
                bail!("nothing to do; pass --show");
            }
            let app = open(config)?;
            println!("{}", serde_json::to_string_pretty(&app.adaptivity())?);
        }
        Command::Export { out } => {
            let app = open(config)?;
            for p in app.export(&out)? {
                println!("{}", p.display());
            }
        }
        Command::Provision { id, role, key } => {
            let mut app = open(config)?;
            let key = key.unwrap_or_else(|| format!("{:032x}", rand::random::<u128>()));
            app.provision(&id, role, &key, Utc::now()).map_err(|e| anyhow::anyhow!(e.message))?;
            println!("{key}");
        }
        Command::AnnotateStdio => {
            let annotator = RuleAnnotator::new(Lexicon::bundled());
            serve_protocol(io::stdin().lock(), io::stdout().lock(), &annotator)?;
        }
    }
    Ok(())
}
