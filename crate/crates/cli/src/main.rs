use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use conflict_radar::agent::{Agent, AgentOptions};
use conflict_radar::config::{RevisionProvider, WorkspaceConfig};
use conflict_radar::demo::{self, DemoScript};
use conflict_radar::report;
use conflict_radar_core::detect::{detect_with, DetectOptions};
use conflict_radar_core::distill::{extract_changes, rename_aliases, ChangeContext};
use conflict_radar_core::model::{ChangeSet, ConflictReport, MemberId, RevisionStamp};
use conflict_radar_core::syntax::{parse_unit, tree_to_json};
use conflict_radar_sync::{serve, ClientConfig, ClientEvent, RelayClient, Role, ServerConfig, WireMessage, DEFAULT_PORT};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "conflict-radar", version, about = "Fine-grained merge-conflict awareness for teams")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Project name used as the first path segment.
    #[arg(long, global = true)]
    project: Option<String>,
    /// Workspace root.
    #[arg(long, global = true, default_value = ".")]
    root: PathBuf,
    /// Relay address as host:port.
    #[arg(long, global = true, env = "CONFLICT_RADAR_SERVER")]
    server: Option<String>,
    #[arg(long, global = true)]
    author: Option<String>,
    #[arg(long, global = true, value_parser = parse_provider)]
    revision_provider: Option<RevisionProvider>,
    /// Relay TCP port; the WebSocket endpoint listens on port+1.
    #[arg(long, global = true)]
    port: Option<u16>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Report same-result edits on both sides as awareness only.
    #[arg(long, global = true)]
    suppress_identical: bool,
}

fn parse_provider(s: &str) -> Result<RevisionProvider, String> {
    s.parse().map_err(|e: conflict_radar::config::ConfigError| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Parse one source file.
    Parse {
        file: PathBuf,
        /// Print the element tree as canonical JSON.
        #[arg(long)]
        emit_tree: bool,
    },
    /// Semantic changes between two versions of a file.
    Diff {
        old: PathBuf,
        new: PathBuf,
        /// File path recorded in semantic paths; defaults to the new file's name.
        #[arg(long = "as")]
        as_file: Option<String>,
    },
    /// Current reports for --author. Exits 0 for none, 1 for awareness
    /// only, 2 when conflicts are present.
    Conflicts {
        /// Detection input file: {"local": ChangeSet, "remotes": [ChangeSet]}.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Watch the workspace and exchange changes with the relay.
    Watch {
        #[arg(long)]
        debounce: Option<u64>,
        /// Poll instead of using native file notifications.
        #[arg(long)]
        poll: bool,
    },
    /// Run the relay.
    Serve {
        /// Directory of dashboard assets served over HTTP.
        #[arg(long)]
        dashboard: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        bind: std::net::IpAddr,
    },
    /// Replay a scripted multi-member scenario.
    Demo { script: PathBuf },
}

impl Global {
    fn detect(&self) -> DetectOptions {
        DetectOptions { suppress_identical: self.suppress_identical }
    }

    fn server(&self) -> String {
        match (&self.server, self.port) {
            (Some(s), _) => s.clone(),
            (None, Some(p)) => format!("127.0.0.1:{p}"),
            (None, None) => format!("127.0.0.1:{DEFAULT_PORT}"),
        }
    }

    fn workspace(&self) -> Result<WorkspaceConfig> {
        let mut config = WorkspaceConfig::load(&self.root)?;
        if let Some(p) = &self.project {
            config.project = p.clone();
        }
        if let Some(a) = &self.author {
            config.author = a.clone();
        }
        if self.server.is_some() || self.port.is_some() {
            config.server = self.server();
        }
        if let Some(r) = self.revision_provider {
            config.revision_provider = r;
        }
        Ok(config)
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
    let conflicts_cmd = matches!(cli.command, Command::Conflicts { .. });
    match runtime.block_on(run(cli)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            // 1 and 2 carry meaning for `conflicts`.
            ExitCode::from(if conflicts_cmd { 3 } else { 1 })
        }
    }
}

async fn run(cli: Cli) -> Result<u8> {
    let g = cli.global;
    match cli.command {
        Command::Parse { file, emit_tree } => {
            let text = read(&file)?;
            let tree = parse_unit(&text, &file_name(&file)).map_err(|e| anyhow::anyhow!("{}: {e}", file.display()))?;
            if emit_tree || g.json {
                println!("{}", tree_to_json(&tree));
            } else {
                for class in &tree.classes {
                    println!("class {} ({} fields, {} methods)", class.name, class.fields.len(), class.methods.len());
                }
            }
            Ok(0)
        }
        Command::Diff { old, new, as_file } => {
            let name = as_file.unwrap_or_else(|| file_name(&new));
            let before = parse_unit(&read(&old)?, &name).map_err(|e| anyhow::anyhow!("{}: {e}", old.display()))?;
            let after = parse_unit(&read(&new)?, &name).map_err(|e| anyhow::anyhow!("{}: {e}", new.display()))?;
            let project = g.project.clone().unwrap_or_else(|| "Zoo".into());
            let author = g.author.clone().unwrap_or_else(|| "me".into());
            let ctx = ChangeContext::new(project, MemberId::new(author), RevisionStamp(0));
            let changes = extract_changes(&before, &after, &ctx)?;
            if g.json {
                println!("{}", serde_json::to_string_pretty(&changes)?);
            } else {
                for c in &changes.changes {
                    let s = c.decoration_span.start();
                    let values = match (c.before(), c.after()) {
                        (None, None) => String::new(),
                        (b, a) => format!(" {} -> {}", b.unwrap_or_default(), a.unwrap_or_default()),
                    };
                    println!("{} {}{values} at {}:{}", c.kind, c.path.id(), s.line, s.col);
                }
            }
            Ok(0)
        }
        Command::Conflicts { from } => {
            let reports = match from {
                Some(path) => from_file(&path, g.detect())?,
                None => from_relay(&g).await?,
            };
            if g.json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            } else {
                print!("{}", report::table(&reports));
            }
            Ok(report::exit_code(&reports) as u8)
        }
        Command::Watch { debounce, poll } => {
            let mut config = g.workspace()?;
            if let Some(d) = debounce {
                config.debounce_millis = d;
            }
            let mut agent = Agent::start(config.clone(), AgentOptions { detect: g.detect(), force_poll: poll })?;
            eprintln!("watching {} as {} via {}", config.root.display(), config.author, config.server);
            loop {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => break,
                    event = agent.next_event() => match event {
                        Some(e) if g.json => println!("{}", event_json(&e)),
                        Some(e) => e.lines().iter().for_each(|l| println!("{l}")),
                        None => break,
                    },
                }
            }
            agent.stop().await;
            Ok(0)
        }
        Command::Serve { dashboard, bind } => {
            let handle = serve(ServerConfig {
                bind,
                port: g.port.unwrap_or(DEFAULT_PORT),
                dashboard_dir: dashboard,
                detect: g.detect(),
                ..ServerConfig::default()
            })
            .await?;
            eprintln!("relay on {} (websocket and /actions on {})", handle.tcp_addr(), handle.http_addr());
            handle.run_until_ctrl_c().await?;
            Ok(0)
        }
        Command::Demo { script } => {
            let script = DemoScript::from_json(&read(&script)?).context("reading demo script")?;
            let mut out = std::io::stdout();
            match demo::run(&script, &mut out).await {
                Ok(summary) => {
                    println!(
                        "demo passed: {} steps, {} checks, slowest report {} ms",
                        summary.steps,
                        summary.checked,
                        summary.max_latency.as_millis()
                    );
                    Ok(0)
                }
                Err(e) => {
                    println!("demo failed at {e}");
                    Ok(1)
                }
            }
        }
    }
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn file_name(path: &std::path::Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Deserialize)]
struct DetectionInput {
    local: ChangeSet,
    #[serde(default)]
    remotes: Vec<ChangeSet>,
}

fn from_file(path: &PathBuf, options: DetectOptions) -> Result<Vec<ConflictReport>> {
    let input: DetectionInput = serde_json::from_str(&read(path)?).context("parsing detection input")?;
    let aliases: Vec<_> = input.remotes.iter().chain([&input.local]).flat_map(rename_aliases).collect();
    Ok(detect_with(&input.local, &input.remotes, &aliases, options))
}

/// Asks the relay for the reports it computes for `--author`.
async fn from_relay(g: &Global) -> Result<Vec<ConflictReport>> {
    let Some(author) = g.author.clone().or_else(|| g.workspace().ok().map(|c| c.author).filter(|a| !a.is_empty())) else {
        bail!("--author is required unless --from is given");
    };
    let server = if g.server.is_some() || g.port.is_some() { g.server() } else { g.workspace()?.server };
    let mut client = RelayClient::connect(ClientConfig {
        server: server.clone(),
        author: MemberId::new("conflicts-cli"),
        project: g.project.clone().unwrap_or_default(),
        base_revision: RevisionStamp(0),
        role: Role::Observer,
    });
    let found = tokio::time::timeout(Duration::from_secs(5), async {
        while let Some(event) = client.next_event().await {
            match event {
                ClientEvent::Message(WireMessage::Conflicts { mut reports }) => {
                    return Ok(reports.remove(&MemberId::new(author.clone())).unwrap_or_default());
                }
                ClientEvent::Disconnected(why) => return Err(anyhow::anyhow!("relay at {server}: {why}")),
                _ => {}
            }
        }
        Err(anyhow::anyhow!("relay closed the connection"))
    })
    .await;
    client.close().await;
    found.unwrap_or_else(|_| bail!("no answer from relay"))
}

fn event_json(event: &conflict_radar::agent::AgentEvent) -> serde_json::Value {
    use conflict_radar::agent::AgentEvent::*;
    match event {
        Connected => serde_json::json!({"event": "connected"}),
        Disconnected(why) => serde_json::json!({"event": "disconnected", "reason": why}),
        Published(delta) => serde_json::json!({"event": "published", "delta": delta}),
        Held { file, error } => serde_json::json!({"event": "held", "file": file, "error": error}),
        Reverted(file) => serde_json::json!({"event": "reverted", "file": file}),
        Rebased(base) => serde_json::json!({"event": "rebased", "baseRevision": base}),
        Rejected(reason) => serde_json::json!({"event": "rejected", "reason": reason}),
        Reports { current, .. } => serde_json::json!({"event": "reports", "reports": current}),
        Warning(w) => serde_json::json!({"event": "warning", "message": w}),
    }
}
