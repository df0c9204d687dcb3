//! `varapps` subcommands.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use varapps::action::{signature_manifest, ActionProfile};
use varapps::analytics::{analyze_dir, StdConvention};
use varapps::config::{default_config, enumerate_variants, load_config, Catalog, EnumerateLimits};
use varapps::harness::{
    builtin_agent, read_trajectories, replay, run_matrix, Backend, InProcess, MatrixFile, MatrixOptions, RunSpec,
    TRAJECTORY_FILE,
};
use varapps::tasks::{TaskCatalog, DEFAULT_HORIZON};

use crate::remote::Remote;
use crate::server::{self, AppState};

#[derive(Debug, Parser)]
#[command(name = "varapps", version, about = "Configurable multi-app environment for UI agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve sessions over HTTP.
    Serve(ServeArgs),
    /// Run a matrix of episodes and write trajectories.
    Run(RunArgs),
    /// Re-execute trajectories and compare state digests.
    Replay(ReplayArgs),
    /// Compute reliability and behavior tables from trajectories.
    Analyze(AnalyzeArgs),
    /// Inspect the task catalog.
    #[command(subcommand)]
    Tasks(TasksCommand),
    /// Check configuration files.
    #[command(subcommand)]
    Config(ConfigCommand),
    /// Enumerate configuration variants.
    #[command(subcommand)]
    Variants(VariantsCommand),
    /// Print the action signature manifest of a profile.
    Actions(ActionsArgs),
}

#[derive(Debug, Args, Default)]
pub struct CatalogArgs {
    /// Variation catalog file (default: shipped and popular-web variations).
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Task catalog file (default: shipped tasks).
    #[arg(long)]
    pub tasks: Option<PathBuf>,
}

impl CatalogArgs {
    fn load(&self) -> Result<(Catalog, TaskCatalog)> {
        let catalog = match &self.catalog {
            Some(p) => Catalog::load_file(p)?,
            None => Catalog::all(),
        };
        let tasks = match &self.tasks {
            Some(p) => TaskCatalog::parse(&std::fs::read_to_string(p).with_context(|| p.display().to_string())?)?,
            None => TaskCatalog::shipped(),
        };
        Ok((catalog, tasks))
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "VARAPPS_PORT", default_value_t = 8800)]
    pub port: u16,
    /// Horizon for sessions whose request does not set one.
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: usize,
    #[command(flatten)]
    pub catalogs: CatalogArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Matrix file: a YAML list of run specs or a product form.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Base URL of a running server; runs in process when absent.
    #[arg(long)]
    pub server: Option<String>,
    #[command(flatten)]
    pub catalogs: CatalogArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Trajectory file, or a directory holding one.
    pub file: PathBuf,
    #[command(flatten)]
    pub catalogs: CatalogArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "sample")]
    pub std_convention: StdConvention,
    #[arg(long)]
    pub tasks: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum TasksCommand {
    /// Print task ids with their prompt counts.
    List {
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConfigCommand {
    /// Validate a full configuration file.
    Validate { file: PathBuf },
}

#[derive(Debug, Args)]
pub struct VariantArgs {
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long)]
    pub limit: Option<usize>,
    /// Let every app pick its own combination.
    #[arg(long)]
    pub per_app: bool,
    /// Base configuration (default: shipped).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum VariantsCommand {
    /// Print variant ids and digests.
    List(VariantArgs),
    /// Write each variant's full configuration.
    Emit {
        #[command(flatten)]
        args: VariantArgs,
        /// Output directory; YAML documents go to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ActionsArgs {
    #[arg(long, default_value = "full")]
    pub profile: ActionProfile,
}

/// Run a parsed command. The return value is the process exit code.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Serve(a) => serve(a),
        Command::Run(a) => run(a, out),
        Command::Replay(a) => replay_cmd(a, out),
        Command::Analyze(a) => analyze(a, out),
        Command::Tasks(TasksCommand::List { catalog }) => {
            let tasks = CatalogArgs { catalog: None, tasks: catalog }.load()?.1;
            for t in tasks.tasks() {
                let kind = if t.is_multi_step() { "multi-step" } else { "single-goal" };
                writeln!(out, "{}\t{}\t{kind}", t.id, t.goal_prompts.len())?;
            }
            Ok(0)
        }
        Command::Config(ConfigCommand::Validate { file }) => {
            let text = std::fs::read_to_string(&file).with_context(|| file.display().to_string())?;
            match load_config(&text) {
                Ok(c) => {
                    writeln!(out, "ok {}", c.digest())?;
                    Ok(0)
                }
                Err(e) => {
                    writeln!(out, "{}: {e}", file.display())?;
                    Ok(1)
                }
            }
        }
        Command::Variants(VariantsCommand::List(a)) => {
            for v in variants(&a)? {
                writeln!(out, "{}\t{}", v.digest, v.id)?;
            }
            Ok(0)
        }
        Command::Variants(VariantsCommand::Emit { args, out: dir }) => emit_variants(&args, dir.as_deref(), out),
        Command::Actions(a) => {
            write!(out, "{}", signature_manifest(a.profile))?;
            Ok(0)
        }
    }
}

fn serve(a: ServeArgs) -> Result<i32> {
    let (catalog, tasks) = a.catalogs.load()?;
    if a.horizon == 0 {
        bail!("--horizon must be at least 1");
    }
    let addr: SocketAddr = format!("{}:{}", a.host, a.port).parse().context("bad --host/--port")?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(server::serve(addr, AppState::new(catalog, tasks, a.horizon)))?;
    Ok(0)
}

fn run(a: RunArgs, out: &mut dyn Write) -> Result<i32> {
    let (catalog, tasks) = a.catalogs.load()?;
    let text = std::fs::read_to_string(&a.matrix).with_context(|| a.matrix.display().to_string())?;
    let specs: Vec<RunSpec> = MatrixFile::parse(&text).map_err(anyhow::Error::msg)?.specs(&tasks);
    let opts = MatrixOptions { parallelism: a.parallel, out_dir: Some(a.out.clone()) };
    let agents = |s: &RunSpec| builtin_agent(s, &catalog, &tasks);
    let records = match &a.server {
        Some(url) => {
            let url = url.clone();
            run_matrix(&specs, &opts, &move || Box::new(Remote::new(&url)) as Box<dyn Backend>, &agents)?
        }
        None => {
            let (c, t) = (catalog.clone(), tasks.clone());
            run_matrix(&specs, &opts, &move || Box::new(InProcess::new(c.clone(), t.clone())) as Box<dyn Backend>, &agents)?
        }
    };
    let ok = records.iter().filter(|r| r.succeeded()).count();
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    writeln!(out, "runs {}  succeeded {ok}  errors {errors}", records.len())?;
    writeln!(out, "wrote {}", a.out.join(TRAJECTORY_FILE).display())?;
    Ok(0)
}

fn replay_cmd(a: ReplayArgs, out: &mut dyn Write) -> Result<i32> {
    let (catalog, tasks) = a.catalogs.load()?;
    let path = if a.file.is_dir() { a.file.join(TRAJECTORY_FILE) } else { a.file.clone() };
    let records = read_trajectories(&path).with_context(|| path.display().to_string())?;
    let mut failures = 0;
    for r in &records {
        let mut backend = InProcess::new(catalog.clone(), tasks.clone());
        match replay(r, &mut backend) {
            Ok(v) if v.is_exact() => writeln!(out, "{}\t{}\texact\t{} steps", r.index, r.spec.task, v.steps_checked)?,
            Ok(v) => {
                failures += 1;
                let d = v.first_divergence.expect("not exact");
                writeln!(out, "{}\t{}\tdiverged at step {}\texpected {}\tactual {}", r.index, r.spec.task, d.step, d.expected, d.actual)?;
            }
            Err(e) => {
                failures += 1;
                writeln!(out, "{}\t{}\terror\t{e}", r.index, r.spec.task)?;
            }
        }
    }
    writeln!(out, "replayed {}  mismatched {failures}", records.len())?;
    Ok(if failures == 0 { 0 } else { 1 })
}

fn analyze(a: AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    let tasks = CatalogArgs { catalog: None, tasks: a.tasks.clone() }.load()?.1;
    let files = analyze_dir(&a.input, &a.out, a.std_convention, &tasks)?;
    for p in files.paths {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(0)
}

fn variants(a: &VariantArgs) -> Result<varapps::config::VariantStream> {
    let catalog = match &a.catalog {
        Some(p) => Catalog::load_file(p)?,
        None => Catalog::all(),
    };
    let base = match &a.config {
        Some(p) => load_config(&std::fs::read_to_string(p).with_context(|| p.display().to_string())?)?,
        None => default_config(),
    };
    Ok(enumerate_variants(&base, &catalog, EnumerateLimits { limit: a.limit, per_app: a.per_app })?)
}

fn emit_variants(a: &VariantArgs, dir: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let stream = variants(a)?;
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mut index = String::new();
            for (i, v) in stream.enumerate() {
                let name = format!("variant-{i:05}.yaml");
                std::fs::write(dir.join(&name), v.config.to_yaml())?;
                index.push_str(&format!("{name}\t{}\t{}\n", v.digest, v.id));
            }
            std::fs::write(dir.join("index.tsv"), &index)?;
            writeln!(out, "wrote {} variants to {}", index.lines().count(), dir.display())?;
        }
        None => {
            for v in stream {
                write!(out, "---\n# {} {}\n{}", v.id, v.digest, v.config.to_yaml())?;
            }
        }
    }
    Ok(0)
}
