//! Command-line driver for the photolab experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand};
use photolab_core::Execution;

use crate::commands::{Context, Verdict};
use crate::config::Config;
use crate::output::Artifacts;

#[derive(Parser, Debug)]
#[command(name = "photolab", version, about = "Volume-constrained phase-field critical points on triangulated surfaces")]
struct Cli {
    #[command(subcommand)]
    mode: Mode,

    /// Flat `section.key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads; 1 runs sequentially. Defaults to available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// File of vertex indices used as seeds and base points.
    #[arg(long, global = true)]
    seed_list: Option<PathBuf>,

    /// OFF or OBJ mesh, overriding `mesh.family`.
    #[arg(long, global = true)]
    mesh: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// 1-D transition profile tables and ODE residuals.
    Profile,
    /// Photograph fields and the sublevel check.
    Photograph,
    /// One constrained gradient-flow run.
    Flow,
    /// Multi-seed sweep, class deduplication and Morse count.
    Sweep,
    /// Photograph energy against sigma times perimeter across epsilon.
    Gamma,
    /// Barycenter homotopy audit.
    AuditBarycenter,
    /// Lagrange multiplier audit across epsilon.
    AuditMultiplier,
    /// Collect JSON-lines records into CSV summaries.
    Report,
    /// Print the configuration reference.
    Keys,
}

fn read_seed_list(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read seed list {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            out.push(tok.parse().with_context(|| format!("{}:{}: not a vertex index: {tok:?}", path.display(), i + 1))?);
        }
    }
    Ok(out)
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = Config::defaults();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    cfg.apply_env(std::env::vars())?;
    if let Some(mesh) = &cli.mesh {
        cfg.set("mesh.family", "file", config::Origin::Flag("--mesh"))?;
        cfg.set("mesh.path", &mesh.display().to_string(), config::Origin::Flag("--mesh"))?;
    }
    Ok(cfg)
}

fn execution(threads: Option<usize>) -> Result<Execution> {
    match threads {
        Some(0) => anyhow::bail!("--threads must be at least 1"),
        Some(1) => Ok(Execution::Sequential),
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
            Ok(Execution::Parallel)
        }
        None => Ok(Execution::Parallel),
    }
}

fn dispatch(mode: Mode, ctx: &Context) -> Result<Verdict> {
    if mode == Mode::Profile {
        return commands::profile(ctx);
    }
    if mode == Mode::Report {
        let files = output::write_report(ctx.art.dir(), &ctx.art)?;
        for f in &files {
            println!("report: {}", f.display());
        }
        return Ok(files.is_empty().then(|| "no JSON-lines records found".to_string()));
    }
    let (mesh, id) = ctx.mesh()?;
    match mode {
        Mode::Photograph => commands::photograph(ctx, &mesh, &id),
        Mode::Flow => commands::flow(ctx, &mesh, &id),
        Mode::Sweep => commands::sweep_cmd(ctx, &mesh, &id),
        Mode::Gamma => commands::gamma(ctx, &mesh, &id),
        Mode::AuditBarycenter => commands::audit_barycenter(ctx, &mesh, &id),
        Mode::AuditMultiplier => commands::audit_multiplier(ctx, &mesh, &id),
        Mode::Profile | Mode::Report | Mode::Keys => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.mode == Mode::Keys {
        print!("{}", config::reference());
        return ExitCode::SUCCESS;
    }
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let art = match Artifacts::create(&cli.out, cfg.header()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let outcome = (|| -> Result<Verdict> {
        let execution = execution(cli.threads)?;
        let seed_list = cli.seed_list.as_deref().map(read_seed_list).transpose()?;
        let ctx = Context { cfg, art, execution, seed_list };
        let verdict = dispatch(cli.mode, &ctx);
        if let Ok(Some(reason)) = &verdict {
            ctx.art.mark_failed(reason)?;
        }
        if let Err(e) = &verdict {
            ctx.art.mark_failed(&format!("{e:#}"))?;
        }
        verdict
    })();
    match outcome {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(reason)) => {
            eprintln!("FAILED: {reason}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let _ = std::fs::write(cli.out.join(output::FAILURE_MARKER), format!("{e:#}\n"));
            ExitCode::from(1)
        }
    }
}
