mod config;
mod experiments;
mod output;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use config::{Config, DEFAULTS_NAME};
use experiments::{Ctx, CATALOG};
use output::{RunManifest, RunWriter};

const THREADS_ENV: &str = "SIVSIM_THREADS";

#[derive(Parser)]
#[command(
    name = "sivsim",
    version,
    about = "Cavity-QED photon source simulations",
    after_help = "Run `sivsim list` for the experiment catalog, then\n  sivsim <experiment> [--config FILE] [--set KEY=VALUE]... --out DIR [--seed N]"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the experiments.
    List,
    /// Verify finished runs and print their headline numbers.
    Report {
        /// Run directories or manifest files.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Print the built-in default profile.
    Defaults,
    #[command(external_subcommand)]
    Run(Vec<OsString>),
}

#[derive(Parser)]
#[command(no_binary_name = true)]
struct RunArgs {
    experiment: String,
    /// TOML file with overrides of the default profile.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single override, `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Seed for stochastic experiments; overrides a `seed` in the config file.
    #[arg(long)]
    seed: Option<u64>,
}

fn catalog_text() -> String {
    let width = CATALOG.iter().map(|e| e.name.len()).max().unwrap_or(0);
    CATALOG
        .iter()
        .map(|e| {
            let seed = if e.stochastic { " [needs --seed]" } else { "" };
            format!("  {:width$}  {}{seed}\n", e.name, e.about)
        })
        .collect()
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow!("{THREADS_ENV}={v}: expected a positive integer"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn run(args: Vec<OsString>) -> Result<ExitCode> {
    let name = args.first().and_then(|a| a.to_str()).unwrap_or_default();
    let Some(exp) = experiments::find(name) else {
        eprintln!("error: unknown experiment `{name}`\n\nexperiments:\n{}", catalog_text());
        eprintln!("usage: sivsim <experiment> [--config FILE] [--set KEY=VALUE]... --out DIR [--seed N]");
        return Ok(ExitCode::from(2));
    };
    let args = match RunArgs::try_parse_from(&args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return Ok(ExitCode::from(2));
        }
    };
    let mut cfg = Config::defaults();
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    for s in &args.set {
        cfg.apply_override(s)?;
    }
    let seed = args.seed.or(cfg.file_seed);
    if exp.stochastic && seed.is_none() {
        bail!("experiment `{}` is stochastic and needs --seed N", exp.name);
    }
    configure_threads()?;

    let start = Instant::now();
    let mut out = RunWriter::new(&args.out)?;
    out.line(format!("experiment {}", exp.name));
    if let Some(s) = seed {
        out.line(format!("seed {s}"));
    }
    let mut cx = Ctx {
        cfg: &cfg,
        seed: seed.unwrap_or(0),
        out: &mut out,
    };
    (exp.run)(&mut cx).with_context(|| format!("experiment `{}` failed", exp.name))?;
    let manifest = RunManifest {
        experiment: exp.name.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        profile: DEFAULTS_NAME.to_string(),
        seed,
        config: cfg.snapshot(exp.sections),
        duration_s: start.elapsed().as_secs_f64(),
        outputs: Vec::new(),
        headlines: Vec::new(),
    };
    let manifest = out.finish(manifest)?;
    let summary = std::fs::read_to_string(args.out.join(output::SUMMARY))?;
    print!("{summary}");
    println!(
        "wrote {} files to {} in {:.1} s",
        manifest.outputs.len() + 1,
        args.out.display(),
        manifest.duration_s
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            print!("{}", catalog_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Defaults => {
            print!("{}", include_str!("../profiles/device.defaults.toml"));
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { runs } => report::emit_report(&runs).map(|t| {
            print!("{t}");
            ExitCode::SUCCESS
        }),
        Command::Run(args) => run(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
