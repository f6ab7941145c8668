use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lore_core::experiment::{self, compare, evaluate_checkpoint, provenance, run_experiment, train_policy};
use lore_core::learner::Checkpoint;
use lore_core::{presets, RunConfig, StrategyKind};

/// Creator-ecosystem simulator with learned information-revelation policies.
#[derive(Parser)]
#[command(name = "lore", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train (for `lore`) and evaluate one strategy on one seed.
    Run {
        /// TOML config path, or `preset:<name>`.
        #[arg(long)]
        config: String,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's strategy.
        #[arg(long)]
        strategy: Option<StrategyKind>,
        /// Output directory; defaults to the config's `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seed-averaged comparison of configs that differ only in strategy.
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        configs: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        /// Runs every config once per listed strategy.
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<StrategyKind>,
        #[arg(long, default_value = "out/compare")]
        out: PathBuf,
        /// Plot script run as `<script> --in <out> --out <out>/figures`.
        #[arg(long)]
        plots: Option<PathBuf>,
    },
    /// Train a policy and save its checkpoint and training log.
    Train {
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a saved checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a built-in preset, or list them.
    Preset { name: Option<String> },
}

fn load_config(arg: &str) -> Result<RunConfig> {
    match arg.strip_prefix("preset:") {
        Some(name) => Ok(presets::load(name)?),
        None => Ok(RunConfig::load(arg)?),
    }
}

fn out_dir(out: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    out.unwrap_or_else(|| config.output.dir.clone())
}

fn print_summary(run: &experiment::RunOutput, dir: &Path) {
    let s = &run.summary;
    println!(
        "{:<20} seed {:<6} clicks {:>10}  diversity {:>6.3}  active creators {:>7.3}",
        run.strategy, run.seed, s.final_clicks, s.diversity, s.active_creators
    );
    println!("wrote {}", dir.display());
}

fn run_plots(script: &Path, dir: &Path) -> Result<()> {
    let figures = dir.join("figures");
    let mut cmd = if script.extension().is_some_and(|e| e == "py") {
        let mut c = Command::new("python3");
        c.arg(script);
        c
    } else {
        Command::new(script)
    };
    let status = cmd
        .arg("--in")
        .arg(dir)
        .arg("--out")
        .arg(&figures)
        .status()
        .with_context(|| format!("starting plot script {}", script.display()))?;
    if !status.success() {
        bail!("plot script {} exited with {status}", script.display());
    }
    Ok(())
}

fn execute(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Run { config, seed, strategy, out } => {
            let mut config = load_config(&config)?;
            if let Some(s) = strategy {
                config.strategy = s;
            }
            let seed = seed.unwrap_or(config.seed);
            let dir = out_dir(out, &config);
            let run = run_experiment(&config, seed)?;
            run.write(&dir, config.output.write_event_log)?;
            print_summary(&run, &dir);
        }
        Cmd::Compare { configs, seeds, strategies, out, plots } => {
            let mut configs = configs.iter().map(|c| load_config(c)).collect::<Result<Vec<_>>>()?;
            if !strategies.is_empty() {
                configs = configs
                    .iter()
                    .flat_map(|c| strategies.iter().map(move |&s| RunConfig { strategy: s, ..c.clone() }))
                    .collect();
            }
            let cmp = compare(&configs, &seeds)?;
            for run in &cmp.runs {
                let dir = out.join(run.strategy.as_str()).join(format!("seed-{}", run.seed));
                run.write(&dir, configs[0].output.write_event_log)?;
            }
            let prov = format!("config_hash={},seeds={:?}", configs[0].environment_key().hash(), seeds);
            cmp.write_csv(&out.join("comparison.csv"), &prov)?;
            print!("{}", cmp.table());
            println!("wrote {}", out.display());
            if let Some(script) = plots {
                run_plots(&script, &out)?;
            }
        }
        Cmd::Train { config, seed, out } => {
            let config = load_config(&config)?;
            let seed = seed.unwrap_or(config.seed);
            let dir = out_dir(out, &config);
            let (checkpoint, log) = train_policy(&config, seed)?;
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            checkpoint.save(&dir.join("checkpoint.json"))?;
            log.write_csv(&dir.join("training.csv"), &provenance(&config, seed))?;
            println!("trained {} cycles ({:?}); wrote {}", log.cycles.len(), log.stop, dir.display());
        }
        Cmd::Eval { checkpoint, config, seed, out } => {
            let mut config = load_config(&config)?;
            config.strategy = StrategyKind::Lore;
            let ckpt = Checkpoint::load(&checkpoint)?;
            let seed = seed.unwrap_or(ckpt.seed);
            let dir = out_dir(out, &config);
            let run = evaluate_checkpoint(&config, seed, &ckpt)?;
            run.write(&dir, config.output.write_event_log)?;
            print_summary(&run, &dir);
        }
        Cmd::Preset { name: None } => {
            for name in presets::NAMES {
                println!("{name}");
            }
        }
        Cmd::Preset { name: Some(name) } => match presets::source(&name) {
            Some(src) => print!("{src}"),
            None => bail!("unknown preset {name:?}; available: {}", presets::NAMES.join(", ")),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
