use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ems_core::harness::presets::{preset, preset_names};
use ems_core::harness::{oracle_comparisons, run_experiment, ExperimentResult, Scheme, SimConfig};

/// Seeded simulator for energy-efficient mmWave multicast scheduling.
#[derive(Parser)]
#[command(name = "ems-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        opts: Overrides,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Run a named figure preset, or `all`.
    Sweep {
        preset: String,
        #[command(flatten)]
        opts: Overrides,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Audit every emitted schedule without writing results.
    Validate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Compare EMS with the exhaustive optimum on small random instances.
    Oracle {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List presets, or print the resolved config of one as TOML.
    Presets {
        #[arg(long)]
        dump: Option<String>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Trial count per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed for derived trial seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of EMS, D2D, FDMAC.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
}

impl Overrides {
    fn apply(&self, mut cfg: SimConfig) -> Result<SimConfig> {
        if let Some(t) = self.trials {
            cfg.experiment.trials = t;
            cfg.experiment.seeds.clear();
        }
        if let Some(s) = self.seed {
            cfg.experiment.master_seed = s;
            cfg.experiment.seeds.clear();
        }
        if let Some(s) = &self.schemes {
            cfg.experiment.schemes = s.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_config(path: &Path) -> Result<SimConfig> {
    SimConfig::from_path(path).with_context(|| format!("loading {}", path.display()))
}

fn preset_configs(name: &str) -> Result<Vec<SimConfig>> {
    if name == "all" {
        let mut all = Vec::new();
        for n in preset_names() {
            all.extend(preset(n)?);
        }
        Ok(all)
    } else {
        Ok(preset(name)?)
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6e}"))
}

fn summarize(res: &ExperimentResult) {
    let exp = &res.config.experiment;
    println!("experiment {} ({} trials per point)", exp.name, exp.trial_seeds().len());
    println!("{:>14} {:>6} {:>6} {:>14} {:>14} {:>14}", exp.sweep_variable.name(), "scheme", "n_ok", "ec_mj", "er", "d2d_ratio");
    for r in res.mean_rows() {
        println!(
            "{:>14} {:>6} {:>6} {:>14} {:>14} {:>14}",
            format!("{:e}", r.sweep_value),
            r.scheme.name(),
            r.n_ok.unwrap_or(0),
            num(r.ec_mj),
            num(r.er),
            num(r.d2d_ratio)
        );
    }
}

/// Runs every config; returns the number of failed trials.
fn run_all(cfgs: Vec<SimConfig>, opts: &Overrides, out: Option<&Path>) -> Result<usize> {
    let mut failed = 0;
    for cfg in cfgs {
        let cfg = opts.apply(cfg)?;
        let res = run_experiment(&cfg)?;
        summarize(&res);
        for bad in res.failures() {
            eprintln!(
                "audit failure: {} {}={} trial {}: {}",
                bad.scheme,
                bad.sweep_variable,
                bad.sweep_value,
                bad.trial.unwrap_or_default(),
                bad.error.as_deref().unwrap_or_default()
            );
        }
        failed += res.failures().count();
        if let Some(dir) = out {
            let (csv, json) = res.write_to(dir)?;
            println!("wrote {} and {}", csv.display(), json.display());
        }
    }
    Ok(failed)
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let failed = match cli.command {
        Command::Run { config, opts, out } => run_all(vec![load_config(&config)?], &opts, Some(&out))?,
        Command::Sweep { preset, opts, out } => run_all(preset_configs(&preset)?, &opts, Some(&out))?,
        Command::Validate { source, opts } => {
            let cfgs = match (source.config, source.preset) {
                (Some(path), _) => vec![load_config(&path)?],
                (None, Some(name)) => preset_configs(&name)?,
                (None, None) => bail!("pass --config or --preset"),
            };
            let failed = run_all(cfgs, &opts, None)?;
            println!("{}", if failed == 0 { "all audits passed".to_string() } else { format!("{failed} trial(s) failed") });
            failed
        }
        Command::Oracle { config, instances, seed } => {
            let mut cfg = match config {
                Some(path) => load_config(&path)?,
                None => SimConfig::default(),
            };
            if let Some(s) = seed {
                cfg.experiment.master_seed = s;
            }
            let rows = oracle_comparisons(&cfg, instances)?;
            println!("{:>20} {:>5} {:>4} {:>14} {:>14} {:>10} {:>7}", "seed", "users", "hops", "ems_mj", "oracle_mj", "gap", "clamped");
            let mut below = 0;
            for r in &rows {
                println!(
                    "{:>20} {:>5} {:>4} {:>14.6e} {:>14.6e} {:>10.6} {:>7}",
                    r.seed, r.users, r.hop_cap, r.ems_mj, r.oracle_mj, r.gap(), r.ems_clamped
                );
                if !r.ems_clamped && r.gap() < 1.0 - 1e-9 {
                    below += 1;
                }
            }
            println!("{below} unclamped instance(s) below the optimum");
            below
        }
        Command::Presets { dump } => {
            match dump {
                Some(name) => {
                    for cfg in preset_configs(&name)? {
                        println!("# {}\n{}", cfg.experiment.name, cfg.to_toml_string()?);
                    }
                }
                None => println!("{}", preset_names().join("\n")),
            }
            0
        }
    };
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
