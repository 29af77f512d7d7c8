//! `adaplan`: generate offline driving data, train the diffusion planner and
//! the inverse-dynamics ensemble, then evaluate uncertainty-gated adaptive
//! replanning against its two baselines.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use adaplan::bench::{self, AppConfig};
use adaplan::datagen::{self, DatasetHeader, NormStats};
use adaplan::diffuser::{self, DenoiserModel};
use adaplan::invdyn;
use adaplan::numerics::Rng;
use adaplan::planner::{DiffusionPlanner, Mode, PlannerConfig};

#[derive(Parser)]
#[command(name = "adaplan", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON config file; missing fields fall back to defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<AppConfig> {
        match &self.config {
            Some(path) => {
                AppConfig::load(path).with_context(|| format!("loading config {path:?}"))
            }
            None => Ok(AppConfig::default()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Adaptive,
    Continuous,
    NoReplan,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Mode {
        match m {
            CliMode::Adaptive => Mode::Adaptive,
            CliMode::Continuous => Mode::Continuous,
            CliMode::NoReplan => Mode::NoReplan,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Collect an offline dataset with the scripted behavior policy.
    GenData {
        #[command(flatten)]
        config: ConfigArg,
        /// Total environment steps to collect.
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        seed: u64,
        /// Output dataset path (JSON lines); normalization stats are written
        /// alongside as <out>.norm.json.
        #[arg(long)]
        out: PathBuf,
        /// Behavior-policy noise; overrides the config value.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Train the diffusion state planner on a dataset.
    TrainDiffuser {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        data: PathBuf,
        /// Optimization steps.
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        seed: u64,
        /// Checkpoint output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the inverse-dynamics action ensemble on a dataset.
    TrainInvdyn {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        data: PathBuf,
        /// Ensemble size; overrides the config value.
        #[arg(long)]
        members: Option<usize>,
        #[arg(long)]
        seed: u64,
        /// Output directory for the ensemble checkpoints.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate one replanning mode over seeded episodes.
    Eval {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_enum)]
        mode: CliMode,
        /// Replanning threshold in nats (adaptive mode).
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        diffuser: PathBuf,
        #[arg(long)]
        invdyn: PathBuf,
        /// Output directory for metrics.csv and logs.jsonl.
        #[arg(long)]
        out: PathBuf,
        /// Also replay each episode and write per-step world poses to
        /// traces.jsonl for offline visualization.
        #[arg(long)]
        dump_traces: bool,
    },
    /// Sweep the replanning threshold with shared seeds.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated threshold list, strictly increasing.
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        diffuser: PathBuf,
        #[arg(long)]
        invdyn: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::GenData {
            config,
            steps,
            seed,
            out,
            noise,
        } => gen_data(&config.load()?, steps, seed, &out, noise),
        Command::TrainDiffuser {
            config,
            data,
            steps,
            seed,
            out,
        } => train_diffuser(&config.load()?, &data, steps, seed, &out),
        Command::TrainInvdyn {
            config,
            data,
            members,
            seed,
            out,
        } => train_invdyn(&config.load()?, &data, members, seed, &out),
        Command::Eval {
            config,
            mode,
            epsilon,
            episodes,
            seed,
            diffuser,
            invdyn,
            out,
            dump_traces,
        } => eval(
            &config.load()?,
            mode,
            epsilon,
            episodes,
            seed,
            &diffuser,
            &invdyn,
            &out,
            dump_traces,
        ),
        Command::Sweep {
            config,
            epsilons,
            episodes,
            seed,
            diffuser,
            invdyn,
            out,
        } => run_sweep(
            &config.load()?,
            &epsilons,
            episodes,
            seed,
            &diffuser,
            &invdyn,
            &out,
        ),
    }
}

fn stats_path(dataset: &Path) -> PathBuf {
    let mut name = dataset.file_name().unwrap_or_default().to_os_string();
    name.push(".norm.json");
    dataset.with_file_name(name)
}

fn gen_data(
    cfg: &AppConfig,
    steps: usize,
    seed: u64,
    out: &Path,
    noise: Option<f64>,
) -> Result<()> {
    let noise = noise.unwrap_or(cfg.datagen.noise);
    let min_steps = 10 * cfg.diffuser.horizon;
    if steps < min_steps {
        bail!("--steps must be at least 10x the plan horizon ({min_steps})");
    }
    let dataset = datagen::collect(&cfg.env, noise, steps, seed)?;
    let stats = datagen::norm_stats(&dataset)?;
    let header = DatasetHeader {
        kind: datagen::DATASET_KIND.into(),
        version: 1,
        env: cfg.env.clone(),
        noise,
        seed,
        episodes: dataset.episode_count(),
        steps: dataset.len(),
        obs_dim: dataset.obs_dim(),
    };
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent).ok();
    }
    dataset.write_jsonl(out, &header)?;
    stats.save(&stats_path(out))?;
    println!(
        "wrote {} transitions over {} episodes (collision rate {:.1}%) to {}",
        dataset.len(),
        dataset.episode_count(),
        100.0 * dataset.collision_rate(cfg.env.max_steps),
        out.display()
    );
    Ok(())
}

fn load_dataset(path: &Path) -> Result<(datagen::Dataset, DatasetHeader, NormStats)> {
    let (dataset, header) =
        datagen::Dataset::read_jsonl(path).with_context(|| format!("reading {path:?}"))?;
    let sp = stats_path(path);
    let stats = if sp.exists() {
        NormStats::load(&sp)?
    } else {
        datagen::norm_stats(&dataset)?
    };
    Ok((dataset, header, stats))
}

fn train_diffuser(cfg: &AppConfig, data: &Path, steps: usize, seed: u64, out: &Path) -> Result<()> {
    let (dataset, _, stats) = load_dataset(data)?;
    let d = cfg.diffuser.clone();
    let schedule = diffuser::build_schedule(d.diffusion_steps)?;
    let rng = Rng::new(seed);
    let mut init_rng = rng.split(0);
    let mut data_rng = rng.split(1);
    let mut model = DenoiserModel::new(
        d.horizon,
        dataset.obs_dim(),
        &d.hidden,
        d.time_embed_dim,
        stats,
        &mut init_rng,
    )?;
    let last_loss = diffuser::train_denoiser(
        &mut model,
        &schedule,
        &dataset,
        steps,
        d.batch_size,
        d.learning_rate,
        &mut data_rng,
        |step, loss| {
            if (step + 1) % 1000 == 0 {
                println!("step {:>6}: loss {loss:.5}", step + 1);
            }
        },
    )?;
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent).ok();
    }
    diffuser::save_denoiser(
        &model,
        &schedule,
        out,
        Some(seed),
        serde_json::json!({"train_steps": steps, "final_loss": last_loss}),
    )?;
    println!("wrote denoiser checkpoint to {}", out.display());
    Ok(())
}

fn train_invdyn(
    cfg: &AppConfig,
    data: &Path,
    members: Option<usize>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let (dataset, _, stats) = load_dataset(data)?;
    let members = members.unwrap_or(cfg.invdyn.members);
    let ensemble = invdyn::train_ensemble(&dataset, &stats, members, seed, &cfg.invdyn.train)?;
    let accuracy = ensemble.accuracy(&dataset)?;
    invdyn::save_ensemble(&ensemble, out)?;
    println!(
        "wrote {members}-member ensemble to {} (training-set accuracy {:.1}%)",
        out.display(),
        100.0 * accuracy
    );
    Ok(())
}

fn load_models(
    diffuser_path: &Path,
    invdyn_path: &Path,
) -> Result<(DenoiserModel, diffuser::NoiseSchedule, invdyn::Ensemble)> {
    let (model, schedule) = diffuser::load_denoiser(diffuser_path)?;
    let ensemble = invdyn::load_ensemble(invdyn_path)?;
    if ensemble.stats.hash() != model.stats.hash() {
        eprintln!("warning: diffuser and ensemble were trained with different normalization stats");
    }
    Ok((model, schedule, ensemble))
}

#[allow(clippy::too_many_arguments)]
fn eval(
    cfg: &AppConfig,
    mode: CliMode,
    epsilon: Option<f64>,
    episodes: usize,
    seed: u64,
    diffuser_path: &Path,
    invdyn_path: &Path,
    out: &Path,
    dump_traces: bool,
) -> Result<()> {
    let (model, schedule, ensemble) = load_models(diffuser_path, invdyn_path)?;
    let plans = DiffusionPlanner {
        model: &model,
        schedule: &schedule,
    };
    let mode: Mode = mode.into();
    let planner = PlannerConfig {
        mode,
        epsilon: epsilon.unwrap_or(cfg.planner.epsilon),
    };
    let label = mode.to_string();
    let (row, logs) = bench::evaluate(&cfg.env, &plans, &ensemble, &planner, episodes, seed, &label)?;

    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("metrics.csv"), bench::to_csv(std::slice::from_ref(&row))?)?;
    let mut log_lines = String::new();
    for log in &logs {
        log_lines.push_str(&serde_json::to_string(log)?);
        log_lines.push('\n');
    }
    std::fs::write(out.join("logs.jsonl"), log_lines)?;
    if dump_traces {
        let mut trace_lines = String::new();
        for log in &logs {
            let actions: Vec<_> = log.steps.iter().map(|s| s.action).collect();
            for row in adaplan::sim::trace_episode(&cfg.env, log.seed, &actions)? {
                trace_lines.push_str(&serde_json::to_string(&row)?);
                trace_lines.push('\n');
            }
        }
        std::fs::write(out.join("traces.jsonl"), trace_lines)?;
    }
    print!("{}", bench::render_table(std::slice::from_ref(&row))?);
    Ok(())
}

fn run_sweep(
    cfg: &AppConfig,
    epsilons: &[f64],
    episodes: usize,
    seed: u64,
    diffuser_path: &Path,
    invdyn_path: &Path,
    out: &Path,
) -> Result<()> {
    let (model, schedule, ensemble) = load_models(diffuser_path, invdyn_path)?;
    let plans = DiffusionPlanner {
        model: &model,
        schedule: &schedule,
    };
    let report = bench::sweep(&cfg.env, &plans, &ensemble, epsilons, episodes, seed)?;

    std::fs::create_dir_all(out)?;
    let rows: Vec<_> = report.entries.iter().map(|e| e.row.clone()).collect();
    std::fs::write(out.join("sweep.csv"), bench::to_csv(&rows)?)?;
    std::fs::write(
        out.join("sweep_summary.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    print!("{}", bench::render_table(&rows)?);
    println!(
        "spearman(eps, mean_len) = {:+.3}\nspearman(eps, mean_reward) = {:+.3}\n\
         spearman(eps, collision_rate) = {:+.3}\nspearman(eps, saved_nfe) = {:+.3}",
        report.spearman_mean_len,
        report.spearman_mean_reward,
        report.spearman_collision_rate,
        report.spearman_saved_nfe
    );
    Ok(())
}
