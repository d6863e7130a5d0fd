use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use povnav::config::{Config, PlannerKind};
use povnav::geometry::{GoalSpec, RobotPose};
use povnav::harness::{
    derive_seed, mean_action_time, offline_process, render_overlay, run_episode, run_experiment,
    sample_task, save_label_image, write_report, TraceWriter,
};
use povnav::planner::{build_planner, PovnavPipeline};
use povnav::sim::{make_env, selective_arena, Renderer};
use rand::SeedableRng;

#[derive(Parser)]
#[command(name = "povnav", version, about = "Mapless visual navigation simulator and benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; missing keys take defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set experiment.trials=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self, extra: &[String]) -> Result<Config> {
        let base = match &self.config {
            Some(p) => Config::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => Config::default(),
        };
        let mut all = self.overrides.clone();
        all.extend_from_slice(extra);
        Ok(base.with_overrides(&all)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its trace, overlays and label frames.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "povnav")]
        planner: String,
        #[arg(long, default_value_t = 3)]
        level: u8,
        /// Trial index whose start and goal are drawn, as in `bench`.
        #[arg(long, default_value_t = 0)]
        trial: usize,
        /// Explicit start `x,y,theta`, replacing the drawn one.
        #[arg(long, value_parser = parse_triple)]
        start: Option<(f64, f64, f64)>,
        /// Explicit goal `x,y`, replacing the drawn one.
        #[arg(long, value_parser = parse_pair)]
        goal: Option<(f64, f64)>,
        /// Use the two-ground-class road/snow arena instead of a level.
        #[arg(long)]
        selective: bool,
        /// Write an overlay every N frames (POVNav only); 0 disables.
        #[arg(long, default_value_t = 0)]
        overlay_every: usize,
        /// Also save every frame's label image.
        #[arg(long)]
        save_labels: bool,
        #[arg(long, short, default_value = "run_out")]
        out: PathBuf,
    },
    /// Paired experiment over levels and trials.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, short, default_value = "bench_out")]
        out: PathBuf,
        /// Skip the per-frame trace file.
        #[arg(long)]
        no_traces: bool,
    },
    /// Process a directory of label images.
    Offline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Goal bearing in radians, counter-clockwise positive.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        bearing: f64,
    },
    /// Print a generated world as TOML.
    Envgen {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        level: u8,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        selective: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn parse_floats(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v: std::result::Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if v.len() == n => Ok(v),
        _ => Err(format!("expected {n} comma-separated numbers")),
    }
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    parse_floats(s, 2).map(|v| (v[0], v[1]))
}

fn parse_triple(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    parse_floats(s, 3).map(|v| (v[0], v[1], v[2]))
}

fn planner_kind(name: &str) -> Result<PlannerKind> {
    match name {
        "povnav" => Ok(PlannerKind::Povnav),
        "idwa" => Ok(PlannerKind::Idwa),
        other => bail!("unknown planner `{other}` (povnav or idwa)"),
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run {
            common,
            planner,
            level,
            trial,
            start,
            goal,
            selective,
            overlay_every,
            save_labels,
            out,
        } => {
            let cfg = common.load(&[])?;
            cmd_run(&cfg, planner_kind(&planner)?, level, trial, start, goal, selective, overlay_every, save_labels, &out)
        }
        Command::Bench { common, out, no_traces } => cmd_bench(&common.load(&[])?, &out, no_traces),
        Command::Offline {
            common,
            input,
            output,
            bearing,
        } => {
            let cfg = common.load(&[])?;
            let summary = offline_process(&input, &output, &cfg, bearing)?;
            println!(
                "processed {} frames, {} without a sub-goal, {} skipped",
                summary.processed,
                summary.no_subgoal,
                summary.skipped.len()
            );
            Ok(())
        }
        Command::Envgen {
            common,
            level,
            seed,
            selective,
            out,
        } => {
            let cfg = common.load(&[])?;
            let world = if selective {
                selective_arena()
            } else {
                let seed = seed.unwrap_or_else(|| derive_seed(cfg.experiment.seed, &[u64::from(level)]));
                make_env(&cfg.env.spec(level, seed))?
            };
            let text = toml::to_string(&world)?;
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    cfg: &Config,
    kind: PlannerKind,
    level: u8,
    trial: usize,
    start: Option<(f64, f64, f64)>,
    goal: Option<(f64, f64)>,
    selective: bool,
    overlay_every: usize,
    save_labels: bool,
    out: &Path,
) -> Result<()> {
    let e = &cfg.experiment;
    let world = if selective {
        selective_arena()
    } else {
        make_env(&cfg.env.spec(level, derive_seed(e.seed, &[u64::from(level)])))?
    };
    world.validate(&cfg.classes)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(e.seed, &[u64::from(level), trial as u64, 1]));
    let (drawn_start, drawn_goal) = if start.is_some() && goal.is_some() {
        (RobotPose::new(0.0, 0.0, 0.0), GoalSpec::new(0.0, 0.0, e.reach_radius)?)
    } else {
        sample_task(&world, cfg, &mut rng)?
    };
    let start = start.map_or(drawn_start, |(x, y, t)| RobotPose::new(x, y, t));
    let goal = match goal {
        Some((x, y)) => GoalSpec::new(x, y, e.reach_radius)?,
        None => drawn_goal,
    };

    std::fs::create_dir_all(out)?;
    let cam = cfg.camera.model()?;
    let renderer = Renderer::new(cam, cfg.sensor.max_range);
    let mut planner = build_planner(kind, cfg, cam)?;
    let overlay_pipe = PovnavPipeline::new(cfg, cam)?;
    let mut trace = TraceWriter::create(&out.join("trace.jsonl"))?;
    let mut failure: Option<povnav::Error> = None;
    let noise_seed = derive_seed(e.seed, &[u64::from(level), trial as u64, 2]);
    let res = run_episode(cfg, &renderer, &world, planner.as_mut(), start, goal, noise_seed, &mut |frame, labels| {
        if failure.is_some() {
            return;
        }
        let mut step = || -> povnav::Result<()> {
            trace.write(frame)?;
            if save_labels {
                save_label_image(labels, &out.join(format!("labels_{:05}.png", frame.frame)))?;
            }
            if kind == PlannerKind::Povnav && overlay_every > 0 && frame.frame % overlay_every == 0 {
                let o = overlay_pipe.process(labels, frame.plan.goal_bearing)?;
                render_overlay(&o).save(out.join(format!("overlay_{:05}.png", frame.frame)))?;
            }
            Ok(())
        };
        if let Err(err) = step() {
            failure = Some(err);
        }
    })?;
    trace.finish()?;
    if let Some(err) = failure {
        return Err(err.into());
    }
    println!(
        "{}: {} after {} frames, path length {:.3} m, mean action time {:.4} s",
        kind.name(),
        res.status.name(),
        res.frames,
        res.path_length,
        res.action_time_mean
    );
    Ok(())
}

fn cmd_bench(cfg: &Config, out: &Path, no_traces: bool) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut trace = if no_traces {
        None
    } else {
        Some(TraceWriter::create(&out.join("traces.jsonl"))?)
    };
    let report = run_experiment(cfg, &mut |line| match trace.as_mut() {
        Some(t) => t.write(line),
        None => Ok(()),
    })?;
    if let Some(t) = trace {
        t.finish()?;
    }
    write_report(&report, out)?;
    println!("level planner     success  mean length");
    for m in &report.metrics {
        println!(
            "{:>5} {:<10} {:>6.2}  {}",
            m.level,
            m.planner.name(),
            m.success_rate,
            m.path_length_mean.map_or("-".to_string(), |l| format!("{l:.3}"))
        );
    }
    for &p in &cfg.experiment.planners {
        if let Some(t) = mean_action_time(&report.timing, p) {
            println!("{} mean action time {:.4} s", p.name(), t);
        }
    }
    Ok(())
}
