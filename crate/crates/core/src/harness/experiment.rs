use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Config, PlannerKind};
use crate::error::{Error, Result};
use crate::geometry::{GoalSpec, RobotPose};
use crate::planner::build_planner;
use crate::sim::{make_env, Renderer, WorldModel};

use super::episode::{run_episode, EpisodeStatus, FrameRecord};

/// SplitMix64 over the base seed and each part in turn.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

/// Uniform start and goal with clearance from obstacles and border, at
/// least `min_separation` of the arena diagonal apart; random start heading.
pub fn sample_task(world: &WorldModel, cfg: &Config, rng: &mut ChaCha8Rng) -> Result<(RobotPose, GoalSpec)> {
    let e = &cfg.experiment;
    let b = world.bounds;
    let inset = e.sample_border.max(cfg.robot.radius);
    let need = cfg.robot.radius + e.sample_clearance;
    let min_sep = e.min_separation * b.diagonal();
    let draw = |rng: &mut ChaCha8Rng| -> Option<(f64, f64)> {
        for _ in 0..10_000 {
            let x = rng.gen_range(b.min_x + inset..=b.max_x - inset);
            let y = rng.gen_range(b.min_y + inset..=b.max_y - inset);
            if world.clearance(x, y) > need {
                return Some((x, y));
            }
        }
        None
    };
    for _ in 0..1_000 {
        let (sx, sy) = draw(rng).ok_or_else(|| Error::Episode("no free start position".into()))?;
        let (gx, gy) = draw(rng).ok_or_else(|| Error::Episode("no free goal position".into()))?;
        let heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        if (gx - sx).hypot(gy - sy) >= min_sep {
            return Ok((RobotPose::new(sx, sy, heading), GoalSpec::new(gx, gy, e.reach_radius)?));
        }
    }
    Err(Error::Episode("could not separate start and goal".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub level: u8,
    pub trial: usize,
    pub planner: PlannerKind,
    pub status: EpisodeStatus,
    pub path_length: f64,
    pub frames: usize,
    pub start_x: f64,
    pub start_y: f64,
    pub start_theta: f64,
    pub goal_x: f64,
    pub goal_y: f64,
    pub straight_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub level: u8,
    pub planner: PlannerKind,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub collisions: usize,
    pub timeouts: usize,
    pub blocked: usize,
    /// Trials every planner completed.
    pub mutual_successes: usize,
    pub path_length_mean: Option<f64>,
    pub path_length_sd: Option<f64>,
}

/// Wall-clock planner time per action; kept apart from the reproducible tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub level: u8,
    pub trial: usize,
    pub planner: PlannerKind,
    pub frames: usize,
    pub action_time_mean: f64,
    pub action_time_max: f64,
}

/// One trace line: trial identity plus the frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub level: u8,
    pub trial: usize,
    pub planner: PlannerKind,
    #[serde(flatten)]
    pub frame: FrameRecord,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub trials: Vec<TrialRow>,
    pub metrics: Vec<MetricRow>,
    pub timing: Vec<TimingRow>,
}

fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.len() > 1).then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), sd)
}

fn aggregate(rows: &[TrialRow], planners: &[PlannerKind]) -> Vec<MetricRow> {
    let mut by_trial: BTreeMap<(u8, usize), Vec<&TrialRow>> = BTreeMap::new();
    for r in rows {
        by_trial.entry((r.level, r.trial)).or_default().push(r);
    }
    let mut levels: Vec<u8> = rows.iter().map(|r| r.level).collect();
    levels.dedup();
    let mut out = Vec::new();
    for &level in &levels {
        let mutual: Vec<usize> = by_trial
            .iter()
            .filter(|((l, _), rs)| {
                *l == level
                    && rs.len() == planners.len()
                    && rs.iter().all(|r| r.status == EpisodeStatus::Success)
            })
            .map(|((_, t), _)| *t)
            .collect();
        for &planner in planners {
            let mine: Vec<&TrialRow> = rows.iter().filter(|r| r.level == level && r.planner == planner).collect();
            let count = |s| mine.iter().filter(|r| r.status == s).count();
            let lengths: Vec<f64> = mine
                .iter()
                .filter(|r| mutual.contains(&r.trial))
                .map(|r| r.path_length)
                .collect();
            let (mean, sd) = mean_sd(&lengths);
            let successes = count(EpisodeStatus::Success);
            out.push(MetricRow {
                level,
                planner,
                trials: mine.len(),
                successes,
                success_rate: if mine.is_empty() { 0.0 } else { successes as f64 / mine.len() as f64 },
                collisions: count(EpisodeStatus::Collision),
                timeouts: count(EpisodeStatus::Timeout),
                blocked: count(EpisodeStatus::Blocked),
                mutual_successes: lengths.len(),
                path_length_mean: mean,
                path_length_sd: sd,
            });
        }
    }
    out
}

/// Every level and trial, each planner on the same world, start and goal.
/// Frames go to `on_trace` as they are produced.
pub fn run_experiment(cfg: &Config, on_trace: &mut dyn FnMut(&TraceLine) -> Result<()>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let e = &cfg.experiment;
    let cam = cfg.camera.model()?;
    let renderer = Renderer::new(cam, cfg.sensor.max_range);
    let mut report = ExperimentReport::default();
    if e.trials == 0 {
        return Ok(report);
    }
    for &level in &e.levels {
        let world = make_env(&cfg.env.spec(level, derive_seed(e.seed, &[u64::from(level)])))?;
        world.validate(&cfg.classes)?;
        for trial in 0..e.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(e.seed, &[u64::from(level), trial as u64, 1]));
            let (start, goal) = sample_task(&world, cfg, &mut rng)?;
            let noise_seed = derive_seed(e.seed, &[u64::from(level), trial as u64, 2]);
            for &kind in &e.planners {
                log::info!("level {level} trial {trial} planner {}", kind.name());
                let mut planner = build_planner(kind, cfg, cam)?;
                let mut err = Ok(());
                let res = run_episode(cfg, &renderer, &world, planner.as_mut(), start, goal, noise_seed, &mut |f, _| {
                    if err.is_ok() {
                        err = on_trace(&TraceLine {
                            level,
                            trial,
                            planner: kind,
                            frame: f.clone(),
                        });
                    }
                })?;
                err?;
                report.trials.push(TrialRow {
                    level,
                    trial,
                    planner: kind,
                    status: res.status,
                    path_length: res.path_length,
                    frames: res.frames,
                    start_x: start.x,
                    start_y: start.y,
                    start_theta: start.theta,
                    goal_x: goal.x,
                    goal_y: goal.y,
                    straight_distance: start.distance_to(goal.x, goal.y),
                });
                report.timing.push(TimingRow {
                    level,
                    trial,
                    planner: kind,
                    frames: res.frames,
                    action_time_mean: res.action_time_mean,
                    action_time_max: res.action_time_max,
                });
            }
        }
    }
    report.metrics = aggregate(&report.trials, &e.planners);
    Ok(report)
}

/// Frame-weighted mean planner time per action.
pub fn mean_action_time(timing: &[TimingRow], planner: PlannerKind) -> Option<f64> {
    let rows: Vec<&TimingRow> = timing.iter().filter(|t| t.planner == planner && t.frames > 0).collect();
    let frames: usize = rows.iter().map(|t| t.frames).sum();
    (frames > 0).then(|| rows.iter().map(|t| t.action_time_mean * t.frames as f64).sum::<f64>() / frames as f64)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `trials.csv`, `metrics.csv` and `timing.csv` under `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_csv(&dir.join("trials.csv"), &report.trials)?;
    write_csv(&dir.join("metrics.csv"), &report.metrics)?;
    write_csv(&dir.join("timing.csv"), &report.timing)?;
    Ok(())
}

/// Writes trace lines as JSON, one per line.
pub struct TraceWriter {
    out: BufWriter<File>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            out: BufWriter::new(File::create(path)?),
        })
    }

    pub fn write<T: Serialize>(&mut self, line: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, line)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::EnvSpec;

    #[test]
    fn zero_trials_give_empty_report() {
        let cfg = Config::default().with_overrides(&["experiment.trials=0"]).unwrap();
        let report = run_experiment(&cfg, &mut |_| Ok(())).unwrap();
        assert_eq!(report, ExperimentReport::default());
    }

    #[test]
    fn seeds_differ_by_part() {
        assert_ne!(derive_seed(1, &[1, 0]), derive_seed(1, &[0, 1]));
        assert_eq!(derive_seed(5, &[2, 3]), derive_seed(5, &[2, 3]));
    }

    #[test]
    fn sampled_tasks_are_free_and_separated() {
        let cfg = Config::default();
        for level in 1..=5 {
            let world = make_env(&EnvSpec::new(level, 9)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(level as u64);
            for _ in 0..20 {
                let (s, g) = sample_task(&world, &cfg, &mut rng).unwrap();
                assert!(world.clearance(s.x, s.y) > cfg.robot.radius);
                assert!(world.clearance(g.x, g.y) > cfg.robot.radius);
                assert!(s.distance_to(g.x, g.y) >= 0.5 * world.bounds.diagonal());
            }
        }
    }

    #[test]
    fn aggregates_on_mutual_successes() {
        let row = |trial, planner, status, len| TrialRow {
            level: 2,
            trial,
            planner,
            status,
            path_length: len,
            frames: 10,
            start_x: 0.0,
            start_y: 0.0,
            start_theta: 0.0,
            goal_x: 1.0,
            goal_y: 0.0,
            straight_distance: 1.0,
        };
        use EpisodeStatus::*;
        use PlannerKind::*;
        let rows = vec![
            row(0, Povnav, Success, 10.0),
            row(0, Idwa, Success, 12.0),
            row(1, Povnav, Success, 8.0),
            row(1, Idwa, Collision, 3.0),
            row(2, Povnav, Success, 14.0),
            row(2, Idwa, Success, 20.0),
        ];
        let m = aggregate(&rows, &[Povnav, Idwa]);
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].successes, m[0].mutual_successes), (3, 2));
        assert_eq!(m[0].path_length_mean, Some(12.0));
        assert!((m[0].path_length_sd.unwrap() - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(m[1].path_length_mean, Some(16.0));
        assert!((m[1].success_rate - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m[1].collisions, 1);
    }
}
