//! End-to-end acceptance suite. Prints one pass/fail line per criterion and
//! exits non-zero if any fails. Pass criterion numbers to run a subset,
//! e.g. `cargo test --test acceptance -- 1 2`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use povnav::config::{Config, PlannerKind};
use povnav::control::{servo, ServoGains};
use povnav::geometry::{FrameBPoint, GoalSpec, RobotPose};
use povnav::harness::{
    mean_action_time, run_episode, run_experiment, write_report, EpisodeResult, EpisodeStatus,
    ExperimentReport, TraceWriter,
};
use povnav::navigability::{build_navigability_image, extract_horizon, BinaryImage};
use povnav::pathplan::{compute_error, plan_path, proximity_feature, PathOutcome, SafeRegion};
use povnav::planner::{build_planner, PlanDetail};
use povnav::sim::{class_ids, selective_arena, Bounds, Renderer, WorldModel};
use povnav::subgoal::{brute_force_pareto, dominates, map_pog, objectives, pareto_front, ParetoFront};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Settings for the long closed-loop runs: quarter-area images with the
/// pixel-unit gains scaled to match.
fn reduced() -> Config {
    Config::default()
        .with_overrides(&[
            "camera.width=160",
            "camera.height=120",
            "povnav.k_v=0.04",
            "povnav.snap_radius=10",
        ])
        .unwrap()
}

fn random_bits(rng: &mut ChaCha8Rng, w: usize, h: usize) -> BinaryImage {
    let mut nav = vec![false; w * h];
    match rng.gen_range(0..3) {
        0 => {
            let p: f64 = rng.gen_range(0.05..0.95);
            nav.iter_mut().for_each(|n| *n = rng.gen_bool(p));
        }
        1 => {
            // column runs from the bottom with sparse islands above
            for c in 0..w {
                let run = rng.gen_range(0..=h);
                for r in 0..h {
                    nav[r * w + c] = r >= h - run || rng.gen_bool(0.2);
                }
            }
        }
        _ => nav.iter_mut().for_each(|n| *n = rng.gen_bool(0.85)),
    }
    BinaryImage::from_bits(w, h, nav.iter().map(|&n| u8::from(!n)).collect()).unwrap()
}

/// Column height whose pixel and every pixel beneath it are navigable and
/// whose next pixel up is not, found by a plain bottom-up scan.
fn horizon_scan(bin: &BinaryImage, col: usize) -> Option<usize> {
    let h = bin.height;
    let mut top = None;
    for x in 0..h {
        if bin.is_navigable(h - 1 - x, col) {
            top = Some(x);
        } else {
            break;
        }
    }
    top
}

/// Height in each column of the navigable pixel with nothing navigable
/// above it, scanned over the navigability image.
fn horizon_above_scan(bin: &BinaryImage, col: usize) -> Option<usize> {
    let h = bin.height;
    (0..h).rev().find(|&x| {
        bin.is_navigable(h - 1 - x, col) && (x + 1..h).all(|y| !bin.is_navigable(h - 1 - y, col))
    })
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t0 = Instant::now();
    let mut mismatches = 0;
    for _ in 0..1000 {
        let (w, h) = (rng.gen_range(16..=64), rng.gen_range(16..=64));
        let bin = random_bits(&mut rng, w, h);
        let hz = extract_horizon(&bin);
        let nav = build_navigability_image(&bin);
        for c in 0..w {
            if hz.psi[c] != horizon_scan(&bin, c) || nav.horizon.psi[c] != horizon_above_scan(&nav.bits, c) {
                mismatches += 1;
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        mismatches == 0 && secs < 5.0,
        format!("1000 images, {mismatches} column mismatches, {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    let mut off_horizon = 0;
    for _ in 0..500 {
        let (w, h) = (rng.gen_range(3..=32), rng.gen_range(3..=32));
        let nav = build_navigability_image(&random_bits(&mut rng, w, h));
        let pog = map_pog(rng.gen_range(-PI..PI), w, h);
        let cands: Vec<_> = nav
            .horizon
            .pixels()
            .map(|(c, p)| (c, p, objectives(p, pog.point)))
            .collect();
        let oracle: Vec<(usize, FrameBPoint)> = cands
            .iter()
            .filter(|(_, _, a)| !cands.iter().any(|(_, _, b)| dominates(b, a)))
            .map(|&(c, p, _)| (c, p))
            .collect();
        let got: Vec<(usize, FrameBPoint)> = match pareto_front(&nav, &pog) {
            ParetoFront::Feasible(m) => m.iter().map(|c| (c.col, c.point)).collect(),
            ParetoFront::NoFeasibleSubgoal => Vec::new(),
        };
        if got != oracle || (cands.is_empty() != !pareto_front(&nav, &pog).is_feasible()) {
            mismatches += 1;
        }
        let on_horizon: Vec<FrameBPoint> = nav.horizon.pixels().map(|(_, p)| p).collect();
        let full = brute_force_pareto(&nav, &pog).map_err(|e| e.to_string())?;
        if full.iter().any(|p| !on_horizon.contains(p)) {
            off_horizon += 1;
        }
    }
    check(
        mismatches == 0,
        format!(
            "500 instances, {mismatches} mismatches; full-image front leaves the horizon in {:.1}% of instances",
            100.0 * off_horizon as f64 / 500.0
        ),
    )
}

fn open_world() -> WorldModel {
    WorldModel::empty(Bounds {
        min_x: -100.0,
        max_x: 100.0,
        min_y: -100.0,
        max_y: 100.0,
    })
}

fn episode(cfg: &Config, world: &WorldModel, kind: PlannerKind, start: RobotPose, goal: (f64, f64)) -> EpisodeResult {
    let cam = cfg.camera.model().unwrap();
    let renderer = Renderer::new(cam, cfg.sensor.max_range);
    let mut planner = build_planner(kind, cfg, cam).unwrap();
    let goal = GoalSpec::new(goal.0, goal.1, cfg.experiment.reach_radius).unwrap();
    run_episode(cfg, &renderer, world, planner.as_mut(), start, goal, 0, &mut |_, _| {}).unwrap()
}

fn criterion_3() -> Outcome {
    let cfg = Config::default();
    let world = open_world();
    // bearing step between neighbouring border pixels of the goal mapping
    let quantum = FRAC_PI_2 / (cfg.camera.height - 1 + cfg.camera.width / 2) as f64;
    let mut notes = Vec::new();
    let mut ok = true;
    for bearing in [0.0, FRAC_PI_4, -FRAC_PI_4, FRAC_PI_2, -FRAC_PI_2, PI] {
        let goal = (5.0 * f64::cos(bearing), 5.0 * f64::sin(bearing));
        let res = episode(&cfg, &world, PlannerKind::Povnav, RobotPose::new(0.0, 0.0, 0.0), goal);
        let mut col_mismatch = 0;
        let mut rises = 0;
        let mut aligned = false;
        let mut prev: Option<f64> = None;
        for f in &res.trace {
            let theta = f.plan.goal_bearing.abs();
            if let PlanDetail::Povnav(p) = &f.plan.detail {
                if theta <= FRAC_PI_2 && p.hog.map(|h| h.y) != Some(p.pog.y) {
                    col_mismatch += 1;
                }
            }
            if f.time >= 1.0 - 1e-9 {
                if prev.is_some_and(|q| theta > q + quantum) {
                    rises += 1;
                }
                prev = Some(theta);
            }
            aligned |= theta < 0.05;
        }
        let pass = res.status == EpisodeStatus::Success && col_mismatch == 0 && rises == 0 && aligned;
        ok &= pass;
        notes.push(format!(
            "{:+.2}:{}{}",
            bearing,
            res.status.name(),
            if pass {
                String::new()
            } else {
                format!("(col {col_mismatch}, rises {rises}, aligned {aligned}, {} frames)", res.trace.len())
            }
        ));
    }
    check(ok, notes.join(" "))
}

fn paired_report() -> ExperimentReport {
    let mut cfg = reduced();
    cfg.experiment.planners = vec![PlannerKind::Povnav, PlannerKind::Idwa];
    cfg.experiment.levels = vec![1, 2, 3, 4, 5];
    cfg.experiment.trials = 20;
    run_experiment(&cfg, &mut |_| Ok(())).unwrap()
}

fn success_rate(report: &ExperimentReport, level: u8, kind: PlannerKind) -> f64 {
    report
        .metrics
        .iter()
        .find(|m| m.level == level && m.planner == kind)
        .map_or(0.0, |m| m.success_rate)
}

fn criterion_4(report: &ExperimentReport) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut gaps = HashMap::new();
    for level in 1..=5u8 {
        let p = success_rate(report, level, PlannerKind::Povnav);
        let d = success_rate(report, level, PlannerKind::Idwa);
        ok &= p >= d;
        gaps.insert(level, p - d);
        notes.push(format!("Env{level} {p:.2}/{d:.2}"));
    }
    ok &= gaps[&5] >= gaps[&1];
    notes.push(format!("gap1 {:.2} gap5 {:.2}", gaps[&1], gaps[&5]));
    check(ok, notes.join(", "))
}

fn mutual_lengths(report: &ExperimentReport, level: u8) -> (usize, f64, f64) {
    let find = |trial, kind| {
        report
            .trials
            .iter()
            .find(|t| t.level == level && t.trial == trial && t.planner == kind)
    };
    let (mut n, mut p, mut d) = (0, 0.0, 0.0);
    for t in report.trials.iter().filter(|t| t.level == level && t.planner == PlannerKind::Povnav) {
        let (Some(a), Some(b)) = (find(t.trial, PlannerKind::Povnav), find(t.trial, PlannerKind::Idwa)) else {
            continue;
        };
        if a.status == EpisodeStatus::Success && b.status == EpisodeStatus::Success {
            n += 1;
            p += a.path_length;
            d += b.path_length;
        }
    }
    if n == 0 {
        (0, f64::NAN, f64::NAN)
    } else {
        (n, p / n as f64, d / n as f64)
    }
}

fn criterion_5(report: &ExperimentReport) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for level in [3u8, 5] {
        let (n, p, d) = mutual_lengths(report, level);
        ok &= n > 0 && p <= d;
        notes.push(if n == 0 {
            format!("Env{level} mutual 0: no paired successes to compare")
        } else {
            format!("Env{level} mutual {n}: {p:.2} vs {d:.2} m")
        });
    }
    let cfg = Config::default();
    let goal = (6.0, 1.5);
    let straight = f64::hypot(goal.0, goal.1);
    let start = RobotPose::new(0.0, 0.0, 0.0);
    let p = episode(&cfg, &open_world(), PlannerKind::Povnav, start, goal);
    let d = episode(&cfg, &open_world(), PlannerKind::Idwa, start, goal);
    let both = p.status == EpisodeStatus::Success && d.status == EpisodeStatus::Success;
    let (lp, ld) = (p.path_length, d.path_length);
    let close = (lp - ld).abs() <= 0.05 * lp.min(ld);
    let near_straight = (lp - straight).abs() <= 0.1 * straight && (ld - straight).abs() <= 0.1 * straight;
    ok &= both && close && near_straight;
    notes.push(format!("open {lp:.2}/{ld:.2} m, straight {straight:.2} m"));
    check(ok, notes.join(", "))
}

fn criterion_6() -> Outcome {
    let mut cfg = Config::default();
    cfg.experiment.planners = vec![PlannerKind::Povnav, PlannerKind::Idwa];
    cfg.experiment.levels = vec![3];
    cfg.experiment.trials = 2;
    let report = run_experiment(&cfg, &mut |_| Ok(())).map_err(|e| e.to_string())?;
    let p = mean_action_time(&report.timing, PlannerKind::Povnav).unwrap_or(f64::NAN);
    let d = mean_action_time(&report.timing, PlannerKind::Idwa).unwrap_or(f64::NAN);
    check(
        p <= 0.5 * d && p <= 0.050,
        format!("320x240 mean action {:.1} ms vs {:.1} ms, ratio {:.2}", 1e3 * p, 1e3 * d, p / d),
    )
}

fn criterion_7() -> Outcome {
    let base = Config::default();
    let world = selective_arena();
    let with = |names: &[&str]| {
        let mut cfg = base.clone();
        cfg.classes = base.classes.with_navigable(names).unwrap();
        cfg
    };
    let on = |res: &EpisodeResult, class: u8| {
        let hits = res
            .trace
            .iter()
            .filter(|f| world.ground_class_at(f.pose.x, f.pose.y) == class)
            .count();
        hits as f64 / res.trace.len().max(1) as f64
    };
    let start = RobotPose::new(1.0, 0.0, 0.0);
    let road = episode(&with(&["road"]), &world, PlannerKind::Povnav, start, (17.0, 0.0));
    let snow = episode(&with(&["snow"]), &world, PlannerKind::Povnav, RobotPose::new(1.0, -3.0, 0.0), (17.0, -3.0));
    let both = episode(&with(&["road", "snow"]), &world, PlannerKind::Povnav, start, (17.0, 0.0));
    let (fr, fs) = (on(&road, class_ids::ROAD), on(&snow, class_ids::SNOW));
    let ok = road.status == EpisodeStatus::Success
        && snow.status == EpisodeStatus::Success
        && both.status == EpisodeStatus::Success
        && fr >= 0.95
        && fs >= 0.95
        && both.path_length < road.path_length;
    check(
        ok,
        format!(
            "road-only {} {:.0}% on road, snow-only {} {:.0}% on snow, lengths {:.2} (both) vs {:.2} (road) m",
            road.status.name(),
            100.0 * fr,
            snow.status.name(),
            100.0 * fs,
            both.path_length,
            road.path_length
        ),
    )
}

#[derive(PartialEq)]
struct Node(f64, usize);
impl Eq for Node {}
impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Float-cost uniform-cost search over the 8-neighbour grid.
fn ucs(safe: &SafeRegion, from: usize, to: usize) -> Option<f64> {
    let (w, h) = (safe.width as i64, safe.height as i64);
    let mut dist = vec![f64::INFINITY; safe.forbidden.len()];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Node(0.0, from));
    while let Some(Node(d, i)) = heap.pop() {
        if i == to {
            return Some(d);
        }
        if d > dist[i] {
            continue;
        }
        let (r, c) = (i as i64 / w, i as i64 % w);
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (nr, nc) = (r + dr, c + dc);
                if (dr, dc) == (0, 0) || nr < 0 || nc < 0 || nr >= h || nc >= w {
                    continue;
                }
                let j = (nr * w + nc) as usize;
                let nd = d + if dr != 0 && dc != 0 { 2f64.sqrt() } else { 1.0 };
                if !safe.forbidden[j] && nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Node(nd, j));
                }
            }
        }
    }
    None
}

fn criterion_8() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let gains = ServoGains {
        k_v: 0.02,
        k_w: 1.5,
        v_max: 1.0,
        w_max: 1.0,
        lambda0: 60.0,
        lambda_stop: 10.0,
    };
    let mut failures = Vec::new();
    for _ in 0..20_000 {
        let lambda = rng.gen_range(0.0..500.0);
        let phi = rng.gen_range(-1.57..1.57);
        let cmd = servo(&compute_error(lambda, phi, gains.lambda0), &gains);
        if phi != 0.0 && cmd.w.signum() != -phi.signum() {
            failures.push("turn sign");
        }
        let more = lambda + rng.gen_range(0.0..100.0);
        if servo(&compute_error(more, phi, gains.lambda0), &gains).v < cmd.v {
            failures.push("speed monotone");
        }
    }
    for _ in 0..300 {
        let (w, h) = (rng.gen_range(3..=24), rng.gen_range(3..=24));
        let mut safe = SafeRegion::open(w, h);
        for f in safe.forbidden.iter_mut() {
            *f = rng.gen_bool(0.25);
        }
        let start = FrameBPoint::ORIGIN;
        let target = safe.point_of(rng.gen_range(0..w * h));
        match plan_path(&safe, start, target) {
            PathOutcome::Blocked => {
                if safe.is_traversable(start) {
                    failures.push("spurious block");
                }
            }
            PathOutcome::Found(p) => {
                let from = safe.index_of(start).unwrap();
                let oracle = ucs(&safe, from, safe.index_of(p.end).unwrap());
                if oracle.map_or(true, |o| (o - p.cost.value()).abs() > 1e-9) {
                    failures.push("path cost");
                }
                if p.waypoints.iter().any(|&q| !safe.is_traversable(q)) {
                    failures.push("path leaves safe region");
                }
            }
        }
    }
    for _ in 0..300 {
        let (w, h) = (rng.gen_range(4..=32), rng.gen_range(4..=32));
        let mut bin = random_bits(&mut rng, w, h);
        let mut last = proximity_feature(&build_navigability_image(&bin));
        for _ in 0..5 {
            bin.set(rng.gen_range(0..h), rng.gen_range(0..w), 1);
            let now = proximity_feature(&build_navigability_image(&bin));
            if now > last {
                failures.push("proximity grew");
            }
            last = now;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    failures.dedup();
    check(
        failures.is_empty() && secs < 10.0,
        format!("{} failures {:?}, {secs:.2} s", failures.len(), failures),
    )
}

fn bench_bytes(dir: &std::path::Path) -> povnav::Result<(Vec<u8>, Vec<u8>, Vec<u8>)> {
    let mut cfg = reduced();
    cfg.experiment.planners = vec![PlannerKind::Povnav, PlannerKind::Idwa];
    cfg.experiment.levels = vec![2, 4];
    cfg.experiment.trials = 2;
    let mut trace = TraceWriter::create(&dir.join("traces.jsonl"))?;
    let report = run_experiment(&cfg, &mut |line| trace.write(line))?;
    trace.finish()?;
    write_report(&report, dir)?;
    Ok((
        std::fs::read(dir.join("metrics.csv"))?,
        std::fs::read(dir.join("trials.csv"))?,
        std::fs::read(dir.join("traces.jsonl"))?,
    ))
}

fn criterion_9() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = bench_bytes(a.path()).map_err(|e| e.to_string())?;
    let second = bench_bytes(b.path()).map_err(|e| e.to_string())?;
    check(
        first == second && !first.2.is_empty(),
        format!(
            "metrics {}, trials {}, traces {} ({} bytes)",
            if first.0 == second.0 { "identical" } else { "differ" },
            if first.1 == second.1 { "identical" } else { "differ" },
            if first.2 == second.2 { "identical" } else { "differ" },
            first.2.len()
        ),
    )
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |n: u32| wanted.is_empty() || wanted.contains(&n);
    let mut failed = 0;
    let mut report_line = |n: u32, name: &str, out: Outcome| {
        match &out {
            Ok(d) => println!("criterion {n} PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n} FAIL {name}: {d}");
            }
        }
    };
    if run(1) {
        report_line(1, "horizon oracle", criterion_1());
    }
    if run(2) {
        report_line(2, "pareto front oracle", criterion_2());
    }
    if run(3) {
        report_line(3, "open-field alignment", criterion_3());
    }
    if run(4) || run(5) {
        let report = paired_report();
        if run(4) {
            report_line(4, "success-rate trend", criterion_4(&report));
        }
        if run(5) {
            report_line(5, "path-length trend", criterion_5(&report));
        }
    }
    if run(6) {
        report_line(6, "compute time", criterion_6());
    }
    if run(7) {
        report_line(7, "selective navigation", criterion_7());
    }
    if run(8) {
        report_line(8, "servo and path invariants", criterion_8());
    }
    if run(9) {
        report_line(9, "determinism", criterion_9());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
