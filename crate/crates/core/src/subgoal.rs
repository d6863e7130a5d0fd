//! Peripheral and horizon optic goals: goal bearing on the image border,
//! the two image-space objectives, the Pareto front on the visual horizon
//! and the weighted-sum pick of the sub-goal.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, FrameBPoint};
use crate::navigability::NavigabilityImage;

/// Goal bearing encoded as an image-border pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pog {
    pub point: FrameBPoint,
    pub bearing: f64,
}

/// Maps a goal bearing onto the image border.
///
/// Bearings in `[-pi/2, pi/2]` walk the U-shaped path bottom-left corner ->
/// left border -> top border -> right border -> bottom-right corner, linear in
/// arc length on each half: `+pi/2` at the bottom-left corner, `0` at the top
/// pixel of the `p^s` column, `-pi/2` at the bottom-right corner. Larger
/// magnitudes slide along the bottom border from the matching corner to the
/// pixel beside `p^s`, which is reached at `+-pi`.
pub fn map_pog(theta: f64, width: usize, height: usize) -> Pog {
    let theta = normalize_angle(theta);
    let half = width / 2;
    let top_x = height - 1;
    let last = width - 1;
    let (x, col) = if (0.0..=FRAC_PI_2).contains(&theta) {
        let len = (top_x + half) as f64;
        let s = (FRAC_PI_2 - theta) / FRAC_PI_2 * len;
        if s <= top_x as f64 {
            (s.round() as usize, 0)
        } else {
            (top_x, (s - top_x as f64).round() as usize)
        }
    } else if (-FRAC_PI_2..0.0).contains(&theta) {
        let len = (top_x + (last - half)) as f64;
        let s = (FRAC_PI_2 + theta) / FRAC_PI_2 * len;
        if s <= top_x as f64 {
            (s.round() as usize, last)
        } else {
            (top_x, last - (s - top_x as f64).round() as usize)
        }
    } else if theta > 0.0 {
        let u = (theta - FRAC_PI_2) / FRAC_PI_2;
        (0, (u * half.saturating_sub(1) as f64).round() as usize)
    } else {
        let u = (-theta - FRAC_PI_2) / FRAC_PI_2;
        (0, last - (u * (last - (half + 1).min(last)) as f64).round() as usize)
    };
    Pog {
        point: FrameBPoint::new(x as i32, col as i32 - half as i32),
        bearing: theta,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePair {
    pub f1: f64,
    pub f2: f64,
}

/// Angular deviation between `p` and the POG as seen from `p^s`, in `[0, pi]`.
/// Defined as 0 at `p^s` itself.
pub fn f1(p: FrameBPoint, pog: FrameBPoint) -> f64 {
    if p == FrameBPoint::ORIGIN {
        return 0.0;
    }
    normalize_angle(p.angle() - pog.angle()).abs().min(PI)
}

/// Pixel distance travelled from `p^s`.
pub fn f2(p: FrameBPoint) -> f64 {
    p.norm()
}

pub fn objectives(p: FrameBPoint, pog: FrameBPoint) -> ObjectivePair {
    ObjectivePair {
        f1: f1(p, pog),
        f2: f2(p),
    }
}

/// `a` dominates `b` under (minimize f1, maximize f2).
pub fn dominates(a: &ObjectivePair, b: &ObjectivePair) -> bool {
    a.f1 <= b.f1 && a.f2 >= b.f2 && (a.f1 < b.f1 || a.f2 > b.f2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub col: usize,
    pub point: FrameBPoint,
    pub objectives: ObjectivePair,
}

/// Horizon pixels of every open column with their objective values.
pub fn horizon_candidates(nav: &NavigabilityImage, pog: &Pog) -> Vec<Candidate> {
    nav.horizon
        .pixels()
        .map(|(col, point)| Candidate {
            col,
            point,
            objectives: objectives(point, pog.point),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParetoFront {
    Feasible(Vec<Candidate>),
    /// No open column: nothing on the horizon to move toward.
    NoFeasibleSubgoal,
}

impl ParetoFront {
    pub fn members(&self) -> &[Candidate] {
        match self {
            ParetoFront::Feasible(m) => m,
            ParetoFront::NoFeasibleSubgoal => &[],
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, ParetoFront::Feasible(_))
    }
}

pub fn pareto_front(nav: &NavigabilityImage, pog: &Pog) -> ParetoFront {
    let candidates = horizon_candidates(nav, pog);
    if candidates.is_empty() {
        return ParetoFront::NoFeasibleSubgoal;
    }
    ParetoFront::Feasible(non_dominated(&candidates))
}

/// Sweep in (f1 ascending, f2 descending) order. A candidate survives when
/// its f2 is the best within its f1 group and strictly beats every f2 seen
/// at a smaller f1. Output is in ascending column order.
pub fn non_dominated(candidates: &[Candidate]) -> Vec<Candidate> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (oa, ob) = (&candidates[a].objectives, &candidates[b].objectives);
        oa.f1
            .total_cmp(&ob.f1)
            .then(ob.f2.total_cmp(&oa.f2))
            .then(a.cmp(&b))
    });
    let mut keep = vec![false; candidates.len()];
    let mut best_before = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        let f1 = candidates[order[i]].objectives.f1;
        let group_best = candidates[order[i]].objectives.f2;
        let mut j = i;
        while j < order.len() && candidates[order[j]].objectives.f1 == f1 {
            let o = &candidates[order[j]].objectives;
            if o.f2 == group_best && o.f2 > best_before {
                keep[order[j]] = true;
            }
            j += 1;
        }
        best_before = best_before.max(group_best);
        i = j;
    }
    candidates
        .iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(*c))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HogWeights {
    pub w1: f64,
    pub w2: f64,
    /// Min-max normalize both objectives over the front before weighting.
    pub normalize: bool,
}

impl Default for HogWeights {
    fn default() -> Self {
        Self {
            w1: 0.5,
            w2: 0.5,
            normalize: true,
        }
    }
}

impl HogWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.w1 >= 0.0 && self.w2 >= 0.0) || (self.w1 == 0.0 && self.w2 == 0.0) {
            return Err(Error::Config(format!(
                "HOG weights must be non-negative and not both zero, got ({}, {})",
                self.w1, self.w2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HogSelection {
    pub index: usize,
    pub hog: Candidate,
    /// Weighted score of every front member, in front order.
    pub scores: Vec<f64>,
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn rescale(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = min_max(values);
    let span = hi - lo;
    values
        .iter()
        .map(|&v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect()
}

/// Weighted-sum pick over the front of `w1*f1 + w2*|pog - p|`.
/// Ties go to the smaller f1, then the smaller column.
pub fn select_hog(front: &[Candidate], pog: &Pog, weights: &HogWeights) -> Result<HogSelection> {
    weights.validate()?;
    if front.is_empty() {
        return Err(Error::NoFeasibleSubgoal);
    }
    let mut dev: Vec<f64> = front.iter().map(|c| c.objectives.f1).collect();
    let mut gap: Vec<f64> = front.iter().map(|c| pog.point.distance(c.point)).collect();
    if weights.normalize {
        dev = rescale(&dev);
        gap = rescale(&gap);
    }
    let scores: Vec<f64> = dev
        .iter()
        .zip(&gap)
        .map(|(d, g)| weights.w1 * d + weights.w2 * g)
        .collect();
    let index = (0..front.len())
        .min_by(|&a, &b| {
            scores[a]
                .total_cmp(&scores[b])
                .then(front[a].objectives.f1.total_cmp(&front[b].objectives.f1))
                .then(front[a].col.cmp(&front[b].col))
        })
        .expect("front is non-empty");
    Ok(HogSelection {
        index,
        hog: front[index],
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgoalResult {
    pub pog: Pog,
    pub pareto_set: Vec<Candidate>,
    pub hog: Candidate,
    pub weights: HogWeights,
    pub scalar_scores: Vec<f64>,
}

/// POG mapping, Pareto front and HOG selection in one call.
pub fn select_subgoal(
    nav: &NavigabilityImage,
    bearing: f64,
    weights: &HogWeights,
) -> Result<SubgoalResult> {
    let pog = map_pog(bearing, nav.width, nav.height);
    let front = match pareto_front(nav, &pog) {
        ParetoFront::Feasible(f) => f,
        ParetoFront::NoFeasibleSubgoal => return Err(Error::NoFeasibleSubgoal),
    };
    let sel = select_hog(&front, &pog, weights)?;
    Ok(SubgoalResult {
        pog,
        hog: sel.hog,
        pareto_set: front,
        weights: *weights,
        scalar_scores: sel.scores,
    })
}

pub const BRUTE_FORCE_LIMIT: usize = 64;

/// Non-dominated subset of every navigable pixel by pairwise comparison.
/// Test oracle; refuses images beyond 64x64.
pub fn brute_force_pareto(nav: &NavigabilityImage, pog: &Pog) -> Result<Vec<FrameBPoint>> {
    if nav.width > BRUTE_FORCE_LIMIT || nav.height > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            width: nav.width,
            height: nav.height,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let half = (nav.width / 2) as i32;
    let mut pts = Vec::new();
    for row in 0..nav.height {
        for col in 0..nav.width {
            if nav.is_navigable(row, col) {
                let p = FrameBPoint::new((nav.height - 1 - row) as i32, col as i32 - half);
                pts.push((p, objectives(p, pog.point)));
            }
        }
    }
    let mut out: Vec<FrameBPoint> = pts
        .iter()
        .filter(|(_, a)| !pts.iter().any(|(_, b)| dominates(b, a)))
        .map(|(p, _)| *p)
        .collect();
    out.sort_by(|a, b| a.y.cmp(&b.y).then(a.x.cmp(&b.x)));
    Ok(out)
}
