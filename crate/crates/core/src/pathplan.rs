//! Footprint-aware visual path planning and the proximity/alignment
//! features that feed the servo loop.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{frameb_to_raster, CameraModel, FrameBPoint};
use crate::navigability::NavigabilityImage;
use crate::subgoal::f2;

/// Lateral inflation radius (pixels) for every image row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FootprintProfile {
    pub radius: Vec<usize>,
}

impl FootprintProfile {
    /// `footprint_width` is the robot width plus both safety margins.
    /// Rows that never meet the ground reuse the narrowest positive width.
    pub fn new(cam: &CameraModel, footprint_width: f64) -> Self {
        let widths: Vec<Option<u32>> = (0..cam.height)
            .map(|row| cam.footprint_pixel_width(row, footprint_width).ok())
            .collect();
        let far = widths
            .iter()
            .flatten()
            .copied()
            .filter(|&w| w > 0)
            .min()
            .unwrap_or(if footprint_width > 0.0 { 1 } else { 0 });
        let radius = widths
            .into_iter()
            .map(|w| (w.unwrap_or(far) as usize).div_ceil(2))
            .collect();
        Self { radius }
    }
}

/// Pixels the robot center may occupy: `false` = traversable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafeRegion {
    pub width: usize,
    pub height: usize,
    pub forbidden: Vec<bool>,
}

impl SafeRegion {
    pub fn open(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            forbidden: vec![false; width * height],
        }
    }

    pub fn index_of(&self, p: FrameBPoint) -> Option<usize> {
        frameb_to_raster(p, self.width, self.height)
            .ok()
            .map(|r| r.row * self.width + r.col)
    }

    pub fn point_of(&self, idx: usize) -> FrameBPoint {
        let (row, col) = (idx / self.width, idx % self.width);
        FrameBPoint::new(
            (self.height - 1 - row) as i32,
            col as i32 - (self.width / 2) as i32,
        )
    }

    pub fn is_traversable(&self, p: FrameBPoint) -> bool {
        self.index_of(p).is_some_and(|i| !self.forbidden[i])
    }

    pub fn traversable_count(&self) -> usize {
        self.forbidden.iter().filter(|&&f| !f).count()
    }
}

pub fn inflate(
    nav: &NavigabilityImage,
    cam: &CameraModel,
    robot_width: f64,
    margin: f64,
) -> Result<SafeRegion> {
    if cam.width != nav.width || cam.height != nav.height {
        return Err(Error::DimensionMismatch {
            expected: (cam.width, cam.height),
            got: (nav.width, nav.height),
            context: "camera vs navigability image".into(),
        });
    }
    let profile = FootprintProfile::new(cam, robot_width + 2.0 * margin);
    Ok(inflate_with(nav, &profile))
}

/// Each non-navigable pixel forbids its row neighbours within the row radius.
pub fn inflate_with(nav: &NavigabilityImage, profile: &FootprintProfile) -> SafeRegion {
    let (w, h) = (nav.width, nav.height);
    let mut forbidden = vec![false; w * h];
    let mut prefix = vec![0u32; w + 1];
    for row in 0..h {
        for c in 0..w {
            prefix[c + 1] = prefix[c] + u32::from(!nav.is_navigable(row, c));
        }
        if prefix[w] == 0 {
            continue;
        }
        let r = profile.radius[row];
        for c in 0..w {
            let lo = c.saturating_sub(r);
            let hi = (c + r + 1).min(w);
            forbidden[row * w + c] = prefix[hi] > prefix[lo];
        }
    }
    SafeRegion {
        width: w,
        height: h,
        forbidden,
    }
}

/// Path cost as a count of straight and diagonal moves. Ordering compares
/// `straight + sqrt(2) * diagonal` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PathCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl PathCost {
    pub fn value(self) -> f64 {
        f64::from(self.straight) + SQRT_2 * f64::from(self.diagonal)
    }

    fn step(self, diagonal: bool) -> Self {
        if diagonal {
            Self {
                diagonal: self.diagonal + 1,
                ..self
            }
        } else {
            Self {
                straight: self.straight + 1,
                ..self
            }
        }
    }
}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        // compare da against db * sqrt(2)
        let da = i64::from(self.straight) - i64::from(other.straight);
        let db = i64::from(other.diagonal) - i64::from(self.diagonal);
        match (da.signum(), db.signum()) {
            (0, 0) => Ordering::Equal,
            (a, b) if a >= 0 && b <= 0 => Ordering::Greater,
            (a, b) if a <= 0 && b >= 0 => Ordering::Less,
            (1, 1) => (da * da).cmp(&(2 * db * db)),
            _ => (2 * db * db).cmp(&(da * da)),
        }
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualPath {
    pub waypoints: Vec<FrameBPoint>,
    /// Requested target.
    pub target: FrameBPoint,
    /// Where the path actually ends: the target, or the reachable
    /// traversable pixel closest to it.
    pub end: FrameBPoint,
    pub target_gap: f64,
    pub cost: PathCost,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathOutcome {
    Found(VisualPath),
    /// The start is not traversable.
    Blocked,
}

const NEIGHBOURS: [(i64, i64, bool); 8] = [
    (-1, 0, false),
    (1, 0, false),
    (0, -1, false),
    (0, 1, false),
    (-1, -1, true),
    (-1, 1, true),
    (1, -1, true),
    (1, 1, true),
];

fn neighbours(w: usize, h: usize, idx: usize) -> impl Iterator<Item = (usize, bool)> {
    let (r, c) = ((idx / w) as i64, (idx % w) as i64);
    NEIGHBOURS.iter().filter_map(move |&(dr, dc, diag)| {
        let (nr, nc) = (r + dr, c + dc);
        (nr >= 0 && nc >= 0 && nr < h as i64 && nc < w as i64)
            .then(|| (nr as usize * w + nc as usize, diag))
    })
}

/// Nearest traversable pixel to `start` within `radius` pixels.
pub fn snap_start(safe: &SafeRegion, start: FrameBPoint, radius: i32) -> Option<FrameBPoint> {
    if safe.is_traversable(start) {
        return Some(start);
    }
    let mut best: Option<(i64, usize)> = None;
    for dx in -radius..=radius {
        for dy in -radius..=radius {
            let d2 = i64::from(dx * dx + dy * dy);
            if d2 > i64::from(radius * radius) {
                continue;
            }
            let p = FrameBPoint::new(start.x + dx, start.y + dy);
            if let Some(i) = safe.index_of(p) {
                if !safe.forbidden[i] && best.map_or(true, |b| (d2, i) < b) {
                    best = Some((d2, i));
                }
            }
        }
    }
    best.map(|(_, i)| safe.point_of(i))
}

/// Shortest 8-connected path (unit straight, sqrt(2) diagonal steps).
///
/// Among equal-cost paths the one hugging the straight start-end segment is
/// taken, so the path in open space follows the chord to the target.
pub fn plan_path(safe: &SafeRegion, start: FrameBPoint, target: FrameBPoint) -> PathOutcome {
    let (w, h) = (safe.width, safe.height);
    let Some(start_idx) = safe.index_of(start).filter(|&i| !safe.forbidden[i]) else {
        return PathOutcome::Blocked;
    };

    let mut reachable = vec![false; w * h];
    reachable[start_idx] = true;
    let mut stack = vec![start_idx];
    while let Some(i) = stack.pop() {
        for (j, _) in neighbours(w, h, i) {
            if !safe.forbidden[j] && !reachable[j] {
                reachable[j] = true;
                stack.push(j);
            }
        }
    }

    let end_idx = match safe.index_of(target).filter(|&i| reachable[i]) {
        Some(i) => i,
        None => {
            let mut best = (i64::MAX, start_idx);
            for (i, _) in reachable.iter().enumerate().filter(|(_, &r)| r) {
                let p = safe.point_of(i);
                let (dx, dy) = (i64::from(p.x - target.x), i64::from(p.y - target.y));
                best = best.min((dx * dx + dy * dy, i));
            }
            best.1
        }
    };

    // distances to the end, settled up to the start
    let mut dist: Vec<Option<PathCost>> = vec![None; w * h];
    let mut heap = BinaryHeap::new();
    dist[end_idx] = Some(PathCost::default());
    heap.push(Reverse((PathCost::default(), end_idx)));
    while let Some(Reverse((d, i))) = heap.pop() {
        if dist[i] != Some(d) {
            continue;
        }
        if i == start_idx {
            break;
        }
        for (j, diag) in neighbours(w, h, i) {
            if safe.forbidden[j] {
                continue;
            }
            let nd = d.step(diag);
            if dist[j].map_or(true, |old| nd < old) {
                dist[j] = Some(nd);
                heap.push(Reverse((nd, j)));
            }
        }
    }

    let start_p = safe.point_of(start_idx);
    let end_p = safe.point_of(end_idx);
    let (lx, ly) = (
        i64::from(end_p.x - start_p.x),
        i64::from(end_p.y - start_p.y),
    );
    let cost = dist[start_idx].expect("end is reachable from start");
    let mut waypoints = vec![start_p];
    let mut cur = start_idx;
    while cur != end_idx {
        let here = dist[cur].expect("on a settled shortest path");
        let next = neighbours(w, h, cur)
            .filter(|&(j, diag)| !safe.forbidden[j] && dist[j].is_some_and(|d| d.step(diag) == here))
            .map(|(j, _)| {
                let p = safe.point_of(j);
                let (px, py) = (i64::from(p.x - start_p.x), i64::from(p.y - start_p.y));
                ((px * ly - py * lx).abs(), j)
            })
            .min()
            .expect("a shortest-path predecessor exists")
            .1;
        waypoints.push(safe.point_of(next));
        cur = next;
    }

    PathOutcome::Found(VisualPath {
        waypoints,
        target,
        end: end_p,
        target_gap: end_p.distance(target),
        cost,
    })
}

/// Smallest distance from `p^s` to the visual horizon. Blocked columns
/// count at their base pixel.
pub fn proximity_feature(nav: &NavigabilityImage) -> f64 {
    let half = (nav.width / 2) as i32;
    (0..nav.width)
        .map(|c| {
            let x = nav.horizon.height_at(c) as i32;
            f2(FrameBPoint::new(x, c as i32 - half))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Waypoint at `lookahead` pixels of arc length along the path, or the
/// last waypoint for shorter paths.
pub fn lookahead_point(path: &VisualPath, lookahead: f64) -> Option<FrameBPoint> {
    let mut travelled = 0.0;
    for pair in path.waypoints.windows(2) {
        travelled += pair[0].distance(pair[1]);
        if travelled >= lookahead {
            return Some(pair[1]);
        }
    }
    path.waypoints.last().copied()
}

/// Signed angle between the vertical ray from `p^s` and the chord to the
/// lookahead waypoint; positive toward increasing `y`, within `[-pi/2, pi/2]`.
pub fn alignment_feature(path: &VisualPath, lookahead: f64) -> f64 {
    if path.waypoints.len() < 2 {
        return 0.0;
    }
    match lookahead_point(path, lookahead) {
        Some(p) if p != FrameBPoint::ORIGIN => p.angle().clamp(-FRAC_PI_2, FRAC_PI_2),
        _ => 0.0,
    }
}

/// Visual servo error: proximity and alignment offsets from `(lambda0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoError {
    pub proximity: f64,
    pub alignment: f64,
}

pub fn compute_error(lambda: f64, phi: f64, lambda0: f64) -> ServoError {
    ServoError {
        proximity: lambda - lambda0,
        alignment: phi,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavFeatures {
    pub lambda: f64,
    pub phi: f64,
    pub lambda0: f64,
    pub error: ServoError,
}

impl NavFeatures {
    pub fn new(lambda: f64, phi: f64, lambda0: f64) -> Self {
        Self {
            lambda,
            phi,
            lambda0,
            error: compute_error(lambda, phi, lambda0),
        }
    }
}
