use image::{Rgb, RgbImage};

use crate::geometry::FrameBPoint;
use crate::planner::PovnavOutput;
use crate::subgoal::f2;

const NAVIGABLE: Rgb<u8> = Rgb([60, 140, 60]);
const BLOCKED: Rgb<u8> = Rgb([40, 40, 40]);
const INFLATED: Rgb<u8> = Rgb([150, 110, 40]);
const HORIZON: Rgb<u8> = Rgb([255, 230, 0]);
const FRONT: Rgb<u8> = Rgb([0, 200, 255]);
const PATH: Rgb<u8> = Rgb([255, 140, 0]);
const POG: Rgb<u8> = Rgb([40, 40, 255]);
const HOG: Rgb<u8> = Rgb([255, 0, 0]);
const NEAREST: Rgb<u8> = Rgb([255, 0, 255]);

fn put(img: &mut RgbImage, p: FrameBPoint, color: Rgb<u8>, half: i32) {
    let (w, h) = (img.width() as i32, img.height() as i32);
    let (row, col) = (h - 1 - p.x, p.y + w / 2);
    for dr in -half..=half {
        for dc in -half..=half {
            let (r, c) = (row + dr, col + dc);
            if r >= 0 && c >= 0 && r < h && c < w {
                img.put_pixel(c as u32, r as u32, color);
            }
        }
    }
}

/// Navigable area, inflated margin, visual horizon, Pareto front, planned
/// path, goal border pixel, chosen sub-goal and the nearest horizon pixel.
pub fn render_overlay(out: &PovnavOutput) -> RgbImage {
    let nav = &out.nav;
    let mut img = RgbImage::new(nav.width as u32, nav.height as u32);
    for row in 0..nav.height {
        for col in 0..nav.width {
            let mut color = if nav.is_navigable(row, col) { NAVIGABLE } else { BLOCKED };
            if let Some(safe) = &out.safe {
                if nav.is_navigable(row, col) && safe.forbidden[row * nav.width + col] {
                    color = INFLATED;
                }
            }
            img.put_pixel(col as u32, row as u32, color);
        }
    }
    for (_, p) in nav.horizon.pixels() {
        put(&mut img, p, HORIZON, 0);
    }
    let half = (nav.width / 2) as i32;
    let nearest = (0..nav.width)
        .map(|c| FrameBPoint::new(nav.horizon.height_at(c) as i32, c as i32 - half))
        .min_by(|a, b| f2(*a).total_cmp(&f2(*b)));
    if let Some(sub) = &out.subgoal {
        for c in &sub.pareto_set {
            put(&mut img, c.point, FRONT, 0);
        }
    }
    if let Some(path) = &out.path {
        for &p in &path.waypoints {
            put(&mut img, p, PATH, 0);
        }
    }
    if let Some(p) = nearest {
        put(&mut img, p, NEAREST, 1);
    }
    if let Some(sub) = &out.subgoal {
        put(&mut img, sub.pog.point, POG, 2);
        put(&mut img, sub.hog.point, HOG, 2);
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::navigability::SegmentedImage;
    use crate::planner::PovnavPipeline;
    use crate::sim::class_ids;

    #[test]
    fn open_frame_draws_vertical_path_to_pog_column() {
        let cfg = Config::default();
        let cam = cfg.camera.model_for(64, 48).unwrap();
        let pipe = PovnavPipeline::new(&cfg, cam).unwrap();
        let out = pipe.process(&SegmentedImage::filled(64, 48, class_ids::GRASS), 0.0).unwrap();
        let img = render_overlay(&out);
        for row in 4..44 {
            assert_eq!(*img.get_pixel(32, row), PATH, "row {row}");
        }
        assert_eq!(*img.get_pixel(32, 0), HOG);
        assert_eq!(*img.get_pixel(5, 20), NAVIGABLE);
    }

    #[test]
    fn blocked_frame_has_no_path() {
        let cfg = Config::default();
        let cam = cfg.camera.model_for(64, 48).unwrap();
        let pipe = PovnavPipeline::new(&cfg, cam).unwrap();
        let out = pipe.process(&SegmentedImage::filled(64, 48, class_ids::TREE), 0.0).unwrap();
        let img = render_overlay(&out);
        assert!(img.pixels().all(|p| *p != PATH && *p != HOG));
    }
}
