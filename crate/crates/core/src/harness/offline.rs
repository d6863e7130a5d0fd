use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::navigability::SegmentedImage;
use crate::planner::{PlanDetail, PlanRecord, PovnavPipeline};

use super::overlay::render_overlay;

/// Label image stored as 8-bit grayscale, one class id per pixel.
pub fn load_label_image(path: &Path) -> Result<SegmentedImage> {
    let img = image::open(path)?.to_luma8();
    SegmentedImage::new(img.width() as usize, img.height() as usize, img.into_raw())
}

pub fn save_label_image(seg: &SegmentedImage, path: &Path) -> Result<()> {
    let img = GrayImage::from_raw(seg.width as u32, seg.height as u32, seg.labels.clone())
        .expect("label buffer matches its dimensions");
    img.save(path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineRecord {
    pub file: String,
    #[serde(flatten)]
    pub record: PlanRecord,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OfflineSummary {
    pub processed: usize,
    pub skipped: Vec<String>,
    pub no_subgoal: usize,
}

/// Runs the POVNav pipeline over every `.png` label image in `input`, in
/// file-name order. Writes `records.jsonl` and one overlay per frame into
/// `output`. Unreadable files are skipped; a size change aborts.
pub fn offline_process(input: &Path, output: &Path, cfg: &Config, goal_bearing: f64) -> Result<OfflineSummary> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    std::fs::create_dir_all(output)?;
    let mut records = BufWriter::new(File::create(output.join("records.jsonl"))?);
    let mut summary = OfflineSummary::default();
    let mut pipeline: Option<PovnavPipeline> = None;
    for path in files {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let labels = match load_label_image(&path) {
            Ok(l) => l,
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                summary.skipped.push(name);
                continue;
            }
        };
        let pipe = match &pipeline {
            Some(p) => p,
            None => pipeline.insert(PovnavPipeline::new(cfg, cfg.camera.model_for(labels.width, labels.height)?)?),
        };
        if (labels.width, labels.height) != (pipe.cam.width, pipe.cam.height) {
            return Err(Error::DimensionMismatch {
                expected: (pipe.cam.width, pipe.cam.height),
                got: (labels.width, labels.height),
                context: format!("frame {name}"),
            });
        }
        let out = pipe.process(&labels, goal_bearing)?;
        let record = PlanRecord {
            goal_bearing,
            command: out.command,
            detail: PlanDetail::Povnav(out.frame(cfg.experiment.trace_paths)),
        };
        if out.subgoal.is_none() {
            summary.no_subgoal += 1;
        }
        serde_json::to_writer(&mut records, &OfflineRecord { file: name.clone(), record })?;
        records.write_all(b"\n")?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        render_overlay(&out).save(output.join(format!("{stem}_overlay.png")))?;
        summary.processed += 1;
    }
    records.flush()?;
    Ok(summary)
}
