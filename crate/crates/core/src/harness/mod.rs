//! Episode loop, paired experiments, offline frame processing and overlays.

mod episode;
mod experiment;
mod offline;
mod overlay;

pub use episode::{run_episode, EpisodeResult, EpisodeStatus, FrameRecord};
pub use experiment::{
    derive_seed, mean_action_time, run_experiment, sample_task, write_report, ExperimentReport,
    MetricRow, TimingRow, TraceLine, TraceWriter, TrialRow,
};
pub use offline::{load_label_image, offline_process, save_label_image, OfflineRecord, OfflineSummary};
pub use overlay::render_overlay;
