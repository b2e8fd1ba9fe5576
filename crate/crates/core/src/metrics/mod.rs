//! Image metrics, segmentation and microstructure statistics.

pub mod gsd;
pub mod report;
pub mod segment;
pub mod similarity;
pub mod topology;
pub mod tracking;
pub mod trend;

pub use gsd::{grain_size_distribution, hillert_reference, GrainSizeDistribution};
pub use report::{average_reports, mean_area_series, score_prediction, DatasetReport, EvalReport, ScoreConfig};
pub use segment::{segment_grains, Connectivity, GrainLabeling, SegmentParams};
pub use similarity::{rmse, ssim};
pub use topology::{grain_adjacency, vnm_diagnostic, VnmParams, VnmResult};
pub use tracking::{track_particle, ParticleTrack, Phase, TrackParams};
pub use trend::{linear_fit, pearson, savitzky_golay, spearman, LinearFit};
