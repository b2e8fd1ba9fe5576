//! Per-clip evaluation reports and dataset averages.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gsd::{grain_size_distribution, GrainSizeDistribution};
use super::segment::{segment_grains, SegmentParams};
use super::similarity::{rmse, ssim};
use super::trend::{linear_fit, LinearFit};
use crate::error::{Error, Result};
use crate::field::Field2D;

pub type Series = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub every: usize,
    /// Frames (relative to prediction start) that get GSD snapshots.
    pub gsd_frames: Vec<usize>,
    pub n_bins: usize,
    /// Compute grain statistics (mean area, trends); only meaningful for grain images.
    pub grain_stats: bool,
    pub area_every: usize,
    pub pixel_area: f64,
    pub segment: SegmentParams,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            every: 5,
            gsd_frames: Vec::new(),
            n_bins: 25,
            grain_stats: false,
            area_every: 10,
            pixel_area: 1.0,
            segment: SegmentParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsdSnapshot {
    pub frame: usize,
    pub truth: Option<GrainSizeDistribution>,
    pub prediction: Option<GrainSizeDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrainTrends {
    pub truth_mean_area: Series,
    pub prediction_mean_area: Series,
    pub truth_fit: Option<LinearFit>,
    pub prediction_fit: Option<LinearFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse: Series,
    pub ssim: Series,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gsd: Vec<GsdSnapshot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grain_trends: Option<GrainTrends>,
    pub segmentation: SegmentParams,
}

/// Mean grain area (physical units) at every `every`-th frame; frames without
/// grains are skipped.
pub fn mean_area_series(frames: &[Field2D], every: usize, params: &SegmentParams, pixel_area: f64) -> Series {
    let every = every.max(1);
    let sampled: Vec<usize> = (0..frames.len()).step_by(every).collect();
    let values: Vec<Option<f64>> = sampled
        .par_iter()
        .map(|&t| {
            let l = segment_grains(&frames[t], params);
            (l.n_grains() > 0).then(|| l.areas.iter().sum::<usize>() as f64 / l.n_grains() as f64 * pixel_area)
        })
        .collect();
    sampled
        .into_iter()
        .zip(values)
        .filter_map(|(t, v)| {
            if v.is_none() {
                log::warn!("mean_area_series: frame {t} has no grains, omitted");
            }
            v.map(|v| (t, v))
        })
        .collect()
}

fn fit_series(series: &Series) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = series.iter().map(|&(t, v)| (t as f64, v)).collect();
    linear_fit(&pts).ok()
}

pub fn score_prediction(prediction: &[Field2D], truth: &[Field2D], config: &ScoreConfig) -> Result<EvalReport> {
    if prediction.len() != truth.len() {
        return Err(Error::Shape(format!(
            "prediction has {} frames, truth has {}",
            prediction.len(),
            truth.len()
        )));
    }
    for (p, t) in prediction.iter().zip(truth) {
        p.check_same_shape(t)?;
    }
    if config.every == 0 {
        return Err(Error::InvalidParams("every must be positive".into()));
    }
    let sampled: Vec<usize> = (0..truth.len()).step_by(config.every).collect();
    let pairs: Vec<(f64, f64)> = sampled
        .par_iter()
        .map(|&t| Ok((rmse(&prediction[t], &truth[t])?, ssim(&prediction[t], &truth[t])?)))
        .collect::<Result<_>>()?;
    let rmse_series = sampled.iter().zip(&pairs).map(|(&t, p)| (t, p.0)).collect();
    let ssim_series = sampled.iter().zip(&pairs).map(|(&t, p)| (t, p.1)).collect();

    let mut gsd = Vec::new();
    for &t in &config.gsd_frames {
        if t >= truth.len() {
            return Err(Error::Precondition(format!("GSD frame {t} out of range ({} frames)", truth.len())));
        }
        let snap = |f: &Field2D| grain_size_distribution(&segment_grains(f, &config.segment), config.n_bins).ok();
        gsd.push(GsdSnapshot {
            frame: t,
            truth: snap(&truth[t]),
            prediction: snap(&prediction[t]),
        });
    }

    let grain_trends = config.grain_stats.then(|| {
        let ta = mean_area_series(truth, config.area_every, &config.segment, config.pixel_area);
        let pa = mean_area_series(prediction, config.area_every, &config.segment, config.pixel_area);
        GrainTrends {
            truth_fit: fit_series(&ta),
            prediction_fit: fit_series(&pa),
            truth_mean_area: ta,
            prediction_mean_area: pa,
        }
    });

    Ok(EvalReport {
        rmse: rmse_series,
        ssim: ssim_series,
        gsd,
        grain_trends,
        segmentation: config.segment,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub clips: usize,
    pub rmse: Series,
    pub ssim: Series,
}

fn average_series(all: &[&Series]) -> Result<Series> {
    let first = all[0];
    let mut out: Vec<(usize, f64)> = first.iter().map(|&(t, _)| (t, 0.0)).collect();
    for s in all {
        if s.len() != first.len() || s.iter().zip(first).any(|(a, b)| a.0 != b.0) {
            return Err(Error::Shape("reports sample different frames".into()));
        }
        for (o, v) in out.iter_mut().zip(s.iter()) {
            o.1 += v.1;
        }
    }
    let n = all.len() as f64;
    out.iter_mut().for_each(|o| o.1 /= n);
    Ok(out)
}

/// Frame-wise mean across clips.
pub fn average_reports(reports: &[EvalReport]) -> Result<DatasetReport> {
    if reports.is_empty() {
        return Err(Error::Precondition("no reports to average".into()));
    }
    Ok(DatasetReport {
        clips: reports.len(),
        rmse: average_series(&reports.iter().map(|r| &r.rmse).collect::<Vec<_>>())?,
        ssim: average_series(&reports.iter().map(|r| &r.ssim).collect::<Vec<_>>())?,
    })
}

pub fn write_series_csv(path: &Path, columns: &[(&str, &Series)]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Manifest(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["frame"];
    header.extend(columns.iter().map(|c| c.0));
    w.write_record(&header).map_err(csv_err)?;
    let rows = columns.first().map_or(0, |c| c.1.len());
    for i in 0..rows {
        let mut row = vec![columns[0].1[i].0.to_string()];
        row.extend(columns.iter().map(|c| c.1[i].1.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
