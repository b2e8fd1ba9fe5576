use std::path::{Path, PathBuf};

use microevo::metrics::report::write_series_csv;
use microevo::metrics::{average_reports, score_prediction, EvalReport, ScoreConfig};
use microevo::tensor_io::{read_sequences, write_json};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::ScoreArgs;
use crate::config::{create_dir, default_out, load, write_run_record};
use crate::failure::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreCommandConfig {
    pub prediction: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub out: PathBuf,
    pub csv: bool,
    pub metrics: ScoreConfig,
}

impl Default for ScoreCommandConfig {
    fn default() -> Self {
        ScoreCommandConfig {
            prediction: None,
            truth: None,
            out: default_out(),
            csv: false,
            metrics: ScoreConfig::default(),
        }
    }
}

pub fn run(args: ScoreArgs, config: Option<&Path>, out: Option<&Path>) -> CliResult<()> {
    let mut cfg: ScoreCommandConfig = load(config)?;
    if args.pred.is_some() {
        cfg.prediction = args.pred;
    }
    if args.truth.is_some() {
        cfg.truth = args.truth;
    }
    if let Some(e) = args.every {
        cfg.metrics.every = e;
    }
    cfg.metrics.grain_stats |= args.grain_stats;
    if let Some(f) = args.gsd_frames {
        cfg.metrics.gsd_frames = f;
    }
    if let Some(b) = args.bins {
        cfg.metrics.n_bins = b;
    }
    cfg.csv |= args.csv;
    if let Some(o) = out {
        cfg.out = o.to_path_buf();
    }
    let pred_path = cfg.prediction.clone().ok_or_else(|| CliError::Config("missing --pred".into()))?;
    let truth_path = cfg.truth.clone().ok_or_else(|| CliError::Config("missing --truth".into()))?;
    if cfg.metrics.every == 0 {
        return Err(CliError::Config("every must be >= 1".into()));
    }

    let (pd, pred) = read_sequences(&pred_path)?;
    let (td, truth) = read_sequences(&truth_path)?;
    if pd != td {
        return Err(microevo::Error::Shape(format!("prediction dims {pd:?} differ from truth dims {td:?}")).into());
    }
    let reports: Vec<EvalReport> = pred
        .par_iter()
        .zip(&truth)
        .map(|(p, t)| score_prediction(p, t, &cfg.metrics))
        .collect::<microevo::Result<_>>()?;
    let dataset = average_reports(&reports)?;

    let clip_dir = cfg.out.join("clips");
    create_dir(&clip_dir)?;
    let mut outputs = Vec::new();
    for (b, r) in reports.iter().enumerate() {
        let path = clip_dir.join(format!("clip_{b:04}.json"));
        write_json(&path, r)?;
        if cfg.csv {
            write_series_csv(&path.with_extension("csv"), &[("rmse", &r.rmse), ("ssim", &r.ssim)])?;
        }
        outputs.push(path.display().to_string());
    }
    let summary = cfg.out.join("dataset_report.json");
    write_json(&summary, &dataset)?;
    outputs.push(summary.display().to_string());
    if cfg.csv {
        let csv = cfg.out.join("dataset_report.csv");
        write_series_csv(&csv, &[("rmse", &dataset.rmse), ("ssim", &dataset.ssim)])?;
        outputs.push(csv.display().to_string());
    }
    write_run_record(&cfg.out, "score", &cfg, &outputs)?;
    for ((t, r), (_, s)) in dataset.rmse.iter().zip(&dataset.ssim) {
        println!("frame {t:>4}  rmse {r:.6}  ssim {s:.6}");
    }
    Ok(())
}
