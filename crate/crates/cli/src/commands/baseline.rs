use std::path::{Path, PathBuf};

use microevo::dataset::{DatasetManifest, Split};
use microevo::tensor_io::{read_json, read_sequences, write_json, write_sequences, Dims};
use microevo::Field2D;
use serde::{Deserialize, Serialize};

use super::dataset::MANIFEST_NAME;
use crate::args::{BaselineArgs, SplitArg};
use crate::config::{create_dir, default_out, load, write_run_record};
use crate::failure::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// Repeat the last observed frame.
    Persistence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub dataset: PathBuf,
    pub split: Split,
    pub method: BaselineKind,
    pub out: PathBuf,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            dataset: default_out(),
            split: Split::Test,
            method: BaselineKind::Persistence,
            out: default_out(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictionManifest {
    pub method: BaselineKind,
    pub split: Split,
    pub inputs_file: PathBuf,
    pub truth_file: PathBuf,
    pub dims: Dims,
}

pub fn persistence(input: &[Field2D], horizon: usize) -> Vec<Field2D> {
    let last = input.last().expect("non-empty input");
    vec![last.clone(); horizon]
}

pub fn run(args: BaselineArgs, config: Option<&Path>, out: Option<&Path>) -> CliResult<()> {
    let mut cfg: BaselineConfig = load(config)?;
    if let Some(d) = args.dataset {
        cfg.dataset = d;
    }
    if let Some(s) = args.split {
        cfg.split = match s {
            SplitArg::Train => Split::Train,
            SplitArg::Validation => Split::Validation,
            SplitArg::Test => Split::Test,
        };
    }
    if let Some(o) = out {
        cfg.out = o.to_path_buf();
    }
    let manifest: DatasetManifest = read_json(cfg.dataset.join(MANIFEST_NAME))?;
    let record = manifest
        .splits
        .get(&cfg.split)
        .ok_or_else(|| CliError::Config(format!("dataset has no {} split", cfg.split.name())))?;
    let (_, inputs) = read_sequences(cfg.dataset.join(&record.inputs_file))?;
    let horizon = record.targets_dims[1];
    let predictions: Vec<Vec<Field2D>> = inputs.iter().map(|i| persistence(i, horizon)).collect();

    create_dir(&cfg.out)?;
    let file = cfg.out.join(format!("{}_persistence.msev", cfg.split.name()));
    let dims = write_sequences(&file, &predictions)?;
    let sidecar = file.with_extension("json");
    write_json(
        &sidecar,
        &PredictionManifest {
            method: cfg.method,
            split: cfg.split,
            inputs_file: cfg.dataset.join(&record.inputs_file),
            truth_file: cfg.dataset.join(&record.targets_file),
            dims,
        },
    )?;
    let outputs = [file.display().to_string(), sidecar.display().to_string()];
    write_run_record(&cfg.out, "baseline", &cfg, &outputs)?;
    println!("wrote {} with dims {dims:?}", file.display());
    Ok(())
}
