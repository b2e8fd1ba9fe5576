use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use microevo::batch::{manifest_path, read_trajectories, trajectory_id};
use microevo::dataset::{build_clips, ClipDataset, ClipSpec, DatasetManifest, Split, SplitPlan};
use microevo::tensor_io::write_json;
use microevo::Field2D;
use serde::{Deserialize, Serialize};

use crate::args::DatasetArgs;
use crate::config::{create_dir, default_out, load, write_run_record};
use crate::failure::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "dataset.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
    pub clip: ClipSpec,
    pub test_stride: usize,
    /// Exact trajectory counts per split; takes precedence over fractions.
    pub split_counts: Option<[usize; 3]>,
    pub split_fractions: [f64; 3],
    /// Explicit assignment of trajectory ids; takes precedence over both.
    pub plan: Option<SplitPlan>,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            inputs: Vec::new(),
            out: default_out(),
            clip: ClipSpec::default(),
            test_stride: 10,
            split_counts: None,
            split_fractions: [0.8, 0.1, 0.1],
            plan: None,
            seed: 0,
        }
    }
}

fn resolve(args: DatasetArgs, config: Option<&Path>, out: Option<&Path>, seed: Option<u64>) -> CliResult<DatasetConfig> {
    let mut c: DatasetConfig = load(config)?;
    if !args.inputs.is_empty() {
        c.inputs = args.inputs;
    }
    if let Some(v) = args.input_len {
        c.clip.input_len = v;
    }
    if let Some(v) = args.output_len {
        c.clip.output_len = v;
    }
    if let Some(v) = args.stride {
        c.clip.stride = v;
    }
    if let Some(v) = args.test_stride {
        c.test_stride = v;
    }
    if args.split_counts.is_some() {
        c.split_counts = args.split_counts;
    }
    if let Some(f) = args.split_fractions {
        c.split_fractions = f;
    }
    if let Some(s) = seed {
        c.seed = s;
    }
    if let Some(o) = out {
        c.out = o.to_path_buf();
    }
    c.clip.validate()?;
    if c.test_stride == 0 {
        return Err(CliError::Config("test_stride must be >= 1".into()));
    }
    Ok(c)
}

/// Tensor files named directly or found (with sidecars) inside directories.
fn collect_tensors(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|e| CliError::io(p, e))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "msev") && manifest_path(f).is_file())
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::Config("no trajectory files found in the inputs".into()));
    }
    Ok(files)
}

/// Trajectory counts per split from fractions; train takes the remainder.
pub fn counts_from_fractions(n: usize, fractions: [f64; 3]) -> CliResult<[usize; 3]> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || fractions.iter().sum::<f64>() > 1.0 + 1e-9 {
        return Err(CliError::Config(format!("invalid split fractions {fractions:?}")));
    }
    let val = (fractions[1] * n as f64).round() as usize;
    let test = ((fractions[2] * n as f64).round() as usize).min(n - val.min(n));
    let val = val.min(n);
    Ok([n - val - test, val, test])
}

pub fn run(args: DatasetArgs, config: Option<&Path>, out: Option<&Path>, seed: Option<u64>) -> CliResult<()> {
    let cfg = resolve(args, config, out, seed)?;
    let mut frames: BTreeMap<String, Vec<Field2D>> = BTreeMap::new();
    for file in collect_tensors(&cfg.inputs)? {
        let (_, seqs) = read_trajectories(&file)?;
        for (b, seq) in seqs.into_iter().enumerate() {
            let id = trajectory_id(&file, b);
            if frames.insert(id.clone(), seq).is_some() {
                return Err(CliError::Config(format!("duplicate trajectory id {id}")));
            }
        }
    }
    let ids: Vec<String> = frames.keys().cloned().collect();
    let plan = match &cfg.plan {
        Some(p) => {
            p.check_disjoint()?;
            if let Some(missing) = Split::ALL.iter().flat_map(|&s| p.ids(s)).find(|id| !frames.contains_key(*id)) {
                return Err(CliError::Config(format!("plan names unknown trajectory {missing}")));
            }
            p.clone()
        }
        None => {
            let counts = match cfg.split_counts {
                Some(c) => c,
                None => counts_from_fractions(ids.len(), cfg.split_fractions)?,
            };
            SplitPlan::from_counts(&ids, counts, cfg.seed)?
        }
    };
    plan.check_disjoint()?;

    let mut datasets = Vec::new();
    for split in Split::ALL {
        let members = plan.ids(split);
        if members.is_empty() {
            continue;
        }
        let spec = if split == Split::Test {
            ClipSpec {
                stride: cfg.test_stride,
                ..cfg.clip
            }
        } else {
            cfg.clip
        };
        let clips: Vec<_> = members.iter().flat_map(|id| build_clips(id, &frames[id], &spec)).collect();
        if clips.is_empty() {
            return Err(CliError::Config(format!(
                "split {} yields no clips: trajectories are shorter than the {}-frame window",
                split.name(),
                spec.window()
            )));
        }
        datasets.push((ClipDataset { split, clips }, members.to_vec()));
    }

    create_dir(&cfg.out)?;
    let mut splits = BTreeMap::new();
    let mut outputs = Vec::new();
    for (ds, members) in datasets {
        let n_traj = members.len();
        let record = ds.write(&cfg.out, members)?;
        println!("{}: {} clips from {} trajectories", ds.split.name(), record.clip_count, n_traj);
        outputs.push(cfg.out.join(&record.inputs_file).display().to_string());
        outputs.push(cfg.out.join(&record.targets_file).display().to_string());
        splits.insert(ds.split, record);
    }
    let manifest = DatasetManifest {
        spec: cfg.clip,
        test_stride: cfg.test_stride,
        splits,
    };
    let mpath = cfg.out.join(MANIFEST_NAME);
    write_json(&mpath, &manifest)?;
    outputs.push(mpath.display().to_string());
    write_run_record(&cfg.out, "dataset", &cfg, &outputs)?;
    Ok(())
}
