use std::path::{Path, PathBuf};

use microevo::tensor_io::{export_image, read_sequences};
use serde::{Deserialize, Serialize};

use crate::args::RenderArgs;
use crate::config::{create_dir, default_out, load, write_run_record};
use crate::failure::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub tensor: Option<PathBuf>,
    /// 1-based frame times.
    pub frames: Vec<usize>,
    pub clips: Vec<usize>,
    pub clip_range: Option<(f64, f64)>,
    /// Frame time `t` maps to tensor index `t - 1 - time_offset`.
    pub time_offset: usize,
    pub out: PathBuf,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            tensor: None,
            frames: vec![11, 25, 50, 75, 100],
            clips: vec![0],
            clip_range: None,
            time_offset: 0,
            out: default_out(),
        }
    }
}

pub fn frame_index(time: usize, offset: usize, len: usize) -> Option<usize> {
    let idx = time.checked_sub(1)?.checked_sub(offset)?;
    (idx < len).then_some(idx)
}

pub fn run(args: RenderArgs, config: Option<&Path>, out: Option<&Path>) -> CliResult<()> {
    let mut cfg: RenderConfig = load(config)?;
    if args.tensor.is_some() {
        cfg.tensor = args.tensor;
    }
    if let Some(f) = args.frames {
        cfg.frames = f;
    }
    if let Some(c) = args.clips {
        cfg.clips = c;
    }
    if args.clip_range.is_some() {
        cfg.clip_range = args.clip_range;
    }
    if let Some(o) = args.time_offset {
        cfg.time_offset = o;
    }
    if let Some(o) = out {
        cfg.out = o.to_path_buf();
    }
    let path = cfg.tensor.clone().ok_or_else(|| CliError::Config("missing --tensor".into()))?;
    let (dims, seqs) = read_sequences(&path)?;

    let mut jobs = Vec::new();
    for &b in &cfg.clips {
        let seq = seqs
            .get(b)
            .ok_or_else(|| CliError::Config(format!("clip {b} out of range (tensor holds {})", dims[0])))?;
        for &t in &cfg.frames {
            let idx = frame_index(t, cfg.time_offset, seq.len()).ok_or_else(|| {
                CliError::Config(format!(
                    "frame {t} out of range: tensor covers times {}..={}",
                    cfg.time_offset + 1,
                    cfg.time_offset + seq.len()
                ))
            })?;
            jobs.push((b, t, &seq[idx]));
        }
    }
    create_dir(&cfg.out)?;
    let mut outputs = Vec::new();
    for (b, t, frame) in jobs {
        let file = cfg.out.join(format!("clip{b}_t{t:03}.pgm"));
        export_image(frame, &file, cfg.clip_range)?;
        outputs.push(file.display().to_string());
    }
    write_run_record(&cfg.out, "render", &cfg, &outputs)?;
    println!("wrote {} images to {}", outputs.len(), cfg.out.display());
    Ok(())
}
