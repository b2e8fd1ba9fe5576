use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "microevo", version, about = "Phase-field microstructure simulation, datasets and scoring")]
pub struct Cli {
    /// JSON config for the subcommand; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to available cores).
    #[arg(long, global = true, value_name = "N")]
    pub parallel: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate trajectories and their manifest.
    Simulate(SimulateArgs),
    /// Split trajectories and cut them into input/target clips.
    Dataset(DatasetArgs),
    /// Produce reference predictions for a clip split.
    Baseline(BaselineArgs),
    /// Score predictions against ground truth.
    Score(ScoreArgs),
    /// Export selected frames as PGM images.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    GrainGrowth,
    Spinodal,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Number of trajectories B.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    /// Grid size `N` or `H,W`.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    /// Solver steps per recorded frame (grain growth).
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub n_grains: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Time between recorded frames (spinodal).
    #[arg(long)]
    pub frame_interval: Option<f64>,
    #[arg(long)]
    pub c0: Option<f64>,
    /// Draw c0 per trajectory from {0.5} and [0.30, 0.40].
    #[arg(long)]
    pub mix_c0: bool,
    /// Base name of the tensor and manifest files.
    #[arg(long)]
    pub name: Option<String>,
    /// Regenerate the trajectories described by an existing manifest.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["kind", "count", "frames", "grid", "stride", "n_grains", "dt", "frame_interval", "c0", "mix_c0"])]
    pub from_manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Trajectory tensor file or directory of them (repeatable).
    #[arg(long = "input", value_name = "PATH")]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub input_len: Option<usize>,
    #[arg(long)]
    pub output_len: Option<usize>,
    /// Window stride for train and validation clips.
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub test_stride: Option<usize>,
    /// Trajectories per split as `TRAIN,VAL,TEST`.
    #[arg(long, value_parser = parse_triple_usize)]
    pub split_counts: Option<[usize; 3]>,
    /// Split fractions as `TRAIN,VAL,TEST`.
    #[arg(long, value_parser = parse_triple_f64)]
    pub split_fractions: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Dataset directory holding `dataset.json`.
    #[arg(long, value_name = "DIR")]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_name = "PATH")]
    pub pred: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub every: Option<usize>,
    /// Add mean-area series and trend fits (grain images).
    #[arg(long)]
    pub grain_stats: bool,
    /// Frames with GSD snapshots, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub gsd_frames: Option<Vec<usize>>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Also write CSV copies of the series.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long, value_name = "PATH")]
    pub tensor: Option<PathBuf>,
    /// 1-based frame times, e.g. `11,25,50,75,100`.
    #[arg(long, value_delimiter = ',')]
    pub frames: Option<Vec<usize>>,
    /// Clip (B) indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub clips: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_range, value_name = "LO,HI")]
    pub clip_range: Option<(f64, f64)>,
    /// Time of the frame preceding the tensor's first frame.
    #[arg(long)]
    pub time_offset: Option<usize>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split([',', 'x']).collect();
    let num = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("bad grid size {p:?}: {e}"));
    match parts.as_slice() {
        [n] => {
            let n = num(n)?;
            Ok((n, n))
        }
        [h, w] => Ok((num(h)?, num(w)?)),
        _ => Err(format!("grid must be N or H,W, got {s:?}")),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, n: usize) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    let v: Vec<T> = s
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("bad value {p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated values, got {}", v.len()));
    }
    Ok(v)
}

fn parse_triple_usize(s: &str) -> Result<[usize; 3], String> {
    let v = parse_list::<usize>(s, 3)?;
    Ok([v[0], v[1], v[2]])
}

fn parse_triple_f64(s: &str) -> Result<[f64; 3], String> {
    let v = parse_list::<f64>(s, 3)?;
    Ok([v[0], v[1], v[2]])
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let v = parse_list::<f64>(s, 2)?;
    if !(v[0] < v[1]) {
        return Err(format!("clip range needs LO < HI, got {s:?}"));
    }
    Ok((v[0], v[1]))
}
