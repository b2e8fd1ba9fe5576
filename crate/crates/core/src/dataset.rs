//! Sliding-window clip extraction, zero padding and roll-out scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::tensor_io::{self, Dims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClipSpec {
    pub input_len: usize,
    pub output_len: usize,
    pub stride: usize,
}

impl Default for ClipSpec {
    fn default() -> Self {
        ClipSpec {
            input_len: 10,
            output_len: 90,
            stride: 10,
        }
    }
}

impl ClipSpec {
    pub fn window(&self) -> usize {
        self.input_len + self.output_len
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_len == 0 || self.output_len == 0 || self.stride == 0 {
            return Err(Error::InvalidParams(format!(
                "clip lengths and stride must be >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// `⌊(T − window)/S⌋ + 1`, or 0 when the trajectory is shorter than one window.
pub fn count_windows(frames: usize, spec: &ClipSpec) -> usize {
    if frames < spec.window() {
        0
    } else {
        (frames - spec.window()) / spec.stride + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Provenance {
    pub trajectory: String,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub input: Vec<Field2D>,
    pub target: Vec<Field2D>,
    pub provenance: Provenance,
}

pub fn build_clips(trajectory_id: &str, frames: &[Field2D], spec: &ClipSpec) -> Vec<Clip> {
    (0..count_windows(frames.len(), spec))
        .map(|k| {
            let s = k * spec.stride;
            Clip {
                input: frames[s..s + spec.input_len].to_vec(),
                target: frames[s + spec.input_len..s + spec.window()].to_vec(),
                provenance: Provenance {
                    trajectory: trajectory_id.to_string(),
                    start: s,
                },
            }
        })
        .collect()
}

/// Prepends all-zero frames so the sequence has exactly `target_len` frames.
pub fn pad_input(frames: &[Field2D], target_len: usize) -> Result<Vec<Field2D>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Precondition("cannot pad an empty input sequence".into()))?;
    if frames.len() > target_len {
        return Err(Error::Precondition(format!(
            "{} input frames exceed the model input length {target_len}",
            frames.len()
        )));
    }
    let (h, w) = first.shape();
    let mut out = vec![Field2D::zeros(h, w); target_len - frames.len()];
    out.extend_from_slice(frames);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputSource {
    Observed,
    PreviousPrediction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RolloutSegment {
    pub source: InputSource,
    /// Leading zero frames in this segment's input.
    pub padding: usize,
    pub predict: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RolloutSchedule {
    pub segments: Vec<RolloutSegment>,
}

impl RolloutSchedule {
    pub fn total_predicted(&self) -> usize {
        self.segments.iter().map(|s| s.predict).sum()
    }
}

/// Plans iterative roll-out: the first segment reads observed frames, each
/// later one reads the last `input_len` predictions.
pub fn make_rollout_schedule(observed: usize, horizon: usize, spec: &ClipSpec) -> Result<RolloutSchedule> {
    if observed == 0 || horizon == 0 {
        return Err(Error::Precondition(format!(
            "observed ({observed}) and horizon ({horizon}) must both be >= 1"
        )));
    }
    if observed > spec.input_len {
        return Err(Error::Precondition(format!(
            "{observed} observed frames exceed the input length {}",
            spec.input_len
        )));
    }
    let mut segments = vec![RolloutSegment {
        source: InputSource::Observed,
        padding: spec.input_len - observed,
        predict: horizon.min(spec.output_len),
    }];
    let mut done = segments[0].predict;
    while done < horizon {
        // Feedback needs a full input window of predictions.
        let padding = spec.input_len.saturating_sub(done);
        let predict = (horizon - done).min(spec.output_len);
        segments.push(RolloutSegment {
            source: InputSource::PreviousPrediction,
            padding,
            predict,
        });
        done += predict;
    }
    Ok(RolloutSchedule { segments })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// Trajectory ids per split.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitPlan {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl SplitPlan {
    pub fn ids(&self, split: Split) -> &[String] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    /// Seeded shuffle of `ids` into consecutive blocks of the given sizes.
    pub fn from_counts(ids: &[String], counts: [usize; 3], seed: u64) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total > ids.len() {
            return Err(Error::InvalidParams(format!(
                "split sizes {counts:?} need {total} trajectories, only {} available",
                ids.len()
            )));
        }
        let mut shuffled = ids.to_vec();
        shuffled.sort();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut it = shuffled.into_iter();
        let mut take = |n| (&mut it).take(n).collect::<Vec<_>>();
        Ok(SplitPlan {
            train: take(counts[0]),
            validation: take(counts[1]),
            test: take(counts[2]),
        })
    }

    /// Rejects any trajectory assigned to more than one split.
    pub fn check_disjoint(&self) -> Result<()> {
        let mut seen: BTreeMap<&str, Split> = BTreeMap::new();
        for split in Split::ALL {
            let mut within = BTreeSet::new();
            for id in self.ids(split) {
                if !within.insert(id.as_str()) {
                    return Err(Error::InvalidParams(format!(
                        "trajectory {id} listed twice in {}",
                        split.name()
                    )));
                }
                if let Some(prev) = seen.insert(id, split) {
                    return Err(Error::InvalidParams(format!(
                        "trajectory {id} appears in both {} and {}",
                        prev.name(),
                        split.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipDataset {
    pub split: Split,
    pub clips: Vec<Clip>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub trajectories: Vec<String>,
    pub clip_count: usize,
    pub inputs_file: String,
    pub targets_file: String,
    pub inputs_dims: Dims,
    pub targets_dims: Dims,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub spec: ClipSpec,
    /// Window stride used for the test split.
    pub test_stride: usize,
    pub splits: BTreeMap<Split, SplitRecord>,
}

impl ClipDataset {
    /// Writes `<split>_inputs.msev` and `<split>_targets.msev` under `dir`.
    pub fn write(&self, dir: &Path, trajectories: Vec<String>) -> Result<SplitRecord> {
        if self.clips.is_empty() {
            return Err(Error::Precondition(format!(
                "split {} has no clips",
                self.split.name()
            )));
        }
        let inputs: Vec<&[Field2D]> = self.clips.iter().map(|c| c.input.as_slice()).collect();
        let targets: Vec<&[Field2D]> = self.clips.iter().map(|c| c.target.as_slice()).collect();
        let inputs_file = format!("{}_inputs.msev", self.split.name());
        let targets_file = format!("{}_targets.msev", self.split.name());
        let inputs_dims = tensor_io::write_sequences(dir.join(&inputs_file), &inputs)?;
        let targets_dims = tensor_io::write_sequences(dir.join(&targets_file), &targets)?;
        Ok(SplitRecord {
            trajectories,
            clip_count: self.clips.len(),
            inputs_file,
            targets_file,
            inputs_dims,
            targets_dims,
            provenance: self.clips.iter().map(|c| c.provenance.clone()).collect(),
        })
    }

    pub fn read(dir: &Path, split: Split, record: &SplitRecord) -> Result<Self> {
        let (_, inputs) = tensor_io::read_sequences(dir.join(&record.inputs_file))?;
        let (_, targets) = tensor_io::read_sequences(dir.join(&record.targets_file))?;
        if inputs.len() != record.provenance.len() || targets.len() != inputs.len() {
            return Err(Error::Manifest(format!(
                "split {} holds {} inputs, {} targets, {} provenance entries",
                split.name(),
                inputs.len(),
                targets.len(),
                record.provenance.len()
            )));
        }
        let clips = inputs
            .into_iter()
            .zip(targets)
            .zip(&record.provenance)
            .map(|((input, target), provenance)| Clip {
                input,
                target,
                provenance: provenance.clone(),
            })
            .collect();
        Ok(ClipDataset { split, clips })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(n: usize) -> Vec<Field2D> {
        (0..n).map(|k| Field2D::constant(2, 2, k as f64)).collect()
    }

    #[test]
    fn window_counts() {
        let spec = ClipSpec::default();
        assert_eq!(count_windows(200, &spec), 11);
        assert_eq!(count_windows(99, &spec), 0);
        for stride in [1, 7, 100, 1000] {
            assert_eq!(count_windows(100, &ClipSpec { stride, ..spec }), 1);
        }
    }

    #[test]
    fn count_matches_enumeration() {
        for t in 0..60 {
            for input_len in 1..5 {
                for output_len in 1..8 {
                    for stride in 1..6 {
                        let spec = ClipSpec {
                            input_len,
                            output_len,
                            stride,
                        };
                        let brute = (0..t)
                            .filter(|s| s % stride == 0 && s + spec.window() <= t)
                            .count();
                        assert_eq!(count_windows(t, &spec), brute);
                    }
                }
            }
        }
    }

    #[test]
    fn single_window_layout() {
        let clips = build_clips("a", &frames(100), &ClipSpec::default());
        assert_eq!(clips.len(), 1);
        assert_eq!(clips[0].input, frames(10));
        assert_eq!(clips[0].target, frames(100)[10..].to_vec());
    }

    #[test]
    fn starts_enumerated() {
        let clips = build_clips("a", &frames(200), &ClipSpec::default());
        let starts: Vec<_> = clips.iter().map(|c| c.provenance.start).collect();
        assert_eq!(starts, (0..=100).step_by(10).collect::<Vec<_>>());
    }

    #[test]
    fn padding() {
        let input = frames(5);
        let padded = pad_input(&input, 10).unwrap();
        assert_eq!(padded.len(), 10);
        assert!(padded[..5].iter().all(|f| f.values().iter().all(|&v| v == 0.0)));
        assert_eq!(&padded[5..], &input[..]);
        assert_eq!(pad_input(&frames(10), 10).unwrap(), frames(10));
        assert!(pad_input(&[], 10).is_err());
        assert!(pad_input(&frames(11), 10).is_err());
    }

    #[test]
    fn rollout_schedules() {
        let spec = ClipSpec::default();
        let predicts = |o, h| {
            make_rollout_schedule(o, h, &spec)
                .unwrap()
                .segments
                .iter()
                .map(|s| s.predict)
                .collect::<Vec<_>>()
        };
        assert_eq!(predicts(10, 90), vec![90]);
        assert_eq!(predicts(10, 190), vec![90, 90, 10]);
        assert_eq!(predicts(5, 95), vec![90, 5]);
        let s = make_rollout_schedule(5, 95, &spec).unwrap();
        assert_eq!(s.segments[0].source, InputSource::Observed);
        assert_eq!(s.segments[0].padding, 5);
        assert_eq!(s.segments[1].source, InputSource::PreviousPrediction);
        assert_eq!(s.segments[1].padding, 0);
        assert!(make_rollout_schedule(0, 5, &spec).is_err());
    }

    #[test]
    fn rollout_enumeration_oracle() {
        let spec = ClipSpec {
            input_len: 3,
            output_len: 4,
            stride: 1,
        };
        for observed in 1..=3 {
            for horizon in 1..30 {
                let s = make_rollout_schedule(observed, horizon, &spec).unwrap();
                assert_eq!(s.total_predicted(), horizon);
                assert_eq!(s.segments[0].source, InputSource::Observed);
                assert!(s.segments.iter().all(|g| g.predict >= 1 && g.predict <= 4));
                assert_eq!(s.segments.len(), horizon.div_ceil(4));
            }
        }
    }

    #[test]
    fn split_overlap_rejected() {
        let plan = SplitPlan {
            train: vec!["a".into(), "b".into()],
            validation: vec!["c".into()],
            test: vec!["b".into()],
        };
        assert!(plan.check_disjoint().is_err());
        let ids: Vec<String> = (0..10).map(|i| format!("t{i}")).collect();
        let plan = SplitPlan::from_counts(&ids, [6, 2, 2], 1).unwrap();
        plan.check_disjoint().unwrap();
        assert_eq!(plan.train.len(), 6);
        assert!(SplitPlan::from_counts(&ids, [6, 3, 2], 1).is_err());
    }
}
