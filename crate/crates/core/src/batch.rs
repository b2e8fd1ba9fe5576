//! Multi-trajectory tensor files and manifest-driven regeneration.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::grain_growth::simulate_grain_growth;
use crate::spinodal::simulate_spinodal;
use crate::tensor_io::{self, Dims};
use crate::trajectory::{MemberSpec, SimParams, Trajectory, TrajectoryManifest};

/// Range sampled for off-critical compositions when mixing morphologies.
pub const C0_MIX_RANGE: (f64, f64) = (0.30, 0.40);
const C0_STREAM: u64 = 0x6330_6d69_7800_0001;

pub fn simulate(params: &SimParams) -> Result<Trajectory> {
    match params {
        SimParams::GrainGrowth(p) => simulate_grain_growth(p),
        SimParams::Spinodal(p) => simulate_spinodal(p),
    }
}

/// Members with seeds `seed, seed + 1, …`.
///
/// With `mix_c0` every member draws `c0 = 0.5` or a uniform value in
/// [`C0_MIX_RANGE`] with equal odds, from a stream keyed on its own seed.
pub fn plan_members(seed: u64, count: usize, mix_c0: bool) -> Vec<MemberSpec> {
    (0..count as u64)
        .map(|k| {
            let s = seed.wrapping_add(k);
            let c0 = mix_c0.then(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(s ^ C0_STREAM);
                if rng.gen_bool(0.5) {
                    0.5
                } else {
                    rng.gen_range(C0_MIX_RANGE.0..=C0_MIX_RANGE.1)
                }
            });
            MemberSpec { seed: s, c0 }
        })
        .collect()
}

fn frames_and_grid(params: &SimParams) -> (usize, usize, usize) {
    match params {
        SimParams::GrainGrowth(p) => (p.frames_to_record, p.height, p.width),
        SimParams::Spinodal(p) => (p.frames_to_record, p.height, p.width),
    }
}

impl TrajectoryManifest {
    pub fn new(params: SimParams, members: Vec<MemberSpec>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParams("at least one trajectory is required".into()));
        }
        let (t, h, w) = frames_and_grid(&params);
        let manifest = TrajectoryManifest {
            dims: [members.len(), t, 1, h, w],
            seed: params.seed(),
            frame_interval: params.frame_interval(),
            params,
            members,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    /// Validates every member's resolved parameters.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.members.len() {
            match self.member_params(i).expect("index in range") {
                SimParams::GrainGrowth(p) => p.validate()?,
                SimParams::Spinodal(p) => p.validate()?,
            }
        }
        let (t, h, w) = frames_and_grid(&self.params);
        if self.dims != [self.members.len(), t, 1, h, w] {
            return Err(Error::Manifest(format!(
                "dims {:?} disagree with {} members of {t} frames on {h}x{w}",
                self.dims,
                self.members.len()
            )));
        }
        Ok(())
    }

    /// Runs every member; independent of the thread schedule.
    pub fn generate(&self) -> Result<Vec<Trajectory>> {
        self.validate()?;
        (0..self.members.len())
            .into_par_iter()
            .map(|i| simulate(&self.member_params(i).expect("index in range")))
            .collect()
    }
}

/// Sidecar path: same stem, `.json` extension.
pub fn manifest_path(tensor_path: &Path) -> PathBuf {
    tensor_path.with_extension("json")
}

/// `"<file stem>#<b>"`.
pub fn trajectory_id(tensor_path: &Path, index: usize) -> String {
    let stem = tensor_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    format!("{stem}#{index}")
}

pub fn write_trajectories(tensor_path: &Path, manifest: &TrajectoryManifest, trajectories: &[Trajectory]) -> Result<()> {
    let frames: Vec<&[Field2D]> = trajectories.iter().map(|t| t.frames.as_slice()).collect();
    let (dims, payload) = tensor_io::pack_sequences(&frames)?;
    if dims != manifest.dims {
        return Err(Error::Shape(format!(
            "trajectories pack to {dims:?}, manifest declares {:?}",
            manifest.dims
        )));
    }
    tensor_io::write_tensor(tensor_path, &dims, &payload)?;
    tensor_io::write_json(manifest_path(tensor_path), manifest)
}

/// Reads a trajectory tensor together with its sidecar manifest.
pub fn read_trajectories(tensor_path: &Path) -> Result<(TrajectoryManifest, Vec<Vec<Field2D>>)> {
    let manifest: TrajectoryManifest = tensor_io::read_json(manifest_path(tensor_path))?;
    let (dims, seqs) = tensor_io::read_sequences(tensor_path)?;
    check_dims(&manifest.dims, &dims, tensor_path)?;
    Ok((manifest, seqs))
}

fn check_dims(expected: &Dims, found: &Dims, path: &Path) -> Result<()> {
    if expected != found {
        return Err(Error::Manifest(format!(
            "{}: tensor dims {found:?} differ from manifest {expected:?}",
            path.display()
        )));
    }
    Ok(())
}
