use serde::{Deserialize, Serialize};

use crate::field::Field2D;
use crate::grain_growth::GrainParams;
use crate::spinodal::SpinodalParams;
use crate::tensor_io::Dims;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimKind {
    GrainGrowth,
    Spinodal,
}

impl std::fmt::Display for SimKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SimKind::GrainGrowth => "grain-growth",
            SimKind::Spinodal => "spinodal",
        })
    }
}

/// Solver parameters tagged by simulation kind.
///
/// Serialized adjacently as `{"sim_kind": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sim_kind", content = "params", rename_all = "kebab-case")]
pub enum SimParams {
    GrainGrowth(GrainParams),
    Spinodal(SpinodalParams),
}

impl SimParams {
    pub fn kind(&self) -> SimKind {
        match self {
            SimParams::GrainGrowth(_) => SimKind::GrainGrowth,
            SimParams::Spinodal(_) => SimKind::Spinodal,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            SimParams::GrainGrowth(p) => p.seed,
            SimParams::Spinodal(p) => p.seed,
        }
    }

    pub fn pixel_area(&self) -> f64 {
        match self {
            SimParams::GrainGrowth(p) => p.dx * p.dy,
            SimParams::Spinodal(p) => p.dx * p.dy,
        }
    }

    /// Dimensionless time between recorded frames.
    pub fn frame_interval(&self) -> f64 {
        match self {
            SimParams::GrainGrowth(p) => p.dt * p.record_stride as f64,
            SimParams::Spinodal(p) => p.frame_interval,
        }
    }
}

/// Time-ordered frames of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub frames: Vec<Field2D>,
    pub frame_interval: f64,
    pub params: SimParams,
}

impl Trajectory {
    pub fn sim_kind(&self) -> SimKind {
        self.params.kind()
    }

    pub fn rng_seed(&self) -> u64 {
        self.params.seed()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn shape(&self) -> Option<(usize, usize)> {
        self.frames.first().map(Field2D::shape)
    }
}

/// Per-trajectory overrides inside a multi-trajectory tensor file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSpec {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
}

/// JSON sidecar for a trajectory tensor file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub dims: Dims,
    pub seed: u64,
    pub frame_interval: f64,
    #[serde(flatten)]
    pub params: SimParams,
    /// One entry per `B` index; trajectory `b` is reproduced by applying
    /// `members[b]` on top of `params`.
    pub members: Vec<MemberSpec>,
}

impl TrajectoryManifest {
    pub fn member_params(&self, index: usize) -> Option<SimParams> {
        let member = self.members.get(index)?;
        Some(match &self.params {
            SimParams::GrainGrowth(p) => SimParams::GrainGrowth(GrainParams {
                seed: member.seed,
                ..p.clone()
            }),
            SimParams::Spinodal(p) => SimParams::Spinodal(SpinodalParams {
                seed: member.seed,
                c0: member.c0.unwrap_or(p.c0),
                ..p.clone()
            }),
        })
    }
}
