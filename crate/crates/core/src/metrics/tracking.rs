use serde::{Deserialize, Serialize};

use super::segment::{label_mask, BoundingBox, GrainLabeling, SegmentParams};
use crate::error::{Error, Result};
use crate::field::Field2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// Pixels at or above the threshold.
    High,
    /// Pixels below the threshold.
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackParams {
    pub segment: SegmentParams,
    pub gate: f64,
}

impl Default for TrackParams {
    fn default() -> Self {
        TrackParams {
            segment: SegmentParams::default(),
            gate: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub frame: usize,
    pub centroid: (f64, f64),
    pub area: usize,
    pub bbox: BoundingBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackEnd {
    Completed,
    Vanished,
    GateExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleTrack {
    pub phase: Phase,
    pub points: Vec<TrackPoint>,
    pub end: TrackEnd,
}

impl ParticleTrack {
    pub fn areas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.area as f64).collect()
    }
}

pub fn segment_phase(frame: &Field2D, phase: Phase, params: &SegmentParams) -> GrainLabeling {
    let t = params.threshold;
    let mask: Vec<bool> = frame
        .values()
        .iter()
        .map(|&v| match phase {
            Phase::High => v >= t,
            Phase::Low => v < t,
        })
        .collect();
    label_mask(&mask, frame.height(), frame.width(), params)
}

fn point(labeling: &GrainLabeling, frame: usize, label: usize) -> TrackPoint {
    TrackPoint {
        frame,
        centroid: labeling.centroids[label - 1],
        area: labeling.areas[label - 1],
        bbox: labeling.bboxes[label - 1],
    }
}

/// Follows one particle by nearest-centroid association from frame 0.
pub fn track_particle(
    frames: &[Field2D],
    seed_centroid: (f64, f64),
    phase: Phase,
    params: &TrackParams,
) -> Result<ParticleTrack> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Precondition("track_particle needs at least one frame".into()))?;
    let labeling = segment_phase(first, phase, &params.segment);
    let (h, w) = first.shape();
    let (r, c) = (seed_centroid.0.round(), seed_centroid.1.round());
    let inside = r >= 0.0 && c >= 0.0 && (r as usize) < h && (c as usize) < w;
    let label = if inside {
        labeling.label(r as usize, c as usize)
    } else {
        0
    };
    if label == 0 {
        return Err(Error::Precondition(format!(
            "seed ({}, {}) is not inside a segmented particle",
            seed_centroid.0, seed_centroid.1
        )));
    }
    let mut points = vec![point(&labeling, 0, label as usize)];
    let mut end = TrackEnd::Completed;
    for (t, frame) in frames.iter().enumerate().skip(1) {
        let labeling = segment_phase(frame, phase, &params.segment);
        let prev = points.last().expect("non-empty").centroid;
        match labeling.nearest(prev) {
            None => {
                end = TrackEnd::Vanished;
                break;
            }
            Some((_, d)) if d > params.gate => {
                end = TrackEnd::GateExceeded;
                break;
            }
            Some((k, _)) => points.push(point(&labeling, t, k)),
        }
    }
    Ok(ParticleTrack { phase, points, end })
}
