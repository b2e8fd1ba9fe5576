//! Grain neighbour counts and the von Neumann–Mullins side-count diagnostic.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::segment::{segment_grains, GrainLabeling, SegmentParams};
use super::trend::pearson;
use crate::error::{Error, Result};
use crate::field::Field2D;

/// Largest Chebyshev separation bridged across a boundary region.
pub const ADJACENCY_REACH: usize = 5;

/// Distinct-neighbour count per grain (`counts[k - 1]` for label `k`).
///
/// Grains `a` and `b` are neighbours when a pixel of `a` and a pixel of `b`
/// lie within Chebyshev distance [`ADJACENCY_REACH`] and every pixel strictly
/// between them on the rounded straight line is unlabeled.
pub fn grain_adjacency(labeling: &GrainLabeling) -> Vec<usize> {
    let pairs = adjacent_pairs(labeling);
    let mut counts = vec![0usize; labeling.n_grains()];
    for &(a, b) in &pairs {
        counts[a as usize - 1] += 1;
        counts[b as usize - 1] += 1;
    }
    counts
}

pub fn adjacent_pairs(labeling: &GrainLabeling) -> BTreeSet<(u32, u32)> {
    let (h, w) = (labeling.height as isize, labeling.width as isize);
    let periodic = labeling.periodic;
    let at = |r: isize, c: isize| -> Option<u32> {
        if periodic {
            Some(labeling.labels[(r.rem_euclid(h) * w + c.rem_euclid(w)) as usize])
        } else if (0..h).contains(&r) && (0..w).contains(&c) {
            Some(labeling.labels[(r * w + c) as usize])
        } else {
            None
        }
    };
    let reach = ADJACENCY_REACH as isize;
    let mut pairs = BTreeSet::new();
    for r in 0..h {
        for c in 0..w {
            let a = labeling.labels[(r * w + c) as usize];
            if a == 0 {
                continue;
            }
            let on_edge = [(0, 1), (1, 0), (0, -1), (-1, 0)]
                .iter()
                .any(|&(dr, dc)| at(r + dr, c + dc) == Some(0));
            if !on_edge {
                continue;
            }
            for dr in -reach..=reach {
                for dc in -reach..=reach {
                    let Some(b) = at(r + dr, c + dc) else { continue };
                    if b == 0 || b == a || pairs.contains(&(a.min(b), a.max(b))) {
                        continue;
                    }
                    let steps = dr.abs().max(dc.abs());
                    let clear = (1..steps).all(|k| {
                        let rr = r + (k as f64 * dr as f64 / steps as f64).round() as isize;
                        let cc = c + (k as f64 * dc as f64 / steps as f64).round() as isize;
                        at(rr, cc) == Some(0)
                    });
                    if clear {
                        pairs.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VnmParams {
    pub segment: SegmentParams,
    /// Frames between the two samples of each pair.
    pub every: usize,
    /// Largest centroid displacement accepted as the same grain, in pixels.
    pub gate: f64,
}

impl Default for VnmParams {
    fn default() -> Self {
        VnmParams {
            segment: SegmentParams::default(),
            every: 1,
            gate: 5.0,
        }
    }
}

/// One matched grain: area rate and side count at the earlier frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VnmObservation {
    pub frame: usize,
    pub rate: f64,
    pub sides: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnmResult {
    /// `None` when fewer than [`VNM_MIN_MATCHES`] grains were matched.
    pub correlation: Option<f64>,
    pub matched: usize,
    pub observations: Vec<VnmObservation>,
}

pub const VNM_MIN_MATCHES: usize = 10;

/// Mutual-nearest centroid matches between two labelings within `gate`.
pub fn match_grains(a: &GrainLabeling, b: &GrainLabeling, gate: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, &ca) in a.centroids.iter().enumerate() {
        let Some((j, d)) = b.nearest(ca) else { continue };
        if d > gate {
            continue;
        }
        if a.nearest(b.centroids[j - 1]).map(|(k, _)| k) == Some(i + 1) {
            out.push((i + 1, j));
        }
    }
    out
}

pub fn vnm_diagnostic(frames: &[Field2D], frame_interval: f64, params: &VnmParams) -> Result<VnmResult> {
    if params.every == 0 || frames.len() < params.every + 1 {
        return Err(Error::Precondition("vnm_diagnostic needs at least two sampled frames".into()));
    }
    let sampled: Vec<usize> = (0..frames.len()).step_by(params.every).collect();
    let labelings: Vec<GrainLabeling> = sampled
        .iter()
        .map(|&t| segment_grains(&frames[t], &params.segment))
        .collect();
    let dt = params.every as f64 * frame_interval;
    let mut observations = Vec::new();
    for (k, pair) in labelings.windows(2).enumerate() {
        let (now, next) = (&pair[0], &pair[1]);
        let sides = grain_adjacency(now);
        for (i, j) in match_grains(now, next, params.gate) {
            observations.push(VnmObservation {
                frame: sampled[k],
                rate: (next.areas[j - 1] as f64 - now.areas[i - 1] as f64) / dt,
                sides: sides[i - 1],
            });
        }
    }
    Ok(vnm_from_observations(observations))
}

pub fn vnm_from_observations(observations: Vec<VnmObservation>) -> VnmResult {
    let matched = observations.len();
    let correlation = if matched < VNM_MIN_MATCHES {
        log::warn!("vnm_diagnostic: only {matched} matched grains, no correlation reported");
        None
    } else {
        let rate: Vec<f64> = observations.iter().map(|o| o.rate).collect();
        let excess: Vec<f64> = observations.iter().map(|o| o.sides as f64 - 6.0).collect();
        Some(pearson(&rate, &excess))
    };
    VnmResult {
        correlation,
        matched,
        observations,
    }
}
