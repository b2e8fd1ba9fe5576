//! Grain-size distributions over normalized equivalent radius.

use serde::{Deserialize, Serialize};

use super::segment::GrainLabeling;
use crate::error::{Error, Result};

pub const RHO_MAX: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrainSizeDistribution {
    /// `n_bins + 1` uniform edges over `[0, RHO_MAX]`.
    pub bin_edges: Vec<f64>,
    /// Density per bin; `Σ density · width = 1`.
    pub density: Vec<f64>,
    pub counts: Vec<usize>,
    /// Grains with `ρ ≥ RHO_MAX`, folded into the last bin.
    pub overflow: usize,
    pub rho: Vec<f64>,
}

impl GrainSizeDistribution {
    pub fn bin_width(&self) -> f64 {
        RHO_MAX / self.density.len() as f64
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width()
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }
}

/// Normalized radii `R_k / <R>` with `R_k = sqrt(A_k / π)`.
pub fn normalized_radii(areas: &[f64]) -> Result<Vec<f64>> {
    if areas.is_empty() {
        return Err(Error::Precondition("grain-size distribution needs at least one grain".into()));
    }
    let radii: Vec<f64> = areas.iter().map(|a| (a / std::f64::consts::PI).sqrt()).collect();
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    Ok(radii.iter().map(|r| r / mean).collect())
}

pub fn histogram_from_areas(areas: &[f64], n_bins: usize) -> Result<GrainSizeDistribution> {
    if n_bins == 0 {
        return Err(Error::Precondition("n_bins must be positive".into()));
    }
    let rho = normalized_radii(areas)?;
    let width = RHO_MAX / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    let mut overflow = 0;
    for &r in &rho {
        let bin = (r / width).floor() as usize;
        if bin >= n_bins {
            overflow += usize::from(r >= RHO_MAX);
            counts[n_bins - 1] += 1;
        } else {
            counts[bin] += 1;
        }
    }
    let scale = 1.0 / (rho.len() as f64 * width);
    Ok(GrainSizeDistribution {
        bin_edges: (0..=n_bins).map(|i| i as f64 * width).collect(),
        density: counts.iter().map(|&c| c as f64 * scale).collect(),
        counts,
        overflow,
        rho,
    })
}

pub fn grain_size_distribution(labeling: &GrainLabeling, n_bins: usize) -> Result<GrainSizeDistribution> {
    let areas: Vec<f64> = labeling.areas.iter().map(|&a| a as f64).collect();
    histogram_from_areas(&areas, n_bins)
}

/// Mean-field radius density; vanishes identically for `ρ ≥ 2`.
pub fn hillert_reference(rho: f64, lambda: f64) -> f64 {
    if !(0.0..2.0).contains(&rho) {
        return 0.0;
    }
    let e = std::f64::consts::E;
    (2.0 * e).powf(lambda) * lambda * rho / (2.0 - rho).powf(2.0 + lambda)
        * (-2.0 * lambda * rho / (2.0 - rho)).exp()
}
