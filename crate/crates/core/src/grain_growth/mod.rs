//! Multi-order-parameter Allen–Cahn grain growth.
//!
//! Each grain `i` carries an order parameter `η_i` on a periodic grid. The
//! local free energy is
//!
//! ```text
//! f0 = m [ Σ_i (-η_i²/2 + η_i⁴/4) + γ Σ_i Σ_{j≠i} η_i² η_j² + 1/4 ]
//! ```
//!
//! and the fields relax by forward Euler on `∂η_i/∂t = -L δF/δη_i`.
//! The discrete gradient energy uses periodic forward differences, so the
//! exact derivative of the discrete energy is the 5-point Laplacian.

mod active;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use active::{ActiveBox, CyclicSpan};

use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::trajectory::{SimParams, Trajectory};

/// Order parameters outside `[-EXCURSION_BAND, 1 + EXCURSION_BAND]` abort a run.
pub const EXCURSION_BAND: f64 = 0.1;
/// Extra pixels kept around the thresholded support when boxes are re-scanned.
const RESCAN_MARGIN: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrainParams {
    pub n_grains: usize,
    /// Energy density scale `m`.
    pub m: f64,
    /// Gradient energy coefficient `κ`.
    pub kappa: f64,
    /// Allen–Cahn mobility `L`.
    pub mobility: f64,
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
    pub height: usize,
    pub width: usize,
    pub frames_to_record: usize,
    /// Solver steps between recorded frames.
    pub record_stride: usize,
    pub seed: u64,
    /// Coefficient `γ` of the `η_i² η_j²` term, summed over ordered pairs.
    pub cross_coupling: f64,
    /// `|η|` above which a grain counts as present at a pixel.
    pub activity_threshold: f64,
    /// Steps between bounding-box re-scans; 0 disables re-scanning.
    pub rescan_interval: usize,
    /// Restrict updates to per-grain bounding boxes.
    pub track_active: bool,
}

impl Default for GrainParams {
    fn default() -> Self {
        GrainParams {
            n_grains: 100,
            m: 1.0,
            kappa: 1.0,
            mobility: 1.0,
            dx: 1.0,
            dy: 1.0,
            dt: 0.2,
            height: 64,
            width: 64,
            frames_to_record: 200,
            record_stride: 10,
            seed: 0,
            cross_coupling: 0.75,
            activity_threshold: 1e-4,
            rescan_interval: 10,
            track_active: true,
        }
    }
}

impl GrainParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.n_grains < 2 {
            return bad(format!("n_grains must be >= 2, got {}", self.n_grains));
        }
        if self.height == 0 || self.width == 0 {
            return bad("grid must be non-empty".into());
        }
        if self.n_grains > self.height * self.width {
            return bad(format!(
                "{} grains do not fit on a {}x{} grid",
                self.n_grains, self.height, self.width
            ));
        }
        for (name, v) in [
            ("m", self.m),
            ("kappa", self.kappa),
            ("mobility", self.mobility),
            ("dx", self.dx),
            ("dy", self.dy),
            ("dt", self.dt),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.cross_coupling.is_finite() && self.cross_coupling >= 0.0) {
            return bad(format!(
                "cross_coupling must be non-negative, got {}",
                self.cross_coupling
            ));
        }
        if self.frames_to_record == 0 || self.record_stride == 0 {
            return bad("frames_to_record and record_stride must be >= 1".into());
        }
        let h2 = self.dx.min(self.dy).powi(2);
        let diffusion_limit = h2 / (4.0 * self.kappa * self.mobility);
        if self.dt > diffusion_limit {
            return bad(format!(
                "dt = {} exceeds the explicit diffusion limit dx^2/(4 kappa L) = {diffusion_limit}",
                self.dt
            ));
        }
        // Largest eigenvalue of the linearized update at a grain minimum:
        // bulk curvature plus the 5-point Laplacian's spectral radius.
        let bulk = self.m * f64::max(2.0, 4.0 * self.cross_coupling - 1.0);
        let lap = 4.0 * self.kappa * (1.0 / (self.dx * self.dx) + 1.0 / (self.dy * self.dy));
        let amplification = self.dt * self.mobility * (bulk + lap);
        if amplification > 2.0 * (1.0 + 1e-12) {
            return bad(format!(
                "dt * L * (bulk + laplacian stiffness) = {amplification:.4} > 2: forward Euler is unstable \
                 for cross_coupling = {}",
                self.cross_coupling
            ));
        }
        Ok(())
    }

    fn total_steps(&self) -> usize {
        self.record_stride * self.frames_to_record.saturating_sub(1)
    }
}

/// Local free energy density at one pixel.
pub fn local_energy_density(etas: &[f64], m: f64, cross_coupling: f64) -> f64 {
    let mut single = 0.0;
    let mut cross = 0.0;
    for (i, &a) in etas.iter().enumerate() {
        let a2 = a * a;
        single += -a2 / 2.0 + a2 * a2 / 4.0;
        for (j, &b) in etas.iter().enumerate() {
            if i != j {
                cross += a2 * b * b;
            }
        }
    }
    m * (single + cross_coupling * cross + 0.25)
}

/// Order parameters for all grains on a shared periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderParameterSet {
    height: usize,
    width: usize,
    etas: Vec<Vec<f64>>,
    /// `None` once a grain has vanished; the field is then identically zero.
    boxes: Vec<Option<ActiveBox>>,
    steps_since_rescan: usize,
}

impl OrderParameterSet {
    /// Builds `η_i = 1` on pixels labelled `i`, `0` elsewhere.
    pub fn from_labels(height: usize, width: usize, n_grains: usize, labels: &[usize]) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::Shape(format!(
                "{} labels for a {height}x{width} grid",
                labels.len()
            )));
        }
        let mut etas = vec![vec![0.0; height * width]; n_grains];
        for (p, &l) in labels.iter().enumerate() {
            if l >= n_grains {
                return Err(Error::Shape(format!("label {l} >= n_grains {n_grains}")));
            }
            etas[l][p] = 1.0;
        }
        let boxes = etas
            .iter()
            .map(|e| ActiveBox::covering(e, height, width, 0.0))
            .collect();
        Ok(OrderParameterSet {
            height,
            width,
            etas,
            boxes,
            steps_since_rescan: 0,
        })
    }

    /// Wraps arbitrary fields; every grain is treated as active everywhere.
    pub fn from_fields(fields: Vec<Field2D>) -> Result<Self> {
        let (height, width) = fields
            .first()
            .map(Field2D::shape)
            .ok_or_else(|| Error::Shape("no order parameters".into()))?;
        for f in &fields {
            if f.shape() != (height, width) {
                return Err(Error::Shape("order parameters differ in shape".into()));
            }
        }
        let n = fields.len();
        Ok(OrderParameterSet {
            height,
            width,
            etas: fields.into_iter().map(Field2D::into_values).collect(),
            boxes: vec![Some(ActiveBox::full(height, width)); n],
            steps_since_rescan: 0,
        })
    }

    pub fn n_grains(&self) -> usize {
        self.etas.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn eta(&self, i: usize) -> &[f64] {
        &self.etas[i]
    }

    pub fn field(&self, i: usize) -> Field2D {
        Field2D::from_values(self.height, self.width, self.etas[i].clone()).expect("grid size")
    }

    pub fn active_box(&self, i: usize) -> Option<&ActiveBox> {
        self.boxes[i].as_ref()
    }

    /// Grains whose field is not identically zero.
    pub fn live_grains(&self) -> usize {
        self.boxes.iter().filter(|b| b.is_some()).count()
    }

    /// Largest number of grains with `|η| > threshold` at any single pixel.
    pub fn max_active_per_pixel(&self, threshold: f64) -> usize {
        let mut counts = vec![0usize; self.height * self.width];
        for eta in &self.etas {
            for (c, &v) in counts.iter_mut().zip(eta) {
                if v.abs() > threshold {
                    *c += 1;
                }
            }
        }
        counts.into_iter().max().unwrap_or(0)
    }

    /// Sum of squares of all order parameters at each pixel.
    fn sum_of_squares(&self) -> Vec<f64> {
        let (h, w) = self.shape();
        let mut s2 = vec![0.0; h * w];
        for (eta, bx) in self.etas.iter().zip(&self.boxes) {
            let Some(bx) = bx else { continue };
            for r in bx.rows.iter(h) {
                for c in bx.cols.iter(w) {
                    let p = r * w + c;
                    s2[p] += eta[p] * eta[p];
                }
            }
        }
        s2
    }

    /// Advances every order parameter by one forward-Euler step.
    ///
    /// With `params.track_active` only the dilated bounding box of each grain
    /// is updated; outside it the update is exactly zero, so the result matches
    /// a full-grid update.
    pub fn step(&mut self, params: &GrainParams) -> Result<()> {
        let (h, w) = self.shape();
        let s2 = self.sum_of_squares();
        let track = params.track_active;
        let violations: Vec<Option<(usize, usize, f64)>> = self
            .etas
            .par_iter_mut()
            .zip(self.boxes.par_iter_mut())
            .enumerate()
            .map(|(i, (eta, bx))| {
                let region = match (track, *bx) {
                    (true, Some(b)) => b.dilate(1, h, w),
                    (true, None) => return None,
                    (false, _) => ActiveBox::full(h, w),
                };
                let updated = euler_region(eta, &region, &s2, h, w, params);
                let mut k = 0;
                let mut bad = None;
                for r in region.rows.iter(h) {
                    for c in region.cols.iter(w) {
                        let p = r * w + c;
                        let v = updated[k];
                        k += 1;
                        if bad.is_none() && !(-EXCURSION_BAND..=1.0 + EXCURSION_BAND).contains(&v) {
                            bad = Some((i, p, v));
                        }
                        eta[p] = v;
                    }
                }
                *bx = Some(region);
                bad
            })
            .collect();
        if let Some((i, p, v)) = violations.into_iter().flatten().next() {
            return Err(Error::Numerical(format!(
                "order parameter {i} reached {v} at pixel ({}, {}); allowed band is [{}, {}]",
                p / w,
                p % w,
                -EXCURSION_BAND,
                1.0 + EXCURSION_BAND
            )));
        }
        self.steps_since_rescan += 1;
        if track && params.rescan_interval > 0 && self.steps_since_rescan >= params.rescan_interval {
            self.rescan(params.activity_threshold);
        }
        Ok(())
    }

    /// Shrinks each box to the thresholded support (plus a margin) and zeroes
    /// the field outside it.
    pub fn rescan(&mut self, threshold: f64) {
        let (h, w) = self.shape();
        self.steps_since_rescan = 0;
        self.etas
            .par_iter_mut()
            .zip(self.boxes.par_iter_mut())
            .for_each(|(eta, bx)| {
                if bx.is_none() {
                    return;
                }
                match ActiveBox::covering(eta, h, w, threshold) {
                    None => {
                        eta.iter_mut().for_each(|v| *v = 0.0);
                        *bx = None;
                    }
                    Some(tight) => {
                        let kept = tight.dilate(RESCAN_MARGIN, h, w);
                        for r in 0..h {
                            for c in 0..w {
                                if !kept.contains(r, c, h, w) {
                                    eta[r * w + c] = 0.0;
                                }
                            }
                        }
                        *bx = Some(kept);
                    }
                }
            });
    }

    /// Cyclic shift of every field by `(dr, dc)`; boxes are recomputed.
    pub fn rolled(&self, dr: usize, dc: usize) -> Self {
        let (h, w) = self.shape();
        let etas: Vec<Vec<f64>> = (0..self.n_grains())
            .map(|i| self.field(i).rolled(dr, dc).into_values())
            .collect();
        let boxes = self
            .boxes
            .iter()
            .map(|b| {
                b.map(|b| ActiveBox {
                    rows: CyclicSpan {
                        start: (b.rows.start + dr) % h,
                        len: b.rows.len,
                    },
                    cols: CyclicSpan {
                        start: (b.cols.start + dc) % w,
                        len: b.cols.len,
                    },
                })
            })
            .collect();
        OrderParameterSet {
            height: h,
            width: w,
            etas,
            boxes,
            steps_since_rescan: self.steps_since_rescan,
        }
    }
}

#[inline]
fn bulk_derivative(eta: f64, others_sq: f64, m: f64, gamma: f64) -> f64 {
    m * (-eta + eta * eta * eta + 4.0 * gamma * eta * others_sq)
}

#[inline]
fn laplacian_at(eta: &[f64], r: usize, c: usize, h: usize, w: usize, idx2: f64, idy2: f64) -> f64 {
    let centre = eta[r * w + c];
    let left = eta[r * w + (c + w - 1) % w];
    let right = eta[r * w + (c + 1) % w];
    let up = eta[((r + h - 1) % h) * w + c];
    let down = eta[((r + 1) % h) * w + c];
    (left + right - 2.0 * centre) * idx2 + (up + down - 2.0 * centre) * idy2
}

/// New values over `region` (row-major within the region), read from the old field.
fn euler_region(
    eta: &[f64],
    region: &ActiveBox,
    s2: &[f64],
    h: usize,
    w: usize,
    p: &GrainParams,
) -> Vec<f64> {
    let idx2 = 1.0 / (p.dx * p.dx);
    let idy2 = 1.0 / (p.dy * p.dy);
    let rate = p.dt * p.mobility;
    let mut out = Vec::with_capacity(region.area());
    for r in region.rows.iter(h) {
        for c in region.cols.iter(w) {
            let q = r * w + c;
            let v = eta[q];
            let mu = bulk_derivative(v, s2[q] - v * v, p.m, p.cross_coupling)
                - p.kappa * laplacian_at(eta, r, c, h, w, idx2, idy2);
            out.push(v - rate * mu);
        }
    }
    out
}

/// `δF/δη_i` on the full grid.
pub fn functional_derivative(set: &OrderParameterSet, i: usize, params: &GrainParams) -> Field2D {
    let (h, w) = set.shape();
    let s2 = set.sum_of_squares();
    let eta = set.eta(i);
    let idx2 = 1.0 / (params.dx * params.dx);
    let idy2 = 1.0 / (params.dy * params.dy);
    Field2D::from_fn(h, w, |r, c| {
        let q = r * w + c;
        let v = eta[q];
        bulk_derivative(v, s2[q] - v * v, params.m, params.cross_coupling)
            - params.kappa * laplacian_at(eta, r, c, h, w, idx2, idy2)
    })
}

/// Discrete total free energy with periodic forward-difference gradients.
pub fn total_free_energy(set: &OrderParameterSet, params: &GrainParams) -> f64 {
    let (h, w) = set.shape();
    let gamma = params.cross_coupling;
    let row_sums: Vec<f64> = (0..h)
        .into_par_iter()
        .map(|r| {
            let mut acc = 0.0;
            for c in 0..w {
                let q = r * w + c;
                let right = r * w + (c + 1) % w;
                let down = ((r + 1) % h) * w + c;
                let mut single = 0.0;
                let mut s2 = 0.0;
                let mut s4 = 0.0;
                let mut grad = 0.0;
                for eta in &set.etas {
                    let v = eta[q];
                    let v2 = v * v;
                    single += -v2 / 2.0 + v2 * v2 / 4.0;
                    s2 += v2;
                    s4 += v2 * v2;
                    let gx = (eta[right] - v) / params.dx;
                    let gy = (eta[down] - v) / params.dy;
                    grad += gx * gx + gy * gy;
                }
                let f0 = params.m * (single + gamma * (s2 * s2 - s4) + 0.25);
                acc += f0 + 0.5 * params.kappa * grad;
            }
            acc
        })
        .collect();
    row_sums.iter().sum::<f64>() * params.dx * params.dy
}

/// Gray image `clamp(Σ η_i³, 0, 1)`: near 1 inside grains, near 0 on boundaries.
pub fn render_frame(set: &OrderParameterSet) -> Field2D {
    let (h, w) = set.shape();
    let mut acc = vec![0.0; h * w];
    for (eta, bx) in set.etas.iter().zip(&set.boxes) {
        if bx.is_none() {
            continue;
        }
        for (a, &v) in acc.iter_mut().zip(eta) {
            *a += v * v * v;
        }
    }
    acc.iter_mut().for_each(|a| *a = a.clamp(0.0, 1.0));
    Field2D::from_values(h, w, acc).expect("grid size")
}

/// Nearest-seed labels under the periodic (wrap-around) distance.
///
/// Equidistant pixels go to the lowest seed index.
pub fn voronoi_labels(height: usize, width: usize, seeds: &[(usize, usize)]) -> Vec<usize> {
    let wrap = |a: usize, b: usize, n: usize| {
        let d = a.abs_diff(b);
        d.min(n - d)
    };
    (0..height * width)
        .into_par_iter()
        .map(|p| {
            let (r, c) = (p / width, p % width);
            let mut best = 0;
            let mut best_d = usize::MAX;
            for (k, &(sr, sc)) in seeds.iter().enumerate() {
                let dr = wrap(r, sr, height);
                let dc = wrap(c, sc, width);
                let d = dr * dr + dc * dc;
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Distinct seed pixels drawn uniformly; collisions are redrawn.
pub fn draw_seeds(height: usize, width: usize, n: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = vec![false; height * width];
    let mut seeds = Vec::with_capacity(n);
    while seeds.len() < n {
        let p = rng.gen_range(0..height * width);
        if !taken[p] {
            taken[p] = true;
            seeds.push((p / width, p % width));
        }
    }
    seeds
}

/// Random periodic Voronoi tessellation with one order parameter per cell.
pub fn voronoi_init(params: &GrainParams) -> Result<OrderParameterSet> {
    let (h, w, n) = (params.height, params.width, params.n_grains);
    if n == 0 || n > h * w {
        return Err(Error::Precondition(format!(
            "need 1 <= n_grains <= H*W, got {n} on {h}x{w}"
        )));
    }
    let seeds = draw_seeds(h, w, n, params.seed);
    OrderParameterSet::from_labels(h, w, n, &voronoi_labels(h, w, &seeds))
}

/// Runs a full simulation, calling `observer` with each recorded state.
pub fn simulate_grain_growth_observed(
    params: &GrainParams,
    mut observer: impl FnMut(usize, &OrderParameterSet),
) -> Result<Trajectory> {
    params.validate()?;
    let mut set = voronoi_init(params)?;
    let mut frames = Vec::with_capacity(params.frames_to_record);
    frames.push(render_frame(&set));
    observer(0, &set);
    for k in 1..params.frames_to_record {
        for _ in 0..params.record_stride {
            set.step(params)?;
        }
        frames.push(render_frame(&set));
        observer(k, &set);
    }
    log::debug!(
        "grain growth seed {}: {} steps, {} live grains",
        params.seed,
        params.total_steps(),
        set.live_grains()
    );
    Ok(Trajectory {
        frames,
        frame_interval: params.dt * params.record_stride as f64,
        params: SimParams::GrainGrowth(params.clone()),
    })
}

pub fn simulate_grain_growth(params: &GrainParams) -> Result<Trajectory> {
    simulate_grain_growth_observed(params, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn small_params(h: usize, w: usize, n: usize) -> GrainParams {
        GrainParams {
            n_grains: n,
            height: h,
            width: w,
            frames_to_record: 3,
            record_stride: 5,
            ..GrainParams::default()
        }
    }

    fn random_set(h: usize, w: usize, n: usize, seed: u64) -> OrderParameterSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fields = (0..n)
            .map(|_| Field2D::from_fn(h, w, |_, _| rng.gen_range(0.0..1.0)))
            .collect();
        OrderParameterSet::from_fields(fields).unwrap()
    }

    #[test]
    fn energy_density_values() {
        let mut eta = vec![0.0; 5];
        eta[0] = 1.0;
        assert!(local_energy_density(&eta, 1.0, 1.5).abs() < 1e-15);
        assert_eq!(local_energy_density(&[0.0; 5], 1.0, 1.5), 0.25);
        eta[1] = 1.0;
        assert!((local_energy_density(&eta, 1.0, 1.5) - 2.75).abs() < 1e-15);
    }

    #[test]
    fn single_grain_fills_domain() {
        let p = small_params(8, 8, 1);
        let set = voronoi_init(&p).unwrap();
        assert!(set.eta(0).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn two_seed_tessellation_splits_by_symmetry() {
        let (h, w) = (16, 16);
        let labels = voronoi_labels(h, w, &[(0, 0), (h / 2, w / 2)]);
        let wrap = |a: usize, b: usize, n: usize| a.abs_diff(b).min(n - a.abs_diff(b));
        let ties = (0..h * w)
            .filter(|&p| {
                let (r, c) = (p / w, p % w);
                let d0 = wrap(r, 0, h).pow(2) + wrap(c, 0, w).pow(2);
                let d1 = wrap(r, h / 2, h).pow(2) + wrap(c, w / 2, w).pow(2);
                d0 == d1
            })
            .count();
        let a0 = labels.iter().filter(|&&l| l == 0).count();
        let a1 = labels.len() - a0;
        // strict-nearest pixels split evenly; every tie goes to grain 0
        assert_eq!(a0 - ties, a1);
        assert_eq!((a0 - ties) * 2 + ties, h * w);
    }

    #[test]
    fn minimum_and_zero_states_have_zero_derivative() {
        let p = small_params(6, 6, 3);
        let mut fields = vec![Field2D::zeros(6, 6); 3];
        fields[1] = Field2D::constant(6, 6, 1.0);
        let set = OrderParameterSet::from_fields(fields).unwrap();
        for i in 0..3 {
            assert!(functional_derivative(&set, i, &p)
                .values()
                .iter()
                .all(|&v| v == 0.0));
        }
        let mut stepped = set.clone();
        stepped.step(&p).unwrap();
        for i in 0..3 {
            assert_eq!(stepped.eta(i), set.eta(i));
        }
        assert_eq!(total_free_energy(&set, &p), 0.0);
    }

    #[test]
    fn all_zero_energy_is_constant_term() {
        let p = GrainParams {
            dx: 0.5,
            dy: 2.0,
            ..small_params(5, 7, 4)
        };
        let set = OrderParameterSet::from_fields(vec![Field2D::zeros(5, 7); 4]).unwrap();
        assert!((total_free_energy(&set, &p) - 0.25 * 35.0).abs() < 1e-12);
    }

    #[test]
    fn render_values() {
        let fields = vec![
            Field2D::from_values(1, 3, vec![1.0, 0.5, 0.0]).unwrap(),
            Field2D::from_values(1, 3, vec![0.0, 0.5, 0.0]).unwrap(),
        ];
        let set = OrderParameterSet::from_fields(fields).unwrap();
        assert_eq!(render_frame(&set).values(), &[1.0, 0.25, 0.0]);
    }

    #[test]
    fn naive_energy_oracle() {
        let p = GrainParams {
            dx: 0.7,
            dy: 1.3,
            kappa: 0.8,
            ..small_params(6, 5, 4)
        };
        let set = random_set(6, 5, 4, 9);
        let (h, w) = (6, 5);
        let mut naive = 0.0;
        for r in 0..h {
            for c in 0..w {
                let etas: Vec<f64> = (0..4).map(|i| set.eta(i)[r * w + c]).collect();
                naive += local_energy_density(&etas, p.m, p.cross_coupling);
                for i in 0..4 {
                    let e = set.eta(i);
                    let gx = (e[r * w + (c + 1) % w] - e[r * w + c]) / p.dx;
                    let gy = (e[((r + 1) % h) * w + c] - e[r * w + c]) / p.dy;
                    naive += 0.5 * p.kappa * (gx * gx + gy * gy);
                }
            }
        }
        naive *= p.dx * p.dy;
        let fast = total_free_energy(&set, &p);
        assert!(((fast - naive) / naive).abs() < 1e-10, "{fast} vs {naive}");
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for gamma in [0.75, 1.5] {
            let p = GrainParams {
                cross_coupling: gamma,
                ..small_params(8, 8, 3)
            };
            let set = random_set(8, 8, 3, 4);
            let area = p.dx * p.dy;
            for i in 0..3 {
                let analytic = functional_derivative(&set, i, &p);
                for q in [0, 9, 27, 63] {
                    let h = 1e-5;
                    let mut plus = set.clone();
                    plus.etas[i][q] += h;
                    let mut minus = set.clone();
                    minus.etas[i][q] -= h;
                    let fd = (total_free_energy(&plus, &p) - total_free_energy(&minus, &p))
                        / (2.0 * h)
                        / area;
                    let a = analytic.values()[q];
                    assert!((fd - a).abs() <= 1e-5 * a.abs().max(1.0), "{fd} vs {a}");
                }
            }
        }
    }

    #[test]
    fn verbatim_coupling_fails_stability_guard_at_default_dt() {
        let p = GrainParams {
            cross_coupling: 1.5,
            ..GrainParams::default()
        };
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
        let p = GrainParams {
            cross_coupling: 1.5,
            dt: 0.1,
            ..GrainParams::default()
        };
        p.validate().unwrap();
        GrainParams::default().validate().unwrap();
    }

    #[test]
    fn diffusion_guard() {
        let p = GrainParams {
            dt: 0.26,
            ..GrainParams::default()
        };
        assert!(p.validate().is_err());
        let p = GrainParams {
            n_grains: 1,
            ..GrainParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn excursion_guard_aborts() {
        let p = small_params(4, 4, 2);
        let fields = vec![Field2D::constant(4, 4, 1.5), Field2D::zeros(4, 4)];
        let mut set = OrderParameterSet::from_fields(fields).unwrap();
        let err = set.step(&p).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)), "{err}");
    }

    #[test]
    fn single_frame_run_is_the_tessellation() {
        let p = GrainParams {
            frames_to_record: 1,
            ..small_params(16, 16, 5)
        };
        let traj = simulate_grain_growth(&p).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.frames[0], render_frame(&voronoi_init(&p).unwrap()));
    }

    #[test]
    fn rescan_drops_vanished_grain() {
        let p = small_params(6, 6, 2);
        let mut fields = vec![Field2D::constant(6, 6, 1.0), Field2D::zeros(6, 6)];
        fields[1].set(2, 2, 1e-6);
        let mut set = OrderParameterSet::from_fields(fields).unwrap();
        set.rescan(p.activity_threshold);
        assert_eq!(set.live_grains(), 1);
        assert!(set.eta(1).iter().all(|&v| v == 0.0));
    }
}
