//! Cahn–Hilliard spinodal decomposition with degenerate mobility `M c (1 - c)`.
//!
//! The field is stored as the deviation `u = c - 1/2`. Every operation on it is
//! odd in `u`, so a run started from `1/2 - ξ` is the exact mirror `c ↔ 1 - c`
//! of a run started from `1/2 + ξ`.
//!
//! Time stepping is explicit on a conservative finite-volume stencil with
//! zero-flux boundary faces, so the total mass only changes by round-off.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::trajectory::{SimParams, Trajectory};

/// Log-safety margin: `c` is kept inside `[δ, 1 - δ]`.
pub const LOG_CLAMP: f64 = 1e-6;
/// Values with `|c - 1/2|` beyond `1/2 + INSTABILITY_BAND` abort a run.
pub const INSTABILITY_BAND: f64 = 0.05;
const STABILITY_SAFETY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinodalParams {
    /// Regular-solution interaction parameter `ω`.
    pub omega: f64,
    /// Gradient energy coefficient `ε`.
    pub epsilon: f64,
    pub mobility: f64,
    /// Thermal energy scale `RT`.
    pub rt: f64,
    /// Mean composition.
    pub c0: f64,
    pub noise_amp: f64,
    pub dx: f64,
    pub dy: f64,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
    /// Dimensionless time between recorded frames.
    pub frame_interval: f64,
    pub frames_to_record: usize,
    /// Upper bound on the explicit substep.
    pub dt_max: f64,
}

impl Default for SpinodalParams {
    fn default() -> Self {
        SpinodalParams {
            omega: 0.27397,
            epsilon: 0.1682,
            mobility: 1.0,
            rt: 0.1,
            c0: 0.5,
            noise_amp: 0.05,
            dx: 1.0,
            dy: 1.0,
            height: 64,
            width: 64,
            seed: 0,
            frame_interval: 1500.0,
            frames_to_record: 100,
            dt_max: 0.5,
        }
    }
}

impl SpinodalParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("mobility", self.mobility),
            ("rt", self.rt),
            ("dx", self.dx),
            ("dy", self.dy),
            ("frame_interval", self.frame_interval),
            ("dt_max", self.dt_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.omega > 2.0 * self.rt) {
            return bad(format!(
                "quench condition violated: omega = {} must exceed 2 RT = {}",
                self.omega,
                2.0 * self.rt
            ));
        }
        if !(self.c0 > 0.0 && self.c0 < 1.0) {
            return bad(format!("c0 must lie in (0, 1), got {}", self.c0));
        }
        if !(self.noise_amp >= 0.0)
            || self.c0 - self.noise_amp <= LOG_CLAMP
            || self.c0 + self.noise_amp >= 1.0 - LOG_CLAMP
        {
            return bad(format!(
                "noise_amp {} pushes c0 = {} outside (0, 1)",
                self.noise_amp, self.c0
            ));
        }
        if self.height == 0 || self.width == 0 {
            return bad("grid must be non-empty".into());
        }
        if self.frames_to_record == 0 {
            return bad("frames_to_record must be >= 1".into());
        }
        Ok(())
    }

    /// `safety · h⁴ / (16 M_eff ε)` with `M_eff = M/4`, the largest value of `M c(1-c)`.
    pub fn stable_dt(&self) -> f64 {
        let h = self.dx.min(self.dy);
        let m_eff = self.mobility / 4.0;
        STABILITY_SAFETY * h.powi(4) / (16.0 * m_eff * self.epsilon)
    }

    /// Substep count and size used to advance one frame interval.
    pub fn substeps(&self) -> (usize, f64) {
        let dt = self.dt_max.min(self.stable_dt());
        let n = (self.frame_interval / dt).ceil().max(1.0) as usize;
        (n, self.frame_interval / n as f64)
    }
}

/// Concentration on the grid, held as `u = c - 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationField {
    height: usize,
    width: usize,
    u: Vec<f64>,
    clamp_events: u64,
}

impl ConcentrationField {
    pub fn from_deviation(height: usize, width: usize, u: Vec<f64>) -> Result<Self> {
        if u.len() != height * width {
            return Err(Error::Shape(format!("{} values for {height}x{width}", u.len())));
        }
        let mut field = ConcentrationField {
            height,
            width,
            u,
            clamp_events: 0,
        };
        field.clamp();
        Ok(field)
    }

    pub fn from_concentration(c: &Field2D) -> Result<Self> {
        let u = c.values().iter().map(|&v| v - 0.5).collect();
        Self::from_deviation(c.height(), c.width(), u)
    }

    pub fn uniform(height: usize, width: usize, c: f64) -> Self {
        Self::from_deviation(height, width, vec![c - 0.5; height * width]).expect("size")
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn deviation(&self) -> &[f64] {
        &self.u
    }

    pub fn concentration(&self) -> Field2D {
        Field2D::from_values(
            self.height,
            self.width,
            self.u.iter().map(|&u| 0.5 + u).collect(),
        )
        .expect("size")
    }

    /// Total number of values pulled back into the log-safe range so far.
    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }

    pub fn mass(&self, params: &SpinodalParams) -> f64 {
        self.u.iter().map(|&u| 0.5 + u).sum::<f64>() * params.dx * params.dy
    }

    fn clamp(&mut self) {
        let lim = 0.5 - LOG_CLAMP;
        for u in &mut self.u {
            if *u > lim {
                *u = lim;
                self.clamp_events += 1;
            } else if *u < -lim {
                *u = -lim;
                self.clamp_events += 1;
            }
        }
    }
}

/// `c0` plus uniform noise, shifted so that the spatial mean is exactly `c0`.
pub fn init_concentration(params: &SpinodalParams) -> ConcentrationField {
    let n = params.height * params.width;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let base = params.c0 - 0.5;
    let mut u: Vec<f64> = (0..n)
        .map(|_| {
            if params.noise_amp > 0.0 {
                base + rng.gen_range(-params.noise_amp..=params.noise_amp)
            } else {
                base
            }
        })
        .collect();
    let mean = u.iter().sum::<f64>() / n as f64;
    let shift = base - mean;
    u.iter_mut().for_each(|v| *v += shift);
    ConcentrationField::from_deviation(params.height, params.width, u).expect("size")
}

/// 5-point Laplacian with mirrored ghost cells (zero normal gradient).
fn neumann_laplacian(u: &[f64], h: usize, w: usize, r: usize, c: usize, idx2: f64, idy2: f64) -> f64 {
    let centre = u[r * w + c];
    let left = if c > 0 { u[r * w + c - 1] } else { centre };
    let right = if c + 1 < w { u[r * w + c + 1] } else { centre };
    let up = if r > 0 { u[(r - 1) * w + c] } else { centre };
    let down = if r + 1 < h { u[(r + 1) * w + c] } else { centre };
    (left + right - 2.0 * centre) * idx2 + (up + down - 2.0 * centre) * idy2
}

fn potential_into(field: &ConcentrationField, params: &SpinodalParams, mu: &mut [f64]) {
    let (h, w) = field.shape();
    let idx2 = 1.0 / (params.dx * params.dx);
    let idy2 = 1.0 / (params.dy * params.dy);
    let u = &field.u;
    for r in 0..h {
        for c in 0..w {
            let v = u[r * w + c];
            let chem = params.rt * ((0.5 + v).ln() - (0.5 - v).ln()) - 2.0 * params.omega * v;
            mu[r * w + c] = chem - params.epsilon * neumann_laplacian(u, h, w, r, c, idx2, idy2);
        }
    }
}

/// `μ = RT[ln c − ln(1−c)] + ω(1−2c) − ε∇²c`.
pub fn chemical_potential(field: &ConcentrationField, params: &SpinodalParams) -> Field2D {
    let (h, w) = field.shape();
    let mut mu = vec![0.0; h * w];
    potential_into(field, params, &mut mu);
    Field2D::from_values(h, w, mu).expect("size")
}

/// Discrete `F = Σ [f_chem(c) + ½ ε |∇c|²] dx dy`, gradients over interior faces.
pub fn discrete_free_energy(field: &ConcentrationField, params: &SpinodalParams) -> f64 {
    let (h, w) = field.shape();
    let u = &field.u;
    let mut bulk = 0.0;
    for &v in u {
        let (c, mc) = (0.5 + v, 0.5 - v);
        bulk += params.rt * (c * c.ln() + mc * mc.ln()) + params.omega * (0.25 - v * v);
    }
    let mut grad = 0.0;
    for r in 0..h {
        for c in 0..w {
            let v = u[r * w + c];
            if c + 1 < w {
                let g = (u[r * w + c + 1] - v) / params.dx;
                grad += g * g;
            }
            if r + 1 < h {
                let g = (u[(r + 1) * w + c] - v) / params.dy;
                grad += g * g;
            }
        }
    }
    (bulk + 0.5 * params.epsilon * grad) * params.dx * params.dy
}

#[inline]
fn face_mobility(a: f64, b: f64, m: f64) -> f64 {
    let v = 0.5 * (a + b);
    m * (0.25 - v * v)
}

/// Reusable buffers for [`ch_step_with`].
#[derive(Debug, Default)]
pub struct StepScratch {
    mu: Vec<f64>,
    next: Vec<f64>,
}

/// One conservative explicit step of size `dt`.
pub fn ch_step(field: &mut ConcentrationField, params: &SpinodalParams, dt: f64) -> Result<()> {
    ch_step_with(field, params, dt, &mut StepScratch::default())
}

pub fn ch_step_with(
    field: &mut ConcentrationField,
    params: &SpinodalParams,
    dt: f64,
    scratch: &mut StepScratch,
) -> Result<()> {
    let (h, w) = field.shape();
    let n = h * w;
    scratch.mu.resize(n, 0.0);
    scratch.next.resize(n, 0.0);
    potential_into(field, params, &mut scratch.mu);
    let mu = &scratch.mu;
    let u = &field.u;
    let m = params.mobility;
    let (idx2, idy2) = (1.0 / (params.dx * params.dx), 1.0 / (params.dy * params.dy));
    let limit = 0.5 + INSTABILITY_BAND;
    let mut bad = None;
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            let (up, mp) = (u[p], mu[p]);
            // Outward face fluxes J·n; zero on boundary faces.
            let mut div = 0.0;
            if c + 1 < w {
                div -= face_mobility(up, u[p + 1], m) * (mu[p + 1] - mp) * idx2;
            }
            if c > 0 {
                div -= face_mobility(up, u[p - 1], m) * (mu[p - 1] - mp) * idx2;
            }
            if r + 1 < h {
                div -= face_mobility(up, u[p + w], m) * (mu[p + w] - mp) * idy2;
            }
            if r > 0 {
                div -= face_mobility(up, u[p - w], m) * (mu[p - w] - mp) * idy2;
            }
            let v = up - dt * div;
            if bad.is_none() && !(v.abs() <= limit) {
                bad = Some((r, c, v));
            }
            scratch.next[p] = v;
        }
    }
    if let Some((r, c, v)) = bad {
        return Err(Error::Numerical(format!(
            "concentration {} at ({r}, {c}) left the stable band; dt = {dt} is too large",
            0.5 + v
        )));
    }
    std::mem::swap(&mut field.u, &mut scratch.next);
    field.clamp();
    Ok(())
}

/// Diagnostics recorded alongside each frame of a spinodal run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDiagnostics {
    pub mass: f64,
    pub free_energy: f64,
    pub clamp_events: u64,
}

pub fn simulate_spinodal_observed(
    params: &SpinodalParams,
    mut observer: impl FnMut(usize, &ConcentrationField, FrameDiagnostics),
) -> Result<Trajectory> {
    params.validate()?;
    let mut field = init_concentration(params);
    simulate_from(params, &mut field, &mut observer)
}

/// Runs from a caller-supplied initial field (used for symmetry checks).
pub fn simulate_spinodal_from(
    params: &SpinodalParams,
    initial: ConcentrationField,
    mut observer: impl FnMut(usize, &ConcentrationField, FrameDiagnostics),
) -> Result<Trajectory> {
    params.validate()?;
    if initial.shape() != (params.height, params.width) {
        return Err(Error::Shape("initial field does not match the grid".into()));
    }
    let mut field = initial;
    simulate_from(params, &mut field, &mut observer)
}

fn simulate_from(
    params: &SpinodalParams,
    field: &mut ConcentrationField,
    observer: &mut impl FnMut(usize, &ConcentrationField, FrameDiagnostics),
) -> Result<Trajectory> {
    let (substeps, dt) = params.substeps();
    let diag = |f: &ConcentrationField| FrameDiagnostics {
        mass: f.mass(params),
        free_energy: discrete_free_energy(f, params),
        clamp_events: f.clamp_events(),
    };
    let mut frames = Vec::with_capacity(params.frames_to_record);
    let mut scratch = StepScratch::default();
    frames.push(field.concentration());
    observer(0, field, diag(field));
    for k in 1..params.frames_to_record {
        for _ in 0..substeps {
            ch_step_with(field, params, dt, &mut scratch)?;
        }
        frames.push(field.concentration());
        observer(k, field, diag(field));
    }
    if field.clamp_events() > 0 {
        log::warn!(
            "spinodal seed {}: {} clamp events; dt may be mis-tuned",
            params.seed,
            field.clamp_events()
        );
    }
    Ok(Trajectory {
        frames,
        frame_interval: params.frame_interval,
        params: SimParams::Spinodal(params.clone()),
    })
}

pub fn simulate_spinodal(params: &SpinodalParams) -> Result<Trajectory> {
    simulate_spinodal_observed(params, |_, _, _| {})
}
