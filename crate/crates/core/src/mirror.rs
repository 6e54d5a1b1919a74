//! Reflectance of an atomic mirror.
//!
//! Each atom scatters a photon of detuning Δ with `r = −1/(1 − iΔ)` and
//! `t = 1 + r`. Atoms are combined with the Redheffer star product of their
//! scattering matrices, all phases referred to a common origin, so that a
//! perfectly reflecting atom (Δ = 0, t = 0) needs no special arithmetic apart
//! from short-circuiting the multiple-reflection fraction. Transfer matrices
//! are avoided because their entries diverge as 1/Δ on resonance.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{cabs, cis, cos, ln, pairwise_sum, sqrt};
use crate::{Error, Result, C64};

/// Default transition frequency (in γ) used to place Bragg chains.
pub const DEFAULT_OMEGA_A: f64 = 1.0e6;

/// Broadened Lorentzian `1/(1 + (Δ/N)²)`.
pub fn lorentzian_reflectance(delta: f64, n_atoms: u32) -> f64 {
    let x = delta / n_atoms as f64;
    1.0 / (1.0 + x * x)
}

/// Atoms on the waveguide at fixed positions (units of v_g/γ).
#[derive(Debug, Clone, PartialEq)]
pub struct AtomChain {
    positions: Vec<f64>,
    /// Transition frequency ω_A in units of γ; the carrier is ω_A + Δ.
    pub omega_a: f64,
}

impl AtomChain {
    pub fn new(positions: Vec<f64>, omega_a: f64) -> Result<Self> {
        if !(omega_a.is_finite() && omega_a > 0.0) {
            return Err(Error::config("omega_a must be positive"));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("atom positions must be finite"));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("atom positions must be strictly increasing"));
        }
        Ok(AtomChain { positions, omega_a })
    }

    /// `n` atoms at spacing `d_m` with `ω_A d_m = lπ`, the first at `x0`.
    pub fn bragg(n: u32, l: u32, omega_a: f64, x0: f64) -> Result<Self> {
        if l == 0 {
            return Err(Error::config("Bragg order must be at least 1"));
        }
        let dm = bragg_spacing(l, omega_a);
        AtomChain::new((0..n).map(|j| x0 + j as f64 * dm).collect(), omega_a)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Same chain rigidly moved by `dx`.
    pub fn translated(&self, dx: f64) -> Result<Self> {
        AtomChain::new(
            self.positions.iter().map(|x| x + dx).collect(),
            self.omega_a,
        )
    }
}

/// Spacing `lπ/ω_A`.
pub fn bragg_spacing(l: u32, omega_a: f64) -> f64 {
    l as f64 * core::f64::consts::PI / omega_a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterResult {
    /// Reflection for a photon incident from the left, phase referred to x = 0.
    pub r: C64,
    pub t: C64,
    pub reflectance: f64,
    pub transmittance: f64,
}

#[derive(Debug, Clone, Copy)]
struct SMatrix {
    r_left: C64,
    r_right: C64,
    t: C64,
}

impl SMatrix {
    const IDENTITY: SMatrix = SMatrix {
        r_left: C64::new(0.0, 0.0),
        r_right: C64::new(0.0, 0.0),
        t: C64::new(1.0, 0.0),
    };

    fn atom(delta: f64, k: f64, x: f64) -> SMatrix {
        let r = -C64::new(1.0, -delta).inv();
        let t = r + 1.0;
        let phase = cis(2.0 * reduce_phase(k, x));
        SMatrix {
            r_left: r * phase,
            r_right: r * phase.conj(),
            t,
        }
    }

    /// `self` on the left of `b`.
    fn star(self, b: SMatrix) -> SMatrix {
        if self.t == C64::new(0.0, 0.0) {
            return SMatrix {
                r_left: self.r_left,
                r_right: b.r_right,
                t: self.t,
            };
        }
        let d = C64::new(1.0, 0.0) - self.r_right * b.r_left;
        let inv = d.inv();
        SMatrix {
            r_left: self.r_left + self.t * self.t * b.r_left * inv,
            r_right: b.r_right + b.t * b.t * self.r_right * inv,
            t: self.t * b.t * inv,
        }
    }

    fn max_norm(&self) -> f64 {
        cabs(self.r_left).max(cabs(self.r_right)).max(cabs(self.t))
    }
}

/// `k·x` reduced modulo 2π with the integer part of `k` split off, so that
/// large carrier frequencies do not cost phase accuracy.
fn reduce_phase(k: f64, x: f64) -> f64 {
    let kx = k * x;
    let two_pi = 2.0 * core::f64::consts::PI;
    kx - two_pi * crate::math::floor(kx / two_pi)
}

/// Numerical safeguards for [`chain_scattering_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterOptions {
    /// Largest admissible scattering-matrix entry; a lossless chain never exceeds 1.
    pub norm_bound: f64,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        ScatterOptions {
            norm_bound: 1.0 + 1e-6,
        }
    }
}

pub fn chain_scattering(chain: &AtomChain, delta: f64) -> Result<ScatterResult> {
    chain_scattering_with(chain, delta, ScatterOptions::default())
}

pub fn chain_scattering_with(
    chain: &AtomChain,
    delta: f64,
    opts: ScatterOptions,
) -> Result<ScatterResult> {
    if !delta.is_finite() {
        return Err(Error::config("detuning must be finite"));
    }
    let k = chain.omega_a + delta;
    let mut s = SMatrix::IDENTITY;
    for (j, &x) in chain.positions.iter().enumerate() {
        s = s.star(SMatrix::atom(delta, k, x));
        let norm = s.max_norm();
        if !(norm <= opts.norm_bound) {
            return Err(Error::NumericalRange(alloc::format!(
                "scattering matrix entry {norm:e} after atom {j} at delta = {delta}"
            )));
        }
    }
    Ok(ScatterResult {
        r: s.r_left,
        t: s.t,
        reflectance: s.r_left.norm_sqr(),
        transmittance: s.t.norm_sqr(),
    })
}

/// Smallest Δ > 0 where the reflectance drops to half its resonant value,
/// bracketed in (0, `hi`].
pub fn half_max_detuning(chain: &AtomChain, hi: f64) -> Result<f64> {
    let r0 = chain_scattering(chain, 0.0)?.reflectance;
    let target = 0.5 * r0;
    let f = |d: f64| chain_scattering(chain, d).map(|s| s.reflectance - target);
    if f(hi)? > 0.0 {
        return Err(Error::validity(
            "reflectance does not fall to half maximum inside the bracket",
        ));
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Positional disorder of a Bragg mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderSpec {
    pub n_atoms: u32,
    /// Mean spacing d_m.
    pub spacing: f64,
    /// RMS displacement as a fraction of `spacing`.
    pub sigma: f64,
    pub omega_a: f64,
    pub seed: u64,
}

/// Ensemble statistics per detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderAverage {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: usize,
}

/// Standard normal by Box–Muller with libm, so draws are identical whatever
/// float backend the rest of the build selects; truncated to ±4 by rejection.
fn truncated_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        // 1 − U lies in (0, 1], keeping the logarithm finite.
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        let g = sqrt(-2.0 * ln(u1)) * cos(2.0 * core::f64::consts::PI * u2);
        if g.abs() <= 4.0 {
            return g;
        }
    }
}

impl DisorderSpec {
    /// Positions of ensemble member `sample`; its random stream depends only
    /// on `(seed, sample)`, so members can be drawn in any order.
    pub fn sample_chain(&self, sample: usize) -> Result<AtomChain> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("sigma must be non-negative"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample as u64);
        let positions = (0..self.n_atoms)
            .map(|j| {
                let jitter = if self.sigma > 0.0 {
                    self.sigma * truncated_normal(&mut rng)
                } else {
                    0.0
                };
                (j as f64 + jitter) * self.spacing
            })
            .collect();
        AtomChain::new(positions, self.omega_a)
    }

    /// Reflectance of ensemble member `sample` on the detuning grid.
    pub fn sample_reflectance(&self, sample: usize, delta_grid: &[f64]) -> Result<Vec<f64>> {
        let wrap = |e| Error::Sample {
            sample,
            source: alloc::boxed::Box::new(e),
        };
        let chain = self.sample_chain(sample).map_err(wrap)?;
        delta_grid
            .iter()
            .map(|&d| {
                chain_scattering(&chain, d)
                    .map(|s| s.reflectance)
                    .map_err(wrap)
            })
            .collect()
    }
}

/// Reduces per-sample reflectance rows (indexed by sample) to mean and
/// standard error with pairwise sums, independent of evaluation order.
pub fn ensemble_statistics(rows: &[Vec<f64>]) -> DisorderAverage {
    let samples = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    let mut mean = Vec::with_capacity(width);
    let mut stderr = Vec::with_capacity(width);
    let mut column = Vec::with_capacity(samples);
    for i in 0..width {
        column.clear();
        column.extend(rows.iter().map(|r| r[i]));
        let m = pairwise_sum(&column) / samples as f64;
        let dev: Vec<f64> = column.iter().map(|x| (x - m) * (x - m)).collect();
        let var = if samples > 1 {
            pairwise_sum(&dev) / (samples - 1) as f64
        } else {
            0.0
        };
        mean.push(m);
        stderr.push(sqrt(var / samples as f64));
    }
    DisorderAverage {
        mean,
        stderr,
        samples,
    }
}

/// Intensity-averaged reflectance over `samples` disorder realizations.
pub fn disorder_averaged_reflectance(
    spec: &DisorderSpec,
    delta_grid: &[f64],
    samples: usize,
) -> Result<DisorderAverage> {
    if samples == 0 {
        return Err(Error::config("at least one disorder sample is required"));
    }
    let rows = (0..samples)
        .map(|s| spec.sample_reflectance(s, delta_grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(ensemble_statistics(&rows))
}
