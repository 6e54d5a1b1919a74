//! Residue sums over the poles of the Laplace transform of `c0`, and the
//! closed-form approximations built from the two main poles.
//!
//! In the macroscopic limit (N → ∞) the poles are `s = iy` with
//! `y = cot((y − Δ)τ/2)`; each branch of the cotangent holds exactly one.
//! For finite N only the two main poles are extracted, from a cubic obtained
//! by expanding the delay factor to second order.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math::{cabs, ccos, cexp, cis, cis_m1, cos, csin, csqrt, exp, sin, sqrt, tan};
use crate::poly::Poly;
use crate::roots::{bisect_newton, polynomial_roots};
use crate::trajectory::{Method, Trajectory, TrajectoryMeta};
use crate::{CavityParams, Error, Result, C64};

/// Pole count per sign used by [`macroscopic_c0`] unless told otherwise.
pub const DEFAULT_POLE_COUNT: usize = 64;

/// Poles `s_j` with residue weights, ordered by `|Im s_j|`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    pub poles: Vec<C64>,
    pub weights: Vec<C64>,
    /// Signed branch label j (±1 are the main poles).
    pub labels: Vec<i64>,
    /// Cotangent argument `(y_j − Δ)τ/2` reduced by a multiple of π, kept
    /// separately because forming it from `y_j` loses digits on far branches.
    pub reduced: Vec<f64>,
    /// Upper bound on the summed magnitude of all non-main contributions.
    pub tail_bound: f64,
}

impl PoleSet {
    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// `Σ_j w_j e^{s_j t}`.
    pub fn eval(&self, t: f64) -> C64 {
        self.poles
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * cexp(s * t))
            .sum()
    }

    /// Contribution of the main pair alone.
    pub fn eval_main(&self, t: f64) -> C64 {
        self.iter_labeled()
            .filter(|(j, _, _)| j.abs() == 1)
            .map(|(_, s, w)| w * cexp(s * t))
            .sum()
    }

    /// `Σ_{|j|≥2} |w_j|`, the largest the non-main poles can contribute.
    pub fn non_main_weight(&self) -> f64 {
        self.iter_labeled()
            .filter(|(j, _, _)| j.abs() >= 2)
            .map(|(_, _, w)| cabs(w))
            .sum()
    }

    /// `|y − cot r| / |y|` for pole `i` with reduced argument `r`.
    pub fn residual(&self, i: usize) -> f64 {
        let y = self.poles[i].im;
        (y - 1.0 / tan(self.reduced[i])).abs() / y.abs()
    }

    pub fn pole(&self, label: i64) -> Option<C64> {
        self.iter_labeled()
            .find(|(j, _, _)| *j == label)
            .map(|(_, s, _)| s)
    }

    fn iter_labeled(&self) -> impl Iterator<Item = (i64, C64, C64)> + '_ {
        self.labels
            .iter()
            .zip(&self.poles)
            .zip(&self.weights)
            .map(|((j, s), w)| (*j, *s, *w))
    }
}

/// The two poles nearest the origin for finite N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainPoles {
    pub s_plus: C64,
    pub s_minus: C64,
}

impl MainPoles {
    /// Half the imaginary splitting: the (generalised) Rabi frequency.
    pub fn rabi_frequency(&self) -> f64 {
        0.5 * (self.s_plus.im - self.s_minus.im)
    }
}

/// `τ/6`: the bound on all non-main residues at zero detuning.
pub fn pole_tail_bound(tau: f64) -> f64 {
    tau / 6.0
}

/// Same bound with the branches displaced by `|φ| = |Δ|τ`; reduces to τ/6 at φ = 0.
fn detuned_tail_bound(tau: f64, phi: f64) -> f64 {
    let x = phi.abs() / (2.0 * PI);
    if x == 0.0 {
        return pole_tail_bound(tau);
    }
    // Σ_{k≥1} 1/(k−x)² summed to K with the integral bound for the rest.
    const K: usize = 256;
    let head: f64 = (1..=K)
        .map(|k| 1.0 / ((k as f64 - x) * (k as f64 - x)))
        .sum();
    tau / (PI * PI) * (head + 1.0 / (K as f64 - x))
}

/// Root on the cotangent branch `m ≥ 0`: `y = Δ + 2(mπ + v)/τ` with `v ∈ (0, π)`,
/// on which `y − cot v` increases monotonically from −∞ to +∞. Returns `(y, v)`.
fn branch_root(tau: f64, detuning: f64, m: i64, label: i64) -> Result<(f64, f64)> {
    let base = detuning + 2.0 * PI * m as f64 / tau;
    let h = |v: f64| base + 2.0 * v / tau - cos(v) / sin(v);
    let dh = |v: f64| {
        let s = sin(v);
        2.0 / tau + 1.0 / (s * s)
    };
    let (lo, hi) = (f64::MIN_POSITIVE, PI * (1.0 - f64::EPSILON));
    let mut v =
        bisect_newton(lo, hi, 1e-6, 1e-14, h, dh).ok_or(Error::RootFinder { branch: label })?;
    // The roots crowd towards v = 0 on distant branches, where an absolute
    // bracket is coarse; finish with relative Newton steps.
    for _ in 0..8 {
        let step = h(v) / dh(v);
        let next = v - step;
        if !(next > 0.0 && next < PI) || step == 0.0 {
            break;
        }
        v = next;
        if step.abs() <= 1e-15 * v {
            break;
        }
    }
    let y = base + 2.0 * v / tau;
    if !y.is_finite() {
        return Err(Error::RootFinder { branch: label });
    }
    Ok((y, v))
}

/// Root for a signed label: j > 0 lives on branch j − 1; j < 0 is the mirror
/// image of branch |j| − 1 at detuning −Δ, so both signs are solved where the
/// root sits near the well-conditioned end of its branch.
fn labeled_root(tau: f64, detuning: f64, label: i64) -> Result<(f64, f64)> {
    if label > 0 {
        branch_root(tau, detuning, label - 1, label)
    } else {
        let (y, v) = branch_root(tau, -detuning, -label - 1, label)?;
        Ok((-y, -v))
    }
}

/// Residue prefactor of the pole `iy` in the macroscopic limit.
fn macroscopic_weight(tau: f64, y: f64) -> f64 {
    1.0 / (1.0 + 0.5 * tau + 0.5 * tau * y * y)
}

/// The `2·count` poles of the N → ∞ transform nearest the origin.
pub fn macroscopic_poles(tau: f64, detuning: f64, count: usize) -> Result<PoleSet> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::config("tau must be positive and finite"));
    }
    if !detuning.is_finite() || (detuning * tau).abs() >= PI {
        return Err(Error::config("detuning must satisfy |detuning * tau| < pi"));
    }
    if count < 2 {
        return Err(Error::config("pole count must be at least 2"));
    }
    let mut found = Vec::with_capacity(2 * count);
    for j in 1..=count as i64 {
        for label in [j, -j] {
            let (y, r) = labeled_root(tau, detuning, label)?;
            found.push((label, y, r));
        }
    }
    found.sort_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)));
    Ok(PoleSet {
        poles: found.iter().map(|&(_, y, _)| C64::new(0.0, y)).collect(),
        weights: found
            .iter()
            .map(|&(_, y, _)| C64::new(macroscopic_weight(tau, y), 0.0))
            .collect(),
        labels: found.iter().map(|&(j, _, _)| j).collect(),
        reduced: found.iter().map(|&(_, _, r)| r).collect(),
        tail_bound: detuned_tail_bound(tau, detuning * tau),
    })
}

fn regime_warnings(params: &CavityParams, need_macroscopic: bool) -> Vec<String> {
    let mut w = Vec::new();
    if params.delay_tau > 0.1 {
        w.push(format!(
            "tau = {} is not small; the closed form assumes tau << 1",
            params.delay_tau
        ));
    }
    if params.n_atoms < 10 {
        w.push(format!(
            "N = {} is not large; the closed form assumes N >> 1",
            params.n_atoms
        ));
    }
    if need_macroscopic && params.n() * params.delay_tau < 10.0 {
        w.push(format!(
            "a = {} is not large; the N -> infinity limit may be poor",
            params.n() * params.delay_tau
        ));
    }
    w
}

/// `c0` from the macroscopic-limit residue sum with `count` poles per sign.
/// Only τ and φ of `params` enter; environment loss multiplies the envelope by
/// `e^{−γ₀t/2}`. The reported error bound is the analytic tail bound.
pub fn macroscopic_c0(params: &CavityParams, t_grid: &[f64], count: usize) -> Result<Trajectory> {
    params.validate()?;
    let g = params.derive_groups();
    let set = macroscopic_poles(params.delay_tau, g.detuning, count)?;
    let loss = 0.5 * params.env_rate;
    let c0 = t_grid.iter().map(|&t| set.eval(t) * exp(-loss * t));
    let mut meta = TrajectoryMeta::new(Method::Spectral, *params);
    meta.error_bound = Some(set.tail_bound);
    meta.warnings = regime_warnings(params, true);
    if params.env_rate > 0.0 {
        meta.warnings
            .push("environment loss applied as an envelope only".into());
    }
    Ok(Trajectory::from_c0(t_grid.to_vec(), c0, meta))
}

/// Loss enters the exact denominator as `s → s + γ₀/2` with the delay factor
/// picking up `e^{γ₀τ/2}`; `e^{iφ}` times that factor is returned.
fn effective_phase(params: &CavityParams) -> C64 {
    cis(params.phase_offset) * exp(0.5 * params.env_rate * params.delay_tau)
}

/// Cubic from the second-order expansion of the delay factor in
/// `(s+1)(s+N) − E N (s−1) e^{−sτ}`.
fn main_cubic(n: f64, tau: f64, e: C64) -> Poly<C64> {
    let one = C64::new(1.0, 0.0);
    Poly::new(alloc::vec![
        (one + e) * n,
        one * (n + 1.0) - e * (n * (1.0 + tau)),
        one + e * (n * (tau + 0.5 * tau * tau)),
        -e * (0.5 * n * tau * tau),
    ])
}

/// Main poles from the cubic (in the loss-shifted variable): the roots nearest
/// `iΔ'/2 ± i√(Ω² + (Δ'/2)²)` with Δ' = Δ·a/(1+a), which at φ = 0 is ±iΩ.
fn cubic_main_roots(params: &CavityParams) -> Result<(C64, C64)> {
    let n = params.n();
    let tau = params.delay_tau;
    let a = n * tau;
    let roots = polynomial_roots(&main_cubic(n, tau, effective_phase(params)))?;
    let omega = sqrt(2.0 * n / (1.0 + a));
    let half_shift = 0.5 * params.derive_groups().detuning * a / (1.0 + a);
    let spread = sqrt(omega * omega + half_shift * half_shift);
    let pick = |target: C64| -> usize {
        (0..roots.len())
            .min_by(|&i, &j| {
                let (di, dj) = (cabs(roots[i] - target), cabs(roots[j] - target));
                di.total_cmp(&dj)
                    .then(roots[j].im.abs().total_cmp(&roots[i].im.abs()))
            })
            .unwrap()
    };
    let ip = pick(C64::new(0.0, half_shift + spread));
    let im = pick(C64::new(0.0, half_shift - spread));
    if ip == im {
        return Err(Error::Degenerate(format!(
            "cubic main-pole selection picked the same root for both poles (N = {}, tau = {tau})",
            params.n_atoms
        )));
    }
    Ok((roots[ip], roots[im]))
}

/// The two main poles of `c̃0(s)` from the cubic procedure, in physical `s`.
pub fn main_poles_cubic(params: &CavityParams) -> Result<MainPoles> {
    params.validate()?;
    let (p, m) = cubic_main_roots(params)?;
    let shift = C64::new(0.5 * params.env_rate, 0.0);
    Ok(MainPoles {
        s_plus: p - shift,
        s_minus: m - shift,
    })
}

/// Exact denominator, its derivative and the numerator of `c̃0` in the
/// loss-shifted variable.
struct ExactTransform {
    n: f64,
    tau: f64,
    e: C64,
}

impl ExactTransform {
    fn delay(&self, s: C64) -> C64 {
        self.e * cexp(-s * self.tau)
    }

    fn den(&self, s: C64) -> C64 {
        (s + 1.0) * (s + self.n) - self.delay(s) * (s - 1.0) * self.n
    }

    fn den_prime(&self, s: C64) -> C64 {
        s * 2.0 + (self.n + 1.0) - self.delay(s) * self.n * (1.0 - self.tau * (s - 1.0))
    }

    fn num(&self, s: C64) -> C64 {
        s + (C64::new(1.0, 0.0) - self.delay(s)) * self.n
    }

    /// Newton on the exact denominator; falls back to the start if it wanders off.
    fn polish(&self, s0: C64) -> C64 {
        let mut s = s0;
        for _ in 0..50 {
            let step = self.den(s) / self.den_prime(s);
            if !step.is_finite() {
                return s0;
            }
            s -= step;
            if cabs(step) <= 1e-15 * cabs(s).max(1.0) {
                break;
            }
        }
        if cabs(s - s0) > 0.5 * cabs(s0).max(1.0) {
            s0
        } else {
            s
        }
    }
}

/// Two-pole solution for finite N: cubic seeds polished on the exact
/// denominator, each weighted by its exact residue.
pub fn spectral_main(params: &CavityParams, t_grid: &[f64]) -> Result<Trajectory> {
    params.validate()?;
    let (p, m) = cubic_main_roots(params)?;
    let tr = ExactTransform {
        n: params.n(),
        tau: params.delay_tau,
        e: effective_phase(params),
    };
    let poles = [tr.polish(p), tr.polish(m)];
    let weights = poles.map(|s| tr.num(s) / tr.den_prime(s));
    let loss = 0.5 * params.env_rate;
    let c0 = t_grid.iter().map(|&t| {
        let sum: C64 = poles
            .iter()
            .zip(&weights)
            .map(|(s, w)| w * cexp(s * t))
            .sum();
        sum * exp(-loss * t)
    });
    let mut meta = TrajectoryMeta::new(Method::SpectralMain, *params);
    meta.warnings = regime_warnings(params, false);
    Ok(Trajectory::from_c0(t_grid.to_vec(), c0, meta))
}

/// `e^{−(κ+γ₀)t/2} cos(Ωt)` with κ = 1/(1+a)² and Ω = √(2N/(1+a)).
pub fn rabi_approx(params: &CavityParams, t_grid: &[f64]) -> Result<Trajectory> {
    params.validate()?;
    let fom = params.figures_of_merit();
    let rate = 0.5 * (fom.kappa + params.env_rate);
    let c0 = t_grid
        .iter()
        .map(|&t| C64::new(exp(-rate * t) * cos(fom.rabi_freq * t), 0.0));
    let mut meta = TrajectoryMeta::new(Method::Approx, *params);
    meta.warnings = regime_warnings(params, false);
    Ok(Trajectory::from_c0(t_grid.to_vec(), c0, meta))
}

/// Closed form for arbitrary a and small φ:
/// `e^{−t/(2(1+a)²)} e^{2a(1+a)v t/(3τ)} [cos(Ω₀√(1+u+v) t) + √(−u/(1+u+v)) sin(Ω₀√(1+u+v) t)]`
/// with `Ω₀ = √(2a/((1+a)τ))`, `v = ¾(e^{iφ/(1+a)²} − 1)`, `u = −2a(1+a)³v²/(9τ)`,
/// principal square roots. Environment loss multiplies by `e^{−γ₀t/2}`.
pub fn detuned_general_c0(params: &CavityParams, t_grid: &[f64]) -> Result<Trajectory> {
    params.validate()?;
    let tau = params.delay_tau;
    let a = params.n() * tau;
    let omega0 = sqrt(2.0 * a / ((1.0 + a) * tau));
    let v = cis_m1(params.phase_offset / ((1.0 + a) * (1.0 + a))) * 0.75;
    let u = -v * v * (2.0 * a * (1.0 + a) * (1.0 + a) * (1.0 + a) / (9.0 * tau));
    let root = csqrt(u + v + 1.0);
    let freq = root * omega0;
    let sin_coeff = csqrt(-u / (u + v + 1.0));
    let growth = v * (2.0 * a * (1.0 + a) / (3.0 * tau))
        - (0.5 / ((1.0 + a) * (1.0 + a)) + 0.5 * params.env_rate);
    let c0 = t_grid
        .iter()
        .map(|&t| cexp(growth * t) * (ccos(freq * t) + sin_coeff * csin(freq * t)));
    let mut meta = TrajectoryMeta::new(Method::Detuned, *params);
    meta.warnings = regime_warnings(params, false);
    Ok(Trajectory::from_c0(t_grid.to_vec(), c0, meta))
}

/// `|c0|²` of the macroscopic detuned amplitude
/// `e^{iΔt/2}(cos Ωt − i(Δ/2Ω) sin Ωt)` with `Ω = √(Ω₀² + (Δ/2)²)`.
pub fn detuned_probability(delta: f64, omega0: f64, t: f64) -> f64 {
    let omega = sqrt(omega0 * omega0 + 0.25 * delta * delta);
    if omega == 0.0 {
        return 1.0;
    }
    let (c, s) = (cos(omega * t), sin(omega * t));
    let x = 0.5 * delta / omega;
    c * c + x * x * s * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_branch_root_matches_bracketed_oracle() {
        let set = macroscopic_poles(0.1, 0.0, 8).unwrap();
        // y − cot(y/20) = 0 solved to 30 digits independently.
        let y = set.pole(1).unwrap().im;
        assert!((y - 4.435_207_878_818_885).abs() < 1e-12, "{y}");
        assert!((y / sqrt(2.0 / 0.1) - 1.0).abs() < 0.01);
        assert_eq!(set.pole(-1).unwrap().im, -y);
    }

    #[test]
    fn far_branch_root_matches_oracle() {
        let set = macroscopic_poles(0.005, 0.0, 32).unwrap();
        let y = set.pole(32).unwrap().im;
        assert!((y / 38_955.759_172_571_576 - 1.0).abs() < 1e-13, "{y}");
    }

    #[test]
    fn poles_symmetric_and_on_axis() {
        let set = macroscopic_poles(0.02, 0.0, 32).unwrap();
        assert_eq!(set.len(), 64);
        for j in 1..=32 {
            let (p, m) = (set.pole(j).unwrap(), set.pole(-j).unwrap());
            assert_eq!(p.re, 0.0);
            assert_eq!(p.im, -m.im);
        }
        for w in set.poles.windows(2) {
            assert!(w[0].im.abs() <= w[1].im.abs());
        }
    }

    #[test]
    fn residuals_and_spacing() {
        for tau in [0.005, 0.02, 0.1] {
            let set = macroscopic_poles(tau, 0.0, 32).unwrap();
            for (i, (j, s)) in set.labels.iter().zip(&set.poles).enumerate() {
                assert!(set.residual(i) < 1e-10, "tau {tau} j {j}");
                let w = 0.5 * s.im * tau;
                let k = (w - set.reduced[i]) / PI;
                assert!((k - k.round()).abs() < 1e-9);
                if j.abs() >= 2 {
                    assert!(s.im.abs() > (j.abs() - 1) as f64 * 2.0 * PI / tau);
                }
            }
            assert!(set.non_main_weight() <= pole_tail_bound(tau));
        }
    }

    #[test]
    fn detuned_poles_solve_shifted_equation() {
        let (tau, delta) = (0.02, PI / 10.0 / 0.02);
        let set = macroscopic_poles(tau, delta, 16).unwrap();
        for (i, s) in set.poles.iter().enumerate() {
            assert!(set.residual(i) < 1e-10);
            let r = 0.5 * (s.im - delta) * tau - set.reduced[i];
            assert!((r / PI - (r / PI).round()).abs() < 1e-9);
        }
        assert!(set.tail_bound > pole_tail_bound(tau));
        let omega0 = sqrt(2.0 / tau);
        let want = sqrt(omega0 * omega0 + 0.25 * delta * delta);
        let got = 0.5 * (set.pole(1).unwrap().im - set.pole(-1).unwrap().im);
        assert!((got / want - 1.0).abs() < 0.01, "{got} vs {want}");
    }

    #[test]
    fn weights_sum_to_one_at_origin() {
        let set = macroscopic_poles(0.02, 0.0, 64).unwrap();
        let c = set.eval(0.0);
        assert!((c.re - 1.0).abs() <= set.tail_bound);
    }

    #[test]
    fn tail_bound_values() {
        assert!((pole_tail_bound(0.02) - 0.003_333_333_333_333_333).abs() < 1e-15);
        assert!((pole_tail_bound(0.6) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn invalid_pole_requests() {
        assert!(macroscopic_poles(0.0, 0.0, 4).is_err());
        assert!(macroscopic_poles(0.1, 0.0, 1).is_err());
        assert!(macroscopic_poles(0.1, 40.0, 4).is_err());
    }

    #[test]
    fn cubic_markov_and_transition_limits() {
        let p = CavityParams::new(100, 1e-6).unwrap();
        let m = main_poles_cubic(&p).unwrap();
        assert!((m.s_plus.re + 0.5).abs() < 0.005);
        assert!((m.s_plus.im / sqrt(200.0) - 1.0).abs() < 0.01);
        assert!((m.s_minus - m.s_plus.conj()).norm() < 1e-9);

        let p = CavityParams::new(100, 0.01).unwrap();
        let m = main_poles_cubic(&p).unwrap();
        assert!((m.s_plus.re / -0.125 - 1.0).abs() < 0.05, "{}", m.s_plus);
        assert!((m.s_plus.im / 10.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn cubic_macroscopic_limit() {
        // The truncated expansion leaves Re s = O(τ); it vanishes with τ.
        for tau in [0.02, 0.002] {
            let p = CavityParams::new(1_000_000_000, tau).unwrap();
            let m = main_poles_cubic(&p).unwrap();
            assert!(m.s_plus.re.abs() < 0.3 * tau, "{m:?}");
            assert!((m.rabi_frequency() / sqrt(2.0 / tau) - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn closed_forms_at_origin_and_zero_detuning() {
        let p = CavityParams::new(100, 0.01).unwrap();
        let grid: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let r = rabi_approx(&p, &grid).unwrap();
        let d = detuned_general_c0(&p, &grid).unwrap();
        assert_eq!(r.samples[0].c0, C64::new(1.0, 0.0));
        for (x, y) in r.c0().iter().zip(d.c0()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn probability_examples() {
        assert_eq!(detuned_probability(0.0, 3.0, 0.0), 1.0);
        assert!((detuned_probability(0.0, 3.0, 0.4) - cos(1.2) * cos(1.2)).abs() < 1e-15);
        let (omega0, delta) = (2.0, 4.0);
        let omega = sqrt(omega0 * omega0 + 0.25 * delta * delta);
        assert!((detuned_probability(delta, omega0, PI / (2.0 * omega)) - 0.5).abs() < 1e-12);
    }
}
