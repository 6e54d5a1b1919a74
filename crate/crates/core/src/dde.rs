//! Time-domain integration of the retarded equations of motion.
//!
//! The lumped model couples the central atom `c0` to the mirrors' bright mode
//! `cm` through the half round trip `τ/2`, and the bright mode to itself
//! through the full round trip `τ`:
//!
//! ```text
//! c0' = −(1 + γ₀/2) c0 − √(2N) e^{iθ/2} cm(t − τ/2) Θ(t − τ/2)
//! cm' = −√(2N) e^{iθ/2} c0(t − τ/2) Θ(t − τ/2) − N [cm + e^{iθ} cm(t − τ) Θ(t − τ)] − (γ₀/2) cm
//! ```
//!
//! with θ = (2n+1)π + φ. The integrator is classical RK4 with a cubic Hermite
//! interpolant over the stored history (method of steps: every delayed
//! argument lies in completed steps). By default the step divides τ/2 so the
//! derivative jumps created by the step functions fall on grid points; there
//! the first stage sees the right limit and the last stage the left limit.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{ceil, cis, floor, round, sqrt};
use crate::trajectory::{DelayState, Method, Trajectory, TrajectoryMeta};
use crate::{CavityParams, Error, Result, C64};

const SNAP: f64 = 1e-9;

/// How delayed arguments are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayModel {
    #[default]
    Retarded,
    /// All delays set to zero (Markov limit); the couplings stay switched on.
    Instantaneous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    /// Step size; `None` picks the default resolving both the delay and the Rabi period.
    pub dt: Option<f64>,
    pub t_max: f64,
    /// 3 for cubic Hermite history interpolation, 1 for linear.
    pub dense_order: u8,
    /// Output rows are decimated to at most this many.
    pub max_rows: usize,
    pub delay_model: DelayModel,
    /// When set, the trajectory is reported exactly at these (sorted) times instead of on the step grid.
    pub output_times: Option<Vec<f64>>,
}

impl IntegratorConfig {
    pub fn new(t_max: f64) -> Self {
        IntegratorConfig {
            dt: None,
            t_max,
            dense_order: 3,
            max_rows: 100_000,
            delay_model: DelayModel::Retarded,
            output_times: None,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_output_times(mut self, times: Vec<f64>) -> Self {
        self.output_times = Some(times);
        self
    }

    pub fn with_delay_model(mut self, model: DelayModel) -> Self {
        self.delay_model = model;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::config("t_max must be finite and non-negative"));
        }
        if !matches!(self.dense_order, 1 | 3) {
            return Err(Error::config("dense_order must be 1 or 3"));
        }
        if self.max_rows < 3 {
            return Err(Error::config("max_rows must be at least 3"));
        }
        if let Some(ts) = &self.output_times {
            if ts
                .iter()
                .any(|t| !(t.is_finite() && *t >= 0.0 && *t <= self.t_max * (1.0 + 1e-12)))
            {
                return Err(Error::config("output times must lie in [0, t_max]"));
            }
            if ts.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::config("output times must be sorted"));
            }
        }
        Ok(())
    }
}

/// Default step for the lumped model: `min(τ/16, 0.002/max(1, Ω), 0.5/N)`,
/// shrunk so that an integer number of steps spans τ/2.
pub fn default_dt(params: &CavityParams, model: DelayModel) -> f64 {
    let f = params.figures_of_merit();
    let n = params.n();
    let mut dt = (0.002 / f.rabi_freq.max(1.0)).min(0.5 / n);
    if model == DelayModel::Retarded {
        let h = params.derive_groups().half_trip;
        dt = dt.min(h / 8.0);
        dt = h / ceil(h / dt);
    } else {
        dt = (0.002 / sqrt(2.0 * n).max(1.0)).min(0.5 / n);
    }
    dt
}

/// Right-hand side of a linear system with constant delays.
trait DelayRhs {
    fn dim(&self) -> usize;
    /// Distinct positive delays referenced by [`Delayed::get`].
    fn delays(&self) -> &[f64];
    fn eval(&self, y: &[C64], d: &Delayed<'_>, out: &mut [C64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gate {
    /// First stage: a delayed term whose argument is exactly 0 is switched on.
    Right,
    Interior,
    /// Last stage and left derivative: an argument of exactly 0 is still off.
    Left,
}

#[derive(Debug, Clone, Copy)]
struct Lookup {
    idx: usize,
    frac: f64,
    active: bool,
}

/// Ring buffer of accepted steps with the data for Hermite interpolation.
struct History {
    dim: usize,
    cap: usize,
    y: Vec<C64>,
    f_right: Vec<C64>,
    f_left: Vec<C64>,
}

impl History {
    fn new(dim: usize, cap: usize) -> Self {
        History {
            dim,
            cap,
            y: vec![C64::new(0.0, 0.0); dim * cap],
            f_right: vec![C64::new(0.0, 0.0); dim * cap],
            f_left: vec![C64::new(0.0, 0.0); dim * cap],
        }
    }

    #[inline]
    fn slot(&self, step: usize) -> usize {
        (step % self.cap) * self.dim
    }

    fn store(&mut self, step: usize, y: &[C64], fr: &[C64], fl: &[C64]) {
        let s = self.slot(step);
        self.y[s..s + self.dim].copy_from_slice(y);
        self.f_right[s..s + self.dim].copy_from_slice(fr);
        self.f_left[s..s + self.dim].copy_from_slice(fl);
    }
}

/// Delayed values available to the right-hand side for one stage.
struct Delayed<'a> {
    hist: &'a History,
    lookups: &'a [Lookup],
    dt: f64,
    order: u8,
    /// Instantaneous model: delayed values are the current stage values.
    current: Option<&'a [C64]>,
}

impl Delayed<'_> {
    /// Component `comp` delayed by delay `k`, multiplied by the step function.
    #[inline]
    fn get(&self, comp: usize, k: usize) -> C64 {
        if let Some(y) = self.current {
            return y[comp];
        }
        let l = self.lookups[k];
        if !l.active {
            return C64::new(0.0, 0.0);
        }
        let h = self.hist;
        let a = h.slot(l.idx) + comp;
        if l.frac == 0.0 {
            return h.y[a];
        }
        let b = h.slot(l.idx + 1) + comp;
        let s = l.frac;
        if self.order == 1 {
            return h.y[a] * (1.0 - s) + h.y[b] * s;
        }
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = 3.0 * s2 - 2.0 * s3;
        let h11 = s3 - s2;
        h.y[a] * h00 + h.f_right[a] * (h10 * self.dt) + h.y[b] * h01 + h.f_left[b] * (h11 * self.dt)
    }
}

/// Raw integrator output before it is shaped into a trajectory.
struct RawRun {
    t: Vec<f64>,
    y: Vec<Vec<C64>>,
    dt: f64,
}

fn hermite(y0: &[C64], f0: &[C64], y1: &[C64], f1: &[C64], s: f64, dt: f64) -> Vec<C64> {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = (s3 - 2.0 * s2 + s) * dt;
    let h01 = 3.0 * s2 - 2.0 * s3;
    let h11 = (s3 - s2) * dt;
    (0..y0.len())
        .map(|i| y0[i] * h00 + f0[i] * h10 + y1[i] * h01 + f1[i] * h11)
        .collect()
}

fn run<R: DelayRhs>(rhs: &R, y0: &[C64], dt: f64, cfg: &IntegratorConfig) -> Result<RawRun> {
    let dim = rhs.dim();
    let instantaneous = cfg.delay_model == DelayModel::Instantaneous;
    let q: Vec<f64> = rhs.delays().iter().map(|d| d / dt).collect();
    let q_max = q.iter().copied().fold(0.0, f64::max);
    let steps_f = ceil(cfg.t_max / dt - 1e-9).max(0.0);
    if steps_f > 2e9 {
        return Err(Error::config(
            "too many integration steps; increase dt or reduce t_max",
        ));
    }
    let steps = steps_f as usize;
    let cap = if instantaneous {
        2
    } else {
        ceil(q_max) as usize + 3
    };
    let mut hist = History::new(dim, cap);

    let mut lookups = vec![
        Lookup {
            idx: 0,
            frac: 0.0,
            active: false
        };
        q.len()
    ];
    let set_lookups = |lookups: &mut [Lookup], pos0: f64, gate: Gate| {
        for (l, &qk) in lookups.iter_mut().zip(&q) {
            let mut p = pos0 - qk;
            let r = round(p);
            if (p - r).abs() < SNAP {
                p = r;
            }
            let active = match gate {
                Gate::Right => p >= 0.0,
                Gate::Interior | Gate::Left => p > 0.0,
            };
            let fl = floor(p);
            *l = Lookup {
                idx: if active { fl as usize } else { 0 },
                frac: p - fl,
                active,
            };
        }
    };
    // Does any step function switch exactly at step `n`?
    let switches_at = |n: usize| q.iter().any(|&qk| (n as f64 - qk).abs() < SNAP);

    let eval = |hist: &History, lookups: &[Lookup], y: &[C64], out: &mut [C64]| {
        let d = Delayed {
            hist,
            lookups,
            dt,
            order: cfg.dense_order,
            current: if instantaneous { Some(y) } else { None },
        };
        rhs.eval(y, &d, out);
    };

    let zero = C64::new(0.0, 0.0);
    let mut y = y0.to_vec();
    let mut fr = vec![zero; dim];
    let mut fl = vec![zero; dim];
    set_lookups(&mut lookups, 0.0, Gate::Right);
    eval(&hist, &lookups, &y, &mut fr);
    // No history before t = 0, so the left derivative there is irrelevant.
    fl.copy_from_slice(&fr);
    hist.store(0, &y, &fr, &fl);

    let mut out = RawRun {
        t: Vec::new(),
        y: Vec::new(),
        dt,
    };
    let stride = steps.div_ceil(cfg.max_rows - 2).max(1);
    let mut requested = cfg.output_times.as_deref().map(|ts| ts.iter().peekable());
    let mut push_requested =
        |out: &mut RawRun, t_hi: f64, last: bool, interp: &dyn Fn(f64) -> Vec<C64>| {
            if let Some(it) = requested.as_mut() {
                while let Some(&&t) = it.peek() {
                    if t <= t_hi || last {
                        out.t.push(t);
                        out.y.push(interp(t));
                        it.next();
                    } else {
                        break;
                    }
                }
            }
        };
    let grid_mode = cfg.output_times.is_none();
    if grid_mode {
        out.t.push(0.0);
        out.y.push(y.clone());
    }

    let mut k2 = vec![zero; dim];
    let mut k3 = vec![zero; dim];
    let mut k4 = vec![zero; dim];
    let mut tmp = vec![zero; dim];
    let mut y_prev = y.clone();
    let mut fr_prev = fr.clone();
    let half = 0.5 * dt;

    for n in 0..steps {
        let base = n as f64;
        // k1 is the stored right derivative at t_n.
        set_lookups(&mut lookups, base + 0.5, Gate::Interior);
        for i in 0..dim {
            tmp[i] = y[i] + fr[i] * half;
        }
        eval(&hist, &lookups, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + k2[i] * half;
        }
        eval(&hist, &lookups, &tmp, &mut k3);
        set_lookups(&mut lookups, base + 1.0, Gate::Left);
        for i in 0..dim {
            tmp[i] = y[i] + k3[i] * dt;
        }
        eval(&hist, &lookups, &tmp, &mut k4);

        y_prev.copy_from_slice(&y);
        fr_prev.copy_from_slice(&fr);
        for i in 0..dim {
            y[i] += (fr[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        let t_next = (n + 1) as f64 * dt;
        if y.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Numerical {
                time: t_next,
                reason: String::from("non-finite amplitude"),
            });
        }

        // Derivatives at t_{n+1}: right limit for the next step, left limit for interpolation.
        let switch = !instantaneous && switches_at(n + 1);
        if switch {
            set_lookups(&mut lookups, base + 1.0, Gate::Left);
            eval(&hist, &lookups, &y, &mut fl);
        }
        set_lookups(&mut lookups, base + 1.0, Gate::Right);
        eval(&hist, &lookups, &y, &mut fr);
        if !switch {
            fl.copy_from_slice(&fr);
        }
        hist.store(n + 1, &y, &fr, &fl);

        let last = n + 1 == steps;
        if grid_mode {
            if last {
                let s = (cfg.t_max - base * dt) / dt;
                if (t_next - cfg.t_max).abs() <= 1e-12 * cfg.t_max.max(1.0) {
                    out.t.push(cfg.t_max);
                    out.y.push(y.clone());
                } else {
                    if (n + 1) % stride == 0 && t_next < cfg.t_max {
                        out.t.push(t_next);
                        out.y.push(y.clone());
                    }
                    out.t.push(cfg.t_max);
                    out.y.push(hermite(&y_prev, &fr_prev, &y, &fl, s, dt));
                }
            } else if (n + 1) % stride == 0 {
                out.t.push(t_next);
                out.y.push(y.clone());
            }
        } else {
            let (yp, fp, yc, fc) = (&y_prev, &fr_prev, &y, &fl);
            let t0 = base * dt;
            push_requested(&mut out, t_next, last, &|t: f64| {
                hermite(yp, fp, yc, fc, ((t - t0) / dt).clamp(0.0, 1.0), dt)
            });
        }
    }
    if steps == 0 {
        let y0 = y.clone();
        push_requested(&mut out, 0.0, true, &|_| y0.clone());
    }
    Ok(out)
}

/// The lumped central-atom / bright-mode system.
struct CavityRhs {
    delays: [f64; 2],
    coupling: C64,
    feedback: C64,
    n: f64,
    loss: f64,
}

impl CavityRhs {
    fn new(p: &CavityParams) -> Self {
        let phi = p.phase_offset;
        // e^{iθ/2} = i e^{iφ/2} and e^{iθ} = −e^{iφ} for θ = (2n+1)π + φ with even n
        let half = C64::new(0.0, 1.0) * cis(0.5 * phi);
        CavityRhs {
            delays: [0.5 * p.delay_tau, p.delay_tau],
            coupling: half * sqrt(2.0 * p.n()),
            feedback: -cis(phi),
            n: p.n(),
            loss: 0.5 * p.env_rate,
        }
    }
}

impl DelayRhs for CavityRhs {
    fn dim(&self) -> usize {
        2
    }

    fn delays(&self) -> &[f64] {
        &self.delays
    }

    #[inline]
    fn eval(&self, y: &[C64], d: &Delayed<'_>, out: &mut [C64]) {
        let (c0, cm) = (y[0], y[1]);
        out[0] = -c0 * (1.0 + self.loss) - self.coupling * d.get(1, 0);
        out[1] = -self.coupling * d.get(0, 0)
            - (cm + self.feedback * d.get(1, 1)) * self.n
            - cm * self.loss;
    }
}

/// Integrates the lumped model from `(c0, cm) = (1, 0)`.
pub fn integrate_cavity(params: &CavityParams, cfg: &IntegratorConfig) -> Result<Trajectory> {
    params.validate()?;
    cfg.validate()?;
    let h = params.derive_groups().half_trip;
    let dt = match cfg.dt {
        Some(dt) => {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::config("dt must be positive"));
            }
            if cfg.delay_model == DelayModel::Retarded && dt > h / 8.0 * (1.0 + 1e-12) {
                return Err(Error::Config(alloc::format!(
                    "dt = {dt} does not resolve the delay: need dt <= {}",
                    h / 8.0
                )));
            }
            dt
        }
        None => default_dt(params, cfg.delay_model),
    };
    let rhs = CavityRhs::new(params);
    let raw = run(&rhs, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], dt, cfg)?;
    let samples = raw
        .y
        .iter()
        .map(|v| DelayState {
            c0: v[0],
            cm: Some(v[1]),
        })
        .collect();
    let mut meta = TrajectoryMeta::new(Method::Dde, *params);
    meta.dt = Some(raw.dt);
    if cfg.delay_model == DelayModel::Instantaneous {
        meta.warnings
            .push(String::from("delays set to zero (Markov limit)"));
    }
    Ok(Trajectory {
        t_grid: raw.t,
        samples,
        meta,
    })
}

/// Markov-limit solution `e^{−t/2}(cos ωt − sin ωt/(2ω))`, `ω = √(2N − 1/4)`,
/// for θ = π and no environment loss.
pub fn markov_limit_c0(n_atoms: u32, t: f64) -> f64 {
    let w = sqrt(2.0 * n_atoms as f64 - 0.25);
    crate::math::exp(-0.5 * t) * (crate::math::cos(w * t) - crate::math::sin(w * t) / (2.0 * w))
}

/// Atom positions of the explicit two-mirror chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainLayout {
    /// Ordered from the leftmost mirror atom (label −N) to the rightmost (+N).
    pub positions: Vec<f64>,
    /// ω_A in units of γ.
    pub omega_a: f64,
    /// Bragg order l, ω_A d_m = lπ.
    pub phase_l: u32,
    /// Overall coupling prefactor; 1 for the physical system.
    pub coupling: f64,
}

impl ChainLayout {
    /// Central atom at 0 and `n_per_mirror` atoms in each mirror:
    /// `x_j = (j+1)d_m − d/2` for `j < 0`, `x_j = (j−1)d_m + d/2` for `j > 0`,
    /// with `ω_A d = θ = (2n+1)π + φ` and `ω_A d_m = lπ`.
    pub fn symmetric(
        n_per_mirror: u32,
        tau: f64,
        phi: f64,
        odd_multiple: u32,
        phase_l: u32,
    ) -> Result<Self> {
        if n_per_mirror == 0 || phase_l == 0 || odd_multiple.is_multiple_of(2) {
            return Err(Error::config(
                "need N >= 1, l >= 1 and an odd multiple of pi",
            ));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::config("tau must be positive"));
        }
        let omega_a = (odd_multiple as f64 * core::f64::consts::PI + phi) / tau;
        let dm = phase_l as f64 * core::f64::consts::PI / omega_a;
        let n = n_per_mirror as i64;
        let positions = (-n..=n)
            .map(|j| match j {
                0 => 0.0,
                j if j < 0 => (j + 1) as f64 * dm - 0.5 * tau,
                j => (j - 1) as f64 * dm + 0.5 * tau,
            })
            .collect::<Vec<_>>();
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("mirrors overlap the central atom"));
        }
        Ok(ChainLayout {
            positions,
            omega_a,
            phase_l,
            coupling: 1.0,
        })
    }

    pub fn n_per_mirror(&self) -> usize {
        self.positions.len() / 2
    }

    /// Index of the central atom.
    pub fn center(&self) -> usize {
        self.n_per_mirror()
    }

    pub fn min_delay(&self) -> f64 {
        self.positions
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Per-atom trajectories of the explicit chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrajectory {
    pub t_grid: Vec<f64>,
    /// `amplitudes[i][a]`: atom `a` (ordered as in the layout) at time `t_grid[i]`.
    pub amplitudes: Vec<Vec<C64>>,
    pub dt: f64,
}

impl ChainTrajectory {
    /// Amplitude of the atom with label `j ∈ [−N, N]`.
    pub fn atom(&self, j: i64) -> Vec<C64> {
        let n = (self.amplitudes.first().map_or(1, Vec::len) / 2) as i64;
        self.amplitudes
            .iter()
            .map(|a| a[(j + n) as usize])
            .collect()
    }

    /// `c_m = (1/√(2N)) Σ_{j≠0} (−1)^{(j+1)l} c_j`.
    pub fn bright_mode(&self, phase_l: u32) -> Vec<C64> {
        let n = self.amplitudes.first().map_or(1, Vec::len) / 2;
        let norm = 1.0 / sqrt(2.0 * n as f64);
        self.amplitudes
            .iter()
            .map(|a| {
                let mut s = C64::new(0.0, 0.0);
                for (idx, &c) in a.iter().enumerate() {
                    let j = idx as i64 - n as i64;
                    if j == 0 {
                        continue;
                    }
                    let odd = ((j + 1) * phase_l as i64).rem_euclid(2) == 1;
                    s += if odd { -c } else { c };
                }
                s * norm
            })
            .collect()
    }

    pub fn into_trajectory(self, layout: &ChainLayout, params: CavityParams) -> Trajectory {
        let cm = self.bright_mode(layout.phase_l);
        let c = layout.center();
        let samples = self
            .amplitudes
            .iter()
            .zip(cm)
            .map(|(a, cm)| DelayState {
                c0: a[c],
                cm: Some(cm),
            })
            .collect();
        let mut meta = TrajectoryMeta::new(Method::FullChain, params);
        meta.dt = Some(self.dt);
        Trajectory {
            t_grid: self.t_grid,
            samples,
            meta,
        }
    }
}

struct ChainRhs {
    dim: usize,
    delays: Vec<f64>,
    /// (target, source, delay index or usize::MAX for none, coefficient)
    links: Vec<(usize, usize, usize, C64)>,
    diag: f64,
}

impl DelayRhs for ChainRhs {
    fn dim(&self) -> usize {
        self.dim
    }

    fn delays(&self) -> &[f64] {
        &self.delays
    }

    fn eval(&self, y: &[C64], d: &Delayed<'_>, out: &mut [C64]) {
        for (o, &v) in out.iter_mut().zip(y) {
            *o = -v * self.diag;
        }
        for &(i, j, k, c) in &self.links {
            out[i] -= c * d.get(j, k);
        }
    }
}

/// Integrates every atom of the chain,
/// `c_j' = −Σ_{j'} e^{iω_A|x_j − x_j'|} c_j'(t − |x_j − x_j'|) Θ(·) − (γ₀/2) c_j`,
/// starting with only the central atom excited.
pub fn integrate_full_chain(
    layout: &ChainLayout,
    env_rate: f64,
    cfg: &IntegratorConfig,
) -> Result<ChainTrajectory> {
    cfg.validate()?;
    if cfg.delay_model != DelayModel::Retarded {
        return Err(Error::config("the explicit chain is always retarded"));
    }
    if !(env_rate >= 0.0 && env_rate.is_finite()) {
        return Err(Error::config("env_rate must be non-negative"));
    }
    let xs = &layout.positions;
    let dim = xs.len();
    if dim == 0 || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(
            "chain positions must be non-empty and strictly increasing",
        ));
    }
    let min_delay = layout.min_delay();
    let dt = match cfg.dt {
        Some(dt) if dt > 0.0 && (dim == 1 || dt <= min_delay / 8.0 * (1.0 + 1e-12)) => dt,
        Some(_) => {
            return Err(Error::config(
                "dt must be positive and resolve the shortest pair delay",
            ))
        }
        None => {
            let n_mirror = (dim / 2).max(1) as f64;
            let mut dt = (0.002 / sqrt(2.0 * n_mirror).max(1.0)).min(0.5 / n_mirror);
            if dim > 1 {
                dt = dt.min(min_delay / 8.0);
            }
            dt
        }
    };

    let mut delays: Vec<f64> = Vec::new();
    let mut links = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            if i == j {
                continue;
            }
            let dist = (xs[i] - xs[j]).abs();
            let k = match delays.iter().position(|&d| d == dist) {
                Some(k) => k,
                None => {
                    delays.push(dist);
                    delays.len() - 1
                }
            };
            let phase = phase_of(layout.omega_a, dist);
            links.push((i, j, k, cis(phase) * layout.coupling));
        }
    }
    let rhs = ChainRhs {
        dim,
        delays,
        links,
        diag: layout.coupling + 0.5 * env_rate,
    };
    let mut y0 = vec![C64::new(0.0, 0.0); dim];
    y0[dim / 2] = C64::new(1.0, 0.0);
    let raw = run(&rhs, &y0, dt, cfg)?;
    Ok(ChainTrajectory {
        t_grid: raw.t,
        amplitudes: raw.y,
        dt,
    })
}

/// `ω·x` reduced to [0, 2π).
fn phase_of(omega: f64, x: f64) -> f64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    let p = omega * x;
    p - two_pi * floor(p / two_pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::exp;

    fn sup_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn initial_condition_and_free_decay() {
        let p = CavityParams::new(100, 0.5).unwrap();
        let tr = integrate_cavity(&p, &IntegratorConfig::new(0.45)).unwrap();
        assert_eq!(tr.samples[0].c0, C64::new(1.0, 0.0));
        assert_eq!(tr.samples[0].cm, Some(C64::new(0.0, 0.0)));
        for (t, s) in tr.t_grid.iter().zip(&tr.samples) {
            assert!((s.c0 - exp(-t)).norm() < 1e-8, "t={t}");
        }
        let tr = integrate_cavity(&p, &IntegratorConfig::new(0.1)).unwrap();
        let last = tr.samples.last().unwrap().c0;
        assert!((last.re - 0.904_837_418_035_959_6).abs() < 1e-10);
    }

    #[test]
    fn markov_limit_matches_closed_form() {
        let p = CavityParams::new(100, 0.01).unwrap();
        let cfg = IntegratorConfig::new(3.0).with_delay_model(DelayModel::Instantaneous);
        let tr = integrate_cavity(&p, &cfg).unwrap();
        let err = tr
            .t_grid
            .iter()
            .zip(&tr.samples)
            .map(|(&t, s)| (s.c0 - markov_limit_c0(100, t)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn output_times_are_honoured() {
        let p = CavityParams::new(10, 0.2).unwrap();
        let times = alloc::vec![0.0, 0.05, 0.333, 1.0];
        let tr = integrate_cavity(
            &p,
            &IntegratorConfig::new(1.0).with_output_times(times.clone()),
        )
        .unwrap();
        assert_eq!(tr.t_grid, times);
        assert!((tr.samples[2].c0.re - exp(-0.333)).abs() > 1e-3); // after the first return
        assert!((tr.samples[1].c0.re - exp(-0.05)).abs() < 1e-10);
        let grid = integrate_cavity(&p, &IntegratorConfig::new(1.0)).unwrap();
        let end = grid.samples.last().unwrap().c0;
        assert!((end - tr.samples[3].c0).norm() < 1e-12);
    }

    #[test]
    fn rejects_coarse_step() {
        let p = CavityParams::new(10, 0.2).unwrap();
        let err = integrate_cavity(&p, &IntegratorConfig::new(1.0).with_dt(0.05)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn blow_up_reports_time() {
        let p = CavityParams::new(100_000, 1.0).unwrap();
        let err = integrate_cavity(&p, &IntegratorConfig::new(10.0).with_dt(0.0625)).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }), "{err:?}");
    }

    #[test]
    fn decimation_bounds_rows() {
        let p = CavityParams::new(100, 0.0002).unwrap();
        let mut cfg = IntegratorConfig::new(1.0);
        cfg.max_rows = 1000;
        let tr = integrate_cavity(&p, &cfg).unwrap();
        assert!(tr.len() <= 1000);
        assert_eq!(*tr.t_grid.last().unwrap(), 1.0);
        assert!(tr.t_grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn step_halving_is_fourth_order() {
        // Smooth stretch: between kinks of a long-delay cavity the error ratio should be ~16.
        let p = CavityParams::new(4, 0.8).unwrap();
        let times = alloc::vec![0.7, 1.1, 1.5];
        let at = |dt: f64| {
            integrate_cavity(
                &p,
                &IntegratorConfig::new(1.5)
                    .with_dt(dt)
                    .with_output_times(times.clone()),
            )
            .unwrap()
            .c0()
        };
        let (a, b, c) = (at(0.02), at(0.01), at(0.005));
        let r = sup_diff(&a, &b) / sup_diff(&b, &c);
        assert!(r >= 8.0, "ratio {r}");
    }

    #[test]
    fn chain_layout_positions() {
        let l = ChainLayout::symmetric(2, 1.0, 0.0, 1, 1).unwrap();
        let dm = core::f64::consts::PI / l.omega_a;
        assert!((l.omega_a - core::f64::consts::PI).abs() < 1e-15);
        assert!((l.positions[0] - (-dm - 0.5)).abs() < 1e-15);
        assert_eq!(l.positions[2], 0.0);
        assert!((l.positions[4] - (dm + 0.5)).abs() < 1e-15);
        assert!(ChainLayout::symmetric(1, 1.0, 0.0, 2, 1).is_err());
    }

    #[test]
    fn chain_is_mirror_symmetric() {
        let layout = ChainLayout::symmetric(1, 0.4, 0.0, 11, 1).unwrap();
        let tr = integrate_full_chain(&layout, 0.0, &IntegratorConfig::new(2.0)).unwrap();
        let d = sup_diff(&tr.atom(-1), &tr.atom(1));
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn uncoupled_chain_is_frozen() {
        let mut layout = ChainLayout::symmetric(2, 0.3, 0.0, 1, 1).unwrap();
        layout.coupling = 0.0;
        let tr = integrate_full_chain(&layout, 0.0, &IntegratorConfig::new(1.0)).unwrap();
        for a in &tr.amplitudes {
            assert_eq!(a[2], C64::new(1.0, 0.0));
            assert!(a
                .iter()
                .enumerate()
                .all(|(i, c)| i == 2 || *c == C64::new(0.0, 0.0)));
        }
    }
}
