//! Trajectory post-processing: distances between solutions, peak-based
//! envelope and frequency fits, retardation-kink detection and regime labels.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::math::{cabs, exp, ln, sqrt};
use crate::trajectory::{Method, Trajectory};
use crate::{Error, Result, C64};

/// Distances between two sampled curves on the same grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distances {
    pub sup: f64,
    /// Root-mean-square over the time span (trapezoidal rule).
    pub l2: f64,
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn sup_distance_complex(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| cabs(x - y))
        .fold(0.0, f64::max)
}

/// `√(∫|a−b|² dt / T)`; for a single point, the pointwise difference.
pub fn l2_distance(t: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let n = t.len().min(a.len()).min(b.len());
    match n {
        0 => 0.0,
        1 => (a[0] - b[0]).abs(),
        _ => {
            let sq = |i: usize| (a[i] - b[i]) * (a[i] - b[i]);
            let integral: f64 = (1..n)
                .map(|i| 0.5 * (sq(i) + sq(i - 1)) * (t[i] - t[i - 1]))
                .sum();
            let span = t[n - 1] - t[0];
            if span > 0.0 {
                sqrt(integral / span)
            } else {
                0.0
            }
        }
    }
}

fn same_grid(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.t_grid != b.t_grid {
        return Err(Error::config("trajectories are not on the same time grid"));
    }
    Ok(())
}

/// Distances between the excitation probabilities `|c0|²`.
pub fn probability_distances(a: &Trajectory, b: &Trajectory) -> Result<Distances> {
    same_grid(a, b)?;
    let (pa, pb) = (a.p0(), b.p0());
    Ok(Distances {
        sup: sup_distance(&pa, &pb),
        l2: l2_distance(&a.t_grid, &pa, &pb),
    })
}

/// Distances between the complex amplitudes `c0`.
pub fn amplitude_distances(a: &Trajectory, b: &Trajectory) -> Result<Distances> {
    same_grid(a, b)?;
    let (ca, cb) = (a.c0(), b.c0());
    let diff: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| cabs(x - y)).collect();
    let zero = alloc::vec![0.0; diff.len()];
    Ok(Distances {
        sup: sup_distance_complex(&ca, &cb),
        l2: l2_distance(&a.t_grid, &diff, &zero),
    })
}

/// A local maximum refined by a parabola through its three samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub time: f64,
    pub value: f64,
    pub prominence: f64,
}

/// Interior local maxima whose prominence (height above the higher of the two
/// lowest points separating it from taller samples) reaches `min_prominence`.
pub fn find_peaks(t: &[f64], y: &[f64], min_prominence: f64) -> Vec<Peak> {
    let n = t.len().min(y.len());
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if !(y[i] > y[i - 1]) {
            i += 1;
            continue;
        }
        // Walk across a flat top.
        let mut j = i;
        while j + 1 < n && y[j + 1] == y[i] {
            j += 1;
        }
        if j + 1 < n && y[j + 1] < y[i] {
            let prominence = prominence(y, i, j);
            if prominence >= min_prominence {
                let mid = (i + j) / 2;
                let (time, value) = if i == j {
                    refine(t, y, i)
                } else {
                    (t[mid], y[mid])
                };
                peaks.push(Peak {
                    index: mid,
                    time,
                    value,
                    prominence,
                });
            }
        }
        i = j + 1;
    }
    peaks
}

fn prominence(y: &[f64], first: usize, last: usize) -> f64 {
    let h = y[first];
    let mut left_min = h;
    for k in (0..first).rev() {
        if y[k] > h {
            break;
        }
        left_min = left_min.min(y[k]);
    }
    let mut right_min = h;
    for &v in &y[last + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Vertex of the parabola through samples `i−1, i, i+1`.
fn refine(t: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
    let (d0, d1) = ((y[i] - y[i - 1]) / h0, (y[i + 1] - y[i]) / h1);
    let curv = (d1 - d0) / (0.5 * (h0 + h1));
    if !(curv < 0.0) {
        return (t[i], y[i]);
    }
    // Slope at t[i] from the parabola, then one Newton step to the vertex.
    let slope = (d0 * h1 + d1 * h0) / (h0 + h1);
    let dx = (-slope / curv).clamp(-h0, h1);
    (t[i] + dx, y[i] + slope * dx + 0.5 * curv * dx * dx)
}

/// Default prominence cut, relative to the signal's range.
pub const DEFAULT_RELATIVE_PROMINENCE: f64 = 0.05;

fn default_prominence(y: &[f64]) -> f64 {
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    if hi > lo {
        DEFAULT_RELATIVE_PROMINENCE * (hi - lo)
    } else {
        f64::INFINITY
    }
}

/// Least-squares line `y ≈ intercept + slope·x`.
fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Exponential envelope `A e^{−rate·t}` fitted to the peaks of a signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFit {
    pub rate: f64,
    pub amplitude: f64,
    pub peaks: usize,
}

/// Log-linear regression on the peak heights of `y` (typically `|c0|`, whose
/// decay rate is half that of the probability).
pub fn fit_envelope(t: &[f64], y: &[f64]) -> Option<EnvelopeFit> {
    let peaks = find_peaks(t, y, default_prominence(y));
    let pts: Vec<(f64, f64)> = peaks
        .iter()
        .filter(|p| p.value > 0.0)
        .map(|p| (p.time, ln(p.value)))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (intercept, slope) = linear_fit(&xs, &ys)?;
    Some(EnvelopeFit {
        rate: -slope,
        amplitude: exp(intercept),
        peaks: xs.len(),
    })
}

/// Angular frequency of `c0` from the spacing of the peaks of `|c0|` (or of
/// `|c0|²`), which recur every half period.
pub fn fit_frequency(t: &[f64], y: &[f64]) -> Option<f64> {
    let peaks = find_peaks(t, y, default_prominence(y));
    let xs: Vec<f64> = (0..peaks.len()).map(|k| k as f64).collect();
    let ts: Vec<f64> = peaks.iter().map(|p| p.time).collect();
    let (_, spacing) = linear_fit(&xs, &ts)?;
    if spacing > 0.0 {
        Some(core::f64::consts::PI / spacing)
    } else {
        None
    }
}

/// Options for [`detect_kinks`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkOptions {
    /// Order m of the finite difference. A jump in the k-th derivative shows
    /// as an isolated spike of size ~dt^k once m > k + 1.
    pub order: usize,
    /// Half-width, in samples, of the window giving the local background.
    pub window: usize,
    /// Spike-to-background ratio that counts as a discontinuity.
    pub threshold: f64,
    /// Absolute noise level of the samples; differences below `2^m` times this are noise.
    pub noise: f64,
}

impl Default for KinkOptions {
    fn default() -> Self {
        KinkOptions {
            order: 5,
            window: 30,
            threshold: 1e3,
            noise: 1e-12,
        }
    }
}

/// Times of derivative discontinuities of a uniformly sampled curve: spikes of
/// the m-th finite difference standing out from the median of their
/// neighbourhood. Spikes closer than m samples are merged.
pub fn detect_kinks(t: &[f64], c: &[C64], opts: &KinkOptions) -> Result<Vec<f64>> {
    let n = t.len().min(c.len());
    let m = opts.order.max(1);
    if n < 2 * opts.window + m + 2 {
        return Ok(Vec::new());
    }
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    if t.windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1e-300))
    {
        return Err(Error::config("kink detection needs a uniform grid"));
    }
    let mut d: Vec<C64> = c[..n].to_vec();
    for _ in 0..m {
        d = d.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let a: Vec<f64> = d.iter().map(|&x| cabs(x)).collect();
    let floor = opts.noise * libm::ldexp(1.0, m as i32);
    let w = opts.window;

    let mut hits: Vec<(usize, f64)> = Vec::new();
    let mut scratch = Vec::with_capacity(2 * w);
    for i in w..a.len().saturating_sub(w) {
        scratch.clear();
        scratch.extend(
            (i - w..i.saturating_sub(m))
                .chain(i + m + 1..i + w)
                .map(|j| a[j]),
        );
        if scratch.is_empty() {
            continue;
        }
        scratch.sort_by(f64::total_cmp);
        let background = scratch[scratch.len() / 2] + floor;
        let score = a[i] / background;
        if score >= opts.threshold {
            match hits.last_mut() {
                Some((j, s)) if i - *j <= m => {
                    if score > *s {
                        *j = i;
                        *s = score;
                    }
                }
                _ => hits.push((i, score)),
            }
        }
    }
    // Δ^m at i spans samples i..=i+m; the kink sits mid-stencil.
    Ok(hits
        .into_iter()
        .map(|(i, _)| t[0] + (i as f64 + 0.5 * m as f64) * dt)
        .collect())
}

/// Dynamical regime from the key parameter a = Nτ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Markovian,
    Transition,
    Macroscopic,
}

impl Regime {
    pub fn classify(a: f64) -> Regime {
        if a < 0.1 {
            Regime::Markovian
        } else if a <= 10.0 {
            Regime::Transition
        } else {
            Regime::Macroscopic
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::Markovian => "markovian",
            Regime::Transition => "transition",
            Regime::Macroscopic => "macroscopic",
        }
    }

    /// Sup-norm tolerance on `|c0|²` between a closed form and an exact solution.
    pub fn approx_tolerance(self, tau: f64) -> f64 {
        match self {
            Regime::Markovian => 0.02,
            Regime::Transition => 0.03,
            Regime::Macroscopic => 0.02 + tau / 6.0,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markovian" => Ok(Regime::Markovian),
            "transition" => Ok(Regime::Transition),
            "macroscopic" => Ok(Regime::Macroscopic),
            other => Err(Error::Config(alloc::format!("unknown regime '{other}'"))),
        }
    }
}

/// Methods that solve the model without approximation.
pub fn is_exact(method: Method) -> bool {
    matches!(method, Method::Dde | Method::Series | Method::FullChain)
}

/// Agreement expected between two methods: 10⁻⁶ between exact solvers,
/// otherwise the regime's closed-form tolerance.
pub fn pair_tolerance(regime: Regime, tau: f64, a: Method, b: Method) -> f64 {
    if is_exact(a) && is_exact(b) {
        1e-6
    } else {
        regime.approx_tolerance(tau)
    }
}
