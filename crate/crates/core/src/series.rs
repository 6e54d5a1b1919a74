//! Exact solution as a sum of delayed terms,
//! `c0(t) = Σ_k e^{ikφ} f_k(t − kτ) Θ(t − kτ)`.
//!
//! `f_0 = e^{−t}` and, for `k ≥ 1`, `f_k` is the inverse transform of
//!
//! ```text
//! F_k(s) = −2 N^k (s − 1)^{k−1} / ((s + 1)^{k+1} (s + N)^k),
//! ```
//!
//! an exponential polynomial with poles at −1 and −N. Its partial-fraction
//! coefficients are obtained in closed form as sums of positive terms (so
//! they carry only rounding error) and evaluated in double-double arithmetic:
//! the polynomials in `t` cancel massively for large `k`, and the evaluator
//! reports the size of that cancellation as an error estimate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dd::{self, Dd};
use crate::math::{cabs, cis, exp, floor};
use crate::poly::{ExpPolynomial, ExpTerm, Poly, RationalFunction};
use crate::trajectory::{Method, Trajectory, TrajectoryMeta};
use crate::{CavityParams, Error, Result, C64};

/// Arithmetic used to evaluate the terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    Double,
    Extended,
    /// Double where its error estimate is negligible, extended elsewhere.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Highest term index; defaults to `floor(t_max/τ) + 1`.
    pub k_max: Option<usize>,
    /// Refuse to build terms beyond this index.
    pub k_limit: usize,
    pub precision: Precision,
    /// Largest acceptable estimated absolute error of c0.
    pub max_error: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            k_max: None,
            k_limit: 300,
            precision: Precision::Auto,
            max_error: 1e-4,
        }
    }
}

/// Number of terms that can be active on [0, t_max].
pub fn required_terms(tau: f64, t_max: f64) -> usize {
    floor(t_max / tau) as usize + 1
}

/// `f_k` as an exponential polynomial with double-double coefficients.
pub fn term_fk(k: usize, n_atoms: u32) -> Result<ExpPolynomial<Dd>> {
    if n_atoms == 0 {
        return Err(Error::config("n_atoms must be at least 1"));
    }
    let e = if k == 0 {
        ExpPolynomial {
            terms: vec![ExpTerm {
                pole: Dd::new(-1.0),
                scale: 1.0,
                coeffs: Poly::constant(Dd::ONE),
            }],
        }
    } else if n_atoms == 1 {
        single_pole_term(k)
    } else {
        two_pole_term(k, n_atoms)
    };
    let finite = e
        .terms
        .iter()
        .all(|t| t.coeffs.coeffs.iter().all(|c| c.is_finite()));
    if !finite {
        return Err(Error::validity(format!(
            "coefficients of term {k} overflow double range"
        )));
    }
    Ok(e)
}

/// Row `C(n, 0..=n)` in double-double.
fn binomial_row(n: usize) -> Vec<Dd> {
    let mut row = Vec::with_capacity(n + 1);
    let mut c = Dd::ONE;
    row.push(c);
    for r in 0..n {
        c = c.mul_f64((n - r) as f64).div_f64((r + 1) as f64);
        row.push(c);
    }
    row
}

/// `C(a + j, j)` for `j = 0..len`.
fn rising_binomials(a: usize, len: usize) -> Vec<Dd> {
    let mut out = Vec::with_capacity(len);
    let mut c = Dd::ONE;
    for j in 0..len {
        if j > 0 {
            c = c.mul_f64((a + j) as f64).div_f64(j as f64);
        }
        out.push(c);
    }
    out
}

fn powers(x: Dd, n: usize) -> Vec<Dd> {
    let mut out = Vec::with_capacity(n);
    let mut p = Dd::ONE;
    for _ in 0..n {
        out.push(p);
        p *= x;
    }
    out
}

fn inv_factorials(n: usize) -> Vec<Dd> {
    let mut out = Vec::with_capacity(n);
    let mut f = Dd::ONE;
    for i in 0..n {
        if i > 0 {
            f = f.div_f64(i as f64);
        }
        out.push(f);
    }
    out
}

/// N = 1: a single pole of order 2k + 1, `−2 (w − 2)^{k−1} / w^{2k+1}` with w = s + 1.
fn single_pole_term(k: usize) -> ExpPolynomial<Dd> {
    let m = 2 * k + 1;
    let binom = binomial_row(k - 1);
    let inv_fact = inv_factorials(m);
    let mut coeffs = vec![Dd::ZERO; m];
    for (i, b) in binom.iter().enumerate() {
        // w^i coefficient: −2 C(k−1, i)(−2)^{k−1−i}  ↔  t^{2k−i}/(2k−i)!
        let sign = if (k - 1 - i).is_multiple_of(2) {
            -1.0
        } else {
            1.0
        };
        let n = 2 * k - i;
        coeffs[n] = b.ldexp((k - i) as i32).mul_f64(sign) * inv_fact[n];
    }
    ExpPolynomial {
        terms: vec![ExpTerm {
            pole: Dd::new(-1.0),
            scale: 1.0,
            coeffs: Poly { coeffs },
        }],
    }
}

fn two_pole_term(k: usize, n_atoms: u32) -> ExpPolynomial<Dd> {
    let n = n_atoms as f64;
    let d = Dd::new(n - 1.0);
    let inv_d = d.recip();
    let ratio = Dd::new(n) * inv_d; // N/D
    let binom = binomial_row(k - 1);
    let inv_fact = inv_factorials(k + 1);

    // Pole −1, coefficient of t^{k−m} e^{−t}: h_m/(k−m)! with
    // h_m = −2 (N/D)^k (−1)^{k−1+m} Σ_{i+j=m} C(k−1,i) 2^{k−1−i} C(k−1+j, j) D^{−j}.
    let a: Vec<Dd> = binom
        .iter()
        .enumerate()
        .map(|(i, b)| b.ldexp((k - 1 - i) as i32))
        .collect();
    let inv_d_pow = powers(inv_d, k + 1);
    let c: Vec<Dd> = rising_binomials(k - 1, k + 1)
        .iter()
        .zip(&inv_d_pow)
        .map(|(b, p)| *b * *p)
        .collect();
    let pre = ratio.powi(k as i32).mul_f64(-2.0);
    let mut slow = vec![Dd::ZERO; k + 1];
    for m in 0..=k {
        let mut s = Dd::ZERO;
        for i in 0..=m.min(k - 1) {
            s += a[i] * c[m - i];
        }
        let sign = if (k - 1 + m).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        slow[k - m] = (pre * s).mul_f64(sign) * inv_fact[k - m];
    }

    // Pole −N in the variable Nt, coefficient of (Nt)^j e^{−Nt} with m = k−1−j:
    // −2 (N/D)^{m+1} D^{−1} (1/j!) Σ_i C(k−1,i) (2/D)^{k−1−i} C(k−i+m, m).
    let two_over_d = powers(inv_d.mul_f64(2.0), k);
    let ratio_pow = powers(ratio, k + 1);
    let mut fast = vec![Dd::ZERO; k];
    for m in 0..k {
        let mut s = Dd::ZERO;
        // C(k−i+m, m) walked upwards from i = k−1, where it equals m + 1.
        let mut c = Dd::new((m + 1) as f64);
        for i in (0..k).rev() {
            s += binom[i] * two_over_d[k - 1 - i] * c;
            let next = (k - i + m + 1) as f64;
            c = c.mul_f64(next).div_f64(next - m as f64);
        }
        let j = k - 1 - m;
        fast[j] = (ratio_pow[m + 1] * inv_d * s).mul_f64(-2.0) * inv_fact[j];
    }

    ExpPolynomial {
        terms: vec![
            ExpTerm {
                pole: Dd::new(-1.0),
                scale: 1.0,
                coeffs: Poly { coeffs: slow },
            },
            ExpTerm {
                pole: Dd::new(-n),
                scale: n,
                coeffs: Poly { coeffs: fast },
            },
        ],
    }
}

/// `F_k` as a rational function, for checking the closed forms against the
/// generic partial-fraction algebra.
pub fn term_transform(k: usize, n_atoms: u32) -> Result<RationalFunction<f64>> {
    if k == 0 {
        return RationalFunction::new(Poly::constant(1.0), vec![(-1.0, 1)]);
    }
    let n = n_atoms as f64;
    let num = Poly::linear(1.0)
        .pow(k as u32 - 1)
        .scale(-2.0 * libm::pow(n, k as f64));
    if n_atoms == 1 {
        RationalFunction::new(num, vec![(-1.0, 2 * k as u32 + 1)])
    } else {
        RationalFunction::new(num, vec![(-1.0, k as u32 + 1), (-n, k as u32)])
    }
}

/// Evaluates the terms of `c0` at given times.
struct TermEvaluator {
    terms_dd: Vec<ExpPolynomial<Dd>>,
    terms_f64: Vec<ExpPolynomial<f64>>,
}

/// Rounding amplification assumed for one term: coefficients carry a relative
/// error of a few k units, the evaluation a few more.
fn amplification(k: usize) -> f64 {
    4.0 * k as f64 + 8.0
}

impl TermEvaluator {
    fn new(k_max: usize, n_atoms: u32) -> Result<Self> {
        let terms_dd = (0..=k_max)
            .map(|k| term_fk(k, n_atoms))
            .collect::<Result<Vec<_>>>()?;
        let terms_f64 = terms_dd
            .iter()
            .map(|e| ExpPolynomial {
                terms: e
                    .terms
                    .iter()
                    .map(|t| ExpTerm {
                        pole: t.pole.to_f64(),
                        scale: t.scale,
                        coeffs: Poly {
                            coeffs: t.coeffs.coeffs.iter().map(|c| c.to_f64()).collect(),
                        },
                    })
                    .collect(),
            })
            .collect();
        Ok(TermEvaluator {
            terms_dd,
            terms_f64,
        })
    }

    /// `f_k(t)` and its error estimate.
    fn eval(&self, k: usize, t: f64, precision: Precision, budget: f64) -> (f64, f64) {
        let amp = amplification(k);
        let extended = || {
            let (v, mag) = self.terms_dd[k].eval_with_magnitude(t);
            (
                v.to_f64(),
                mag * amp * dd::EPSILON + f64::EPSILON * v.to_f64().abs(),
            )
        };
        match precision {
            Precision::Extended => extended(),
            Precision::Double | Precision::Auto => {
                let (v, mag) = self.terms_f64[k].eval_with_magnitude(t);
                let est = mag * amp * f64::EPSILON;
                if precision == Precision::Auto && !(est <= budget) {
                    extended()
                } else {
                    (v, est)
                }
            }
        }
    }
}

/// Series solution on `t_grid`.
pub fn series_c0(
    params: &CavityParams,
    t_grid: &[f64],
    opts: &SeriesOptions,
) -> Result<Trajectory> {
    params.validate()?;
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::config(
            "series times must be finite and non-negative",
        ));
    }
    let tau = params.delay_tau;
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let needed = required_terms(tau, t_max);
    let k_max = opts.k_max.unwrap_or(needed);
    if k_max > opts.k_limit {
        return Err(Error::validity(format!(
            "series needs {k_max} terms, above the limit of {}; use the dde method",
            opts.k_limit
        )));
    }
    let eval = TermEvaluator::new(k_max, params.n_atoms)?;
    // Loss γ₀ on every atom is the shift s → s + γ₀/2, under which each delay
    // factor e^{−sτ} picks up e^{γ₀τ/2}.
    let phase_step = cis(params.phase_offset) * exp(0.5 * params.env_rate * tau);
    let loss = 0.5 * params.env_rate;
    // Per-term share of the error budget in auto mode.
    let budget = 1e-3 * opts.max_error / (k_max + 1) as f64;

    let mut worst = 0.0f64;
    let mut values = Vec::with_capacity(t_grid.len());
    let mut parts: Vec<C64> = Vec::with_capacity(k_max + 1);
    for &t in t_grid {
        parts.clear();
        let mut est = 0.0;
        let mut phase = C64::new(1.0, 0.0);
        for k in 0..=k_max {
            let tk = t - k as f64 * tau;
            if tk <= 0.0 {
                // f_0(0) = 1 is the only term that is nonzero at its switch-on time.
                if k == 0 {
                    parts.push(phase);
                }
                break;
            }
            let (v, e) = eval.eval(k, tk, opts.precision, budget);
            parts.push(phase * v);
            est += e * cabs(phase);
            phase *= phase_step;
        }
        let damping = exp(-loss * t);
        worst = worst.max(est * damping);
        values.push(crate::math::pairwise_sum(&parts) * damping);
    }
    if !(worst <= opts.max_error) {
        return Err(Error::validity(format!(
            "series rounding error estimate {worst:.1e} exceeds {:.1e}; use extended precision or the dde method",
            opts.max_error
        )));
    }
    let mut meta = TrajectoryMeta::new(Method::Series, *params);
    meta.error_bound = Some(worst);
    Ok(Trajectory::from_c0(t_grid.to_vec(), values, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::exp;

    fn fk(k: usize, n: u32, t: f64) -> f64 {
        term_fk(k, n).unwrap().eval(t).to_f64()
    }

    #[test]
    fn first_terms() {
        assert_eq!(fk(0, 10, 0.0), 1.0);
        assert!((fk(0, 10, 0.7) - exp(-0.7)).abs() < 1e-16);
        for k in 1..6 {
            for n in [1, 2, 10, 100] {
                assert!(fk(k, n, 0.0).abs() < 1e-8, "f_{k}(0), N={n}");
            }
        }
    }

    #[test]
    fn matches_exact_rational_oracle() {
        // Partial fractions by exact rational series division, summed at 60 digits.
        let cases = [
            (1, 10, 0.3, -0.32325383790784795),
            (2, 10, 0.3, -0.16753796653411487),
            (5, 100, 1.0, 0.16461185170657505),
            (20, 10, 1.5, 0.00022930112539230676),
            (60, 10, 2.0, -8.107318671539375e-17),
            (60, 10, 5.0, -1.05562393793144e-08),
            (3, 1, 0.7, -0.005020913312875588),
            (40, 1, 2.5, -4.9290268146963835e-37),
            (8, 2, 1.3, -7.662536550375726e-05),
            (30, 100, 2.5, 0.004847378138628551),
            (100, 100, 3.0, -0.01544437868621386),
            (120, 100, 1.0, 4.2350513518145827e-07),
            (150, 100, 1.5, -6.456305142939869e-06),
            (201, 100, 0.5, -1.1614435199101149e-36),
        ];
        for (k, n, t, want) in cases {
            let (got, mag) = term_fk(k, n).unwrap().eval_with_magnitude(t);
            let err = (got.to_f64() - want).abs();
            // The reported cancellation scale must account for the actual error.
            let est = mag * amplification(k) * dd::EPSILON;
            assert!(
                err <= est.max(1e-15),
                "f_{k}({t}), N={n}: error {err:e}, estimate {est:e}"
            );
            if est < 1e-12 {
                assert!(err < 1e-12, "f_{k}({t}), N={n}: {err:e}");
            }
        }
    }

    #[test]
    fn closed_form_agrees_with_generic_partial_fractions() {
        for n in [1u32, 3, 10, 100] {
            for k in 0..8 {
                let generic = term_transform(k, n).unwrap().inverse_laplace().unwrap();
                for &t in &[0.05, 0.4, 1.3] {
                    let a = generic.eval(t);
                    let b = fk(k, n, t);
                    assert!((a - b).abs() < 1e-9, "k={k} N={n} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn terms_round_trip_to_their_transform() {
        for n in [1u32, 7, 50] {
            for k in 1..6 {
                let f = term_transform(k, n).unwrap();
                let back = f.inverse_laplace().unwrap().to_rational().unwrap();
                let scale = f.numerator.max_coeff_magnitude();
                for i in 0..f.denominator_degree() {
                    let a = back.numerator.coeffs.get(i).copied().unwrap_or(0.0);
                    let b = f.numerator.coeffs.get(i).copied().unwrap_or(0.0);
                    assert!((a - b).abs() <= 1e-8 * scale, "k={k} N={n} coeff {i}");
                }
            }
        }
    }

    #[test]
    fn before_first_return_only_free_decay() {
        let p = CavityParams::new(100, 0.5).unwrap();
        let grid = crate::trajectory::uniform_grid(0.5, 51);
        let tr = series_c0(&p, &grid, &SeriesOptions::default()).unwrap();
        for (t, c) in grid.iter().zip(tr.c0()) {
            assert!((c.re - exp(-t)).abs() < 1e-15 && c.im == 0.0);
        }
    }

    #[test]
    fn limit_is_enforced() {
        let p = CavityParams::new(100, 0.001).unwrap();
        let err = series_c0(&p, &[0.0, 1.0], &SeriesOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MethodValidity(_)));
    }

    #[test]
    fn double_precision_guard_trips_on_cancellation() {
        let p = CavityParams::new(10, 0.05).unwrap();
        let grid = crate::trajectory::uniform_grid(3.0, 61);
        let opts = SeriesOptions {
            precision: Precision::Double,
            max_error: 1e-6,
            ..Default::default()
        };
        assert!(matches!(
            series_c0(&p, &grid, &opts),
            Err(Error::MethodValidity(_))
        ));
        let auto = series_c0(&p, &grid, &SeriesOptions::default()).unwrap();
        assert!(auto.meta.error_bound.unwrap() < 1e-4);
    }

    #[test]
    fn extra_terms_change_nothing() {
        let p = CavityParams::new(100, 0.3).unwrap();
        let grid = crate::trajectory::uniform_grid(2.0, 41);
        let a = series_c0(&p, &grid, &SeriesOptions::default()).unwrap();
        let b = series_c0(
            &p,
            &grid,
            &SeriesOptions {
                k_max: Some(20),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a.c0(), b.c0());
    }

    #[test]
    fn precision_modes_agree_when_well_conditioned() {
        let p = CavityParams::new(100, 0.5).unwrap();
        let grid = crate::trajectory::uniform_grid(3.0, 31);
        let a = series_c0(
            &p,
            &grid,
            &SeriesOptions {
                precision: Precision::Double,
                ..Default::default()
            },
        )
        .unwrap();
        let b = series_c0(
            &p,
            &grid,
            &SeriesOptions {
                precision: Precision::Extended,
                ..Default::default()
            },
        )
        .unwrap();
        for (x, y) in a.c0().iter().zip(b.c0()) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn loss_and_detuning_match_direct_integration() {
        let p = CavityParams::new(10, 0.2)
            .unwrap()
            .with_phase(0.3)
            .unwrap()
            .with_env_rate(0.4)
            .unwrap();
        let grid = crate::trajectory::uniform_grid(2.0, 201);
        let s = series_c0(&p, &grid, &SeriesOptions::default()).unwrap();
        let cfg = crate::dde::IntegratorConfig::new(2.0).with_output_times(grid.clone());
        let d = crate::dde::integrate_cavity(&p, &cfg).unwrap();
        for (x, y) in s.c0().iter().zip(d.c0()) {
            assert!((x - y).norm() < 1e-7, "{x} vs {y}");
        }
    }
}
