//! Dense polynomials, rational functions with factored denominators, and
//! exponential polynomials `Σ e^{p t}·P(t)`, generic over the coefficient
//! field so the same algebra runs in f64, double-double or complex arithmetic.
//!
//! The inverse Laplace transform of a proper rational function is computed
//! exactly: around each pole `p` of order `m`, shift `s → w + p`, expand the
//! analytic cofactor as a Taylor series by long division and read off the
//! first `m` coefficients.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::dd::Dd;
use crate::{Error, Result, C64};

/// The arithmetic the polynomial code needs.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    /// Absolute value (modulus) rounded to f64.
    fn magnitude(self) -> f64;
    fn exp(self) -> Self;

    fn is_finite(self) -> bool {
        self.magnitude().is_finite()
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn exp(self) -> Self {
        crate::math::exp(self)
    }
}

impl Scalar for Dd {
    fn zero() -> Self {
        Dd::ZERO
    }
    fn one() -> Self {
        Dd::ONE
    }
    fn from_f64(x: f64) -> Self {
        Dd::new(x)
    }
    fn magnitude(self) -> f64 {
        self.to_f64().abs()
    }
    fn exp(self) -> Self {
        Dd::exp(self)
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn magnitude(self) -> f64 {
        crate::math::hypot(self.re, self.im)
    }
    fn exp(self) -> Self {
        crate::math::cis(self.im) * crate::math::exp(self.re)
    }
}

/// Polynomial with coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    pub coeffs: Vec<T>,
}

impl<T: Scalar> Poly<T> {
    /// Trailing exact zeros are dropped; the zero polynomial has no coefficients.
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| *c == T::zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Poly::new(vec![c])
    }

    /// `s - root`.
    pub fn linear(root: T) -> Self {
        Poly::new(vec![-root, T::one()])
    }

    /// `Π (s - r)` over the given roots.
    pub fn from_roots(roots: &[T]) -> Self {
        roots.iter().fold(Poly::constant(T::one()), |acc, &r| {
            acc.mul(&Poly::linear(r))
        })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<T> {
        self.coeffs.last().copied()
    }

    pub fn eval(&self, x: T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| acc * x + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &Self, i: usize| p.coeffs.get(i).copied().unwrap_or_else(T::zero);
        Poly::new((0..n).map(|i| get(self, i) + get(other, i)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn scale(&self, c: T) -> Self {
        Poly::new(self.coeffs.iter().map(|&x| x * c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Poly::new(out)
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Poly::constant(T::one()), |acc, _| acc.mul(self))
    }

    pub fn derivative(&self) -> Self {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * T::from_f64(i as f64))
                .collect(),
        )
    }

    /// `p(s + c)`, by repeated synthetic division (Taylor shift).
    pub fn shift(&self, c: T) -> Self {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                a[j] = a[j] + c * a[j + 1];
            }
        }
        Poly::new(a)
    }

    /// Euclidean division, `self = q·d + r` with deg r < deg d.
    pub fn div_rem(&self, d: &Self) -> Result<(Self, Self)> {
        let dl = d
            .leading()
            .ok_or_else(|| Error::config("polynomial division by zero"))?;
        let dn = d.coeffs.len();
        if self.coeffs.len() < dn {
            return Ok((Poly::zero(), self.clone()));
        }
        let mut r = self.coeffs.clone();
        let mut q = vec![T::zero(); r.len() - dn + 1];
        for k in (0..q.len()).rev() {
            let c = r[k + dn - 1] / dl;
            q[k] = c;
            for (j, &dj) in d.coeffs.iter().enumerate() {
                r[k + j] = r[k + j] - c * dj;
            }
            r[k + dn - 1] = T::zero();
        }
        r.truncate(dn - 1);
        Ok((Poly::new(q), Poly::new(r)))
    }

    /// First `order` Taylor coefficients of `num/den` at 0 (power-series long division).
    pub fn series_div(num: &Self, den: &Self, order: usize) -> Result<Vec<T>> {
        let d0 = den.coeffs.first().copied().unwrap_or_else(T::zero);
        if d0 == T::zero() {
            return Err(Error::config(
                "series division by a polynomial vanishing at 0",
            ));
        }
        let mut out: Vec<T> = Vec::with_capacity(order);
        for n in 0..order {
            let mut acc = num.coeffs.get(n).copied().unwrap_or_else(T::zero);
            for (j, &dj) in den.coeffs.iter().enumerate().skip(1).take(n) {
                acc = acc - dj * out[n - j];
            }
            out.push(acc / d0);
        }
        Ok(out)
    }

    pub fn max_coeff_magnitude(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.magnitude())
            .fold(0.0, f64::max)
    }
}

/// Numerator over a monic denominator `Π (s - p)^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction<T> {
    pub numerator: Poly<T>,
    /// Distinct poles with multiplicities.
    pub poles: Vec<(T, u32)>,
}

impl<T: Scalar> RationalFunction<T> {
    pub fn new(numerator: Poly<T>, poles: Vec<(T, u32)>) -> Result<Self> {
        for (i, (p, m)) in poles.iter().enumerate() {
            if *m == 0 {
                return Err(Error::config("pole multiplicity must be positive"));
            }
            if poles[..i].iter().any(|(q, _)| q == p) {
                return Err(Error::config("poles must be distinct"));
            }
        }
        Ok(RationalFunction { numerator, poles })
    }

    pub fn denominator(&self) -> Poly<T> {
        self.poles
            .iter()
            .fold(Poly::constant(T::one()), |acc, &(p, m)| {
                acc.mul(&Poly::linear(p).pow(m))
            })
    }

    pub fn denominator_degree(&self) -> usize {
        self.poles.iter().map(|&(_, m)| m as usize).sum()
    }

    pub fn eval(&self, s: T) -> T {
        self.numerator.eval(s) / self.denominator().eval(s)
    }

    /// Exact inverse transform of a strictly proper function.
    pub fn inverse_laplace(&self) -> Result<ExpPolynomial<T>> {
        let deg_den = self.denominator_degree();
        if self.numerator.degree().is_some_and(|d| d >= deg_den) {
            return Err(Error::validity(
                "inverse Laplace transform needs a strictly proper function",
            ));
        }
        let mut terms = Vec::with_capacity(self.poles.len());
        for (idx, &(p, m)) in self.poles.iter().enumerate() {
            let m = m as usize;
            // Cofactor in w = s - p: A(w+p) / Π_{q≠p} (w + p - q)^{m_q}
            let num = self.numerator.shift(p);
            let others = self
                .poles
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != idx)
                .fold(Poly::constant(T::one()), |acc, (_, &(q, mq))| {
                    acc.mul(&Poly::linear(q - p).pow(mq))
                });
            let h = Poly::series_div(&num, &others, m)?;
            // h_j w^{j-m} ↔ t^{m-1-j} e^{pt} / (m-1-j)!
            let mut coeffs = vec![T::zero(); m];
            let mut fact = 1.0;
            for n in 0..m {
                if n > 0 {
                    fact *= n as f64;
                }
                coeffs[n] = h[m - 1 - n] / T::from_f64(fact);
            }
            terms.push(ExpTerm {
                pole: p,
                scale: 1.0,
                coeffs: Poly { coeffs },
            });
        }
        Ok(ExpPolynomial { terms })
    }
}

/// `e^{pole·t} · Σ_n coeffs[n]·(scale·t)^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTerm<T> {
    pub pole: T,
    /// Time scaling of the polynomial argument; keeps coefficients O(1) for fast poles.
    pub scale: f64,
    pub coeffs: Poly<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpPolynomial<T> {
    pub terms: Vec<ExpTerm<T>>,
}

impl<T: Scalar> ExpPolynomial<T> {
    pub fn eval(&self, t: f64) -> T {
        self.eval_with_magnitude(t).0
    }

    /// Value together with `Σ |c_n (scale t)^n e^{pole t}|`, the scale of the
    /// cancellations the evaluation has to survive.
    pub fn eval_with_magnitude(&self, t: f64) -> (T, f64) {
        let mut total = T::zero();
        let mut mag = 0.0;
        for term in &self.terms {
            let x = T::from_f64(term.scale) * T::from_f64(t);
            let e = (term.pole * T::from_f64(t)).exp();
            let mut acc = T::zero();
            let mut macc = 0.0;
            let xm = x.magnitude();
            for &c in term.coeffs.coeffs.iter().rev() {
                acc = acc * x + c;
                macc = macc * xm + c.magnitude();
            }
            total = total + acc * e;
            mag += macc * e.magnitude();
        }
        (total, mag)
    }

    /// Laplace transform as a rational function over the product of the pole factors.
    pub fn to_rational(&self) -> Result<RationalFunction<T>> {
        let poles: Vec<(T, u32)> = self
            .terms
            .iter()
            .map(|t| (t.pole, t.coeffs.coeffs.len().max(1) as u32))
            .collect();
        let mut numerator = Poly::zero();
        for (idx, term) in self.terms.iter().enumerate() {
            let m = poles[idx].1 as usize;
            let rest = poles
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != idx)
                .fold(Poly::constant(T::one()), |acc, (_, &(q, mq))| {
                    acc.mul(&Poly::linear(q).pow(mq))
                });
            let mut fact = 1.0;
            let mut sc = 1.0;
            for (n, &c) in term.coeffs.coeffs.iter().enumerate() {
                if n > 0 {
                    fact *= n as f64;
                    sc *= term.scale;
                }
                // (scale t)^n e^{pt} ↔ scale^n n! / (s-p)^{n+1}
                let part = Poly::linear(term.pole)
                    .pow((m - n - 1) as u32)
                    .mul(&rest)
                    .scale(c * T::from_f64(sc * fact));
                numerator = numerator.add(&part);
            }
        }
        RationalFunction::new(numerator, poles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Poly<f64> {
        Poly::new(c.to_vec())
    }

    #[test]
    fn basic_algebra() {
        let a = p(&[1.0, 2.0]);
        let b = p(&[-1.0, 0.0, 3.0]);
        assert_eq!(a.mul(&b).coeffs, [-1.0, -2.0, 3.0, 6.0]);
        assert_eq!(a.add(&b).coeffs, [0.0, 2.0, 3.0]);
        assert_eq!(a.sub(&a).coeffs, Vec::<f64>::new());
        assert_eq!(b.eval(2.0), 11.0);
        assert_eq!(b.derivative().coeffs, [0.0, 6.0]);
        assert_eq!(p(&[0.0, 0.0, 1.0]).shift(1.0).coeffs, [1.0, 2.0, 1.0]);
    }

    #[test]
    fn division_identity() {
        let n = p(&[5.0, -3.0, 0.5, 2.0, 1.0]);
        let d = p(&[1.0, 1.0, 2.0]);
        let (q, r) = n.div_rem(&d).unwrap();
        let back = q.mul(&d).add(&r);
        for (x, y) in back.coeffs.iter().zip(&n.coeffs) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(r.degree().unwrap() < 2);
        assert!(n.div_rem(&Poly::zero()).is_err());
    }

    #[test]
    fn series_of_geometric() {
        // 1/(1 - s) = Σ s^n
        let c = Poly::series_div(&p(&[1.0]), &p(&[1.0, -1.0]), 6).unwrap();
        assert_eq!(c, [1.0; 6]);
        assert!(Poly::series_div(&p(&[1.0]), &p(&[0.0, 1.0]), 3).is_err());
    }

    #[test]
    fn simple_inverse_laplace() {
        // 1/((s+1)(s+2)) ↔ e^{-t} - e^{-2t}
        let f = RationalFunction::new(p(&[1.0]), vec![(-1.0, 1), (-2.0, 1)]).unwrap();
        let e = f.inverse_laplace().unwrap();
        for &t in &[0.0, 0.3, 2.0] {
            let want = libm::exp(-t) - libm::exp(-2.0 * t);
            assert!((e.eval(t) - want).abs() < 1e-14);
        }
        // 1/(s+1)^3 ↔ t² e^{-t} / 2
        let f = RationalFunction::new(p(&[1.0]), vec![(-1.0, 3)]).unwrap();
        let e = f.inverse_laplace().unwrap();
        assert!((e.eval(1.5) - 1.125 * libm::exp(-1.5)).abs() < 1e-14);
    }

    #[test]
    fn complex_poles() {
        // 1/(s² + 1) ↔ sin t
        let i = C64::new(0.0, 1.0);
        let f = RationalFunction::new(Poly::constant(C64::new(1.0, 0.0)), vec![(i, 1), (-i, 1)])
            .unwrap();
        let e = f.inverse_laplace().unwrap();
        let v = e.eval(0.7);
        assert!((v.re - libm::sin(0.7)).abs() < 1e-14 && v.im.abs() < 1e-14);
    }

    #[test]
    fn improper_is_rejected() {
        let f = RationalFunction::new(p(&[0.0, 1.0]), vec![(-1.0, 1)]).unwrap();
        assert!(f.inverse_laplace().is_err());
        assert!(RationalFunction::new(p(&[1.0]), vec![(-1.0, 1), (-1.0, 2)]).is_err());
    }

    #[test]
    fn round_trip_repeated_poles() {
        let num = p(&[2.0, -1.0, 0.5]);
        let f = RationalFunction::new(num.clone(), vec![(-1.0, 2), (-3.0, 2)]).unwrap();
        let back = f.inverse_laplace().unwrap().to_rational().unwrap();
        assert_eq!(back.poles, f.poles);
        for i in 0..4 {
            let a = back.numerator.coeffs.get(i).copied().unwrap_or(0.0);
            let b = num.coeffs.get(i).copied().unwrap_or(0.0);
            assert!((a - b).abs() < 1e-12, "{i}: {a} vs {b}");
        }
    }

    #[test]
    fn dd_coefficients() {
        let f = RationalFunction::new(
            Poly::constant(Dd::ONE),
            vec![(Dd::new(-1.0), 1), (Dd::new(-2.0), 1)],
        )
        .unwrap();
        let v = f.inverse_laplace().unwrap().eval(1.0);
        let want = Dd::new(-1.0).exp() - Dd::new(-2.0).exp();
        assert!((v - want).to_f64().abs() < 1e-30);
    }

    proptest::proptest! {
        #[test]
        fn shift_agrees_with_eval(c in proptest::collection::vec(-3.0f64..3.0, 1..7), s in -2.0f64..2.0, x in -2.0f64..2.0) {
            let q = p(&c);
            let lhs = q.shift(s).eval(x);
            let rhs = q.eval(x + s);
            proptest::prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn partial_fractions_round_trip(
            num in proptest::collection::vec(-2.0f64..2.0, 1..4),
            p1 in -3.0f64..-0.5, m1 in 1u32..4, gap in 0.5f64..3.0, m2 in 1u32..3,
        ) {
            let f = RationalFunction::new(p(&num), vec![(p1, m1), (p1 - gap, m2)]).unwrap();
            proptest::prop_assume!(num.len() < (m1 + m2) as usize);
            let back = f.inverse_laplace().unwrap().to_rational().unwrap();
            let scale = f.numerator.max_coeff_magnitude().max(1.0);
            for i in 0..(m1 + m2) as usize {
                let a = back.numerator.coeffs.get(i).copied().unwrap_or(0.0);
                let b = f.numerator.coeffs.get(i).copied().unwrap_or(0.0);
                proptest::prop_assert!((a - b).abs() < 1e-8 * scale);
            }
        }
    }
}
