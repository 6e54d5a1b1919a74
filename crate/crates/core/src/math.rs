// Thin wrappers so the same libm routines run with and without std.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn tan(x: f64) -> f64 {
    libm::tan(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

/// `e^{iθ}`.
#[inline]
pub(crate) fn cis(theta: f64) -> crate::C64 {
    crate::C64::new(cos(theta), sin(theta))
}

/// `e^{iθ} - 1` without cancellation for small θ.
#[inline]
pub(crate) fn cis_m1(theta: f64) -> crate::C64 {
    let s = sin(0.5 * theta);
    crate::C64::new(-2.0 * s * s, sin(theta))
}

/// `|z|`. The complex helpers below call libm directly so results do not
/// depend on which float backend `num-traits` was built with.
#[inline]
pub(crate) fn cabs(z: crate::C64) -> f64 {
    hypot(z.re, z.im)
}

#[inline]
pub(crate) fn cexp(z: crate::C64) -> crate::C64 {
    cis(z.im) * exp(z.re)
}

/// Principal square root.
pub(crate) fn csqrt(z: crate::C64) -> crate::C64 {
    if z.re == 0.0 && z.im == 0.0 {
        return crate::C64::new(0.0, z.im);
    }
    let r = hypot(z.re, z.im);
    if z.re >= 0.0 {
        let t = sqrt(0.5 * (r + z.re));
        crate::C64::new(t, 0.5 * z.im / t)
    } else {
        let t = sqrt(0.5 * (r - z.re));
        crate::C64::new(0.5 * z.im.abs() / t, libm::copysign(t, z.im))
    }
}

#[inline]
pub(crate) fn ccos(z: crate::C64) -> crate::C64 {
    crate::C64::new(cos(z.re) * libm::cosh(z.im), -sin(z.re) * libm::sinh(z.im))
}

#[inline]
pub(crate) fn csin(z: crate::C64) -> crate::C64 {
    crate::C64::new(sin(z.re) * libm::cosh(z.im), cos(z.re) * libm::sinh(z.im))
}

/// Sum with pairwise reduction; the rounding pattern depends only on the length.
pub(crate) fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + core::ops::Add<Output = T> + Default,
{
    match xs.len() {
        0 => T::default(),
        1 => xs[0],
        2 => xs[0] + xs[1],
        n if n <= 8 => xs[1..].iter().fold(xs[0], |acc, &x| acc + x),
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}
