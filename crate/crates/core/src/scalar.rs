//! Scalar abstraction shared by the numeric modules.
//!
//! Everything that touches amplitudes, matrices or parameters is generic over
//! [`Real`], which is implemented for `f32` and `f64`. Complex arithmetic uses
//! [`num_complex::Complex`]; the transcendental helpers below are written
//! against [`Real`] directly so they do not depend on `num_traits::Float`.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar usable by every numeric routine in the crate.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + FloatConst + Default + Send + Sync
{
    /// Converts an `f64` literal. All constants used by the crate are finite.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    /// Widens to `f64` (exact for `f32` and `f64`).
    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Converts a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^z`.
#[inline]
pub fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    let m = z.re.exp();
    Complex::new(m * z.im.cos(), m * z.im.sin())
}

/// Principal logarithm. Returns `-inf` real part for `z == 0`.
#[inline]
pub fn cln<T: Real>(z: Complex<T>) -> Complex<T> {
    Complex::new(cabs(z).ln(), z.im.atan2(z.re))
}

/// `|z|`, computed with `hypot` to avoid intermediate overflow.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

/// `|z|^2`.
#[inline]
pub fn cnorm_sqr<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// `ln(2 cosh z)` evaluated in the shifted form
/// `±z + ln(1 + e^{∓2z})`, choosing the sign of `Re z` so the exponential
/// never exceeds unit modulus. Overflow-free for any finite `z`.
#[inline]
pub fn ln_2cosh<T: Real>(z: Complex<T>) -> Complex<T> {
    let (s, w) = if z.re >= T::zero() { (z, -z) } else { (-z, z) };
    let e = cexp(w + w);
    s + cln(Complex::new(T::one() + e.re, e.im))
}

/// `tanh z`, overflow-free (uses `e^{-2|Re z|}`).
#[inline]
pub fn ctanh<T: Real>(z: Complex<T>) -> Complex<T> {
    let flip = z.re < T::zero();
    let w = if flip { z } else { -z };
    let e = cexp(w + w);
    let one = Complex::new(T::one(), T::zero());
    let t = (one - e) / (one + e);
    if flip {
        -t
    } else {
        t
    }
}

/// Real `tanh` via the complex routine's stable form.
#[inline]
pub fn rtanh<T: Real>(x: T) -> T {
    let e = (-(x.abs() + x.abs())).exp();
    let t = (T::one() - e) / (T::one() + e);
    if x < T::zero() {
        -t
    } else {
        t
    }
}

/// Wraps an angle into `(-π, π]`.
#[inline]
pub fn wrap_phase<T: Real>(x: T) -> T {
    let two_pi = T::two_pi();
    let mut y = x % two_pi;
    if y > T::pi() {
        y -= two_pi;
    } else if y <= -T::pi() {
        y += two_pi;
    }
    y
}
