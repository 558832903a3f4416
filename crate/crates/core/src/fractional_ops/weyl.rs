//! Weyl fractional derivative: memory over `(t, ∞)`, hence a function of the
//! ordinary time derivative alone.
//!
//! On exponentials `e^{s t}` with `Re s ≤ 0` it acts as multiplication by
//! `exp(-iπ r(β)) s^β`, where `s^β` takes its branch cut on the positive real
//! axis (`arg s ∈ [0, 2π)`).

use num_complex::Complex;
use rayon::prelude::*;

use super::{FracOrder, TimeSignal};
use crate::error::{invalid, Result};
use crate::numeric::quad::{integrate, QuadOptions};
use crate::numeric::special::gamma;
use crate::scalar::Real;

/// `z^p` with `arg z ∈ [0, 2π)`.
pub fn branch_pow<T: Real>(z: Complex<T>, p: T) -> Complex<T> {
    if z.re == T::zero() && z.im == T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let mut arg = z.im.atan2(z.re);
    if arg < T::zero() {
        arg = arg + T::lit(2.0) * T::PI();
    }
    Complex::from_polar(z.norm().powf(p), arg * p)
}

/// Single exponential mode `amplitude · e^{rate·t}`, `Re rate ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpMode<T> {
    amplitude: Complex<T>,
    rate: Complex<T>,
}

impl<T: Real> ExpMode<T> {
    pub fn new(amplitude: Complex<T>, rate: Complex<T>) -> Result<Self> {
        if rate.re > T::zero() {
            return Err(invalid("rate", format!("Re s must be ≤ 0, got {}", rate.re)));
        }
        Ok(Self { amplitude, rate })
    }

    pub fn amplitude(&self) -> Complex<T> {
        self.amplitude
    }

    pub fn rate(&self) -> Complex<T> {
        self.rate
    }
}

/// Multiplier `exp(-iπ r(β)) s^β` of the Weyl derivative on `e^{s t}`.
pub fn weyl_multiplier<T: Real>(s: Complex<T>, order: &FracOrder<T>) -> Result<Complex<T>> {
    if s.re > T::zero() {
        return Err(invalid("rate", format!("Re s must be ≤ 0, got {}", s.re)));
    }
    let is_zero = s.re == T::zero() && s.im == T::zero();
    if is_zero && order.frac_part() != T::zero() {
        return Err(invalid("rate", "s = 0 has no fractional power on this branch"));
    }
    let phase = Complex::from_polar(T::one(), -T::PI() * order.frac_part());
    if order.frac_part() == T::zero() {
        // Integer order: ordinary derivative, no branch needed.
        return Ok(s.powi(order.int_part()) * phase);
    }
    Ok(phase * branch_pow(s, order.beta()))
}

/// Applies the Weyl derivative to a sum of exponential modes.
pub fn weyl_derivative_modes<T: Real>(modes: &[ExpMode<T>], order: &FracOrder<T>) -> Result<Vec<ExpMode<T>>> {
    modes
        .iter()
        .map(|m| {
            Ok(ExpMode {
                amplitude: m.amplitude * weyl_multiplier(m.rate, order)?,
                rate: m.rate,
            })
        })
        .collect()
}

/// A closed-form signal with all derivatives, bounded by `C e^{-λ t}`.
pub trait DecayingSignal<T: Real>: Sync {
    /// `ψ^{(order)}(t)`.
    fn derivative(&self, t: T, order: u32) -> Complex<T>;
    /// Decay rate `λ`; must be positive for the Weyl integral to converge.
    fn decay_rate(&self) -> T;
    /// Envelope constant `C` (also bounding the derivatives up to a factor `|s|^n`).
    fn envelope(&self) -> T;
}

/// Finite sum of exponential modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSignal<T> {
    modes: Vec<ExpMode<T>>,
}

impl<T: Real> ExpSignal<T> {
    pub fn new(modes: Vec<ExpMode<T>>) -> Self {
        Self { modes }
    }

    /// `e^{s t}` with unit amplitude.
    pub fn single(rate: Complex<T>) -> Result<Self> {
        Ok(Self::new(vec![ExpMode::new(Complex::new(T::one(), T::zero()), rate)?]))
    }

    pub fn modes(&self) -> &[ExpMode<T>] {
        &self.modes
    }

    pub fn value(&self, t: T) -> Complex<T> {
        self.derivative(t, 0)
    }

    /// `ψ(t - a)`.
    pub fn translated(&self, a: T) -> Self {
        Self {
            modes: self
                .modes
                .iter()
                .map(|m| ExpMode {
                    amplitude: m.amplitude * (m.rate * (-a)).exp(),
                    rate: m.rate,
                })
                .collect(),
        }
    }
}

impl<T: Real> DecayingSignal<T> for ExpSignal<T> {
    fn derivative(&self, t: T, order: u32) -> Complex<T> {
        self.modes.iter().fold(Complex::new(T::zero(), T::zero()), |acc, m| {
            acc + m.amplitude * m.rate.powi(order as i32) * (m.rate * t).exp()
        })
    }

    fn decay_rate(&self) -> T {
        self.modes.iter().fold(T::infinity(), |acc, m| acc.min(-m.rate.re))
    }

    fn envelope(&self) -> T {
        self.modes.iter().fold(T::zero(), |acc, m| acc + m.amplitude.norm())
    }
}

/// Weyl derivative evaluated from its defining integral,
///
/// ```text
/// (-1)^{m+1} / Γ(m+1-r) · d^{[β]+1}/dt^{[β]+1} ∫_0^∞ τ^{m-r} ψ^{(m)}(τ + t) dτ,
/// ```
///
/// with the outer derivatives moved under the integral. The substitution
/// `τ = u^{1/(m+1-r)}` removes the endpoint singularity; the upper limit is
/// truncated where the envelope has decayed below `1e-20` relative.
pub fn weyl_derivative_quadrature<T, S>(
    sig: &S,
    order: &FracOrder<T>,
    m: u32,
    t0: T,
    dt: T,
    len: usize,
) -> Result<TimeSignal<T>>
where
    T: Real,
    S: DecayingSignal<T> + ?Sized,
{
    let lambda = sig.decay_rate();
    if !(lambda > T::zero()) {
        return Err(invalid("signal", "Weyl quadrature needs a decaying signal (λ > 0)"));
    }
    let r = order.frac_part();
    let derivs = order.int_part() as u32 + 1;
    let p = T::one() / (T::from_usize_lossy(m as usize) + T::one() - r);
    let horizon = (T::lit(46.0) + sig.envelope().max(T::one()).ln()) / lambda
        + T::from_usize_lossy((m + derivs) as usize) / lambda;
    let u_max = horizon.powf(T::one() / p);
    let sign = if m % 2 == 0 { -T::one() } else { T::one() };
    let prefactor = sign / gamma(T::from_usize_lossy(m as usize) + T::one() - r);
    let pieces = 16;
    let breakpoints: Vec<T> = (0..=pieces)
        .map(|i| u_max * T::from_usize_lossy(i) / T::from_usize_lossy(pieces))
        .collect();
    let opts = QuadOptions {
        abs_tol: T::lit(1e-15),
        rel_tol: T::lit(1e-13),
        max_intervals: 4000,
    };
    let samples: Result<Vec<Complex<T>>> = (0..len)
        .into_par_iter()
        .map(|n| {
            let t = t0 + T::from_usize_lossy(n) * dt;
            let integral = integrate(|u| sig.derivative(u.powf(p) + t, m + derivs), &breakpoints, opts)?;
            Ok(integral.value * p * prefactor)
        })
        .collect();
    TimeSignal::new(t0, dt, samples?)
}
