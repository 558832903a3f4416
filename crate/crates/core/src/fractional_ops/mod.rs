//! Fractional time derivatives on uniform time grids and time translation.
//!
//! * [`caputo_derivative`]: L1 product integration (piecewise-linear ψ, power
//!   kernel integrated exactly), order `2 - β`.
//! * [`rl_derivative`]: Grünwald–Letnikov sums, first order.
//! * [`weyl`]: the translation-invariant derivative integrating over `(t, ∞)`,
//!   in mode space and by direct quadrature.
//!
//! The Caputo and Riemann–Liouville operators carry a base point `b` (the
//! lower limit of their memory integral). Translating a signal moves the base
//! point with it, which [`commutation`] measures.

pub mod commutation;
pub mod convergence;
pub mod weyl;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::numeric::special::gamma;
use crate::numeric::sum::ComplexSum;
use crate::scalar::Real;

pub use commutation::{commutation_residual, CommutationResidual, CommutationSetup, OperatorTag, TestSignal};
pub use convergence::{convergence_study, ConvergenceStudy, Scheme};
pub use weyl::{
    branch_pow, weyl_derivative_modes, weyl_derivative_quadrature, weyl_multiplier, DecayingSignal, ExpMode,
    ExpSignal,
};

/// Fractional order `β` split into `[β]` and `r(β) = β - [β]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder<T> {
    beta: T,
    int_part: i32,
    frac_part: T,
}

impl<T: Real> FracOrder<T> {
    /// Accepts `β ∈ (0, 2)`.
    pub fn new(beta: T) -> Result<Self> {
        if !(beta > T::zero() && beta < T::lit(2.0)) {
            return Err(invalid("beta", format!("must lie in (0, 2), got {beta}")));
        }
        let int_part = beta.floor();
        Ok(Self {
            beta,
            int_part: int_part.to_i32().unwrap_or(0),
            frac_part: beta - int_part,
        })
    }

    /// Accepts `β ∈ (0, 1)`, the range of the time-domain Caputo and RL schemes.
    pub fn memory_order(beta: T) -> Result<Self> {
        if !(beta > T::zero() && beta < T::one()) {
            return Err(invalid("beta", format!("must lie in (0, 1), got {beta}")));
        }
        Self::new(beta)
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn int_part(&self) -> i32 {
        self.int_part
    }

    pub fn frac_part(&self) -> T {
        self.frac_part
    }

    fn require_memory_range(&self) -> Result<()> {
        if self.beta < T::one() {
            Ok(())
        } else {
            Err(invalid("beta", format!("time-domain schemes need β < 1, got {}", self.beta)))
        }
    }
}

/// Samples `ψ(t0 + n·dt)`, `n = 0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal<T> {
    t0: T,
    dt: T,
    samples: Vec<Complex<T>>,
}

impl<T: Real> TimeSignal<T> {
    pub fn new(t0: T, dt: T, samples: Vec<Complex<T>>) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        if samples.len() < 2 {
            return Err(invalid("samples", "a time signal needs at least two samples"));
        }
        Ok(Self { t0, dt, samples })
    }

    /// Samples a complex function on `len` grid points.
    pub fn sample(t0: T, dt: T, len: usize, f: impl Fn(T) -> Complex<T>) -> Result<Self> {
        let samples = (0..len).map(|n| f(t0 + T::from_usize_lossy(n) * dt)).collect();
        Self::new(t0, dt, samples)
    }

    /// Samples a real function on `len` grid points.
    pub fn sample_real(t0: T, dt: T, len: usize, f: impl Fn(T) -> T) -> Result<Self> {
        Self::sample(t0, dt, len, |t| Complex::new(f(t), T::zero()))
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, n: usize) -> T {
        self.t0 + T::from_usize_lossy(n) * self.dt
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.len()).map(|n| self.time(n)).collect()
    }
}

/// Number of whole grid steps in `a`, rejecting shifts off the grid.
pub(crate) fn grid_steps<T: Real>(a: T, dt: T) -> Result<i64> {
    let steps = a / dt;
    let rounded = steps.round();
    if (steps - rounded).abs() > T::lit(1e-9) * rounded.abs().max(T::one()) {
        return Err(invalid("shift", format!("{a} is not a multiple of dt = {dt}")));
    }
    Ok(rounded.to_i64().unwrap_or(0))
}

/// `[T(a) ψ](t) = ψ(t - a)`: the same samples on a grid whose origin moved by `a`.
pub fn translate<T: Real>(sig: &TimeSignal<T>, a: T) -> Result<TimeSignal<T>> {
    let steps = grid_steps(a, sig.dt)?;
    Ok(TimeSignal {
        t0: sig.t0 + T::lit(steps as f64) * sig.dt,
        dt: sig.dt,
        samples: sig.samples.clone(),
    })
}

fn require_base<T: Real>(sig: &TimeSignal<T>, base: T) -> Result<()> {
    let tol = T::lit(1e-12) * (sig.t0.abs() + sig.dt);
    if (base - sig.t0).abs() > tol {
        return Err(invalid(
            "base",
            format!("memory operators start at the signal origin t0 = {}, got b = {base}", sig.t0),
        ));
    }
    Ok(())
}

/// L1 weights `b_j = (j+1)^{1-β} - j^{1-β}`.
pub(crate) fn l1_weights<T: Real>(beta: T, count: usize) -> Vec<T> {
    let gamma_exp = T::one() - beta;
    (0..count)
        .map(|j| {
            if j == 0 {
                T::one()
            } else {
                let jf = T::from_usize_lossy(j);
                // j^γ ((1 + 1/j)^γ - 1) without cancellation.
                jf.powf(gamma_exp) * (gamma_exp * (T::one() / jf).ln_1p()).exp_m1()
            }
        })
        .collect()
}

/// Caputo derivative of order `β ∈ (0, 1)` with base point `b = t0`.
///
/// `D u_n = dt^{-β}/Γ(2-β) Σ_{j=0}^{n-1} b_j (u_{n-j} - u_{n-j-1})`; the first
/// output sample is 0.
pub fn caputo_derivative<T: Real>(sig: &TimeSignal<T>, order: &FracOrder<T>, base: T) -> Result<TimeSignal<T>> {
    order.require_memory_range()?;
    require_base(sig, base)?;
    let beta = order.beta();
    let n = sig.len();
    let weights = l1_weights(beta, n);
    let coef = sig.dt.powf(-beta) / gamma(T::lit(2.0) - beta);
    let u = &sig.samples;
    let out: Vec<Complex<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = ComplexSum::new();
            for (j, &w) in weights.iter().enumerate().take(i) {
                acc.add((u[i - j] - u[i - j - 1]) * w);
            }
            acc.value() * coef
        })
        .collect();
    Ok(TimeSignal {
        t0: sig.t0,
        dt: sig.dt,
        samples: out,
    })
}

/// Grünwald–Letnikov weights `w_0 = 1`, `w_j = w_{j-1} (1 - (β+1)/j)`.
pub(crate) fn gl_weights<T: Real>(beta: T, count: usize) -> Vec<T> {
    let mut w = Vec::with_capacity(count);
    let mut prev = T::one();
    for j in 0..count {
        if j > 0 {
            prev = prev * (T::one() - (beta + T::one()) / T::from_usize_lossy(j));
        }
        w.push(prev);
    }
    w
}

/// Riemann–Liouville derivative of order `β ∈ (0, 1)` with base point `b = t0`,
/// by Grünwald–Letnikov sums `dt^{-β} Σ_{j=0}^{n} w_j u_{n-j}`.
pub fn rl_derivative<T: Real>(sig: &TimeSignal<T>, order: &FracOrder<T>, base: T) -> Result<TimeSignal<T>> {
    order.require_memory_range()?;
    require_base(sig, base)?;
    let beta = order.beta();
    let n = sig.len();
    let weights = gl_weights(beta, n);
    let coef = sig.dt.powf(-beta);
    let u = &sig.samples;
    let out: Vec<Complex<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = ComplexSum::new();
            for (j, &w) in weights.iter().enumerate().take(i + 1) {
                acc.add(u[i - j] * w);
            }
            acc.value() * coef
        })
        .collect();
    Ok(TimeSignal {
        t0: sig.t0,
        dt: sig.dt,
        samples: out,
    })
}
