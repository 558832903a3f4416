//! Residuals of the commutator between time translation and a fractional
//! derivative.
//!
//! For the base-point operators, translating by `a` maps `D_b` to `D_{b+a}`:
//! `T_a D_b = D_{b+a} T_a`. The naive commutator `T_a D_b - D_b T_a` is of
//! order one. For the Weyl derivative the naive commutator itself vanishes.

use num_complex::Complex;

use super::weyl::{weyl_derivative_quadrature, ExpSignal};
use super::{caputo_derivative, grid_steps, rl_derivative, translate, FracOrder, TimeSignal};
use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Which derivative the residual is measured for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorTag<T> {
    Caputo { base: T },
    RiemannLiouville { base: T },
    Weyl,
}

/// Time window and shift of a commutation experiment.
#[derive(Debug, Clone, Copy)]
pub struct CommutationSetup<T> {
    pub dt: T,
    /// Samples per evaluated signal.
    pub len: usize,
    /// Translation `a`, a whole multiple of `dt`.
    pub shift: T,
    pub order: FracOrder<T>,
}

/// Max-norms over the common window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationResidual<T> {
    /// `‖T_a D_b ψ - D_b T_a ψ‖_∞`.
    pub residual_norm: T,
    /// `‖T_a D_b ψ - D_{b+a} T_a ψ‖_∞`; `None` for the Weyl derivative.
    pub shifted_base_norm: Option<T>,
}

/// Signal under test: any closed form for the base-point operators, a sum of
/// decaying exponentials for the Weyl derivative.
pub enum TestSignal<'a, T> {
    Function(&'a (dyn Fn(T) -> Complex<T> + Sync)),
    Exponentials(&'a ExpSignal<T>),
}

impl<T: Real> TestSignal<'_, T> {
    fn value(&self, t: T) -> Complex<T> {
        match self {
            TestSignal::Function(f) => f(t),
            TestSignal::Exponentials(e) => e.value(t),
        }
    }
}

fn max_diff<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc.max((*x - *y).norm()))
}

pub fn commutation_residual<T: Real>(
    op: OperatorTag<T>,
    sig: TestSignal<'_, T>,
    setup: &CommutationSetup<T>,
) -> Result<CommutationResidual<T>> {
    let dt = setup.dt;
    let a = setup.shift;
    let steps = grid_steps(a, dt)?;
    if steps < 0 || steps as usize >= setup.len {
        return Err(invalid(
            "shift",
            format!("shift {a} leaves no common window of {} samples", setup.len),
        ));
    }
    let p = steps as usize;
    match op {
        OperatorTag::Caputo { base } | OperatorTag::RiemannLiouville { base } => {
            let apply = |s: &TimeSignal<T>, b: T| match op {
                OperatorTag::Caputo { .. } => caputo_derivative(s, &setup.order, b),
                _ => rl_derivative(s, &setup.order, b),
            };
            let shifted_value = |t: T| sig.value(t - a);
            let plain = TimeSignal::sample(base, dt, setup.len, |t| sig.value(t))?;
            // T_a D_b ψ lives on b + a + j dt.
            let lhs = translate(&apply(&plain, base)?, a)?;
            // D_b T_a ψ lives on b + j dt.
            let naive = apply(&TimeSignal::sample(base, dt, setup.len, shifted_value)?, base)?;
            // D_{b+a} T_a ψ lives on b + a + j dt.
            let moved_base = base + T::lit(steps as f64) * dt;
            let shifted = apply(&TimeSignal::sample(moved_base, dt, setup.len, shifted_value)?, moved_base)?;
            let common = setup.len - p;
            Ok(CommutationResidual {
                residual_norm: max_diff(&lhs.samples()[..common], &naive.samples()[p..]),
                shifted_base_norm: Some(max_diff(lhs.samples(), shifted.samples())),
            })
        }
        OperatorTag::Weyl => {
            let TestSignal::Exponentials(exp) = sig else {
                return Err(invalid("signal", "the Weyl residual needs an exponential-sum signal"));
            };
            let t0 = T::zero();
            // (T_a D ψ)(t) = (D ψ)(t - a)
            let lhs = weyl_derivative_quadrature(exp, &setup.order, 0, t0 - a, dt, setup.len)?;
            let rhs = weyl_derivative_quadrature(&exp.translated(a), &setup.order, 0, t0, dt, setup.len)?;
            Ok(CommutationResidual {
                residual_norm: max_diff(lhs.samples(), rhs.samples()),
                shifted_base_norm: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caputo_on_square() {
        let f = |t: f64| Complex::new(t * t, 0.0);
        let setup = CommutationSetup {
            dt: 1e-2,
            len: 301,
            shift: 1.0,
            order: FracOrder::new(0.5).unwrap(),
        };
        let r = commutation_residual(OperatorTag::Caputo { base: 0.0 }, TestSignal::Function(&f), &setup).unwrap();
        assert!(r.shifted_base_norm.unwrap() <= 1e-6);
        assert!(r.residual_norm > 0.1);
    }

    #[test]
    fn zero_shift_gives_zero_norms() {
        let f = |t: f64| Complex::new(t.cos(), 0.0);
        let setup = CommutationSetup {
            dt: 1e-2,
            len: 50,
            shift: 0.0,
            order: FracOrder::new(0.3).unwrap(),
        };
        for op in [OperatorTag::Caputo { base: 0.0 }, OperatorTag::RiemannLiouville { base: 0.0 }] {
            let r = commutation_residual(op, TestSignal::Function(&f), &setup).unwrap();
            assert_eq!(r.residual_norm, 0.0);
            assert_eq!(r.shifted_base_norm, Some(0.0));
        }
        let e = ExpSignal::single(Complex::new(-1.0, 0.0)).unwrap();
        let r = commutation_residual(OperatorTag::Weyl, TestSignal::Exponentials(&e), &setup).unwrap();
        assert_eq!(r.residual_norm, 0.0);
    }

    #[test]
    fn weyl_requires_exponentials() {
        let f = |t: f64| Complex::new(t, 0.0);
        let setup = CommutationSetup {
            dt: 0.1,
            len: 5,
            shift: 0.1,
            order: FracOrder::new(0.5).unwrap(),
        };
        assert!(commutation_residual(OperatorTag::Weyl, TestSignal::Function(&f), &setup).is_err());
    }
}
