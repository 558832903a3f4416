//! Observed convergence orders of the time-domain schemes on `ψ(t) = t²`,
//! whose Caputo and Riemann–Liouville derivatives from base 0 coincide:
//! `2 t^{2-β} / Γ(3-β)`.

use serde::Serialize;

use super::{caputo_derivative, rl_derivative, FracOrder, TimeSignal};
use crate::error::{invalid, Result};
use crate::numeric::lsq::linear_fit;
use crate::numeric::special::gamma;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// L1 product integration for the Caputo derivative.
    L1,
    /// Grünwald–Letnikov sums for the Riemann–Liouville derivative.
    GrunwaldLetnikov,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy<T> {
    pub scheme: Scheme,
    pub beta: T,
    pub steps: Vec<T>,
    /// Max-norm error on `(0, t_max]` per step size.
    pub errors: Vec<T>,
    /// Least-squares slope of `ln error` against `ln dt`.
    pub order: T,
}

/// Runs `scheme` on `t²` over `[0, t_max]` for each step in `steps`.
pub fn convergence_study<T: Real>(scheme: Scheme, order: &FracOrder<T>, t_max: T, steps: &[T]) -> Result<ConvergenceStudy<T>> {
    if steps.len() < 2 {
        return Err(invalid("steps", "need at least two step sizes"));
    }
    let beta = order.beta();
    let scale = T::lit(2.0) / gamma(T::lit(3.0) - beta);
    let mut errors = Vec::with_capacity(steps.len());
    for &dt in steps {
        if !(dt > T::zero() && dt < t_max) {
            return Err(invalid("steps", format!("step {dt} must lie in (0, {t_max})")));
        }
        let len = (t_max / dt).round().to_usize().unwrap_or(0) + 1;
        let sig = TimeSignal::sample_real(T::zero(), dt, len, |t| t * t)?;
        let out = match scheme {
            Scheme::L1 => caputo_derivative(&sig, order, T::zero())?,
            Scheme::GrunwaldLetnikov => rl_derivative(&sig, order, T::zero())?,
        };
        let err = out
            .samples()
            .iter()
            .enumerate()
            .skip(1)
            .fold(T::zero(), |acc, (n, v)| acc.max((v.re - scale * out.time(n).powf(T::lit(2.0) - beta)).abs()));
        errors.push(err);
    }
    let x: Vec<T> = steps.iter().map(|d| d.ln()).collect();
    let y: Vec<T> = errors.iter().map(|e| e.ln()).collect();
    let order_fit = linear_fit(&x, &y)?.slope;
    Ok(ConvergenceStudy {
        scheme,
        beta,
        steps: steps.to_vec(),
        errors,
        order: order_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_match_theory() {
        let steps: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
        for beta in [0.3f64, 0.5, 0.8] {
            let o = FracOrder::new(beta).unwrap();
            let l1 = convergence_study(Scheme::L1, &o, 1.0, &steps).unwrap();
            assert!((l1.order - (2.0 - beta)).abs() < 0.2, "{l1:?}");
            let gl = convergence_study(Scheme::GrunwaldLetnikov, &o, 1.0, &steps).unwrap();
            assert!((gl.order - 1.0).abs() < 0.2, "{gl:?}");
        }
    }

    #[test]
    fn rejects_bad_steps() {
        let o = FracOrder::new(0.5).unwrap();
        assert!(convergence_study(Scheme::L1, &o, 1.0, &[0.1]).is_err());
        assert!(convergence_study(Scheme::L1, &o, 1.0, &[0.1, 2.0]).is_err());
    }
}
