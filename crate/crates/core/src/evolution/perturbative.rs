//! First-order perturbation theory for `D^C_{1-ε} ψ = ∇·∇ψ`.
//!
//! To first order in `ε` the Caputo derivative of order `1 - ε` is the
//! ordinary derivative plus a logarithmic memory term, so per mode
//!
//! ```text
//! (∂_t + k·k) Fψ = J,   J = J₁ + J₂,
//! J₁ = εγ ∂_t Fψ^H,
//! J₂ = ε[(∂_t Fψ^H)(0) ln t + ∫_0^t ln(t-τ) (∂_t² Fψ^H)(τ) dτ],
//! ```
//!
//! where `Fψ^H` is the heat solution. The correction is
//! `Fψ_i(t) = ∫_0^t G(t - t', k) J_i(t') dt'` with `G = -θ(t) e^{-k·k t}`.
//!
//! With `P(t) = ∫_0^t ln(σ) e^{-k²(t-σ)} dσ`, which equals the logarithmic
//! convolution in `J₂`, everything reduces to two recurrences on the time
//! grid: `P` by product integration (`ln` integrated exactly against
//! piecewise-linear data) and `S(t) = ∫_0^t e^{-k²(t-t')} P(t') dt'` by the
//! trapezoid rule.

use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;

use super::{heat_dispersion, spectral_propagate, EvolutionResult, KSquaredGroups, Provenance};
use crate::error::{invalid, Result};
use crate::grid::{DensityField, SpectralField};
use crate::scalar::{Real, EULER_GAMMA};

/// Default bound on `ε` beyond which first-order theory is not trusted.
pub const DEFAULT_EPSILON_GUARD: f64 = 0.2;

/// Heat solution and both first-order corrections on a uniform time grid.
#[derive(Debug, Clone)]
pub struct PerturbativeRun<T> {
    pub epsilon: T,
    pub euler_gamma: T,
    pub homogeneous: EvolutionResult<T>,
    pub first: Vec<SpectralField<T>>,
    pub second: Vec<SpectralField<T>>,
    /// `Fψ^H + Fψ₁ + Fψ₂`.
    pub total: EvolutionResult<T>,
}

/// Source terms at `t_n = n dt`, `n = 1..=n_steps` (the `ln t` term excludes `t = 0`).
#[derive(Debug, Clone)]
pub struct PerturbativeSources<T> {
    pub times: Vec<T>,
    pub j1: Vec<SpectralField<T>>,
    pub j2: Vec<SpectralField<T>>,
}

/// `∫_{(m-1)h}^{mh} ln σ dσ` and `∫_{(m-1)h}^{mh} ln σ · σ/h dσ`.
fn log_moments<T: Real>(m: usize, h: T) -> (T, T) {
    let f0 = |x: T| if x == T::zero() { T::zero() } else { x * x.ln() - x };
    let f1 = |x: T| {
        if x == T::zero() {
            T::zero()
        } else {
            x * x * T::lit(0.5) * x.ln() - x * x * T::lit(0.25)
        }
    };
    let a = T::from_usize_lossy(m - 1) * h;
    let b = T::from_usize_lossy(m) * h;
    (f0(b) - f0(a), (f1(b) - f1(a)) / h)
}

/// Per-`k²` recurrences for unit initial amplitude.
struct ModeSeries<T> {
    /// `P(t_n)`, `n = 0..=N`.
    p: Vec<T>,
    /// `∫_0^{t_n} e^{-k²(t_n - t')} P(t') dt'`.
    s: Vec<T>,
}

fn mode_series<T: Real>(k2: T, dt: T, n_steps: usize) -> ModeSeries<T> {
    let decay = (-k2 * dt).exp();
    let mut p = vec![T::zero(); n_steps + 1];
    let mut s = vec![T::zero(); n_steps + 1];
    for n in 1..=n_steps {
        // Last interval [t_{n-1}, t_n]: g(σ) = e^{-k²(t_n - σ)} is `decay` at
        // the left node and 1 at the right node.
        let (a, b) = log_moments(n, dt);
        let right = b - T::from_usize_lossy(n - 1) * a;
        let left = a - right;
        p[n] = decay * p[n - 1] + decay * left + right;
        s[n] = decay * s[n - 1] + dt * T::lit(0.5) * (decay * p[n - 1] + p[n]);
    }
    ModeSeries { p, s }
}

fn check_epsilon<T: Real>(epsilon: T, guard: T) -> Result<()> {
    if !(epsilon >= T::zero()) {
        return Err(invalid("evolution.epsilon", format!("must be non-negative, got {epsilon}")));
    }
    if epsilon > guard {
        return Err(invalid(
            "evolution.epsilon",
            format!("{epsilon} exceeds the perturbative guard {guard}"),
        ));
    }
    Ok(())
}

fn check_steps<T: Real>(dt: T, n_steps: usize) -> Result<()> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    if n_steps == 0 {
        return Err(invalid("n_steps", "must be at least 1"));
    }
    Ok(())
}

/// `J₁` and `J₂` per mode on `t_n = n dt`, `n ≥ 1`, for the heat solution `ψ^H`
/// started from `psi0`.
pub fn perturbative_sources<T: Real>(
    psi0: &DensityField<T>,
    epsilon: T,
    dt: T,
    n_steps: usize,
) -> Result<PerturbativeSources<T>> {
    check_steps(dt, n_steps)?;
    let times: Vec<T> = (0..=n_steps).map(|n| T::from_usize_lossy(n) * dt).collect();
    let heat = spectral_propagate(psi0, &heat_dispersion(), &times)?;
    let groups = KSquaredGroups::new(psi0.grid());
    let series: Vec<ModeSeries<T>> = groups.values.par_iter().map(|&k2| mode_series(k2, dt, n_steps)).collect();
    let spec0 = &heat.snapshots()[0];
    let gamma = T::lit(EULER_GAMMA);
    let mut j1 = Vec::with_capacity(n_steps);
    let mut j2 = Vec::with_capacity(n_steps);
    for n in 1..=n_steps {
        let t = times[n];
        let h = &heat.snapshots()[n];
        j1.push(h.map_modes(|j, m| {
            let k2 = groups.values[groups.group_of[j]];
            m * (epsilon * gamma * -k2)
        }));
        j2.push(spec0.map_modes(|j, u0| {
            let g = groups.group_of[j];
            let k2 = groups.values[g];
            u0 * (epsilon * (-k2 * t.ln() + k2 * k2 * series[g].p[n]))
        }));
    }
    Ok(PerturbativeSources {
        times: times[1..].to_vec(),
        j1,
        j2,
    })
}

/// `Fψ = Fψ^H + Fψ₁ + Fψ₂` on `t_n = n dt`, snapshots every `stride` steps and
/// at the last step; `ε` must not exceed `guard`.
pub fn perturbative_evolve<T: Real>(
    psi0: &DensityField<T>,
    epsilon: T,
    dt: T,
    n_steps: usize,
    stride: usize,
    guard: T,
) -> Result<PerturbativeRun<T>> {
    check_epsilon(epsilon, guard)?;
    check_steps(dt, n_steps)?;
    if stride == 0 {
        return Err(invalid("snapshot_stride", "must be at least 1"));
    }
    let mut steps: Vec<usize> = (0..=n_steps).step_by(stride).collect();
    if steps.last() != Some(&n_steps) {
        steps.push(n_steps);
    }
    let times: Vec<T> = steps.iter().map(|&n| T::from_usize_lossy(n) * dt).collect();
    let homogeneous = spectral_propagate(psi0, &heat_dispersion(), &times)?;
    let groups = KSquaredGroups::new(psi0.grid());
    let series: Vec<ModeSeries<T>> = groups.values.par_iter().map(|&k2| mode_series(k2, dt, n_steps)).collect();
    let spec0 = &homogeneous.snapshots()[0];
    let gamma = T::lit(EULER_GAMMA);
    let mut first = Vec::with_capacity(steps.len());
    let mut second = Vec::with_capacity(steps.len());
    let mut total = Vec::with_capacity(steps.len());
    for (i, &n) in steps.iter().enumerate() {
        let t = times[i];
        let h = &homogeneous.snapshots()[i];
        // Fψ₁ = -∫_0^t e^{-k²(t-t')} εγ(-k²) Fψ^H(t') dt' = εγ k² t Fψ^H(t); the
        // trapezoid rule is exact because the integrand is constant in t'.
        let f1 = h.map_modes(|j, m| {
            let k2 = groups.values[groups.group_of[j]];
            m * (epsilon * gamma * k2 * t)
        });
        // Fψ₂ = -ε u₀ [-k² P(t) + k⁴ S(t)]
        let f2 = spec0.map_modes(|j, u0| {
            let g = groups.group_of[j];
            let k2 = groups.values[g];
            u0 * (-epsilon * (-k2 * series[g].p[n] + k2 * k2 * series[g].s[n]))
        });
        let sum = SpectralField::new(
            *h.grid(),
            h.modes()
                .iter()
                .zip(f1.modes().iter().zip(f2.modes()))
                .map(|(a, (b, c))| *a + (*b + *c))
                .collect::<Vec<Complex<T>>>(),
        )?;
        first.push(f1);
        second.push(f2);
        total.push(sum);
    }
    let mut params = BTreeMap::new();
    params.insert("epsilon".to_string(), epsilon.to_f64().unwrap_or(f64::NAN));
    params.insert("dt".to_string(), dt.to_f64().unwrap_or(f64::NAN));
    let total = EvolutionResult::new(times, total, Provenance::Perturbative, params)?;
    Ok(PerturbativeRun {
        epsilon,
        euler_gamma: gamma,
        homogeneous,
        first,
        second,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_gaussian, SpatialGrid};
    use crate::numeric::quad::{integrate_real, QuadOptions};

    fn gaussian() -> DensityField<f64> {
        make_gaussian(&SpatialGrid::new(1, 128, 40.0).unwrap(), &[0.0], 1.0).unwrap()
    }

    #[test]
    fn log_convolution_matches_series_oracle() {
        // k = 1, t = 1: P(1) = ∫_0^1 ln σ e^{-(1-σ)} dσ = -e^{-1} Σ_{n≥0} 1/(n! (n+1)²).
        let mut sum = 0.0;
        let mut fact = 1.0;
        for n in 0..30 {
            if n > 0 {
                fact *= n as f64;
            }
            sum += 1.0 / (fact * ((n + 1) * (n + 1)) as f64);
        }
        let want = -(-1.0f64).exp() * sum;
        let got = mode_series(1.0, 1e-4, 10_000).p[10_000];
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn j2_matches_adaptive_quadrature() {
        // Single mode k = 1 with unit amplitude, ε = 1.
        let h = 1e-4;
        let p = mode_series(1.0, h, 10_000).p[10_000];
        let j2 = -1.0f64.ln() + p;
        let integral = integrate_real(
            |tau: f64| (1.0 - tau).ln() * (-tau).exp(),
            &[0.0, 0.5, 0.9, 0.99, 1.0],
            QuadOptions::default(),
        )
        .unwrap()
        .value;
        assert!((j2 - integral).abs() < 1e-8, "{j2} vs {integral}");
    }

    #[test]
    fn zero_epsilon_reproduces_heat_bitwise() {
        let psi = gaussian();
        let run = perturbative_evolve(&psi, 0.0, 0.01, 100, 10, DEFAULT_EPSILON_GUARD).unwrap();
        let heat = spectral_propagate(&psi, &heat_dispersion(), run.total.times()).unwrap();
        for (a, b) in run.total.snapshots().iter().zip(heat.snapshots()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_mode_constant_and_sources_vanish_there() {
        let psi = gaussian();
        let run = perturbative_evolve(&psi, 0.05, 0.01, 100, 25, DEFAULT_EPSILON_GUARD).unwrap();
        let z0 = run.total.snapshots()[0].zero_mode();
        for s in run.total.snapshots() {
            assert!((s.zero_mode() - z0).norm() <= 1e-12);
        }
        let src = perturbative_sources(&psi, 0.05, 0.01, 20).unwrap();
        for (a, b) in src.j1.iter().zip(&src.j2) {
            assert_eq!(a.zero_mode().norm(), 0.0);
            assert_eq!(b.zero_mode().norm(), 0.0);
        }
    }

    #[test]
    fn j1_is_scaled_heat_derivative() {
        let psi = gaussian();
        let eps = 0.1;
        let src = perturbative_sources(&psi, eps, 0.05, 10).unwrap();
        let heat = spectral_propagate(&psi, &heat_dispersion(), &src.times).unwrap();
        let g = psi.grid();
        for (j1, h) in src.j1.iter().zip(heat.snapshots()) {
            for j in 0..g.node_count() {
                let want = h.modes()[j] * (-g.k_squared(j));
                assert!((j1.modes()[j] / (eps * EULER_GAMMA) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn guard_enforced() {
        let psi = gaussian();
        assert!(perturbative_evolve(&psi, 0.3, 0.01, 10, 1, DEFAULT_EPSILON_GUARD).is_err());
        assert!(perturbative_evolve(&psi, 0.3, 0.01, 10, 1, 0.5).is_ok());
        assert!(perturbative_evolve(&psi, -0.1, 0.01, 10, 1, DEFAULT_EPSILON_GUARD).is_err());
    }
}
