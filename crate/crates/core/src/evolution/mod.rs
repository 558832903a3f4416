//! Time evolution of densities on a periodic grid.
//!
//! * [`spectral_propagate`]: translation-invariant evolution, exact per mode.
//! * [`caputo_exact_spectral`] and [`caputo_l1_evolve`]: the Caputo fractional
//!   diffusion equation `D^C_β ψ = ∇·∇ψ` with memory starting at `t = 0`.
//! * [`perturbative`]: first-order expansion of the Caputo equation around
//!   `β = 1` through the Green's function of the heat operator.

pub mod caputo;
pub mod mittag_leffler;
pub mod perturbative;

use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{ClosedForm, DispersionRelation};
use crate::error::{invalid, Error, Result};
use crate::fractional_ops::FracOrder;
use crate::grid::{forward_transform, inverse_transform, DensityField, SpatialGrid, SpectralField};
use crate::numeric::special::gamma;
use crate::scalar::{Real, EULER_GAMMA};

pub use caputo::{caputo_exact_spectral, caputo_l1_evolve, CaputoExactEvolver, CaputoL1Evolver};
pub use mittag_leffler::mittag_leffler;
pub use perturbative::{perturbative_evolve, perturbative_sources, PerturbativeRun, PerturbativeSources};

/// Which solver produced a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Spectral,
    CaputoExact,
    CaputoL1,
    Perturbative,
}

/// Spectra of a run at increasing times.
#[derive(Debug, Clone)]
pub struct EvolutionResult<T> {
    grid: SpatialGrid<T>,
    times: Vec<T>,
    snapshots: Vec<SpectralField<T>>,
    provenance: Provenance,
    /// Solver parameters for manifests (`beta`, `dt`, `epsilon`, ...).
    parameters: BTreeMap<String, f64>,
}

impl<T: Real> EvolutionResult<T> {
    pub fn new(
        times: Vec<T>,
        snapshots: Vec<SpectralField<T>>,
        provenance: Provenance,
        parameters: BTreeMap<String, f64>,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != snapshots.len() {
            return Err(invalid("snapshots", "need one snapshot per time and at least one time"));
        }
        validate_times(&times)?;
        let grid = *snapshots[0].grid();
        if snapshots.iter().any(|s| *s.grid() != grid) {
            return Err(invalid("snapshots", "all snapshots must share one grid"));
        }
        Ok(Self {
            grid,
            times,
            snapshots,
            provenance,
            parameters,
        })
    }

    pub fn grid(&self) -> &SpatialGrid<T> {
        &self.grid
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn snapshots(&self) -> &[SpectralField<T>] {
        &self.snapshots
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn parameters(&self) -> &BTreeMap<String, f64> {
        &self.parameters
    }

    /// Real-space density of snapshot `i`.
    pub fn density(&self, i: usize) -> DensityField<T> {
        inverse_transform(&self.snapshots[i])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub(crate) fn validate_times<T: Real>(times: &[T]) -> Result<()> {
    if times.is_empty() {
        return Err(invalid("times", "at least one time is required"));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(invalid("times", "times must be strictly increasing"));
        }
    }
    if !(times[0] >= T::zero()) || !times[times.len() - 1].is_finite() {
        return Err(invalid("times", "times must be finite and non-negative"));
    }
    Ok(())
}

/// Modes grouped by bitwise-equal `k·k`, so per-mode work that depends only on
/// `k·k` runs once per group.
pub(crate) struct KSquaredGroups<T> {
    pub values: Vec<T>,
    pub group_of: Vec<usize>,
}

impl<T: Real> KSquaredGroups<T> {
    pub fn new(grid: &SpatialGrid<T>) -> Self {
        let k2: Vec<T> = (0..grid.node_count()).map(|j| grid.k_squared(j)).collect();
        let mut values = k2.clone();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        values.dedup();
        let group_of = k2
            .iter()
            .map(|v| {
                values
                    .binary_search_by(|probe| probe.partial_cmp(v).unwrap_or(std::cmp::Ordering::Equal))
                    .unwrap_or(0)
            })
            .collect();
        Self { values, group_of }
    }
}

/// The heat equation `∂_t ψ = ∇·∇ψ`, `E(k) = -k·k`.
pub fn heat_dispersion<T: Real>() -> DispersionRelation<T> {
    DispersionRelation::Closed(ClosedForm::WeylFractional {
        order: FracOrder::new(T::one()).expect("1 is a valid order"),
    })
}

/// `E(k)` at every grid mode, rejecting growing modes.
pub fn dispersion_on_grid<T: Real>(grid: &SpatialGrid<T>, e: &DispersionRelation<T>) -> Result<Vec<Complex<T>>> {
    let values: Result<Vec<Complex<T>>> = (0..grid.node_count())
        .into_par_iter()
        .map(|j| {
            let k = grid.wave_vector(j);
            let v = e.eval(&k)?;
            if v.re > T::zero() || !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::UnboundedDispersion {
                    k: k.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect(),
                    re_e: v.re.to_f64().unwrap_or(f64::NAN),
                });
            }
            Ok(v)
        })
        .collect();
    values
}

fn propagate_modes<T: Real>(spec: &SpectralField<T>, evals: &[Complex<T>], t: T) -> SpectralField<T> {
    if t == T::zero() {
        return spec.clone();
    }
    spec.map_modes(|j, m| m * (evals[j] * t).exp())
}

/// `(Fψ)(t, k) = (Fψ)(0, k) exp[t E(k)]` at each requested time.
pub fn spectral_propagate<T: Real>(
    psi0: &DensityField<T>,
    e: &DispersionRelation<T>,
    times: &[T],
) -> Result<EvolutionResult<T>> {
    validate_times(times)?;
    let spec = forward_transform(psi0);
    let evals = dispersion_on_grid(psi0.grid(), e)?;
    let snapshots = times.iter().map(|&t| propagate_modes(&spec, &evals, t)).collect();
    EvolutionResult::new(times.to_vec(), snapshots, Provenance::Spectral, BTreeMap::new())
}

/// A solver that maps an initial spectrum to spectra at later times.
pub trait Evolver<T: Real> {
    fn evolve_spectrum(&self, spec: &SpectralField<T>, times: &[T]) -> Result<Vec<SpectralField<T>>>;
}

/// Exact translation-invariant evolution as an [`Evolver`].
pub struct SpectralEvolver<'a, T> {
    pub dispersion: &'a DispersionRelation<T>,
}

impl<T: Real> Evolver<T> for SpectralEvolver<'_, T> {
    fn evolve_spectrum(&self, spec: &SpectralField<T>, times: &[T]) -> Result<Vec<SpectralField<T>>> {
        validate_times(times)?;
        let evals = dispersion_on_grid(spec.grid(), self.dispersion)?;
        Ok(times.iter().map(|&t| propagate_modes(spec, &evals, t)).collect())
    }
}

/// Max-norm difference between evolving to `t1 + t2` directly and restarting
/// the solver at `t1` from the state reached there.
pub fn propagator_compose_check<T: Real, E: Evolver<T> + ?Sized>(
    evolver: &E,
    psi0: &DensityField<T>,
    t1: T,
    t2: T,
) -> Result<T> {
    if !(t1 >= T::zero() && t2 >= T::zero()) {
        return Err(invalid("times", "t1 and t2 must be non-negative"));
    }
    let spec = forward_transform(psi0);
    let direct = evolver.evolve_spectrum(&spec, &[t1 + t2])?.remove(0);
    let halfway = evolver.evolve_spectrum(&spec, &[t1])?.remove(0);
    let restarted = evolver.evolve_spectrum(&halfway, &[t2])?.remove(0);
    Ok(direct.max_abs_diff(&restarted))
}

/// `G(t, k) = -θ(t) exp(-k·k t)` with `θ(0) = 1`.
pub fn greens_function<T: Real>(t: T, k: &[T]) -> T {
    if t < T::zero() {
        return T::zero();
    }
    let kk = k.iter().fold(T::zero(), |acc, &x| acc + x * x);
    -(-kk * t).exp()
}

/// `Var(t) = Var(0) + 2d t^β / Γ(1 + β)`.
pub fn exact_variance<T: Real>(t: T, dim: usize, beta: T, var0: T) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(invalid("t", "must be non-negative"));
    }
    if !(beta > T::zero()) {
        return Err(invalid("beta", "must be positive"));
    }
    Ok(var0 + T::lit(2.0) * T::from_usize_lossy(dim) * t.powf(beta) / gamma(T::one() + beta))
}

/// First-order expansion around `β = 1 - ε`:
/// `Var(0) + 2dt - 2dε(γt + t ln t - t)`.
pub fn perturbative_variance<T: Real>(t: T, dim: usize, epsilon: T, var0: T) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(invalid("t", "must be non-negative"));
    }
    let two_d = T::lit(2.0) * T::from_usize_lossy(dim);
    // t ln t → 0 as t → 0.
    let t_ln_t = if t == T::zero() { T::zero() } else { t * t.ln() };
    Ok(var0 + two_d * t - two_d * epsilon * (T::lit(EULER_GAMMA) * t + t_ln_t - t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_gaussian;

    fn gaussian() -> DensityField<f64> {
        let g = SpatialGrid::new(1, 256, 40.0).unwrap();
        make_gaussian(&g, &[0.0], 1.0).unwrap()
    }

    #[test]
    fn heat_spectrum_is_gaussian() {
        let psi = gaussian();
        let run = spectral_propagate(&psi, &heat_dispersion(), &[0.0, 0.5, 2.0]).unwrap();
        assert_eq!(run.snapshots()[0], forward_transform(&psi));
        let g = psi.grid();
        for (i, &t) in run.times().iter().enumerate() {
            for j in 0..g.node_count() {
                let k = g.wavenumber(j);
                let want = (-k * k / 2.0 - k * k * t).exp();
                assert!((run.snapshots()[i].modes()[j] - Complex::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn drift_keeps_modulus() {
        let psi = gaussian();
        let drift = DispersionRelation::Closed(ClosedForm::DriftDiffusion {
            drift: vec![1.0],
            diffusivity: 0.0,
            cubic: 0.0,
        });
        let run = spectral_propagate(&psi, &drift, &[0.0, 3.0]).unwrap();
        for (a, b) in run.snapshots()[0].modes().iter().zip(run.snapshots()[1].modes()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
        // Density translated by v t = 3: peak moves from r = 0 to r = 3.
        let rho = run.density(1);
        let g = rho.grid();
        let (argmax, _) = rho
            .values()
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |(bi, bv), (i, v)| if v.re > bv { (i, v.re) } else { (bi, bv) });
        assert!((g.coordinate(argmax) - 3.0).abs() < g.spacing());
    }

    #[test]
    fn rejects_growing_dispersion() {
        let psi = gaussian();
        let growing = DispersionRelation::Closed(ClosedForm::DriftDiffusion {
            drift: vec![0.0],
            diffusivity: -1.0,
            cubic: 0.0,
        });
        assert!(matches!(
            spectral_propagate(&psi, &growing, &[1.0]),
            Err(Error::UnboundedDispersion { .. })
        ));
        assert!(spectral_propagate(&psi, &heat_dispersion(), &[1.0, 0.5]).is_err());
    }

    #[test]
    fn semigroup_for_spectral() {
        let psi = gaussian();
        let heat = heat_dispersion();
        let ev = SpectralEvolver { dispersion: &heat };
        assert!(propagator_compose_check(&ev, &psi, 1.0, 1.0).unwrap() <= 1e-12);
        assert_eq!(propagator_compose_check(&ev, &psi, 0.0, 1.3).unwrap(), 0.0);
    }

    #[test]
    fn greens_function_values() {
        assert_eq!(greens_function(-0.5, &[1.0]), 0.0);
        assert_eq!(greens_function(1.0, &[0.0]), -1.0);
        assert_eq!(greens_function(0.0, &[2.0]), -1.0);
        // dG/dt + k² G = 0 away from t = 0.
        let k = [1.3f64];
        for t in [0.2, 1.0, 3.0] {
            let h = 1e-4;
            let dg = (greens_function(t + h, &k) - greens_function(t - h, &k)) / (2.0 * h);
            assert!((dg + 1.69 * greens_function(t, &k)).abs() < 1e-6);
        }
    }

    #[test]
    fn variance_formulas() {
        assert_eq!(exact_variance(3.0, 2, 1.0, 1.0).unwrap(), 13.0);
        assert_eq!(perturbative_variance(3.0, 2, 0.0, 1.0).unwrap(), 13.0);
        let v = exact_variance(1.0, 1, 0.5, 0.0).unwrap();
        assert!((v - 4.0 / std::f64::consts::PI.sqrt()).abs() < 1e-14);
        let e = std::f64::consts::E;
        let eps = 0.05;
        let p = perturbative_variance(e, 1, eps, 0.0).unwrap();
        assert!((p - 2.0 * e * (1.0 - eps * EULER_GAMMA)).abs() < 1e-13);
        let x = exact_variance(e, 1, 1.0 - eps, 0.0).unwrap();
        assert!((p - x).abs() <= 4.0 * eps * eps * e);
    }
}
