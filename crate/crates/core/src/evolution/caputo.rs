//! Solvers for `D^C_β ψ = ∇·∇ψ`, `0 < β < 1`, with the memory integral based
//! at `t = 0`. Per mode the equation reads `D^C_β u = -k·k u`.

use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;

use super::mittag_leffler::mittag_leffler;
use super::{validate_times, EvolutionResult, Evolver, KSquaredGroups, Provenance};
use crate::error::{invalid, Result};
use crate::fractional_ops::{grid_steps, l1_weights, FracOrder};
use crate::grid::{forward_transform, DensityField, SpectralField};
use crate::numeric::special::gamma;
use crate::scalar::Real;

fn require_caputo_order<T: Real>(order: &FracOrder<T>, allow_one: bool) -> Result<()> {
    let b = order.beta();
    let ok = if allow_one { b <= T::one() } else { b < T::one() };
    if ok {
        Ok(())
    } else {
        Err(invalid("beta", format!("Caputo diffusion needs β in (0, 1), got {b}")))
    }
}

fn exact_spectra<T: Real>(spec: &SpectralField<T>, order: &FracOrder<T>, times: &[T]) -> Result<Vec<SpectralField<T>>> {
    let groups = KSquaredGroups::new(spec.grid());
    let beta = order.beta();
    times
        .iter()
        .map(|&t| {
            if t == T::zero() {
                return Ok(spec.clone());
            }
            let tb = if beta == T::one() { t } else { t.powf(beta) };
            let factors: Result<Vec<T>> = groups
                .values
                .par_iter()
                .map(|&k2| mittag_leffler(beta, -k2 * tb))
                .collect();
            let factors = factors?;
            Ok(spec.map_modes(|j, m| m * factors[groups.group_of[j]]))
        })
        .collect()
}

/// `(Fψ)(t, k) = (Fψ)(0, k) E_β(-k·k t^β)`; `β = 1` is accepted and reduces
/// to the heat propagator.
pub fn caputo_exact_spectral<T: Real>(
    psi0: &DensityField<T>,
    order: &FracOrder<T>,
    times: &[T],
) -> Result<EvolutionResult<T>> {
    require_caputo_order(order, true)?;
    validate_times(times)?;
    let spec = forward_transform(psi0);
    let snapshots = exact_spectra(&spec, order, times)?;
    let mut params = BTreeMap::new();
    params.insert("beta".to_string(), order.beta().to_f64().unwrap_or(f64::NAN));
    EvolutionResult::new(times.to_vec(), snapshots, Provenance::CaputoExact, params)
}

/// Groups per parallel work item in the L1 recurrence.
const CHUNK: usize = 64;

/// Runs the implicit L1 recurrence for unit initial data on each `k·k` in
/// `k2`, returning `u` at steps `0, stride, 2·stride, ..., n_steps`
/// (`n_steps` always included), one row per output step.
fn l1_recurrence<T: Real>(beta: T, dt: T, k2: &[T], n_steps: usize, outputs: &[usize]) -> Vec<Vec<T>> {
    let weights = l1_weights(beta, n_steps.max(1));
    let scale = gamma(T::lit(2.0) - beta) * dt.powf(beta);
    let chunks: Vec<Vec<Vec<T>>> = k2
        .par_chunks(CHUNK)
        .map(|chunk| {
            let width = chunk.len();
            let denom: Vec<T> = chunk.iter().map(|&k| T::one() + scale * k).collect();
            // increments[m] = u_m - u_{m-1}, row-major by step.
            let mut increments = vec![T::zero(); (n_steps + 1) * width];
            let mut u = vec![T::one(); width];
            let mut acc = vec![T::zero(); width];
            let mut out = Vec::with_capacity(outputs.len());
            let mut next_output = 0;
            if outputs.first() == Some(&0) {
                out.push(u.clone());
                next_output = 1;
            }
            for n in 1..=n_steps {
                acc.iter_mut().for_each(|a| *a = T::zero());
                // Σ_{j=1}^{n-1} b_j (u_{n-j} - u_{n-j-1})
                for j in 1..n {
                    let b = weights[j];
                    let row = &increments[(n - j) * width..(n - j + 1) * width];
                    for (a, &d) in acc.iter_mut().zip(row) {
                        *a = *a + b * d;
                    }
                }
                let row = &mut increments[n * width..(n + 1) * width];
                for i in 0..width {
                    let next = (u[i] - acc[i]) / denom[i];
                    row[i] = next - u[i];
                    u[i] = next;
                }
                if next_output < outputs.len() && outputs[next_output] == n {
                    out.push(u.clone());
                    next_output += 1;
                }
            }
            out
        })
        .collect();
    // Re-assemble rows in group order.
    (0..outputs.len())
        .map(|r| chunks.iter().flat_map(|c| c[r].iter().copied()).collect())
        .collect()
}

fn output_steps(n_steps: usize, stride: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (0..=n_steps).step_by(stride).collect();
    if steps.last() != Some(&n_steps) {
        steps.push(n_steps);
    }
    steps
}

/// Implicit L1 time stepping, per mode
///
/// ```text
/// dt^{-β}/Γ(2-β) [u_n - u_{n-1} + Σ_{j=1}^{n-1} b_j (u_{n-j} - u_{n-j-1})] = -k·k u_n,
/// ```
///
/// with `b_j = (j+1)^{1-β} - j^{1-β}`. Snapshots are kept every `stride`
/// steps and at the final step.
pub fn caputo_l1_evolve<T: Real>(
    psi0: &DensityField<T>,
    order: &FracOrder<T>,
    dt: T,
    n_steps: usize,
    stride: usize,
) -> Result<EvolutionResult<T>> {
    require_caputo_order(order, false)?;
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    if n_steps == 0 {
        return Err(invalid("n_steps", "must be at least 1"));
    }
    if stride == 0 {
        return Err(invalid("snapshot_stride", "must be at least 1"));
    }
    let spec = forward_transform(psi0);
    let (times, snapshots) = l1_spectra(&spec, order, dt, n_steps, stride);
    let mut params = BTreeMap::new();
    params.insert("beta".to_string(), order.beta().to_f64().unwrap_or(f64::NAN));
    params.insert("dt".to_string(), dt.to_f64().unwrap_or(f64::NAN));
    EvolutionResult::new(times, snapshots, Provenance::CaputoL1, params)
}

fn l1_spectra<T: Real>(
    spec: &SpectralField<T>,
    order: &FracOrder<T>,
    dt: T,
    n_steps: usize,
    stride: usize,
) -> (Vec<T>, Vec<SpectralField<T>>) {
    let groups = KSquaredGroups::new(spec.grid());
    let steps = output_steps(n_steps, stride);
    let rows = l1_recurrence(order.beta(), dt, &groups.values, n_steps, &steps);
    let times = steps.iter().map(|&n| T::from_usize_lossy(n) * dt).collect();
    let snapshots = rows
        .iter()
        .zip(&steps)
        .map(|(row, &n)| {
            if n == 0 {
                spec.clone()
            } else {
                spec.map_modes(|j, m| m * row[groups.group_of[j]])
            }
        })
        .collect();
    (times, snapshots)
}

/// Mittag-Leffler solution as an [`Evolver`].
pub struct CaputoExactEvolver<T> {
    pub order: FracOrder<T>,
}

impl<T: Real> Evolver<T> for CaputoExactEvolver<T> {
    fn evolve_spectrum(&self, spec: &SpectralField<T>, times: &[T]) -> Result<Vec<SpectralField<T>>> {
        require_caputo_order(&self.order, true)?;
        validate_times(times)?;
        exact_spectra(spec, &self.order, times)
    }
}

/// L1 scheme as an [`Evolver`]; requested times must be whole multiples of `dt`.
pub struct CaputoL1Evolver<T> {
    pub order: FracOrder<T>,
    pub dt: T,
}

impl<T: Real> Evolver<T> for CaputoL1Evolver<T> {
    fn evolve_spectrum(&self, spec: &SpectralField<T>, times: &[T]) -> Result<Vec<SpectralField<T>>> {
        require_caputo_order(&self.order, false)?;
        validate_times(times)?;
        times
            .iter()
            .map(|&t| {
                let n = grid_steps(t, self.dt)? as usize;
                if n == 0 {
                    return Ok(spec.clone());
                }
                let (_, mut snaps) = l1_spectra(spec, &self.order, self.dt, n, n);
                Ok(snaps.pop().expect("final step is always emitted"))
            })
            .collect()
    }
}

/// `max_k |a - b| / max_k |b|` over all snapshots of two runs on equal times.
pub fn max_relative_spectral_error<T: Real>(a: &EvolutionResult<T>, b: &EvolutionResult<T>) -> Result<T> {
    if a.times().len() != b.times().len() {
        return Err(invalid("runs", "runs must have the same number of snapshots"));
    }
    let mut worst = T::zero();
    for (x, y) in a.snapshots().iter().zip(b.snapshots()) {
        let scale = y.max_abs();
        if scale > T::zero() {
            worst = worst.max(x.max_abs_diff(y) / scale);
        }
    }
    Ok(worst)
}

/// Unit-amplitude single-mode L1 solution at `k·k = k2`, for convergence studies.
pub fn l1_single_mode<T: Real>(order: &FracOrder<T>, k2: T, dt: T, n_steps: usize) -> Result<Vec<Complex<T>>> {
    require_caputo_order(order, false)?;
    let steps: Vec<usize> = (0..=n_steps).collect();
    let rows = l1_recurrence(order.beta(), dt, &[k2], n_steps, &steps);
    Ok(rows.into_iter().map(|r| Complex::new(r[0], T::zero())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{heat_dispersion, propagator_compose_check, spectral_propagate};
    use crate::grid::{make_gaussian, SpatialGrid};

    fn gaussian(n: usize, l: f64) -> DensityField<f64> {
        make_gaussian(&SpatialGrid::new(1, n, l).unwrap(), &[0.0], 1.0).unwrap()
    }

    #[test]
    fn exact_at_one_matches_heat() {
        let psi = gaussian(128, 30.0);
        let times = [0.0, 0.3, 1.0, 2.5];
        let a = caputo_exact_spectral(&psi, &FracOrder::new(1.0).unwrap(), &times).unwrap();
        let b = spectral_propagate(&psi, &heat_dispersion(), &times).unwrap();
        for (x, y) in a.snapshots().iter().zip(b.snapshots()) {
            assert!(x.max_abs_diff(y) <= 1e-12);
        }
    }

    #[test]
    fn zero_mode_conserved() {
        let psi = gaussian(64, 30.0);
        let order = FracOrder::new(0.6).unwrap();
        let exact = caputo_exact_spectral(&psi, &order, &[0.0, 1.0, 4.0]).unwrap();
        let l1 = caputo_l1_evolve(&psi, &order, 0.01, 200, 50).unwrap();
        let z0 = exact.snapshots()[0].zero_mode();
        for s in exact.snapshots().iter().chain(l1.snapshots()) {
            assert!((s.zero_mode() - z0).norm() <= 1e-12 * z0.norm());
        }
        assert_eq!(l1.times().len(), 5);
    }

    #[test]
    fn l1_near_one_matches_heat() {
        let psi = gaussian(64, 30.0);
        let l1 = caputo_l1_evolve(&psi, &FracOrder::new(0.999).unwrap(), 1e-3, 1000, 1000).unwrap();
        let heat = spectral_propagate(&psi, &heat_dispersion(), l1.times()).unwrap();
        assert!(max_relative_spectral_error(&l1, &heat).unwrap() <= 1e-3);
    }

    #[test]
    fn l1_matches_mittag_leffler() {
        let psi = gaussian(64, 30.0);
        let order = FracOrder::new(0.7).unwrap();
        let l1 = caputo_l1_evolve(&psi, &order, 1e-3, 1000, 500).unwrap();
        let exact = caputo_exact_spectral(&psi, &order, l1.times()).unwrap();
        assert!(max_relative_spectral_error(&l1, &exact).unwrap() <= 1e-3);
    }

    #[test]
    fn no_semigroup_for_caputo() {
        let psi = gaussian(128, 40.0);
        let ev = CaputoExactEvolver {
            order: FracOrder::new(0.7).unwrap(),
        };
        let r = propagator_compose_check(&ev, &psi, 1.0, 1.0).unwrap();
        assert!(r > 1e-6, "{r}");
    }

    #[test]
    fn rejects_bad_parameters() {
        let psi = gaussian(64, 30.0);
        let one = FracOrder::new(1.0).unwrap();
        assert!(caputo_l1_evolve(&psi, &one, 0.1, 10, 1).is_err());
        let half = FracOrder::new(0.5).unwrap();
        assert!(caputo_l1_evolve(&psi, &half, 0.0, 10, 1).is_err());
        assert!(caputo_l1_evolve(&psi, &half, 0.1, 10, 0).is_err());
        assert!(caputo_exact_spectral(&psi, &FracOrder::new(1.5).unwrap(), &[1.0]).is_err());
    }
}
