//! Moments, cumulants and their time dependence.
//!
//! Raw moments `M(α) = ∫ψ ∏ (r^j)^{α_j} / ∫ψ` come from grid quadrature;
//! cumulants follow from central moments through the multivariate
//! moment-to-cumulant recursion. The spectral route,
//! `M(α) = [∏(i∂_{k_j})^{α_j} Fψ](0) / Fψ(0)`, is available as a cross-check.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::multi_indices;
use crate::error::{invalid, Error, Result};
use crate::evolution::EvolutionResult;
use crate::grid::{fourier_at, quadrature, DensityField};
use crate::numeric::fd::richardson;
use crate::numeric::lsq::{linear_fit, polyfit};
use crate::numeric::sum::{sum, ComplexSum};
use crate::scalar::Real;

type C<T> = Complex<T>;

/// Highest supported moment order.
pub const MAX_MOMENT_ORDER: u32 = 4;

/// Multi-index `α` of a moment, one entry per axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MomentSpec {
    alpha: Vec<u32>,
}

impl MomentSpec {
    pub fn new(alpha: Vec<u32>) -> Result<Self> {
        if alpha.is_empty() || alpha.len() > 2 {
            return Err(invalid("alpha", "one entry per axis (1 or 2 axes)"));
        }
        let degree: u32 = alpha.iter().sum();
        if degree > MAX_MOMENT_ORDER {
            return Err(invalid("alpha", format!("degree {degree} exceeds {MAX_MOMENT_ORDER}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> &[u32] {
        &self.alpha
    }

    /// `deg(α) = Σ_j α_j`.
    pub fn degree(&self) -> u32 {
        self.alpha.iter().sum()
    }
}

fn check_dim<T: Real>(field: &DensityField<T>, spec: &MomentSpec) -> Result<()> {
    if spec.alpha.len() != field.grid().dim() {
        return Err(invalid(
            "alpha",
            format!("has {} entries for a {}-dimensional grid", spec.alpha.len(), field.grid().dim()),
        ));
    }
    Ok(())
}

/// `∫ψ`, rejected when it is negligible against `∫|ψ|`.
fn normalization<T: Real>(field: &DensityField<T>) -> Result<C<T>> {
    let total = quadrature(field);
    let mass = sum(field.values().iter().map(|v| v.norm())) * field.grid().cell_volume();
    if !(total.norm() > T::lit(1e-12) * mass) {
        return Err(Error::ZeroNormalization {
            magnitude: total.norm().to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(total)
}

/// `∫ψ ∏(r^j - c_j)^{α_j}` by compensated quadrature.
fn weighted_integral<T: Real>(field: &DensityField<T>, alpha: &[u32], center: &[T]) -> C<T> {
    let grid = field.grid();
    let mut acc = ComplexSum::new();
    for (j, &v) in field.values().iter().enumerate() {
        let r = grid.position(j);
        let mut w = T::one();
        for (axis, &p) in alpha.iter().enumerate() {
            w = w * (r[axis] - center[axis]).powi(p as i32);
        }
        acc.add(v * w);
    }
    acc.value() * grid.cell_volume()
}

/// Normalized raw moment `M(α)`.
pub fn raw_moment<T: Real>(field: &DensityField<T>, spec: &MomentSpec) -> Result<C<T>> {
    check_dim(field, spec)?;
    let norm = normalization(field)?;
    let origin = vec![T::zero(); field.grid().dim()];
    Ok(weighted_integral(field, &spec.alpha, &origin) / norm)
}

/// `M(α)` from derivatives of the transform at `k = 0`: central differences
/// with step `h` refined by Richardson extrapolation.
pub fn raw_moment_spectral<T: Real>(field: &DensityField<T>, spec: &MomentSpec, h: T) -> Result<C<T>> {
    check_dim(field, spec)?;
    let norm = normalization(field)?;
    let origin = vec![T::zero(); field.grid().dim()];
    let f = |k: &[T]| fourier_at(field, k);
    let r = richardson(&f, &origin, &spec.alpha, h, 3);
    let i_pow = C::new(T::zero(), T::one()).powi(spec.degree() as i32);
    Ok(i_pow * r.value / norm)
}

/// Cumulants for every multi-index up to a given order.
#[derive(Debug, Clone, PartialEq)]
pub struct Cumulants<T> {
    pub entries: Vec<(Vec<u32>, C<T>)>,
    /// `Σ_j κ_{2e_j}`.
    pub variance: C<T>,
}

impl<T: Real> Cumulants<T> {
    pub fn get(&self, alpha: &[u32]) -> Option<C<T>> {
        self.entries.iter().find(|(a, _)| a.as_slice() == alpha).map(|e| e.1)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Cumulants `κ_α`, `1 ≤ |α| ≤ max_order`, and the variance trace.
///
/// Central moments about the mean feed the recursion
/// `κ_{γ+e_i} = m_{γ+e_i} - Σ_{β≤γ, β≠γ} C(γ,β) κ_{β+e_i} m_{γ-β}`; the first
/// cumulants are then reset to the mean, the only ones a shift changes.
pub fn cumulants<T: Real>(field: &DensityField<T>, max_order: u32) -> Result<Cumulants<T>> {
    if max_order == 0 || max_order > MAX_MOMENT_ORDER {
        return Err(invalid("max_order", format!("must lie in 1..={MAX_MOMENT_ORDER}")));
    }
    let dim = field.grid().dim();
    let norm = normalization(field)?;
    let origin = vec![T::zero(); dim];
    let mean_c: Vec<C<T>> = (0..dim)
        .map(|a| {
            let mut e = vec![0u32; dim];
            e[a] = 1;
            weighted_integral(field, &e, &origin) / norm
        })
        .collect();
    // Real centering keeps the quadrature weights real; the recursion absorbs
    // any imaginary part of the mean.
    let center: Vec<T> = mean_c.iter().map(|m| m.re).collect();
    let indices = multi_indices(dim, max_order);
    let moments: Vec<C<T>> = indices
        .par_iter()
        .map(|a| weighted_integral(field, a, &center) / norm)
        .collect();
    let moment = |a: &[u32]| -> C<T> {
        if a.iter().all(|&p| p == 0) {
            return C::new(T::one(), T::zero());
        }
        let pos = indices.iter().position(|x| x.as_slice() == a).expect("index enumerated");
        moments[pos]
    };
    let mut kappa: Vec<(Vec<u32>, C<T>)> = Vec::with_capacity(indices.len());
    for target in &indices {
        // Split target = γ + e_i with i the first non-zero axis.
        let i = target.iter().position(|&p| p > 0).expect("order ≥ 1");
        let mut gamma = target.clone();
        gamma[i] -= 1;
        let mut value = moment(target);
        for beta in sub_indices(&gamma) {
            if beta == gamma {
                continue;
            }
            let mut coefficient = 1.0;
            for (g, b) in gamma.iter().zip(&beta) {
                coefficient *= binomial(*g, *b);
            }
            let mut beta_ei = beta.clone();
            beta_ei[i] += 1;
            let rest: Vec<u32> = gamma.iter().zip(&beta).map(|(g, b)| g - b).collect();
            let k = kappa
                .iter()
                .find(|(a, _)| *a == beta_ei)
                .map(|e| e.1)
                .expect("lower orders computed first");
            value = value - k * moment(&rest) * T::lit(coefficient);
        }
        kappa.push((target.clone(), value));
    }
    // Undo the centering for first-order cumulants.
    for (a, v) in kappa.iter_mut() {
        if a.iter().sum::<u32>() == 1 {
            let axis = a.iter().position(|&p| p == 1).expect("unit index");
            *v = *v + C::new(center[axis], T::zero());
        }
    }
    let variance = if max_order >= 2 {
        (0..dim).fold(C::new(T::zero(), T::zero()), |acc, a| {
            let mut e = vec![0u32; dim];
            e[a] = 2;
            acc + kappa.iter().find(|(x, _)| *x == e).map(|e| e.1).unwrap_or_default()
        })
    } else {
        C::new(T::nan(), T::nan())
    };
    Ok(Cumulants {
        entries: kappa,
        variance,
    })
}

fn sub_indices(gamma: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &g in gamma {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=g).map(move |b| {
                    let mut p = prefix.clone();
                    p.push(b);
                    p
                })
            })
            .collect();
    }
    out
}

/// What a series tracks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "alpha")]
pub enum MomentKind {
    Raw(Vec<u32>),
    Connected(Vec<u32>),
    Variance,
}

/// A tracked moment over the snapshots of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries<T> {
    pub kind: MomentKind,
    pub times: Vec<T>,
    pub values: Vec<C<T>>,
    /// Set where the value is not converged with respect to the box size.
    pub divergent: Vec<bool>,
}

impl<T: Real> MomentSeries<T> {
    pub fn new(kind: MomentKind, times: Vec<T>, values: Vec<C<T>>, divergent: Vec<bool>) -> Result<Self> {
        if times.len() != values.len() || times.len() != divergent.len() {
            return Err(invalid("series", "times, values and flags must have equal length"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("series", "times must be strictly increasing"));
        }
        Ok(Self {
            kind,
            times,
            values,
            divergent,
        })
    }

    pub fn real_values(&self) -> Vec<T> {
        self.values.iter().map(|v| v.re).collect()
    }
}

fn per_snapshot<T: Real>(
    run: &EvolutionResult<T>,
    f: impl Fn(&DensityField<T>) -> Result<C<T>> + Sync,
) -> Result<Vec<C<T>>> {
    (0..run.len()).into_par_iter().map(|i| f(&run.density(i))).collect()
}

/// Relative change above which a value counts as box-size dependent.
pub const DIVERGENCE_THRESHOLD: f64 = 0.01;

fn flags<T: Real>(values: &[C<T>], companion: Option<&[C<T>]>) -> Vec<bool> {
    match companion {
        None => vec![false; values.len()],
        Some(other) => values
            .iter()
            .zip(other)
            .map(|(a, b)| {
                let scale = a.norm().max(b.norm());
                scale > T::zero() && (*a - *b).norm() > T::lit(DIVERGENCE_THRESHOLD) * scale
                    || !a.re.is_finite()
            })
            .collect(),
    }
}

fn check_companion<T: Real>(run: &EvolutionResult<T>, companion: Option<&EvolutionResult<T>>) -> Result<()> {
    if let Some(c) = companion {
        if c.times() != run.times() {
            return Err(invalid("companion", "the doubled-box run must use the same times"));
        }
    }
    Ok(())
}

/// Variance at each snapshot. With a `companion` run on a doubled box, times
/// whose variance changes by more than 1% are flagged divergent.
pub fn variance_series<T: Real>(
    run: &EvolutionResult<T>,
    companion: Option<&EvolutionResult<T>>,
) -> Result<MomentSeries<T>> {
    check_companion(run, companion)?;
    let f = |d: &DensityField<T>| cumulants(d, 2).map(|c| c.variance);
    let values = per_snapshot(run, f)?;
    let other = companion.map(|c| per_snapshot(c, f)).transpose()?;
    let divergent = flags(&values, other.as_deref());
    MomentSeries::new(MomentKind::Variance, run.times().to_vec(), values, divergent)
}

/// Cumulant `κ_α` at each snapshot, flagged as in [`variance_series`].
pub fn cumulant_series<T: Real>(
    run: &EvolutionResult<T>,
    spec: &MomentSpec,
    companion: Option<&EvolutionResult<T>>,
) -> Result<MomentSeries<T>> {
    check_companion(run, companion)?;
    let order = spec.degree().max(1);
    let f = |d: &DensityField<T>| {
        cumulants(d, order)?
            .get(spec.alpha())
            .ok_or_else(|| invalid("alpha", "multi-index does not match the grid dimension"))
    };
    let values = per_snapshot(run, f)?;
    let other = companion.map(|c| per_snapshot(c, f)).transpose()?;
    let divergent = flags(&values, other.as_deref());
    MomentSeries::new(MomentKind::Connected(spec.alpha().to_vec()), run.times().to_vec(), values, divergent)
}

/// Raw moment `M(α)` at each snapshot.
pub fn raw_moment_series<T: Real>(run: &EvolutionResult<T>, spec: &MomentSpec) -> Result<MomentSeries<T>> {
    let values = per_snapshot(run, |d| raw_moment(d, spec))?;
    let n = values.len();
    MomentSeries::new(MomentKind::Raw(spec.alpha().to_vec()), run.times().to_vec(), values, vec![false; n])
}

/// `Var(t) - Var(0) ≈ C t^α` on a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit<T> {
    #[serde(rename = "C")]
    pub amplitude: T,
    #[serde(rename = "alpha")]
    pub exponent: T,
    #[serde(rename = "r2")]
    pub r_squared: T,
    pub window: [T; 2],
    pub points: usize,
}

/// Minimum number of samples inside a fit window.
pub const MIN_FIT_POINTS: usize = 8;

/// Least squares on `(ln t, ln(Var - var0))`. The default window is
/// `[t_last/4, t_last]`.
pub fn fit_power_law<T: Real>(series: &MomentSeries<T>, var0: T, window: Option<(T, T)>) -> Result<PowerLawFit<T>> {
    let t_last = *series
        .times
        .last()
        .ok_or_else(|| invalid("series", "series is empty"))?;
    let (lo, hi) = window.unwrap_or((t_last * T::lit(0.25), t_last));
    if !(lo > T::zero() && hi > lo) {
        return Err(invalid("analysis.fit_window", format!("[{lo}, {hi}] must satisfy 0 < t_min < t_max")));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for ((&t, v), &div) in series.times.iter().zip(&series.values).zip(&series.divergent) {
        if t < lo || t > hi {
            continue;
        }
        if div {
            return Err(invalid("series", format!("value at t = {t} is flagged divergent")));
        }
        let excess = v.re - var0;
        if !(excess > T::zero()) {
            return Err(invalid(
                "series",
                format!("excess variance {excess} at t = {t} is not positive"),
            ));
        }
        x.push(t.ln());
        y.push(excess.ln());
    }
    if x.len() < MIN_FIT_POINTS {
        return Err(invalid(
            "analysis.fit_window",
            format!("{} points in window, need at least {MIN_FIT_POINTS}", x.len()),
        ));
    }
    let line = linear_fit(&x, &y)?;
    Ok(PowerLawFit {
        amplitude: line.intercept.exp(),
        exponent: line.slope,
        r_squared: line.r_squared,
        window: [lo, hi],
        points: x.len(),
    })
}

/// Result of testing whether a series is a polynomial of a given degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeCheck<T> {
    pub degree: usize,
    /// `‖residual‖ / ‖values‖` of the degree-`degree` fit.
    pub residual: T,
    /// Same for one degree higher.
    pub residual_next: T,
    pub pass: bool,
}

/// Residual below which a fit is exact to round-off and passes outright,
/// relative to the series RMS but never to less than 1, so a series that is
/// zero up to round-off counts as a polynomial of any degree.
pub const ROUND_OFF_FLOOR: f64 = 1e-10;

/// Fits degrees `degree` and `degree + 1` to the real part of `series`.
/// Passes when the first fit's relative residual is at most `1e-4` and the
/// extra degree improves it by less than 10×.
pub fn polynomial_degree_check<T: Real>(series: &MomentSeries<T>, degree: usize) -> Result<DegreeCheck<T>> {
    if series.times.len() < degree + 3 {
        return Err(invalid(
            "series",
            format!("{} points are too few for degree {degree}", series.times.len()),
        ));
    }
    let y = series.real_values();
    let norm = sum(y.iter().map(|v| *v * *v)).sqrt();
    let scale = norm.max(T::min_positive_value());
    let low_abs = polyfit(&series.times, &y, degree)?.residual_norm();
    let low = low_abs / scale;
    let high = polyfit(&series.times, &y, degree + 1)?.residual_norm() / scale;
    let rms_floor = (norm / T::from_usize_lossy(y.len()).sqrt()).max(T::one());
    let exact = low_abs / T::from_usize_lossy(y.len()).sqrt() <= T::lit(ROUND_OFF_FLOOR) * rms_floor;
    let pass = exact || (low <= T::lit(1e-4) && low < T::lit(10.0) * high);
    Ok(DegreeCheck {
        degree,
        residual: low,
        residual_next: high,
        pass,
    })
}
