//! Dispersion relations of translation-invariant linear evolutions.
//!
//! A translation-invariant equation `f(D₀, ∇)ψ = 0` acts on a Fourier mode
//! `e^{ik·r}` through the characteristic polynomial `f(s, ik)`. The mode
//! evolves as `e^{t E(k)}` when `f(·, ik)` has exactly one simple zero `E(k)`
//! in the closed left half-plane; every other zero would give a growing or a
//! non-unique solution.

pub mod poly;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fractional_ops::{branch_pow, FracOrder};
use crate::numeric::fd::{richardson, MAX_ORDER};
use crate::scalar::Real;

pub use poly::Polynomial;

type C<T> = Complex<T>;

/// One monomial `coefficient · s^{s_power} · ∏_j (i k_j)^{k_powers[j]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTerm<T> {
    pub coefficient: C<T>,
    pub s_power: usize,
    pub k_powers: Vec<u32>,
}

type CoefficientFn<T> = dyn Fn(&[T]) -> Vec<C<T>> + Send + Sync;

/// `f(s, ik) = Σ_i c_i(k) s^i` with `k`-dependent coefficients.
#[derive(Clone)]
pub struct CharPolynomial<T> {
    degree: usize,
    coefficients: Arc<CoefficientFn<T>>,
}

impl<T> fmt::Debug for CharPolynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CharPolynomial").field("degree", &self.degree).finish_non_exhaustive()
    }
}

impl<T: Real> CharPolynomial<T> {
    /// Coefficients from a callback returning `degree + 1` values, ascending in `s`.
    pub fn new(degree: usize, coefficients: impl Fn(&[T]) -> Vec<C<T>> + Send + Sync + 'static) -> Result<Self> {
        if degree == 0 {
            return Err(invalid("degree", "characteristic polynomial must have degree ≥ 1"));
        }
        Ok(Self {
            degree,
            coefficients: Arc::new(coefficients),
        })
    }

    /// Polynomial symbol built from monomials in `s` and `ik`.
    pub fn from_terms(terms: Vec<SymbolTerm<T>>) -> Result<Self> {
        let degree = terms.iter().map(|t| t.s_power).max().unwrap_or(0);
        let dim = terms.first().map_or(0, |t| t.k_powers.len());
        if terms.iter().any(|t| t.k_powers.len() != dim) {
            return Err(invalid("terms", "all terms need the same number of k powers"));
        }
        Self::new(degree, move |k| {
            let mut c = vec![C::new(T::zero(), T::zero()); degree + 1];
            for term in &terms {
                let mut m = term.coefficient;
                for (kj, &p) in k.iter().zip(&term.k_powers) {
                    m = m * C::new(T::zero(), *kj).powi(p as i32);
                }
                c[term.s_power] = c[term.s_power] + m;
            }
            c
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// The polynomial in `s` at wavevector `k`; rejects a vanishing leading coefficient.
    pub fn at(&self, k: &[T]) -> Result<Polynomial<T>> {
        let c = (self.coefficients)(k);
        if c.len() != self.degree + 1 {
            return Err(invalid(
                "coefficients",
                format!("expected {} coefficients, got {}", self.degree + 1, c.len()),
            ));
        }
        if c[self.degree].norm() == T::zero() {
            return Err(invalid("coefficients", format!("leading coefficient vanishes at k = {k:?}")));
        }
        Ok(Polynomial::new(c))
    }
}

/// Roots `s_j` with multiplicities `d_j`; the general solution is
/// `Σ_j Σ_{ℓ<d_j} a_{jℓ} t^ℓ e^{s_j t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionBasis<T> {
    pub roots: Vec<(C<T>, usize)>,
}

impl<T: Real> SolutionBasis<T> {
    /// Number of arbitrary constants, equal to the degree.
    pub fn dimension(&self) -> usize {
        self.roots.iter().map(|r| r.1).sum()
    }

    /// Evaluates `Σ a_{jℓ} t^ℓ e^{s_j t}`; `coefficients[j][ℓ]` must match the multiplicities.
    pub fn evaluate(&self, coefficients: &[Vec<C<T>>], t: T) -> Result<C<T>> {
        if coefficients.len() != self.roots.len()
            || coefficients.iter().zip(&self.roots).any(|(a, r)| a.len() != r.1)
        {
            return Err(invalid("coefficients", "shape must match the root multiplicities"));
        }
        let mut acc = C::new(T::zero(), T::zero());
        for (a, (s, _)) in coefficients.iter().zip(&self.roots) {
            let e = (*s * t).exp();
            let mut tp = T::one();
            for &al in a {
                acc = acc + al * e * tp;
                tp = tp * t;
            }
        }
        Ok(acc)
    }
}

pub fn ode_solution_basis<T: Real>(poly: &Polynomial<T>) -> Result<SolutionBasis<T>> {
    Ok(SolutionBasis {
        roots: poly.roots_with_multiplicity()?,
    })
}

/// Whether a wavevector admits exactly one bounded mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniquenessStatus {
    Unique,
    MultipleLhpZeros,
    NonsimpleZero,
    NoLhpZero,
}

impl fmt::Display for UniquenessStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UniquenessStatus::Unique => "unique",
            UniquenessStatus::MultipleLhpZeros => "multiple_lhp_zeros",
            UniquenessStatus::NonsimpleZero => "nonsimple_zero",
            UniquenessStatus::NoLhpZero => "no_lhp_zero",
        })
    }
}

/// Root analysis at one wavevector.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionSample<T> {
    pub k: Vec<T>,
    pub roots: Vec<(C<T>, usize)>,
    /// Selected branch; `None` when no root lies in the closed left half-plane.
    pub e: Option<C<T>>,
    pub status: UniquenessStatus,
    /// A left-half-plane root sits on the imaginary axis (neutral mode).
    pub on_imaginary_axis: bool,
}

/// Named closed-form dispersions.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm<T> {
    /// `E = -i v·k - D k·k + i μ₃ Σ_j k_j³`.
    DriftDiffusion { drift: Vec<T>, diffusivity: T, cubic: T },
    /// `E = -(k·k)^{1/β}`, the Weyl-fractional equation `D^W_β ψ = ∇·∇ψ`.
    WeylFractional { order: FracOrder<T> },
    /// `E = -c |k|^p`.
    Power { coefficient: T, exponent: T },
}

#[derive(Debug, Clone)]
pub struct PolyRootDispersion<T> {
    pub poly: CharPolynomial<T>,
    /// Samples in path order.
    pub samples: Vec<DispersionSample<T>>,
    index: HashMap<Vec<u64>, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDispersion<T> {
    pub samples: Vec<(Vec<T>, C<T>)>,
}

#[derive(Debug, Clone)]
pub enum DispersionRelation<T> {
    Closed(ClosedForm<T>),
    PolyRoot(PolyRootDispersion<T>),
    Tabulated(TabulatedDispersion<T>),
}

fn key<T: Real>(k: &[T]) -> Vec<u64> {
    k.iter().map(|x| x.to_f64().unwrap_or(f64::NAN).to_bits()).collect()
}

fn k_squared<T: Real>(k: &[T]) -> T {
    k.iter().fold(T::zero(), |acc, &x| acc + x * x)
}

fn k_to_f64<T: Real>(k: &[T]) -> Vec<f64> {
    k.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}

impl<T: Real> DispersionRelation<T> {
    /// `E(k)`.
    pub fn eval(&self, k: &[T]) -> Result<C<T>> {
        match self {
            DispersionRelation::Closed(c) => c.eval(k),
            DispersionRelation::PolyRoot(p) => p.eval(k),
            DispersionRelation::Tabulated(t) => t
                .samples
                .iter()
                .find(|(kk, _)| kk.as_slice() == k)
                .map(|s| s.1)
                .ok_or_else(|| invalid("k", format!("no tabulated value at k = {k:?}"))),
        }
    }

    /// Status at `k`; closed and tabulated forms are unique by construction.
    pub fn status(&self, k: &[T]) -> Result<UniquenessStatus> {
        match self {
            DispersionRelation::PolyRoot(p) => Ok(p.sample_at(k)?.status),
            _ => Ok(UniquenessStatus::Unique),
        }
    }
}

impl<T: Real> ClosedForm<T> {
    pub fn eval(&self, k: &[T]) -> Result<C<T>> {
        match self {
            ClosedForm::DriftDiffusion {
                drift,
                diffusivity,
                cubic,
            } => {
                if drift.len() != k.len() {
                    return Err(invalid("drift", "drift and k must have equal dimension"));
                }
                let vk = drift.iter().zip(k).fold(T::zero(), |a, (v, x)| a + *v * *x);
                let k3 = k.iter().fold(T::zero(), |a, &x| a + x * x * x);
                Ok(C::new(-*diffusivity * k_squared(k), *cubic * k3 - vk))
            }
            ClosedForm::WeylFractional { order } => weyl_dispersion(order, k),
            ClosedForm::Power { coefficient, exponent } => {
                let kk = k_squared(k);
                if kk == T::zero() {
                    return Ok(C::new(T::zero(), T::zero()));
                }
                Ok(C::new(-*coefficient * kk.powf(*exponent / T::lit(2.0)), T::zero()))
            }
        }
    }
}

impl<T: Real> PolyRootDispersion<T> {
    fn sample_at(&self, k: &[T]) -> Result<&DispersionSample<T>> {
        self.index
            .get(&key(k))
            .map(|&i| &self.samples[i])
            .ok_or_else(|| invalid("k", format!("k = {k:?} is not in the analysed k-set")))
    }

    /// Selected branch at `k`. Points outside the analysed set are solved
    /// afresh and continued from the nearest analysed sample.
    pub fn eval(&self, k: &[T]) -> Result<C<T>> {
        if let Ok(s) = self.sample_at(k) {
            return selected(s);
        }
        let roots = self.poly.at(k)?.roots_with_multiplicity()?;
        let nearest = self
            .samples
            .iter()
            .filter(|s| s.e.is_some())
            .min_by(|a, b| {
                let da = distance(&a.k, k);
                let db = distance(&b.k, k);
                da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
            })
            .and_then(|s| s.e);
        let sample = classify(k.to_vec(), roots, nearest);
        selected(&sample)
    }

    /// `max_k |f(E(k), ik)| / max|coefficient|` over samples with a selected branch.
    pub fn max_scaled_residual(&self) -> Result<T> {
        let mut worst = T::zero();
        for s in &self.samples {
            if let Some(e) = s.e {
                let p = self.poly.at(&s.k)?;
                worst = worst.max(p.eval(e).norm() / p.max_coefficient());
            }
        }
        Ok(worst)
    }
}

fn distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + (*x - *y) * (*x - *y))
}

fn selected<T: Real>(s: &DispersionSample<T>) -> Result<C<T>> {
    if s.status != UniquenessStatus::Unique {
        return Err(Error::NonUniqueDispersion {
            k: k_to_f64(&s.k),
            status: s.status.to_string(),
        });
    }
    s.e.ok_or_else(|| Error::NonUniqueDispersion {
        k: k_to_f64(&s.k),
        status: s.status.to_string(),
    })
}

/// Tolerance for counting a root as lying on the imaginary axis.
fn axis_tolerance<T: Real>(z: C<T>) -> T {
    T::lit(1e-12) * z.norm().max(T::one())
}

fn classify<T: Real>(k: Vec<T>, roots: Vec<(C<T>, usize)>, previous: Option<C<T>>) -> DispersionSample<T> {
    let lhp: Vec<(C<T>, usize)> = roots
        .iter()
        .copied()
        .filter(|(z, _)| z.re <= axis_tolerance(*z))
        .collect();
    let on_axis = lhp.iter().any(|(z, _)| z.re.abs() <= axis_tolerance(*z));
    let status = match lhp.as_slice() {
        [] => UniquenessStatus::NoLhpZero,
        [(_, 1)] => UniquenessStatus::Unique,
        [(_, _)] => UniquenessStatus::NonsimpleZero,
        _ => UniquenessStatus::MultipleLhpZeros,
    };
    let e = match previous {
        Some(prev) if lhp.len() > 1 => lhp
            .iter()
            .min_by(|a, b| {
                (a.0 - prev)
                    .norm()
                    .partial_cmp(&(b.0 - prev).norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|r| r.0),
        _ => lhp
            .iter()
            .max_by(|a, b| a.0.re.partial_cmp(&b.0.re).unwrap_or(std::cmp::Ordering::Equal))
            .map(|r| r.0),
    };
    // A root with Re s marginally above zero through round-off is pinned to the axis.
    let e = e.map(|z| if z.re > T::zero() { C::new(T::zero(), z.im) } else { z });
    DispersionSample {
        k,
        roots,
        e,
        status,
        on_imaginary_axis: on_axis,
    }
}

fn path_order<T: Real>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Solves `f(s, ik) = 0` on every wavevector of `k_set` and selects `E(k)`.
///
/// Root solves run in parallel; branch selection then walks the k-set in
/// lexicographic order, continuing from the previous branch wherever several
/// roots are admissible.
pub fn find_dispersion<T: Real>(poly: &CharPolynomial<T>, k_set: &[Vec<T>]) -> Result<DispersionRelation<T>> {
    let mut order: Vec<usize> = (0..k_set.len()).collect();
    order.sort_by(|&a, &b| path_order(&k_set[a], &k_set[b]));
    let roots: Result<Vec<Vec<(C<T>, usize)>>> = order
        .par_iter()
        .map(|&i| poly.at(&k_set[i])?.roots_with_multiplicity())
        .collect();
    let mut samples = Vec::with_capacity(order.len());
    let mut index = HashMap::with_capacity(order.len());
    let mut previous = None;
    for (&i, r) in order.iter().zip(roots?) {
        let sample = classify(k_set[i].clone(), r, previous);
        if sample.e.is_some() {
            previous = sample.e;
        }
        index.insert(key(&sample.k), samples.len());
        samples.push(sample);
    }
    Ok(DispersionRelation::PolyRoot(PolyRootDispersion {
        poly: poly.clone(),
        samples,
        index,
    }))
}

/// `E(k) = -(k·k)^{1/β}`, the zero of `[e^{-iπ} E]^β = k·k` on the branch
/// `arg ∈ [0, 2π)`.
pub fn weyl_dispersion<T: Real>(order: &FracOrder<T>, k: &[T]) -> Result<C<T>> {
    let beta = order.beta();
    let kk = k_squared(k);
    let e = if beta == T::one() {
        -kk
    } else {
        -kk.powf(T::one() / beta)
    };
    let e = C::new(e, T::zero());
    // e^{-iπ}E lies on the positive real axis, where the branch is unambiguous.
    let rotated = Complex::from_polar(T::one(), -T::PI()) * e;
    let lhs = branch_pow(C::new(rotated.re, T::zero()), beta);
    let tol = T::lit(1e-12).max(T::lit(100.0) * T::epsilon());
    if (lhs - C::new(kk, T::zero())).norm() > tol * kk.max(T::one()) {
        return Err(invalid("beta", format!("branch identity fails at k = {k:?}")));
    }
    Ok(e)
}

/// Classification of a finite-difference cumulant rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    Zero,
    Finite,
    Divergent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CumulantRate<T> {
    pub alpha: Vec<u32>,
    /// `[∏_j (i ∂/∂k_j)^{α_j} E](0)`; `None` when divergent.
    pub rate: Option<C<T>>,
    pub kind: RateKind,
    /// Raw differences at `h, h/2, h/4`.
    pub raw: Vec<C<T>>,
}

/// All multi-indices of dimension `dim` with total order `1..=max_order`.
pub fn multi_indices(dim: usize, max_order: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 1..=max_order {
        let mut current = vec![0u32; dim];
        fill(&mut out, &mut current, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, axis: usize, remaining: u32) {
    if axis + 1 == current.len() {
        current[axis] = remaining;
        out.push(current.clone());
        return;
    }
    for p in (0..=remaining).rev() {
        current[axis] = p;
        fill(out, current, axis + 1, remaining - p);
    }
    current[axis] = 0;
}

/// Cumulant growth rates `[∏(i∂_{k_j})^{α_j} E](0)` for `1 ≤ |α| ≤ max_order`.
///
/// Central differences at `h, h/2, h/4` are Richardson-extrapolated. A rate is
/// divergent when the raw difference at least doubles on halving the step or
/// the extrapolation does not settle.
pub fn cumulant_rates<T: Real>(
    e: &DispersionRelation<T>,
    dim: usize,
    max_order: u32,
    h: T,
) -> Result<Vec<CumulantRate<T>>> {
    if max_order == 0 || max_order > MAX_ORDER {
        return Err(invalid("max_order", format!("must lie in 1..={MAX_ORDER}, got {max_order}")));
    }
    if !(h > T::zero()) {
        return Err(invalid("h", "step must be positive"));
    }
    if dim == 0 {
        return Err(invalid("dim", "dimension must be positive"));
    }
    // Probe the stencil once so evaluation errors surface instead of NaNs.
    let origin = vec![T::zero(); dim];
    e.eval(&origin)?;
    let mut first_err = None;
    let f = |k: &[T]| match e.eval(k) {
        Ok(v) => v,
        Err(_) => C::new(T::nan(), T::nan()),
    };
    let mut out = Vec::new();
    for alpha in multi_indices(dim, max_order) {
        let r = richardson(&f, &origin, &alpha, h, 3);
        if r.raw.iter().any(|z| z.re.is_nan() || z.im.is_nan()) {
            first_err.get_or_insert_with(|| invalid("dispersion", "E could not be evaluated on the stencil"));
            continue;
        }
        let total: u32 = alpha.iter().sum();
        let i_pow = C::new(T::zero(), T::one()).powi(total as i32);
        let scale = r.value.norm().max(T::one());
        let tiny = T::lit(1e-10);
        let grows = r.raw.windows(2).any(|w| w[0].norm() > tiny && w[1].norm() >= T::lit(2.0) * w[0].norm());
        let unsettled = r.last_change > T::lit(1e-6) * scale;
        let (rate, kind) = if grows || unsettled {
            (None, RateKind::Divergent)
        } else if r.value.norm() <= T::lit(1e-8) {
            (Some(C::new(T::zero(), T::zero())), RateKind::Zero)
        } else {
            (Some(i_pow * r.value), RateKind::Finite)
        };
        out.push(CumulantRate {
            alpha,
            rate,
            kind,
            raw: r.raw,
        });
    }
    match first_err {
        Some(err) => Err(err),
        None => Ok(out),
    }
}
