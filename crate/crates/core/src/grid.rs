//! Periodic spatial grids, density fields and their discrete Fourier transforms.
//!
//! The box `[-L/2, L/2)^d` is sampled at `r_j = -L/2 + j·h`, `h = L/N`.
//! The forward transform uses the Riemann-sum convention
//!
//! ```text
//! (Fψ)(k_m) = h^d Σ_j exp(-i k_m·r_j) ψ(r_j),    k_m = 2π m / L,  m ∈ [-N/2, N/2)
//! ```
//!
//! so the `k = 0` mode is the integral of the density. Modes are stored in FFT
//! order: storage index `i` holds `m = i` for `i < N/2` and `m = i - N` otherwise.
//! Because the origin sits at `-L/2`, the phase `exp(i k_m L/2) = (-1)^m` is an
//! exact sign flip and no trigonometric round-off enters the transform.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::numeric::sum::{sum_complex, ComplexSum};
use crate::scalar::{FftDirection, Real};

/// Uniform periodic grid in one or two dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid<T> {
    dim: usize,
    points: usize,
    length: T,
}

impl<T: Real> SpatialGrid<T> {
    pub fn new(dim: usize, points_per_axis: usize, length_per_axis: T) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(invalid("grid.dim", format!("must be 1 or 2, got {dim}")));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(invalid(
                "grid.n",
                format!("must be a power of two and at least 8, got {points_per_axis}"),
            ));
        }
        if !(length_per_axis > T::zero()) || !length_per_axis.is_finite() {
            return Err(invalid("grid.length", format!("must be positive, got {length_per_axis}")));
        }
        Ok(Self {
            dim,
            points: points_per_axis,
            length: length_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn spacing(&self) -> T {
        self.length / T::from_usize_lossy(self.points)
    }

    /// `h^d`.
    pub fn cell_volume(&self) -> T {
        self.spacing().powi(self.dim as i32)
    }

    pub fn node_count(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    /// Coordinate of node `j` along any axis.
    pub fn coordinate(&self, j: usize) -> T {
        -self.length * T::lit(0.5) + T::from_usize_lossy(j) * self.spacing()
    }

    /// Coordinates of all nodes along one axis.
    pub fn axis_coordinates(&self) -> Vec<T> {
        (0..self.points).map(|j| self.coordinate(j)).collect()
    }

    /// Per-axis node indices of a flat index (axis 0 varies slowest).
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.points, flat % self.points]
        }
    }

    /// Position vector of node `flat`.
    pub fn position(&self, flat: usize) -> Vec<T> {
        let idx = self.unflatten(flat);
        (0..self.dim).map(|a| self.coordinate(idx[a])).collect()
    }

    /// Signed mode number `m` stored at FFT index `i`.
    pub fn mode_number(&self, i: usize) -> i64 {
        if i < self.points / 2 {
            i as i64
        } else {
            i as i64 - self.points as i64
        }
    }

    /// Wavenumber `2π m / L` at FFT index `i`.
    pub fn wavenumber(&self, i: usize) -> T {
        T::lit(2.0) * T::PI() * T::lit(self.mode_number(i) as f64) / self.length
    }

    /// Wave vector of flat mode index `flat`.
    pub fn wave_vector(&self, flat: usize) -> Vec<T> {
        let idx = self.unflatten(flat);
        (0..self.dim).map(|a| self.wavenumber(idx[a])).collect()
    }

    /// `k·k` of flat mode index `flat`.
    pub fn k_squared(&self, flat: usize) -> T {
        self.wave_vector(flat).iter().fold(T::zero(), |acc, &k| acc + k * k)
    }

    /// Same spacing, twice the box length per axis.
    pub fn doubled(&self) -> Result<Self> {
        Self::new(self.dim, self.points * 2, self.length * T::lit(2.0))
    }

    /// Exact `(-1)^(m_0 + m_1)` phase relating the FFT to the centered transform.
    fn parity(&self, flat: usize) -> bool {
        let idx = self.unflatten(flat);
        (idx[0] + idx[1]) % 2 == 1
    }
}

/// Sampled (possibly complex, signed) density `ψ(r_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField<T> {
    grid: SpatialGrid<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> DensityField<T> {
    pub fn new(grid: SpatialGrid<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(invalid(
                "field.values",
                format!("expected {} values, got {}", grid.node_count(), values.len()),
            ));
        }
        Ok(Self { grid, values })
    }

    /// Real density from a function of position.
    pub fn from_fn(grid: SpatialGrid<T>, f: impl Fn(&[T]) -> T) -> Self {
        let values = (0..grid.node_count())
            .map(|j| Complex::new(f(&grid.position(j)), T::zero()))
            .collect();
        Self { grid, values }
    }

    pub fn zeros(grid: SpatialGrid<T>) -> Self {
        Self {
            values: vec![Complex::new(T::zero(), T::zero()); grid.node_count()],
            grid,
        }
    }

    pub fn grid(&self) -> &SpatialGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn scaled(&self, factor: Complex<T>) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| v * factor).collect(),
        }
    }

    /// Periodic shift by whole nodes: `ψ'(r) = ψ(r - shift·h)`.
    pub fn shifted(&self, shift: &[i64]) -> Self {
        let n = self.grid.points as i64;
        let values = (0..self.values.len())
            .map(|flat| {
                let idx = self.grid.unflatten(flat);
                let mut src = [0usize; 2];
                for a in 0..self.grid.dim {
                    src[a] = (idx[a] as i64 - shift[a]).rem_euclid(n) as usize;
                }
                let src_flat = if self.grid.dim == 1 {
                    src[0]
                } else {
                    src[0] * self.grid.points + src[1]
                };
                self.values[src_flat]
            })
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// `Σ_j h^d |ψ_j|^2`.
    pub fn l2_norm_squared(&self) -> T {
        crate::numeric::sum::sum(self.values.iter().map(|v| v.norm_sqr())) * self.grid.cell_volume()
    }
}

/// Discrete Fourier transform of a density, in FFT storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    grid: SpatialGrid<T>,
    modes: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn new(grid: SpatialGrid<T>, modes: Vec<Complex<T>>) -> Result<Self> {
        if modes.len() != grid.node_count() {
            return Err(invalid(
                "spectrum.modes",
                format!("expected {} modes, got {}", grid.node_count(), modes.len()),
            ));
        }
        Ok(Self { grid, modes })
    }

    /// Spectrum defined by a function of the wave vector.
    pub fn from_fn(grid: SpatialGrid<T>, f: impl Fn(&[T]) -> Complex<T>) -> Self {
        let modes = (0..grid.node_count()).map(|j| f(&grid.wave_vector(j))).collect();
        Self { grid, modes }
    }

    pub fn grid(&self) -> &SpatialGrid<T> {
        &self.grid
    }

    pub fn modes(&self) -> &[Complex<T>] {
        &self.modes
    }

    pub fn into_modes(self) -> Vec<Complex<T>> {
        self.modes
    }

    /// The `k = 0` mode, i.e. `∫ψ`.
    pub fn zero_mode(&self) -> Complex<T> {
        self.modes[0]
    }

    /// Mode-wise multiplication by `factor(flat_index)`.
    pub fn map_modes(&self, factor: impl Fn(usize, Complex<T>) -> Complex<T> + Sync) -> Self {
        let modes = self
            .modes
            .par_iter()
            .enumerate()
            .map(|(j, &m)| factor(j, m))
            .collect();
        Self { grid: self.grid, modes }
    }

    /// `(1/L^d) Σ_m |mode_m|^2`.
    pub fn parseval_sum(&self) -> T {
        crate::numeric::sum::sum(self.modes.iter().map(|v| v.norm_sqr()))
            / self.grid.length.powi(self.grid.dim as i32)
    }

    /// Max-norm of the mode-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.modes
            .iter()
            .zip(&other.modes)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm()))
    }

    pub fn max_abs(&self) -> T {
        self.modes.iter().fold(T::zero(), |acc, a| acc.max(a.norm()))
    }
}

fn transform_axes<T: Real>(grid: &SpatialGrid<T>, data: &mut [Complex<T>], direction: FftDirection) {
    let n = grid.points;
    // Contiguous rows (last axis) in parallel chunks; each row is transformed
    // independently so the result does not depend on the schedule.
    data.par_chunks_mut(n * 8.max(1))
        .for_each(|chunk| T::fft_in_place(chunk, n, direction));
    if grid.dim == 2 {
        let mut transposed = vec![Complex::new(T::zero(), T::zero()); data.len()];
        for r in 0..n {
            for c in 0..n {
                transposed[c * n + r] = data[r * n + c];
            }
        }
        transposed
            .par_chunks_mut(n * 8)
            .for_each(|chunk| T::fft_in_place(chunk, n, direction));
        for r in 0..n {
            for c in 0..n {
                data[r * n + c] = transposed[c * n + r];
            }
        }
    }
}

/// `h^d Σ_j ψ_j` with fixed-order compensated summation.
pub fn quadrature<T: Real>(field: &DensityField<T>) -> Complex<T> {
    sum_complex(field.values.iter().copied()) * field.grid.cell_volume()
}

/// Forward transform in the Riemann-sum convention (see module docs).
///
/// The `k = 0` mode is assigned the compensated [`quadrature`] of the field so
/// the two agree bit-for-bit.
pub fn forward_transform<T: Real>(field: &DensityField<T>) -> SpectralField<T> {
    let grid = field.grid;
    let mut data = field.values.clone();
    transform_axes(&grid, &mut data, FftDirection::Forward);
    let volume = grid.cell_volume();
    for (j, v) in data.iter_mut().enumerate() {
        *v = if grid.parity(j) { -*v * volume } else { *v * volume };
    }
    data[0] = quadrature(field);
    SpectralField { grid, modes: data }
}

/// Exact inverse of [`forward_transform`] up to round-off.
pub fn inverse_transform<T: Real>(spec: &SpectralField<T>) -> DensityField<T> {
    let grid = spec.grid;
    let mut data: Vec<Complex<T>> = spec
        .modes
        .iter()
        .enumerate()
        .map(|(j, &m)| if grid.parity(j) { -m } else { m })
        .collect();
    transform_axes(&grid, &mut data, FftDirection::Inverse);
    let norm = grid.length.powi(grid.dim as i32);
    for v in data.iter_mut() {
        *v = *v / norm;
    }
    DensityField { grid, values: data }
}

/// `(Fψ)(k)` at an arbitrary (off-grid) wave vector by direct summation.
pub fn fourier_at<T: Real>(field: &DensityField<T>, k: &[T]) -> Complex<T> {
    let grid = field.grid;
    let mut acc = ComplexSum::new();
    for (j, &v) in field.values.iter().enumerate() {
        let r = grid.position(j);
        let phase = r.iter().zip(k).fold(T::zero(), |acc, (&x, &kk)| acc + x * kk);
        acc.add(v * Complex::new(phase.cos(), -phase.sin()));
    }
    acc.value() * grid.cell_volume()
}

/// Normalized Gaussian density with per-axis `mean` and common width `sigma`.
pub fn make_gaussian<T: Real>(grid: &SpatialGrid<T>, mean: &[T], sigma: T) -> Result<DensityField<T>> {
    if !(sigma > T::zero()) {
        return Err(invalid("initial.sigma", format!("must be positive, got {sigma}")));
    }
    if mean.len() != grid.dim() {
        return Err(invalid(
            "initial.mean",
            format!("expected {} components, got {}", grid.dim(), mean.len()),
        ));
    }
    let half = grid.length() * T::lit(0.5);
    for &mu in mean {
        if mu.abs() + T::lit(6.0) * sigma >= half {
            return Err(invalid(
                "initial.sigma",
                format!("|mean| + 6 sigma = {} does not fit in half-box {}", mu.abs() + T::lit(6.0) * sigma, half),
            ));
        }
    }
    let two_var = T::lit(2.0) * sigma * sigma;
    let raw = DensityField::from_fn(*grid, |r| {
        let d2 = r.iter().zip(mean).fold(T::zero(), |acc, (&x, &m)| acc + (x - m) * (x - m));
        (-d2 / two_var).exp()
    });
    let total = quadrature(&raw).re;
    Ok(raw.scaled(Complex::new(T::one() / total, T::zero())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1() -> SpatialGrid<f64> {
        SpatialGrid::new(1, 256, 40.0).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SpatialGrid::new(3, 64, 1.0f64).is_err());
        assert!(SpatialGrid::new(1, 4, 1.0f64).is_err());
        assert!(SpatialGrid::new(1, 100, 1.0f64).is_err());
        assert!(SpatialGrid::new(1, 64, 0.0f64).is_err());
    }

    #[test]
    fn wavenumber_layout() {
        let g = SpatialGrid::new(1, 8, 2.0 * std::f64::consts::PI).unwrap();
        let ms: Vec<i64> = (0..8).map(|i| g.mode_number(i)).collect();
        assert_eq!(ms, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert!((g.wavenumber(3) - 3.0).abs() < 1e-15);
        assert_eq!(g.coordinate(0), -std::f64::consts::PI);
    }

    #[test]
    fn gaussian_normalized_and_fourier_pair() {
        let g = grid1();
        let psi = make_gaussian(&g, &[0.0], 1.0).unwrap();
        assert!((quadrature(&psi).re - 1.0).abs() < 1e-10);
        let spec = forward_transform(&psi);
        for (j, m) in spec.modes().iter().enumerate() {
            let k = g.wavenumber(j);
            assert!((m - Complex::new((-k * k / 2.0).exp(), 0.0)).norm() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn gaussian_rejections() {
        let g = grid1();
        assert!(make_gaussian(&g, &[0.0], -1.0).is_err());
        assert!(make_gaussian(&g, &[0.0], 0.0).is_err());
        assert!(make_gaussian(&g, &[0.0], 4.0).is_err());
        assert!(make_gaussian(&g, &[15.0], 1.0).is_err());
    }

    #[test]
    fn forward_matches_direct_sum() {
        // Oracle: the defining sum evaluated term by term at grid wavenumbers.
        let g = SpatialGrid::<f64>::new(1, 32, 10.0).unwrap();
        let psi = DensityField::from_fn(g, |r| (-(r[0] - 0.3).powi(2)).exp() * (1.0 + r[0]));
        let spec = forward_transform(&psi);
        for j in 0..32 {
            let direct = fourier_at(&psi, &[g.wavenumber(j)]);
            assert!((direct - spec.modes()[j]).norm() < 1e-13);
        }
    }

    #[test]
    fn zero_mode_is_quadrature_bitwise() {
        let g = SpatialGrid::<f64>::new(2, 16, 8.0).unwrap();
        let psi = DensityField::from_fn(g, |r| (r[0] * 0.7).sin() + r[1] * r[1] * 0.01 + 0.3);
        assert_eq!(forward_transform(&psi).zero_mode(), quadrature(&psi));
    }

    #[test]
    fn inverse_of_gaussian_spectrum() {
        let g = grid1();
        let spec = SpectralField::from_fn(g, |k| Complex::new((-k[0] * k[0] / 2.0).exp(), 0.0));
        let psi = inverse_transform(&spec);
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        for (j, v) in psi.values().iter().enumerate() {
            let x = g.coordinate(j);
            assert!((v - Complex::new((-x * x / 2.0).exp() / norm, 0.0)).norm() < 1e-10);
        }
        let zero = SpectralField::new(g, vec![Complex::new(0.0, 0.0); 256]).unwrap();
        assert!(inverse_transform(&zero).values().iter().all(|v| *v == Complex::new(0.0, 0.0)));
    }

    #[test]
    fn half_box_indicator() {
        // Oracle: erf(∞) symmetry gives exactly half the mass on r > 0; the
        // indicator takes the midpoint value 1/2 on the node at r = 0.
        let g = grid1();
        let psi = make_gaussian(&g, &[0.0], 1.0).unwrap();
        let mask = |x: f64| if x > 0.0 { 1.0 } else if x == 0.0 { 0.5 } else { 0.0 };
        let values = psi
            .values()
            .iter()
            .enumerate()
            .map(|(j, v)| v * mask(g.coordinate(j)))
            .collect();
        let half = quadrature(&DensityField::new(g, values).unwrap()).re;
        assert!((half - 0.5).abs() < 1e-6, "{half}");
    }

    #[test]
    fn scaled_quadrature_is_linear() {
        let g = grid1();
        let psi = make_gaussian(&g, &[1.0], 2.0).unwrap();
        let q = quadrature(&psi.scaled(Complex::new(3.0, 0.0)));
        assert!((q.re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn f32_grid_works() {
        let g = SpatialGrid::new(1, 64, 20.0f32).unwrap();
        let psi = make_gaussian(&g, &[0.0], 1.0).unwrap();
        let back = inverse_transform(&forward_transform(&psi));
        let err = back
            .values()
            .iter()
            .zip(psi.values())
            .fold(0.0f32, |acc, (a, b)| acc.max((a - b).norm()));
        assert!(err < 1e-6);
    }
}
