//! Small dense least-squares problems (Householder QR).

use crate::error::{invalid, Result};
use crate::numeric::sum::sum;
use crate::scalar::Real;

/// Solves `min ||A x - y||_2` for a row-major `rows × cols` matrix `a`.
pub fn least_squares<T: Real>(a: &[T], rows: usize, cols: usize, y: &[T]) -> Result<Vec<T>> {
    if rows < cols || a.len() != rows * cols || y.len() != rows {
        return Err(invalid("least_squares", format!("inconsistent shape {rows}x{cols}")));
    }
    let mut r = a.to_vec();
    let mut b = y.to_vec();
    for j in 0..cols {
        let norm = sum((j..rows).map(|i| r[i * cols + j] * r[i * cols + j])).sqrt();
        if norm == T::zero() {
            return Err(invalid("least_squares", "rank-deficient design matrix"));
        }
        let alpha = if r[j * cols + j] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (j..rows).map(|i| r[i * cols + j]).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = sum(v.iter().map(|&x| x * x));
        if vnorm2 == T::zero() {
            continue;
        }
        for c in j..cols {
            let dot = sum((j..rows).map(|i| v[i - j] * r[i * cols + c]));
            let f = T::lit(2.0) * dot / vnorm2;
            for i in j..rows {
                r[i * cols + c] = r[i * cols + c] - f * v[i - j];
            }
        }
        let dot = sum((j..rows).map(|i| v[i - j] * b[i]));
        let f = T::lit(2.0) * dot / vnorm2;
        for i in j..rows {
            b[i] = b[i] - f * v[i - j];
        }
    }
    let mut x = vec![T::zero(); cols];
    for j in (0..cols).rev() {
        let mut acc = b[j];
        for c in j + 1..cols {
            acc = acc - r[j * cols + c] * x[c];
        }
        let d = r[j * cols + j];
        if d.abs() <= T::epsilon() * T::lit(1e3) * r[0].abs() {
            return Err(invalid("least_squares", "numerically rank-deficient design matrix"));
        }
        x[j] = acc / d;
    }
    Ok(x)
}

/// Least-squares polynomial of `degree` in `t` (ascending coefficients in the
/// variable `(t - center) / scale`).
#[derive(Debug, Clone)]
pub struct PolyFit<T> {
    pub coefficients: Vec<T>,
    pub center: T,
    pub scale: T,
    /// Residuals `y_i - p(t_i)` in input order.
    pub residuals: Vec<T>,
}

impl<T: Real> PolyFit<T> {
    pub fn eval(&self, t: T) -> T {
        let u = (t - self.center) / self.scale;
        self.coefficients.iter().rev().fold(T::zero(), |acc, &c| acc * u + c)
    }

    pub fn residual_norm(&self) -> T {
        sum(self.residuals.iter().map(|&r| r * r)).sqrt()
    }
}

/// Fits a polynomial of the given degree; abscissae are mapped to `[-1, 1]`.
pub fn polyfit<T: Real>(t: &[T], y: &[T], degree: usize) -> Result<PolyFit<T>> {
    let n = t.len();
    if n != y.len() || n < degree + 1 {
        return Err(invalid("polyfit", format!("{n} points cannot determine degree {degree}")));
    }
    let lo = t.iter().copied().fold(T::infinity(), T::min);
    let hi = t.iter().copied().fold(T::neg_infinity(), T::max);
    let center = (lo + hi) * T::lit(0.5);
    let scale = if hi > lo { (hi - lo) * T::lit(0.5) } else { T::one() };
    let cols = degree + 1;
    let mut a = Vec::with_capacity(n * cols);
    for &ti in t {
        let u = (ti - center) / scale;
        let mut p = T::one();
        for _ in 0..cols {
            a.push(p);
            p = p * u;
        }
    }
    let coefficients = least_squares(&a, n, cols, y)?;
    let mut fit = PolyFit {
        coefficients,
        center,
        scale,
        residuals: Vec::new(),
    };
    fit.residuals = t.iter().zip(y).map(|(&ti, &yi)| yi - fit.eval(ti)).collect();
    Ok(fit)
}

/// Ordinary least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
}

pub fn linear_fit<T: Real>(x: &[T], y: &[T]) -> Result<LineFit<T>> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(invalid("linear_fit", "need at least two paired points"));
    }
    let nf = T::from_usize_lossy(n);
    let mx = sum(x.iter().copied()) / nf;
    let my = sum(y.iter().copied()) / nf;
    let sxx = sum(x.iter().map(|&v| (v - mx) * (v - mx)));
    let sxy = sum(x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)));
    let syy = sum(y.iter().map(|&v| (v - my) * (v - my)));
    if sxx == T::zero() {
        return Err(invalid("linear_fit", "abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = sum(x.iter().zip(y).map(|(&a, &b)| {
        let r = b - (intercept + slope * a);
        r * r
    }));
    let r_squared = if syy == T::zero() {
        T::one()
    } else {
        (T::one() - ss_res / syy).max(T::zero()).min(T::one())
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}
