//! Tensor-product central differences with Richardson extrapolation.
//!
//! Each 1D stencil is second-order accurate with an error expansion in even
//! powers of the step, so halving the step and eliminating `h^2, h^4, ...`
//! terms is valid at every level of the table.

use num_complex::Complex;

use crate::scalar::Real;

/// Highest derivative order supported per axis.
pub const MAX_ORDER: u32 = 4;

fn stencil(order: u32) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => panic!("derivative order {order} exceeds {MAX_ORDER}"),
    }
}

/// Approximates `∂^alpha f` at `at` with step `h` on every axis.
pub fn central_difference<T, F>(f: &F, at: &[T], alpha: &[u32], h: T) -> Complex<T>
where
    T: Real,
    F: Fn(&[T]) -> Complex<T>,
{
    assert_eq!(at.len(), alpha.len());
    let stencils: Vec<&[(i32, f64)]> = alpha.iter().map(|&a| stencil(a)).collect();
    let dims = at.len();
    let mut counters = vec![0usize; dims];
    let mut point = at.to_vec();
    let mut acc = Complex::new(T::zero(), T::zero());
    loop {
        let mut weight = 1.0;
        for axis in 0..dims {
            let (offset, w) = stencils[axis][counters[axis]];
            weight *= w;
            point[axis] = at[axis] + T::lit(offset as f64) * h;
        }
        acc = acc + f(&point) * T::lit(weight);
        // Odometer over the stencil product.
        let mut axis = 0;
        loop {
            if axis == dims {
                let total: u32 = alpha.iter().sum();
                return acc / h.powi(total as i32);
            }
            counters[axis] += 1;
            if counters[axis] < stencils[axis].len() {
                break;
            }
            counters[axis] = 0;
            axis += 1;
        }
    }
}

/// Raw differences and the Richardson table built on them.
#[derive(Debug, Clone)]
pub struct Richardson<T> {
    /// Central differences at steps `h, h/2, h/4, ...`.
    pub raw: Vec<Complex<T>>,
    /// Most refined extrapolated value.
    pub value: Complex<T>,
    /// |difference| between the last two diagonal entries of the table.
    pub last_change: T,
}

/// Central differences at `levels` successively halved steps, extrapolated.
pub fn richardson<T, F>(f: &F, at: &[T], alpha: &[u32], h: T, levels: usize) -> Richardson<T>
where
    T: Real,
    F: Fn(&[T]) -> Complex<T>,
{
    assert!(levels >= 1);
    let mut raw = Vec::with_capacity(levels);
    let mut table: Vec<Vec<Complex<T>>> = Vec::with_capacity(levels);
    let mut step = h;
    for i in 0..levels {
        let d = central_difference(f, at, alpha, step);
        raw.push(d);
        let mut row = vec![d];
        let mut factor = T::one();
        for j in 1..=i {
            factor = factor * T::lit(4.0);
            let prev_row = &table[i - 1];
            let value = row[j - 1] + (row[j - 1] - prev_row[j - 1]) / (factor - T::one());
            row.push(value);
        }
        table.push(row);
        step = step * T::lit(0.5);
    }
    let value = *table[levels - 1].last().unwrap();
    let last_change = if levels >= 2 {
        (value - *table[levels - 2].last().unwrap()).norm()
    } else {
        T::infinity()
    };
    Richardson {
        raw,
        value,
        last_change,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives_exact_after_extrapolation() {
        let f = |x: &[f64]| Complex::new(x[0].powi(4) - 2.0 * x[0].powi(3) + x[0], 0.0);
        let at = [0.3];
        let expected = [
            4.0 * 0.3f64.powi(3) - 6.0 * 0.09 + 1.0,
            12.0 * 0.09 - 12.0 * 0.3,
            24.0 * 0.3 - 12.0,
            24.0,
        ];
        for (order, want) in (1..=4).zip(expected) {
            let r = richardson(&f, &at, &[order], 0.1, 3);
            assert!((r.value.re - want).abs() < 1e-9, "order {order}: {} vs {want}", r.value.re);
        }
    }

    #[test]
    fn mixed_partial() {
        let f = |x: &[f64]| Complex::new((x[0] * x[1]).sin(), 0.0);
        // ∂x∂y sin(xy) = cos(xy) - xy sin(xy)
        let (x, y): (f64, f64) = (0.4, -0.7);
        let want = (x * y).cos() - x * y * (x * y).sin();
        let r = richardson(&f, &[x, y], &[1, 1], 0.05, 4);
        assert!((r.value.re - want).abs() < 1e-11);
    }
}
