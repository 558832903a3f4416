//! Complex polynomials and their roots via companion-matrix eigenvalues.

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

type C<T> = Complex<T>;

/// Polynomial `Σ_i c_i s^i` with complex coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    coefficients: Vec<C<T>>,
}

impl<T: Real> Polynomial<T> {
    /// Trailing zero coefficients (highest powers) are dropped.
    pub fn new(mut coefficients: Vec<C<T>>) -> Self {
        while coefficients.len() > 1 && coefficients.last().is_some_and(|c| c.norm() == T::zero()) {
            coefficients.pop();
        }
        Self { coefficients }
    }

    pub fn from_real(coefficients: &[T]) -> Self {
        Self::new(coefficients.iter().map(|&c| C::new(c, T::zero())).collect())
    }

    pub fn coefficients(&self) -> &[C<T>] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, s: C<T>) -> C<T> {
        self.coefficients
            .iter()
            .rev()
            .fold(C::new(T::zero(), T::zero()), |acc, &c| acc * s + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coefficients.len() == 1 {
            return Self::new(vec![C::new(T::zero(), T::zero())]);
        }
        Self::new(
            self.coefficients
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * T::from_usize_lossy(i))
                .collect(),
        )
    }

    pub fn max_coefficient(&self) -> T {
        self.coefficients.iter().fold(T::zero(), |acc, c| acc.max(c.norm()))
    }

    /// All `n` roots, each polished by one Newton step.
    pub fn roots(&self) -> Result<Vec<C<T>>> {
        let n = self.degree();
        if n == 0 {
            return Err(invalid("polynomial", "degree must be at least 1"));
        }
        let lead = self.coefficients[n];
        if n == 1 {
            return Ok(vec![-self.coefficients[0] / lead]);
        }
        let mut h = companion(&self.coefficients);
        balance(&mut h, n);
        let eig = hessenberg_eigenvalues(&mut h, n)?;
        let dp = self.derivative();
        Ok(eig
            .into_iter()
            .map(|z| {
                let d = dp.eval(z);
                if d.norm() == T::zero() {
                    return z;
                }
                let step = z - self.eval(z) / d;
                if !step.norm().is_finite() || self.eval(step).norm() > self.eval(z).norm() {
                    z
                } else {
                    step
                }
            })
            .collect())
    }

    /// Distinct roots with multiplicities; multiplicities always sum to the degree.
    pub fn roots_with_multiplicity(&self) -> Result<Vec<(C<T>, usize)>> {
        let roots = self.roots()?;
        Ok(cluster_roots(self, roots))
    }
}

fn companion<T: Real>(coefficients: &[C<T>]) -> Vec<C<T>> {
    let n = coefficients.len() - 1;
    let lead = coefficients[n];
    let mut h = vec![C::new(T::zero(), T::zero()); n * n];
    for j in 0..n {
        h[j] = -coefficients[n - 1 - j] / lead;
    }
    for i in 1..n {
        h[i * n + i - 1] = C::new(T::one(), T::zero());
    }
    h
}

fn abs1<T: Real>(z: C<T>) -> T {
    z.re.abs() + z.im.abs()
}

/// Diagonal similarity scaling by powers of two (Parlett–Reinsch).
fn balance<T: Real>(h: &mut [C<T>], n: usize) {
    let radix = T::lit(2.0);
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 0..n {
                if j != i {
                    c = c + abs1(h[j * n + i]);
                    r = r + abs1(h[i * n + j]);
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let total = c + r;
            let mut f = T::one();
            let mut g = r / radix;
            while c < g {
                f = f * radix;
                c = c * radix * radix;
            }
            g = r * radix;
            while c > g {
                f = f / radix;
                c = c / (radix * radix);
            }
            if (c + r) / f < T::lit(0.95) * total {
                done = false;
                for j in 0..n {
                    h[i * n + j] = h[i * n + j] / f;
                    h[j * n + i] = h[j * n + i] * f;
                }
            }
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by single-shift complex QR with
/// Wilkinson shifts and Givens rotations.
fn hessenberg_eigenvalues<T: Real>(h: &mut [C<T>], n: usize) -> Result<Vec<C<T>>> {
    let zero = C::new(T::zero(), T::zero());
    let eps = T::epsilon();
    let mut eig = vec![zero; n];
    let mut hi = n - 1;
    let mut iter_here = 0usize;
    let mut total_iter = 0usize;
    let max_total = 60 * n;
    loop {
        // Deflation search.
        let mut l = hi;
        while l > 0 {
            let sub = abs1(h[l * n + l - 1]);
            let diag = abs1(h[(l - 1) * n + l - 1]) + abs1(h[l * n + l]);
            if sub <= eps * diag || sub < T::min_positive_value() {
                h[l * n + l - 1] = zero;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[hi * n + hi];
            iter_here = 0;
            if hi == 0 {
                return Ok(eig);
            }
            hi -= 1;
            continue;
        }
        total_iter += 1;
        iter_here += 1;
        if total_iter > max_total {
            return Err(Error::RootFinding {
                degree: n,
                iterations: total_iter,
            });
        }
        let a = h[(hi - 1) * n + hi - 1];
        let b = h[(hi - 1) * n + hi];
        let c = h[hi * n + hi - 1];
        let d = h[hi * n + hi];
        let mu = if iter_here % 11 == 10 {
            // Exceptional shift to break cycles.
            d + C::new(abs1(c) * T::lit(0.75), abs1(c) * T::lit(0.4375))
        } else {
            let half = (a - d) * T::lit(0.5);
            let disc = (half * half + b * c).sqrt();
            let m1 = (a + d) * T::lit(0.5) + disc;
            let m2 = (a + d) * T::lit(0.5) - disc;
            if (m1 - d).norm() < (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };
        for k in l..=hi {
            h[k * n + k] = h[k * n + k] - mu;
        }
        let mut rotations = Vec::with_capacity(hi - l);
        for k in l..hi {
            let x = h[k * n + k];
            let y = h[(k + 1) * n + k];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (cs, sn) = if r == T::zero() {
                (C::new(T::one(), T::zero()), zero)
            } else {
                (x / r, y / r)
            };
            for j in k..=hi {
                let top = h[k * n + j];
                let bot = h[(k + 1) * n + j];
                h[k * n + j] = cs.conj() * top + sn.conj() * bot;
                h[(k + 1) * n + j] = -sn * top + cs * bot;
            }
            rotations.push((cs, sn));
        }
        for (offset, &(cs, sn)) in rotations.iter().enumerate() {
            let k = l + offset;
            let last_row = (k + 2).min(hi);
            for i in l..=last_row {
                let left = h[i * n + k];
                let right = h[i * n + k + 1];
                h[i * n + k] = left * cs + right * sn;
                h[i * n + k + 1] = -left * sn.conj() + right * cs.conj();
            }
        }
        for k in l..=hi {
            h[k * n + k] = h[k * n + k] + mu;
        }
    }
}

/// Groups numerically coincident roots. A `d`-fold root is perturbed by about
/// `eps^{1/d}` relative, so a group of size `d` is accepted when its diameter
/// stays within `10·eps^{1/d}` (and always within `1e-8`) of the root scale;
/// otherwise its members are reported as simple roots.
fn cluster_roots<T: Real>(poly: &Polynomial<T>, roots: Vec<C<T>>) -> Vec<(C<T>, usize)> {
    let n = roots.len();
    let eps = T::epsilon();
    let scale = |z: C<T>| z.norm().max(T::one());
    let link = T::lit(10.0) * eps.powf(T::one() / T::from_usize_lossy(n.max(2)));
    // Single-linkage grouping via union-find.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let s = scale(roots[i]).max(scale(roots[j]));
            if (roots[i] - roots[j]).norm() <= link * s {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj] = ri;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match owner[r] {
            Some(g) => groups[g].push(i),
            None => {
                owner[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    let mut out = Vec::new();
    for g in groups {
        let d = g.len();
        if d == 1 {
            out.push((roots[g[0]], 1));
            continue;
        }
        let centroid = g
            .iter()
            .fold(C::new(T::zero(), T::zero()), |acc, &i| acc + roots[i])
            / T::from_usize_lossy(d);
        let diameter = g
            .iter()
            .flat_map(|&i| g.iter().map(move |&j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc.max((roots[i] - roots[j]).norm()));
        let allowed = (T::lit(10.0) * eps.powf(T::one() / T::from_usize_lossy(d))).max(T::lit(1e-8)) * scale(centroid);
        if diameter <= allowed {
            // p^{(d-1)} has a simple zero at a d-fold root of p; one Newton step on it.
            let mut low = poly.clone();
            for _ in 0..d - 1 {
                low = low.derivative();
            }
            let high = low.derivative();
            let hv = high.eval(centroid);
            let mut root = centroid;
            if hv.norm() > T::zero() {
                let candidate = centroid - low.eval(centroid) / hv;
                if candidate.norm().is_finite() && (candidate - centroid).norm() <= allowed {
                    root = candidate;
                }
            }
            out.push((root, d));
        } else {
            out.extend(g.iter().map(|&i| (roots[i], 1)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut v: Vec<(C<f64>, usize)>) -> Vec<(C<f64>, usize)> {
        v.sort_by(|a, b| a.0.re.partial_cmp(&b.0.re).unwrap());
        v
    }

    #[test]
    fn simple_real_roots() {
        let p = Polynomial::from_real(&[-1.0, 0.0, 1.0]);
        let r = sorted_re(p.roots_with_multiplicity().unwrap());
        assert_eq!(r.len(), 2);
        assert!((r[0].0 - C::new(-1.0, 0.0)).norm() < 1e-14 && r[0].1 == 1);
        assert!((r[1].0 - C::new(1.0, 0.0)).norm() < 1e-14 && r[1].1 == 1);
    }

    #[test]
    fn double_root() {
        let p = Polynomial::from_real(&[1.0, 2.0, 1.0]);
        let r = p.roots_with_multiplicity().unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].1, 2);
        assert!((r[0].0 - C::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cubic_factorization() {
        // (s+1)(s+2)(s+3); oracle: evaluate at the claimed roots.
        let p = Polynomial::from_real(&[6.0, 11.0, 6.0, 1.0]);
        for z in [-1.0, -2.0, -3.0] {
            assert_eq!(p.eval(C::new(z, 0.0)), C::new(0.0, 0.0));
        }
        let r = sorted_re(p.roots_with_multiplicity().unwrap());
        for (got, want) in r.iter().zip([-3.0, -2.0, -1.0]) {
            assert!((got.0 - C::new(want, 0.0)).norm() < 1e-12);
            assert_eq!(got.1, 1);
        }
    }

    #[test]
    fn complex_coefficients_and_high_degree() {
        // Roots of unity times (1 + i), degree 12.
        let n = 12;
        let w = C::new(1.0f64, 1.0);
        let mut coeffs = vec![C::new(0.0, 0.0); n + 1];
        coeffs[0] = -w.powi(n as i32);
        coeffs[n] = C::new(1.0, 0.0);
        let p = Polynomial::new(coeffs);
        let roots = p.roots().unwrap();
        assert_eq!(roots.len(), n);
        for z in &roots {
            assert!(p.eval(*z).norm() < 1e-10 * p.max_coefficient());
            assert!((z.norm() - w.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn triple_root_multiplicity() {
        // (s - 2)^3 (s + 1), built by multiplying out.
        let q = Polynomial::from_real(&[-8.0, 12.0, -6.0, 1.0]); // (s-2)^3
        let mut coeffs = vec![C::new(0.0, 0.0); 5];
        for (i, c) in q.coefficients().iter().enumerate() {
            coeffs[i] = coeffs[i] + *c;
            coeffs[i + 1] = coeffs[i + 1] + *c;
        }
        let p = Polynomial::new(coeffs);
        let r = p.roots_with_multiplicity().unwrap();
        let total: usize = r.iter().map(|x| x.1).sum();
        assert_eq!(total, 4);
        assert!(r.iter().any(|(z, d)| *d == 3 && (z - C::new(2.0, 0.0)).norm() < 1e-6));
    }

    #[test]
    fn degree_zero_rejected() {
        assert!(Polynomial::from_real(&[3.0]).roots().is_err());
    }
}
