//! Property-based invariants across modules.

use num_complex::Complex;
use proptest::prelude::*;

use fracdiff::dispersion::{find_dispersion, CharPolynomial, Polynomial, SymbolTerm};
use fracdiff::fractional_ops::{
    commutation_residual, weyl_multiplier, CommutationSetup, FracOrder, OperatorTag, TestSignal,
};
use fracdiff::grid::{forward_transform, inverse_transform, quadrature, DensityField, SpatialGrid};
use fracdiff::moments::{cumulants, raw_moment, raw_moment_spectral, MomentSpec};

type C = Complex<f64>;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Smooth, well-localized field: a positive Gaussian bump plus a modulated one.
fn smooth_field(grid: SpatialGrid<f64>, p: [f64; 5]) -> DensityField<f64> {
    let [mean, width, amp, freq, offset] = p;
    DensityField::from_fn(grid, move |r: &[f64]| {
        let x = r[0];
        (-(x - mean).powi(2) / (2.0 * width * width)).exp()
            + amp * (freq * x).cos() * (-(x - offset).powi(2) / 2.0).exp()
    })
}

fn field_params() -> impl Strategy<Value = [f64; 5]> {
    (-2.0..2.0f64, 0.8..1.6f64, 0.0..0.3f64, 0.0..2.0f64, -1.0..1.0f64).prop_map(|(a, b, c, d, e)| [a, b, c, d, e])
}

proptest! {
    #![proptest_config(config(50))]

    #[test]
    fn fft_round_trip_and_parseval(values in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64)) {
        let grid = SpatialGrid::new(1, 64, 7.5).unwrap();
        let psi = DensityField::new(grid, values.iter().map(|&(a, b)| C::new(a, b)).collect()).unwrap();
        let spec = forward_transform(&psi);
        let back = inverse_transform(&spec);
        for (a, b) in psi.values().iter().zip(back.values()) {
            prop_assert!((a - b).norm() <= 1e-13);
        }
        let real_side = psi.l2_norm_squared();
        prop_assert!((real_side - spec.parseval_sum()).abs() <= 1e-12 * real_side.max(1.0));
        prop_assert_eq!(spec.zero_mode(), quadrature(&psi));
    }

    #[test]
    fn fft_round_trip_two_dimensions(values in prop::collection::vec(-1.0..1.0f64, 256)) {
        let grid = SpatialGrid::new(2, 16, 3.0).unwrap();
        let psi = DensityField::new(grid, values.iter().map(|&a| C::new(a, 0.0)).collect()).unwrap();
        let back = inverse_transform(&forward_transform(&psi));
        for (a, b) in psi.values().iter().zip(back.values()) {
            prop_assert!((a - b).norm() <= 1e-13);
        }
    }

    /// `D_{β1} D_{β2} = (-1)^{[β1]+[β2]-[β1+β2]} D_{β1+β2}` on `e^{st}`.
    #[test]
    fn weyl_multipliers_compose(
        b1 in 0.05..1.9f64,
        frac in 0.0..1.0f64,
        re in -3.0..0.0f64,
        im in -3.0..3.0f64,
    ) {
        let b2 = frac * (1.95 - b1);
        prop_assume!(b2 > 0.01);
        let s = C::new(re, im);
        prop_assume!(s.norm() > 1e-3);
        let o1 = FracOrder::new(b1).unwrap();
        let o2 = FracOrder::new(b2).unwrap();
        let o12 = FracOrder::new(b1 + b2).unwrap();
        let lhs = weyl_multiplier(s, &o1).unwrap() * weyl_multiplier(s, &o2).unwrap();
        let sign = if (o1.int_part() + o2.int_part() - o12.int_part()) % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = weyl_multiplier(s, &o12).unwrap() * sign;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn raw_moments_agree_with_spectral_route(p in field_params()) {
        let grid = SpatialGrid::new(1, 512, 40.0).unwrap();
        let psi = smooth_field(grid, p);
        for order in 1..=4 {
            let spec = MomentSpec::new(vec![order]).unwrap();
            let a = raw_moment(&psi, &spec).unwrap();
            let b = raw_moment_spectral(&psi, &spec, 0.05).unwrap();
            prop_assert!((a - b).norm() <= 1e-6 * a.norm().max(1.0), "order {order}: {a} vs {b}");
        }
    }

    #[test]
    fn cumulants_are_translation_equivariant(p in field_params(), shift in -40i64..40) {
        let grid = SpatialGrid::new(1, 512, 40.0).unwrap();
        let psi = smooth_field(grid, p);
        let moved = psi.shifted(&[shift]);
        let a = cumulants(&psi, 4).unwrap();
        let b = cumulants(&moved, 4).unwrap();
        let d = shift as f64 * grid.spacing();
        prop_assert!((b.get(&[1]).unwrap().re - a.get(&[1]).unwrap().re - d).abs() <= 1e-9);
        for order in 2..=4u32 {
            let (x, y) = (a.get(&[order]).unwrap(), b.get(&[order]).unwrap());
            prop_assert!((x - y).norm() <= 1e-9 * x.norm().max(1.0), "order {order}: {x} vs {y}");
        }
        prop_assert!((a.variance - b.variance).norm() <= 1e-9);
    }

    #[test]
    fn multiplicities_sum_to_degree(
        roots in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64, 1usize..3), 1..5),
    ) {
        let mut poly = vec![C::new(1.0, 0.0)];
        let mut degree = 0;
        for &(re, im, mult) in &roots {
            for _ in 0..mult {
                let mut next = vec![C::new(0.0, 0.0); poly.len() + 1];
                for (i, c) in poly.iter().enumerate() {
                    next[i + 1] += c;
                    next[i] -= c * C::new(re, im);
                }
                poly = next;
                degree += 1;
            }
        }
        let found = Polynomial::new(poly).roots_with_multiplicity().unwrap();
        prop_assert_eq!(found.iter().map(|r| r.1).sum::<usize>(), degree);
    }

    /// Symbols with only even powers of `k` give `E(-k) = E(k)`.
    #[test]
    fn even_symbols_give_even_dispersion(c2 in 0.2..2.0f64, c4 in 0.0..0.5f64, k in 0.05..3.0f64) {
        // f(s, ik) = (s - 1)(s + q), q = c2 k² + c4 k⁴, using (ik)² = -k² and (ik)⁴ = k⁴.
        let term = |c: f64, s_power: usize, k_power: u32| SymbolTerm {
            coefficient: C::new(c, 0.0),
            s_power,
            k_powers: vec![k_power],
        };
        let terms = vec![
            term(1.0, 2, 0),
            term(-1.0, 1, 0),
            term(-c2, 1, 2),
            term(c4, 1, 4),
            term(c2, 0, 2),
            term(-c4, 0, 4),
        ];
        let poly = CharPolynomial::from_terms(terms).unwrap();
        let ks = vec![vec![-k], vec![0.0], vec![k]];
        let e = find_dispersion(&poly, &ks).unwrap();
        let (a, b) = (e.eval(&[-k]).unwrap(), e.eval(&[k]).unwrap());
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0), "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(config(10))]

    /// `T_a D_b = D_{b+a} T_a` for the Caputo and Riemann-Liouville schemes.
    #[test]
    fn base_shift_identity_on_polynomials(
        coefficients in prop::collection::vec(-2.0..2.0f64, 1..5),
        beta_index in 0usize..3,
        steps in prop::sample::select(vec![1usize, 10]),
    ) {
        let beta = [0.3, 0.5, 0.8][beta_index];
        let dt = 1e-2;
        let f = move |t: f64| C::new(coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c), 0.0);
        let setup = CommutationSetup {
            dt,
            len: 200,
            shift: steps as f64 * dt,
            order: FracOrder::new(beta).unwrap(),
        };
        for op in [OperatorTag::Caputo { base: 0.0 }, OperatorTag::RiemannLiouville { base: 0.0 }] {
            let r = commutation_residual(op, TestSignal::Function(&f), &setup).unwrap();
            prop_assert!(r.shifted_base_norm.unwrap() <= 1e-6, "{:?}", r);
        }
    }
}
