//! `fracdiff verify`: pass/fail suites with a machine-readable report.

use anyhow::Result;
use clap::ValueEnum;
use fracdiff::dispersion::Polynomial;
use fracdiff::evolution::{heat_dispersion, propagator_compose_check, SpectralEvolver};
use fracdiff::fractional_ops::{
    commutation_residual, convergence_study, weyl_multiplier, CommutationSetup, ExpMode, ExpSignal, FracOrder,
    OperatorTag, Scheme, TestSignal,
};
use fracdiff::grid::{forward_transform, inverse_transform, DensityField, SpatialGrid};
use fracdiff::moments::{cumulants, raw_moment, raw_moment_spectral, MomentSpec};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Commutation,
    Convergence,
    Invariants,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    name: String,
    value: f64,
    bound: Bound,
    threshold: f64,
    pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.push(name.into(), value, Bound::AtMost, threshold, value <= threshold);
    }

    fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.push(name.into(), value, Bound::AtLeast, threshold, value >= threshold);
    }

    fn push(&mut self, name: String, value: f64, bound: Bound, threshold: f64, pass: bool) {
        self.0.push(Check {
            name,
            value,
            bound,
            threshold,
            pass,
        });
    }
}

pub fn run(suite: Suite, seed: u64) -> Result<Report> {
    let mut checks = Checks::default();
    match suite {
        Suite::Commutation => commutation(&mut checks)?,
        Suite::Convergence => convergence(&mut checks)?,
        Suite::Invariants => invariants(&mut checks, seed)?,
    }
    let pass = checks.0.iter().all(|c| c.pass);
    Ok(Report {
        suite,
        seed,
        checks: checks.0,
        pass,
    })
}

fn commutation(c: &mut Checks) -> Result<()> {
    let square = |t: f64| Complex::new(t * t, 0.0);
    for beta in [0.3, 0.5, 0.8] {
        let setup = CommutationSetup {
            dt: 1e-2,
            len: 301,
            shift: 1.0,
            order: FracOrder::new(beta)?,
        };
        for (name, op) in [
            ("caputo", OperatorTag::Caputo { base: 0.0 }),
            ("riemann_liouville", OperatorTag::RiemannLiouville { base: 0.0 }),
        ] {
            let r = commutation_residual(op, TestSignal::Function(&square), &setup)?;
            c.at_most(
                format!("{name} beta={beta} shifted-base identity on t^2"),
                r.shifted_base_norm.unwrap_or(f64::NAN),
                1e-6,
            );
            c.at_least(format!("{name} beta={beta} naive commutator on t^2"), r.residual_norm, 0.1);
        }
    }
    let signals = [
        ("e^-t", ExpSignal::single(Complex::new(-1.0, 0.0))?),
        (
            "two-mode",
            ExpSignal::new(vec![
                ExpMode::new(Complex::new(1.0, 0.5), Complex::new(-0.5, 2.0))?,
                ExpMode::new(Complex::new(-0.3, 0.0), Complex::new(-2.0, 0.0))?,
            ]),
        ),
    ];
    for (name, sig) in &signals {
        for beta in [0.5, 1.5] {
            let setup = CommutationSetup {
                dt: 0.05,
                len: 40,
                shift: 0.5,
                order: FracOrder::new(beta)?,
            };
            let r = commutation_residual(OperatorTag::Weyl, TestSignal::Exponentials(sig), &setup)?;
            c.at_most(format!("weyl beta={beta} commutator on {name}"), r.residual_norm, 1e-8);
        }
    }
    Ok(())
}

fn convergence(c: &mut Checks) -> Result<()> {
    let steps: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
    for beta in [0.3f64, 0.5, 0.8] {
        let order = FracOrder::new(beta)?;
        let l1 = convergence_study(Scheme::L1, &order, 1.0, &steps)?;
        c.at_most(format!("L1 beta={beta} |order - (2 - beta)|"), (l1.order - (2.0 - beta)).abs(), 0.2);
        let gl = convergence_study(Scheme::GrunwaldLetnikov, &order, 1.0, &steps)?;
        c.at_most(format!("Grünwald-Letnikov beta={beta} |order - 1|"), (gl.order - 1.0).abs(), 0.2);
    }
    Ok(())
}

fn random_smooth_field(rng: &mut ChaCha8Rng, grid: SpatialGrid<f64>) -> DensityField<f64> {
    let mean = rng.gen_range(-2.0..2.0);
    let width: f64 = rng.gen_range(0.8..1.6);
    let amp = rng.gen_range(0.0..0.3);
    let freq = rng.gen_range(0.0..2.0);
    DensityField::from_fn(grid, move |r: &[f64]| {
        let x = r[0];
        (-(x - mean).powi(2) / (2.0 * width * width)).exp() + amp * (freq * x).cos() * (-x * x / 2.0).exp()
    })
}

fn invariants(c: &mut Checks, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let small = SpatialGrid::new(1, 64, 7.5)?;
    let mut round_trip: f64 = 0.0;
    let mut parseval: f64 = 0.0;
    for _ in 0..20 {
        let values = (0..64)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let psi = DensityField::new(small, values)?;
        let spec = forward_transform(&psi);
        let back = inverse_transform(&spec);
        for (a, b) in psi.values().iter().zip(back.values()) {
            round_trip = round_trip.max((a - b).norm());
        }
        let energy = psi.l2_norm_squared();
        parseval = parseval.max((energy - spec.parseval_sum()).abs() / energy);
    }
    c.at_most("FFT round trip, 20 random fields", round_trip, 1e-13);
    c.at_most("Parseval relative defect, 20 random fields", parseval, 1e-12);

    let grid = SpatialGrid::new(1, 512, 40.0)?;
    let mut moment_gap: f64 = 0.0;
    let mut translation_gap: f64 = 0.0;
    for _ in 0..10 {
        let psi = random_smooth_field(&mut rng, grid);
        for order in 1..=4 {
            let spec = MomentSpec::new(vec![order])?;
            let a = raw_moment(&psi, &spec)?;
            let b = raw_moment_spectral(&psi, &spec, 0.05)?;
            moment_gap = moment_gap.max((a - b).norm() / a.norm().max(1.0));
        }
        let shift = rng.gen_range(-40i64..40);
        let a = cumulants(&psi, 4)?;
        let b = cumulants(&psi.shifted(&[shift]), 4)?;
        for order in 2..=4u32 {
            let (x, y) = (a.get(&[order]), b.get(&[order]));
            if let (Some(x), Some(y)) = (x, y) {
                translation_gap = translation_gap.max((x - y).norm() / x.norm().max(1.0));
            }
        }
    }
    c.at_most("raw moments, real vs spectral route, orders 1-4", moment_gap, 1e-6);
    c.at_most("cumulants of order 2-4 under translation", translation_gap, 1e-9);

    let mut compose: f64 = 0.0;
    for _ in 0..50 {
        let b1: f64 = rng.gen_range(0.05..1.0);
        let b2: f64 = rng.gen_range(0.05..(1.95 - b1));
        let s = Complex::new(rng.gen_range(-3.0..-0.01), rng.gen_range(-3.0..3.0));
        let (o1, o2, o12) = (FracOrder::new(b1)?, FracOrder::new(b2)?, FracOrder::new(b1 + b2)?);
        let sign = if (o1.int_part() + o2.int_part() - o12.int_part()) % 2 == 0 { 1.0 } else { -1.0 };
        let lhs = weyl_multiplier(s, &o1)? * weyl_multiplier(s, &o2)?;
        let rhs = weyl_multiplier(s, &o12)? * sign;
        compose = compose.max((lhs - rhs).norm() / rhs.norm().max(1.0));
    }
    c.at_most("Weyl multiplier composition with integer-part sign", compose, 1e-12);

    let mut multiplicity_ok = 1.0;
    for _ in 0..20 {
        let count = rng.gen_range(1..5);
        let mut coefficients = vec![Complex::new(1.0, 0.0)];
        let mut degree = 0;
        for _ in 0..count {
            let root = Complex::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            for _ in 0..rng.gen_range(1..3) {
                let mut next = vec![Complex::new(0.0, 0.0); coefficients.len() + 1];
                for (i, a) in coefficients.iter().enumerate() {
                    next[i + 1] += a;
                    next[i] -= a * root;
                }
                coefficients = next;
                degree += 1;
            }
        }
        let found = Polynomial::new(coefficients).roots_with_multiplicity()?;
        if found.iter().map(|r| r.1).sum::<usize>() != degree {
            multiplicity_ok = 0.0;
        }
    }
    c.at_least("root multiplicities sum to the degree (1 = all cases)", multiplicity_ok, 1.0);

    let heat = heat_dispersion();
    let psi = random_smooth_field(&mut rng, grid);
    let residual = propagator_compose_check(&SpectralEvolver { dispersion: &heat }, &psi, 0.7, 1.3)?;
    c.at_most("heat propagator semigroup residual", residual, 1e-12);
    Ok(())
}
