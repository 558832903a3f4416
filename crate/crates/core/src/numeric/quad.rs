//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Stopping rule for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for QuadOptions<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-14),
            rel_tol: T::lit(1e-13),
            max_intervals: 2000,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<V, T> {
    pub value: V,
    pub error: T,
    pub intervals: usize,
}

struct Segment<T> {
    a: T,
    b: T,
    value: Complex<T>,
    error: T,
}

fn gk15<T: Real, F: FnMut(T) -> Complex<T>>(f: &mut F, a: T, b: T) -> (Complex<T>, T) {
    let half = (b - a) * T::lit(0.5);
    let center = (a + b) * T::lit(0.5);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for i in 0..7 {
        let dx = half * T::lit(XGK[i]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod = kronrod + (f1 + f2) * T::lit(WGK[i]);
        if i % 2 == 1 {
            gauss = gauss + (f1 + f2) * T::lit(WG[i / 2]);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    (value, error)
}

/// Integrates a complex-valued `f` over consecutive `breakpoints`
/// (at least two, increasing).
pub fn integrate<T, F>(
    mut f: F,
    breakpoints: &[T],
    opts: QuadOptions<T>,
) -> Result<QuadResult<Complex<T>, T>>
where
    T: Real,
    F: FnMut(T) -> Complex<T>,
{
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let mut segments: Vec<Segment<T>> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (value, error) = gk15(&mut f, w[0], w[1]);
            Segment {
                a: w[0],
                b: w[1],
                value,
                error,
            }
        })
        .collect();
    if segments.is_empty() {
        return Ok(QuadResult {
            value: Complex::new(T::zero(), T::zero()),
            error: T::zero(),
            intervals: 0,
        });
    }
    loop {
        let total: Complex<T> = segments
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, s| acc + s.value);
        let error: T = segments.iter().fold(T::zero(), |acc, s| acc + s.error);
        let target = opts.abs_tol.max(opts.rel_tol * total.norm());
        if error <= target {
            return Ok(QuadResult {
                value: total,
                error,
                intervals: segments.len(),
            });
        }
        if segments.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                context: "adaptive Gauss-Kronrod",
                error: error.to_f64().unwrap_or(f64::NAN),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, be), (i, s)| {
                if s.error > be {
                    (i, s.error)
                } else {
                    (bi, be)
                }
            });
        let seg = segments.swap_remove(worst);
        let mid = (seg.a + seg.b) * T::lit(0.5);
        if !(mid > seg.a && mid < seg.b) {
            // Interval can no longer be split in this precision.
            return Err(Error::Quadrature {
                context: "adaptive Gauss-Kronrod (interval underflow)",
                error: error.to_f64().unwrap_or(f64::NAN),
            });
        }
        for (a, b) in [(seg.a, mid), (mid, seg.b)] {
            let (value, error) = gk15(&mut f, a, b);
            segments.push(Segment { a, b, value, error });
        }
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<T, F>(mut f: F, breakpoints: &[T], opts: QuadOptions<T>) -> Result<QuadResult<T, T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let r = integrate(|x| Complex::new(f(x), T::zero()), breakpoints, opts)?;
    Ok(QuadResult {
        value: r.value.re,
        error: r.error,
        intervals: r.intervals,
    })
}
