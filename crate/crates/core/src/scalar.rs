//! Scalar abstraction shared by every numerical module.
//!
//! All kernels are written against [`Real`], which is implemented for `f32`
//! and `f64`. Tolerances quoted in tests and acceptance checks assume `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftPlanner;

/// Direction of a discrete Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FftDirection {
    /// Kernel `exp(-2πi jm/N)`.
    Forward,
    /// Kernel `exp(+2πi jm/N)`, unnormalized.
    Inverse,
}

/// Floating-point scalar usable by the laboratory.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + LowerExp
    + Display
    + Debug
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self;

    /// Converts a count or index into this scalar type.
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    /// In-place 1D FFTs of length `len` over consecutive chunks of `buf`
    /// (unnormalized in both directions).
    fn fft_in_place(buf: &mut [Complex<Self>], len: usize, direction: FftDirection);
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            fn fft_in_place(buf: &mut [Complex<Self>], len: usize, direction: FftDirection) {
                assert!(len > 0 && buf.len() % len == 0, "buffer is not a whole number of transforms");
                let mut planner = FftPlanner::<$t>::new();
                let fft = match direction {
                    FftDirection::Forward => planner.plan_fft_forward(len),
                    FftDirection::Inverse => planner.plan_fft_inverse(len),
                };
                fft.process(buf);
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_round_trip_f32_and_f64() {
        fn check<T: Real>(tol: f64) {
            let data: Vec<Complex<T>> = (0..16)
                .map(|j| Complex::new(T::lit(j as f64).sin(), T::lit(0.5 * j as f64)))
                .collect();
            let mut buf = data.clone();
            T::fft_in_place(&mut buf, 16, FftDirection::Forward);
            T::fft_in_place(&mut buf, 16, FftDirection::Inverse);
            let n = T::from_usize_lossy(buf.len());
            for (a, b) in buf.iter().zip(&data) {
                assert!(((*a / n) - *b).norm().to_f64().unwrap() < tol);
            }
        }
        check::<f32>(1e-5);
        check::<f64>(1e-13);
    }
}
