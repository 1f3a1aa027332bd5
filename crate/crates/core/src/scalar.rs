//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point type the simulator is generic over (`f32` or `f64`).
///
/// The associated tolerances are expressed as `f64` and converted on use;
/// the `f64` values are the documented defaults of the library.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Amplitudes with magnitude below this are dropped from a state.
    const PRUNE_TOL: f64;
    /// Allowed deviation of a normalized state's norm from one.
    const NORM_TOL: f64;
    /// Singular values at or below `RANK_TOL * sigma_max` count as zero.
    const RANK_TOL: f64;
    /// Hermiticity, positivity and unitarity slack for small dense matrices.
    const MATRIX_TOL: f64;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f64 {
    const PRUNE_TOL: f64 = 1e-12;
    const NORM_TOL: f64 = 1e-9;
    const RANK_TOL: f64 = 1e-9;
    const MATRIX_TOL: f64 = 1e-10;
}

impl Real for f32 {
    const PRUNE_TOL: f64 = 1e-6;
    const NORM_TOL: f64 = 1e-5;
    const RANK_TOL: f64 = 1e-5;
    const MATRIX_TOL: f64 = 1e-5;
}

pub type Amplitude<T> = Complex<T>;

/// `exp(i * phase)`.
pub fn unit_phase<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}
