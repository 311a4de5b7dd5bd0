//! Scalar abstraction shared by all sampling and statistics code.
//!
//! Every module in this crate is generic over a floating-point scalar so the
//! same simulator runs in `f32` or `f64`. The crate root exports concrete
//! `f64` aliases for normal use.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast};
use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar: `f32` or `f64`.
///
/// Carries the two primitive draws the samplers need so that generic code
/// never has to thread distribution bounds around.
pub trait SimScalar:
    Float + FromPrimitive + NumCast + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Uniform draw on the open interval (0, 1).
    fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Standard normal draw.
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Order-preserving integer key for non-negative finite values (the IEEE
    /// bit pattern), used by the backlog's sorted indexes.
    fn order_key(self) -> u64;
}

impl SimScalar for f32 {
    #[inline]
    fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(Open01)
    }

    #[inline]
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    #[inline]
    fn order_key(self) -> u64 {
        debug_assert!(self >= 0.0 && self.is_finite());
        self.to_bits() as u64
    }
}

impl SimScalar for f64 {
    #[inline]
    fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(Open01)
    }

    #[inline]
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    #[inline]
    fn order_key(self) -> u64 {
        debug_assert!(self >= 0.0 && self.is_finite());
        self.to_bits()
    }
}

/// Default scalar used by the concrete aliases and the CLI.
pub type Scalar = f64;

/// Casts an `f64` constant into the working scalar type.
#[inline]
pub(crate) fn cast<F: SimScalar>(x: f64) -> F {
    F::from_f64(x).expect("constant not representable in scalar type")
}
