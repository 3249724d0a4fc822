//! Floating-point abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// A real scalar the model can be evaluated in (`f32` or `f64`).
///
/// Random draws go through the trait so generic code never needs to spell
/// out `rand_distr` bounds.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    type GammaDist: Distribution<Self> + Clone + Debug + Send + Sync;

    /// Gamma(shape, scale); `None` for non-positive or non-finite parameters.
    fn gamma_dist(shape: Self, scale: Self) -> Option<Self::GammaDist>;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform on `[0, 1)`.
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Converts an `f64` literal; every literal used by the crate is representable.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type GammaDist = Gamma<$t>;

            fn gamma_dist(shape: Self, scale: Self) -> Option<Self::GammaDist> {
                if !(shape.is_finite() && scale.is_finite() && shape > 0.0 && scale > 0.0) {
                    return None;
                }
                Gamma::new(shape, scale).ok()
            }

            #[inline]
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            #[inline]
            fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$t>()
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);
