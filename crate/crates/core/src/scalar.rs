//! Scalar abstractions.
//!
//! Geometry (patterns, shifts, counts, eventualities) only needs ordered field
//! arithmetic and is written against [`Coord`], which covers `f32`, `f64` and
//! exact rationals. Sampling needs transcendental functions and random
//! variates and is written against [`Scalar`], the floating point refinement.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Float, Num, Signed};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01};

/// An ordered field element usable as a timestamp.
pub trait Coord:
    Copy + PartialOrd + Num + Signed + Debug + Display + Send + Sync + 'static
{
    /// Smallest admissible separation between neighbouring points.
    fn min_gap() -> Self;

    fn from_i64(v: i64) -> Self;

    /// Converts a finite `f64`; `None` when the value has no representation.
    fn from_f64(v: f64) -> Option<Self>;

    fn as_f64(self) -> f64;

    fn is_finite_coord(self) -> bool;

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

/// A floating point [`Coord`] that can also be sampled.
pub trait Scalar: Coord + Float {
    fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw on the open interval (0, 1).
    fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Gamma variate with the given shape and rate.
    fn sample_gamma<R: Rng + ?Sized>(shape: Self, rate: Self, rng: &mut R) -> Self;
}

macro_rules! impl_float_scalar {
    ($f:ty, $gap:expr) => {
        impl Coord for $f {
            fn min_gap() -> Self {
                $gap
            }

            fn from_i64(v: i64) -> Self {
                v as $f
            }

            fn from_f64(v: f64) -> Option<Self> {
                v.is_finite().then_some(v as $f)
            }

            fn as_f64(self) -> f64 {
                self as f64
            }

            fn is_finite_coord(self) -> bool {
                self.is_finite()
            }
        }

        impl Scalar for $f {
            fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Exp1.sample(rng)
            }

            fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Open01.sample(rng)
            }

            fn sample_gamma<R: Rng + ?Sized>(shape: Self, rate: Self, rng: &mut R) -> Self {
                // Gamma::new only fails on non-positive parameters, which the
                // interval distribution constructors already exclude.
                Gamma::new(shape, 1.0 / rate)
                    .expect("validated gamma parameters")
                    .sample(rng)
            }
        }
    };
}

impl_float_scalar!(f64, 1e-12);
impl_float_scalar!(f32, 1e-6);

impl Coord for Ratio<i64> {
    fn min_gap() -> Self {
        Ratio::from_integer(0)
    }

    fn from_i64(v: i64) -> Self {
        Ratio::from_integer(v)
    }

    fn from_f64(v: f64) -> Option<Self> {
        Ratio::approximate_float(v)
    }

    fn as_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn is_finite_coord(self) -> bool {
        true
    }
}
