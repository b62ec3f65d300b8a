use rand::Rng;

use super::ModelError;
use crate::scalar::Scalar;

/// Law of the i.i.d. gaps of a renewal process. Gamma is parameterised by
/// shape and rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalDistribution<T> {
    Exponential { rate: T },
    Gamma { shape: T, rate: T },
    Deterministic { value: T },
    Uniform { lo: T, hi: T },
}

fn positive<T: Scalar>(name: &'static str, v: T) -> Result<T, ModelError> {
    if v > T::zero() && v.is_finite() {
        Ok(v)
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value: v.as_f64(),
        })
    }
}

impl<T: Scalar> IntervalDistribution<T> {
    pub fn exponential(rate: T) -> Result<Self, ModelError> {
        Ok(Self::Exponential {
            rate: positive("rate", rate)?,
        })
    }

    pub fn gamma(shape: T, rate: T) -> Result<Self, ModelError> {
        Ok(Self::Gamma {
            shape: positive("shape", shape)?,
            rate: positive("rate", rate)?,
        })
    }

    pub fn deterministic(value: T) -> Result<Self, ModelError> {
        Ok(Self::Deterministic {
            value: positive("value", value)?,
        })
    }

    pub fn uniform(lo: T, hi: T) -> Result<Self, ModelError> {
        if !(lo >= T::zero()) {
            return Err(ModelError::InvalidParameter {
                name: "lower",
                value: lo.as_f64(),
            });
        }
        positive("upper", hi)?;
        if !(hi > lo) {
            return Err(ModelError::InvalidParameter {
                name: "upper",
                value: hi.as_f64(),
            });
        }
        Ok(Self::Uniform { lo, hi })
    }

    pub fn mean(&self) -> T {
        match *self {
            Self::Exponential { rate } => rate.recip(),
            Self::Gamma { shape, rate } => shape / rate,
            Self::Deterministic { value } => value,
            Self::Uniform { lo, hi } => (lo + hi) / (T::one() + T::one()),
        }
    }

    pub fn second_moment(&self) -> T {
        let two = T::one() + T::one();
        match *self {
            Self::Exponential { rate } => two / (rate * rate),
            Self::Gamma { shape, rate } => shape * (shape + T::one()) / (rate * rate),
            Self::Deterministic { value } => value * value,
            Self::Uniform { lo, hi } => (lo * lo + lo * hi + hi * hi) / (two + T::one()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match *self {
            Self::Exponential { rate } => T::sample_exp1(rng) / rate,
            Self::Gamma { shape, rate } => sample_gamma(shape, rate, rng),
            Self::Deterministic { value } => value,
            Self::Uniform { lo, hi } => lo + (hi - lo) * T::sample_open01(rng),
        }
    }

    /// Draws from the length-biased law with density `x f(x) / mean`.
    ///
    /// Exponential and Gamma laws map to Gamma with the shape raised by one.
    /// Uniform(a, b) uses rejection from the uniform proposal on `[a, b]`,
    /// accepting `x` with probability `x / b`; the acceptance rate is
    /// `(a + b) / 2b >= 1/2`.
    pub fn sample_length_biased<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match *self {
            Self::Exponential { rate } => sample_gamma(T::one() + T::one(), rate, rng),
            Self::Gamma { shape, rate } => sample_gamma(shape + T::one(), rate, rng),
            Self::Deterministic { value } => value,
            Self::Uniform { lo, hi } => loop {
                let x = lo + (hi - lo) * T::sample_open01(rng);
                if T::sample_open01(rng) * hi < x {
                    break x;
                }
            },
        }
    }
}

/// Gamma variate; integer shapes up to 8 are summed exponentials.
pub(crate) fn sample_gamma<T: Scalar, R: Rng + ?Sized>(shape: T, rate: T, rng: &mut R) -> T {
    if shape == shape.round() && shape <= T::from_i64(8) {
        let k = shape.to_i64().unwrap_or(0);
        let mut total = T::zero();
        for _ in 0..k {
            total = total + T::sample_exp1(rng);
        }
        total / rate
    } else {
        T::sample_gamma(shape, rate, rng)
    }
}
