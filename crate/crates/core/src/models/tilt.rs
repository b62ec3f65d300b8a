use std::fmt;

use super::ModelError;
use crate::pattern::{PointPattern, View};
use crate::scalar::Scalar;

/// Registered Radon–Nikodym weight functionals `sigma` for tilting a
/// time-stationary law. Weights need not be normalised; estimators
/// self-normalise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tilt<T> {
    /// `sigma = 1`.
    Unit,
    /// `sigma = c * alpha_0`.
    ScaledAlpha0 { c: T },
    /// `sigma = gamma0 * alpha_0 + gamma1 * alpha_1`.
    Linear { gamma0: T, gamma1: T },
}

impl<T: Scalar> Tilt<T> {
    /// Looks a tilt up by name with its parameters.
    pub fn from_name(name: &str, params: &[T]) -> Result<Self, ModelError> {
        let nonneg = |name: &'static str, v: T| {
            if v >= T::zero() && v.is_finite() {
                Ok(v)
            } else {
                Err(ModelError::InvalidParameter {
                    name,
                    value: v.as_f64(),
                })
            }
        };
        match (name, params) {
            ("unit", []) => Ok(Self::Unit),
            ("scaled_alpha0", [c]) if *c > T::zero() => Ok(Self::ScaledAlpha0 { c: *c }),
            ("scaled_alpha0", [c]) => Err(ModelError::InvalidParameter {
                name: "c",
                value: c.as_f64(),
            }),
            ("linear", [g0, g1]) => {
                let (gamma0, gamma1) = (nonneg("gamma0", *g0)?, nonneg("gamma1", *g1)?);
                if gamma0 + gamma1 == T::zero() {
                    return Err(ModelError::InvalidParameter {
                        name: "gamma1",
                        value: 0.0,
                    });
                }
                Ok(Self::Linear { gamma0, gamma1 })
            }
            _ => Err(ModelError::UnknownTilt(format!(
                "{name} with {} parameter(s)",
                params.len()
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Unit => "unit",
            Self::ScaledAlpha0 { .. } => "scaled_alpha0",
            Self::Linear { .. } => "linear",
        }
    }

    /// `sigma` of the pattern seen from the view's origin.
    pub fn eval(&self, view: &View<'_, T>) -> Option<T> {
        match *self {
            Self::Unit => Some(T::one()),
            Self::ScaledAlpha0 { c } => Some(c * view.interval(0)?),
            Self::Linear { gamma0, gamma1 } => {
                let a0 = if gamma0 == T::zero() {
                    T::zero()
                } else {
                    view.interval(0)?
                };
                let a1 = if gamma1 == T::zero() {
                    T::zero()
                } else {
                    view.interval(1)?
                };
                Some(gamma0 * a0 + gamma1 * a1)
            }
        }
    }

    pub fn weight(&self, pattern: &PointPattern<T>) -> Option<T> {
        self.eval(&View::at(pattern, T::zero()))
    }

    /// Whether `sigma ∘ eta_0 = sigma`, i.e. the weight only reads the
    /// interval sequence. Every registered tilt has this property.
    pub fn is_event_shift_invariant(&self) -> bool {
        true
    }

    /// `∫_from^to sigma(θ_s p) ds`; `sigma ∘ θ_s` is constant while `s`
    /// stays between two points.
    pub fn occupation(&self, p: &PointPattern<T>, from: T, to: T) -> Option<T> {
        if !(to > from) {
            return Some(T::zero());
        }
        let pts = p.points();
        let start = pts.partition_point(|&t| t <= from);
        let mut cuts = vec![from];
        cuts.extend(pts[start..].iter().copied().take_while(|&t| t < to));
        cuts.push(to);
        let two = T::one() + T::one();
        let mut total = T::zero();
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                let s = self.eval(&View::at(p, (w[0] + w[1]) / two))?;
                total = total + s * (w[1] - w[0]);
            }
        }
        Some(total)
    }

    /// `E_ts(sigma)` under a time-stationary renewal base whose gaps have the
    /// given first two moments (the straddling gap is length biased).
    pub fn stationary_mean(&self, gap_mean: T, gap_second_moment: T) -> T {
        match *self {
            Self::Unit => T::one(),
            Self::ScaledAlpha0 { c } => c * gap_second_moment / gap_mean,
            Self::Linear { gamma0, gamma1 } => {
                gamma0 * gap_second_moment / gap_mean + gamma1 * gap_mean
            }
        }
    }
}

impl<T: Scalar> fmt::Display for Tilt<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Unit => write!(f, "unit"),
            Self::ScaledAlpha0 { c } => write!(f, "scaled_alpha0(c={c})"),
            Self::Linear { gamma0, gamma1 } => write!(f, "linear(g0={gamma0},g1={gamma1})"),
        }
    }
}
