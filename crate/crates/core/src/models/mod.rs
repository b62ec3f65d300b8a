//! Seedable samplers for the process laws: time-stationary Poisson and
//! renewal processes, event-stationary renewal processes, tilted laws and
//! the two worked examples.
//!
//! A sampler fills a caller-supplied window `[lo, hi]` with `lo < 0 < hi`.
//! Callers size the window to cover their analysis region plus the
//! eventuality horizon on each side.

mod descriptor;
mod example44;
mod interval;
mod tilt;

use std::fmt;

use rand::Rng;
use thiserror::Error;

pub use descriptor::ModelConfig;
pub use example44::Example44;
pub use interval::IntervalDistribution;
pub use tilt::Tilt;

use crate::pattern::PointPattern;
use crate::scalar::Scalar;
use crate::streams::SeedStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("window of width {width} is too short; at least {required} is needed")]
    DegenerateWindow { width: f64, required: f64 },
    #[error("window [{lo}, {hi}] must contain the origin in its interior")]
    InvalidWindow { lo: f64, hi: f64 },
    #[error("interval distribution has no finite mean")]
    NoMean,
    #[error("unknown tilt: {0}")]
    UnknownTilt(String),
    #[error("operation requires a time-stationary model, got {0}")]
    NotTimeStationary(String),
    /// The draw cannot be completed inside the window (a tilt weight or a
    /// straddling gap reaches past it); estimators count it as a rejection.
    #[error("{0} depends on points outside the window")]
    Unresolved(&'static str),
    #[error("{0} cannot be re-centred: the law has no random origin placement")]
    NoPstar(String),
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
}

/// Which kind of law a model samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LawTag {
    /// Time-stationary.
    Ts,
    /// Event-stationary: every pattern has a point at 0.
    Es,
    /// Absolutely continuous with respect to a time-stationary law.
    TiltedTs,
    Deterministic,
}

/// Sampling window `[lo, hi]` around the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Window<T> {
    pub fn new(lo: T, hi: T) -> Result<Self, ModelError> {
        if !(lo < T::zero() && hi > T::zero()) || !lo.is_finite() || !hi.is_finite() {
            return Err(ModelError::InvalidWindow {
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        Ok(Self { lo, hi })
    }

    /// `[-half, half]`.
    pub fn symmetric(half: T) -> Result<Self, ModelError> {
        Self::new(-half, half)
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }
}

/// A sampled pattern with its importance weight (1 for exact samplers).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPattern<T> {
    pub pattern: PointPattern<T>,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind<T> {
    PoissonTs {
        rate: T,
    },
    RenewalEs {
        gaps: IntervalDistribution<T>,
    },
    RenewalTs {
        gaps: IntervalDistribution<T>,
    },
    Tilted {
        base: Box<ProcessModel<T>>,
        tilt: Tilt<T>,
    },
    Example84 {
        rate: T,
    },
    Example44 {
        len: u64,
        sequence: Example44,
    },
    Pstar {
        base: Box<ProcessModel<T>>,
    },
}

/// A seedable sampler for one process law.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessModel<T> {
    kind: Kind<T>,
}

/// Homogeneous Poisson process with the given rate.
pub fn poisson_ts<T: Scalar>(rate: T) -> Result<ProcessModel<T>, ModelError> {
    IntervalDistribution::exponential(rate)?;
    Ok(ProcessModel {
        kind: Kind::PoissonTs { rate },
    })
}

/// Event-stationary renewal process: a point at 0 and i.i.d. gaps.
pub fn renewal_es<T: Scalar>(gaps: IntervalDistribution<T>) -> ProcessModel<T> {
    ProcessModel {
        kind: Kind::RenewalEs { gaps },
    }
}

/// Time-stationary renewal process built by inversion: a length-biased
/// straddling gap with the origin placed uniformly inside it.
pub fn renewal_ts_from_es<T: Scalar>(
    gaps: IntervalDistribution<T>,
) -> Result<ProcessModel<T>, ModelError> {
    if !gaps.mean().is_finite() {
        return Err(ModelError::NoMean);
    }
    Ok(ProcessModel {
        kind: Kind::RenewalTs { gaps },
    })
}

/// Importance-weighted law `sigma dP_ts` over a time-stationary base.
pub fn tilted_ts<T: Scalar>(
    base: ProcessModel<T>,
    tilt: Tilt<T>,
) -> Result<ProcessModel<T>, ModelError> {
    if base.law_tag() != LawTag::Ts {
        return Err(ModelError::NotTimeStationary(base.to_string()));
    }
    Ok(ProcessModel {
        kind: Kind::Tilted {
            base: Box::new(base),
            tilt,
        },
    })
}

/// Exact sampler of the Poisson law tilted by `sigma = rate * alpha_0 / 2`:
/// the straddling gap is Gamma(3, rate), the origin uniform inside it, and
/// the remaining gaps Exponential(rate).
pub fn example84_exact<T: Scalar>(rate: T) -> Result<ProcessModel<T>, ModelError> {
    IntervalDistribution::exponential(rate)?;
    Ok(ProcessModel {
        kind: Kind::Example84 { rate },
    })
}

/// The deterministic lattice process with labels `x_1..x_len`: `T_0 = 0`,
/// unit gaps to the left, and `alpha_i = 1` or `2` as `x_i` is 1 or 0.
pub fn example44<T: Scalar>(pattern_len: u64) -> Result<ProcessModel<T>, ModelError> {
    if pattern_len == 0 {
        return Err(ModelError::InvalidParameter {
            name: "pattern_len",
            value: 0.0,
        });
    }
    Ok(ProcessModel {
        kind: Kind::Example44 {
            len: pattern_len,
            sequence: Example44::covering(pattern_len),
        },
    })
}

/// The law `P*` of `model`: each draw is re-centred at a uniform position
/// inside its straddling gap.
pub fn pstar<T: Scalar>(model: ProcessModel<T>) -> Result<ProcessModel<T>, ModelError> {
    if model.law_tag() == LawTag::Deterministic {
        return Err(ModelError::NoPstar(model.to_string()));
    }
    Ok(ProcessModel {
        kind: Kind::Pstar {
            base: Box::new(model),
        },
    })
}

impl<T: Scalar> ProcessModel<T> {
    pub fn law_tag(&self) -> LawTag {
        match &self.kind {
            Kind::PoissonTs { .. } | Kind::RenewalTs { .. } => LawTag::Ts,
            Kind::RenewalEs { .. } => LawTag::Es,
            Kind::Tilted { .. } | Kind::Example84 { .. } => LawTag::TiltedTs,
            Kind::Example44 { .. } => LawTag::Deterministic,
            // P* = P for time-stationary laws; for any other law with finite
            // mean gap, P* is absolutely continuous w.r.t. a TS law.
            Kind::Pstar { base } => match base.law_tag() {
                LawTag::Ts => LawTag::Ts,
                _ => LawTag::TiltedTs,
            },
        }
    }

    pub fn is_time_stationary(&self) -> bool {
        self.law_tag() == LawTag::Ts
    }

    /// Whether samples carry non-unit weights.
    pub fn is_weighted(&self) -> bool {
        match &self.kind {
            Kind::Tilted { .. } => true,
            Kind::Pstar { base } => base.is_weighted(),
            _ => false,
        }
    }

    /// Mean gap length, used to scale windows and horizons.
    pub fn mean_gap(&self) -> T {
        match &self.kind {
            Kind::PoissonTs { rate } | Kind::Example84 { rate } => rate.recip(),
            Kind::RenewalEs { gaps } | Kind::RenewalTs { gaps } => gaps.mean(),
            Kind::Tilted { base, .. } | Kind::Pstar { base } => base.mean_gap(),
            Kind::Example44 { .. } => T::from_f64(1.5).expect("constant"),
        }
    }

    /// Intensity of a time-stationary model.
    pub fn ts_intensity(&self) -> Option<T> {
        match &self.kind {
            Kind::PoissonTs { rate } => Some(*rate),
            Kind::RenewalTs { gaps } => Some(gaps.mean().recip()),
            _ => None,
        }
    }

    /// Event-stationary model with the Palm law of this time-stationary
    /// model.
    pub fn palm_oracle(&self) -> Option<ProcessModel<T>> {
        match &self.kind {
            Kind::PoissonTs { rate } => Some(renewal_es(IntervalDistribution::Exponential {
                rate: *rate,
            })),
            Kind::RenewalTs { gaps } => Some(renewal_es(*gaps)),
            _ => None,
        }
    }

    /// Gap law under the Palm distribution of a time-stationary renewal
    /// model.
    pub fn palm_gap_law(&self) -> Option<IntervalDistribution<T>> {
        match &self.kind {
            Kind::PoissonTs { rate } => Some(IntervalDistribution::Exponential { rate: *rate }),
            Kind::RenewalTs { gaps } => Some(*gaps),
            _ => None,
        }
    }

    /// For laws given as a tilt of a time-stationary base, the base and
    /// the weight functional.
    pub fn ts_base_and_tilt(&self) -> Option<(ProcessModel<T>, Tilt<T>)> {
        match &self.kind {
            Kind::Tilted { base, tilt } => Some(((**base).clone(), *tilt)),
            Kind::Example84 { rate } => Some((
                poisson_ts(*rate).expect("validated rate"),
                Tilt::ScaledAlpha0 {
                    c: *rate / (T::one() + T::one()),
                },
            )),
            Kind::PoissonTs { .. } | Kind::RenewalTs { .. } => Some((self.clone(), Tilt::Unit)),
            _ => None,
        }
    }

    /// Whether the law is invariant under re-centering uniformly in the
    /// straddling gap. Holds for time-stationary laws and for tilts whose
    /// weight is event-shift invariant.
    pub fn pstar_invariant(&self) -> bool {
        match &self.kind {
            Kind::PoissonTs { .. } | Kind::RenewalTs { .. } | Kind::Example84 { .. } => true,
            Kind::Tilted { tilt, .. } => tilt.is_event_shift_invariant(),
            Kind::Pstar { .. } => true,
            Kind::RenewalEs { .. } | Kind::Example44 { .. } => false,
        }
    }

    /// Exact block ends `b(k)` of the lattice example, up to its length.
    pub fn landmarks(&self) -> Vec<u64> {
        match &self.kind {
            Kind::Example44 { len, sequence } => sequence
                .block_ends()
                .iter()
                .copied()
                .filter(|&b| b <= *len)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// The label sequence of the lattice example.
    pub fn example44_sequence(&self) -> Option<&Example44> {
        match &self.kind {
            Kind::Example44 { sequence, .. } => Some(sequence),
            _ => None,
        }
    }

    /// Smallest admissible sampling window width.
    pub fn min_window(&self) -> T {
        match &self.kind {
            Kind::PoissonTs { rate } => T::from_i64(4) / *rate,
            Kind::Tilted { base, .. } => base.min_window(),
            _ => T::zero(),
        }
    }

    pub fn check_window(&self, window: &Window<T>) -> Result<(), ModelError> {
        let required = self.min_window();
        if window.width() < required {
            return Err(ModelError::DegenerateWindow {
                width: window.width().as_f64(),
                required: required.as_f64(),
            });
        }
        Ok(())
    }

    /// Draws one weighted pattern on `window`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        window: &Window<T>,
    ) -> Result<WeightedPattern<T>, ModelError> {
        self.check_window(window)?;
        let exact = |pattern| WeightedPattern {
            pattern,
            weight: T::one(),
        };
        let (lo, hi) = (window.lo, window.hi);
        match &self.kind {
            Kind::PoissonTs { rate } => {
                let gaps = IntervalDistribution::Exponential { rate: *rate };
                loop {
                    let mut pts = Vec::new();
                    let first_back = -gaps.sample(rng);
                    extend_backward(first_back, lo, &gaps, rng, &mut pts);
                    let left = pts.len();
                    let first_fwd = gaps.sample(rng);
                    extend_forward(first_fwd, hi, &gaps, rng, &mut pts);
                    if left > 0 && pts.len() > left {
                        if let Some(p) = simple(pts, lo, hi) {
                            return Ok(exact(p));
                        }
                    }
                }
            }
            Kind::RenewalEs { gaps } => loop {
                let mut pts = Vec::new();
                let first_back = -gaps.sample(rng);
                extend_backward(first_back, lo, gaps, rng, &mut pts);
                pts.push(T::zero());
                let first_fwd = gaps.sample(rng);
                extend_forward(first_fwd, hi, gaps, rng, &mut pts);
                if let Some(p) = simple(pts, lo, hi) {
                    return Ok(exact(p));
                }
            },
            Kind::RenewalTs { gaps } => loop {
                let length = gaps.sample_length_biased(rng);
                if let Some(p) = straddled(length, lo, hi, gaps, rng) {
                    return Ok(exact(p));
                }
            },
            Kind::Example84 { rate } => {
                let gaps = IntervalDistribution::Exponential { rate: *rate };
                loop {
                    let length = interval::sample_gamma(T::from_i64(3), *rate, rng);
                    if let Some(p) = straddled(length, lo, hi, &gaps, rng) {
                        return Ok(exact(p));
                    }
                }
            }
            Kind::Tilted { base, tilt } => {
                let drawn = base.sample(rng, window)?;
                let weight = tilt
                    .weight(&drawn.pattern)
                    .ok_or(ModelError::Unresolved("tilt weight"))?;
                Ok(WeightedPattern {
                    pattern: drawn.pattern,
                    weight: weight * drawn.weight,
                })
            }
            Kind::Example44 { len, sequence } => Ok(exact(lattice(*len, sequence, lo, hi))),
            Kind::Pstar { base } => {
                let margin = T::from_i64(10) * base.mean_gap();
                let wide = Window::new(lo - margin, hi + margin)?;
                let drawn = base.sample(rng, &wide)?;
                let u = T::sample_open01(rng);
                let moved = crate::estimate::resample_pstar(&drawn.pattern, u)
                    .map_err(|_| ModelError::Unresolved("straddling gap"))?;
                Ok(WeightedPattern {
                    pattern: moved.clip(lo, hi),
                    weight: drawn.weight,
                })
            }
        }
    }

    /// Draws replication `index` of `stream`.
    pub fn sample_seeded(
        &self,
        stream: &SeedStream,
        index: u64,
        window: &Window<T>,
    ) -> Result<WeightedPattern<T>, ModelError> {
        self.sample(&mut stream.rng(index), window)
    }
}

/// Pushes `start, start - g1, start - g1 - g2, ...` while `>= lo`, in
/// increasing order.
fn extend_backward<T: Scalar, R: Rng + ?Sized>(
    start: T,
    lo: T,
    gaps: &IntervalDistribution<T>,
    rng: &mut R,
    out: &mut Vec<T>,
) {
    let begin = out.len();
    let mut t = start;
    while t >= lo {
        out.push(t);
        t = t - gaps.sample(rng);
    }
    out[begin..].reverse();
}

/// Pushes `start, start + g1, ...` while `<= hi`.
fn extend_forward<T: Scalar, R: Rng + ?Sized>(
    start: T,
    hi: T,
    gaps: &IntervalDistribution<T>,
    rng: &mut R,
    out: &mut Vec<T>,
) {
    let mut t = start;
    while t <= hi {
        out.push(t);
        t = t + gaps.sample(rng);
    }
}

/// Places the origin uniformly inside a straddling gap of the given length
/// and extends with i.i.d. gaps both ways.
fn straddled<T: Scalar, R: Rng + ?Sized>(
    length: T,
    lo: T,
    hi: T,
    gaps: &IntervalDistribution<T>,
    rng: &mut R,
) -> Option<PointPattern<T>> {
    let u = T::sample_open01(rng);
    let t0 = -(u * length);
    let t1 = (T::one() - u) * length;
    let mut pts = Vec::new();
    extend_backward(t0, lo, gaps, rng, &mut pts);
    extend_forward(t1, hi, gaps, rng, &mut pts);
    simple(pts, lo, hi)
}

/// Accepts the points if neighbours respect the minimum gap.
fn simple<T: Scalar>(pts: Vec<T>, lo: T, hi: T) -> Option<PointPattern<T>> {
    let gap = T::min_gap();
    if pts.windows(2).all(|w| w[1] - w[0] >= gap) {
        Some(PointPattern::from_trusted(pts, lo, hi))
    } else {
        None
    }
}

/// The lattice realization, truncated to the window. The pattern's window
/// ends at `T_{len+1}` when that comes first: beyond it the process is
/// unspecified.
fn lattice<T: Scalar>(len: u64, sequence: &Example44, lo: T, hi: T) -> PointPattern<T> {
    let mut pts = Vec::new();
    let mut t = T::zero();
    while t >= lo {
        pts.push(t);
        t = t - T::one();
    }
    pts.reverse();
    let two = T::one() + T::one();
    let mut t = T::one();
    let mut end = hi;
    for i in 1..=len + 1 {
        if t > hi {
            break;
        }
        pts.push(t);
        if i == len + 1 {
            end = t;
            break;
        }
        let x = sequence
            .label(i)
            .expect("sequence covers the pattern length");
        t = t + if x { T::one() } else { two };
    }
    PointPattern::from_trusted(pts, lo, end)
}

impl<T: Scalar> fmt::Display for ProcessModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::PoissonTs { rate } => write!(f, "poisson_ts(rate={rate})"),
            Kind::RenewalEs { gaps } => write!(f, "renewal_es({gaps})"),
            Kind::RenewalTs { gaps } => write!(f, "renewal_ts_from_es({gaps})"),
            Kind::Tilted { base, tilt } => write!(f, "tilted_ts({base};{tilt})"),
            Kind::Example84 { rate } => write!(f, "example84_exact(rate={rate})"),
            Kind::Example44 { len, .. } => write!(f, "example44(pattern_len={len})"),
            Kind::Pstar { base } => write!(f, "pstar({base})"),
        }
    }
}

impl<T: Scalar> fmt::Display for IntervalDistribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential { rate } => write!(f, "exponential(rate={rate})"),
            Self::Gamma { shape, rate } => write!(f, "gamma(shape={shape};rate={rate})"),
            Self::Deterministic { value } => write!(f, "deterministic(value={value})"),
            Self::Uniform { lo, hi } => write!(f, "uniform(lower={lo};upper={hi})"),
        }
    }
}
