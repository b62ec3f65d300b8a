//! Monte Carlo estimators of Palm probabilities, shifted and intermediate
//! distributions, and intensity profiles.
//!
//! All estimators are self-normalized ratio estimators over replications
//! (see [`tally`]), so weighted (tilted) models need no special handling.

pub mod tally;

use serde::Serialize;
use thiserror::Error;

pub use tally::{batch_size, Experiment, Obs, Tally, BATCH, MIN_BATCHES};

use crate::events::Eventuality;
use crate::models::{LawTag, ModelError, ProcessModel, Window};
use crate::pattern::{PatternError, PointPattern, View};
use crate::scalar::{Coord, Scalar};
use crate::streams::SeedStream;

/// Bins with fewer raw occurrences than this are reported as empty.
pub const MIN_BIN_COUNT: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no occurrences observed for {label}")]
    ZeroDenominator { label: String },
    #[error("only {coverage:.3} of replications observe the conditioning event for {label}")]
    InsufficientCoverage { label: String, coverage: f64 },
    #[error("effective sample size {ess:.1} is below 10% of {reps} replications")]
    LowEss { ess: f64, reps: u64 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("invalid bin grid: {0}")]
    InvalidGrid(String),
}

/// A Monte Carlo result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub reps: u64,
    pub rejected: u64,
    pub ess: f64,
}

impl Estimate {
    /// A known constant.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            reps: 0,
            rejected: 0,
            ess: 0.0,
        }
    }

    pub fn accepted(&self) -> u64 {
        self.reps - self.rejected
    }

    /// `sqrt(se^2 + se_other^2)`.
    pub fn combined_se(&self, other: &Estimate) -> f64 {
        self.std_error.hypot(other.std_error)
    }

    /// Whether `|self - other| <= z * combined_se + atol`.
    pub fn agrees(&self, other: &Estimate, z: f64, atol: f64) -> bool {
        (self.value - other.value).abs() <= z * self.combined_se(other) + atol
    }

    /// Whether `|self - target| <= z * se + atol`.
    pub fn near(&self, target: f64, z: f64, atol: f64) -> bool {
        (self.value - target).abs() <= z * self.std_error + atol
    }
}

/// Replication budget and sampling guard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub reps: u64,
    /// Minimum margin around the analysis region, in mean gaps.
    pub guard_gaps: f64,
}

impl Budget {
    pub fn new(reps: u64) -> Self {
        Self {
            reps,
            ..Self::default()
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            reps: 100_000,
            guard_gaps: 10.0,
        }
    }
}

/// Disjoint bins `(lo, hi]` in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct BinGrid {
    bins: Vec<(f64, f64)>,
}

impl BinGrid {
    pub fn new(bins: Vec<(f64, f64)>) -> Result<Self, EstimateError> {
        if bins.is_empty() {
            return Err(EstimateError::InvalidGrid("no bins".into()));
        }
        for &(lo, hi) in &bins {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(EstimateError::InvalidGrid(format!("bad bin ({lo}, {hi}]")));
            }
        }
        if bins.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(EstimateError::InvalidGrid(
                "bins overlap or are unsorted".into(),
            ));
        }
        Ok(Self { bins })
    }

    /// `n` equal bins covering `(lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self, EstimateError> {
        let width = (hi - lo) / n as f64;
        Self::new(
            (0..n)
                .map(|i| (lo + i as f64 * width, lo + (i + 1) as f64 * width))
                .collect(),
        )
    }

    /// One bin of the given width centred on each point.
    pub fn around(centers: &[f64], width: f64) -> Result<Self, EstimateError> {
        let mut c = centers.to_vec();
        c.sort_by(f64::total_cmp);
        Self::new(
            c.iter()
                .map(|&x| (x - width / 2.0, x + width / 2.0))
                .collect(),
        )
    }

    pub fn bins(&self) -> &[(f64, f64)] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.bins[0].0, self.bins[self.bins.len() - 1].1)
    }

    /// Bin holding `t`, if any.
    pub fn locate(&self, t: f64) -> Option<usize> {
        let j = self.bins.partition_point(|&(_, hi)| hi < t);
        (j < self.bins.len() && self.bins[j].0 < t).then_some(j)
    }
}

/// Per-bin Palm probabilities for one eventuality; `None` marks an empty bin.
#[derive(Debug, Clone, PartialEq)]
pub struct PalmProfile {
    pub label: String,
    pub bins: Vec<(f64, f64)>,
    pub values: Vec<Option<Estimate>>,
}

/// Occurrence rate per unit time in each bin.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityProfile {
    pub bins: Vec<(f64, f64)>,
    pub values: Vec<Estimate>,
}

impl IntensityProfile {
    /// `sum_j rate_j |bin_j ∩ (a, b]|`, approximating `E N(a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        self.bins
            .iter()
            .zip(&self.values)
            .map(|(&(lo, hi), e)| (hi.min(b) - lo.max(a)).max(0.0) * e.value)
            .sum()
    }
}

/// Sampling window covering `[lo, hi]`, the origin, and a margin of the
/// larger of `radius` and the budget's guard.
pub fn analysis_window<T: Scalar>(
    model: &ProcessModel<T>,
    lo: T,
    hi: T,
    radius: T,
    budget: &Budget,
) -> Result<Window<T>, EstimateError> {
    let guard = T::from_f64(budget.guard_gaps).expect("finite guard") * model.mean_gap();
    let reach = radius.max(guard).max(model.min_window());
    Ok(Window::new(
        lo.min(T::zero()) - reach,
        hi.max(T::zero()) + reach,
    )?)
}

fn max_radius<T: Coord>(events: &[Eventuality<T>]) -> T {
    events.iter().fold(T::zero(), |r, e| r.max_of(e.radius()))
}

fn require_ts<T: Scalar>(model: &ProcessModel<T>) -> Result<(), EstimateError> {
    if model.law_tag() != LawTag::Ts {
        return Err(ModelError::NotTimeStationary(model.to_string()).into());
    }
    Ok(())
}

fn coord<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("finite bin edge")
}

/// Probabilities `P(A)` under the model's own law, evaluated at the origin.
pub fn est_probability<T: Scalar>(
    model: &ProcessModel<T>,
    events: &[Eventuality<T>],
    budget: &Budget,
    stream: SeedStream,
) -> Result<Vec<Estimate>, EstimateError> {
    let window = analysis_window(model, T::zero(), T::zero(), max_radius(events), budget)?;
    let exp = Experiment::new(model, window, stream, budget.reps);
    exp.run(events.len(), |draw, obs| {
        for (slot, event) in obs.iter_mut().zip(events) {
            *slot = event
                .holds(&draw.pattern)
                .map(|v| (f64::from(u8::from(v)), 1.0));
        }
    })
}

/// Palm probabilities `P0(A) = E N_A(0, x] / E N(0, x]` of a
/// time-stationary model, one per eventuality.
pub fn est_palm_zero<T: Scalar>(
    model: &ProcessModel<T>,
    events: &[Eventuality<T>],
    x: T,
    budget: &Budget,
    stream: SeedStream,
) -> Result<Vec<Estimate>, EstimateError> {
    require_ts(model)?;
    let window = analysis_window(model, T::zero(), x, max_radius(events), budget)?;
    let exp = Experiment::new(model, window, stream, budget.reps);
    let tally = exp.tally(0..exp.batches(), events.len(), |draw, obs| {
        palm_counts(&draw.pattern, events, x, obs)
    })?;
    exp.check_ess(&tally)?;
    for (j, event) in events.iter().enumerate() {
        if tally.raw_den(j) == 0.0 {
            return Err(EstimateError::ZeroDenominator {
                label: event.label(),
            });
        }
    }
    Ok(tally.estimates(exp.is_exact()))
}

/// Occurrences of each eventuality among the points of `(0, x]`.
fn palm_counts<T: Coord>(p: &PointPattern<T>, events: &[Eventuality<T>], x: T, obs: &mut [Obs]) {
    let range = p.range_oc(T::zero(), x);
    let total = range.len() as f64;
    for (slot, event) in obs.iter_mut().zip(events) {
        let mut hits = 0usize;
        let mut resolved = true;
        for pos in range.clone() {
            match event.eval(&View::at_event(p, pos)) {
                Some(true) => hits += 1,
                Some(false) => {}
                None => {
                    resolved = false;
                    break;
                }
            }
        }
        if resolved {
            *slot = Some((hits as f64, total));
        }
    }
}

/// Palm probabilities from observed patterns, each pattern counting as one
/// replication of a time-stationary law.
pub fn est_palm_zero_observed<T: Coord>(
    patterns: &[PointPattern<T>],
    events: &[Eventuality<T>],
    x: T,
) -> Result<Vec<Estimate>, EstimateError> {
    let mut tally = Tally::new(events.len());
    let mut obs = vec![None; events.len()];
    let size = batch_size(patterns.len() as u64);
    for (i, p) in patterns.iter().enumerate() {
        obs.fill(None);
        palm_counts(p, events, x, &mut obs);
        tally.record(i as u64 / size, 1.0, &obs);
    }
    for (j, event) in events.iter().enumerate() {
        if tally.raw_den(j) == 0.0 {
            return Err(EstimateError::ZeroDenominator {
                label: event.label(),
            });
        }
    }
    Ok(tally.estimates(false))
}

/// Shifted Palm probabilities `P^{0,x}(A)`, estimated per bin as the ratio
/// of `A`-occurrences to occurrences in the bin.
pub fn est_shifted_palm<T: Scalar>(
    model: &ProcessModel<T>,
    events: &[Eventuality<T>],
    grid: &BinGrid,
    budget: &Budget,
    stream: SeedStream,
) -> Result<Vec<PalmProfile>, EstimateError> {
    let (glo, ghi) = grid.span();
    let window = analysis_window(model, coord(glo), coord(ghi), max_radius(events), budget)?;
    let exp = Experiment::new(model, window, stream, budget.reps);
    let nb = grid.len();
    let edges: Vec<(T, T)> = grid
        .bins()
        .iter()
        .map(|&(a, b)| (coord(a), coord(b)))
        .collect();
    let tally = exp.tally(0..exp.batches(), events.len() * nb, |draw, obs| {
        let p = &draw.pattern;
        let (plo, phi) = p.window();
        for (j, &(a, b)) in edges.iter().enumerate() {
            if a < plo || b > phi {
                continue;
            }
            let range = p.range_oc(a, b);
            let total = range.len() as f64;
            for (e, event) in events.iter().enumerate() {
                let mut hits = 0usize;
                let mut resolved = true;
                for pos in range.clone() {
                    match event.eval(&View::at_event(p, pos)) {
                        Some(true) => hits += 1,
                        Some(false) => {}
                        None => {
                            resolved = false;
                            break;
                        }
                    }
                }
                if resolved {
                    obs[e * nb + j] = Some((hits as f64, total));
                }
            }
        }
    })?;
    exp.check_ess(&tally)?;
    Ok(events
        .iter()
        .enumerate()
        .map(|(e, event)| PalmProfile {
            label: event.label(),
            bins: grid.bins().to_vec(),
            values: (0..nb)
                .map(|j| {
                    let k = e * nb + j;
                    (tally.raw_den(k) >= MIN_BIN_COUNT).then(|| tally.estimate(k, exp.is_exact()))
                })
                .collect(),
        })
        .collect())
}

/// Intensity `lambda(x)` per bin: mean occurrences per unit length.
/// Bins never observed report rate 0 with infinite standard error.
pub fn est_intensity<T: Scalar>(
    model: &ProcessModel<T>,
    grid: &BinGrid,
    budget: &Budget,
    stream: SeedStream,
) -> Result<IntensityProfile, EstimateError> {
    let (glo, ghi) = grid.span();
    let window = analysis_window(model, coord(glo), coord(ghi), T::zero(), budget)?;
    let exp = Experiment::new(model, window, stream, budget.reps);
    let edges: Vec<(T, T)> = grid
        .bins()
        .iter()
        .map(|&(a, b)| (coord(a), coord(b)))
        .collect();
    let values = exp.run(grid.len(), |draw, obs| {
        let p = &draw.pattern;
        let (plo, phi) = p.window();
        for (slot, &(a, b)) in obs.iter_mut().zip(&edges) {
            if a >= plo && b <= phi {
                *slot = Some((p.range_oc(a, b).len() as f64, (b - a).as_f64()));
            }
        }
    })?;
    Ok(IntensityProfile {
        bins: grid.bins().to_vec(),
        values: values
            .into_iter()
            .map(|e| {
                if e.value.is_nan() {
                    Estimate {
                        value: 0.0,
                        std_error: f64::INFINITY,
                        ..e
                    }
                } else {
                    e
                }
            })
            .collect(),
    })
}

/// How far from the origin `T_n` may lie to count as observed, for the
/// intermediate distribution `P_n`.
fn intermediate_reach<T: Scalar>(model: &ProcessModel<T>, n: i64) -> T {
    T::from_i64(2 * n.abs() + 10) * model.mean_gap()
}

/// Intermediate probabilities `P_n(A) = P(eta_n p in A | T_n observed)`.
/// The fraction of replications observing `T_n` is reported through
/// `rejected`.
pub fn est_intermediate<T: Scalar>(
    model: &ProcessModel<T>,
    n: i64,
    events: &[Eventuality<T>],
    budget: &Budget,
    stream: SeedStream,
) -> Result<Vec<Estimate>, EstimateError> {
    let reach = intermediate_reach(model, n);
    let window = analysis_window(model, -reach, reach, max_radius(events), budget)?;
    let exp = Experiment::new(model, window, stream, budget.reps);
    let estimates = exp.run(events.len(), |draw, obs| {
        let p = &draw.pattern;
        let Ok(pos) = p.position(n) else { return };
        if p.points()[pos].abs() > reach {
            return;
        }
        let view = View::at_event(p, pos);
        for (slot, event) in obs.iter_mut().zip(events) {
            if let Some(v) = event.eval(&view) {
                *slot = Some((f64::from(u8::from(v)), 1.0));
            }
        }
    })?;
    for (e, event) in estimates.iter().zip(events) {
        let coverage = e.accepted() as f64 / e.reps as f64;
        if coverage < 0.5 {
            return Err(EstimateError::InsufficientCoverage {
                label: event.label(),
                coverage,
            });
        }
    }
    Ok(estimates)
}

/// Re-centres `p` at `T_0 + u alpha_0`. Pushing samples of `P` through
/// this map with `u` uniform samples `P*`.
pub fn resample_pstar<T: Coord>(
    p: &PointPattern<T>,
    u: T,
) -> Result<PointPattern<T>, PatternError> {
    let (i0, i1) = p.locate_indices()?;
    let (t0, t1) = (p.points()[i0], p.points()[i1]);
    Ok(p.shift_time(t0 + u * (t1 - t0)))
}
