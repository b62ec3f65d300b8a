//! Mergeable ratio accumulators and the replication driver.
//!
//! Every quantity is estimated as a ratio `sum(num) / sum(den)` over
//! replications; plain means use `den = 1`. Replications are grouped into
//! batches (see [`batch_size`]) and the standard error comes from the spread of the
//! per-batch sums (batch means delta method):
//!
//! ```text
//! R = sum n_b / sum d_b
//! s^2 = sum (n_b - R d_b)^2 / (B - 1)
//! se = sqrt(B s^2) / sum d_b
//! ```
//!
//! Batch sums are keyed by batch index, so merging partial tallies gives
//! bit-identical results whatever the merge order or thread count.

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;

use super::{Estimate, EstimateError};
use crate::models::{ModelError, ProcessModel, WeightedPattern, Window};
use crate::scalar::Scalar;
use crate::streams::SeedStream;

/// Replications per batch for large budgets.
pub const BATCH: u64 = 64;

/// Smallest number of batches the standard error is computed from, budget
/// permitting.
pub const MIN_BATCHES: u64 = 32;

/// Replications per batch for a budget of `reps`: [`BATCH`], or fewer so
/// that there are at least [`MIN_BATCHES`] batches.
pub fn batch_size(reps: u64) -> u64 {
    (reps / MIN_BATCHES).clamp(1, BATCH)
}

/// One replication's contribution to one component: `(num, den)`, or
/// `None` when the replication is rejected for that component.
pub type Obs = Option<(f64, f64)>;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Sums {
    num: f64,
    den: f64,
    /// Unweighted denominator, for minimum-count checks.
    raw_den: f64,
    w: f64,
    w2: f64,
    accepted: u64,
}

#[derive(Debug, Clone, PartialEq)]
struct Batch {
    reps: u64,
    /// Weights of every replication, accepted or not.
    w: f64,
    w2: f64,
    components: Vec<Sums>,
}

impl Batch {
    fn new(dims: usize) -> Self {
        Self {
            reps: 0,
            w: 0.0,
            w2: 0.0,
            components: vec![Sums::default(); dims],
        }
    }

    fn add(&mut self, weight: f64, obs: &[Obs]) {
        self.reps += 1;
        self.w += weight;
        self.w2 += weight * weight;
        for (s, o) in self.components.iter_mut().zip(obs) {
            if let Some((n, d)) = *o {
                s.num += weight * n;
                s.den += weight * d;
                s.raw_den += d;
                s.w += weight;
                s.w2 += weight * weight;
                s.accepted += 1;
            }
        }
    }
}

/// Per-batch sums for a vector of ratio estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Tally {
    dims: usize,
    batches: BTreeMap<u64, Batch>,
}

impl Tally {
    pub fn new(dims: usize) -> Self {
        Self {
            dims,
            batches: BTreeMap::new(),
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Adds replication results of batch `index`.
    pub fn record(&mut self, index: u64, weight: f64, obs: &[Obs]) {
        assert_eq!(obs.len(), self.dims, "observation width");
        self.batches
            .entry(index)
            .or_insert_with(|| Batch::new(self.dims))
            .add(weight, obs);
    }

    /// Combines two tallies. Tallies over disjoint batch ranges merge
    /// exactly; the result does not depend on the order.
    pub fn merge(mut self, other: Tally) -> Tally {
        assert_eq!(self.dims, other.dims, "merging tallies of different width");
        for (index, b) in other.batches {
            match self.batches.get_mut(&index) {
                None => {
                    self.batches.insert(index, b);
                }
                Some(mine) => {
                    mine.reps += b.reps;
                    mine.w += b.w;
                    mine.w2 += b.w2;
                    for (s, o) in mine.components.iter_mut().zip(&b.components) {
                        s.num += o.num;
                        s.den += o.den;
                        s.raw_den += o.raw_den;
                        s.w += o.w;
                        s.w2 += o.w2;
                        s.accepted += o.accepted;
                    }
                }
            }
        }
        self
    }

    pub fn reps(&self) -> u64 {
        self.batches.values().map(|b| b.reps).sum()
    }

    /// Effective sample size over all replications.
    pub fn ess(&self) -> f64 {
        let (w, w2) = self
            .batches
            .values()
            .fold((0.0, 0.0), |(w, w2), b| (w + b.w, w2 + b.w2));
        if w2 > 0.0 {
            w * w / w2
        } else {
            0.0
        }
    }

    /// Unweighted denominator total of component `j`.
    pub fn raw_den(&self, j: usize) -> f64 {
        self.batches.values().map(|b| b.components[j].raw_den).sum()
    }

    /// Ratio estimate of component `j`. With `exact`, the tally comes from
    /// a deterministic model and the standard error is zero.
    pub fn estimate(&self, j: usize, exact: bool) -> Estimate {
        let reps = self.reps();
        let sums: Vec<&Sums> = self.batches.values().map(|b| &b.components[j]).collect();
        let num: f64 = sums.iter().map(|s| s.num).sum();
        let den: f64 = sums.iter().map(|s| s.den).sum();
        let accepted: u64 = sums.iter().map(|s| s.accepted).sum();
        let (w, w2) = sums
            .iter()
            .fold((0.0, 0.0), |(w, w2), s| (w + s.w, w2 + s.w2));
        let value = num / den;
        let b = sums.len() as f64;
        let std_error = if exact {
            0.0
        } else if sums.len() < 2 || den == 0.0 {
            f64::INFINITY
        } else {
            let ss: f64 = sums
                .iter()
                .map(|s| {
                    let r = s.num - value * s.den;
                    r * r
                })
                .sum();
            (b * ss / (b - 1.0)).sqrt() / den.abs()
        };
        Estimate {
            value,
            std_error,
            reps,
            rejected: reps - accepted,
            ess: if w2 > 0.0 { w * w / w2 } else { 0.0 },
        }
    }

    pub fn estimates(&self, exact: bool) -> Vec<Estimate> {
        (0..self.dims).map(|j| self.estimate(j, exact)).collect()
    }
}

/// Replications of one model on one window under one seed stream.
#[derive(Debug, Clone)]
pub struct Experiment<'a, T> {
    pub model: &'a ProcessModel<T>,
    pub window: Window<T>,
    pub stream: SeedStream,
    pub reps: u64,
}

impl<'a, T: Scalar> Experiment<'a, T> {
    /// Deterministic models are replicated once.
    pub fn new(
        model: &'a ProcessModel<T>,
        window: Window<T>,
        stream: SeedStream,
        reps: u64,
    ) -> Self {
        let reps = if model.law_tag() == crate::models::LawTag::Deterministic {
            reps.min(1)
        } else {
            reps
        };
        Self {
            model,
            window,
            stream,
            reps,
        }
    }

    pub fn batches(&self) -> u64 {
        self.reps.div_ceil(batch_size(self.reps))
    }

    pub fn is_exact(&self) -> bool {
        self.model.law_tag() == crate::models::LawTag::Deterministic
    }

    /// Runs the batches in `range`. `observe` fills one slot per component
    /// for each replication; slots start as `None`.
    pub fn tally<F>(
        &self,
        range: Range<u64>,
        dims: usize,
        observe: F,
    ) -> Result<Tally, EstimateError>
    where
        F: Fn(&WeightedPattern<T>, &mut [Obs]) + Sync,
    {
        self.model.check_window(&self.window)?;
        let range = range.start.min(self.batches())..range.end.min(self.batches());
        let parts: Vec<(u64, Batch)> = range
            .into_par_iter()
            .map(|index| {
                let mut batch = Batch::new(dims);
                let mut obs = vec![None; dims];
                let size = batch_size(self.reps);
                let start = index * size;
                let end = (start + size).min(self.reps);
                for rep in start..end {
                    obs.iter_mut().for_each(|o| *o = None);
                    match self.model.sample_seeded(&self.stream, rep, &self.window) {
                        Ok(draw) => {
                            observe(&draw, &mut obs);
                            batch.add(draw.weight.as_f64(), &obs);
                        }
                        Err(ModelError::Unresolved(_)) => {
                            obs.iter_mut().for_each(|o| *o = None);
                            batch.add(0.0, &obs);
                        }
                        Err(e) => return Err(EstimateError::Model(e)),
                    }
                }
                Ok((index, batch))
            })
            .collect::<Result<_, _>>()?;
        Ok(Tally {
            dims,
            batches: parts.into_iter().collect(),
        })
    }

    /// Runs every batch and returns one estimate per component. Weighted
    /// runs fail when the effective sample size drops below 10% of the
    /// replications.
    pub fn run<F>(&self, dims: usize, observe: F) -> Result<Vec<Estimate>, EstimateError>
    where
        F: Fn(&WeightedPattern<T>, &mut [Obs]) + Sync,
    {
        let tally = self.tally(0..self.batches(), dims, observe)?;
        self.check_ess(&tally)?;
        Ok(tally.estimates(self.is_exact()))
    }

    pub fn check_ess(&self, tally: &Tally) -> Result<(), EstimateError> {
        if self.model.is_weighted() {
            let ess = tally.ess();
            if ess < 0.1 * tally.reps() as f64 {
                return Err(EstimateError::LowEss {
                    ess,
                    reps: tally.reps(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_budgets_use_smaller_batches() {
        assert_eq!(batch_size(100_000), BATCH);
        assert_eq!(batch_size(2048), 64);
        assert_eq!(batch_size(100), 3);
        assert_eq!(batch_size(5), 1);
        for reps in [1u64, 31, 32, 33, 100, 1000, 5000] {
            let b = reps.div_ceil(batch_size(reps));
            assert!(b >= MIN_BATCHES.min(reps), "{reps} reps give {b} batches");
        }
    }

    #[test]
    fn ratio_and_standard_error_by_hand() {
        // Two batches: (n, d) = (2, 4) and (4, 4); R = 6/8.
        let mut t = Tally::new(1);
        t.record(0, 1.0, &[Some((2.0, 4.0))]);
        t.record(1, 1.0, &[Some((4.0, 4.0))]);
        let e = t.estimate(0, false);
        assert_eq!(e.value, 0.75);
        // Residuals -1, 1; s^2 = 2; se = sqrt(2 * 2) / 8.
        assert!((e.std_error - 0.25).abs() < 1e-15);
        assert_eq!(e.reps, 2);
        assert_eq!(e.rejected, 0);
    }

    #[test]
    fn rejections_are_counted() {
        let mut t = Tally::new(2);
        t.record(0, 1.0, &[Some((1.0, 1.0)), None]);
        t.record(0, 1.0, &[Some((0.0, 1.0)), Some((1.0, 1.0))]);
        let e = t.estimates(false);
        assert_eq!((e[0].rejected, e[1].rejected), (0, 1));
        assert_eq!(e[1].reps, 2);
    }

    #[test]
    fn weighted_ess() {
        let mut t = Tally::new(1);
        t.record(0, 1.0, &[Some((1.0, 1.0))]);
        t.record(0, 3.0, &[Some((0.0, 1.0))]);
        let e = t.estimate(0, false);
        assert_eq!(e.value, 0.25);
        assert_eq!(e.ess, 16.0 / 10.0);
    }
}
