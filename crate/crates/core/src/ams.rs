//! Cesàro-average diagnostics for asymptotic mean stationarity and the
//! conversions between the event- and time-stationary limit laws of an
//! ergodic model.

use serde::Serialize;
use thiserror::Error;

use crate::estimate::{analysis_window, Budget, Estimate, EstimateError, Experiment};
use crate::events::{occupation, Eventuality};
use crate::models::{LawTag, ModelError, ProcessModel};
use crate::pattern::View;
use crate::scalar::Scalar;
use crate::streams::SeedStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmsError {
    #[error("a verdict needs at least 6 checkpoints, got {0}")]
    TooFewCheckpoints(usize),
    #[error("only {coverage:.3} of replications reach checkpoint {checkpoint}")]
    InsufficientWindow { checkpoint: f64, coverage: f64 },
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

impl From<ModelError> for AmsError {
    fn from(e: ModelError) -> Self {
        Self::Estimate(e.into())
    }
}

/// Which shifts are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TraceKind {
    /// `(1/n) sum_{i=1..n} 1_A(eta_i p)`.
    Event,
    /// `(1/x) ∫_0^x 1_A(theta_y p) dy`.
    Time,
}

/// Running averages at increasing checkpoints, averaged over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct CesaroTrace {
    pub kind: TraceKind,
    pub checkpoints: Vec<f64>,
    pub values: Vec<Estimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AmsStatus {
    Convergent { limit: f64 },
    NotConvergent { oscillation: f64 },
    Inconclusive,
}

impl AmsStatus {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Convergent { .. } => "Convergent",
            Self::NotConvergent { .. } => "NotConvergent",
            Self::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmsVerdict {
    pub status: AmsStatus,
    /// `max - min` of the tail running averages.
    pub oscillation: f64,
    /// Standard error of the oscillation.
    pub oscillation_se: f64,
    /// The tolerance used.
    pub threshold: f64,
    pub tail_fraction: f64,
}

impl AmsVerdict {
    /// `{status, oscillation, threshold, tail_fraction}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "status": self.status.name(),
            "oscillation": self.oscillation,
            "threshold": self.threshold,
            "tail_fraction": self.tail_fraction,
        })
    }

    /// Verdict used when the trace is too short to judge.
    pub fn inconclusive(threshold: f64, tail_fraction: f64) -> Self {
        Self {
            status: AmsStatus::Inconclusive,
            oscillation: f64::NAN,
            oscillation_se: f64::NAN,
            threshold,
            tail_fraction,
        }
    }
}

/// Geometric checkpoints `8, 16, 32, ... <= max` merged with `extra`.
pub fn checkpoints(start: f64, max: f64, extra: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = std::iter::successors(Some(start), |&c| Some(c * 2.0))
        .take_while(|&c| c <= max)
        .chain(extra.iter().copied().filter(|&c| c > 0.0 && c <= max))
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn require_coverage(trace: &CesaroTrace) -> Result<(), AmsError> {
    for (c, e) in trace.checkpoints.iter().zip(&trace.values) {
        let coverage = e.accepted() as f64 / e.reps.max(1) as f64;
        if coverage < 0.5 {
            return Err(AmsError::InsufficientWindow {
                checkpoint: *c,
                coverage,
            });
        }
    }
    Ok(())
}

/// Event Cesàro averages `m_n` at geometric checkpoints up to `n_max`
/// (plus the block ends of the lattice example).
pub fn cesaro_event<T: Scalar>(
    model: &ProcessModel<T>,
    event: &Eventuality<T>,
    n_max: u64,
    budget: &Budget,
    stream: SeedStream,
) -> Result<CesaroTrace, AmsError> {
    let landmarks: Vec<f64> = model.landmarks().iter().map(|&b| b as f64).collect();
    let marks = checkpoints(8.0, n_max as f64, &landmarks);
    let n_last = marks.last().copied().unwrap_or(0.0) as i64;
    let reach = T::from_f64(1.25 * n_last as f64 + 20.0).expect("finite") * model.mean_gap();
    let window = analysis_window(model, T::zero(), reach, event.radius(), budget)?;
    let exp = Experiment::new(model, window, stream, budget.reps);
    let values = exp.run(marks.len(), |draw, obs| {
        let p = &draw.pattern;
        let Ok((t0, _)) = p.locate_indices() else {
            return;
        };
        let mut sum = 0u64;
        let mut next = 0;
        for i in 1..=n_last {
            let pos = t0 + i as usize;
            if pos >= p.len() {
                return;
            }
            match event.eval(&View::at_event(p, pos)) {
                Some(v) => sum += u64::from(v),
                None => return,
            }
            if i as f64 == marks[next] {
                obs[next] = Some((sum as f64 / i as f64, 1.0));
                next += 1;
            }
        }
    })?;
    let trace = CesaroTrace {
        kind: TraceKind::Event,
        checkpoints: marks,
        values,
    };
    require_coverage(&trace)?;
    Ok(trace)
}

/// Time Cesàro averages `(1/x) ∫_0^x 1_A∘theta_y dy` at geometric
/// checkpoints up to `x_max`, computed exactly per replication.
pub fn cesaro_time<T: Scalar>(
    model: &ProcessModel<T>,
    event: &Eventuality<T>,
    x_max: f64,
    budget: &Budget,
    stream: SeedStream,
) -> Result<CesaroTrace, AmsError> {
    let landmarks: Vec<f64> = match model.example44_sequence() {
        // Time of T_{b(k)+1}: one unit for the gap before T_1, then the
        // encoded gaps.
        Some(seq) => model
            .landmarks()
            .iter()
            .map(|&b| seq.time_of(b + 1) as f64)
            .collect(),
        None => Vec::new(),
    };
    let start = 8.0 * model.mean_gap().as_f64();
    let marks = checkpoints(start, x_max, &landmarks);
    let x_last = marks.last().copied().unwrap_or(0.0);
    let window = analysis_window(
        model,
        T::zero(),
        T::from_f64(x_last).expect("finite"),
        event.radius(),
        budget,
    )?;
    let grid: Vec<T> = marks
        .iter()
        .map(|&x| T::from_f64(x).expect("finite"))
        .collect();
    let exp = Experiment::new(model, window, stream, budget.reps);
    let values = exp.run(marks.len(), |draw, obs| {
        let mut acc = T::zero();
        let mut from = T::zero();
        for (slot, &x) in obs.iter_mut().zip(&grid) {
            match occupation(&draw.pattern, event, from, x) {
                Some(v) => acc = acc + v,
                None => return,
            }
            *slot = Some(((acc / x).as_f64(), 1.0));
            from = x;
        }
    })?;
    let trace = CesaroTrace {
        kind: TraceKind::Time,
        checkpoints: marks,
        values,
    };
    require_coverage(&trace)?;
    Ok(trace)
}

/// Decides convergence from the last `tail_fraction` of the checkpoints.
///
/// With `osc = max - min` of the tail averages and `se` the combined
/// standard error of the two extremes: `NotConvergent` when `osc > tol` and
/// `osc > 3 se`; `Convergent` when `osc <= tol` and every tail standard
/// error is at most `tol / 3`; otherwise `Inconclusive`.
pub fn ams_verdict(
    trace: &CesaroTrace,
    tail_fraction: f64,
    tol: f64,
) -> Result<AmsVerdict, AmsError> {
    let k = trace.values.len();
    if k < 6 {
        return Err(AmsError::TooFewCheckpoints(k));
    }
    let take = ((k as f64 * tail_fraction).ceil() as usize).clamp(2, k);
    let tail = &trace.values[k - take..];
    let by_value = |a: &&Estimate, b: &&Estimate| a.value.total_cmp(&b.value);
    let hi = tail.iter().max_by(by_value).expect("nonempty tail");
    let lo = tail.iter().min_by(by_value).expect("nonempty tail");
    let oscillation = hi.value - lo.value;
    let oscillation_se = hi.combined_se(lo);
    let max_se = tail.iter().map(|e| e.std_error).fold(0.0, f64::max);
    let status = if oscillation > tol && oscillation > 3.0 * oscillation_se {
        AmsStatus::NotConvergent { oscillation }
    } else if oscillation <= tol && 3.0 * max_se <= tol {
        AmsStatus::Convergent {
            limit: tail[take - 1].value,
        }
    } else {
        AmsStatus::Inconclusive
    };
    Ok(AmsVerdict {
        status,
        oscillation,
        oscillation_se,
        threshold: tol,
        tail_fraction,
    })
}

/// Time-stationary probabilities of an ergodic event-stationary model:
/// `P_ts(A) = E_es ∫_0^{alpha_0} 1_A∘theta_y dy / E_es alpha_0`.
pub fn convert_es_to_ts<T: Scalar>(
    es_model: &ProcessModel<T>,
    events: &[Eventuality<T>],
    budget: &Budget,
    stream: SeedStream,
) -> Result<Vec<Estimate>, AmsError> {
    if es_model.law_tag() != LawTag::Es {
        return Err(
            EstimateError::NotApplicable(format!("{es_model} is not event-stationary")).into(),
        );
    }
    let radius = events.iter().fold(T::zero(), |r, e| r.max(e.radius()));
    let window = analysis_window(es_model, T::zero(), T::zero(), radius, budget)?;
    let exp = Experiment::new(es_model, window, stream, budget.reps);
    let estimates = exp.run(events.len(), |draw, obs| {
        let p = &draw.pattern;
        let Ok(alpha0) = p.interval(0) else { return };
        for (slot, event) in obs.iter_mut().zip(events) {
            if let Some(v) = occupation(p, event, T::zero(), alpha0) {
                *slot = Some((v.as_f64(), alpha0.as_f64()));
            }
        }
    })?;
    if estimates.iter().any(|e| !e.value.is_finite()) {
        return Err(ModelError::NoMean.into());
    }
    Ok(estimates)
}

/// Event-stationary probabilities of an ergodic time-stationary model:
/// `P_es(A) = E_ts(1_A∘eta_0 / alpha_0) / N̄`, with the intensity `N̄`
/// replaced by the plug-in mean of `N(0, L] / L`.
pub fn convert_ts_to_es<T: Scalar>(
    ts_model: &ProcessModel<T>,
    events: &[Eventuality<T>],
    budget: &Budget,
    stream: SeedStream,
) -> Result<Vec<Estimate>, AmsError> {
    if ts_model.law_tag() != LawTag::Ts {
        return Err(ModelError::NotTimeStationary(ts_model.to_string()).into());
    }
    let length = T::from_f64(budget.guard_gaps).expect("finite") * ts_model.mean_gap();
    let radius = events.iter().fold(T::zero(), |r, e| r.max(e.radius()));
    let window = analysis_window(ts_model, T::zero(), length, radius, budget)?;
    let exp = Experiment::new(ts_model, window, stream, budget.reps);
    let estimates = exp.run(events.len(), |draw, obs| {
        let p = &draw.pattern;
        let Ok((t0, _)) = p.locate_indices() else {
            return;
        };
        let Ok(alpha0) = p.interval(0) else { return };
        let rate = p.range_oc(T::zero(), length).len() as f64 / length.as_f64();
        let view = View::at_event(p, t0);
        for (slot, event) in obs.iter_mut().zip(events) {
            if let Some(v) = event.eval(&view) {
                *slot = Some((f64::from(u8::from(v)) / alpha0.as_f64(), rate));
            }
        }
    })?;
    Ok(estimates)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(values: &[(f64, f64)]) -> CesaroTrace {
        CesaroTrace {
            kind: TraceKind::Event,
            checkpoints: (0..values.len())
                .map(|i| 8.0 * 2f64.powi(i as i32))
                .collect(),
            values: values
                .iter()
                .map(|&(value, std_error)| Estimate {
                    value,
                    std_error,
                    reps: 1000,
                    rejected: 0,
                    ess: 1000.0,
                })
                .collect(),
        }
    }

    #[test]
    fn constant_trace_converges() {
        let v = ams_verdict(&trace(&[(0.3, 0.0); 8]), 0.5, 0.05).unwrap();
        assert_eq!(v.status, AmsStatus::Convergent { limit: 0.3 });
        assert_eq!(v.oscillation, 0.0);
    }

    #[test]
    fn alternating_trace_does_not_converge() {
        let vals: Vec<(f64, f64)> = (0..8)
            .map(|i| (if i % 2 == 0 { 0.5 } else { 0.75 }, 0.0))
            .collect();
        let v = ams_verdict(&trace(&vals), 0.5, 0.05).unwrap();
        assert_eq!(v.status, AmsStatus::NotConvergent { oscillation: 0.25 });
    }

    #[test]
    fn noisy_trace_is_inconclusive() {
        let vals: Vec<(f64, f64)> = (0..6).map(|i| (0.4 + 0.03 * (i % 2) as f64, 0.2)).collect();
        let v = ams_verdict(&trace(&vals), 0.5, 0.05).unwrap();
        assert_eq!(v.status, AmsStatus::Inconclusive);
    }

    #[test]
    fn short_trace_is_rejected() {
        assert_eq!(
            ams_verdict(&trace(&[(0.1, 0.0); 5]), 0.5, 0.05),
            Err(AmsError::TooFewCheckpoints(5))
        );
    }

    #[test]
    fn checkpoint_grid() {
        assert_eq!(
            checkpoints(8.0, 150.0, &[4.0, 8.0, 24.0, 144.0, 216.0]),
            [4.0, 8.0, 16.0, 24.0, 32.0, 64.0, 128.0, 144.0]
        );
    }

    #[test]
    fn verdict_json_fields() {
        let v = ams_verdict(&trace(&[(0.3, 0.0); 8]), 0.5, 0.05).unwrap();
        let j = v.to_json();
        assert_eq!(j["status"], "Convergent");
        assert_eq!(j["tail_fraction"], 0.5);
        assert_eq!(j["threshold"], 0.05);
    }
}
