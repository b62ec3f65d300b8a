//! Registry of Palm-calculus identities, each checked as a pair of
//! independent Monte Carlo estimates.
//!
//! A check passes when `|lhs - rhs| <= z_crit * sqrt(se_lhs^2 + se_rhs^2) + atol`.
//! Sides use independent seed streams derived from the identity id, the
//! model and the side, so every report is reproducible on its own.

use serde::Serialize;
use thiserror::Error;

use crate::ams::{ams_verdict, cesaro_event, cesaro_time, AmsError, AmsStatus};
use crate::estimate::{
    analysis_window, est_intensity, est_intermediate, est_palm_zero, est_shifted_palm, BinGrid,
    Budget, Estimate, EstimateError, Experiment, Obs,
};
use crate::events::{battery, ev_example44, occupation};
use crate::models::{
    example44, example84_exact, poisson_ts, pstar, renewal_es, renewal_ts_from_es, tilted_ts,
    IntervalDistribution, LawTag, Tilt,
};
use crate::pattern::View;
use crate::streams::SeedStream;
use crate::{ams, Event, Model, Pattern};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdentityError {
    #[error("{id} does not apply to {model}")]
    NotApplicable { id: String, model: String },
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Ams(#[from] AmsError),
}

/// Outcome of one identity on one model and eventuality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub id: String,
    pub model: String,
    pub eventuality: String,
    pub lhs: Estimate,
    pub rhs: Estimate,
    /// `(lhs - rhs) / combined se`.
    pub z: f64,
    pub pass: bool,
    pub budget: u64,
}

impl IdentityReport {
    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "pass"
        } else {
            "fail"
        }
    }
}

/// Settings shared by every check of a suite run.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub budget: Budget,
    pub z_crit: f64,
    pub atol: f64,
    /// Horizon of index-based eventualities, in mean gaps.
    pub horizon_gaps: f64,
    pub seed: u64,
    /// Restricts the run to one identity id.
    pub only: Option<String>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            budget: Budget::default(),
            z_crit: 4.0,
            atol: 0.002,
            horizon_gaps: 20.0,
            seed: 0,
            only: None,
        }
    }
}

/// One side-by-side comparison produced by an identity.
struct Pair {
    label: String,
    lhs: Estimate,
    rhs: Estimate,
}

fn pair(label: impl Into<String>, lhs: Estimate, rhs: Estimate) -> Pair {
    Pair {
        label: label.into(),
        lhs,
        rhs,
    }
}

fn pairs(events: &[Event], lhs: Vec<Estimate>, rhs: Vec<Estimate>) -> Vec<Pair> {
    events
        .iter()
        .zip(lhs.into_iter().zip(rhs))
        .map(|(e, (l, r))| pair(e.label(), l, r))
        .collect()
}

/// Everything a check needs.
struct Ctx<'a> {
    model: &'a Model,
    events: &'a [Event],
    budget: Budget,
    stream: SeedStream,
}

impl Ctx<'_> {
    fn lhs(&self, tag: &str) -> SeedStream {
        self.stream.split_label("lhs").split_label(tag)
    }

    fn rhs(&self, tag: &str) -> SeedStream {
        self.stream.split_label("rhs").split_label(tag)
    }

    fn mean_gap(&self) -> f64 {
        self.model.mean_gap()
    }

    fn radius(&self) -> f64 {
        self.events.iter().fold(0.0, |r, e| r.max(e.radius()))
    }
}

type Check = fn(&Ctx<'_>) -> Result<Vec<Pair>, IdentityError>;

/// A registered identity.
pub struct IdentitySpec {
    pub id: &'static str,
    /// The statement being checked.
    pub statement: &'static str,
    pub atol: Option<f64>,
    applies: fn(&Model) -> bool,
    check: Check,
}

impl IdentitySpec {
    pub fn applies_to(&self, model: &Model) -> bool {
        (self.applies)(model)
    }
}

impl std::fmt::Debug for IdentitySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IdentitySpec")
            .field("id", &self.id)
            .field("statement", &self.statement)
            .finish()
    }
}

// Applicability predicates.

fn is_ts(m: &Model) -> bool {
    m.law_tag() == LawTag::Ts
}

fn has_oracle(m: &Model) -> bool {
    is_ts(m) && m.palm_oracle().is_some()
}

fn is_random_origin(m: &Model) -> bool {
    matches!(m.law_tag(), LawTag::Ts | LawTag::TiltedTs)
}

fn is_pstar_fixed(m: &Model) -> bool {
    is_random_origin(m) && m.pstar_invariant()
}

fn any_model(_: &Model) -> bool {
    true
}

fn tilted_with_oracle(m: &Model) -> bool {
    m.law_tag() == LawTag::TiltedTs
        && m.ts_base_and_tilt()
            .is_some_and(|(base, _)| base.palm_oracle().is_some())
}

fn poisson_scaled_alpha0(m: &Model) -> bool {
    m.law_tag() == LawTag::TiltedTs
        && m.ts_base_and_tilt().is_some_and(|(base, tilt)| {
            base.to_string().starts_with("poisson_ts") && matches!(tilt, Tilt::ScaledAlpha0 { .. })
        })
}

/// Every identity, in report order.
pub fn registry() -> Vec<IdentitySpec> {
    let spec = |id, statement, applies, check| IdentitySpec {
        id,
        statement,
        atol: None,
        applies,
        check,
    };
    vec![
        spec(
            "I-2.3",
            "lambda = E(1/alpha_0)",
            is_ts as fn(&Model) -> bool,
            i_2_3 as Check,
        ),
        spec("I-2.3o", "lambda = 1/E0(alpha_0)", has_oracle, i_2_3o),
        spec(
            "I-2.4",
            "P0(A) = E N_A(0,x] / E N(0,x] for every x",
            is_ts,
            i_2_4,
        ),
        spec(
            "I-2.6",
            "P(A) = lambda E0 ∫_{T_-k}^{T_-k+1} 1_A∘theta_y dy",
            is_ts,
            i_2_6,
        ),
        spec("I-2.7a", "P_n(A) = lambda E0(alpha_-n 1_A)", is_ts, i_2_7a),
        spec(
            "I-2.7b",
            "P0(A) = E(1_A∘eta_n / alpha_0) / lambda",
            is_ts,
            i_2_7b,
        ),
        spec(
            "I-2.8c",
            "E(f (1/alpha_0) ∫ g∘theta) = E(g (1/alpha_0) ∫ f∘theta)",
            is_ts,
            i_2_8c,
        ),
        spec(
            "I-2.10c",
            "E(N[x+T_0, x+T_1) / alpha_0) = lambda",
            is_ts,
            i_2_10c,
        ),
        IdentitySpec {
            atol: Some(0.01),
            ..spec(
                "I-3.7",
                "P_k(A) = ∫ P0x(A ∩ [T_-k <= -x < T_-k+1]) dnu(x)",
                is_random_origin,
                i_3_7,
            )
        },
        spec(
            "I-3.13",
            "P = P* implies P0x(A) = lambda_A(x) / lambda(x)",
            is_pstar_fixed,
            i_3_13,
        ),
        spec(
            "I-4.2",
            "event and time Cesàro verdicts agree",
            any_model,
            i_4_2,
        ),
        spec(
            "I-4.4",
            "P_ts(A) = E_es ∫_0^alpha_0 1_A∘theta / E_es alpha_0",
            has_oracle,
            i_4_4,
        ),
        spec(
            "I-4.4b",
            "P_es(A) = E_ts(1_A∘eta_0 / alpha_0) / Nbar",
            has_oracle,
            i_4_4b,
        ),
        spec("I-4.5", "Nbar = 1 / alphabar", is_ts, i_4_5),
        spec("I-5.2n", "E0_ts(delta_0) = 1", tilted_with_oracle, i_5_2n),
        spec(
            "I-5.2a",
            "P_0(A) = E0_ts(delta_0 1_A)",
            tilted_with_oracle,
            i_5_2a,
        ),
        spec(
            "I-7.1b",
            "P = P* when sigma∘eta_0 = sigma",
            is_pstar_fixed,
            i_7_1b,
        ),
        spec(
            "I-8.1a",
            "lambda(y) = lambda_ts E0_ts(sigma∘theta_-y)",
            tilted_with_oracle,
            i_8_1a,
        ),
        spec(
            "I-8.4rho",
            "P0x(A) = lambda E0_ts(1_A alpha_0∘theta_-x) / (2 - exp(-lambda|x|))",
            poisson_scaled_alpha0,
            i_8_4rho,
        ),
    ]
}

/// Runs one identity on one model over a set of eventualities.
pub fn check_identity(
    spec: &IdentitySpec,
    model: &Model,
    events: &[Event],
    config: &SuiteConfig,
) -> Result<Vec<IdentityReport>, IdentityError> {
    if !spec.applies_to(model) {
        return Err(IdentityError::NotApplicable {
            id: spec.id.to_string(),
            model: model.to_string(),
        });
    }
    let model_label = model.to_string();
    let ctx = Ctx {
        model,
        events,
        budget: config.budget,
        stream: SeedStream::new(config.seed)
            .split_label(spec.id)
            .split_label(&model_label),
    };
    let atol = spec.atol.unwrap_or(config.atol);
    Ok((spec.check)(&ctx)?
        .into_iter()
        .map(|p| {
            let diff = p.lhs.value - p.rhs.value;
            let se = p.lhs.combined_se(&p.rhs);
            let z = if se > 0.0 {
                diff / se
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(diff)
            };
            IdentityReport {
                id: spec.id.to_string(),
                model: model_label.clone(),
                eventuality: p.label,
                lhs: p.lhs,
                rhs: p.rhs,
                z,
                pass: diff.abs() <= config.z_crit * se + atol,
                budget: config.budget.reps,
            }
        })
        .collect())
}

/// Result of a suite run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteOutcome {
    pub reports: Vec<IdentityReport>,
    /// `(id, model)` pairs filtered out by applicability.
    pub skipped: Vec<(String, String)>,
    /// `(id, model, message)` for checks whose estimators failed.
    pub errors: Vec<(String, String, String)>,
}

impl SuiteOutcome {
    pub fn failures(&self) -> usize {
        self.reports.iter().filter(|r| !r.pass).count() + self.errors.len()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

/// The models a suite run covers by default: one of each family, with both
/// a weighted tilt and the lattice example.
pub fn default_catalog() -> Vec<Model> {
    let gamma = || IntervalDistribution::gamma(2.0, 1.0).expect("valid gamma");
    let poisson = || poisson_ts(1.0).expect("valid rate");
    let renewal = || renewal_ts_from_es(gamma()).expect("finite mean");
    vec![
        poisson(),
        renewal_es(gamma()),
        renewal(),
        tilted_ts(poisson(), Tilt::ScaledAlpha0 { c: 0.5 }).expect("ts base"),
        tilted_ts(
            renewal(),
            Tilt::Linear {
                gamma0: 0.5,
                gamma1: 0.5,
            },
        )
        .expect("ts base"),
        example84_exact(1.0).expect("valid rate"),
        example44(216).expect("valid length"),
    ]
}

/// The eventualities checked against `model`: the battery, or the
/// distinguished eventuality for the lattice example.
pub fn suite_events(model: &Model, horizon_gaps: f64) -> Vec<Event> {
    let horizon = horizon_gaps * model.mean_gap();
    if model.example44_sequence().is_some() {
        vec![ev_example44(horizon)]
    } else {
        battery(horizon)
    }
}

/// Runs every applicable identity on every model. Reports come in registry
/// order, then model order, then eventuality order.
pub fn run_suite(models: &[Model], config: &SuiteConfig) -> SuiteOutcome {
    let mut out = SuiteOutcome::default();
    for spec in registry() {
        if config.only.as_deref().is_some_and(|id| id != spec.id) {
            continue;
        }
        for model in models {
            if !spec.applies_to(model) {
                out.skipped.push((spec.id.to_string(), model.to_string()));
                continue;
            }
            let events = suite_events(model, config.horizon_gaps);
            match check_identity(&spec, model, &events, config) {
                Ok(reports) => out.reports.extend(reports),
                Err(e) => out
                    .errors
                    .push((spec.id.to_string(), model.to_string(), e.to_string())),
            }
        }
    }
    out
}

// Shared estimator programs.

/// Replications of `model` on a window covering `[lo, hi]` plus the
/// eventuality radius.
fn experiment<'a>(
    ctx: &'a Ctx<'_>,
    model: &'a Model,
    lo: f64,
    hi: f64,
    stream: SeedStream,
) -> Result<Experiment<'a, f64>, IdentityError> {
    let window = analysis_window(model, lo, hi, ctx.radius(), &ctx.budget)?;
    Ok(Experiment::new(model, window, stream, ctx.budget.reps))
}

/// `E N(0, L] / L`.
fn count_rate(
    ctx: &Ctx<'_>,
    model: &Model,
    length: f64,
    stream: SeedStream,
) -> Result<Estimate, IdentityError> {
    let exp = experiment(ctx, model, 0.0, length, stream)?;
    let e = exp.run(1, |draw, obs| {
        obs[0] = Some((draw.pattern.range_oc(0.0, length).len() as f64, length));
    })?;
    Ok(e[0])
}

/// `P(A)` for each eventuality, evaluated at the origin.
fn direct(
    ctx: &Ctx<'_>,
    model: &Model,
    stream: SeedStream,
) -> Result<Vec<Estimate>, IdentityError> {
    let exp = experiment(ctx, model, 0.0, 0.0, stream)?;
    Ok(exp.run(ctx.events.len(), |draw, obs| {
        for (slot, event) in obs.iter_mut().zip(ctx.events) {
            *slot = event.holds(&draw.pattern).map(|v| (indicator(v), 1.0));
        }
    })?)
}

/// `(1/x) E sum_{T_i in (0, x]} f(p, pos_i, A)` for each eventuality: by
/// the Palm definition this is `lambda E0 f(., A)`.
fn palm_sum<F>(
    ctx: &Ctx<'_>,
    x: f64,
    stream: SeedStream,
    f: F,
) -> Result<Vec<Estimate>, IdentityError>
where
    F: Fn(&Pattern, usize, &Event) -> Option<f64> + Sync,
{
    let exp = experiment(ctx, ctx.model, 0.0, x, stream)?;
    Ok(exp.run(ctx.events.len(), |draw, obs| {
        let p = &draw.pattern;
        for (slot, event) in obs.iter_mut().zip(ctx.events) {
            let total: Option<f64> = p.range_oc(0.0, x).map(|pos| f(p, pos, event)).sum();
            *slot = total.map(|t| (t, x));
        }
    })?)
}

fn indicator(v: bool) -> f64 {
    f64::from(u8::from(v))
}

fn scaled(e: Estimate, s: f64) -> Estimate {
    Estimate {
        value: e.value * s,
        std_error: e.std_error * s.abs(),
        ..e
    }
}

/// `1 / e` with a delta-method standard error.
fn reciprocal(e: Estimate) -> Estimate {
    Estimate {
        value: 1.0 / e.value,
        std_error: e.std_error / (e.value * e.value),
        ..e
    }
}

/// `T_{offset}` relative to the point at `pos`, as a storage position.
fn shifted(pos: usize, offset: i64, len: usize) -> Option<usize> {
    let q = pos as i64 + offset;
    (q >= 0 && (q as usize) < len).then_some(q as usize)
}

// The checks.

fn i_2_3(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let lhs = count_rate(ctx, ctx.model, 10.0 * ctx.mean_gap(), ctx.lhs("rate"))?;
    let exp = experiment(ctx, ctx.model, 0.0, 0.0, ctx.rhs("inverse gap"))?;
    let rhs = exp.run(1, |draw, obs| {
        obs[0] = draw.pattern.interval(0).ok().map(|a| (1.0 / a, 1.0));
    })?;
    Ok(vec![pair("E(1/alpha_0)", lhs, rhs[0])])
}

fn i_2_3o(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let lhs = count_rate(ctx, ctx.model, 10.0 * ctx.mean_gap(), ctx.lhs("rate"))?;
    let oracle = ctx.model.palm_oracle().expect("applicability");
    let exp = experiment(ctx, &oracle, 0.0, 0.0, ctx.rhs("palm mean gap"))?;
    let mean = exp.run(1, |draw, obs| {
        obs[0] = draw.pattern.interval(0).ok().map(|a| (a, 1.0));
    })?;
    Ok(vec![pair("1/E0(alpha_0)", lhs, reciprocal(mean[0]))])
}

fn i_2_4(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let m = ctx.mean_gap();
    let lhs = est_palm_zero(ctx.model, ctx.events, 5.0 * m, &ctx.budget, ctx.lhs("x=5"))?;
    let rhs = est_palm_zero(
        ctx.model,
        ctx.events,
        20.0 * m,
        &ctx.budget,
        ctx.rhs("x=20"),
    )?;
    Ok(pairs(ctx.events, lhs, rhs))
}

fn i_2_6(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let lhs = direct(ctx, ctx.model, ctx.lhs("direct"))?;
    let x = 10.0 * ctx.mean_gap();
    let mut out = Vec::new();
    for k in [0i64, 1] {
        let rhs = palm_sum(ctx, x, ctx.rhs(&format!("k={k}")), |p, pos, event| {
            let a = shifted(pos, -k, p.len())?;
            let b = shifted(pos, 1 - k, p.len())?;
            occupation(p, event, p.points()[a], p.points()[b])
        })?;
        for ((event, l), r) in ctx.events.iter().zip(&lhs).zip(rhs) {
            out.push(pair(format!("{} @k={k}", event.label()), *l, r));
        }
    }
    Ok(out)
}

fn i_2_7a(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let x = 10.0 * ctx.mean_gap();
    let mut out = Vec::new();
    for n in [0i64, 1] {
        let lhs = est_intermediate(
            ctx.model,
            n,
            ctx.events,
            &ctx.budget,
            ctx.lhs(&format!("n={n}")),
        )?;
        let rhs = palm_sum(ctx, x, ctx.rhs(&format!("n={n}")), |p, pos, event| {
            let a = shifted(pos, -n, p.len())?;
            let b = shifted(pos, 1 - n, p.len())?;
            let hit = event.eval(&View::at_event(p, pos))?;
            Some((p.points()[b] - p.points()[a]) * indicator(hit))
        })?;
        for ((event, l), r) in ctx.events.iter().zip(lhs).zip(rhs) {
            out.push(pair(format!("{} @n={n}", event.label()), l, r));
        }
    }
    Ok(out)
}

fn i_2_7b(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let m = ctx.mean_gap();
    let lhs = est_palm_zero(ctx.model, ctx.events, 5.0 * m, &ctx.budget, ctx.lhs("palm"))?;
    let length = 10.0 * m;
    let mut out = Vec::new();
    for n in [0i64, 1] {
        let exp = experiment(ctx, ctx.model, 0.0, length, ctx.rhs(&format!("n={n}")))?;
        let rhs = exp.run(ctx.events.len(), |draw, obs| {
            let p = &draw.pattern;
            let (Ok(pos), Ok(alpha0)) = (p.position(n), p.interval(0)) else {
                return;
            };
            let rate = p.range_oc(0.0, length).len() as f64 / length;
            let view = View::at_event(p, pos);
            for (slot, event) in obs.iter_mut().zip(ctx.events) {
                *slot = event.eval(&view).map(|v| (indicator(v) / alpha0, rate));
            }
        })?;
        for ((event, l), r) in ctx.events.iter().zip(&lhs).zip(rhs) {
            out.push(pair(format!("{} @n={n}", event.label()), *l, r));
        }
    }
    Ok(out)
}

fn i_2_8c(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let k = ctx.events.len();
    // side(f, g) = E(f (1/alpha_0) ∫_{T_0}^{T_1} g∘theta_y dy), with
    // f = A_j and g = A_{j+1}, or swapped.
    let side = |swap: bool, stream: SeedStream| -> Result<Vec<Estimate>, IdentityError> {
        let exp = experiment(ctx, ctx.model, 0.0, 0.0, stream)?;
        Ok(exp.run(k, |draw, obs| {
            let p = &draw.pattern;
            let Ok((i0, i1)) = p.locate_indices() else {
                return;
            };
            let (t0, t1) = (p.points()[i0], p.points()[i1]);
            for (j, slot) in obs.iter_mut().enumerate() {
                let (mut f, mut g) = (&ctx.events[j], &ctx.events[(j + 1) % k]);
                if swap {
                    std::mem::swap(&mut f, &mut g);
                }
                let (Some(fv), Some(occ)) = (f.holds(p), occupation(p, g, t0, t1)) else {
                    continue;
                };
                *slot = Some((indicator(fv) * occ / (t1 - t0), 1.0));
            }
        })?)
    };
    let lhs = side(false, ctx.lhs("f,g"))?;
    let rhs = side(true, ctx.rhs("g,f"))?;
    Ok((0..k)
        .map(|j| {
            let label = format!(
                "{} ; {}",
                ctx.events[j].label(),
                ctx.events[(j + 1) % k].label()
            );
            pair(label, lhs[j], rhs[j])
        })
        .collect())
}

fn i_2_10c(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let rhs = count_rate(ctx, ctx.model, 10.0 * ctx.mean_gap(), ctx.rhs("rate"))?;
    let xs = [0.5, 1.0, 3.0];
    let exp = experiment(ctx, ctx.model, 0.0, 3.0, ctx.lhs("shifted counts"))?;
    let lhs = exp.run(xs.len(), |draw, obs| {
        let p = &draw.pattern;
        let Ok((i0, i1)) = p.locate_indices() else {
            return;
        };
        let (t0, t1) = (p.points()[i0], p.points()[i1]);
        for (slot, &x) in obs.iter_mut().zip(&xs) {
            *slot = View::at(p, 0.0)
                .count_co(x + t0, x + t1)
                .map(|n| (n as f64 / (t1 - t0), 1.0));
        }
    })?;
    Ok(xs
        .iter()
        .zip(lhs)
        .map(|(x, l)| pair(format!("x={x}"), l, rhs))
        .collect())
}

fn i_3_7(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let m = ctx.mean_gap();
    let mut out = Vec::new();
    for k in [0i64, 1] {
        let lhs = est_intermediate(
            ctx.model,
            k,
            ctx.events,
            &ctx.budget,
            ctx.lhs(&format!("k={k}")),
        )?;
        // Bins of a quarter mean gap with 0 on an edge; sum over bins of
        // nu(bin) * P0x(A ∩ [T_-k <= -x < T_-k+1]), which per replication is
        // the number of points in the span satisfying both conditions.
        let reach = (4.0 * k as f64 + 12.0) * m;
        let n = (2.0 * reach / (0.25 * m)).round() as usize;
        let grid = BinGrid::uniform(-reach, reach, n)?;
        let exp = experiment(ctx, ctx.model, -reach, reach, ctx.rhs(&format!("k={k}")))?;
        let rhs = exp.run(ctx.events.len(), |draw, obs| {
            let p = &draw.pattern;
            let mut sums: Vec<Option<f64>> = vec![Some(0.0); ctx.events.len()];
            for pos in p.range_oc(-reach, reach) {
                if grid.locate(p.points()[pos]).is_none() {
                    continue;
                }
                let (Some(a), Some(b)) = (shifted(pos, -k, p.len()), shifted(pos, 1 - k, p.len()))
                else {
                    sums.iter_mut().for_each(|s| *s = None);
                    break;
                };
                // In eta_j p the condition reads T_{j-k} <= 0 < T_{j-k+1}.
                if !(p.points()[a] <= 0.0 && 0.0 < p.points()[b]) {
                    continue;
                }
                let view = View::at_event(p, pos);
                for (s, event) in sums.iter_mut().zip(ctx.events) {
                    *s = match (*s, event.eval(&view)) {
                        (Some(acc), Some(v)) => Some(acc + indicator(v)),
                        _ => None,
                    };
                }
            }
            for (slot, s) in obs.iter_mut().zip(sums) {
                *slot = s.map(|v| (v, 1.0));
            }
        })?;
        for ((event, l), r) in ctx.events.iter().zip(lhs).zip(rhs) {
            out.push(pair(format!("{} @k={k}", event.label()), l, r));
        }
    }
    Ok(out)
}

fn i_3_13(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let mut out = Vec::new();
    for x in [-1.0, 0.5] {
        let grid = BinGrid::around(&[x], 0.1)?;
        let lhs = est_shifted_palm(
            ctx.model,
            ctx.events,
            &grid,
            &ctx.budget,
            ctx.lhs(&format!("x={x}")),
        )?;
        let exp = experiment(
            ctx,
            ctx.model,
            x.min(0.0) - 1.0,
            x.max(0.0) + 1.0,
            ctx.rhs(&format!("x={x}")),
        )?;
        let rhs = exp.run(ctx.events.len(), |draw, obs| {
            let p = &draw.pattern;
            let Ok((i0, i1)) = p.locate_indices() else {
                return;
            };
            let (t0, t1) = (p.points()[i0], p.points()[i1]);
            let alpha0 = t1 - t0;
            let range = p.range_co(x + t0, x + t1);
            let total = range.len() as f64;
            for (slot, event) in obs.iter_mut().zip(ctx.events) {
                let hits: Option<f64> = range
                    .clone()
                    .map(|pos| event.eval(&View::at_event(p, pos)).map(indicator))
                    .sum();
                *slot = hits.map(|h| (h / alpha0, total / alpha0));
            }
        })?;
        for ((event, l), r) in ctx.events.iter().zip(lhs).zip(rhs) {
            let l = l.values[0].ok_or_else(|| EstimateError::ZeroDenominator {
                label: format!("{} in bin at {x}", event.label()),
            })?;
            out.push(pair(format!("{} @x={x}", event.label()), l, r));
        }
    }
    Ok(out)
}

fn status_code(status: &AmsStatus) -> f64 {
    match status {
        AmsStatus::Convergent { .. } => 0.0,
        AmsStatus::NotConvergent { .. } => 1.0,
        AmsStatus::Inconclusive => 2.0,
    }
}

fn i_4_2(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let budget = Budget {
        reps: (ctx.budget.reps / 10).max(640),
        ..ctx.budget
    };
    let (n_max, x_max) = match ctx.model.example44_sequence() {
        Some(seq) => {
            let n = *ctx.model.landmarks().last().expect("at least one block");
            (n, seq.time_of(n + 1) as f64)
        }
        None => (256, 256.0 * ctx.mean_gap()),
    };
    let events: Vec<&Event> = if ctx.model.example44_sequence().is_some() {
        ctx.events.iter().collect()
    } else {
        // Interval and count eventualities from the battery.
        ctx.events
            .iter()
            .filter(|e| matches!(e.label().as_str(), "alpha(0)>1" | "count(0,1]==0"))
            .collect()
    };
    let mut out = Vec::new();
    for event in events {
        let ev = cesaro_event(ctx.model, event, n_max, &budget, ctx.lhs(&event.label()))?;
        let tv = cesaro_time(ctx.model, event, x_max, &budget, ctx.rhs(&event.label()))?;
        let code = |t: &ams::CesaroTrace| -> Result<f64, IdentityError> {
            Ok(status_code(&ams_verdict(t, 0.5, 0.05)?.status))
        };
        out.push(pair(
            event.label(),
            Estimate::exact(code(&ev)?),
            Estimate::exact(code(&tv)?),
        ));
    }
    Ok(out)
}

fn i_4_4(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let lhs = direct(ctx, ctx.model, ctx.lhs("direct"))?;
    let oracle = ctx.model.palm_oracle().expect("applicability");
    let rhs = ams::convert_es_to_ts(&oracle, ctx.events, &ctx.budget, ctx.rhs("convert"))?;
    Ok(pairs(ctx.events, lhs, rhs))
}

fn i_4_4b(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let lhs = ams::convert_ts_to_es(ctx.model, ctx.events, &ctx.budget, ctx.lhs("convert"))?;
    let oracle = ctx.model.palm_oracle().expect("applicability");
    let rhs = direct(ctx, &oracle, ctx.rhs("direct"))?;
    Ok(pairs(ctx.events, lhs, rhs))
}

fn i_4_5(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let x = 10.0 * ctx.mean_gap();
    let lhs = count_rate(ctx, ctx.model, x, ctx.lhs("rate"))?;
    let exp = experiment(ctx, ctx.model, 0.0, x, ctx.rhs("palm mean gap"))?;
    let mean = exp.run(1, |draw, obs| {
        let p = &draw.pattern;
        let range = p.range_oc(0.0, x);
        let n = range.len() as f64;
        let gaps: Option<f64> = range
            .map(|pos| Some(p.points()[shifted(pos, 1, p.len())?] - p.points()[pos]))
            .sum();
        obs[0] = gaps.map(|g| (g, n));
    })?;
    Ok(vec![pair("Nbar vs 1/alphabar", lhs, reciprocal(mean[0]))])
}

/// `delta_0 = lambda_ts ∫_0^{alpha_0} sigma∘theta_y dy / E_ts sigma` on a
/// Palm sample of the base.
fn delta0(p: &Pattern, tilt: &Tilt<f64>, rate: f64, norm: f64) -> Option<f64> {
    let alpha0 = p.interval(0).ok()?;
    Some(rate * tilt.occupation(p, 0.0, alpha0)? / norm)
}

struct TiltParts {
    oracle: Model,
    tilt: Tilt<f64>,
    rate: f64,
    norm: f64,
}

fn tilt_parts(model: &Model) -> TiltParts {
    let (base, tilt) = model.ts_base_and_tilt().expect("applicability");
    let oracle = base.palm_oracle().expect("applicability");
    let gaps = base.palm_gap_law().expect("renewal base");
    TiltParts {
        norm: tilt.stationary_mean(gaps.mean(), gaps.second_moment()),
        rate: 1.0 / gaps.mean(),
        oracle,
        tilt,
    }
}

fn i_5_2n(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let parts = tilt_parts(ctx.model);
    let exp = experiment(ctx, &parts.oracle, 0.0, 0.0, ctx.lhs("delta0"))?;
    let lhs = exp.run(1, |draw, obs| {
        obs[0] = delta0(&draw.pattern, &parts.tilt, parts.rate, parts.norm).map(|d| (d, 1.0));
    })?;
    Ok(vec![pair("E0_ts(delta_0)", lhs[0], Estimate::exact(1.0))])
}

fn i_5_2a(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let lhs = est_intermediate(
        ctx.model,
        0,
        ctx.events,
        &ctx.budget,
        ctx.lhs("intermediate"),
    )?;
    let parts = tilt_parts(ctx.model);
    let exp = experiment(ctx, &parts.oracle, 0.0, 0.0, ctx.rhs("delta0"))?;
    let rhs = exp.run(ctx.events.len(), |draw, obs| {
        let p = &draw.pattern;
        let Some(d) = delta0(p, &parts.tilt, parts.rate, parts.norm) else {
            return;
        };
        for (slot, event) in obs.iter_mut().zip(ctx.events) {
            *slot = event.holds(p).map(|v| (d * indicator(v), 1.0));
        }
    })?;
    Ok(pairs(ctx.events, lhs, rhs))
}

fn i_7_1b(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let lhs = direct(ctx, ctx.model, ctx.lhs("model"))?;
    let star = pstar(ctx.model.clone()).map_err(EstimateError::from)?;
    let rhs = direct(ctx, &star, ctx.rhs("pstar"))?;
    Ok(pairs(ctx.events, lhs, rhs))
}

fn i_8_1a(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let ys = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let grid = BinGrid::around(&ys, 0.04)?;
    let lhs = est_intensity(ctx.model, &grid, &ctx.budget, ctx.lhs("intensity"))?;
    let parts = tilt_parts(ctx.model);
    let exp = experiment(ctx, &parts.oracle, -2.0, 2.0, ctx.rhs("sigma"))?;
    let rhs = exp.run(ys.len(), |draw, obs| {
        let p = &draw.pattern;
        for (slot, &y) in obs.iter_mut().zip(&ys) {
            *slot = parts.tilt.eval(&View::at(p, -y)).map(|s| (s, 1.0));
        }
    })?;
    Ok(ys
        .iter()
        .zip(lhs.values)
        .zip(rhs)
        .map(|((y, l), r)| pair(format!("y={y}"), l, scaled(r, parts.rate / parts.norm)))
        .collect())
}

fn i_8_4rho(ctx: &Ctx<'_>) -> Result<Vec<Pair>, IdentityError> {
    let parts = tilt_parts(ctx.model);
    let lambda = parts.rate;
    let mut out = Vec::new();
    for x in [-1.0, 0.5] {
        let grid = BinGrid::around(&[x], 0.1)?;
        let lhs = est_shifted_palm(
            ctx.model,
            ctx.events,
            &grid,
            &ctx.budget,
            ctx.lhs(&format!("x={x}")),
        )?;
        let exp = experiment(
            ctx,
            &parts.oracle,
            x.min(0.0),
            x.max(0.0),
            ctx.rhs(&format!("x={x}")),
        )?;
        let rhs = exp.run(ctx.events.len(), |draw, obs: &mut [Obs]| {
            let p = &draw.pattern;
            let Some(a) = View::at(p, -x).interval(0) else {
                return;
            };
            for (slot, event) in obs.iter_mut().zip(ctx.events) {
                *slot = event.holds(p).map(|v| (indicator(v) * a, 1.0));
            }
        })?;
        let scale = lambda / (2.0 - (-lambda * x.abs()).exp());
        for ((event, l), r) in ctx.events.iter().zip(lhs).zip(rhs) {
            let l = l.values[0].ok_or_else(|| EstimateError::ZeroDenominator {
                label: format!("{} in bin at {x}", event.label()),
            })?;
            out.push(pair(
                format!("{} @x={x}", event.label()),
                l,
                scaled(r, scale),
            ));
        }
    }
    Ok(out)
}
