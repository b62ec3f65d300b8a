//! The subcommands. Each reads its config table, runs, and writes its
//! reports into the output directory.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use palmlab::ams::{ams_verdict, cesaro_event, cesaro_time, AmsError, AmsVerdict, CesaroTrace};
use palmlab::estimate::{
    est_intensity, est_intermediate, est_palm_zero, est_palm_zero_observed, est_probability,
    est_shifted_palm, BinGrid, Budget, Estimate,
};
use palmlab::identities::{default_catalog, registry, run_suite, SuiteConfig};
use palmlab::io;
use palmlab::{
    ev_example44, example44, example84_exact, Event, Eventuality, LawTag, Model, ModelConfig,
    ModelError, SeedStream, Window,
};
use rayon::prelude::*;

use crate::config::{self, Common, ConfigFile};
use crate::{Cli, CliError, Command};

const SEED_VAR: &str = "PALMLAB_SEED";
const DEFAULT_REPS: u64 = 100_000;
const DEFAULT_AMS_REPS: u64 = 10_000;
const DEFAULT_HORIZON_GAPS: f64 = 20.0;
/// Below this many replications suite verdicts are mostly noise.
const NOISE_FLOOR_REPS: u64 = 1_000;

struct Ctx<'a> {
    cli: &'a Cli,
    file: ConfigFile,
}

pub fn dispatch(cli: &Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(CliError::run)?;
    }
    if cli.only.is_some() && cli.command != Command::Suite {
        return Err(CliError::Usage(
            "--only applies to the suite subcommand".into(),
        ));
    }
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::run(format!("{}: {e}", cli.out.display())))?;
    let ctx = Ctx { cli, file };
    match cli.command {
        Command::Simulate => simulate(&ctx).map(|_| true),
        Command::Palm => palm(&ctx).map(|_| true),
        Command::Ams => ams(&ctx).map(|_| true),
        Command::Suite => suite(&ctx),
        Command::Example44 => example44_cmd(&ctx).map(|_| true),
        Command::Example84 => example84_cmd(&ctx).map(|_| true),
    }
}

impl Ctx<'_> {
    /// `--seed`, then `PALMLAB_SEED`, then the section, then the file.
    fn seed(&self, common: &Common) -> Result<u64, CliError> {
        if let Some(s) = self.cli.seed {
            return Ok(s);
        }
        if let Ok(v) = std::env::var(SEED_VAR) {
            return v.trim().parse().map_err(|_| {
                CliError::Usage(format!("{SEED_VAR}=`{v}` is not an unsigned integer"))
            });
        }
        Ok(common.seed.or(self.file.seed).unwrap_or(0))
    }

    fn reps(&self, common: &Common, default: u64) -> Result<u64, CliError> {
        let reps = self
            .cli
            .reps
            .or(common.reps)
            .or(self.file.reps)
            .unwrap_or(default);
        if reps == 0 {
            return Err(CliError::Usage("reps must be positive".into()));
        }
        Ok(reps)
    }

    fn budget(&self, section: &str, common: &Common, default: u64) -> Result<Budget, CliError> {
        let mut budget = Budget::new(self.reps(common, default)?);
        if let Some(g) = common.guard_gaps {
            if !(g.is_finite() && g > 0.0) {
                return Err(CliError::config(
                    section,
                    "guard_gaps",
                    format!("{g} is not positive"),
                ));
            }
            budget.guard_gaps = g;
        }
        Ok(budget)
    }

    fn stream(&self, section: &str, common: &Common) -> Result<SeedStream, CliError> {
        Ok(SeedStream::new(self.seed(common)?).split_label(section))
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.cli.out.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::run(format!("{}: {e}", path.display())))
    }
}

fn build_model(section: &str, cfg: &ModelConfig) -> Result<Model, CliError> {
    cfg.build().map_err(|e| model_error(section, "", e))
}

fn model_error(section: &str, prefix: &str, e: ModelError) -> CliError {
    match e {
        ModelError::Config { field, message } => {
            CliError::config(section, &format!("{prefix}{field}"), message)
        }
        other => CliError::config(section, prefix.trim_end_matches('.'), other.to_string()),
    }
}

fn parse_events(
    section: &str,
    field: &str,
    sources: &[String],
    horizon: f64,
) -> Result<Vec<Event>, CliError> {
    sources
        .iter()
        .map(|src| {
            Eventuality::parse(src, horizon)
                .map_err(|e| CliError::config(section, field, format!("`{src}`: {e}")))
        })
        .collect()
}

fn positive(section: &str, field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(
            section,
            field,
            format!("{v} is not positive"),
        ))
    }
}

fn report(path: &Path) {
    println!("wrote {}", path.display());
}

fn print_estimates(rows: &[(String, Estimate)]) {
    for (label, e) in rows {
        println!("{label:<32} {:.6} ± {:.6}", e.value, e.std_error);
    }
}

fn simulate(ctx: &Ctx<'_>) -> Result<(), CliError> {
    let s: config::SimulateSection = ctx.file.section("simulate", config::SIMULATE_KEYS, true)?;
    let model = build_model("simulate", &s.model)?;
    let reach = DEFAULT_HORIZON_GAPS * model.mean_gap();
    let window = Window::new(s.lo.unwrap_or(-reach), s.hi.unwrap_or(reach))
        .and_then(|w| model.check_window(&w).map(|_| w))
        .map_err(|e| CliError::config("simulate", "lo", e.to_string()))?;
    let mut reps = ctx.reps(&s.common, 1)?;
    if model.law_tag() == LawTag::Deterministic {
        reps = 1;
    }
    let stream = ctx.stream("simulate", &s.common)?;
    let draws = (0..reps)
        .into_par_iter()
        .map(|i| model.sample_seeded(&stream, i, &window))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::run)?;
    let patterns: Vec<_> = draws.iter().map(|d| d.pattern.clone()).collect();
    io::write_patterns(ctx.create("patterns.txt")?, &patterns).map_err(CliError::run)?;
    report(&ctx.cli.out.join("patterns.txt"));
    if model.is_weighted() {
        let rows: Vec<Vec<String>> = draws
            .iter()
            .enumerate()
            .map(|(i, d)| vec![i.to_string(), d.weight.to_string()])
            .collect();
        io::write_table(ctx.create("weights.csv")?, &["index", "weight"], &rows)
            .map_err(CliError::run)?;
        report(&ctx.cli.out.join("weights.csv"));
    }
    Ok(())
}

fn palm(ctx: &Ctx<'_>) -> Result<(), CliError> {
    let s: config::PalmSection = ctx.file.section("palm", config::PALM_KEYS, true)?;
    let estimator = s.estimator.as_deref().unwrap_or("palm_zero");
    let horizon_gaps = positive(
        "palm",
        "horizon_gaps",
        s.horizon_gaps.unwrap_or(DEFAULT_HORIZON_GAPS),
    )?;
    if s.events.is_empty() && estimator != "intensity" {
        return Err(CliError::Usage(
            "no eventualities given; set `events` in [palm]".into(),
        ));
    }
    let out = ctx.cli.out.join("palm.csv");
    if let Some(path) = &s.patterns {
        return palm_observed(ctx, &s, estimator, horizon_gaps, path);
    }
    let model = build_model("palm", &s.model)?;
    let mean_gap = model.mean_gap();
    let events = parse_events("palm", "events", &s.events, horizon_gaps * mean_gap)?;
    let budget = ctx.budget("palm", &s.common, DEFAULT_REPS)?;
    let stream = ctx.stream("palm", &s.common)?;
    let labelled = |values: Vec<Estimate>| -> Vec<(String, Estimate)> {
        events.iter().map(|e| e.label()).zip(values).collect()
    };
    let grid = || {
        let lo = s.bin_lo.unwrap_or(-5.0 * mean_gap);
        let hi = s.bin_hi.unwrap_or(5.0 * mean_gap);
        BinGrid::uniform(lo, hi, s.bins.unwrap_or(20))
            .map_err(|e| CliError::config("palm", "bins", e.to_string()))
    };
    match estimator {
        "palm_zero" => {
            let x = positive("palm", "x", s.x.unwrap_or(10.0 * mean_gap))?;
            let rows = labelled(est_palm_zero(&model, &events, x, &budget, stream).map_err(CliError::run)?);
            io::write_estimates(ctx.create("palm.csv")?, &rows).map_err(CliError::run)?;
            print_estimates(&rows);
        }
        "probability" => {
            let rows = labelled(est_probability(&model, &events, &budget, stream).map_err(CliError::run)?);
            io::write_estimates(ctx.create("palm.csv")?, &rows).map_err(CliError::run)?;
            print_estimates(&rows);
        }
        "intermediate" => {
            let n = s.n.unwrap_or(0);
            let rows = labelled(est_intermediate(&model, n, &events, &budget, stream).map_err(CliError::run)?);
            io::write_estimates(ctx.create("palm.csv")?, &rows).map_err(CliError::run)?;
            print_estimates(&rows);
        }
        "shifted_palm" => {
            let profiles = est_shifted_palm(&model, &events, &grid()?, &budget, stream).map_err(CliError::run)?;
            io::write_palm_profiles(ctx.create("palm.csv")?, &profiles).map_err(CliError::run)?;
        }
        "intensity" => {
            let profile = est_intensity(&model, &grid()?, &budget, stream).map_err(CliError::run)?;
            io::write_intensity(ctx.create("palm.csv")?, &profile).map_err(CliError::run)?;
        }
        other => {
            return Err(CliError::config(
                "palm",
                "estimator",
                format!("unknown estimator `{other}` (palm_zero, probability, intermediate, shifted_palm, intensity)"),
            ))
        }
    }
    report(&out);
    Ok(())
}

/// Palm estimates from a pattern file; the horizon is measured in the
/// empirical mean gap.
fn palm_observed(
    ctx: &Ctx<'_>,
    s: &config::PalmSection,
    estimator: &str,
    horizon_gaps: f64,
    path: &str,
) -> Result<(), CliError> {
    if estimator != "palm_zero" {
        return Err(CliError::config(
            "palm",
            "estimator",
            "pattern files support only palm_zero",
        ));
    }
    let x = positive(
        "palm",
        "x",
        s.x.ok_or_else(|| CliError::config("palm", "x", "required with `patterns`"))?,
    )?;
    let file = File::open(path)
        .map_err(|e| CliError::config("palm", "patterns", format!("{path}: {e}")))?;
    let patterns = io::read_patterns(BufReader::new(file))
        .map_err(|e| CliError::config("palm", "patterns", format!("{path}: {e}")))?;
    let (points, length) = patterns.iter().fold((0usize, 0.0), |(n, l), p| {
        (n + p.len(), l + (p.window().1 - p.window().0))
    });
    if points == 0 {
        return Err(CliError::run(format!("{path}: no points")));
    }
    let events = parse_events(
        "palm",
        "events",
        &s.events,
        horizon_gaps * length / points as f64,
    )?;
    let values = est_palm_zero_observed(&patterns, &events, x).map_err(CliError::run)?;
    let rows: Vec<(String, Estimate)> = events.iter().map(|e| e.label()).zip(values).collect();
    io::write_estimates(ctx.create("palm.csv")?, &rows).map_err(CliError::run)?;
    print_estimates(&rows);
    report(&ctx.cli.out.join("palm.csv"));
    Ok(())
}

/// A trace too short to judge is reported as inconclusive.
fn verdict_of(trace: &CesaroTrace, tail_fraction: f64, tol: f64) -> Result<AmsVerdict, CliError> {
    match ams_verdict(trace, tail_fraction, tol) {
        Ok(v) => Ok(v),
        Err(AmsError::TooFewCheckpoints(k)) => {
            eprintln!("palmlab: only {k} checkpoints; verdict is Inconclusive");
            Ok(AmsVerdict::inconclusive(tol, tail_fraction))
        }
        Err(e) => Err(CliError::run(e)),
    }
}

fn write_verdict(
    ctx: &Ctx<'_>,
    verdict: &AmsVerdict,
    extra: serde_json::Map<String, serde_json::Value>,
) -> Result<(), CliError> {
    let mut json = verdict.to_json();
    if let Some(obj) = json.as_object_mut() {
        obj.extend(extra);
    }
    let mut w = ctx.create("verdict.json")?;
    serde_json::to_writer_pretty(&mut w, &json).map_err(CliError::run)?;
    writeln!(w).map_err(CliError::run)?;
    w.flush().map_err(CliError::run)?;
    report(&ctx.cli.out.join("verdict.json"));
    Ok(())
}

fn tail_and_tol(
    section: &str,
    tail_fraction: Option<f64>,
    tol: Option<f64>,
) -> Result<(f64, f64), CliError> {
    let tail = tail_fraction.unwrap_or(0.5);
    if !(tail > 0.0 && tail <= 1.0) {
        return Err(CliError::config(
            section,
            "tail_fraction",
            format!("{tail} is not in (0, 1]"),
        ));
    }
    Ok((tail, positive(section, "tol", tol.unwrap_or(0.05))?))
}

fn ams(ctx: &Ctx<'_>) -> Result<(), CliError> {
    let s: config::AmsSection = ctx.file.section("ams", config::AMS_KEYS, true)?;
    let model = build_model("ams", &s.model)?;
    let horizon = positive(
        "ams",
        "horizon_gaps",
        s.horizon_gaps.unwrap_or(DEFAULT_HORIZON_GAPS),
    )? * model.mean_gap();
    let event = match &s.event {
        Some(src) => parse_events("ams", "event", std::slice::from_ref(src), horizon)?.remove(0),
        None if model.example44_sequence().is_some() => ev_example44(horizon),
        None => {
            return Err(CliError::Usage(
                "no eventuality given; set `event` in [ams]".into(),
            ))
        }
    };
    let (tail, tol) = tail_and_tol("ams", s.tail_fraction, s.tol)?;
    let budget = ctx.budget("ams", &s.common, DEFAULT_AMS_REPS)?;
    let stream = ctx.stream("ams", &s.common)?;
    let n_max = s.n_max.unwrap_or(1024);
    let mode = s.mode.as_deref().unwrap_or("event");
    let trace = match mode {
        "event" => cesaro_event(&model, &event, n_max, &budget, stream),
        "time" => {
            let x_max = positive(
                "ams",
                "x_max",
                s.x_max.unwrap_or(n_max as f64 * model.mean_gap()),
            )?;
            cesaro_time(&model, &event, x_max, &budget, stream)
        }
        other => {
            return Err(CliError::config(
                "ams",
                "mode",
                format!("unknown mode `{other}` (event, time)"),
            ))
        }
    }
    .map_err(CliError::run)?;
    io::write_trace(ctx.create("trace.csv")?, &trace).map_err(CliError::run)?;
    report(&ctx.cli.out.join("trace.csv"));
    let verdict = verdict_of(&trace, tail, tol)?;
    println!(
        "{} (oscillation {:.6}, tolerance {tol})",
        verdict.status.name(),
        verdict.oscillation
    );
    let mut extra = serde_json::Map::new();
    extra.insert("model".into(), model.to_string().into());
    extra.insert("eventuality".into(), event.label().into());
    extra.insert("mode".into(), mode.into());
    write_verdict(ctx, &verdict, extra)
}

fn suite(ctx: &Ctx<'_>) -> Result<bool, CliError> {
    let s: config::SuiteSection = ctx.file.section("suite", config::SUITE_KEYS, false)?;
    let models = match &s.models {
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(i, m)| {
                m.build()
                    .map_err(|e| model_error("suite", &format!("models[{i}]."), e))
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => default_catalog(),
    };
    let only = ctx.cli.only.clone().or(s.only.clone());
    if let Some(id) = &only {
        if !registry().iter().any(|spec| spec.id == id) {
            return Err(CliError::Usage(format!("unknown identity `{id}`")));
        }
    }
    let budget = ctx.budget("suite", &s.common, DEFAULT_REPS)?;
    if budget.reps < NOISE_FLOOR_REPS {
        eprintln!(
            "palmlab: warning: {} replications is below the noise floor of {NOISE_FLOOR_REPS}; expect low-ESS errors and spurious failures",
            budget.reps
        );
    }
    let config = SuiteConfig {
        budget,
        z_crit: positive("suite", "z_crit", s.z_crit.unwrap_or(4.0))?,
        atol: s.atol.unwrap_or(0.002),
        horizon_gaps: positive(
            "suite",
            "horizon_gaps",
            s.horizon_gaps.unwrap_or(DEFAULT_HORIZON_GAPS),
        )?,
        seed: ctx.seed(&s.common)?,
        only,
    };
    if config.atol.is_nan() || config.atol < 0.0 {
        return Err(CliError::config(
            "suite",
            "atol",
            format!("{} is negative", config.atol),
        ));
    }
    let outcome = run_suite(&models, &config);
    for (id, model, message) in &outcome.errors {
        eprintln!("palmlab: warning: {id} on {model}: {message}");
    }
    io::write_suite(ctx.create("suite.csv")?, &outcome).map_err(CliError::run)?;
    report(&ctx.cli.out.join("suite.csv"));
    let failed = outcome.reports.iter().filter(|r| !r.pass).count();
    println!(
        "{} checks, {failed} failed, {} errors, {} not applicable",
        outcome.reports.len(),
        outcome.errors.len(),
        outcome.skipped.len()
    );
    Ok(outcome.passed())
}

fn example44_cmd(ctx: &Ctx<'_>) -> Result<(), CliError> {
    let s: config::Example44Section =
        ctx.file
            .section("example44", config::EXAMPLE44_KEYS, false)?;
    let len = s.pattern_len.unwrap_or(216);
    let model: Model = example44(len).map_err(|e| model_error("example44", "pattern_len", e))?;
    let (tail, tol) = tail_and_tol("example44", s.tail_fraction, s.tol)?;
    let seq = model.example44_sequence().expect("lattice model");

    let rows: Vec<Vec<String>> = (1..)
        .map_while(|k| seq.b(k).map(|b| (k, b)))
        .map(|(k, b)| {
            vec![
                k.to_string(),
                seq.a(k).map(|a| a.to_string()).unwrap_or_default(),
                b.to_string(),
            ]
        })
        .collect();
    io::write_table(ctx.create("sequence.csv")?, &["k", "a", "b"], &rows).map_err(CliError::run)?;
    report(&ctx.cli.out.join("sequence.csv"));

    let mut rows = Vec::new();
    for (k, &n) in seq
        .block_ends()
        .iter()
        .enumerate()
        .filter(|(_, &n)| n <= len)
    {
        let Some(m) = seq.running_mean(n) else {
            continue;
        };
        let ones = (m * num_rational::Ratio::from_integer(n)).to_integer();
        let time = seq.time_of(n + 1);
        // The gap before T_1 has length 1 and satisfies the eventuality.
        let m_time = num_rational::Ratio::new(ones + 1, time);
        println!(
            "m_b({}) = m_{n} = {m}    time average to T_{} = {time}: {m_time}",
            k + 1,
            n + 1
        );
        rows.push(vec![
            (k + 1).to_string(),
            n.to_string(),
            m.to_string(),
            ratio_f64(m).to_string(),
            time.to_string(),
            m_time.to_string(),
            ratio_f64(m_time).to_string(),
        ]);
    }
    io::write_table(
        ctx.create("cesaro.csv")?,
        &[
            "k",
            "n",
            "event_average",
            "event_average_value",
            "time",
            "time_average",
            "time_average_value",
        ],
        &rows,
    )
    .map_err(CliError::run)?;
    report(&ctx.cli.out.join("cesaro.csv"));

    let event = ev_example44(DEFAULT_HORIZON_GAPS * model.mean_gap());
    let trace = cesaro_event(
        &model,
        &event,
        len,
        &Budget::new(1),
        ctx.stream("example44", &s.common)?,
    )
    .map_err(CliError::run)?;
    io::write_trace(ctx.create("trace.csv")?, &trace).map_err(CliError::run)?;
    report(&ctx.cli.out.join("trace.csv"));
    let verdict = verdict_of(&trace, tail, tol)?;
    println!(
        "{} (oscillation {:.6}, tolerance {tol})",
        verdict.status.name(),
        verdict.oscillation
    );
    let mut extra = serde_json::Map::new();
    extra.insert("model".into(), model.to_string().into());
    extra.insert("eventuality".into(), event.label().into());
    extra.insert("mode".into(), "event".into());
    write_verdict(ctx, &verdict, extra)
}

fn ratio_f64(r: num_rational::Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn example84_cmd(ctx: &Ctx<'_>) -> Result<(), CliError> {
    let s: config::Example84Section =
        ctx.file
            .section("example84", config::EXAMPLE84_KEYS, false)?;
    let rate = positive("example84", "rate", s.rate.unwrap_or(1.0))?;
    let model: Model = example84_exact(rate).map_err(|e| model_error("example84", "rate", e))?;
    let budget = ctx.budget("example84", &s.common, DEFAULT_REPS)?;
    let stream = ctx.stream("example84", &s.common)?;
    let horizon = DEFAULT_HORIZON_GAPS / rate;
    let mut rows: Vec<(String, f64, Estimate, f64)> = Vec::new();

    let xs = [0.5, 1.0, 2.0];
    let events: Vec<Event> = xs
        .iter()
        .map(|&x| palmlab::ev_interval_gt(0, x, horizon))
        .collect();
    let survival = est_probability(&model, &events, &budget, stream.split_label("survival"))
        .map_err(CliError::run)?;
    for (&x, e) in xs.iter().zip(survival) {
        let lx = rate * x;
        rows.push((
            "P[alpha(0)>x]".into(),
            x,
            e,
            (-lx).exp() * (lx * lx / 2.0 + lx + 1.0),
        ));
    }

    let centers = [-2.0, 0.0, 2.0];
    let grid = BinGrid::around(&centers, 0.02).map_err(CliError::run)?;
    let intensity = est_intensity(&model, &grid, &budget, stream.split_label("intensity"))
        .map_err(CliError::run)?;
    for (&x, e) in centers.iter().zip(intensity.values) {
        rows.push((
            "lambda(x)".into(),
            x,
            e,
            rate - rate * (-rate * x.abs()).exp() / 2.0,
        ));
    }

    let cs = [0.5, 1.0];
    let events: Vec<Event> = cs
        .iter()
        .map(|&c| palmlab::ev_interval_gt(-1, c, horizon))
        .collect();
    let grid = BinGrid::around(&[-1.0], 0.1).map_err(CliError::run)?;
    let profiles = est_shifted_palm(
        &model,
        &events,
        &grid,
        &budget,
        stream.split_label("shifted"),
    )
    .map_err(CliError::run)?;
    for (&c, p) in cs.iter().zip(profiles) {
        let e = p.values[0].ok_or_else(|| CliError::run("too few points near x = -1"))?;
        rows.push((
            format!("P0x[alpha(-1)>{c}] at x=-1"),
            c,
            e,
            (-rate * c).exp(),
        ));
    }

    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|(q, at, e, exact)| {
            let z = (e.value - exact) / e.std_error;
            println!(
                "{q:<28} {at:>5}  {:.6} ± {:.6}  closed form {exact:.6}  z {z:+.2}",
                e.value, e.std_error
            );
            vec![
                q.clone(),
                at.to_string(),
                e.value.to_string(),
                e.std_error.to_string(),
                exact.to_string(),
                z.to_string(),
            ]
        })
        .collect();
    io::write_table(
        ctx.create("example84.csv")?,
        &["quantity", "at", "value", "std_error", "closed_form", "z"],
        &table,
    )
    .map_err(CliError::run)?;
    report(&ctx.cli.out.join("example84.csv"));
    Ok(())
}
