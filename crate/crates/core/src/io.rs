//! Text formats: the pattern file and the CSV reports.
//!
//! A pattern file holds one pattern per line as comma-separated ascending
//! timestamps. A line `# window lo hi` sets the window of the patterns
//! that follow; other `#` lines are comments.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::ams::CesaroTrace;
use crate::estimate::{Estimate, IntensityProfile, PalmProfile};
use crate::identities::SuiteOutcome;
use crate::pattern::{PatternError, PointPattern};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Pattern { line: usize, source: PatternError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Writes patterns, emitting a window header whenever the window changes.
pub fn write_patterns<W: Write>(mut w: W, patterns: &[PointPattern<f64>]) -> Result<(), IoError> {
    let mut current: Option<(f64, f64)> = None;
    for p in patterns {
        if current != Some(p.window()) {
            let (lo, hi) = p.window();
            writeln!(w, "# window {lo} {hi}")?;
            current = Some(p.window());
        }
        let line: Vec<String> = p.points().iter().map(|t| t.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_patterns<R: BufRead>(r: R) -> Result<Vec<PointPattern<f64>>, IoError> {
    let mut window: Option<(f64, f64)> = None;
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        let parse_err = |message: String| IoError::Parse { line: n, message };
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            let mut words = rest.split_whitespace();
            if words.next() == Some("window") {
                let nums: Vec<f64> = words
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|e| parse_err(format!("bad window bound `{s}`: {e}")))
                    })
                    .collect::<Result<_, _>>()?;
                let [lo, hi] = nums[..] else {
                    return Err(parse_err("window header needs two bounds".into()));
                };
                window = Some((lo, hi));
            }
            continue;
        }
        let (lo, hi) =
            window.ok_or_else(|| parse_err("pattern before any window header".into()))?;
        let points: Vec<f64> = if trimmed.is_empty() {
            Vec::new()
        } else {
            trimmed
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| parse_err(format!("bad timestamp `{s}`: {e}")))
                })
                .collect::<Result<_, _>>()?
        };
        out.push(
            PointPattern::new(points, lo, hi)
                .map_err(|source| IoError::Pattern { line: n, source })?,
        );
    }
    Ok(out)
}

fn num(v: f64) -> String {
    v.to_string()
}

fn estimate_fields(e: &Estimate) -> [String; 5] {
    [
        num(e.value),
        num(e.std_error),
        e.reps.to_string(),
        e.rejected.to_string(),
        num(e.ess),
    ]
}

const ESTIMATE_HEADER: [&str; 6] = ["label", "value", "std_error", "reps", "rejected", "ess"];

/// `label,value,std_error,reps,rejected,ess`.
pub fn write_estimates<W: Write>(w: W, rows: &[(String, Estimate)]) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(ESTIMATE_HEADER)?;
    for (label, e) in rows {
        let f = estimate_fields(e);
        out.write_record([label.as_str(), &f[0], &f[1], &f[2], &f[3], &f[4]])?;
    }
    out.flush()?;
    Ok(())
}

/// `bin_lo,bin_hi,label,value,std_error,reps,rejected,ess`; empty bins have
/// blank value and standard error.
pub fn write_palm_profiles<W: Write>(w: W, profiles: &[PalmProfile]) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["bin_lo", "bin_hi"];
    header.extend(ESTIMATE_HEADER);
    out.write_record(&header)?;
    for p in profiles {
        for (&(lo, hi), v) in p.bins.iter().zip(&p.values) {
            let f = match v {
                Some(e) => estimate_fields(e),
                None => [
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ],
            };
            out.write_record([
                &num(lo),
                &num(hi),
                p.label.as_str(),
                &f[0],
                &f[1],
                &f[2],
                &f[3],
                &f[4],
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Intensity profile with the same columns, labelled `intensity`.
pub fn write_intensity<W: Write>(w: W, profile: &IntensityProfile) -> Result<(), IoError> {
    let as_palm = PalmProfile {
        label: "intensity".into(),
        bins: profile.bins.clone(),
        values: profile.values.iter().copied().map(Some).collect(),
    };
    write_palm_profiles(w, &[as_palm])
}

/// `checkpoint,value,std_error`.
pub fn write_trace<W: Write>(w: W, trace: &CesaroTrace) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["checkpoint", "value", "std_error"])?;
    for (c, e) in trace.checkpoints.iter().zip(&trace.values) {
        out.write_record([num(*c), num(e.value), num(e.std_error)])?;
    }
    out.flush()?;
    Ok(())
}

/// `id,model,eventuality,lhs,lhs_se,rhs,rhs_se,z,verdict`. Checks whose
/// estimators failed are listed with verdict `error` and the message in
/// the eventuality column.
pub fn write_suite<W: Write>(w: W, outcome: &SuiteOutcome) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "id",
        "model",
        "eventuality",
        "lhs",
        "lhs_se",
        "rhs",
        "rhs_se",
        "z",
        "verdict",
    ])?;
    for r in &outcome.reports {
        out.write_record([
            r.id.clone(),
            r.model.clone(),
            r.eventuality.clone(),
            num(r.lhs.value),
            num(r.lhs.std_error),
            num(r.rhs.value),
            num(r.rhs.std_error),
            num(r.z),
            r.verdict().to_string(),
        ])?;
    }
    for (id, model, message) in &outcome.errors {
        out.write_record([id, model, message, "", "", "", "", "", "error"])?;
    }
    out.flush()?;
    Ok(())
}

/// A plain table: header row then one record per row.
pub fn write_table<W: Write>(w: W, header: &[&str], rows: &[Vec<String>]) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_file_round_trip() {
        let a = PointPattern::new(vec![-1.5, -0.2, 0.7, 0.1 + 0.2], -2.0, 2.0);
        assert!(a.is_err(), "unsorted input is rejected");
        let a = PointPattern::new(vec![-1.5, -0.2, 0.1 + 0.2, 0.7], -2.0, 2.0).unwrap();
        let b = PointPattern::new(vec![], -2.0, 2.0).unwrap();
        let c = PointPattern::new(vec![0.0, 1.0], -1.0, 3.0).unwrap();
        let mut buf = Vec::new();
        write_patterns(&mut buf, &[a.clone(), b.clone(), c.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().filter(|l| l.starts_with("# window")).count(),
            2
        );
        let back = read_patterns(&buf[..]).unwrap();
        assert_eq!(back, vec![a, b, c]);
    }

    #[test]
    fn malformed_pattern_files() {
        let missing = read_patterns("0.5,1\n".as_bytes()).unwrap_err();
        assert!(matches!(missing, IoError::Parse { line: 1, .. }));
        let unsorted = read_patterns("# window -1 2\n1,0.5\n".as_bytes()).unwrap_err();
        assert!(matches!(unsorted, IoError::Pattern { line: 2, .. }));
        let junk = read_patterns("# window -1 2\n1,x\n".as_bytes()).unwrap_err();
        assert!(matches!(junk, IoError::Parse { line: 2, .. }));
    }

    #[test]
    fn estimate_csv_quotes_labels() {
        let mut buf = Vec::new();
        let e = Estimate::exact(0.5);
        write_estimates(&mut buf, &[("count(0,1]==0".into(), e)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "label,value,std_error,reps,rejected,ess\n\"count(0,1]==0\",0.5,0,0,0,0\n"
        );
    }
}
