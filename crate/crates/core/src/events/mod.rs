//! Eventualities: local boolean functionals on point patterns.
//!
//! Every eventuality declares a dependency radius and may only read points
//! within that distance of the origin. Evaluation is three-valued: `None`
//! means the pattern does not carry enough context (a needed point lies
//! beyond the radius or the window), which estimators count as a rejected
//! replication. Combinators follow Kleene logic, so `false & ?` is `false`.

mod grammar;

use std::fmt;

pub use grammar::ParseError;

use crate::pattern::{PointPattern, View};
use crate::scalar::Coord;

#[derive(Debug, Clone, PartialEq)]
pub enum Eventuality<T> {
    /// The whole space.
    Always,
    /// `[alpha_index > threshold]`.
    IntervalGt {
        index: i64,
        threshold: T,
        horizon: T,
    },
    /// `[N(a, b] == k]`.
    CountEq {
        a: T,
        b: T,
        k: usize,
    },
    /// `[T_1 <= t]`.
    FirstPointLe {
        t: T,
        horizon: T,
    },
    Not(Box<Eventuality<T>>),
    And(Box<Eventuality<T>>, Box<Eventuality<T>>),
    Or(Box<Eventuality<T>>, Box<Eventuality<T>>),
}

/// `[alpha_n > c]`, resolvable when `T_n` and `T_{n+1}` are within `horizon`.
pub fn ev_interval_gt<T: Coord>(n: i64, c: T, horizon: T) -> Eventuality<T> {
    assert!(c >= T::zero(), "interval threshold must be nonnegative");
    Eventuality::IntervalGt {
        index: n,
        threshold: c,
        horizon,
    }
}

/// `[N(a, b] == k]`, with radius `max(|a|, |b|)`.
pub fn ev_count_eq<T: Coord>(a: T, b: T, k: usize) -> Eventuality<T> {
    assert!(a < b, "count interval must be nonempty");
    Eventuality::CountEq { a, b, k }
}

/// `[T_1 <= t]`.
pub fn ev_first_point_le<T: Coord>(t: T, horizon: T) -> Eventuality<T> {
    assert!(t > T::zero(), "first-point threshold must be positive");
    Eventuality::FirstPointLe { t, horizon }
}

pub fn ev_not<T>(e: Eventuality<T>) -> Eventuality<T> {
    Eventuality::Not(Box::new(e))
}

pub fn ev_and<T>(e: Eventuality<T>, f: Eventuality<T>) -> Eventuality<T> {
    Eventuality::And(Box::new(e), Box::new(f))
}

pub fn ev_or<T>(e: Eventuality<T>, f: Eventuality<T>) -> Eventuality<T> {
    Eventuality::Or(Box::new(e), Box::new(f))
}

/// The distinguished eventuality of the non-stationary lattice example:
/// `[alpha_0 <= 1.5]`, which on gaps of length 1 or 2 is `[alpha_0 == 1]`.
pub fn ev_example44<T: Coord>(horizon: T) -> Eventuality<T> {
    let three_halves = T::from_i64(3) / T::from_i64(2);
    ev_not(ev_interval_gt(0, three_halves, horizon))
}

impl<T: Coord> Eventuality<T> {
    /// Parses the textual form; index-based atoms get the given horizon.
    pub fn parse(src: &str, horizon: T) -> Result<Self, ParseError> {
        grammar::parse(src, horizon)
    }

    /// Stable textual identifier; parses back to the same eventuality.
    pub fn label(&self) -> String {
        self.to_string()
    }

    /// Dependency radius around the origin.
    pub fn radius(&self) -> T {
        match self {
            Self::Always => T::zero(),
            Self::IntervalGt { horizon, .. } | Self::FirstPointLe { horizon, .. } => *horizon,
            Self::CountEq { a, b, .. } => a.abs().max_of(b.abs()),
            Self::Not(e) => e.radius(),
            Self::And(e, f) | Self::Or(e, f) => e.radius().max_of(f.radius()),
        }
    }

    /// Evaluates on the pattern as seen from the view's origin.
    pub fn eval(&self, view: &View<'_, T>) -> Option<bool> {
        match self {
            Self::Always => Some(true),
            Self::IntervalGt {
                index,
                threshold,
                horizon,
            } => {
                let start = view.point(*index)?;
                let end = view.point(*index + 1)?;
                if start.abs() > *horizon || end.abs() > *horizon {
                    return None;
                }
                Some(view.interval(*index)? > *threshold)
            }
            Self::CountEq { a, b, k } => Some(view.count(*a, *b)? == *k),
            Self::FirstPointLe { t, horizon } => {
                let t1 = view.point(1)?;
                if t1 > *horizon {
                    return None;
                }
                Some(t1 <= *t)
            }
            Self::Not(e) => e.eval(view).map(|v| !v),
            Self::And(e, f) => match e.eval(view) {
                Some(false) => Some(false),
                left => match (left, f.eval(view)) {
                    (_, Some(false)) => Some(false),
                    (Some(true), Some(true)) => Some(true),
                    _ => None,
                },
            },
            Self::Or(e, f) => match e.eval(view) {
                Some(true) => Some(true),
                left => match (left, f.eval(view)) {
                    (_, Some(true)) => Some(true),
                    (Some(false), Some(false)) => Some(false),
                    _ => None,
                },
            },
        }
    }

    /// Evaluates at the origin of the pattern itself.
    pub fn holds(&self, pattern: &PointPattern<T>) -> Option<bool> {
        self.eval(&View::at(pattern, T::zero()))
    }

    /// Appends every origin `s` in the open interval `(from, to)` at which
    /// `s -> self.eval(View::at(p, s))` may change value.
    pub fn breakpoints(&self, p: &PointPattern<T>, from: T, to: T, out: &mut Vec<T>) {
        match self {
            Self::Always => {}
            Self::IntervalGt { horizon, .. } | Self::FirstPointLe { horizon, .. } => {
                push_shifted(p, T::zero(), from, to, out);
                push_shifted(p, *horizon, from, to, out);
                push_shifted(p, -*horizon, from, to, out);
                if let Self::FirstPointLe { t, .. } = self {
                    push_shifted(p, -*t, from, to, out);
                }
            }
            Self::CountEq { a, b, .. } => {
                push_shifted(p, -*a, from, to, out);
                push_shifted(p, -*b, from, to, out);
                let (lo, hi) = p.window();
                for s in [lo - *a, hi - *b] {
                    if s > from && s < to {
                        out.push(s);
                    }
                }
            }
            Self::Not(e) => e.breakpoints(p, from, to, out),
            Self::And(e, f) | Self::Or(e, f) => {
                e.breakpoints(p, from, to, out);
                f.breakpoints(p, from, to, out);
            }
        }
    }
}

/// Pushes `t + offset` for every point `t` with `t + offset` in `(from, to)`.
fn push_shifted<T: Coord>(p: &PointPattern<T>, offset: T, from: T, to: T, out: &mut Vec<T>) {
    let (lo, hi) = (from - offset, to - offset);
    let pts = p.points();
    let start = pts.partition_point(|&t| t <= lo);
    out.extend(
        pts[start..]
            .iter()
            .take_while(|&&t| t < hi)
            .map(|&t| t + offset)
            .filter(|&s| s > from && s < to),
    );
}

/// Sorts breakpoints and adds the endpoints, returning the partition of
/// `[from, to]` on which a piecewise constant functional is evaluated.
pub(crate) fn partition<T: Coord>(from: T, to: T, mut cuts: Vec<T>) -> Vec<T> {
    cuts.push(from);
    cuts.push(to);
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    cuts.dedup();
    cuts
}

/// `∫_from^to 1_A(θ_s p) ds`, computed exactly by splitting `[from, to]` at
/// the eventuality's breakpoints. `None` if `A` is unresolved anywhere on a
/// piece of positive length.
pub fn occupation<T: Coord>(
    p: &PointPattern<T>,
    event: &Eventuality<T>,
    from: T,
    to: T,
) -> Option<T> {
    if !(to > from) {
        return Some(T::zero());
    }
    if let Eventuality::Always = event {
        return Some(to - from);
    }
    let mut cuts = Vec::new();
    event.breakpoints(p, from, to, &mut cuts);
    let grid = partition(from, to, cuts);
    let two = T::one() + T::one();
    let mut total = T::zero();
    for w in grid.windows(2) {
        let mid = (w[0] + w[1]) / two;
        if event.eval(&View::at(p, mid))? {
            total = total + (w[1] - w[0]);
        }
    }
    Some(total)
}

impl<T: Coord> fmt::Display for Eventuality<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Always => write!(f, "true"),
            Self::IntervalGt {
                index, threshold, ..
            } => write!(f, "alpha({index})>{threshold}"),
            Self::CountEq { a, b, k } => write!(f, "count({a},{b}]=={k}"),
            Self::FirstPointLe { t, .. } => write!(f, "T1<={t}"),
            Self::Not(e) => match **e {
                Self::And(..) | Self::Or(..) => write!(f, "!({e})"),
                _ => write!(f, "!{e}"),
            },
            Self::And(l, r) => {
                let lp = matches!(**l, Self::Or(..));
                let rp = matches!(**r, Self::Or(..) | Self::And(..));
                write_operand(f, l, lp)?;
                write!(f, " & ")?;
                write_operand(f, r, rp)
            }
            Self::Or(l, r) => {
                let rp = matches!(**r, Self::Or(..));
                write_operand(f, l, false)?;
                write!(f, " | ")?;
                write_operand(f, r, rp)
            }
        }
    }
}

fn write_operand<T: Coord>(
    f: &mut fmt::Formatter<'_>,
    e: &Eventuality<T>,
    parens: bool,
) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// The ten-eventuality test battery used by the agreement checks.
pub fn battery<T: Coord>(horizon: T) -> Vec<Eventuality<T>> {
    let c = |v: f64| T::from_f64(v).expect("representable constant");
    vec![
        ev_interval_gt(0, c(0.5), horizon),
        ev_interval_gt(0, c(1.0), horizon),
        ev_interval_gt(0, c(2.0), horizon),
        ev_interval_gt(-1, c(1.0), horizon),
        ev_interval_gt(1, c(1.0), horizon),
        ev_count_eq(c(0.0), c(1.0), 0),
        ev_count_eq(c(0.0), c(2.0), 1),
        ev_first_point_le(c(0.5), horizon),
        ev_and(
            ev_interval_gt(0, c(1.0), horizon),
            ev_interval_gt(1, c(1.0), horizon),
        ),
        ev_or(
            ev_interval_gt(-1, c(0.5), horizon),
            ev_count_eq(c(0.0), c(1.0), 0),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(points: &[f64]) -> PointPattern<f64> {
        PointPattern::new(points.to_vec(), -10.0, 10.0).unwrap()
    }

    #[test]
    fn interval_gt_examples() {
        let p = pat(&[-0.2, 0.7]);
        assert_eq!(ev_interval_gt(0, 0.5, 50.0).holds(&p), Some(true));
        assert_eq!(ev_interval_gt(0, 0.0, 50.0).holds(&p), Some(true));
        let q = pat(&[-3.0, -1.0, 2.0]);
        assert_eq!(ev_interval_gt(-1, 2.0, 50.0).holds(&q), Some(false));
        // T_2 is missing, so alpha_1 is unresolved.
        assert_eq!(ev_interval_gt(1, 0.5, 50.0).holds(&q), None);
        // T_1 = 2 lies beyond a horizon of 1.5.
        assert_eq!(ev_interval_gt(0, 0.5, 1.5).holds(&q), None);
    }

    #[test]
    fn count_eq_examples() {
        let p = pat(&[-0.2, 0.7, 2.1]);
        assert_eq!(ev_count_eq(0.0, 2.0, 1).holds(&p), Some(true));
        assert_eq!(ev_count_eq(0.0, 2.0, 0).holds(&p), Some(false));
        assert_eq!(ev_count_eq(0.0, 2.0, 0).radius(), 2.0);
        assert_eq!(ev_count_eq(0.0, 20.0, 0).holds(&p), None);
    }

    #[test]
    fn first_point_examples() {
        let p = pat(&[-0.2, 0.7]);
        assert_eq!(ev_first_point_le(1.0, 50.0).holds(&p), Some(true));
        assert_eq!(ev_first_point_le(0.5, 50.0).holds(&p), Some(false));
    }

    #[test]
    fn combinator_identities() {
        let pats = [
            pat(&[-0.2, 0.7, 2.1]),
            pat(&[-3.0, -1.0, 2.0]),
            pat(&[-1.0, 0.0, 0.3, 3.0, 4.0]),
        ];
        let a = ev_or(ev_interval_gt(0, 0.8, 50.0), ev_count_eq(0.0, 1.0, 0));
        for p in &pats {
            let v = a.holds(p);
            assert_eq!(ev_not(ev_not(a.clone())).holds(p), v);
            assert_eq!(ev_and(a.clone(), Eventuality::Always).holds(p), v);
            assert_eq!(ev_or(a.clone(), ev_not(a.clone())).holds(p), Some(true));
        }
    }

    #[test]
    fn kleene_short_circuit() {
        let p = pat(&[-3.0, -1.0, 2.0]);
        let unknown = ev_interval_gt(1, 0.5, 50.0);
        let no = ev_interval_gt(0, 5.0, 50.0);
        assert_eq!(ev_and(unknown.clone(), no.clone()).holds(&p), Some(false));
        assert_eq!(ev_or(unknown.clone(), ev_not(no)).holds(&p), Some(true));
        assert_eq!(ev_and(unknown, Eventuality::Always).holds(&p), None);
    }

    #[test]
    fn example44_eventuality_reads_unit_gaps() {
        let p = pat(&[-1.0, 0.0, 1.0, 3.0]);
        let a = ev_example44(50.0);
        assert_eq!(a.holds(&p), Some(true));
        assert_eq!(a.eval(&View::at_event(&p, 2)), Some(false));
    }

    #[test]
    fn occupation_is_exact_for_interval_events() {
        // Gaps 1, 2, 0.5 starting at -1; [alpha_0 > 1.5] holds only while the
        // origin sits in the gap of length 2.
        let p = pat(&[-1.0, 0.0, 2.0, 2.5]);
        let a = ev_interval_gt(0, 1.5, 50.0);
        assert_eq!(occupation(&p, &a, -1.0, 2.5), Some(2.0));
        assert_eq!(occupation(&p, &a, 1.0, 2.25), Some(1.0));
        // [N(0,1] == 0] along the origin s: empty iff no point in (s, s+1].
        let c = ev_count_eq(0.0, 1.0, 0);
        let occ = occupation(&p, &c, -1.0, 2.5).unwrap();
        // Empty for s in [0, 1) only.
        assert!((occ - 1.0).abs() < 1e-12, "{occ}");
    }

    #[test]
    fn battery_labels_are_distinct() {
        let b = battery(50.0_f64);
        let mut labels: Vec<_> = b.iter().map(|e| e.label()).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 10);
    }
}
