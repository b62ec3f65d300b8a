//! Finite, simple point patterns on a window of the real line.
//!
//! Points are indexed with the usual Palm convention: `T_0` is the largest
//! point `<= 0` and `T_1` the smallest point `> 0`, so that
//! `... < T_-1 < T_0 <= 0 < T_1 < T_2 < ...`. The window `[lo, hi]` stands in
//! for the whole line; every query that would need a point outside it is
//! reported instead of extrapolated.

use thiserror::Error;

use crate::events::Eventuality;
use crate::scalar::Coord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error("window [{lo}, {hi}] is empty")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("point {index} at {time} lies outside the window [{lo}, {hi}]")]
    PointOutsideWindow {
        index: usize,
        time: f64,
        lo: f64,
        hi: f64,
    },
    #[error("points {index} and {} are closer than the minimum gap or out of order", index + 1)]
    NotSimple { index: usize },
    #[error("all points lie on one side of the origin")]
    NoStraddle,
    #[error("T_{0} is not covered by the pattern")]
    IndexOutOfPattern(i64),
    #[error("interval ({a}, {b}] is not inside the window [{lo}, {hi}]")]
    OutsideWindow { a: f64, b: f64, lo: f64, hi: f64 },
    #[error("eventuality `{label}` cannot be resolved at the point {time}")]
    InsufficientContext { label: String, time: f64 },
}

/// A point `T_n` together with its index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexedPoint<T> {
    pub index: i64,
    pub time: T,
}

/// A strictly increasing finite set of timestamps observed on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern<T> {
    points: Vec<T>,
    lo: T,
    hi: T,
}

impl<T: Coord> PointPattern<T> {
    /// Validates and builds a pattern.
    ///
    /// Consecutive points must be at least [`Coord::min_gap`] apart (and
    /// strictly increasing), and every point must lie in `[lo, hi]`.
    pub fn new(points: Vec<T>, lo: T, hi: T) -> Result<Self, PatternError> {
        if !lo.is_finite_coord() || !hi.is_finite_coord() {
            return Err(PatternError::NonFinite);
        }
        if !(lo < hi) {
            return Err(PatternError::EmptyWindow {
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        for (index, &t) in points.iter().enumerate() {
            if !t.is_finite_coord() {
                return Err(PatternError::NonFinite);
            }
            if t < lo || t > hi {
                return Err(PatternError::PointOutsideWindow {
                    index,
                    time: t.as_f64(),
                    lo: lo.as_f64(),
                    hi: hi.as_f64(),
                });
            }
        }
        let gap = T::min_gap();
        for (index, pair) in points.windows(2).enumerate() {
            if !(pair[1] > pair[0]) || pair[1] - pair[0] < gap {
                return Err(PatternError::NotSimple { index });
            }
        }
        Ok(Self { points, lo, hi })
    }

    /// Builds a pattern from points the caller already knows to be valid.
    pub(crate) fn from_trusted(points: Vec<T>, lo: T, hi: T) -> Self {
        debug_assert!(Self::new(points.clone(), lo, hi).is_ok());
        Self { points, lo, hi }
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn window(&self) -> (T, T) {
        (self.lo, self.hi)
    }

    /// Number of stored points `<= origin`; this is the storage position of
    /// `T_1` for a pattern viewed from `origin`.
    #[inline]
    pub(crate) fn split(&self, origin: T) -> usize {
        self.points.partition_point(|&t| t <= origin)
    }

    /// Storage positions of `T_0` and `T_1`.
    pub fn locate_indices(&self) -> Result<(usize, usize), PatternError> {
        let split = self.split(T::zero());
        if split == 0 || split == self.points.len() {
            return Err(PatternError::NoStraddle);
        }
        Ok((split - 1, split))
    }

    /// Storage position of `T_n`.
    pub fn position(&self, n: i64) -> Result<usize, PatternError> {
        position_from(self.split(T::zero()), n, self.points.len())
            .ok_or(PatternError::IndexOutOfPattern(n))
    }

    /// `T_n`.
    pub fn point(&self, n: i64) -> Result<IndexedPoint<T>, PatternError> {
        let pos = self.position(n)?;
        Ok(IndexedPoint {
            index: n,
            time: self.points[pos],
        })
    }

    /// `alpha_n = T_{n+1} - T_n`.
    pub fn interval(&self, n: i64) -> Result<T, PatternError> {
        let start = self.position(n)?;
        let end = self
            .position(n + 1)
            .map_err(|_| PatternError::IndexOutOfPattern(n + 1))?;
        Ok(self.points[end] - self.points[start])
    }

    /// Time shift: the point at `t` moves to `t - y`, as does the window.
    pub fn shift_time(&self, y: T) -> Self {
        Self {
            points: self.points.iter().map(|&t| t - y).collect(),
            lo: self.lo - y,
            hi: self.hi - y,
        }
    }

    /// Event shift: moves the origin onto `T_n`.
    pub fn shift_event(&self, n: i64) -> Result<Self, PatternError> {
        let pos = self.position(n)?;
        Ok(self.shift_time(self.points[pos]))
    }

    fn check_inside(&self, a: T, b: T) -> Result<(), PatternError> {
        if a > b || a < self.lo || b > self.hi {
            return Err(PatternError::OutsideWindow {
                a: a.as_f64(),
                b: b.as_f64(),
                lo: self.lo.as_f64(),
                hi: self.hi.as_f64(),
            });
        }
        Ok(())
    }

    /// Storage positions of the points in `(a, b]`.
    pub(crate) fn range_oc(&self, a: T, b: T) -> std::ops::Range<usize> {
        let start = self.points.partition_point(|&t| t <= a);
        let end = self.points.partition_point(|&t| t <= b);
        start..end.max(start)
    }

    /// Storage positions of the points in `[a, b)`.
    pub(crate) fn range_co(&self, a: T, b: T) -> std::ops::Range<usize> {
        let start = self.points.partition_point(|&t| t < a);
        let end = self.points.partition_point(|&t| t < b);
        start..end.max(start)
    }

    /// `N(a, b]`.
    pub fn count(&self, a: T, b: T) -> Result<usize, PatternError> {
        self.check_inside(a, b)?;
        Ok(self.range_oc(a, b).len())
    }

    /// Number of `A`-occurrences in `(a, b]`: points `T_n` there with
    /// `A(eta_n p)` true.
    pub fn count_marked(&self, a: T, b: T, event: &Eventuality<T>) -> Result<usize, PatternError> {
        self.check_inside(a, b)?;
        let mut hits = 0;
        for pos in self.range_oc(a, b) {
            match event.eval(&View::at_event(self, pos)) {
                Some(true) => hits += 1,
                Some(false) => {}
                None => {
                    return Err(PatternError::InsufficientContext {
                        label: event.label(),
                        time: self.points[pos].as_f64(),
                    })
                }
            }
        }
        Ok(hits)
    }

    /// The pattern restricted to `[lo, hi]` (intersected with its own window).
    pub fn clip(&self, lo: T, hi: T) -> Self {
        let lo = self.lo.max_of(lo);
        let hi = if hi < self.hi { hi } else { self.hi };
        let points = self
            .points
            .iter()
            .copied()
            .filter(|&t| t >= lo && t <= hi)
            .collect();
        Self { points, lo, hi }
    }
}

#[inline]
fn position_from(split: usize, n: i64, len: usize) -> Option<usize> {
    let pos = split as i64 - 1 + n;
    (pos >= 0 && (pos as usize) < len).then_some(pos as usize)
}

/// A pattern seen from a shifted origin, without copying it.
///
/// `View::at(p, s)` behaves like `shift_time(p, s)` and
/// `View::at_event(p, k)` like the event shift onto the point stored at
/// position `k`. All lookups return coordinates relative to the origin and
/// `None` when the window does not cover them.
#[derive(Debug, Clone, Copy)]
pub struct View<'a, T> {
    pattern: &'a PointPattern<T>,
    origin: T,
    split: usize,
}

impl<'a, T: Coord> View<'a, T> {
    pub fn at(pattern: &'a PointPattern<T>, origin: T) -> Self {
        Self {
            pattern,
            origin,
            split: pattern.split(origin),
        }
    }

    /// View centred on the point stored at position `pos`.
    pub fn at_event(pattern: &'a PointPattern<T>, pos: usize) -> Self {
        Self {
            pattern,
            origin: pattern.points[pos],
            split: pos + 1,
        }
    }

    pub fn origin(&self) -> T {
        self.origin
    }

    pub fn pattern(&self) -> &'a PointPattern<T> {
        self.pattern
    }

    /// Storage position of `T_n` of the view.
    #[inline]
    pub fn position(&self, n: i64) -> Option<usize> {
        position_from(self.split, n, self.pattern.points.len())
    }

    /// `T_n` of the view, relative to its origin.
    #[inline]
    pub fn point(&self, n: i64) -> Option<T> {
        self.position(n)
            .map(|pos| self.pattern.points[pos] - self.origin)
    }

    /// `alpha_n` of the view.
    #[inline]
    pub fn interval(&self, n: i64) -> Option<T> {
        let start = self.position(n)?;
        let end = self.position(n + 1)?;
        Some(self.pattern.points[end] - self.pattern.points[start])
    }

    /// `N(a, b]` of the view; `None` when the window does not cover it.
    pub fn count(&self, a: T, b: T) -> Option<usize> {
        let (lo, hi) = (self.origin + a, self.origin + b);
        if lo < self.pattern.lo || hi > self.pattern.hi {
            return None;
        }
        Some(self.pattern.range_oc(lo, hi).len())
    }

    /// `N[a, b)` of the view.
    pub fn count_co(&self, a: T, b: T) -> Option<usize> {
        let (lo, hi) = (self.origin + a, self.origin + b);
        if lo < self.pattern.lo || hi > self.pattern.hi {
            return None;
        }
        Some(self.pattern.range_co(lo, hi).len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{ev_interval_gt, Eventuality};
    use num_rational::Ratio;

    fn pat(points: &[f64]) -> PointPattern<f64> {
        PointPattern::new(points.to_vec(), -10.0, 10.0).unwrap()
    }

    #[test]
    fn locate_indices_examples() {
        let p = pat(&[-1.5, -0.2, 0.7, 2.1]);
        let (i0, i1) = p.locate_indices().unwrap();
        assert_eq!(p.points()[i0], -0.2);
        assert_eq!(p.points()[i1], 0.7);

        let p = pat(&[0.0, 1.0]);
        let (i0, i1) = p.locate_indices().unwrap();
        assert_eq!((p.points()[i0], p.points()[i1]), (0.0, 1.0));

        assert_eq!(
            pat(&[0.3, 1.2]).locate_indices(),
            Err(PatternError::NoStraddle)
        );
    }

    #[test]
    fn interval_examples() {
        assert_eq!(pat(&[-0.2, 0.7]).interval(0).unwrap(), 0.7 - (-0.2));
        assert!((pat(&[-0.2, 0.7]).interval(0).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(pat(&[-3.0, -1.0, 2.0]).interval(-1).unwrap(), 2.0);
        assert_eq!(
            pat(&[-1.0, 4.0]).interval(1),
            Err(PatternError::IndexOutOfPattern(2))
        );
    }

    #[test]
    fn shift_examples() {
        let p = pat(&[-1.5, -0.2, 0.7]);
        let q = p.shift_time(0.7);
        let expected = [-2.2, -0.9, 0.0];
        for (a, b) in q.points().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(q.points()[2], 0.0);
        assert_eq!(p.shift_time(0.0), p);
        let back = p.shift_time(1.3).shift_time(-1.3);
        for (a, b) in back.points().iter().zip(p.points()) {
            assert!((a - b).abs() <= f64::EPSILON * b.abs().max(1.0));
        }
    }

    #[test]
    fn event_shift_examples() {
        let p = pat(&[-0.2, 0.7, 2.1]);
        let q = p.shift_event(1).unwrap();
        assert_eq!(q.points()[1], 0.0);
        assert_eq!(q.point(0).unwrap().time, 0.0);
        assert!((q.points()[0] + 0.9).abs() < 1e-15);
        assert!((q.points()[2] - 1.4).abs() < 1e-15);

        let z = pat(&[-1.0, 0.0, 2.0]);
        assert_eq!(z.shift_event(0).unwrap(), z);

        assert_eq!(
            pat(&[-0.2, 0.7]).shift_event(5),
            Err(PatternError::IndexOutOfPattern(5))
        );
    }

    #[test]
    fn count_examples() {
        let p = pat(&[-0.2, 0.7, 2.1]);
        assert_eq!(p.count(0.0, 2.0).unwrap(), 1);
        assert_eq!(p.count(1.0, 1.0).unwrap(), 0);
        assert_eq!(p.count(0.7, 2.1).unwrap(), 1);
        assert!(matches!(
            p.count(-11.0, 0.0),
            Err(PatternError::OutsideWindow { .. })
        ));
    }

    #[test]
    fn count_marked_examples() {
        let p = pat(&[-3.0, -1.0, 0.5, 0.75, 1.75, 2.0, 2.625]);
        assert_eq!(
            p.count_marked(0.0, 2.0, &Eventuality::Always).unwrap(),
            p.count(0.0, 2.0).unwrap()
        );
        let wide = ev_interval_gt(0, 10.0, 5.0);
        assert_eq!(p.count_marked(-2.0, 2.0, &wide).unwrap(), 0);
        // The last point has no successor inside the window.
        let q = pat(&[-1.0, 0.5, 9.5]);
        assert!(matches!(
            q.count_marked(0.0, 10.0, &ev_interval_gt(0, 0.1, 50.0)),
            Err(PatternError::InsufficientContext { .. })
        ));
    }

    #[test]
    fn construction_rejects_invalid_patterns() {
        assert!(matches!(
            PointPattern::new(vec![0.0, 0.0], -1.0, 1.0),
            Err(PatternError::NotSimple { index: 0 })
        ));
        assert!(matches!(
            PointPattern::new(vec![0.0, 0.5e-12], -1.0, 1.0),
            Err(PatternError::NotSimple { .. })
        ));
        assert!(matches!(
            PointPattern::new(vec![0.0, 2.0], -1.0, 1.0),
            Err(PatternError::PointOutsideWindow { index: 1, .. })
        ));
        assert!(matches!(
            PointPattern::new(vec![f64::NAN], -1.0, 1.0),
            Err(PatternError::NonFinite)
        ));
        assert!(matches!(
            PointPattern::<f64>::new(vec![], 1.0, 1.0),
            Err(PatternError::EmptyWindow { .. })
        ));
    }

    #[test]
    fn rational_patterns_shift_exactly() {
        let r = |n, d| Ratio::new(n, d);
        let p = PointPattern::new(vec![r(-3, 2), r(-1, 5), r(7, 10)], r(-5, 1), r(5, 1)).unwrap();
        let q = p.shift_time(r(7, 10));
        assert_eq!(q.points(), &[r(-11, 5), r(-9, 10), r(0, 1)]);
        assert_eq!(q.shift_time(r(-7, 10)), p);
        assert_eq!(p.interval(0).unwrap(), r(9, 10));
    }

    #[test]
    fn view_matches_materialized_shift() {
        let p = pat(&[-3.0, -1.0, 0.5, 0.75, 1.75, 2.0, 2.625]);
        let v = View::at(&p, 1.0);
        let q = p.shift_time(1.0);
        for n in -2..=2 {
            assert_eq!(v.point(n), q.point(n).ok().map(|x| x.time));
        }
        // Position 4 holds T_3.
        let e = View::at_event(&p, 4);
        let q = p.shift_event(3).unwrap();
        assert_eq!(q.points()[4], 0.0);
        for n in -3..=2 {
            assert_eq!(e.interval(n), q.interval(n).ok());
        }
    }
}
