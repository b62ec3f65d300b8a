//! Textual eventuality language.
//!
//! ```text
//! expr  := term ('|' term)*
//! term  := unary ('&' unary)*
//! unary := '!' unary | atom
//! atom  := '(' expr ')'
//!        | 'true'
//!        | 'alpha' '(' int ')' '>' num
//!        | 'count' '(' num ',' num ']' '==' int
//!        | 'T1' '<=' num
//! num   := decimal ['/' decimal]
//! ```
//!
//! Whitespace is ignored between tokens. Both operators are left
//! associative and `&` binds tighter than `|`.

use thiserror::Error;

use super::{ev_and, ev_not, ev_or, Eventuality};
use crate::scalar::Coord;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("eventuality syntax error at byte {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

struct Parser<'a, T> {
    src: &'a str,
    pos: usize,
    horizon: T,
}

pub(super) fn parse<T: Coord>(src: &str, horizon: T) -> Result<Eventuality<T>, ParseError> {
    let mut p = Parser {
        src,
        pos: 0,
        horizon,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

impl<T: Coord> Parser<'_, T> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            pos: self.pos,
            message: message.into(),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn expr(&mut self) -> Result<Eventuality<T>, ParseError> {
        let mut e = self.term()?;
        while self.eat("|") {
            e = ev_or(e, self.term()?);
        }
        Ok(e)
    }

    fn term(&mut self) -> Result<Eventuality<T>, ParseError> {
        let mut e = self.unary()?;
        while self.eat("&") {
            e = ev_and(e, self.unary()?);
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Eventuality<T>, ParseError> {
        if self.eat("!") {
            return Ok(ev_not(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Eventuality<T>, ParseError> {
        if self.eat("(") {
            let e = self.expr()?;
            self.expect(")")?;
            return Ok(e);
        }
        if self.eat("true") {
            return Ok(Eventuality::Always);
        }
        if self.eat("alpha") {
            self.expect("(")?;
            let index = self.integer()?;
            self.expect(")")?;
            self.expect(">")?;
            let at = self.pos;
            let threshold = self.number()?;
            if threshold < T::zero() {
                return Err(ParseError {
                    pos: at,
                    message: "interval threshold must be nonnegative".into(),
                });
            }
            return Ok(Eventuality::IntervalGt {
                index,
                threshold,
                horizon: self.horizon,
            });
        }
        if self.eat("count") {
            self.expect("(")?;
            let at = self.pos;
            let a = self.number()?;
            self.expect(",")?;
            let b = self.number()?;
            self.expect("]")?;
            self.expect("==")?;
            let k = self.integer()?;
            if !(a < b) || k < 0 {
                return Err(ParseError {
                    pos: at,
                    message: "count needs a < b and k >= 0".into(),
                });
            }
            return Ok(Eventuality::CountEq {
                a,
                b,
                k: k as usize,
            });
        }
        if self.eat("T1") {
            self.expect("<=")?;
            let at = self.pos;
            let t = self.number()?;
            if !(t > T::zero()) {
                return Err(ParseError {
                    pos: at,
                    message: "first-point threshold must be positive".into(),
                });
            }
            return Ok(Eventuality::FirstPointLe {
                t,
                horizon: self.horizon,
            });
        }
        Err(self.error("expected an eventuality"))
    }

    fn lexeme(&mut self, accept: impl Fn(char) -> bool) -> &str {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .char_indices()
            .find(|&(i, c)| !(accept(c) || (i == 0 && (c == '-' || c == '+'))))
            .map(|(i, _)| i)
            .unwrap_or(self.rest().len());
        self.pos += len;
        &self.src[start..start + len]
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        let start = self.pos;
        let text = self.lexeme(|c| c.is_ascii_digit()).to_owned();
        text.parse().map_err(|_| ParseError {
            pos: start,
            message: format!("invalid integer `{text}`"),
        })
    }

    fn decimal(&mut self) -> Result<T, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let text = self
            .lexeme(|c| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E')
            .to_owned();
        text.parse::<f64>()
            .ok()
            .and_then(T::from_f64)
            .ok_or(ParseError {
                pos: start,
                message: format!("invalid number `{text}`"),
            })
    }

    fn number(&mut self) -> Result<T, ParseError> {
        let value = self.decimal()?;
        if self.eat("/") {
            let at = self.pos;
            let denom = self.decimal()?;
            if denom == T::zero() {
                return Err(ParseError {
                    pos: at,
                    message: "zero denominator".into(),
                });
            }
            return Ok(value / denom);
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{battery, ev_count_eq, ev_first_point_le, ev_interval_gt};
    use num_rational::Ratio;
    use proptest::prelude::*;

    #[test]
    fn parses_documented_forms() {
        let h = 50.0;
        assert_eq!(parse("alpha(0)>0.5", h).unwrap(), ev_interval_gt(0, 0.5, h));
        assert_eq!(parse("count(0,1]==0", h).unwrap(), ev_count_eq(0.0, 1.0, 0));
        assert_eq!(parse("T1<=0.7", h).unwrap(), ev_first_point_le(0.7, h));
        assert_eq!(
            parse(" ! alpha(-1) > 2 ", h).unwrap(),
            ev_not(ev_interval_gt(-1, 2.0, h))
        );
        let e = parse("alpha(0)>1 | count(0,1]==0 & T1<=0.5", h).unwrap();
        assert_eq!(
            e,
            ev_or(
                ev_interval_gt(0, 1.0, h),
                ev_and(ev_count_eq(0.0, 1.0, 0), ev_first_point_le(0.5, h))
            )
        );
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "",
            "alpha(0)",
            "alpha(0)>-1",
            "count(1,0]==0",
            "count(0,1]==-1",
            "T1<=0",
            "true &",
            "(true",
            "true true",
            "beta(0)>1",
        ] {
            assert!(parse::<f64>(bad, 50.0).is_err(), "{bad}");
        }
    }

    #[test]
    fn rational_literals() {
        let e = parse::<Ratio<i64>>("alpha(0)>3/2", Ratio::from_integer(10)).unwrap();
        assert_eq!(e.label(), "alpha(0)>3/2");
        assert_eq!(parse(&e.label(), Ratio::from_integer(10)).unwrap(), e);
    }

    #[test]
    fn battery_round_trips() {
        for e in battery(40.0_f64) {
            assert_eq!(parse(&e.label(), 40.0).unwrap(), e);
        }
    }

    fn arb_event() -> impl Strategy<Value = Eventuality<f64>> {
        let leaf = prop_oneof![
            Just(Eventuality::Always),
            (-3i64..3, 0.0f64..4.0).prop_map(|(n, c)| ev_interval_gt(n, c, 25.0)),
            (-3.0f64..3.0, 0.01f64..3.0, 0usize..4).prop_map(|(a, w, k)| ev_count_eq(a, a + w, k)),
            (0.01f64..5.0).prop_map(|t| ev_first_point_le(t, 25.0)),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(ev_not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| ev_and(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| ev_or(a, b)),
            ]
        })
    }

    proptest! {
        #[test]
        fn label_round_trip(e in arb_event()) {
            let parsed = parse(&e.label(), 25.0).unwrap();
            prop_assert_eq!(parsed, e);
        }
    }
}
