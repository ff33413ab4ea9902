//! Lossless numeric parsing: integers, "p/q" fractions and decimal literals
//! with optional exponent all map to exact rationals.

use fjopt_core::{Rational, Scalar};
use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot read `{text}` as a number: {reason}")]
pub struct NumberError {
    pub text: String,
    pub reason: &'static str,
}

fn err(text: &str, reason: &'static str) -> NumberError {
    NumberError {
        text: text.to_string(),
        reason,
    }
}

pub fn parse_rational(text: &str) -> Result<Rational, NumberError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(err(text, "empty"));
    }
    if let Some((p, q)) = t.split_once('/') {
        let p = parse_decimal(p.trim()).map_err(|_| err(text, "bad numerator"))?;
        let q = parse_decimal(q.trim()).map_err(|_| err(text, "bad denominator"))?;
        if q == Rational::zero() {
            return Err(err(text, "zero denominator"));
        }
        return Ok(p / q);
    }
    parse_decimal(t).map_err(|reason| err(text, reason))
}

fn digits(s: &str) -> Result<BigInt, &'static str> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err("expected digits");
    }
    s.parse().map_err(|_| "expected digits")
}

fn parse_decimal(t: &str) -> Result<Rational, &'static str> {
    let (neg, body) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(at) => {
            let e: i32 = body[at + 1..].parse().map_err(|_| "bad exponent")?;
            (&body[..at], e)
        }
        None => (body, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return Err("expected digits");
    }
    let all = format!("{int}{frac}");
    let num = digits(&all)?;
    let scale = exp - frac.len() as i32;
    if scale.unsigned_abs() > 4096 {
        return Err("exponent out of range");
    }
    let ten = Rational::from_int(10);
    let factor = Scalar::pow(&ten, scale.unsigned_abs());
    let mut v = Rational::from_integer(num);
    v = if scale >= 0 { v * factor } else { v / factor };
    Ok(if neg { -v } else { v })
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn decimal(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn accepted_forms() {
        assert_eq!(parse_rational("3").unwrap(), q(3, 1));
        assert_eq!(parse_rational(" -2/6 ").unwrap(), q(-1, 3));
        assert_eq!(parse_rational("0.125").unwrap(), q(1, 8));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert_eq!(parse_rational("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_rational("2.5E2").unwrap(), q(250, 1));
        assert_eq!(parse_rational("729/1000000000").unwrap(), q(729, 1_000_000_000));
    }

    #[test]
    fn rejected_forms() {
        for bad in ["", "abc", "1/0", "1.2.3", "--1", "1e", "0x10", "."] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn decimal_round_trips() {
        for x in [0.1, 1.0 / 3.0, 4.0 / 3.0, 1e-300, -7.25] {
            assert_eq!(decimal(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(decimal(4.0 / 3.0), "1.3333333333333333e0");
    }
}
