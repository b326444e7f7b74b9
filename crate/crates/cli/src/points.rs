//! Text forms of Type II points and parameter lists.
//!
//! A point is `gauss` or `zeta(<center>, <radius>)`, with the center a
//! Laurent polynomial in `t` and the radius a rational such as `1/5`.
//! Parameter lists are comma separated complex numbers, or a decade ladder
//! `1e-3..1e-8`.

use berkdyn::berkovich::TypeIIPoint;
use berkdyn::error::{Error, Result};
use berkdyn::family::parse_series;
use berkdyn::puiseux::{Q, C64};

fn parse_error(position: usize, message: impl Into<String>) -> Error {
    Error::Parse { position, message: message.into() }
}

pub fn parse_rational(text: &str) -> Result<Q> {
    let s = text.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: i64 = n.parse().map_err(|_| parse_error(0, format!("'{text}' is not a rational number")))?;
    let d: i64 = d.parse().map_err(|_| parse_error(0, format!("'{text}' is not a rational number")))?;
    if d == 0 {
        return Err(parse_error(0, "zero denominator"));
    }
    Ok(Q::new(n, d))
}

pub fn parse_point(text: &str) -> Result<TypeIIPoint> {
    let s = text.trim();
    if s.eq_ignore_ascii_case("gauss") || s == "x_g" {
        return Ok(TypeIIPoint::gauss());
    }
    let inner = s
        .strip_prefix("zeta(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| parse_error(0, format!("expected 'gauss' or 'zeta(center, radius)', found '{s}'")))?;
    let (c, r) = inner
        .rsplit_once(',')
        .ok_or_else(|| parse_error(5, "missing ',' between center and radius"))?;
    let center = parse_series(c)?;
    Ok(TypeIIPoint::new(&center, parse_rational(r)?))
}

pub fn parse_complex(text: &str) -> Result<C64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(x) = s.parse::<f64>() {
        return Ok(C64::new(x, 0.0));
    }
    let body = s
        .strip_suffix('i')
        .ok_or_else(|| parse_error(0, format!("'{text}' is not a complex number")))?;
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(k, ch)| (ch == '+' || ch == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
        .map(|(k, _)| k)
        .last();
    let bad = || parse_error(0, format!("'{text}' is not a complex number"));
    match split {
        Some(k) => {
            let re: f64 = body[..k].parse().map_err(|_| bad())?;
            let im_text = &body[k..];
            let im: f64 = match im_text {
                "+" => 1.0,
                "-" => -1.0,
                _ => im_text.parse().map_err(|_| bad())?,
            };
            Ok(C64::new(re, im))
        }
        None => {
            let im: f64 = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                _ => body.parse().map_err(|_| bad())?,
            };
            Ok(C64::new(0.0, im))
        }
    }
}

/// `1e-3..1e-8` (every decade in between) or a comma separated list.
pub fn parse_t_values(text: &str) -> Result<Vec<C64>> {
    if let Some((a, b)) = text.split_once("..") {
        let a: f64 = a.trim().parse().map_err(|_| parse_error(0, format!("bad ladder start '{a}'")))?;
        let b: f64 = b.trim().parse().map_err(|_| parse_error(0, format!("bad ladder end '{b}'")))?;
        if !(a > 0.0 && b > 0.0) {
            return Err(parse_error(0, "ladder endpoints must be positive"));
        }
        let (la, lb) = (a.log10().round() as i32, b.log10().round() as i32);
        let step = if lb >= la { 1 } else { -1 };
        let mut out = Vec::new();
        let mut k = la;
        loop {
            out.push(C64::new(10f64.powi(k), 0.0));
            if k == lb {
                break;
            }
            k += step;
        }
        return Ok(out);
    }
    text.split(',').map(parse_complex).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use berkdyn::puiseux::qi;

    #[test]
    fn points() {
        assert_eq!(parse_point("gauss").unwrap(), TypeIIPoint::gauss());
        let p = parse_point("zeta(0, 1/5)").unwrap();
        assert_eq!(p.radius(), Q::new(1, 5));
        let p = parse_point("zeta(t^-1, 0)").unwrap();
        assert_eq!(p.center().valuation(), Some(qi(-1)));
        assert!(parse_point("zeta(z, 1)").is_err());
        assert!(parse_point("ball").is_err());
    }

    #[test]
    fn complex_numbers_and_ladders() {
        assert_eq!(parse_complex("1e-7").unwrap(), C64::new(1e-7, 0.0));
        assert_eq!(parse_complex("0.5-2i").unwrap(), C64::new(0.5, -2.0));
        assert_eq!(parse_complex("1e-3+1e-4i").unwrap(), C64::new(1e-3, 1e-4));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        let l = parse_t_values("1e-3..1e-8").unwrap();
        assert_eq!(l.len(), 6);
        assert!((l[5].re - 1e-8).abs() < 1e-22);
        assert_eq!(parse_t_values("1e-4,1e-6").unwrap().len(), 2);
    }
}
