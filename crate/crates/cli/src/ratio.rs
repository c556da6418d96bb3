use std::fmt;
use std::str::FromStr;

use cranpool_core::scalar::Scalar;
use num_rational::Rational64;

/// A flag value given as `a/b`, an integer or a plain decimal, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio(pub Rational64);

impl Ratio {
    pub fn to<T: Scalar>(self) -> T {
        T::from_ratio(*self.0.numer(), *self.0.denom())
    }
}

impl FromStr for Ratio {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || format!("{s:?} is not a number (expected a/b, an integer or a decimal)");
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(format!("{s:?} has a zero denominator"));
            }
            return Ok(Ratio(Rational64::new(n, d)));
        }
        let (neg, digits) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 12 {
            return Err(bad());
        }
        let den = 10i64.pow(frac.len() as u32);
        let whole: i64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let part: i64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = whole
            .checked_mul(den)
            .and_then(|w| w.checked_add(part))
            .ok_or_else(bad)?;
        Ok(Ratio(Rational64::new(if neg { -num } else { num }, den)))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Integers as-is, other values to three decimals.
pub fn show(v: Rational64) -> String {
    if v.is_integer() {
        v.to_integer().to_string()
    } else {
        format!("{:.3}", Scalar::to_f64(&v))
    }
}
