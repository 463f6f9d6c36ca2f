//! Exact money/valuation arithmetic.
//!
//! Every valuation, payment and threshold is an exact rational. Group
//! classification in the single-item mechanism and the tie rules in the
//! multi-item ones are discontinuous in the reports, so floating point would
//! make audit verdicts depend on rounding.

use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, Zero};

/// An exact rational amount.
pub type Value = Ratio<i64>;

/// Largest accepted numerator/denominator magnitude when parsing. Keeps the
/// products formed by the mechanisms (scaling by alpha, perturbing by
/// epsilon, summing prefixes) far away from `i64` overflow.
const PARSE_LIMIT: i64 = 1_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseValueError {
    #[error("empty number")]
    Empty,
    #[error("malformed number `{0}`")]
    Malformed(String),
    #[error("number `{0}` exceeds the supported precision")]
    TooLarge(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Converts an integer to a [`Value`].
pub fn int(n: i64) -> Value {
    Value::from_integer(n)
}

/// Shorthand for `num / den`.
pub fn frac(num: i64, den: i64) -> Value {
    Value::new(num, den)
}

/// Parses an exact decimal (`"12"`, `"-0.375"`, `"1e-3"`) or a fraction
/// (`"7/3"`).
pub fn parse_value(text: &str) -> Result<Value, ParseValueError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(ParseValueError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_decimal(num.trim(), s)?;
        let den = parse_decimal(den.trim(), s)?;
        if den.is_zero() {
            return Err(ParseValueError::ZeroDenominator(s.to_string()));
        }
        return Ok(num / den);
    }
    parse_decimal(s, s)
}

fn parse_decimal(s: &str, whole: &str) -> Result<Value, ParseValueError> {
    let malformed = || ParseValueError::Malformed(whole.to_string());
    let too_large = || ParseValueError::TooLarge(whole.to_string());

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(idx) => {
            let exp: i32 = s[idx + 1..].parse().map_err(|_| malformed())?;
            (&s[..idx], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(malformed());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }

    let mut numer: i64 = 0;
    for b in int_part.bytes().chain(frac_part.bytes()) {
        numer = numer.checked_mul(10).and_then(|n| n.checked_add(i64::from(b - b'0'))).ok_or_else(too_large)?;
    }
    let scale = exponent - frac_part.len() as i32;
    let pow = |e: u32| 10i64.checked_pow(e).ok_or_else(too_large);
    let mut value = if scale >= 0 {
        Value::from_integer(numer.checked_mul(pow(scale as u32)?).ok_or_else(too_large)?)
    } else {
        Value::new(numer, pow(scale.unsigned_abs())?)
    };
    if *value.numer() > PARSE_LIMIT || *value.denom() > PARSE_LIMIT {
        return Err(too_large());
    }
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Renders a value exactly: as a terminating decimal when the denominator
/// has only factors 2 and 5, otherwise as `p/q`.
pub fn format_value(v: &Value) -> String {
    let mut den = *v.denom();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while den % 2 == 0 {
        den /= 2;
        twos += 1;
    }
    while den % 5 == 0 {
        den /= 5;
        fives += 1;
    }
    if den != 1 {
        return format!("{}/{}", v.numer(), v.denom());
    }
    let places = twos.max(fives);
    if places == 0 {
        return v.numer().to_string();
    }
    // Scale to an integer count of 10^-places units; i128 keeps the
    // intermediate product in range.
    let scaled = i128::from(*v.numer()) * 10i128.pow(places) / i128::from(*v.denom());
    let sign = if v.is_negative() { "-" } else { "" };
    let abs = scaled.unsigned_abs();
    let unit = 10u128.pow(places);
    format!("{sign}{}.{:0width$}", abs / unit, abs % unit, width = places as usize)
}

/// Display adapter for [`format_value`].
pub struct Exact<'a>(pub &'a Value);

impl fmt::Display for Exact<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_value(self.0))
    }
}
