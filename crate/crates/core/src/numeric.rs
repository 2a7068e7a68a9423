//! Exact rational arithmetic helpers.
//!
//! Budget fractions, window bounds, and report ratios are all exact
//! rationals; floating point never enters the accounting path. Values
//! arrive as decimal strings ("0.25") or fractions ("1/4") and are kept
//! as [`BigRational`] from parse to print.

use std::error::Error;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Error produced when a string is not a decimal or `p/q` rational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalParseError {
    input: String,
}

impl fmt::Display for RationalParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "`{}` is not a rational; expected a decimal like 0.25 or a fraction like 1/4",
            self.input
        )
    }
}

impl Error for RationalParseError {}

fn parse_err(s: &str) -> RationalParseError {
    RationalParseError {
        input: s.to_owned(),
    }
}

/// Builds a rational from an integer pair.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Builds a rational from unsigned parts.
pub fn ratio_u64(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"3"`, `"0.002"`, or `"1/500"` into an exact rational.
pub fn parse_rational(input: &str) -> Result<BigRational, RationalParseError> {
    let s = input.trim();
    if s.is_empty() {
        return Err(parse_err(input));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return Err(parse_err(input));
    }

    let magnitude = if let Some((num, den)) = body.split_once('/') {
        let num: BigInt = num.parse().map_err(|_| parse_err(input))?;
        let den: BigInt = den.parse().map_err(|_| parse_err(input))?;
        if den.is_zero() || num.is_negative() || den.is_negative() {
            return Err(parse_err(input));
        }
        BigRational::new(num, den)
    } else if let Some((int_part, frac_part)) = body.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(parse_err(input));
        }
        let int_part = if int_part.is_empty() { "0" } else { int_part };
        let int: BigInt = int_part.parse().map_err(|_| parse_err(input))?;
        let frac: BigInt = frac_part.parse().map_err(|_| parse_err(input))?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        BigRational::new(int * &scale + frac, scale)
    } else {
        let int: BigInt = body.parse().map_err(|_| parse_err(input))?;
        BigRational::from_integer(int)
    };

    Ok(if negative { -magnitude } else { magnitude })
}

/// Renders a rational in lowest terms as `"p/q"`, or `"p"` for integers.
pub fn display_fraction(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact decimal expansion, when one exists (denominator of form 2^a·5^b).
pub fn exact_decimal(r: &BigRational) -> Option<String> {
    let mut den = r.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = (r * BigRational::from_integer(BigInt::from(10u32).pow(places))).to_integer();
    Some(format_scaled(&scaled, places))
}

/// Exact decimal when the expansion terminates, `"p/q"` otherwise.
pub fn decimal_or_fraction(r: &BigRational) -> String {
    exact_decimal(r).unwrap_or_else(|| display_fraction(r))
}

/// Rounds to `places` decimals, half away from zero, and renders the result.
pub fn rounded_decimal(r: &BigRational, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = r * BigRational::from_integer(scale);
    let half = ratio(1, 2);
    let rounded = if scaled.is_negative() {
        -((-&scaled + half).floor().to_integer())
    } else {
        (scaled + half).floor().to_integer()
    };
    format_scaled(&rounded, places)
}

/// Formats `scaled / 10^places` with exactly `places` fraction digits.
fn format_scaled(scaled: &BigInt, places: u32) -> String {
    if places == 0 {
        return scaled.to_string();
    }
    let negative = scaled.is_negative();
    let digits = scaled.magnitude().to_string();
    let places = places as usize;
    let padded = if digits.len() <= places {
        format!("{}{}", "0".repeat(places + 1 - digits.len()), digits)
    } else {
        digits
    };
    let split = padded.len() - places;
    format!(
        "{}{}.{}",
        if negative { "-" } else { "" },
        &padded[..split],
        &padded[split..]
    )
}

/// Integer bounds of the open interval `(lo, hi)`: every integer `x` with
/// `lo < x < hi` satisfies `lower <= x <= upper` and vice versa. An empty
/// interval yields `lower > upper`.
pub fn open_interval_int_bounds(lo: &BigRational, hi: &BigRational) -> (BigInt, BigInt) {
    let lower = lo.floor().to_integer() + 1;
    let upper = hi.ceil().to_integer() - 1;
    (lower, upper)
}

/// Integer bounds of the budget window around `target_fraction * phi` with
/// relative half-width `tolerance`: a parameter count `x` is inside the
/// window iff `lower <= x <= upper`.
///
/// The window is open (`|x - target| / phi < tolerance`, strictly); the
/// degenerate `tolerance = 0` case admits exact hits only.
pub fn window_int_bounds(
    phi: u64,
    target_fraction: &BigRational,
    tolerance: &BigRational,
) -> (BigInt, BigInt) {
    let phi = BigRational::from_integer(BigInt::from(phi));
    let target = target_fraction * &phi;
    let half_width = tolerance * &phi;
    if half_width.is_zero() {
        return if target.is_integer() {
            (target.to_integer(), target.to_integer())
        } else {
            (BigInt::from(1), BigInt::from(0))
        };
    }
    open_interval_int_bounds(&(&target - &half_width), &(&target + &half_width))
}

/// `ceil(value × frac)` for a non-negative fraction, exact.
pub fn ceil_mul(value: u64, frac: &BigRational) -> u64 {
    let product = BigRational::from_integer(BigInt::from(value)) * frac;
    product
        .ceil()
        .to_integer()
        .to_u64()
        .expect("budget ceiling exceeds u64")
}
