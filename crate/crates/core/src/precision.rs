//! Working-precision helpers for the multi-precision orbit computations.

use rug::ops::Pow;
use rug::Float;

/// Digits used for N up to [`SMALL_N_LIMIT`].
pub const DEFAULT_DIGITS_SMALL: u32 = 30;
/// Digits used above [`SMALL_N_LIMIT`].
pub const DEFAULT_DIGITS_LARGE: u32 = 60;
pub const SMALL_N_LIMIT: usize = 100;

/// Smallest precision the solver accepts; the bisection stops ten digits
/// short of the working precision, so anything lower leaves no usable root.
pub const MIN_DIGITS: u32 = 20;

/// Guard bits added on top of the decimal request.
const GUARD_BITS: u32 = 8;

pub fn default_digits(n: usize) -> u32 {
    if n <= SMALL_N_LIMIT {
        DEFAULT_DIGITS_SMALL
    } else {
        DEFAULT_DIGITS_LARGE
    }
}

/// Binary precision (mantissa bits) that carries `digits` significant decimals.
pub fn bits_for_digits(digits: u32) -> u32 {
    (f64::from(digits) * std::f64::consts::LOG2_10).ceil() as u32 + GUARD_BITS
}

/// `10^-exponent` at the given binary precision.
pub fn pow10_neg(prec: u32, exponent: i32) -> Float {
    let ten = Float::with_val(prec, 10);
    ten.pow(-exponent)
}

/// Decimal rendering with `digits` significant digits; round-trips through
/// [`parse_decimal`] at the same precision.
pub fn format_decimal(x: &Float, digits: u32) -> String {
    x.to_string_radix(10, Some(digits as usize))
}

pub fn parse_decimal(s: &str, prec: u32) -> Option<Float> {
    let parsed = Float::parse(s.trim()).ok()?;
    let value = Float::with_val(prec, parsed);
    value.is_finite().then_some(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_cover_requested_digits() {
        assert_eq!(bits_for_digits(30), 108);
        assert!(bits_for_digits(60) > 2 * 100);
    }

    #[test]
    fn decimal_round_trip() {
        let prec = bits_for_digits(40);
        let x = Float::with_val(prec, 2).sqrt();
        let s = format_decimal(&x, 40);
        let y = parse_decimal(&s, prec).unwrap();
        let diff = Float::with_val(prec, &x - &y).abs();
        assert!(diff < pow10_neg(prec, 38));
    }

    #[test]
    fn rejects_garbage_and_non_finite() {
        assert!(parse_decimal("abc", 64).is_none());
        assert!(parse_decimal("inf", 64).is_none());
        assert!(parse_decimal("-1.5e3", 64).is_some());
    }
}
