//! Exact weights and parameters.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

pub type Rational = Ratio<i64>;

/// Largest denominator accepted for weights and connective parameters.
///
/// Keeping every denominator below this bound, together with the common
/// denominator check in [`common_denominator`], keeps all intermediate
/// products of two weights inside `i64`.
pub const MAX_DENOMINATOR: i64 = 1_000_000_000;

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `p/q`, `p`, or a short decimal literal such as `0.25`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: i64 = num.trim().parse().ok()?;
        let den: i64 = den.trim().parse().ok()?;
        if den == 0 {
            return None;
        }
        return Some(Rational::new(num, den));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || frac.len() > 9 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int.trim_start().starts_with('-');
        let int_part: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().ok()?
        };
        let den = 10i64.pow(frac.len() as u32);
        let frac_part: i64 = frac.parse().ok()?;
        let magnitude = int_part.abs() * den + frac_part;
        let num = if negative { -magnitude } else { magnitude };
        return Some(Rational::new(num, den));
    }
    text.parse::<i64>().ok().map(Rational::from_integer)
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Least common multiple of the denominators, or `None` when it exceeds
/// [`MAX_DENOMINATOR`].
pub fn common_denominator<'a>(weights: impl IntoIterator<Item = &'a Rational>) -> Option<i64> {
    let mut lcm: i64 = 1;
    for w in weights {
        lcm = lcm.lcm(w.denom());
        if lcm > MAX_DENOMINATOR {
            return None;
        }
    }
    Some(lcm)
}

pub fn sum<'a>(weights: impl IntoIterator<Item = &'a Rational>) -> Rational {
    weights.into_iter().fold(Rational::zero(), |acc, w| acc + w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("1/3"), Some(Rational::new(1, 3)));
        assert_eq!(parse_rational(" -2 "), Some(Rational::from_integer(-2)));
        assert_eq!(parse_rational("0.25"), Some(Rational::new(1, 4)));
        assert_eq!(parse_rational("-0.5"), Some(Rational::new(-1, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn common_denominator_rejects_huge_lcm() {
        let ws = [Rational::new(1, 4), Rational::new(1, 6)];
        assert_eq!(common_denominator(&ws), Some(12));
        let big = [Rational::new(1, 999_999_937), Rational::new(1, 999_999_929)];
        assert_eq!(common_denominator(&big), None);
    }
}
