//! Exact rational numbers used for attributes, objective values and
//! similarity scores, plus decimal-literal conversion.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type Rational = num_rational::BigRational;

/// Number of fractional digits printed for non-terminating decimals.
const MAX_FRACTION_DIGITS: usize = 12;

/// Parses a decimal literal such as `3`, `-1.5` or `0.25`.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if digits.contains('.') && frac_part.is_empty() {
        return None;
    }
    let mut numer: BigInt = if int_part.is_empty() { BigInt::zero() } else { int_part.parse().ok()? };
    let mut denom = BigInt::one();
    for b in frac_part.bytes() {
        numer = numer * 10 + BigInt::from(b - b'0');
        denom *= 10;
    }
    if negative {
        numer = -numer;
    }
    Some(Rational::new(numer, denom))
}

pub fn from_int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Renders a rational as a decimal: exact when the expansion terminates,
/// otherwise rounded half away from zero to twelve fractional digits.
pub fn format_decimal(value: &Rational) -> String {
    if value.is_integer() {
        return value.to_integer().to_string();
    }
    let digits = terminating_digits(value.denom()).unwrap_or(MAX_FRACTION_DIGITS);
    let scale = BigInt::from(10).pow(digits as u32);
    let scaled = value.abs() * Rational::from_integer(scale.clone());
    let rounded = (scaled + Rational::new(BigInt::one(), BigInt::from(2))).floor().to_integer();
    let (int_part, frac_part) = rounded.div_rem(&scale);
    let mut frac = format!("{:0>width$}", frac_part.to_string(), width = digits);
    while frac.ends_with('0') {
        frac.pop();
    }
    let sign = if value.is_negative() && !(int_part.is_zero() && frac.is_empty()) { "-" } else { "" };
    if frac.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac}")
    }
}

/// Number of fractional digits needed to write `1/denom` exactly, if finite.
fn terminating_digits(denom: &BigInt) -> Option<usize> {
    let mut rest = denom.abs();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while rest.is_even() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    rest.is_one().then_some(twos.max(fives))
}

/// Least common multiple of the denominators of `values` (1 when empty).
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Serde adapter writing rationals as decimal strings and reading either a
/// decimal string or a JSON number.
pub mod decimal {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;

    use super::{format_decimal, parse_decimal, Rational};

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_decimal(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        struct Decimal;
        impl Visitor<'_> for Decimal {
            type Value = Rational;
            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a decimal literal")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
                parse_decimal(v).ok_or_else(|| E::custom(format!("`{v}` is not a decimal literal")))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
                Ok(super::from_int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
                Ok(Rational::from_integer(v.into()))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
                // the shortest round-trip text of a float is the literal the user wrote
                self.visit_str(&v.to_string())
            }
        }
        d.deserialize_any(Decimal)
    }

    /// Optional fields; `null` and absence both read as `None`.
    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        use super::Rational;

        #[derive(Deserialize)]
        struct Wrapped(#[serde(with = "super")] Rational);

        pub fn serialize<S: Serializer>(value: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match value {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
            Ok(Option::<Wrapped>::deserialize(d)?.map(|w| w.0))
        }
    }
}
