//! Exact rational helpers on top of `num`'s arbitrary-precision `BigRational`.

use num::bigint::Sign;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `2^k` for possibly negative `k`.
pub fn pow2(k: i32) -> Rational {
    let base = BigInt::from(2u8).pow(k.unsigned_abs());
    if k >= 0 {
        Rational::from_integer(base)
    } else {
        Rational::new(BigInt::one(), base)
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact value of a finite float (dyadic rational).
pub fn from_f64_exact(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Parses `12`, `-4.6`, `1.5e-3`, `33/20` into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n)?;
        let d = parse_decimal(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    parse_decimal(s)
}

/// Decimal literal with optional sign and exponent, parsed exactly.
pub fn parse_decimal(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return None;
    }
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let mut value = if scale >= 0 {
        Rational::from_integer(numer * ten.pow(scale as u32))
    } else {
        Rational::new(numer, ten.pow(scale.unsigned_abs()))
    };
    if neg {
        value = -value;
    }
    Some(value)
}

/// `n` or `n/d`, always in lowest terms.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// via continued-fraction convergents (and the final semiconvergent).
pub fn approximate(x: f64, max_den: &BigInt) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let exact = Rational::from_float(x)?;
    if exact.denom() <= max_den {
        return Some(exact);
    }
    // Convergents h/k of the exact dyadic value.
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rem = exact.clone();
    loop {
        let a = rem.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if &k2 > max_den {
            // Largest admissible semiconvergent.
            let t = (max_den - &k0) / &k1;
            let hs = &t * &h1 + &h0;
            let ks = &t * &k1 + &k0;
            let conv = Rational::new(h1.clone(), k1.clone());
            if ks.sign() == Sign::Plus {
                let semi = Rational::new(hs, ks);
                if (&semi - &exact).abs() < (&conv - &exact).abs() {
                    return Some(semi);
                }
            }
            return Some(conv);
        }
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        let frac = &rem - Rational::from_integer(a);
        if frac.is_zero() {
            return Some(Rational::new(h1, k1));
        }
        rem = frac.recip();
    }
}

/// Serde adapters storing rationals as `"n/d"` strings.
pub mod serde_rational {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational `{s}`")))
    }

    pub mod vec {
        use super::super::{format_rational, parse_rational, Rational};
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(format_rational).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            Vec::<String>::deserialize(d)?
                .into_iter()
                .map(|s| {
                    parse_rational(&s)
                        .ok_or_else(|| serde::de::Error::custom(format!("bad rational `{s}`")))
                })
                .collect()
        }
    }

    pub mod matrix {
        use super::super::{format_rational, parse_rational, Rational};
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(m: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
            m.iter()
                .map(|row| row.iter().map(format_rational).collect::<Vec<_>>())
                .collect::<Vec<_>>()
                .serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Vec<Vec<Rational>>, D::Error> {
            Vec::<Vec<String>>::deserialize(d)?
                .into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|s| {
                            parse_rational(&s).ok_or_else(|| {
                                serde::de::Error::custom(format!("bad rational `{s}`"))
                            })
                        })
                        .collect()
                })
                .collect()
        }
    }

    pub mod map {
        use super::super::{format_rational, parse_rational, Rational};
        use serde::{Deserialize, Deserializer, Serialize, Serializer};
        use std::collections::BTreeMap;

        pub fn serialize<S: Serializer>(
            m: &BTreeMap<String, Rational>,
            s: S,
        ) -> Result<S::Ok, S::Error> {
            m.iter()
                .map(|(k, v)| (k.clone(), format_rational(v)))
                .collect::<BTreeMap<_, _>>()
                .serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<BTreeMap<String, Rational>, D::Error> {
            BTreeMap::<String, String>::deserialize(d)?
                .into_iter()
                .map(|(k, s)| {
                    parse_rational(&s)
                        .map(|r| (k, r))
                        .ok_or_else(|| serde::de::Error::custom(format!("bad rational `{s}`")))
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!(parse_decimal("-4.6"), Some(rat(-23, 5)));
        assert_eq!(parse_decimal("0.001"), Some(rat(1, 1000)));
        assert_eq!(parse_decimal("1.5e-3"), Some(rat(3, 2000)));
        assert_eq!(parse_decimal("12"), Some(int(12)));
        assert_eq!(parse_rational("33/20"), Some(rat(33, 20)));
        assert_eq!(parse_decimal("abc"), None);
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn continued_fraction_rounding() {
        let bound = BigInt::from(1_000_000);
        assert_eq!(approximate(0.5, &bound), Some(rat(1, 2)));
        assert_eq!(approximate(0.3333333333, &bound), Some(rat(1, 3)));
        assert_eq!(approximate(-2.75, &bound), Some(rat(-11, 4)));
        assert_eq!(approximate(f64::NAN, &bound), None);
        let pi = approximate(std::f64::consts::PI, &BigInt::from(1000)).unwrap();
        assert_eq!(pi, rat(355, 113));
    }

    #[test]
    fn formatting() {
        assert_eq!(format_rational(&rat(-33, 20)), "-33/20");
        assert_eq!(format_rational(&int(7)), "7");
        assert_eq!(pow2(-3), rat(1, 8));
    }
}
