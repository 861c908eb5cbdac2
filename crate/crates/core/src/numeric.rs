//! Exact arithmetic: arbitrary-precision rationals and comparisons against
//! quadratic-irrational thresholds.
//!
//! Every decision in the crate goes through this module. Floating point is
//! only used to render values for humans.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact fraction, always in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Builds `num / den`. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or `"p"`. Rejects `q <= 0`, decimals and whitespace inside.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let err = |reason| Error::ParseRational {
        input: s.to_string(),
        reason,
    };
    let s_trim = s.trim();
    let (num, den) = match s_trim.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s_trim, None),
    };
    let parse_int = |t: &str| -> Result<BigInt> {
        let digits = t.strip_prefix('-').or_else(|| t.strip_prefix('+')).unwrap_or(t);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("not an integer"));
        }
        t.parse::<BigInt>().map_err(|_| err("not an integer"))
    };
    let num = parse_int(num)?;
    let den = match den {
        Some(d) => {
            let d = parse_int(d)?;
            if !d.is_positive() {
                return Err(err("denominator must be positive"));
            }
            d
        }
        None => BigInt::one(),
    };
    Ok(Rational::new(num, den))
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter storing a [`Rational`] as its canonical string.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format_rational(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Rational>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter()
                .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}

/// The unique positive root of `a x^2 + b x + c`.
///
/// Construction normalizes `a > 0` and requires `c / a < 0`, which is exactly
/// the condition for one negative and one positive real root.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SurdThreshold {
    a: BigInt,
    b: BigInt,
    c: BigInt,
}

impl SurdThreshold {
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>, c: impl Into<BigInt>) -> Result<Self> {
        let (mut a, mut b, mut c): (BigInt, BigInt, BigInt) = (a.into(), b.into(), c.into());
        let invalid = |a: &BigInt, b: &BigInt, c: &BigInt, reason| Error::InvalidThreshold {
            a: a.to_string(),
            b: b.to_string(),
            c: c.to_string(),
            reason,
        };
        if a.is_zero() {
            return Err(invalid(&a, &b, &c, "leading coefficient is zero"));
        }
        if a.is_negative() {
            a = -a;
            b = -b;
            c = -c;
        }
        if !c.is_negative() {
            // c >= 0 with a > 0 gives zero or two roots of equal sign.
            return Err(invalid(&a, &b, &c, "quadratic has no unique positive root"));
        }
        Ok(SurdThreshold { a, b, c })
    }

    /// phi = (1 + sqrt 5) / 2, root of x^2 - x - 1.
    pub fn golden_ratio() -> Self {
        SurdThreshold::new(1, -1, -1).expect("valid")
    }

    pub fn coefficients(&self) -> (&BigInt, &BigInt, &BigInt) {
        (&self.a, &self.b, &self.c)
    }

    /// Sign of `a x^2 + b x + c` at a rational point.
    fn eval_sign(&self, x: &Rational) -> Ordering {
        let a = Rational::from_integer(self.a.clone());
        let b = Rational::from_integer(self.b.clone());
        let c = Rational::from_integer(self.c.clone());
        let v = a * x * x + b * x + c;
        v.cmp(&Rational::zero())
    }

    /// Compares `x` with the root. Exact.
    pub fn cmp_rational(&self, x: &Rational) -> Ordering {
        if !x.is_positive() {
            return Ordering::Less;
        }
        self.eval_sign(x)
    }

    /// Display-only approximation.
    pub fn root_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap();
        let b = self.b.to_f64().unwrap();
        let c = self.c.to_f64().unwrap();
        (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
    }
}

impl fmt::Display for SurdThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "root({},{},{})", self.a, self.b, self.c)
    }
}

/// Swap threshold: phi for two agents, otherwise the positive root of
/// `(2n-2) x^2 + (n-3) x - 2`.
pub fn lambda_threshold(n: usize) -> Result<SurdThreshold> {
    match n {
        0 | 1 => Err(Error::Precondition(format!(
            "swap threshold needs at least two agents, got {n}"
        ))),
        2 => Ok(SurdThreshold::golden_ratio()),
        _ => {
            let n = BigInt::from(n);
            SurdThreshold::new(BigInt::from(2) * &n - 2, &n - 3, -2)
        }
    }
}

/// Sign of `x - r * y` where `r` is the threshold's root. Requires `y >= 0`.
pub fn surd_compare(x: &Rational, y: &Rational, t: &SurdThreshold) -> Ordering {
    debug_assert!(!y.is_negative(), "surd_compare needs y >= 0");
    if y.is_zero() {
        return x.cmp(&Rational::zero());
    }
    if !x.is_positive() {
        return Ordering::Less;
    }
    // For x, y > 0: a x^2 + b x y + c y^2 = y^2 q(x / y), and q is negative
    // exactly on (0, r).
    let a = Rational::from_integer(t.a.clone());
    let b = Rational::from_integer(t.b.clone());
    let c = Rational::from_integer(t.c.clone());
    let s = a * x * x + b * x * y + c * y * y;
    s.cmp(&Rational::zero())
}

/// Threshold or factor value: an exact rational, `offset + scale * root`, or
/// infinity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactorBound {
    Exact(Rational),
    SurdScaled {
        threshold: SurdThreshold,
        offset: Rational,
        scale: Rational,
    },
    Infinite,
}

impl FactorBound {
    pub fn one() -> Self {
        FactorBound::Exact(Rational::one())
    }

    pub fn exact(r: Rational) -> Self {
        FactorBound::Exact(r)
    }

    pub fn surd(threshold: SurdThreshold, offset: Rational, scale: Rational) -> Result<Self> {
        if !scale.is_positive() {
            return Err(Error::Precondition("surd scale must be positive".into()));
        }
        Ok(FactorBound::SurdScaled {
            threshold,
            offset,
            scale,
        })
    }

    /// `1 + lambda(n)`, the swap algorithm's guarantee.
    pub fn one_plus_lambda(n: usize) -> Result<Self> {
        Self::surd(lambda_threshold(n)?, Rational::one(), Rational::one())
    }

    /// `phi - 1`, the goods preprocessing algorithm's guarantee.
    pub fn phi_minus_one() -> Self {
        Self::surd(SurdThreshold::golden_ratio(), -Rational::one(), Rational::one()).expect("valid")
    }

    /// `num / den` with the zero-benchmark policy: `0/0` is 1, `x/0` is infinite.
    pub fn ratio(num: &Rational, den: &Rational) -> Self {
        if den.is_zero() {
            if num.is_zero() {
                FactorBound::one()
            } else {
                FactorBound::Infinite
            }
        } else {
            FactorBound::Exact(num / den)
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            FactorBound::Exact(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, FactorBound::Infinite)
    }

    /// Exact comparison of `x` against this bound.
    pub fn cmp_rational(&self, x: &Rational) -> Ordering {
        match self {
            FactorBound::Exact(r) => x.cmp(r),
            FactorBound::Infinite => Ordering::Less,
            FactorBound::SurdScaled {
                threshold,
                offset,
                scale,
            } => surd_compare(&(x - offset), scale, threshold),
        }
    }

    /// Approximation for display only.
    pub fn to_f64(&self) -> f64 {
        match self {
            FactorBound::Exact(r) => to_f64(r),
            FactorBound::Infinite => f64::INFINITY,
            FactorBound::SurdScaled {
                threshold,
                offset,
                scale,
            } => to_f64(offset) + to_f64(scale) * threshold.root_f64(),
        }
    }

    /// Decimal rendering rounded half-up to `digits` places, decided exactly.
    pub fn to_decimal(&self, digits: u32) -> String {
        if self.is_infinite() {
            return "inf".to_string();
        }
        let pow = BigInt::from(10u32).pow(digits);
        let pow_r = Rational::from_integer(pow.clone());
        let half = rat(1, 2);
        let k = match self {
            FactorBound::Exact(r) => (r * &pow_r + &half).floor().to_integer(),
            _ => {
                let approx = (self.to_f64() * 10f64.powi(digits as i32)).round();
                let mut k = BigInt::from(approx as i128);
                // find k with (k - 1/2) / 10^d <= v < (k + 1/2) / 10^d
                loop {
                    let lo = (Rational::from_integer(k.clone()) - &half) / &pow_r;
                    if self.cmp_rational(&lo) == Ordering::Greater {
                        k -= 1;
                        continue;
                    }
                    let hi = (Rational::from_integer(k.clone()) + &half) / &pow_r;
                    if self.cmp_rational(&hi) != Ordering::Greater {
                        k += 1;
                        continue;
                    }
                    break;
                }
                k
            }
        };
        let neg = k.is_negative();
        let (whole, frac) = k.abs().div_rem(&pow);
        let frac = frac.to_string();
        let pad = "0".repeat(digits as usize - frac.len());
        let sign = if neg { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{whole}")
        } else {
            format!("{sign}{whole}.{pad}{frac}")
        }
    }
}

impl fmt::Display for FactorBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorBound::Exact(r) => f.write_str(&format_rational(r)),
            FactorBound::Infinite => f.write_str("inf"),
            FactorBound::SurdScaled {
                threshold,
                offset,
                scale,
            } => write!(
                f,
                "{}+{}*{}",
                format_rational(offset),
                format_rational(scale),
                threshold
            ),
        }
    }
}

impl PartialOrd for FactorBound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use FactorBound::*;
        match (self, other) {
            (Infinite, Infinite) => Some(Ordering::Equal),
            (Infinite, _) => Some(Ordering::Greater),
            (_, Infinite) => Some(Ordering::Less),
            (Exact(x), b) => Some(b.cmp_rational(x)),
            (a, Exact(y)) => Some(a.cmp_rational(y).reverse()),
            (a, b) if a == b => Some(Ordering::Equal),
            _ => None,
        }
    }
}

impl serde::Serialize for FactorBound {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
