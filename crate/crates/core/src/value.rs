//! Dual-mode arithmetic: exact rationals alongside IEEE doubles.
//!
//! Every probability, distance, and derived statistic in this crate is a
//! [`Value`]. Inputs written as integers or `a/b` fractions stay exact;
//! inputs written as decimals become floats, and floatness is contagious:
//! any operation touching a [`Value::Float`] yields a float. Inequality
//! verdicts downstream use exact comparison in rational mode and a slack
//! tolerance in float mode.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack tolerance for inequality verdicts computed in float mode.
pub const FLOAT_SLACK_TOL: f64 = 1e-9;

/// A number carrying its arithmetic mode.
#[derive(Clone, Debug)]
pub enum Value {
    Exact(BigRational),
    Float(f64),
}

impl Value {
    pub fn zero() -> Self {
        Value::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Value::Exact(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Value::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact fraction `num/den`; panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        Value::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn float(x: f64) -> Self {
        Value::Float(x)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_zero(),
            Value::Float(x) => *x == 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_negative(),
            Value::Float(x) => *x < 0.0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Float(x) => *x,
        }
    }

    pub fn abs(&self) -> Value {
        match self {
            Value::Exact(r) => Value::Exact(r.abs()),
            Value::Float(x) => Value::Float(x.abs()),
        }
    }

    /// Integer power, exact when the base is exact.
    pub fn powi(&self, e: i32) -> Value {
        match self {
            Value::Exact(r) => Value::Exact(r.pow(e)),
            Value::Float(x) => Value::Float(x.powi(e)),
        }
    }

    /// Parses `a/b` fractions and integer literals as exact rationals and
    /// decimal/scientific literals as floats.
    pub fn parse(s: &str) -> Result<Value> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Invalid("empty number".into()));
        }
        if let Some((a, b)) = s.split_once('/') {
            let num = BigInt::from_str(a.trim())
                .map_err(|_| Error::Invalid(format!("bad numerator in {s:?}")))?;
            let den = BigInt::from_str(b.trim())
                .map_err(|_| Error::Invalid(format!("bad denominator in {s:?}")))?;
            if den.is_zero() {
                return Err(Error::Invalid(format!("zero denominator in {s:?}")));
            }
            return Ok(Value::Exact(BigRational::new(num, den)));
        }
        if let Ok(n) = BigInt::from_str(s) {
            return Ok(Value::Exact(BigRational::from_integer(n)));
        }
        s.parse::<f64>()
            .map(Value::Float)
            .map_err(|_| Error::Invalid(format!("unreadable number {s:?}")))
    }

    /// The exact rational payload, if this value is exact.
    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Float(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Float(x) => {
                // Shortest round-trip form, with a decimal point forced so
                // "3.0" stays distinguishable from the exact integer "3".
                let s = format!("{x}");
                if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
                    write!(f, "{s}")
                } else {
                    write!(f, "{s}.0")
                }
            }
        }
    }
}

impl FromStr for Value {
    type Err = Error;
    fn from_str(s: &str) -> Result<Value> {
        Value::parse(s)
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a.partial_cmp(b),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

macro_rules! value_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &Value {
            type Output = Value;
            fn $method(self, rhs: &Value) -> Value {
                match (self, rhs) {
                    (Value::Exact(a), Value::Exact(b)) => Value::Exact(a $op b),
                    _ => Value::Float(self.to_f64() $op rhs.to_f64()),
                }
            }
        }
        impl $trait for Value {
            type Output = Value;
            fn $method(self, rhs: Value) -> Value {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Value> for Value {
            type Output = Value;
            fn $method(self, rhs: &Value) -> Value {
                (&self).$method(rhs)
            }
        }
        impl $trait<Value> for &Value {
            type Output = Value;
            fn $method(self, rhs: Value) -> Value {
                self.$method(&rhs)
            }
        }
    };
}

value_binop!(Add, add, +);
value_binop!(Sub, sub, -);
value_binop!(Mul, mul, *);
value_binop!(Div, div, /);

impl Neg for &Value {
    type Output = Value;
    fn neg(self) -> Value {
        match self {
            Value::Exact(r) => Value::Exact(-r),
            Value::Float(x) => Value::Float(-x),
        }
    }
}

impl Neg for Value {
    type Output = Value;
    fn neg(self) -> Value {
        -&self
    }
}

impl Sum for Value {
    fn sum<I: Iterator<Item = Value>>(iter: I) -> Value {
        iter.fold(Value::zero(), |a, b| a + b)
    }
}

impl<'a> Sum<&'a Value> for Value {
    fn sum<I: Iterator<Item = &'a Value>>(iter: I) -> Value {
        iter.fold(Value::zero(), |a, b| a + b)
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            // Rationals serialize as "a/b" strings, floats as JSON numbers.
            Value::Exact(_) => serializer.serialize_str(&self.to_string()),
            Value::Float(x) if x.is_finite() => serializer.serialize_f64(*x),
            Value::Float(_) => serializer.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Value, D::Error> {
        struct ValueVisitor;
        impl<'de> Visitor<'de> for ValueVisitor {
            type Value = Value;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a number or an \"a/b\" string")
            }
            fn visit_f64<E: de::Error>(self, x: f64) -> std::result::Result<Value, E> {
                Ok(Value::Float(x))
            }
            fn visit_i64<E: de::Error>(self, x: i64) -> std::result::Result<Value, E> {
                Ok(Value::Float(x as f64))
            }
            fn visit_u64<E: de::Error>(self, x: u64) -> std::result::Result<Value, E> {
                Ok(Value::Float(x as f64))
            }
            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<Value, E> {
                Value::parse(s).map_err(E::custom)
            }
        }
        deserializer.deserialize_any(ValueVisitor)
    }
}
