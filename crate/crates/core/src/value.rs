//! Values, stores and exact rationals.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

/// Exact rational probability weight.
pub type Rat = BigRational;

/// Builds `num/den` as a [`Rat`]. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// `1 / 2^exp`.
pub fn pow2_inv(exp: u32) -> Rat {
    Rat::new(BigInt::one(), BigInt::one() << exp)
}

/// Parses `num/den` or an integer literal.
pub fn parse_rat(text: &str) -> Result<Rat, String> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| format!("malformed rational `{text}`"))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| format!("malformed rational `{text}`"))?;
    if den.is_zero() {
        return Err(format!("malformed rational `{text}`: zero denominator"));
    }
    Ok(Rat::new(num, den))
}

/// Formats a rational as `num/den`, or as a bare integer when `den = 1`.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// True iff `0 <= r <= 1`.
pub fn is_probability(r: &Rat) -> bool {
    !r.is_negative() && *r <= Rat::one()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Int,
    Bool,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Bool => f.write_str("bool"),
        }
    }
}

/// A program value: an unbounded integer or a boolean.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
}

impl Value {
    pub fn int(n: i64) -> Self {
        Value::Int(BigInt::from(n))
    }

    pub fn ty(&self) -> Type {
        match self {
            Value::Bool(_) => Type::Bool,
            Value::Int(_) => Type::Int,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Int(_) => None,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(n) => Some(n),
            Value::Bool(_) => None,
        }
    }

    /// Parses `true`, `false`, `T`, `F` or a signed integer literal.
    pub fn parse(text: &str) -> Result<Self, String> {
        match text.trim() {
            "true" | "T" => Ok(Value::Bool(true)),
            "false" | "F" => Ok(Value::Bool(false)),
            other => other
                .parse::<BigInt>()
                .map(Value::Int)
                .map_err(|_| format!("malformed value `{other}`")),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::int(n)
    }
}

/// Partial map from variable names to values.
///
/// Ordering is lexicographic on `(name, value)` pairs, which is the order
/// every rendered distribution uses.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Store(BTreeMap<String, Value>);

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.get(var)
    }

    pub fn set(&mut self, var: impl Into<String>, value: Value) {
        self.0.insert(var.into(), value);
    }

    pub fn with(mut self, var: impl Into<String>, value: impl Into<Value>) -> Self {
        self.set(var, value.into());
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Restriction of the store to the variables accepted by `keep`.
    pub fn restrict<F: Fn(&str) -> bool>(&self, keep: F) -> Store {
        Store(
            self.0
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }

    /// Parses `{ v=value, ... }` (braces optional).
    pub fn parse(text: &str) -> Result<Store, Error> {
        let inner = text.trim();
        let inner = inner
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .unwrap_or(inner);
        let mut store = Store::new();
        for item in inner.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (var, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("expected `var=value`, found `{item}`")))?;
            let var = var.trim();
            if store.get(var).is_some() {
                return Err(Error::Format(format!("variable `{var}` bound twice")));
            }
            store.set(var, Value::parse(value).map_err(Error::Format)?);
        }
        Ok(store)
    }
}

impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, " {k}={v}")?;
        }
        if self.0.is_empty() {
            f.write_str("}")
        } else {
            f.write_str(" }")
        }
    }
}

impl serde::Serialize for Value {
    /// Booleans as JSON booleans, integers as numbers when they fit in an
    /// `i64` and as decimal strings otherwise.
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use num_traits::ToPrimitive;
        match self {
            Value::Bool(b) => s.serialize_bool(*b),
            Value::Int(n) => match n.to_i64() {
                Some(i) => s.serialize_i64(i),
                None => s.serialize_str(&n.to_string()),
            },
        }
    }
}

impl serde::Serialize for Store {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.0.iter())
    }
}

/// Serializes a rational as its `n/d` rendering.
pub fn serialize_rat<S: serde::Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_rat(r))
}

impl FromIterator<(String, Value)> for Store {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Store(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_parse_canonically() {
        assert_eq!(parse_rat("2/4").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("3").unwrap(), rat(3, 1));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x/2").is_err());
        assert_eq!(fmt_rat(&rat(6, 4)), "3/2");
        assert_eq!(fmt_rat(&rat(4, 2)), "2");
    }

    #[test]
    fn store_display_and_parse_agree() {
        let s = Store::new().with("q", 3).with("b", true);
        assert_eq!(s.to_string(), "{ b=true, q=3 }");
        assert_eq!(Store::parse(&s.to_string()).unwrap(), s);
        assert_eq!(Store::new().to_string(), "{}");
        assert!(Store::parse("{ x=1, x=2 }").is_err());
    }

    #[test]
    fn pow2() {
        assert_eq!(pow2_inv(3), rat(1, 8));
        assert_eq!(pow2_inv(0), rat(1, 1));
    }
}
