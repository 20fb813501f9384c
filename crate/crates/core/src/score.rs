use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// A reliability value in the closed unit interval.
///
/// NaN, infinities and anything outside `[0, 1]` are rejected at
/// construction, so every score in the system is finite and bounded.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ReliabilityScore(f64);

impl ReliabilityScore {
    pub const ZERO: ReliabilityScore = ReliabilityScore(0.0);
    pub const ONE: ReliabilityScore = ReliabilityScore(1.0);

    pub fn new(value: f64) -> Result<Self> {
        make_score(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Clamps an arithmetic result back into `[0, 1]`. Only for values
    /// produced by internal arithmetic on valid scores; NaN still fails.
    pub(crate) fn saturating(value: f64) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::range("arithmetic result", value));
        }
        Ok(ReliabilityScore(value.clamp(0.0, 1.0)))
    }

    pub fn min(self, other: Self) -> Self {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }
}

/// Validates a raw real as a reliability score.
pub fn make_score(value: f64) -> Result<ReliabilityScore> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        // -0.0 is inside the range; normalize so equality stays bitwise.
        Ok(ReliabilityScore(if value == 0.0 { 0.0 } else { value }))
    } else {
        Err(Error::range("reliability score", value))
    }
}

impl TryFrom<f64> for ReliabilityScore {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        make_score(value)
    }
}

impl From<ReliabilityScore> for f64 {
    fn from(s: ReliabilityScore) -> f64 {
        s.0
    }
}

impl fmt::Display for ReliabilityScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "{:.*}", p, self.0),
            None => write!(f, "{}", self.0),
        }
    }
}

impl Serialize for ReliabilityScore {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for ReliabilityScore {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = LenientReal::deserialize(d)?;
        make_score(raw.0).map_err(de::Error::custom)
    }
}

/// A real read from JSON that also accepts the strings `"NaN"`, `"inf"`,
/// `"-inf"` and decimal strings, so that non-finite values written by other
/// tools reach validation instead of failing in the tokenizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LenientReal(pub f64);

impl<'de> Deserialize<'de> for LenientReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = LenientReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or numeric string")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<LenientReal, E> {
                Ok(LenientReal(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<LenientReal, E> {
                Ok(LenientReal(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<LenientReal, E> {
                Ok(LenientReal(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<LenientReal, E> {
                v.trim()
                    .parse::<f64>()
                    .map(LenientReal)
                    .map_err(|_| E::custom(format!("not a number: {v:?}")))
            }
        }
        d.deserialize_any(V)
    }
}

impl Serialize for LenientReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.0.to_string())
        }
    }
}
