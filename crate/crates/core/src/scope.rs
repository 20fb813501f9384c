//! Scope descriptors as a bounded lattice of `dimension=value` constraints.
//!
//! Grammar (bit-exact, no whitespace):
//!
//! ```text
//! scope      := "*" | "!" | constraint ("," constraint)*
//! constraint := token "=" token
//! token      := [a-z0-9_.-]+
//! ```
//!
//! `*` is TOP (no constraints), `!` is BOTTOM (contradictory). A scope with
//! more constraints is lower in the order; `meet` unions constraints and
//! `join` keeps the constraints both sides agree on.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::CongruenceLevel;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scope {
    Bottom,
    /// Canonically sorted; the empty map is TOP.
    Constraints(BTreeMap<String, String>),
}

impl Scope {
    pub const TOP: Scope = Scope::Constraints(BTreeMap::new());

    pub fn top() -> Scope {
        Scope::TOP
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Scope::Constraints(c) if c.is_empty())
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Scope::Bottom)
    }

    /// Builds a scope from pairs, validating tokens and uniqueness.
    pub fn from_pairs<K: Into<String>, V: Into<String>>(
        pairs: impl IntoIterator<Item = (K, V)>,
    ) -> Result<Scope> {
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            let (k, v) = (k.into(), v.into());
            for t in [&k, &v] {
                if t.is_empty() || !t.bytes().all(is_token_byte) {
                    return Err(Error::Parse {
                        offset: 0,
                        reason: format!("invalid token {t:?}"),
                    });
                }
            }
            if map.contains_key(&k) {
                return Err(Error::Parse {
                    offset: 0,
                    reason: format!("duplicate dimension {k:?}"),
                });
            }
            map.insert(k, v);
        }
        Ok(Scope::Constraints(map))
    }

    pub fn constraints(&self) -> Option<&BTreeMap<String, String>> {
        match self {
            Scope::Bottom => None,
            Scope::Constraints(c) => Some(c),
        }
    }

    /// Lattice order: `self ≤ other` iff `self` is at least as specific.
    pub fn le(&self, other: &Scope) -> bool {
        match (self, other) {
            (Scope::Bottom, _) => true,
            (_, Scope::Bottom) => false,
            (Scope::Constraints(a), Scope::Constraints(b)) => {
                b.iter().all(|(k, v)| a.get(k) == Some(v))
            }
        }
    }
}

fn is_token_byte(b: u8) -> bool {
    matches!(b, b'a'..=b'z' | b'0'..=b'9' | b'_' | b'.' | b'-')
}

/// Parses the textual scope syntax.
pub fn parse_scope(text: &str) -> Result<Scope> {
    match text {
        "*" => return Ok(Scope::TOP),
        "!" => return Ok(Scope::Bottom),
        "" => {
            return Err(Error::Parse {
                offset: 0,
                reason: "empty scope; use \"*\" for the universal scope".into(),
            })
        }
        _ => {}
    }
    let bytes = text.as_bytes();
    let mut map = BTreeMap::new();
    let mut pos = 0;
    loop {
        let dim_start = pos;
        let dim = take_token(bytes, &mut pos, "dimension")?;
        expect(bytes, &mut pos, b'=')?;
        let value = take_token(bytes, &mut pos, "value")?;
        if map.insert(dim.to_string(), value.to_string()).is_some() {
            return Err(Error::Parse {
                offset: dim_start,
                reason: format!("duplicate dimension {dim:?}"),
            });
        }
        if pos == bytes.len() {
            return Ok(Scope::Constraints(map));
        }
        expect(bytes, &mut pos, b',')?;
    }
}

fn take_token<'a>(bytes: &'a [u8], pos: &mut usize, what: &str) -> Result<&'a str> {
    let start = *pos;
    while *pos < bytes.len() && is_token_byte(bytes[*pos]) {
        *pos += 1;
    }
    if *pos == start {
        let reason = match bytes.get(start) {
            None => format!("expected {what}, found end of input"),
            Some(b) => format!("expected {what}, found byte 0x{b:02x}"),
        };
        return Err(Error::Parse {
            offset: start,
            reason,
        });
    }
    // Token bytes are ASCII.
    Ok(std::str::from_utf8(&bytes[start..*pos]).expect("ascii token"))
}

fn expect(bytes: &[u8], pos: &mut usize, want: u8) -> Result<()> {
    match bytes.get(*pos) {
        Some(b) if *b == want => {
            *pos += 1;
            Ok(())
        }
        found => Err(Error::Parse {
            offset: *pos,
            reason: match found {
                None => format!("expected '{}', found end of input", want as char),
                Some(b) => format!("expected '{}', found byte 0x{b:02x}", want as char),
            },
        }),
    }
}

/// Canonical text form; dimensions sorted lexicographically.
pub fn serialize_scope(s: &Scope) -> String {
    match s {
        Scope::Bottom => "!".into(),
        Scope::Constraints(c) if c.is_empty() => "*".into(),
        Scope::Constraints(c) => c
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(","),
    }
}

/// Greatest lower bound: union of constraints, BOTTOM on any conflict.
pub fn meet(a: &Scope, b: &Scope) -> Scope {
    let (Scope::Constraints(a), Scope::Constraints(b)) = (a, b) else {
        return Scope::Bottom;
    };
    let mut out = a.clone();
    for (k, v) in b {
        match out.get(k) {
            Some(existing) if existing != v => return Scope::Bottom,
            Some(_) => {}
            None => {
                out.insert(k.clone(), v.clone());
            }
        }
    }
    Scope::Constraints(out)
}

/// Least upper bound: the constraints both sides agree on.
pub fn join(a: &Scope, b: &Scope) -> Scope {
    match (a, b) {
        (Scope::Bottom, x) | (x, Scope::Bottom) => x.clone(),
        (Scope::Constraints(a), Scope::Constraints(b)) => Scope::Constraints(
            a.iter()
                .filter(|(k, v)| b.get(*k) == Some(*v))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        ),
    }
}

/// Derives the congruence level for transferring support from
/// `evidence_scope` into `claim_scope`.
///
/// | relation                                   | level |
/// |--------------------------------------------|-------|
/// | either side BOTTOM                         | none  |
/// | equal                                      | CL3   |
/// | no conflict, comparable (incl. TOP)        | CL2   |
/// | no conflict, incomparable                  | CL1   |
/// | conflict with at least one agreement       | CL1   |
/// | conflict with no agreement                 | none  |
pub fn match_level(claim_scope: &Scope, evidence_scope: &Scope) -> CongruenceLevel {
    let (Scope::Constraints(a), Scope::Constraints(b)) = (claim_scope, evidence_scope) else {
        return CongruenceLevel::None;
    };
    if a == b {
        return CongruenceLevel::Cl3;
    }
    let mut conflicts = 0usize;
    let mut agreements = 0usize;
    for (k, v) in a {
        match b.get(k) {
            Some(w) if w == v => agreements += 1,
            Some(_) => conflicts += 1,
            None => {}
        }
    }
    if conflicts == 0 {
        if agreements == a.len() || agreements == b.len() {
            CongruenceLevel::Cl2
        } else {
            CongruenceLevel::Cl1
        }
    } else if agreements > 0 {
        CongruenceLevel::Cl1
    } else {
        CongruenceLevel::None
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_scope(self))
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_scope(s)
    }
}

impl Serialize for Scope {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&serialize_scope(self))
    }
}

impl<'de> Deserialize<'de> for Scope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_scope(&text).map_err(serde::de::Error::custom)
    }
}
