//! The reasoning-cycle state machine and the actor model behind the
//! separation of generation from verification.
//!
//! ```text
//! idle --start--> abduction --hypothesize--> deduction --verify--> induction
//!   induction --validate|ratify--> ratified --deploy--> operation
//!   reset: any phase except operation --> idle
//! ```
//!
//! `operation` is terminal. Claim-level operations that drive the cycle
//! (propose, promote, ratify) live on [`crate::graph::KnowledgeGraph`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EpistemicLayer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Idle,
    Abduction,
    Deduction,
    Induction,
    Ratified,
    Operation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Event {
    Start,
    Hypothesize,
    Verify,
    Validate,
    Ratify,
    Reset,
    Deploy,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::Idle,
        Phase::Abduction,
        Phase::Deduction,
        Phase::Induction,
        Phase::Ratified,
        Phase::Operation,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Phase::Idle => "idle",
            Phase::Abduction => "abduction",
            Phase::Deduction => "deduction",
            Phase::Induction => "induction",
            Phase::Ratified => "ratified",
            Phase::Operation => "operation",
        }
    }

    pub fn is_terminal(self) -> bool {
        self == Phase::Operation
    }

    /// The phase in which a claim at `layer` is being worked on.
    pub fn for_layer(layer: EpistemicLayer) -> Phase {
        match layer {
            EpistemicLayer::L0 => Phase::Abduction,
            EpistemicLayer::L1 => Phase::Deduction,
            EpistemicLayer::L2 => Phase::Induction,
        }
    }
}

impl Event {
    pub const ALL: [Event; 7] = [
        Event::Start,
        Event::Hypothesize,
        Event::Verify,
        Event::Validate,
        Event::Ratify,
        Event::Reset,
        Event::Deploy,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Event::Start => "start",
            Event::Hypothesize => "hypothesize",
            Event::Verify => "verify",
            Event::Validate => "validate",
            Event::Ratify => "ratify",
            Event::Reset => "reset",
            Event::Deploy => "deploy",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Phase::ALL
            .into_iter()
            .find(|p| p.token() == s)
            .ok_or_else(|| Error::Config(format!("unknown phase {s:?}")))
    }
}

impl FromStr for Event {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Event::ALL
            .into_iter()
            .find(|e| e.token() == s)
            .ok_or_else(|| Error::Config(format!("unknown event {s:?}")))
    }
}

/// The transition table. Undefined pairs are rejected.
pub fn transition(current: Phase, event: Event) -> Result<Phase> {
    use Event::*;
    use Phase::*;
    let next = match (current, event) {
        (Operation, _) => None,
        (_, Reset) => Some(Idle),
        (Idle, Start) => Some(Abduction),
        (Abduction, Hypothesize) => Some(Deduction),
        (Deduction, Verify) => Some(Induction),
        (Induction, Validate | Ratify) => Some(Ratified),
        (Ratified, Deploy) => Some(Operation),
        _ => None,
    };
    next.ok_or_else(|| Error::IllegalTransition {
        phase: current.token().into(),
        event: event.token().into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorKind {
    Generator,
    Verifier,
    Human,
}

impl FromStr for ActorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generator" => Ok(ActorKind::Generator),
            "verifier" => Ok(ActorKind::Verifier),
            "human" => Ok(ActorKind::Human),
            _ => Err(Error::Config(format!("unknown actor kind {s:?}"))),
        }
    }
}

/// An actor identified by an opaque token. Two actors are the same party
/// iff their ids match, whatever kind they claim.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActorId {
    pub id: String,
    pub kind: ActorKind,
}

impl ActorId {
    pub fn new(id: impl Into<String>, kind: ActorKind) -> Result<Self> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(Error::Config("actor id must be non-empty".into()));
        }
        Ok(ActorId { id, kind })
    }

    pub fn same_party(&self, other: &ActorId) -> bool {
        self.id == other.id
    }
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromotionRequest {
    pub claim: String,
    pub target: EpistemicLayer,
    pub evidence: Vec<String>,
    pub actor: ActorId,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_examples() {
        assert_eq!(
            transition(Phase::Idle, Event::Start).unwrap(),
            Phase::Abduction
        );
        assert_eq!(
            transition(Phase::Deduction, Event::Reset).unwrap(),
            Phase::Idle
        );
        assert_eq!(
            transition(Phase::Operation, Event::Reset).unwrap_err(),
            Error::IllegalTransition {
                phase: "operation".into(),
                event: "reset".into()
            }
        );
        assert!(transition(Phase::Idle, Event::Verify).is_err());
    }

    #[test]
    fn happy_path_reaches_operation() {
        let mut p = Phase::Idle;
        for e in [
            Event::Start,
            Event::Hypothesize,
            Event::Verify,
            Event::Validate,
            Event::Deploy,
        ] {
            p = transition(p, e).unwrap();
        }
        assert_eq!(p, Phase::Operation);
    }

    #[test]
    fn every_non_terminal_phase_resets_and_operation_is_terminal() {
        for p in Phase::ALL {
            if p.is_terminal() {
                assert!(Event::ALL.iter().all(|e| transition(p, *e).is_err()));
            } else {
                assert_eq!(transition(p, Event::Reset).unwrap(), Phase::Idle);
            }
        }
    }

    #[test]
    fn tokens_round_trip() {
        for p in Phase::ALL {
            assert_eq!(p.token().parse::<Phase>().unwrap(), p);
            assert_eq!(
                serde_json::to_string(&p).unwrap(),
                format!("\"{}\"", p.token())
            );
        }
        for e in Event::ALL {
            assert_eq!(e.token().parse::<Event>().unwrap(), e);
        }
    }
}
