//! The knowledge graph: claims, evidence, dependency and contradiction
//! edges, and cached effective reliability.
//!
//! Dependencies always point from a conclusion to the premises it rests on
//! and never form a cycle. Every mutation marks the touched claims dirty;
//! [`KnowledgeGraph::propagate`] brings cached scores up to date.

mod inspect;
mod lifecycle;
mod persist;
mod propagate;
mod reliability;
mod shared;
mod sweep;
mod two_tier;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsm::{ActorId, Phase};
use crate::gamma::OperatorKind;
use crate::model::{Config, EpistemicLayer, EvidenceRole, FormalityLevel, VerificationMethod};
use crate::scope::Scope;
use crate::score::ReliabilityScore;

pub use inspect::{InspectNode, InspectReport, NodeKind};
pub use propagate::PropagationMode;
pub use reliability::{
    adjust_evidence, decay_factor, is_llm_generated, AdjustedEvidence, Bound, Breakdown,
    DependencyTerm, EvidenceTerm,
};
pub use shared::SharedGraph;
pub use two_tier::{
    owa_conservative, probabilistic_sum, two_tier_aggregate, GateEvidence, RoleGroups,
};

pub type Timestamp = DateTime<Utc>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub id: String,
    pub raw_score: ReliabilityScore,
    pub formality: FormalityLevel,
    pub scope: Scope,
    pub method: VerificationMethod,
    pub role: EvidenceRole,
    pub collected_at: Timestamp,
    pub valid_until: Timestamp,
    pub provenance: String,
}

impl Evidence {
    /// Builds an evidence item whose validity window defaults to the
    /// formality-dependent duration from `cfg`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        raw_score: ReliabilityScore,
        formality: FormalityLevel,
        scope: Scope,
        method: VerificationMethod,
        role: EvidenceRole,
        collected_at: Timestamp,
        cfg: &Config,
    ) -> Evidence {
        Evidence {
            id: id.into(),
            raw_score,
            formality,
            scope,
            method,
            role,
            collected_at,
            valid_until: collected_at + cfg.validity(formality),
            provenance: String::new(),
        }
    }

    pub fn with_valid_until(mut self, until: Timestamp) -> Self {
        self.valid_until = until;
        self
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn is_expired(&self, now: Timestamp) -> bool {
        now > self.valid_until
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimStatus {
    Active,
    Stale,
    Discarded,
    Contradicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InferenceMode {
    Abduction,
    Deduction,
    Induction,
}

impl InferenceMode {
    /// The layer an inference step in this mode produces.
    pub fn layer(self) -> EpistemicLayer {
        match self {
            InferenceMode::Abduction => EpistemicLayer::L0,
            InferenceMode::Deduction => EpistemicLayer::L1,
            InferenceMode::Induction => EpistemicLayer::L2,
        }
    }
}

/// One entry of a claim's promotion history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryStep {
    pub mode: InferenceMode,
    pub layer: EpistemicLayer,
    pub actor: String,
    pub evidence: Vec<String>,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimNode {
    pub id: String,
    pub statement: String,
    pub layer: EpistemicLayer,
    pub formality: FormalityLevel,
    pub scope: Scope,
    pub proposer: ActorId,
    pub evidence_refs: BTreeSet<String>,
    pub dependency_refs: BTreeSet<String>,
    pub contradiction_refs: BTreeSet<String>,
    pub status: ClaimStatus,
    pub cached_r_eff: ReliabilityScore,
    pub phase: Phase,
    pub history: Vec<HistoryStep>,
}

impl ClaimNode {
    /// A bare claim at L0, not yet attached to a graph.
    pub fn new(
        id: impl Into<String>,
        statement: impl Into<String>,
        formality: FormalityLevel,
        scope: Scope,
        proposer: ActorId,
    ) -> ClaimNode {
        ClaimNode {
            id: id.into(),
            statement: statement.into(),
            layer: EpistemicLayer::L0,
            formality,
            scope,
            proposer,
            evidence_refs: BTreeSet::new(),
            dependency_refs: BTreeSet::new(),
            contradiction_refs: BTreeSet::new(),
            status: ClaimStatus::Active,
            cached_r_eff: ReliabilityScore::ZERO,
            phase: Phase::Abduction,
            history: Vec::new(),
        }
    }

    /// Places the claim directly at `layer`, for fixtures and imports that
    /// bypass the promotion protocol.
    pub fn at_layer(mut self, layer: EpistemicLayer) -> Self {
        self.layer = layer;
        self.phase = Phase::for_layer(layer);
        self
    }

    /// A claim in a BOTTOM scope can neither receive nor transfer support.
    pub fn is_unmatchable(&self) -> bool {
        self.scope.is_bottom()
    }
}

#[derive(Debug, Clone)]
struct LastRun {
    now: Timestamp,
    cfg: Config,
    aggregator: OperatorKind,
}

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    claims: BTreeMap<String, ClaimNode>,
    evidence: BTreeMap<String, Evidence>,
    /// premise -> conclusions resting on it
    dependents: BTreeMap<String, BTreeSet<String>>,
    /// evidence -> claims citing it
    evidence_users: BTreeMap<String, BTreeSet<String>>,
    dirty: BTreeSet<String>,
    last_run: Option<LastRun>,
    aggregator: OperatorKind,
    next_id: u64,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.claims == other.claims && self.evidence == other.evidence
    }
}

impl Default for KnowledgeGraph {
    fn default() -> Self {
        KnowledgeGraph::new()
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        KnowledgeGraph {
            claims: BTreeMap::new(),
            evidence: BTreeMap::new(),
            dependents: BTreeMap::new(),
            evidence_users: BTreeMap::new(),
            dirty: BTreeSet::new(),
            last_run: None,
            aggregator: OperatorKind::GodelMin,
            next_id: 1,
        }
    }

    /// Replaces the outer aggregation of the reliability formula. Anything
    /// other than `GodelMin` exists to demonstrate invariant violations.
    pub fn with_aggregator(mut self, op: OperatorKind) -> Self {
        self.aggregator = op;
        self
    }

    pub fn aggregator(&self) -> OperatorKind {
        self.aggregator
    }

    pub fn claim(&self, id: &str) -> Result<&ClaimNode> {
        self.claims.get(id).ok_or_else(|| missing("claim", id))
    }

    pub fn evidence(&self, id: &str) -> Result<&Evidence> {
        self.evidence.get(id).ok_or_else(|| missing("evidence", id))
    }

    pub fn claims(&self) -> impl Iterator<Item = &ClaimNode> {
        self.claims.values()
    }

    pub fn evidence_items(&self) -> impl Iterator<Item = &Evidence> {
        self.evidence.values()
    }

    pub fn claim_count(&self) -> usize {
        self.claims.len()
    }

    pub fn is_dirty(&self, id: &str) -> bool {
        self.dirty.contains(id)
    }

    /// Direct dependents of a claim.
    pub fn dependents_of(&self, id: &str) -> impl Iterator<Item = &String> {
        self.dependents.get(id).into_iter().flatten()
    }

    /// Claims that cite an evidence item.
    pub fn users_of(&self, evidence_id: &str) -> impl Iterator<Item = &String> {
        self.evidence_users.get(evidence_id).into_iter().flatten()
    }

    /// All claims whose derivation includes `id`, excluding `id` itself.
    pub fn descendants(&self, id: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&str> = VecDeque::from([id]);
        while let Some(cur) = queue.pop_front() {
            for d in self.dependents_of(cur) {
                if seen.insert(d.clone()) {
                    queue.push_back(d);
                }
            }
        }
        seen
    }

    /// Allocates an id of the form `{prefix}{n}` not used by any entity.
    pub fn fresh_id(&mut self, prefix: &str) -> String {
        loop {
            let id = format!("{prefix}{}", self.next_id);
            self.next_id += 1;
            if !self.claims.contains_key(&id) && !self.evidence.contains_key(&id) {
                return id;
            }
        }
    }

    /// Inserts a claim. All of its references must already resolve and its
    /// dependencies may not close a cycle.
    pub fn add_claim(&mut self, claim: ClaimNode) -> Result<()> {
        if self.claims.contains_key(&claim.id) {
            return Err(Error::DuplicateId {
                kind: "claim",
                id: claim.id,
            });
        }
        for e in &claim.evidence_refs {
            self.evidence(e)?;
        }
        for d in claim
            .dependency_refs
            .iter()
            .chain(&claim.contradiction_refs)
        {
            if d == &claim.id {
                return Err(Error::CycleDetected {
                    from: claim.id.clone(),
                    to: d.clone(),
                });
            }
            self.claim(d)?;
        }
        // A new node has no dependents, so its dependency edges cannot
        // close a cycle.
        let id = claim.id.clone();
        for e in &claim.evidence_refs {
            self.evidence_users
                .entry(e.clone())
                .or_default()
                .insert(id.clone());
        }
        for d in &claim.dependency_refs {
            self.dependents
                .entry(d.clone())
                .or_default()
                .insert(id.clone());
        }
        for c in &claim.contradiction_refs {
            self.claims
                .get_mut(c)
                .expect("checked")
                .contradiction_refs
                .insert(id.clone());
        }
        self.claims.insert(id.clone(), claim);
        self.dirty.insert(id);
        Ok(())
    }

    pub fn add_evidence(&mut self, evidence: Evidence) -> Result<()> {
        if evidence.collected_at > evidence.valid_until {
            return Err(Error::RangeViolation {
                context: format!(
                    "evidence {} valid_until {} precedes collected_at {}",
                    evidence.id, evidence.valid_until, evidence.collected_at
                ),
                value: (evidence.valid_until - evidence.collected_at).num_seconds() as f64,
            });
        }
        if self.evidence.contains_key(&evidence.id) {
            return Err(Error::DuplicateId {
                kind: "evidence",
                id: evidence.id,
            });
        }
        self.evidence.insert(evidence.id.clone(), evidence);
        Ok(())
    }

    pub fn attach_evidence(&mut self, claim_id: &str, evidence_id: &str) -> Result<()> {
        self.evidence(evidence_id)?;
        let claim = self
            .claims
            .get_mut(claim_id)
            .ok_or_else(|| missing("claim", claim_id))?;
        if claim.evidence_refs.insert(evidence_id.to_string()) {
            self.evidence_users
                .entry(evidence_id.to_string())
                .or_default()
                .insert(claim_id.to_string());
            self.dirty.insert(claim_id.to_string());
        }
        Ok(())
    }

    /// Replaces the raw score of an evidence item and dirties its users.
    pub fn set_evidence_score(&mut self, evidence_id: &str, raw: ReliabilityScore) -> Result<()> {
        let e = self
            .evidence
            .get_mut(evidence_id)
            .ok_or_else(|| missing("evidence", evidence_id))?;
        e.raw_score = raw;
        let users: Vec<String> = self.users_of(evidence_id).cloned().collect();
        self.dirty.extend(users);
        Ok(())
    }

    /// Records that `claim` rests on `premise`.
    pub fn link_dependency(&mut self, claim: &str, premise: &str) -> Result<()> {
        self.claim(claim)?;
        self.claim(premise)?;
        if claim == premise || self.descendants(claim).contains(premise) {
            return Err(Error::CycleDetected {
                from: claim.into(),
                to: premise.into(),
            });
        }
        let node = self.claims.get_mut(claim).expect("checked");
        if node.dependency_refs.insert(premise.to_string()) {
            self.dependents
                .entry(premise.to_string())
                .or_default()
                .insert(claim.to_string());
            self.dirty.insert(claim.to_string());
        }
        Ok(())
    }

    /// Records a symmetric contradiction between two claims. When one side
    /// is an active L2 claim, the other side (if below L2) is marked
    /// contradicted.
    pub fn declare_contradiction(&mut self, a: &str, b: &str) -> Result<()> {
        self.claim(a)?;
        self.claim(b)?;
        if a == b {
            return Err(Error::Invalid(format!(
                "claim {a} cannot contradict itself"
            )));
        }
        for (x, y) in [(a, b), (b, a)] {
            self.claims
                .get_mut(x)
                .expect("checked")
                .contradiction_refs
                .insert(y.to_string());
        }
        for (x, y) in [(a, b), (b, a)] {
            let validated = {
                let other = &self.claims[y];
                other.layer == EpistemicLayer::L2 && other.status == ClaimStatus::Active
            };
            let node = self.claims.get_mut(x).expect("checked");
            if validated && node.layer < EpistemicLayer::L2 && node.status == ClaimStatus::Active {
                node.status = ClaimStatus::Contradicted;
            }
        }
        Ok(())
    }

    /// Archives a refuted claim. Its score keeps propagating; only its
    /// status changes.
    pub fn discard(&mut self, claim_id: &str) -> Result<()> {
        let node = self
            .claims
            .get_mut(claim_id)
            .ok_or_else(|| missing("claim", claim_id))?;
        node.status = ClaimStatus::Discarded;
        Ok(())
    }

    /// Claims in topological order, premises before conclusions. Ties are
    /// broken by id so the order is deterministic.
    pub fn topological_order(&self) -> Result<Vec<String>> {
        let mut indegree: BTreeMap<&str, usize> = self
            .claims
            .values()
            .map(|c| (c.id.as_str(), c.dependency_refs.len()))
            .collect();
        let mut ready: BTreeSet<&str> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut order = Vec::with_capacity(self.claims.len());
        while let Some(id) = ready.pop_first() {
            order.push(id.to_string());
            for dep in self.dependents_of(id) {
                let d = indegree.get_mut(dep.as_str()).expect("indexed");
                *d -= 1;
                if *d == 0 {
                    ready.insert(dep.as_str());
                }
            }
        }
        if order.len() != self.claims.len() {
            let stuck = indegree
                .iter()
                .find(|(_, d)| **d > 0)
                .map(|(id, _)| id.to_string())
                .unwrap_or_default();
            let to = self.claims[&stuck]
                .dependency_refs
                .iter()
                .next()
                .cloned()
                .unwrap_or_default();
            return Err(Error::CycleDetected { from: stuck, to });
        }
        Ok(order)
    }

    fn rebuild_indexes(&mut self) {
        self.dependents.clear();
        self.evidence_users.clear();
        for c in self.claims.values() {
            for d in &c.dependency_refs {
                self.dependents
                    .entry(d.clone())
                    .or_default()
                    .insert(c.id.clone());
            }
            for e in &c.evidence_refs {
                self.evidence_users
                    .entry(e.clone())
                    .or_default()
                    .insert(c.id.clone());
            }
        }
    }

    fn mark_all_dirty(&mut self) {
        self.dirty = self.claims.keys().cloned().collect();
    }
}

fn missing(kind: &'static str, id: &str) -> Error {
    Error::MissingRef {
        kind,
        id: id.to_string(),
    }
}
