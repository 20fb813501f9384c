//! Claim lifecycle: proposal at L0, one-layer promotions, and the checks
//! that gate ratification. Whoever proposed a claim may never be the actor
//! that promotes or ratifies it.

use super::{
    ClaimNode, ClaimStatus, HistoryStep, InferenceMode, KnowledgeGraph, PropagationMode, Timestamp,
};
use crate::error::{Error, Result};
use crate::fsm::{transition, ActorId, ActorKind, Event, Phase, PromotionRequest};
use crate::model::CongruenceLevel;
use crate::model::{Config, EpistemicLayer, FormalityLevel, VerificationMethod};
use crate::scope::{match_level, Scope};

impl KnowledgeGraph {
    /// Records a new conjecture at L0 and returns its id. Identical
    /// statements still get distinct ids.
    pub fn propose(
        &mut self,
        statement: impl Into<String>,
        scope: Scope,
        formality: FormalityLevel,
        actor: ActorId,
        now: Timestamp,
    ) -> Result<String> {
        let id = self.fresh_id("c");
        self.propose_with_id(id, statement, scope, formality, actor, now)
    }

    pub fn propose_with_id(
        &mut self,
        id: impl Into<String>,
        statement: impl Into<String>,
        scope: Scope,
        formality: FormalityLevel,
        actor: ActorId,
        now: Timestamp,
    ) -> Result<String> {
        let id = id.into();
        let mut claim = ClaimNode::new(id.clone(), statement, formality, scope, actor.clone());
        claim.phase = transition(Phase::Idle, Event::Start)?;
        claim.history.push(HistoryStep {
            mode: InferenceMode::Abduction,
            layer: EpistemicLayer::L0,
            actor: actor.id,
            evidence: Vec::new(),
            at: now,
        });
        self.add_claim(claim)?;
        Ok(id)
    }

    /// Whether an evidence item can carry a claim to L2: unexpired, at
    /// least script-attached, and transferable into the claim's scope.
    pub fn qualifies_for_corroboration(
        &self,
        claim: &ClaimNode,
        evidence_id: &str,
        now: Timestamp,
    ) -> bool {
        self.evidence.get(evidence_id).is_some_and(|e| {
            !e.is_expired(now)
                && e.method >= VerificationMethod::ScriptAttached
                && match_level(&claim.scope, &e.scope) != CongruenceLevel::None
        })
    }

    /// Promotes a claim by exactly one layer. Nothing is modified unless
    /// every check passes.
    pub fn promote(
        &mut self,
        req: &PromotionRequest,
        cfg: &Config,
        now: Timestamp,
    ) -> Result<&ClaimNode> {
        let claim = self.claim(&req.claim)?;
        if claim.layer.next() != Some(req.target) {
            return Err(Error::LayerSkip {
                claim: claim.id.clone(),
                from: claim.layer.to_string(),
                to: req.target.to_string(),
            });
        }
        if claim.proposer.same_party(&req.actor) {
            return Err(Error::SelfVerification {
                claim: claim.id.clone(),
                actor: req.actor.id.clone(),
            });
        }
        if claim.status == ClaimStatus::Discarded {
            return Err(Error::Invalid(format!("claim {} is discarded", claim.id)));
        }
        for other in &claim.contradiction_refs {
            let o = self.claim(other)?;
            if o.layer == EpistemicLayer::L2 && o.status == ClaimStatus::Active {
                return Err(Error::ContradictsValidated {
                    claim: claim.id.clone(),
                    validated: other.clone(),
                });
            }
        }
        for e in &req.evidence {
            self.evidence(e)?;
        }
        let (event, mode) = match req.target {
            EpistemicLayer::L1 => (Event::Hypothesize, InferenceMode::Deduction),
            EpistemicLayer::L2 => (Event::Verify, InferenceMode::Induction),
            EpistemicLayer::L0 => unreachable!("L0 is never a promotion target"),
        };
        if req.target == EpistemicLayer::L2 {
            let qualified = claim
                .evidence_refs
                .iter()
                .chain(&req.evidence)
                .any(|e| self.qualifies_for_corroboration(claim, e, now));
            if !qualified {
                return Err(Error::InsufficientEvidence {
                    claim: claim.id.clone(),
                });
            }
        }
        let phase = transition(claim.phase, event)?;

        let id = req.claim.clone();
        for e in &req.evidence {
            self.attach_evidence(&id, e)?;
        }
        let node = self.claims.get_mut(&id).expect("checked");
        node.layer = req.target;
        node.phase = phase;
        node.status = ClaimStatus::Active;
        node.history.push(HistoryStep {
            mode,
            layer: req.target,
            actor: req.actor.id.clone(),
            evidence: req.evidence.clone(),
            at: now,
        });
        self.dirty.insert(id.clone());
        self.propagate(cfg, now, PropagationMode::Incremental)?;
        self.claim(&id)
    }

    /// Checks whether `actor` may ratify the claim, without changing it.
    pub fn check_ratifiable(&self, claim_id: &str, actor: &ActorId) -> Result<&ClaimNode> {
        let claim = self.claim(claim_id)?;
        if claim.proposer.same_party(actor) {
            return Err(Error::SelfRatification {
                claim: claim.id.clone(),
                actor: actor.id.clone(),
            });
        }
        if actor.kind == ActorKind::Generator {
            return Err(Error::GeneratorRatifier {
                claim: claim.id.clone(),
                actor: actor.id.clone(),
            });
        }
        if claim.layer != EpistemicLayer::L2 {
            return Err(Error::NotCorroborated {
                claim: claim.id.clone(),
                layer: claim.layer.to_string(),
            });
        }
        transition(claim.phase, Event::Ratify)?;
        if claim.history.is_empty() {
            return Err(Error::EmptyHistory {
                claim: claim.id.clone(),
            });
        }
        Ok(claim)
    }

    /// Moves a ratifiable claim into the ratified phase.
    pub(crate) fn mark_ratified(&mut self, claim_id: &str) -> Result<()> {
        let node = self
            .claims
            .get_mut(claim_id)
            .ok_or_else(|| super::missing("claim", claim_id))?;
        node.phase = transition(node.phase, Event::Ratify)?;
        Ok(())
    }

    /// Puts a ratified decision into operation. Terminal.
    pub fn deploy(&mut self, claim_id: &str) -> Result<()> {
        let node = self
            .claims
            .get_mut(claim_id)
            .ok_or_else(|| super::missing("claim", claim_id))?;
        node.phase = transition(node.phase, Event::Deploy)?;
        Ok(())
    }
}
