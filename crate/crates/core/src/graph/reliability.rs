//! Effective reliability of a single claim:
//!
//! ```text
//! R_eff = min( min_i R_adj(e_i),
//!              min_j max(0, R_eff(d_j) - CL_j),
//!              C_layer, C_formality )
//! ```
//!
//! Empty evidence and dependency sets contribute nothing (the identity of
//! `min` on `[0, 1]`), so a bare claim is bounded only by its ceilings.

use serde::Serialize;

use super::{Evidence, KnowledgeGraph, Timestamp};
use crate::error::Result;
use crate::gamma::{aggregate, OperatorKind};
use crate::model::{Config, CongruenceLevel, VerificationMethod};
use crate::scope::{match_level, Scope};
use crate::score::ReliabilityScore;

/// Outcome of the evidence adjustment pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdjustedEvidence {
    /// Scope match is `none`; the item does not participate at all.
    Excluded,
    Score(ReliabilityScore),
}

impl AdjustedEvidence {
    pub fn score(self) -> Option<ReliabilityScore> {
        match self {
            AdjustedEvidence::Excluded => None,
            AdjustedEvidence::Score(s) => Some(s),
        }
    }
}

/// Validity multiplier: 1 up to `valid_until`, then a linear ramp to 0
/// over the grace period. A zero grace period is a hard cutoff.
pub fn decay_factor(now: Timestamp, valid_until: Timestamp, cfg: &Config) -> f64 {
    if now <= valid_until {
        return 1.0;
    }
    let grace = cfg.grace().num_milliseconds();
    if grace <= 0 {
        return 0.0;
    }
    let late = (now - valid_until).num_milliseconds() as f64;
    (1.0 - late / grace as f64).max(0.0)
}

/// Provenance tags are whitespace- or comma-separated; `llm-generated`
/// (optionally followed by `:detail`) marks model-produced evidence.
pub fn is_llm_generated(provenance: &str) -> bool {
    provenance
        .split(|c: char| c.is_whitespace() || c == ',' || c == ';')
        .any(|tag| tag == "llm-generated" || tag.starts_with("llm-generated:"))
}

/// Scope exclusion, verification multiplier, decay, congruence penalty
/// (floored at 0), then the optional faithfulness cap.
pub fn adjust_evidence(
    e: &Evidence,
    claim_scope: &Scope,
    now: Timestamp,
    cfg: &Config,
) -> AdjustedEvidence {
    let level = match_level(claim_scope, &e.scope);
    let Some(penalty) = cfg.congruence_penalty(level) else {
        return AdjustedEvidence::Excluded;
    };
    let weighted = e.raw_score.value() * cfg.multiplier(e.method);
    let decayed = weighted * decay_factor(now, e.valid_until, cfg);
    let mut adjusted = ReliabilityScore::saturating((decayed - penalty).max(0.0))
        .expect("finite arithmetic on valid inputs");
    if let Some(cap) = cfg.faithfulness_cap {
        if is_llm_generated(&e.provenance) {
            adjusted = adjusted.min(cap);
        }
    }
    AdjustedEvidence::Score(adjusted)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceTerm {
    pub id: String,
    pub raw: f64,
    pub method: VerificationMethod,
    pub congruence: CongruenceLevel,
    pub decay: f64,
    /// `None` when excluded by scope.
    pub adjusted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependencyTerm {
    pub id: String,
    pub r_eff: f64,
    pub congruence: CongruenceLevel,
    pub penalty: f64,
    pub term: f64,
}

/// The term that determines the result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Bound {
    Evidence(String),
    Dependency(String),
    LayerCeiling,
    FormalityCeiling,
}

/// Every term of the reliability formula for one claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakdown {
    pub claim: String,
    pub r_eff: f64,
    pub operator: OperatorKind,
    pub evidence: Vec<EvidenceTerm>,
    pub dependencies: Vec<DependencyTerm>,
    pub layer_ceiling: f64,
    pub formality_ceiling: f64,
    /// The smallest term; for `min` it equals `r_eff`.
    pub dominating: Bound,
    /// The claim whose own evidence or ceiling is the origin of the bound,
    /// following dominating dependencies upstream.
    pub weakest_link: String,
}

impl KnowledgeGraph {
    /// Evaluates the formula for one claim from the cached scores of its
    /// premises. Callers must have propagated the premises first.
    pub(crate) fn evaluate(&self, id: &str, cfg: &Config, now: Timestamp) -> Result<Breakdown> {
        let claim = self.claim(id)?;
        let mut terms: Vec<ReliabilityScore> = Vec::new();
        let mut candidates: Vec<(f64, Bound)> = Vec::new();

        let mut evidence = Vec::with_capacity(claim.evidence_refs.len());
        for eid in &claim.evidence_refs {
            let e = self.evidence(eid)?;
            let adjusted = adjust_evidence(e, &claim.scope, now, cfg).score();
            if let Some(s) = adjusted {
                terms.push(s);
                candidates.push((s.value(), Bound::Evidence(eid.clone())));
            }
            evidence.push(EvidenceTerm {
                id: eid.clone(),
                raw: e.raw_score.value(),
                method: e.method,
                congruence: match_level(&claim.scope, &e.scope),
                decay: decay_factor(now, e.valid_until, cfg),
                adjusted: adjusted.map(f64::from),
            });
        }

        let mut dependencies = Vec::with_capacity(claim.dependency_refs.len());
        for did in &claim.dependency_refs {
            let dep = self.claim(did)?;
            let congruence = match_level(&claim.scope, &dep.scope);
            // A premise from an incompatible context transfers nothing.
            let (penalty, term) = match cfg.congruence_penalty(congruence) {
                Some(p) => (p, (dep.cached_r_eff.value() - p).max(0.0)),
                None => (dep.cached_r_eff.value(), 0.0),
            };
            let term = ReliabilityScore::saturating(term).expect("finite");
            terms.push(term);
            candidates.push((term.value(), Bound::Dependency(did.clone())));
            dependencies.push(DependencyTerm {
                id: did.clone(),
                r_eff: dep.cached_r_eff.value(),
                congruence,
                penalty,
                term: term.value(),
            });
        }

        let layer_ceiling = cfg.layer_ceiling(claim.layer);
        let formality_ceiling = cfg.formality_ceiling(claim.formality);
        terms.push(layer_ceiling);
        terms.push(formality_ceiling);
        candidates.push((layer_ceiling.value(), Bound::LayerCeiling));
        candidates.push((formality_ceiling.value(), Bound::FormalityCeiling));

        let r_eff = aggregate(self.aggregator, &terms)?;
        // First minimal candidate: own evidence wins ties, then premises,
        // then ceilings.
        let (_, dominating) = candidates
            .iter()
            .fold(None::<&(f64, Bound)>, |best, c| match best {
                Some(b) if b.0 <= c.0 => Some(b),
                _ => Some(c),
            })
            .cloned()
            .expect("ceilings are always present");
        let weakest_link = match &dominating {
            Bound::Dependency(d) => self.weakest_link_of(d, cfg, now)?,
            _ => id.to_string(),
        };
        Ok(Breakdown {
            claim: id.to_string(),
            r_eff: r_eff.value(),
            operator: self.aggregator,
            evidence,
            dependencies,
            layer_ceiling: layer_ceiling.value(),
            formality_ceiling: formality_ceiling.value(),
            dominating,
            weakest_link,
        })
    }

    fn weakest_link_of(&self, id: &str, cfg: &Config, now: Timestamp) -> Result<String> {
        Ok(self.evaluate(id, cfg, now)?.weakest_link)
    }

    /// Brings the graph up to date and returns a claim's effective
    /// reliability.
    pub fn effective_reliability(
        &mut self,
        id: &str,
        cfg: &Config,
        now: Timestamp,
    ) -> Result<ReliabilityScore> {
        self.claim(id)?;
        self.propagate(cfg, now, super::PropagationMode::Incremental)?;
        Ok(self.claim(id)?.cached_r_eff)
    }

    /// Brings the graph up to date and explains a claim's score term by
    /// term.
    pub fn breakdown(&mut self, id: &str, cfg: &Config, now: Timestamp) -> Result<Breakdown> {
        self.claim(id)?;
        self.propagate(cfg, now, super::PropagationMode::Incremental)?;
        self.evaluate(id, cfg, now)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{actor, claim, evidence, score, t0};
    use super::*;
    use crate::graph::{ClaimNode, Evidence};
    use crate::model::{EpistemicLayer as L, EvidenceRole, FormalityLevel as F};
    use crate::scope::parse_scope;
    use chrono::Duration;

    fn ev(raw: f64, method: VerificationMethod, scope: &str) -> Evidence {
        Evidence::new(
            "e",
            score(raw),
            F::F2,
            parse_scope(scope).unwrap(),
            method,
            EvidenceRole::Other,
            t0(),
            &Config::default(),
        )
    }

    #[test]
    fn self_reported_multiplier() {
        let cfg = Config::default();
        let a = adjust_evidence(
            &ev(0.8, VerificationMethod::SelfReported, "*"),
            &Scope::TOP,
            t0(),
            &cfg,
        );
        assert!((a.score().unwrap().value() - 0.48).abs() < 1e-12);
    }

    #[test]
    fn cl1_penalty_is_floored() {
        let cfg = Config::default();
        let claim_scope = parse_scope("env=prod,region=eu").unwrap();
        let e = ev(
            0.9,
            VerificationMethod::ExecutedVerified,
            "env=dev,region=eu",
        );
        let a = adjust_evidence(&e, &claim_scope, t0(), &cfg)
            .score()
            .unwrap();
        assert!((a.value() - 0.5).abs() < 1e-12);
        let weak = ev(
            0.3,
            VerificationMethod::ExecutedVerified,
            "env=dev,region=eu",
        );
        assert_eq!(
            adjust_evidence(&weak, &claim_scope, t0(), &cfg)
                .score()
                .unwrap()
                .value(),
            0.0
        );
    }

    #[test]
    fn none_match_is_excluded() {
        let cfg = Config::default();
        let e = ev(0.9, VerificationMethod::ExecutedVerified, "env=dev");
        let claim_scope = parse_scope("env=prod").unwrap();
        assert_eq!(
            adjust_evidence(&e, &claim_scope, t0(), &cfg),
            AdjustedEvidence::Excluded
        );
    }

    #[test]
    fn decay_ramp_and_endpoint() {
        let cfg = Config::default();
        let e = ev(0.9, VerificationMethod::ExecutedVerified, "*");
        let end = e.valid_until;
        assert_eq!(decay_factor(end, end, &cfg), 1.0);
        let half = end + cfg.grace() / 2;
        assert!((decay_factor(half, end, &cfg) - 0.5).abs() < 1e-12);
        let past = end + cfg.grace() + Duration::days(1);
        assert_eq!(
            adjust_evidence(&e, &Scope::TOP, past, &cfg)
                .score()
                .unwrap()
                .value(),
            0.0
        );
        let hard = Config {
            grace_days: 0,
            ..Config::default()
        };
        assert_eq!(decay_factor(end + Duration::seconds(1), end, &hard), 0.0);
    }

    #[test]
    fn faithfulness_cap_applies_to_tagged_evidence_only() {
        let cfg = Config {
            faithfulness_cap: Some(score(0.39)),
            ..Config::default()
        };
        let e = ev(0.85, VerificationMethod::ExecutedVerified, "*");
        assert!(
            adjust_evidence(&e, &Scope::TOP, t0(), &cfg)
                .score()
                .unwrap()
                .value()
                > 0.39
        );
        let tagged = e.clone().with_provenance("llm-generated:gpt");
        assert_eq!(
            adjust_evidence(&tagged, &Scope::TOP, t0(), &cfg)
                .score()
                .unwrap()
                .value(),
            0.39
        );
        assert!(is_llm_generated("bench, llm-generated"));
        assert!(!is_llm_generated("not-llm-generated"));
    }

    #[test]
    fn bare_claims_hit_the_dual_ceiling() {
        let cfg = Config::default();
        let mut g = KnowledgeGraph::new();
        g.add_claim(claim("a", L::L0, F::F3)).unwrap();
        g.add_claim(claim("b", L::L2, F::F2)).unwrap();
        assert_eq!(
            g.effective_reliability("a", &cfg, t0()).unwrap().value(),
            0.35
        );
        assert_eq!(
            g.effective_reliability("b", &cfg, t0()).unwrap().value(),
            0.95
        );
        assert_eq!(
            g.breakdown("a", &cfg, t0()).unwrap().dominating,
            Bound::LayerCeiling
        );
        assert_eq!(
            g.breakdown("b", &cfg, t0()).unwrap().dominating,
            Bound::FormalityCeiling
        );
    }

    #[test]
    fn worked_chain_caps_at_weakest_step() {
        let cfg = Config::default();
        let mut g = KnowledgeGraph::new();
        for (i, raw) in [0.95, 0.85, 0.40].into_iter().enumerate() {
            let id = format!("S{}", i + 1);
            let eid = format!("e{}", i + 1);
            g.add_evidence(Evidence {
                id: eid.clone(),
                ..evidence(&eid, raw)
            })
            .unwrap();
            let mut c = ClaimNode::new(&id, &id, F::F2, Scope::TOP, actor("gen")).at_layer(L::L2);
            c.evidence_refs.insert(eid);
            if i > 0 {
                c.dependency_refs.insert(format!("S{i}"));
            }
            g.add_claim(c).unwrap();
        }
        assert_eq!(
            g.effective_reliability("S3", &cfg, t0()).unwrap().value(),
            0.40
        );
        assert_eq!(
            g.effective_reliability("S2", &cfg, t0()).unwrap().value(),
            0.85
        );
        let b = g.breakdown("S3", &cfg, t0()).unwrap();
        assert_eq!(b.dominating, Bound::Evidence("e3".into()));
        assert_eq!(b.weakest_link, "S3");
    }

    #[test]
    fn conflicting_premises_cap_the_conclusion() {
        let cfg = Config::default();
        let mut g = KnowledgeGraph::new();
        for (id, raw) in [("p", 0.9), ("q", 0.3)] {
            let eid = format!("e{id}");
            g.add_evidence(Evidence {
                id: eid.clone(),
                ..evidence(&eid, raw)
            })
            .unwrap();
            let mut c = claim(id, L::L2, F::F3);
            c.evidence_refs.insert(eid);
            g.add_claim(c).unwrap();
        }
        let mut c = claim("c", L::L2, F::F3);
        c.dependency_refs = ["p", "q"].iter().map(|s| s.to_string()).collect();
        g.add_claim(c).unwrap();
        g.declare_contradiction("p", "q").unwrap();
        let r = g.effective_reliability("c", &cfg, t0()).unwrap();
        assert_eq!(r.value(), 0.3);
        let b = g.breakdown("c", &cfg, t0()).unwrap();
        assert_eq!(b.dominating, Bound::Dependency("q".into()));
        assert_eq!(b.weakest_link, "q");
    }

    #[test]
    fn faithfulness_cap_bounds_the_claim() {
        let cfg = Config {
            faithfulness_cap: Some(score(0.39)),
            ..Config::default()
        };
        let mut g = KnowledgeGraph::new();
        let e = Evidence {
            formality: F::F1,
            ..evidence("e", 0.85)
        }
        .with_provenance("llm-generated");
        g.add_evidence(e).unwrap();
        let mut c = claim("c", L::L1, F::F1);
        c.evidence_refs.insert("e".into());
        g.add_claim(c).unwrap();
        assert_eq!(
            g.effective_reliability("c", &cfg, t0()).unwrap().value(),
            0.39
        );
    }

    #[test]
    fn incompatible_premise_transfers_nothing() {
        let cfg = Config::default();
        let mut g = KnowledgeGraph::new();
        let p = ClaimNode::new("p", "p", F::F2, parse_scope("env=dev").unwrap(), actor("g"));
        g.add_claim(p).unwrap();
        let mut c = ClaimNode::new(
            "c",
            "c",
            F::F2,
            parse_scope("env=prod").unwrap(),
            actor("g"),
        );
        c.dependency_refs.insert("p".into());
        g.add_claim(c).unwrap();
        assert_eq!(
            g.effective_reliability("c", &cfg, t0()).unwrap().value(),
            0.0
        );
    }
}
