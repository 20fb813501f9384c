//! Role-aware evidence aggregation.
//!
//! Tier 1 aggregates within each evidence role: gates by `min` (a failed
//! gate scores 0), quality reviews by probabilistic sum, performance
//! metrics by a conservative OWA, anything else by `min`. Tier 2 takes the
//! `min` across the non-empty roles, so the overall result never exceeds
//! the weakest role. The probabilistic sum is a t-conorm and can exceed
//! the smallest quality score; only the cross-role bound is guaranteed.

use super::{adjust_evidence, KnowledgeGraph, Timestamp};
use crate::error::{Error, Result};
use crate::gamma::{aggregate, OperatorKind};
use crate::model::{Config, EvidenceRole};
use crate::score::ReliabilityScore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateEvidence {
    pub score: ReliabilityScore,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoleGroups {
    pub gate: Vec<GateEvidence>,
    pub performance: Vec<ReliabilityScore>,
    pub quality: Vec<ReliabilityScore>,
    pub other: Vec<ReliabilityScore>,
}

impl RoleGroups {
    pub fn is_empty(&self) -> bool {
        self.gate.is_empty()
            && self.performance.is_empty()
            && self.quality.is_empty()
            && self.other.is_empty()
    }

    /// Tier-1 score per non-empty role, in the order gate, performance,
    /// quality, other.
    pub fn role_scores(&self) -> Vec<(&'static str, ReliabilityScore)> {
        let mut out = Vec::new();
        if !self.gate.is_empty() {
            let s = if self.gate.iter().any(|g| !g.passed) {
                ReliabilityScore::ZERO
            } else {
                let scores: Vec<_> = self.gate.iter().map(|g| g.score).collect();
                aggregate(OperatorKind::GodelMin, &scores).expect("non-empty")
            };
            out.push(("gate", s));
        }
        if !self.performance.is_empty() {
            out.push(("performance", owa_conservative(&self.performance)));
        }
        if !self.quality.is_empty() {
            out.push(("quality", probabilistic_sum(&self.quality)));
        }
        if !self.other.is_empty() {
            out.push((
                "other",
                aggregate(OperatorKind::GodelMin, &self.other).expect("non-empty"),
            ));
        }
        out
    }
}

/// `1 - Π(1 - sᵢ)`.
pub fn probabilistic_sum(scores: &[ReliabilityScore]) -> ReliabilityScore {
    let miss: f64 = scores.iter().map(|s| 1.0 - s.value()).product();
    ReliabilityScore::saturating(1.0 - miss).expect("finite")
}

/// Ordered weighted average over the ascending sort with weights
/// `wᵢ = 2(n−i+1) / (n(n+1))`, so the smallest value weighs most.
pub fn owa_conservative(scores: &[ReliabilityScore]) -> ReliabilityScore {
    let mut sorted: Vec<f64> = scores.iter().map(|s| s.value()).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let total: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, v)| 2.0 * (n - i as f64) / (n * (n + 1.0)) * v)
        .sum();
    ReliabilityScore::saturating(total).expect("finite")
}

pub fn two_tier_aggregate(groups: &RoleGroups) -> Result<ReliabilityScore> {
    let roles = groups.role_scores();
    if roles.is_empty() {
        return Err(Error::EmptyEvidence);
    }
    let scores: Vec<_> = roles.iter().map(|(_, s)| *s).collect();
    aggregate(OperatorKind::GodelMin, &scores)
}

impl KnowledgeGraph {
    /// Groups a claim's adjusted evidence by role. Items excluded by scope
    /// are left out; a gate passes when its adjusted score is above 0.
    pub fn role_groups(&self, claim_id: &str, cfg: &Config, now: Timestamp) -> Result<RoleGroups> {
        let claim = self.claim(claim_id)?;
        let mut groups = RoleGroups::default();
        for eid in &claim.evidence_refs {
            let e = self.evidence(eid)?;
            let Some(score) = adjust_evidence(e, &claim.scope, now, cfg).score() else {
                continue;
            };
            match e.role {
                EvidenceRole::Gate => groups.gate.push(GateEvidence {
                    score,
                    passed: score.value() > 0.0,
                }),
                EvidenceRole::Performance => groups.performance.push(score),
                EvidenceRole::Quality => groups.quality.push(score),
                EvidenceRole::Other => groups.other.push(score),
            }
        }
        Ok(groups)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> ReliabilityScore {
        ReliabilityScore::new(v).unwrap()
    }

    #[test]
    fn failed_gate_zeroes_everything() {
        let g = RoleGroups {
            gate: vec![GateEvidence {
                score: s(0.99),
                passed: false,
            }],
            quality: vec![s(0.9)],
            ..Default::default()
        };
        assert_eq!(two_tier_aggregate(&g).unwrap().value(), 0.0);
    }

    #[test]
    fn quality_uses_probabilistic_sum() {
        let g = RoleGroups {
            quality: vec![s(0.5), s(0.5)],
            ..Default::default()
        };
        assert_eq!(two_tier_aggregate(&g).unwrap().value(), 0.75);
    }

    #[test]
    fn gate_and_performance() {
        // OWA over [0.5, 0.8]: weights 2/3 and 1/3, by direct summation 0.6.
        let g = RoleGroups {
            gate: vec![GateEvidence {
                score: s(0.9),
                passed: true,
            }],
            performance: vec![s(0.8), s(0.5)],
            ..Default::default()
        };
        let oracle = 0.5 * 2.0 / 3.0 + 0.8 * 1.0 / 3.0;
        assert!((two_tier_aggregate(&g).unwrap().value() - oracle).abs() < 1e-12);
        assert!((oracle - 0.6).abs() < 1e-12);
    }

    #[test]
    fn empty_groups_are_rejected() {
        assert_eq!(
            two_tier_aggregate(&RoleGroups::default()),
            Err(Error::EmptyEvidence)
        );
    }

    #[test]
    fn owa_weights_sum_to_one() {
        for n in 1..20 {
            let ones = vec![ReliabilityScore::ONE; n];
            assert!((owa_conservative(&ones).value() - 1.0).abs() < 1e-12);
        }
    }
}
