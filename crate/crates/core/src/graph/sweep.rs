use std::collections::BTreeSet;

use super::{ClaimStatus, KnowledgeGraph, PropagationMode, Timestamp};
use crate::error::Result;
use crate::fsm::Phase;
use crate::model::{Config, EpistemicLayer};

impl KnowledgeGraph {
    /// Flags claims affected by expired evidence.
    ///
    /// A claim citing evidence past its `valid_until`, and every claim that
    /// transitively depends on one, is marked stale. An L2 claim citing
    /// expired evidence that no longer has any qualifying evidence drops
    /// one layer to L1 and re-enters deduction. Returns the ids newly
    /// flagged by this sweep, sorted.
    pub fn sweep_stale(&mut self, cfg: &Config, now: Timestamp) -> Result<Vec<String>> {
        let expired: Vec<String> = self
            .evidence
            .values()
            .filter(|e| e.is_expired(now))
            .map(|e| e.id.clone())
            .collect();
        let direct: BTreeSet<String> = expired
            .iter()
            .flat_map(|e| self.users_of(e).cloned())
            .collect();

        let mut affected = direct.clone();
        for id in &direct {
            affected.extend(self.descendants(id));
        }

        for id in &direct {
            let claim = &self.claims[id];
            if claim.layer != EpistemicLayer::L2 {
                continue;
            }
            let still_qualified = claim
                .evidence_refs
                .iter()
                .any(|e| self.qualifies_for_corroboration(claim, e, now));
            if !still_qualified {
                let node = self.claims.get_mut(id).expect("indexed");
                node.layer = EpistemicLayer::L1;
                if !node.phase.is_terminal() {
                    node.phase = Phase::for_layer(EpistemicLayer::L1);
                }
                self.dirty.insert(id.clone());
            }
        }

        let mut flagged = Vec::new();
        for id in affected {
            let node = self.claims.get_mut(&id).expect("indexed");
            if matches!(node.status, ClaimStatus::Active | ClaimStatus::Contradicted) {
                node.status = ClaimStatus::Stale;
                flagged.push(id);
            }
        }
        self.propagate(cfg, now, PropagationMode::Incremental)?;
        Ok(flagged)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{claim, evidence, t0};
    use super::*;
    use crate::model::FormalityLevel as F;
    use chrono::Duration;

    #[test]
    fn expiry_flags_citers_and_dependents_and_demotes_l2() {
        let cfg = Config::default();
        let mut g = KnowledgeGraph::new();
        g.add_evidence(evidence("e1", 0.9)).unwrap();
        let fresh = evidence("e2", 0.9).with_valid_until(t0() + Duration::days(10_000));
        g.add_evidence(fresh).unwrap();
        for id in ["a", "b", "c", "x"] {
            g.add_claim(claim(id, EpistemicLayer::L2, F::F2)).unwrap();
        }
        g.attach_evidence("a", "e1").unwrap();
        g.attach_evidence("x", "e2").unwrap();
        g.link_dependency("b", "a").unwrap();
        g.link_dependency("c", "b").unwrap();
        g.propagate(&cfg, t0(), PropagationMode::Full).unwrap();

        assert!(g.sweep_stale(&cfg, t0()).unwrap().is_empty());
        let before: Vec<_> = g.claims().map(|c| c.cached_r_eff).collect();
        assert_eq!(
            before,
            g.claims().map(|c| c.cached_r_eff).collect::<Vec<_>>()
        );

        let t = g.evidence("e1").unwrap().valid_until + Duration::seconds(1);
        let flagged = g.sweep_stale(&cfg, t).unwrap();
        assert_eq!(flagged, vec!["a", "b", "c"]);
        let a = g.claim("a").unwrap();
        assert_eq!(a.layer, EpistemicLayer::L1);
        assert_eq!(a.status, ClaimStatus::Stale);
        assert_eq!(a.phase, Phase::Deduction);
        // Dependents are flagged but keep their layer.
        assert_eq!(g.claim("b").unwrap().layer, EpistemicLayer::L2);
        assert_eq!(g.claim("x").unwrap().status, ClaimStatus::Active);
        // A second sweep reports nothing new.
        assert!(g.sweep_stale(&cfg, t).unwrap().is_empty());
    }

    #[test]
    fn sweep_without_expiry_changes_nothing() {
        let cfg = Config::default();
        let mut g = KnowledgeGraph::new();
        g.add_evidence(evidence("e", 0.7)).unwrap();
        g.add_claim(claim("a", EpistemicLayer::L2, F::F2)).unwrap();
        g.attach_evidence("a", "e").unwrap();
        g.propagate(&cfg, t0(), PropagationMode::Full).unwrap();
        let snapshot = g.clone();
        assert!(g
            .sweep_stale(&cfg, t0() + Duration::days(1))
            .unwrap()
            .is_empty());
        assert_eq!(g, snapshot);
    }
}
