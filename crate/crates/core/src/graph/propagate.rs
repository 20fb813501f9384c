use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{KnowledgeGraph, LastRun, Timestamp};
use crate::error::Result;
use crate::model::Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationMode {
    /// Recompute every claim.
    Full,
    /// Recompute dirty claims and their transitive dependents only.
    Incremental,
}

impl KnowledgeGraph {
    /// Recomputes cached effective reliability in topological order.
    ///
    /// Both modes produce bit-identical caches. Incremental mode also picks
    /// up claims whose evidence decay changed since the previous run, and
    /// falls back to a full pass when the configuration or aggregator
    /// changed. Returns the ids that were recomputed.
    pub fn propagate(
        &mut self,
        cfg: &Config,
        now: Timestamp,
        mode: PropagationMode,
    ) -> Result<Vec<String>> {
        let order = self.topological_order()?;
        let recompute: BTreeSet<String> = match (mode, &self.last_run) {
            (PropagationMode::Full, _) | (_, None) => order.iter().cloned().collect(),
            (PropagationMode::Incremental, Some(last))
                if last.cfg != *cfg || last.aggregator != self.aggregator =>
            {
                order.iter().cloned().collect()
            }
            (PropagationMode::Incremental, Some(last)) => {
                let mut seeds = self.dirty.clone();
                if last.now != now {
                    // Decay is constant at 1 until valid_until, so only
                    // evidence that expired before the later of the two
                    // instants can have changed.
                    let later = last.now.max(now);
                    for e in self.evidence.values().filter(|e| e.valid_until < later) {
                        seeds.extend(self.users_of(&e.id).cloned());
                    }
                }
                let mut affected = BTreeSet::new();
                for s in seeds {
                    if self.claims.contains_key(&s) {
                        affected.extend(self.descendants(&s));
                        affected.insert(s);
                    }
                }
                affected
            }
        };

        let mut done = Vec::with_capacity(recompute.len());
        for id in order.iter().filter(|id| recompute.contains(*id)) {
            let r = self.evaluate(id, cfg, now)?.r_eff;
            let node = self.claims.get_mut(id).expect("ordered ids exist");
            node.cached_r_eff = crate::score::ReliabilityScore::new(r)?;
            done.push(id.clone());
        }
        self.dirty.clear();
        self.last_run = Some(LastRun {
            now,
            cfg: cfg.clone(),
            aggregator: self.aggregator,
        });
        Ok(done)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{claim, evidence, score, t0};
    use super::*;
    use crate::model::{EpistemicLayer as L, FormalityLevel as F};
    use chrono::Duration;

    fn diamond() -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        g.add_evidence(evidence("ea", 0.9)).unwrap();
        g.add_evidence(evidence("ex", 0.8)).unwrap();
        for id in ["a", "b", "c", "d", "x"] {
            g.add_claim(claim(id, L::L2, F::F3)).unwrap();
        }
        g.attach_evidence("a", "ea").unwrap();
        g.attach_evidence("x", "ex").unwrap();
        g.link_dependency("b", "a").unwrap();
        g.link_dependency("c", "a").unwrap();
        g.link_dependency("d", "b").unwrap();
        g.link_dependency("d", "c").unwrap();
        g
    }

    #[test]
    fn incremental_touches_only_descendants() {
        let cfg = Config::default();
        let mut g = diamond();
        g.propagate(&cfg, t0(), PropagationMode::Full).unwrap();
        let before_x = g.claim("x").unwrap().cached_r_eff;
        g.set_evidence_score("ea", score(0.2)).unwrap();
        let touched = g
            .propagate(&cfg, t0(), PropagationMode::Incremental)
            .unwrap();
        assert_eq!(touched, vec!["a", "b", "c", "d"]);
        assert_eq!(g.claim("d").unwrap().cached_r_eff.value(), 0.2);
        assert_eq!(
            g.claim("x").unwrap().cached_r_eff.value().to_bits(),
            before_x.value().to_bits()
        );

        let mut full = g.clone();
        full.propagate(&cfg, t0(), PropagationMode::Full).unwrap();
        assert_eq!(full, g);
    }

    #[test]
    fn clock_change_recomputes_decaying_evidence() {
        let cfg = Config::default();
        let mut g = diamond();
        g.propagate(&cfg, t0(), PropagationMode::Full).unwrap();
        let late = g.evidence("ea").unwrap().valid_until + Duration::days(100);
        let touched = g
            .propagate(&cfg, late, PropagationMode::Incremental)
            .unwrap();
        assert!(touched.contains(&"d".to_string()));
        assert_eq!(g.claim("d").unwrap().cached_r_eff.value(), 0.0);
        let mut full = g.clone();
        full.propagate(&cfg, late, PropagationMode::Full).unwrap();
        assert_eq!(full, g);
    }

    #[test]
    fn config_change_forces_full_pass() {
        let mut g = diamond();
        g.propagate(&Config::default(), t0(), PropagationMode::Full)
            .unwrap();
        let cfg = Config {
            congruence_penalties: [0.2, 0.5],
            ..Config::default()
        };
        let touched = g
            .propagate(&cfg, t0(), PropagationMode::Incremental)
            .unwrap();
        assert_eq!(touched.len(), 5);
    }
}
