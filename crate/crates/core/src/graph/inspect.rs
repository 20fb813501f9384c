use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use super::KnowledgeGraph;
use crate::error::Result;
use crate::model::{EpistemicLayer, FormalityLevel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Claim,
    Evidence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InspectNode {
    pub kind: NodeKind,
    pub id: String,
    pub depth: usize,
    /// Claims only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layer: Option<EpistemicLayer>,
    /// Claims: cached effective reliability. Evidence: raw score.
    pub score: f64,
    pub formality: FormalityLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InspectReport {
    pub root: String,
    pub nodes: Vec<InspectNode>,
}

impl KnowledgeGraph {
    /// Breadth-first walk over dependency and evidence edges from `root`.
    /// Each reachable node appears once at its shortest depth; the report
    /// is ordered by depth, then id, then kind.
    pub fn inspect_dependencies(&self, root: &str) -> Result<InspectReport> {
        self.claim(root)?;
        let mut seen: BTreeMap<(NodeKind, String), usize> = BTreeMap::new();
        let mut queue = VecDeque::from([(root.to_string(), 0usize)]);
        seen.insert((NodeKind::Claim, root.to_string()), 0);
        while let Some((id, depth)) = queue.pop_front() {
            let claim = self.claim(&id)?;
            for e in &claim.evidence_refs {
                seen.entry((NodeKind::Evidence, e.clone()))
                    .or_insert(depth + 1);
            }
            for d in &claim.dependency_refs {
                let key = (NodeKind::Claim, d.clone());
                if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(key) {
                    e.insert(depth + 1);
                    queue.push_back((d.clone(), depth + 1));
                }
            }
        }
        let mut nodes = seen
            .into_iter()
            .map(|((kind, id), depth)| {
                Ok(match kind {
                    NodeKind::Claim => {
                        let c = self.claim(&id)?;
                        InspectNode {
                            kind,
                            depth,
                            layer: Some(c.layer),
                            score: c.cached_r_eff.value(),
                            formality: c.formality,
                            id,
                        }
                    }
                    NodeKind::Evidence => {
                        let e = self.evidence(&id)?;
                        InspectNode {
                            kind,
                            depth,
                            layer: None,
                            score: e.raw_score.value(),
                            formality: e.formality,
                            id,
                        }
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        nodes.sort_by(|a, b| (a.depth, &a.id, a.kind).cmp(&(b.depth, &b.id, b.kind)));
        Ok(InspectReport {
            root: root.to_string(),
            nodes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{claim, evidence};
    use super::*;
    use crate::model::FormalityLevel as F;

    #[test]
    fn diamond_reports_shared_premise_once() {
        let mut g = KnowledgeGraph::new();
        g.add_evidence(evidence("ea", 0.9)).unwrap();
        for id in ["a", "b", "c", "d"] {
            g.add_claim(claim(id, EpistemicLayer::L1, F::F1)).unwrap();
        }
        g.attach_evidence("a", "ea").unwrap();
        g.attach_evidence("b", "ea").unwrap();
        g.link_dependency("b", "a").unwrap();
        g.link_dependency("c", "a").unwrap();
        g.link_dependency("d", "b").unwrap();
        g.link_dependency("d", "c").unwrap();
        let r = g.inspect_dependencies("d").unwrap();
        let ids: Vec<_> = r.nodes.iter().map(|n| (n.id.as_str(), n.depth)).collect();
        assert_eq!(ids, vec![("d", 0), ("b", 1), ("c", 1), ("a", 2), ("ea", 2)]);
        assert!(r
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Claim)
            .all(|n| n.layer == Some(EpistemicLayer::L1)));
    }

    #[test]
    fn singleton_and_missing() {
        let mut g = KnowledgeGraph::new();
        g.add_claim(claim("solo", EpistemicLayer::L0, F::F0))
            .unwrap();
        let r = g.inspect_dependencies("solo").unwrap();
        assert_eq!(r.nodes.len(), 1);
        assert_eq!(r.nodes[0].id, "solo");
        assert_eq!(
            g.inspect_dependencies("nope").unwrap_err().code(),
            "MissingRef"
        );
    }
}
