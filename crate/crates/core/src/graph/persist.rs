//! Line-delimited JSON persistence: one entity per line, tagged by `kind`.
//! Loading is independent of line order; referential integrity and
//! acyclicity are checked once everything is read.

use serde::{Deserialize, Serialize};

use super::{ClaimNode, Evidence, KnowledgeGraph};
use crate::error::{Error, Result};
use crate::score::{make_score, LenientReal};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Evidence(Evidence),
    Claim(ClaimNode),
}

impl KnowledgeGraph {
    /// Evidence first, then claims, each sorted by id.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in self.evidence.values() {
            out.push_str(
                &serde_json::to_string(&Record::Evidence(e.clone())).expect("serializable"),
            );
            out.push('\n');
        }
        for c in self.claims.values() {
            out.push_str(&serde_json::to_string(&Record::Claim(c.clone())).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<KnowledgeGraph> {
        let mut g = KnowledgeGraph::new();
        let mut claims = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value =
                serde_json::from_str(line).map_err(|e| Error::Persistence {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            for field in ["raw_score", "cached_r_eff"] {
                if let Some(v) = value.get(field) {
                    let raw: LenientReal =
                        serde_json::from_value(v.clone()).map_err(|e| Error::Persistence {
                            line: line_no,
                            reason: format!("{field}: {e}"),
                        })?;
                    make_score(raw.0).map_err(|_| Error::RangeViolation {
                        context: format!("line {line_no} {field}"),
                        value: raw.0,
                    })?;
                }
            }
            let record: Record = serde_json::from_value(value).map_err(|e| Error::Persistence {
                line: line_no,
                reason: e.to_string(),
            })?;
            match record {
                Record::Evidence(e) => {
                    if e.collected_at > e.valid_until {
                        return Err(Error::RangeViolation {
                            context: format!("line {line_no} evidence {} validity window", e.id),
                            value: (e.valid_until - e.collected_at).num_seconds() as f64,
                        });
                    }
                    if g.evidence.insert(e.id.clone(), e).is_some() {
                        return Err(Error::Persistence {
                            line: line_no,
                            reason: "duplicate evidence id".into(),
                        });
                    }
                }
                Record::Claim(c) => claims.push((line_no, c)),
            }
        }
        for (line_no, c) in claims {
            if g.evidence.contains_key(&c.id) {
                return Err(Error::Persistence {
                    line: line_no,
                    reason: format!("id {} used twice", c.id),
                });
            }
            if g.claims.insert(c.id.clone(), c).is_some() {
                return Err(Error::Persistence {
                    line: line_no,
                    reason: "duplicate claim id".into(),
                });
            }
        }
        for c in g.claims.values() {
            for e in &c.evidence_refs {
                g.evidence(e)?;
            }
            for d in c.dependency_refs.iter().chain(&c.contradiction_refs) {
                g.claim(d)?;
            }
            for d in &c.contradiction_refs {
                if !g.claims[d].contradiction_refs.contains(&c.id) {
                    return Err(Error::Invalid(format!(
                        "contradiction {} -> {d} is not symmetric",
                        c.id
                    )));
                }
            }
        }
        g.rebuild_indexes();
        g.topological_order()?;
        g.mark_all_dirty();
        Ok(g)
    }
}
