//! Design Rationale Records: an append-only, hash-chained log of ratified
//! decisions and the promotion history that produced them.
//!
//! ## Storage format
//!
//! ```text
//! {"digest_algorithm":"sha256","format_version":1}
//! {"claim":"c1",...,"prev_hash":"000…","this_hash":"9f2c…"}
//! {"claim":"c4",...,"prev_hash":"9f2c…","this_hash":"41ab…"}
//! ```
//!
//! Every line is the canonical JSON of its record (keys sorted, no
//! whitespace). `this_hash` is the SHA-256 of the canonical JSON of every
//! other field, `prev_hash` included, so editing any byte of a stored record
//! breaks either its own digest or the link from its successor.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fsm::ActorId;
use crate::graph::{InferenceMode, KnowledgeGraph, PropagationMode};
use crate::model::{Config, EpistemicLayer};
use crate::scope::Scope;
use crate::score::ReliabilityScore;

pub const FORMAT_VERSION: u32 = 1;
pub const DIGEST_ALGORITHM: &str = "sha256";
pub const GENESIS_HASH: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoreHeader {
    pub format_version: u32,
    pub digest_algorithm: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceProvenance {
    pub id: String,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrrStep {
    pub claim: String,
    pub mode: InferenceMode,
    pub layer: EpistemicLayer,
    pub actor: String,
    pub evidence: Vec<EvidenceProvenance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidityWindow {
    pub from: DateTime<Utc>,
    pub until: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignRationaleRecord {
    pub drr_id: String,
    pub claim: String,
    pub decision: String,
    pub steps: Vec<DrrStep>,
    pub final_r_eff: ReliabilityScore,
    pub scope_spec: Scope,
    pub validity_window: ValidityWindow,
    pub ratifier: ActorId,
    pub supersedes: Option<String>,
    pub prev_hash: String,
    pub this_hash: String,
}

impl DesignRationaleRecord {
    /// Canonical JSON of every field except `this_hash`.
    fn digest_input(&self) -> String {
        let mut v = serde_json::to_value(self).expect("serializable");
        v.as_object_mut().expect("object").remove("this_hash");
        v.to_string()
    }

    pub fn compute_hash(&self) -> String {
        hex::encode(Sha256::digest(self.digest_input().as_bytes()))
    }

    /// The exact line this record occupies in a store file.
    pub fn canonical_line(&self) -> String {
        serde_json::to_value(self)
            .expect("serializable")
            .to_string()
    }
}

/// Outcome of chain verification. Record indices are zero-based and do not
/// count the header line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ChainVerdict {
    Ok { records: usize },
    BadHeader { reason: String },
    FirstBadRecord { index: usize, reason: String },
}

impl ChainVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, ChainVerdict::Ok { .. })
    }
}

/// An append-only sequence of chained records. There is no API to edit or
/// remove a record once appended.
#[derive(Debug, Clone, PartialEq)]
pub struct DrrStore {
    header: StoreHeader,
    records: Vec<DesignRationaleRecord>,
}

impl Default for DrrStore {
    fn default() -> Self {
        DrrStore::new()
    }
}

impl DrrStore {
    pub fn new() -> Self {
        DrrStore {
            header: StoreHeader {
                format_version: FORMAT_VERSION,
                digest_algorithm: DIGEST_ALGORITHM.into(),
            },
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[DesignRationaleRecord] {
        &self.records
    }

    pub fn head_hash(&self) -> &str {
        self.records
            .last()
            .map_or(GENESIS_HASH, |r| r.this_hash.as_str())
    }

    pub fn header_line(&self) -> String {
        serde_json::to_value(&self.header)
            .expect("serializable")
            .to_string()
    }

    /// Chains `record` onto the head, filling in both digests. Returns the
    /// stored record.
    pub fn append(&mut self, mut record: DesignRationaleRecord) -> &DesignRationaleRecord {
        record.prev_hash = self.head_hash().to_string();
        record.this_hash = record.compute_hash();
        self.records.push(record);
        self.records.last().expect("just pushed")
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = self.header_line();
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.canonical_line());
            out.push('\n');
        }
        out
    }

    /// Loads a store, rejecting anything that does not verify.
    pub fn from_jsonl(text: &str) -> Result<DrrStore> {
        match verify_chain_text(text) {
            ChainVerdict::Ok { .. } => {}
            ChainVerdict::BadHeader { reason } => {
                return Err(Error::Persistence { line: 1, reason })
            }
            ChainVerdict::FirstBadRecord { index, reason } => {
                return Err(Error::Persistence {
                    line: index + 2,
                    reason,
                })
            }
        }
        let mut lines = text.lines().filter(|l| !l.is_empty());
        let header: StoreHeader = match lines.next() {
            Some(l) => serde_json::from_str(l).expect("verified"),
            None => return Ok(DrrStore::new()),
        };
        let records = lines
            .map(|l| serde_json::from_str(l).expect("verified"))
            .collect();
        Ok(DrrStore { header, records })
    }

    /// Most recent record for `claim`, if any.
    pub fn latest_for(&self, claim: &str) -> Option<&DesignRationaleRecord> {
        self.records.iter().rev().find(|r| r.claim == claim)
    }
}

/// Recomputes every digest and link of an in-memory store.
pub fn verify_chain(store: &DrrStore) -> ChainVerdict {
    verify_chain_text(&store.to_jsonl())
}

/// Verifies a store file: each record line must be canonical, carry a
/// correct digest, and link to its predecessor. An empty text is a valid
/// empty store.
pub fn verify_chain_text(text: &str) -> ChainVerdict {
    verify_chain_bytes(text.as_bytes())
}

/// As [`verify_chain_text`], for raw file contents that may not be UTF-8.
pub fn verify_chain_bytes(bytes: &[u8]) -> ChainVerdict {
    if bytes.is_empty() {
        return ChainVerdict::Ok { records: 0 };
    }
    let mut lines = bytes.split(|b| *b == b'\n');
    let header_line = lines.next().unwrap_or_default();
    let header = std::str::from_utf8(header_line)
        .map_err(|e| e.to_string())
        .and_then(|l| {
            serde_json::from_str::<StoreHeader>(l)
                .map_err(|e| e.to_string())
                .map(|h| (l, h))
        });
    match header {
        Ok((line, h))
            if h.digest_algorithm == DIGEST_ALGORITHM && h.format_version == FORMAT_VERSION =>
        {
            let canonical = serde_json::to_value(&h).expect("serializable").to_string();
            if canonical != line {
                return ChainVerdict::BadHeader {
                    reason: "header is not canonical".into(),
                };
            }
        }
        Ok((_, h)) => {
            return ChainVerdict::BadHeader {
                reason: format!(
                    "unsupported format {} / {}",
                    h.format_version, h.digest_algorithm
                ),
            }
        }
        Err(reason) => return ChainVerdict::BadHeader { reason },
    }
    let mut prev = GENESIS_HASH.to_string();
    let mut count = 0;
    let body: Vec<&[u8]> = lines.collect();
    for (index, raw) in body.iter().enumerate() {
        // The file ends with a newline, leaving one empty trailing piece.
        if raw.is_empty() && index + 1 == body.len() {
            break;
        }
        let bad = |reason: String| ChainVerdict::FirstBadRecord { index, reason };
        let line = match std::str::from_utf8(raw) {
            Ok(l) => l,
            Err(e) => return bad(format!("not UTF-8: {e}")),
        };
        let record: DesignRationaleRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return bad(format!("unparseable: {e}")),
        };
        if record.canonical_line() != line {
            return bad("record is not in canonical form".into());
        }
        if record.prev_hash != prev {
            return bad("prev_hash does not match the preceding record".into());
        }
        if record.compute_hash() != record.this_hash {
            return bad("this_hash does not match the record contents".into());
        }
        if let Err(e) = check_record(&record) {
            return bad(e.to_string());
        }
        prev = record.this_hash;
        count += 1;
    }
    ChainVerdict::Ok { records: count }
}

fn check_record(r: &DesignRationaleRecord) -> Result<()> {
    if r.scope_spec.is_bottom() {
        return Err(invalid(&r.claim, "scope is BOTTOM"));
    }
    if r.validity_window.from >= r.validity_window.until {
        return Err(invalid(&r.claim, "validity window is empty"));
    }
    if r.steps.is_empty() {
        return Err(Error::EmptyHistory {
            claim: r.claim.clone(),
        });
    }
    for s in &r.steps {
        if s.mode.layer() != s.layer {
            return Err(invalid(&r.claim, "step mode does not match its layer"));
        }
    }
    Ok(())
}

fn invalid(claim: &str, reason: &str) -> Error {
    Error::InvalidDecision {
        claim: claim.into(),
        reason: reason.into(),
    }
}

/// Builds a record for a ratifiable claim and appends it to `store`.
/// The claim must pass [`KnowledgeGraph::check_ratifiable`]; its score is
/// brought up to date first so the record carries the current value.
pub fn finalize_drr(
    graph: &mut KnowledgeGraph,
    store: &mut DrrStore,
    claim_id: &str,
    ratifier: &ActorId,
    window: ValidityWindow,
    cfg: &Config,
) -> Result<DesignRationaleRecord> {
    graph.check_ratifiable(claim_id, ratifier)?;
    let claim = graph.claim(claim_id)?;
    let steps = claim
        .history
        .iter()
        .map(|h| {
            Ok(DrrStep {
                claim: claim.id.clone(),
                mode: h.mode,
                layer: h.layer,
                actor: h.actor.clone(),
                evidence: h
                    .evidence
                    .iter()
                    .map(|e| {
                        Ok(EvidenceProvenance {
                            id: e.clone(),
                            provenance: graph.evidence(e)?.provenance.clone(),
                        })
                    })
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut record = DesignRationaleRecord {
        drr_id: format!("drr-{}", store.records().len() + 1),
        claim: claim.id.clone(),
        decision: claim.statement.clone(),
        steps,
        final_r_eff: ReliabilityScore::ZERO,
        scope_spec: claim.scope.clone(),
        validity_window: window,
        ratifier: ratifier.clone(),
        supersedes: store.latest_for(claim_id).map(|r| r.drr_id.clone()),
        prev_hash: String::new(),
        this_hash: String::new(),
    };
    check_record(&record)?;
    graph.propagate(cfg, window.from, PropagationMode::Incremental)?;
    record.final_r_eff = graph.claim(claim_id)?.cached_r_eff;
    Ok(store.append(record).clone())
}

/// Ratifies a corroborated claim: emits its record and moves the claim to
/// the ratified phase.
pub fn ratify(
    graph: &mut KnowledgeGraph,
    store: &mut DrrStore,
    claim_id: &str,
    ratifier: &ActorId,
    window: ValidityWindow,
    cfg: &Config,
) -> Result<DesignRationaleRecord> {
    let record = finalize_drr(graph, store, claim_id, ratifier, window, cfg)?;
    graph.mark_ratified(claim_id)?;
    Ok(record)
}
