//! Human-readable renderings of command results.

use std::fmt::Write;

use adi_core::drr::ChainVerdict;
use adi_core::graph::{Bound, Breakdown, ClaimStatus, InspectReport, KnowledgeGraph, NodeKind};
use serde_json::json;

fn status(s: ClaimStatus) -> &'static str {
    match s {
        ClaimStatus::Active => "active",
        ClaimStatus::Stale => "stale",
        ClaimStatus::Discarded => "discarded",
        ClaimStatus::Contradicted => "contradicted",
    }
}

fn bound(b: &Bound, by: &Breakdown) -> String {
    match b {
        Bound::Evidence(id) => {
            let v = by
                .evidence
                .iter()
                .find(|e| &e.id == id)
                .and_then(|e| e.adjusted)
                .unwrap_or(by.r_eff);
            format!("evidence {id} ({v})")
        }
        Bound::Dependency(id) => {
            let v = by
                .dependencies
                .iter()
                .find(|d| &d.id == id)
                .map_or(by.r_eff, |d| d.term);
            format!("premise {id} ({v})")
        }
        Bound::LayerCeiling => format!("layer ceiling ({})", by.layer_ceiling),
        Bound::FormalityCeiling => format!("formality ceiling ({})", by.formality_ceiling),
    }
}

pub fn breakdown(b: &Breakdown, g: &KnowledgeGraph) -> String {
    let mut s = String::new();
    let claim = g.claim(&b.claim).expect("scored claim exists");
    let _ = writeln!(
        s,
        "{}: R_eff = {} ({} of the terms below)",
        b.claim,
        b.r_eff,
        b.operator.name()
    );
    for e in &b.evidence {
        match e.adjusted {
            Some(v) => {
                let _ = writeln!(
                    s,
                    "  evidence {:<12} raw {}  {}  {}  decay {}  -> {}",
                    e.id, e.raw, e.method, e.congruence, e.decay, v
                );
            }
            None => {
                let _ = writeln!(
                    s,
                    "  evidence {:<12} raw {}  excluded: scope does not transfer",
                    e.id, e.raw
                );
            }
        }
    }
    for d in &b.dependencies {
        let _ = writeln!(
            s,
            "  premise  {:<12} R_eff {}  {}  penalty {}  -> {}",
            d.id, d.r_eff, d.congruence, d.penalty, d.term
        );
    }
    let _ = writeln!(
        s,
        "  layer ceiling      {}  {}",
        claim.layer, b.layer_ceiling
    );
    let _ = writeln!(
        s,
        "  formality ceiling  {}  {}",
        claim.formality, b.formality_ceiling
    );
    let _ = writeln!(s, "dominating: {}", bound(&b.dominating, b));
    let _ = write!(s, "weakest link: {}", b.weakest_link);
    s
}

pub fn inspect(r: &InspectReport) -> String {
    let mut s = String::new();
    for n in &r.nodes {
        let indent = "  ".repeat(n.depth);
        match n.kind {
            NodeKind::Claim => {
                let layer = n.layer.map(|l| l.to_string()).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{indent}{} [{layer} {}] R_eff {}",
                    n.id, n.formality, n.score
                );
            }
            NodeKind::Evidence => {
                let _ = writeln!(
                    s,
                    "{indent}{} (evidence {}) raw {}",
                    n.id, n.formality, n.score
                );
            }
        }
    }
    s
}

fn verdict(v: &ChainVerdict) -> String {
    match v {
        ChainVerdict::Ok { records } => format!("audit chain ok ({records} records)"),
        ChainVerdict::BadHeader { reason } => format!("audit chain BROKEN at header: {reason}"),
        ChainVerdict::FirstBadRecord { index, reason } => {
            format!("audit chain BROKEN at record {index}: {reason}")
        }
    }
}

pub fn report(g: &KnowledgeGraph, v: &ChainVerdict) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:<5} {:<4} {:<10} {:<12} R_eff",
        "claim", "layer", "F", "phase", "status"
    );
    for c in g.claims() {
        let _ = writeln!(
            s,
            "{:<12} {:<5} {:<4} {:<10} {:<12} {}",
            c.id,
            c.layer.to_string(),
            c.formality.to_string(),
            c.phase.to_string(),
            status(c.status),
            c.cached_r_eff
        );
    }
    let _ = writeln!(s, "{} evidence items", g.evidence_items().count());
    let _ = write!(s, "{}", verdict(v));
    s
}

pub fn report_json(g: &KnowledgeGraph, v: &ChainVerdict) -> serde_json::Value {
    let claims: Vec<_> = g
        .claims()
        .map(|c| {
            json!({
                "id": c.id,
                "layer": c.layer,
                "formality": c.formality,
                "phase": c.phase,
                "status": c.status,
                "scope": c.scope,
                "r_eff": c.cached_r_eff,
            })
        })
        .collect();
    json!({
        "claims": claims,
        "evidence_count": g.evidence_items().count(),
        "audit": v,
    })
}
