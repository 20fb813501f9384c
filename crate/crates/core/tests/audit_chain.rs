use adi_core::drr::{
    ratify, verify_chain, verify_chain_text, ChainVerdict, DrrStore, ValidityWindow,
};
use adi_core::fsm::{ActorId, ActorKind, PromotionRequest};
use adi_core::graph::{Evidence, KnowledgeGraph, Timestamp};
use adi_core::model::{Config, EpistemicLayer, EvidenceRole, FormalityLevel, VerificationMethod};
use adi_core::scope::Scope;
use adi_core::ReliabilityScore;
use chrono::Duration;

fn t0() -> Timestamp {
    "2026-01-01T00:00:00Z".parse().unwrap()
}

fn corroborated(g: &mut KnowledgeGraph, cfg: &Config, n: usize) -> String {
    let gen = ActorId::new("llm-1", ActorKind::Generator).unwrap();
    let id = g
        .propose(
            format!("claim {n}"),
            Scope::TOP,
            FormalityLevel::F2,
            gen,
            t0(),
        )
        .unwrap();
    let e = g.fresh_id("e");
    let raw = ReliabilityScore::new(0.5 + n as f64 / 10.0).unwrap();
    let ev = Evidence::new(
        &e,
        raw,
        FormalityLevel::F2,
        Scope::TOP,
        VerificationMethod::ExecutedVerified,
        EvidenceRole::Performance,
        t0(),
        cfg,
    );
    g.add_evidence(ev.with_provenance("benchmark run")).unwrap();
    let checker = ActorId::new("checker", ActorKind::Verifier).unwrap();
    for (target, evidence) in [(EpistemicLayer::L1, vec![]), (EpistemicLayer::L2, vec![e])] {
        g.promote(
            &PromotionRequest {
                claim: id.clone(),
                target,
                evidence,
                actor: checker.clone(),
            },
            cfg,
            t0(),
        )
        .unwrap();
    }
    id
}

fn store_text(n: usize) -> String {
    let cfg = Config::default();
    let mut g = KnowledgeGraph::new();
    let mut store = DrrStore::new();
    let alice = ActorId::new("alice", ActorKind::Human).unwrap();
    for i in 0..n {
        let id = corroborated(&mut g, &cfg, i);
        let window = ValidityWindow {
            from: t0(),
            until: t0() + Duration::days(30),
        };
        ratify(&mut g, &mut store, &id, &alice, window, &cfg).unwrap();
    }
    assert_eq!(verify_chain(&store), ChainVerdict::Ok { records: n });
    store.to_jsonl()
}

#[test]
fn store_text_round_trips() {
    let text = store_text(3);
    let store = DrrStore::from_jsonl(&text).unwrap();
    assert_eq!(store.records().len(), 3);
    assert_eq!(store.to_jsonl(), text);
    assert_eq!(store.records()[1].prev_hash, store.records()[0].this_hash);
    assert_eq!(store.head_hash(), store.records()[2].this_hash);
}

#[test]
fn every_flipped_byte_is_localized() {
    let text = store_text(3);
    let header_end = text.find('\n').unwrap() + 1;
    let starts: Vec<usize> = std::iter::once(header_end)
        .chain(text.match_indices('\n').skip(1).map(|(i, _)| i + 1))
        .collect();
    let bytes = text.as_bytes();
    for pos in 0..bytes.len() {
        let mut tampered = bytes.to_vec();
        tampered[pos] ^= 0x01;
        let Ok(tampered) = String::from_utf8(tampered) else {
            continue;
        };
        let verdict = verify_chain_text(&tampered);
        if pos < header_end {
            assert!(!verdict.is_ok(), "header byte {pos} flipped unnoticed");
            continue;
        }
        let record = starts.iter().rposition(|s| *s <= pos).unwrap();
        match verdict {
            ChainVerdict::FirstBadRecord { index, .. } => assert_eq!(index, record, "byte {pos}"),
            other => panic!("byte {pos} in record {record} gave {other:?}"),
        }
    }
}

#[test]
fn truncation_and_reordering_are_detected() {
    let text = store_text(3);
    let lines: Vec<&str> = text.lines().collect();
    let swapped = [lines[0], lines[2], lines[1], lines[3]].join("\n") + "\n";
    assert!(matches!(
        verify_chain_text(&swapped),
        ChainVerdict::FirstBadRecord { index: 0, .. }
    ));
    let dropped = [lines[0], lines[1], lines[3]].join("\n") + "\n";
    assert!(matches!(
        verify_chain_text(&dropped),
        ChainVerdict::FirstBadRecord { index: 1, .. }
    ));
    let prefix = [lines[0], lines[1]].join("\n") + "\n";
    assert_eq!(verify_chain_text(&prefix), ChainVerdict::Ok { records: 1 });
}

#[test]
fn a_second_decision_on_a_claim_supersedes_the_first() {
    let cfg = Config::default();
    let mut store = DrrStore::new();
    let alice = ActorId::new("alice", ActorKind::Human).unwrap();
    let window = ValidityWindow {
        from: t0(),
        until: t0() + Duration::days(30),
    };
    let mut g = KnowledgeGraph::new();
    let id = corroborated(&mut g, &cfg, 1);
    let first = ratify(&mut g, &mut store, &id, &alice, window, &cfg).unwrap();
    assert_eq!(first.supersedes, None);
    assert_eq!(
        ratify(&mut g, &mut store, &id, &alice, window, &cfg)
            .unwrap_err()
            .code(),
        "IllegalTransition"
    );

    let mut rebuilt = KnowledgeGraph::new();
    assert_eq!(corroborated(&mut rebuilt, &cfg, 2), id);
    let second = ratify(&mut rebuilt, &mut store, &id, &alice, window, &cfg).unwrap();
    assert_eq!(second.supersedes.as_deref(), Some(first.drr_id.as_str()));
    assert_eq!(second.prev_hash, first.this_hash);
    assert_eq!(store.latest_for(&id).unwrap().drr_id, second.drr_id);
    assert!(verify_chain(&store).is_ok());
}
