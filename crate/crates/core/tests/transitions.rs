use adi_core::fsm::{transition, ActorId, ActorKind, Event, Phase, PromotionRequest};
use adi_core::graph::{KnowledgeGraph, Timestamp};
use adi_core::model::{Config, EpistemicLayer, FormalityLevel};
use adi_core::scope::Scope;

const TABLE: &str = "
idle start abduction
abduction hypothesize deduction
deduction verify induction
induction validate ratified
induction ratify ratified
ratified deploy operation
";

fn expected(p: Phase, e: Event) -> Option<Phase> {
    if p == Phase::Operation {
        return None;
    }
    if e == Event::Reset {
        return Some(Phase::Idle);
    }
    TABLE.lines().filter(|l| !l.is_empty()).find_map(|l| {
        let parts: Vec<&str> = l.split(' ').collect();
        (parts[0] == p.token() && parts[1] == e.token()).then(|| parts[2].parse().unwrap())
    })
}

#[test]
fn every_pair_matches_the_table() {
    for p in Phase::ALL {
        for e in Event::ALL {
            match (transition(p, e), expected(p, e)) {
                (Ok(got), Some(want)) => assert_eq!(got, want, "{p} --{e}->"),
                (Err(err), None) => assert_eq!(err.code(), "IllegalTransition"),
                (got, want) => panic!("{p} --{e}-> gave {got:?}, expected {want:?}"),
            }
        }
    }
}

#[test]
fn tokens_round_trip() {
    for p in Phase::ALL {
        assert_eq!(p.token().parse::<Phase>().unwrap(), p);
    }
    for e in Event::ALL {
        assert_eq!(e.token().parse::<Event>().unwrap(), e);
    }
    assert!("ratifying".parse::<Phase>().is_err());
}

#[test]
fn same_id_is_the_same_party_whatever_the_kind() {
    let t0: Timestamp = "2026-01-01T00:00:00Z".parse().unwrap();
    let cfg = Config::default();
    let mut g = KnowledgeGraph::new();
    let gen = ActorId::new("llm-1", ActorKind::Generator).unwrap();
    let id = g
        .propose("x", Scope::TOP, FormalityLevel::F1, gen, t0)
        .unwrap();
    for kind in [ActorKind::Generator, ActorKind::Verifier, ActorKind::Human] {
        let actor = ActorId::new("llm-1", kind).unwrap();
        let req = PromotionRequest {
            claim: id.clone(),
            target: EpistemicLayer::L1,
            evidence: vec![],
            actor,
        };
        assert_eq!(
            g.promote(&req, &cfg, t0).unwrap_err().code(),
            "SelfVerification"
        );
    }
    let other = ActorId::new("llm-2", ActorKind::Verifier).unwrap();
    let req = PromotionRequest {
        claim: id.clone(),
        target: EpistemicLayer::L1,
        evidence: vec![],
        actor: other,
    };
    assert_eq!(g.promote(&req, &cfg, t0).unwrap().phase, Phase::Deduction);
}
