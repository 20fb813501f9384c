use adi_core::fsm::{ActorId, ActorKind};
use adi_core::gamma::{aggregate, OperatorKind};
use adi_core::graph::{
    owa_conservative, probabilistic_sum, Bound, ClaimNode, Evidence, KnowledgeGraph, Timestamp,
};
use adi_core::model::{Config, EpistemicLayer, EvidenceRole, FormalityLevel, VerificationMethod};
use adi_core::scope::Scope;
use adi_core::ReliabilityScore;
use proptest::prelude::*;

fn t0() -> Timestamp {
    "2026-01-01T00:00:00Z".parse().unwrap()
}

fn s(v: f64) -> ReliabilityScore {
    ReliabilityScore::new(v).unwrap()
}

fn claim(id: &str, layer: EpistemicLayer, f: FormalityLevel) -> ClaimNode {
    ClaimNode::new(
        id,
        id,
        f,
        Scope::TOP,
        ActorId::new("gen", ActorKind::Generator).unwrap(),
    )
    .at_layer(layer)
}

fn evidence(id: &str, raw: f64, f: FormalityLevel, cfg: &Config) -> Evidence {
    Evidence::new(
        id,
        s(raw),
        f,
        Scope::TOP,
        VerificationMethod::ExecutedVerified,
        EvidenceRole::Other,
        t0(),
        cfg,
    )
}

fn chain(raws: &[f64]) -> KnowledgeGraph {
    let cfg = Config::default();
    let mut g = KnowledgeGraph::new();
    for (i, raw) in raws.iter().enumerate() {
        let (c, e) = (format!("S{}", i + 1), format!("e{}", i + 1));
        g.add_evidence(evidence(&e, *raw, FormalityLevel::F2, &cfg))
            .unwrap();
        g.add_claim(claim(&c, EpistemicLayer::L2, FormalityLevel::F2))
            .unwrap();
        g.attach_evidence(&c, &e).unwrap();
        if i > 0 {
            g.link_dependency(&c, &format!("S{i}")).unwrap();
        }
    }
    g
}

#[test]
fn worked_chain_is_bounded_by_its_weakest_step() {
    let cfg = Config::default();
    let mut g = chain(&[0.95, 0.85, 0.40]);
    let b = g.breakdown("S3", &cfg, t0()).unwrap();
    assert_eq!(b.r_eff, 0.40);
    assert_eq!(b.dominating, Bound::Evidence("e3".into()));
    assert_eq!(b.weakest_link, "S3");
    let mean = aggregate(OperatorKind::Mean, &[s(0.95), s(0.85), s(0.40)]).unwrap();
    assert!((mean.value() - 2.2 / 3.0).abs() < 1e-9);
}

#[test]
fn weak_premise_is_named_as_the_weakest_link() {
    let cfg = Config::default();
    let mut g = chain(&[0.40, 0.85, 0.95]);
    let b = g.breakdown("S3", &cfg, t0()).unwrap();
    assert_eq!(b.r_eff, 0.40);
    assert_eq!(b.dominating, Bound::Dependency("S2".into()));
    assert_eq!(b.weakest_link, "S1");
}

#[test]
fn ceilings_bound_claims_without_support() {
    let cfg = Config::default();
    let mut g = KnowledgeGraph::new();
    let cases = [
        (EpistemicLayer::L0, FormalityLevel::F3, 0.35),
        (EpistemicLayer::L1, FormalityLevel::F3, 0.75),
        (EpistemicLayer::L2, FormalityLevel::F0, 0.70),
        (EpistemicLayer::L2, FormalityLevel::F1, 0.85),
        (EpistemicLayer::L2, FormalityLevel::F2, 0.95),
        (EpistemicLayer::L2, FormalityLevel::F3, 0.99),
    ];
    for (i, (layer, f, want)) in cases.into_iter().enumerate() {
        let id = format!("c{i}");
        g.add_claim(claim(&id, layer, f)).unwrap();
        assert_eq!(
            g.effective_reliability(&id, &cfg, t0()).unwrap().value(),
            want,
            "{layer} {f}"
        );
    }
}

#[test]
fn tier_one_operators() {
    let p = probabilistic_sum(&[s(0.5), s(0.5)]).value();
    assert!((p - 0.75).abs() < 1e-12);
    let o = owa_conservative(&[s(1.0), s(0.0)]).value();
    assert!((o - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(owa_conservative(&[s(0.6)]).value(), 0.6);
}

fn dag() -> impl Strategy<Value = Vec<(f64, Vec<usize>)>> {
    (1usize..8).prop_flat_map(|n| {
        (0..n)
            .map(|i| {
                (
                    0u32..=100,
                    proptest::collection::vec(0..i.max(1), 0..=i.min(3)),
                )
            })
            .collect::<Vec<_>>()
            .prop_map(|nodes| {
                nodes
                    .into_iter()
                    .enumerate()
                    .map(|(i, (raw, deps))| {
                        let deps = if i == 0 { vec![] } else { deps };
                        (f64::from(raw) / 100.0, deps)
                    })
                    .collect()
            })
    })
}

fn build(nodes: &[(f64, Vec<usize>)]) -> KnowledgeGraph {
    let cfg = Config::default();
    let mut g = KnowledgeGraph::new();
    for (i, (raw, deps)) in nodes.iter().enumerate() {
        let (c, e) = (format!("c{i}"), format!("e{i}"));
        g.add_evidence(evidence(&e, *raw, FormalityLevel::F3, &cfg))
            .unwrap();
        g.add_claim(claim(&c, EpistemicLayer::L2, FormalityLevel::F3))
            .unwrap();
        g.attach_evidence(&c, &e).unwrap();
        for d in deps {
            g.link_dependency(&c, &format!("c{d}")).unwrap();
        }
    }
    g
}

proptest! {
    #[test]
    fn score_is_the_smallest_listed_term(nodes in dag()) {
        let cfg = Config::default();
        let mut g = build(&nodes);
        for i in 0..nodes.len() {
            let b = g.breakdown(&format!("c{i}"), &cfg, t0()).unwrap();
            let terms = b
                .evidence
                .iter()
                .filter_map(|e| e.adjusted)
                .chain(b.dependencies.iter().map(|d| d.term))
                .chain([b.layer_ceiling, b.formality_ceiling]);
            let smallest = terms.fold(f64::INFINITY, f64::min);
            prop_assert_eq!(b.r_eff, smallest);
            for d in &b.dependencies {
                prop_assert!(b.r_eff <= d.r_eff);
            }
        }
    }

    #[test]
    fn stronger_evidence_never_lowers_a_score(nodes in dag(), pick in any::<prop::sample::Index>(), bump in 0u32..=100) {
        let cfg = Config::default();
        let k = pick.index(nodes.len());
        let mut raised = nodes.clone();
        raised[k].0 = (raised[k].0 + f64::from(bump) / 100.0).min(1.0);
        let (mut a, mut b) = (build(&nodes), build(&raised));
        for i in 0..nodes.len() {
            let id = format!("c{i}");
            let before = a.effective_reliability(&id, &cfg, t0()).unwrap();
            let after = b.effective_reliability(&id, &cfg, t0()).unwrap();
            prop_assert!(after >= before, "{} fell from {} to {}", id, before.value(), after.value());
        }
    }
}
