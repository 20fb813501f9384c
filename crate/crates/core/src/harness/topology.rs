//! Propagation over chains, diamonds, random DAGs, and mixed
//! serial/parallel graphs.

use std::collections::BTreeSet;

use chrono::Duration;
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::Index;
use proptest::test_runner::TestCaseResult;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gen::{claim_id, evidence_id, t0, topology_fixture, unit, Fixture};
use super::{Category, Ctx, Property};
use crate::gamma::OperatorKind;
use crate::graph::{KnowledgeGraph, PropagationMode};
use crate::model::Config;
use crate::score::ReliabilityScore;

fn bits(g: &KnowledgeGraph) -> Vec<(String, u64)> {
    g.claims()
        .map(|c| (c.id.clone(), c.cached_r_eff.value().to_bits()))
        .collect()
}

/// Sets evidence `k` (counted across the fixture) to `raw`. Returns its id.
fn perturb(g: &mut KnowledgeGraph, fx: &Fixture, k: &Index, raw: f64) -> Option<String> {
    let count = fx.evidence_count();
    if count == 0 {
        return None;
    }
    let (n, j) = fx.nth_evidence(k.index(count)).expect("in range");
    let id = evidence_id(n, j);
    g.set_evidence_score(&id, ReliabilityScore::new(raw).expect("in range"))
        .expect("exists");
    Some(id)
}

fn with_fixture<S: Strategy + 'static>(
    name: &str,
    extra: fn() -> S,
    check: fn(&Ctx, &Fixture, S::Value) -> TestCaseResult,
) -> Property
where
    S::Value: std::fmt::Debug + 'static,
{
    Property::new(name, Category::GraphTopology, move |ctx: &Ctx| {
        ctx.check((topology_fixture(), extra()), |(fx, x)| check(ctx, &fx, x))
    })
}

pub(super) fn properties() -> Vec<Property> {
    vec![
        with_fixture(
            "topology_incremental_equals_full",
            || (vec((any::<Index>(), unit()), 1..=4), 0i64..=200),
            incremental_equals_full,
        ),
        with_fixture(
            "topology_perturbation_locality",
            || (any::<Index>(), unit()),
            perturbation_locality,
        ),
        with_fixture(
            "topology_cycle_rejected",
            || (any::<Index>(), any::<Index>()),
            cycle_rejected,
        ),
        with_fixture(
            "topology_order_respects_premises",
            || Just(()),
            |_, fx, ()| {
                let g = fx.build(&Config::default(), OperatorKind::GodelMin);
                let order = g.topological_order().expect("acyclic");
                prop_assert_eq!(order.len(), fx.nodes.len());
                let pos = |id: &str| order.iter().position(|o| o == id).expect("listed");
                for (i, n) in fx.nodes.iter().enumerate() {
                    for d in &n.deps {
                        prop_assert!(
                            pos(&claim_id(*d)) < pos(&claim_id(i)),
                            "premise {d} after claim {i}"
                        );
                    }
                }
                Ok(())
            },
        ),
        with_fixture(
            "topology_edges_never_gain",
            || Just(()),
            |ctx, fx, ()| {
                let g = fx.propagated(&Config::default(), ctx.op);
                for c in g.claims() {
                    for d in &c.dependency_refs {
                        let p = g.claim(d).expect("exists").cached_r_eff;
                        prop_assert!(
                            c.cached_r_eff <= p,
                            "{} at {} above premise {d} at {}",
                            c.id,
                            c.cached_r_eff,
                            p
                        );
                    }
                }
                Ok(())
            },
        ),
        with_fixture(
            "topology_ancestor_bound",
            || Just(()),
            |ctx, fx, ()| {
                let g = fx.propagated(&Config::default(), ctx.op);
                for c in g.claims() {
                    let mut stack: Vec<String> = c.dependency_refs.iter().cloned().collect();
                    let mut seen = BTreeSet::new();
                    while let Some(a) = stack.pop() {
                        if !seen.insert(a.clone()) {
                            continue;
                        }
                        let anc = g.claim(&a).expect("exists");
                        prop_assert!(
                            c.cached_r_eff <= anc.cached_r_eff,
                            "{} above ancestor {a}",
                            c.id
                        );
                        stack.extend(anc.dependency_refs.iter().cloned());
                    }
                }
                Ok(())
            },
        ),
        with_fixture(
            "topology_persistence_round_trip",
            || Just(()),
            |ctx, fx, ()| {
                let cfg = Config::default();
                let g = fx.propagated(&cfg, ctx.op);
                let text = g.to_jsonl();
                let mut back = KnowledgeGraph::from_jsonl(&text)
                    .expect("own output loads")
                    .with_aggregator(ctx.op);
                prop_assert!(back == g);
                prop_assert_eq!(back.to_jsonl(), text);
                back.propagate(&cfg, t0(), PropagationMode::Incremental)
                    .expect("acyclic");
                prop_assert_eq!(bits(&back), bits(&g));
                Ok(())
            },
        ),
        with_fixture(
            "topology_persistence_order_independent",
            any::<u64>,
            |ctx, fx, seed| {
                let g = fx.propagated(&Config::default(), ctx.op);
                let text = g.to_jsonl();
                let mut lines: Vec<&str> = text.lines().collect();
                lines.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                let back =
                    KnowledgeGraph::from_jsonl(&lines.join("\n")).expect("loads in any order");
                prop_assert!(back == g);
                Ok(())
            },
        ),
        with_fixture(
            "topology_contradictions_symmetric",
            || vec((any::<Index>(), any::<Index>()), 0..=6),
            |_, fx, pairs| {
                let mut g = fx.build(&Config::default(), OperatorKind::GodelMin);
                let n = fx.nodes.len();
                for (a, b) in pairs {
                    let (a, b) = (claim_id(a.index(n)), claim_id(b.index(n)));
                    let r = g.declare_contradiction(&a, &b);
                    prop_assert_eq!(r.is_err(), a == b, "contradiction {} / {}", a, b);
                }
                for c in g.claims() {
                    for o in &c.contradiction_refs {
                        prop_assert!(g
                            .claim(o)
                            .expect("exists")
                            .contradiction_refs
                            .contains(&c.id));
                    }
                }
                Ok(())
            },
        ),
        with_fixture(
            "topology_repropagation_is_stable",
            || Just(()),
            |ctx, fx, ()| {
                let cfg = Config::default();
                let mut g = fx.propagated(&cfg, ctx.op);
                let before = bits(&g);
                let touched = g
                    .propagate(&cfg, t0(), PropagationMode::Incremental)
                    .expect("acyclic");
                prop_assert!(touched.is_empty(), "clean graph recomputed {touched:?}");
                g.propagate(&cfg, t0(), PropagationMode::Full)
                    .expect("acyclic");
                prop_assert_eq!(bits(&g), before);
                Ok(())
            },
        ),
    ]
}

fn incremental_equals_full(
    ctx: &Ctx,
    fx: &Fixture,
    (edits, days): (Vec<(Index, f64)>, i64),
) -> TestCaseResult {
    let cfg = Config::default();
    let mut g = fx.propagated(&cfg, ctx.op);
    let mut now = t0();
    for (k, (pick, raw)) in edits.iter().enumerate() {
        perturb(&mut g, fx, pick, *raw);
        if k == 0 {
            now += Duration::days(days);
        }
        let mut full = g.clone();
        g.propagate(&cfg, now, PropagationMode::Incremental)
            .expect("acyclic");
        full.propagate(&cfg, now, PropagationMode::Full)
            .expect("acyclic");
        prop_assert_eq!(bits(&g), bits(&full), "after edit {}", k);
    }
    Ok(())
}

fn perturbation_locality(ctx: &Ctx, fx: &Fixture, (pick, raw): (Index, f64)) -> TestCaseResult {
    let cfg = Config::default();
    let mut g = fx.propagated(&cfg, ctx.op);
    let before = bits(&g);
    let Some(id) = perturb(&mut g, fx, &pick, raw) else {
        return Ok(());
    };
    let mut allowed: BTreeSet<String> = g.users_of(&id).cloned().collect();
    for u in allowed.clone() {
        allowed.extend(g.descendants(&u));
    }
    g.propagate(&cfg, t0(), PropagationMode::Incremental)
        .expect("acyclic");
    for ((cid, old), (_, new)) in before.iter().zip(bits(&g)) {
        if *old != new {
            prop_assert!(
                allowed.contains(cid),
                "{cid} changed outside the descendants of {id}"
            );
        }
    }
    Ok(())
}

fn cycle_rejected(_: &Ctx, fx: &Fixture, (a, b): (Index, Index)) -> TestCaseResult {
    let mut g = fx.build(&Config::default(), OperatorKind::GodelMin);
    let n = fx.nodes.len();
    let (from, to) = (claim_id(a.index(n)), claim_id(b.index(n)));
    // Resting `from` on `to` closes a cycle when `to` already rests,
    // directly or transitively, on `from`.
    let closes_cycle = from == to || g.descendants(&from).contains(&to);
    let snapshot = g.clone();
    let r = g.link_dependency(&from, &to);
    if closes_cycle {
        prop_assert_eq!(r.expect_err("cycle").code(), "CycleDetected");
        prop_assert!(g == snapshot);
        prop_assert!(g.topological_order().is_ok());
    } else {
        prop_assert!(r.is_ok() && g.topological_order().is_ok());
    }
    Ok(())
}
