//! Dependency inspection properties, checked against an independent
//! breadth-first walk.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use proptest::prelude::*;
use proptest::sample::Index;
use proptest::test_runner::TestCaseResult;

use super::gen::{claim_id, topology_fixture};
use super::{Category, Ctx, Property};
use crate::graph::{InspectReport, KnowledgeGraph, NodeKind};
use crate::model::Config;

struct Case {
    g: KnowledgeGraph,
    root: String,
    report: InspectReport,
}

fn inspected(name: &str, check: fn(&Case) -> TestCaseResult) -> Property {
    Property::new(name, Category::DependencyInspector, move |ctx: &Ctx| {
        ctx.check((topology_fixture(), any::<Index>()), |(fx, pick)| {
            let g = fx.propagated(&Config::default(), ctx.op);
            let root = claim_id(pick.index(fx.nodes.len()));
            let report = g.inspect_dependencies(&root).expect("root exists");
            check(&Case { g, root, report })
        })
    })
}

/// Shortest distance from the root to every reachable claim and evidence.
fn oracle_depths(g: &KnowledgeGraph, root: &str) -> BTreeMap<(NodeKind, String), usize> {
    let mut claims: BTreeMap<String, usize> = BTreeMap::from([(root.to_string(), 0)]);
    let mut queue = VecDeque::from([root.to_string()]);
    while let Some(id) = queue.pop_front() {
        let d = claims[&id];
        for p in &g.claim(&id).expect("exists").dependency_refs {
            if !claims.contains_key(p) {
                claims.insert(p.clone(), d + 1);
                queue.push_back(p.clone());
            }
        }
    }
    let mut out = BTreeMap::new();
    for (id, d) in &claims {
        for e in &g.claim(id).expect("exists").evidence_refs {
            let slot = out.entry((NodeKind::Evidence, e.clone())).or_insert(d + 1);
            *slot = (*slot).min(d + 1);
        }
        out.insert((NodeKind::Claim, id.clone()), *d);
    }
    out
}

fn reported(c: &Case) -> BTreeMap<(NodeKind, String), usize> {
    c.report
        .nodes
        .iter()
        .map(|n| ((n.kind, n.id.clone()), n.depth))
        .collect()
}

pub(super) fn properties() -> Vec<Property> {
    vec![
        inspected("inspect_root_first", |c| {
            let first = c.report.nodes.first().expect("root listed");
            prop_assert_eq!(first.kind, NodeKind::Claim);
            prop_assert_eq!(&first.id, &c.root);
            prop_assert_eq!(first.depth, 0);
            prop_assert_eq!(&c.report.root, &c.root);
            Ok(())
        }),
        inspected("inspect_nodes_unique", |c| {
            prop_assert_eq!(reported(c).len(), c.report.nodes.len());
            Ok(())
        }),
        inspected("inspect_shortest_depths", |c| {
            let expected = oracle_depths(&c.g, &c.root);
            for n in &c.report.nodes {
                prop_assert_eq!(
                    Some(&n.depth),
                    expected.get(&(n.kind, n.id.clone())),
                    "{}",
                    n.id
                );
            }
            Ok(())
        }),
        inspected("inspect_complete", |c| {
            let expected: BTreeSet<_> = oracle_depths(&c.g, &c.root).into_keys().collect();
            let got: BTreeSet<_> = reported(c).into_keys().collect();
            prop_assert_eq!(got, expected);
            Ok(())
        }),
        inspected("inspect_only_reachable", |c| {
            for n in &c.report.nodes {
                if n.kind == NodeKind::Claim && n.id != c.root {
                    prop_assert!(
                        c.g.descendants(&n.id).contains(&c.root),
                        "{} does not support the root",
                        n.id
                    );
                }
            }
            Ok(())
        }),
        inspected("inspect_sorted", |c| {
            for w in c.report.nodes.windows(2) {
                prop_assert!(
                    (w[0].depth, &w[0].id, w[0].kind) < (w[1].depth, &w[1].id, w[1].kind),
                    "{} listed before {}",
                    w[0].id,
                    w[1].id
                );
            }
            Ok(())
        }),
        inspected("inspect_claim_scores_cached", |c| {
            for n in c.report.nodes.iter().filter(|n| n.kind == NodeKind::Claim) {
                let claim = c.g.claim(&n.id).expect("exists");
                prop_assert_eq!(n.score.to_bits(), claim.cached_r_eff.value().to_bits());
                prop_assert_eq!(n.formality, claim.formality);
                prop_assert_eq!(n.layer, Some(claim.layer));
            }
            Ok(())
        }),
        inspected("inspect_evidence_scores_raw", |c| {
            for n in c
                .report
                .nodes
                .iter()
                .filter(|n| n.kind == NodeKind::Evidence)
            {
                let e = c.g.evidence(&n.id).expect("exists");
                prop_assert_eq!(n.score.to_bits(), e.raw_score.value().to_bits());
                prop_assert_eq!(n.formality, e.formality);
                prop_assert_eq!(n.layer, None);
            }
            Ok(())
        }),
        inspected("inspect_deterministic", |c| {
            prop_assert_eq!(
                &c.g.inspect_dependencies(&c.root).expect("exists"),
                &c.report
            );
            let reloaded = KnowledgeGraph::from_jsonl(&c.g.to_jsonl()).expect("loads");
            prop_assert_eq!(
                &reloaded.inspect_dependencies(&c.root).expect("exists"),
                &c.report
            );
            Ok(())
        }),
        inspected("inspect_missing_root_rejected", |c| {
            let missing = format!("{}-missing", c.root);
            prop_assert_eq!(
                c.g.inspect_dependencies(&missing)
                    .expect_err("absent")
                    .code(),
                "MissingRef"
            );
            Ok(())
        }),
        inspected("inspect_json_schema_stable", |c| {
            let v = serde_json::to_value(&c.report).expect("serializable");
            prop_assert_eq!(v["root"].as_str(), Some(c.root.as_str()));
            for n in v["nodes"].as_array().expect("array") {
                let keys: BTreeSet<&str> = n
                    .as_object()
                    .expect("object")
                    .keys()
                    .map(String::as_str)
                    .collect();
                let claim = n["kind"] == "claim";
                let mut expected = BTreeSet::from(["kind", "id", "depth", "score", "formality"]);
                if claim {
                    expected.insert("layer");
                }
                prop_assert_eq!(keys, expected);
            }
            Ok(())
        }),
        inspected("inspect_premises_one_level_down", |c| {
            let depth = reported(c);
            for n in c.report.nodes.iter().filter(|n| n.kind == NodeKind::Claim) {
                for p in &c.g.claim(&n.id).expect("exists").dependency_refs {
                    let d = depth.get(&(NodeKind::Claim, p.clone())).copied();
                    prop_assert!(
                        d.is_some_and(|d| d <= n.depth + 1),
                        "premise {p} of {} misplaced",
                        n.id
                    );
                }
            }
            Ok(())
        }),
    ]
}
