//! Generators shared by the property categories.

use chrono::Duration;
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::{select, Index};

use crate::fsm::{ActorId, ActorKind};
use crate::gamma::OperatorKind;
use crate::graph::{ClaimNode, Evidence, KnowledgeGraph, PropagationMode, Timestamp};
use crate::model::{Config, EpistemicLayer, EvidenceRole, FormalityLevel, VerificationMethod};
use crate::scope::{parse_scope, Scope};
use crate::score::ReliabilityScore;

pub fn t0() -> Timestamp {
    "2026-01-01T00:00:00Z".parse().expect("valid timestamp")
}

/// Scores in [0, 1] with extra weight on the endpoints and on a coarse
/// grid, so ties and exact boundaries come up often.
pub fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![
        1 => Just(0.0),
        1 => Just(1.0),
        2 => (0..=20u32).prop_map(|k| f64::from(k) / 20.0),
        6 => 0.0..=1.0f64,
    ]
}

pub fn score() -> impl Strategy<Value = ReliabilityScore> {
    unit().prop_map(|v| ReliabilityScore::new(v).expect("in range"))
}

/// Any `f64`, biased toward the values where range checks go wrong.
pub fn boundary_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        select(vec![
            0.0,
            -0.0,
            1.0,
            f64::MIN_POSITIVE,
            f64::from_bits(1),
            1.0 - f64::EPSILON / 2.0,
            1.0 + f64::EPSILON,
            -f64::from_bits(1),
            f64::NAN,
            -f64::NAN,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::MAX,
            f64::MIN,
        ]),
        (1u64..(1 << 52)).prop_map(f64::from_bits),
        (0u64..=u64::MAX).prop_map(f64::from_bits),
        -2.0..2.0f64,
        0.0..=1.0f64,
    ]
}

/// Scope texts used by graph fixtures. The last entry is BOTTOM.
pub const SCOPE_POOL: [&str; 7] = [
    "task=qa",
    "model=m1,task=qa",
    "*",
    "model=m1",
    "task=code",
    "model=m2,task=qa",
    "!",
];

pub fn pool_scope(i: usize) -> Scope {
    parse_scope(SCOPE_POOL[i % SCOPE_POOL.len()]).expect("valid pool scope")
}

fn pool_index() -> impl Strategy<Value = usize> {
    prop_oneof![12 => 0..6usize, 1 => Just(6usize)]
}

pub const DIMS: [&str; 5] = ["task", "model", "lang", "env.os", "x_1"];
pub const VALUES: [&str; 5] = ["qa", "code", "m1", "0", "v-2"];

/// Arbitrary lattice elements over a small alphabet, so that equal,
/// comparable, and conflicting pairs are all common.
pub fn scope() -> impl Strategy<Value = Scope> {
    prop_oneof![
        1 => Just(Scope::Bottom),
        9 => proptest::collection::btree_map(select(&DIMS[..]), select(&VALUES[..]), 0..=4)
            .prop_map(|m| Scope::from_pairs(m).expect("valid tokens")),
    ]
}

pub fn actor(id: &str, kind: ActorKind) -> ActorId {
    ActorId::new(id, kind).expect("non-empty id")
}

#[derive(Debug, Clone)]
pub struct EvSpec {
    pub raw: f64,
    pub formality: FormalityLevel,
    pub method: VerificationMethod,
    pub role: EvidenceRole,
    pub scope: usize,
    pub age_days: i64,
    pub llm: bool,
}

#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub layer: EpistemicLayer,
    pub formality: FormalityLevel,
    pub scope: usize,
    pub evidence: Vec<EvSpec>,
    /// Indices of premises; always lower than the node's own index.
    pub deps: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub nodes: Vec<NodeSpec>,
}

pub fn claim_id(i: usize) -> String {
    format!("n{i:02}")
}

pub fn evidence_id(i: usize, j: usize) -> String {
    format!("e{i:02}_{j}")
}

pub fn provenance(llm: bool) -> &'static str {
    if llm {
        "llm-generated"
    } else {
        "human-measured"
    }
}

impl Fixture {
    pub fn build(&self, cfg: &Config, op: OperatorKind) -> KnowledgeGraph {
        self.build_with(cfg, op, false)
    }

    /// With `reverse_ids`, each node's evidence ids are assigned in the
    /// opposite order, which changes the order the formula visits them.
    pub fn build_with(&self, cfg: &Config, op: OperatorKind, reverse_ids: bool) -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new().with_aggregator(op);
        let proposer = actor("fixture", ActorKind::Generator);
        for (i, n) in self.nodes.iter().enumerate() {
            let claim = ClaimNode::new(
                claim_id(i),
                format!("claim {i}"),
                n.formality,
                pool_scope(n.scope),
                proposer.clone(),
            )
            .at_layer(n.layer);
            g.add_claim(claim).expect("fresh id");
            let count = n.evidence.len();
            for (j, e) in n.evidence.iter().enumerate() {
                let slot = if reverse_ids { count - 1 - j } else { j };
                let id = evidence_id(i, slot);
                g.add_evidence(self.evidence(e, id.clone(), cfg))
                    .expect("fresh id");
                g.attach_evidence(&claim_id(i), &id).expect("both exist");
            }
            for d in &n.deps {
                g.link_dependency(&claim_id(i), &claim_id(*d))
                    .expect("acyclic by construction");
            }
        }
        g
    }

    fn evidence(&self, e: &EvSpec, id: String, cfg: &Config) -> Evidence {
        Evidence::new(
            id,
            ReliabilityScore::new(e.raw).expect("in range"),
            e.formality,
            pool_scope(e.scope),
            e.method,
            e.role,
            t0() - Duration::days(e.age_days),
            cfg,
        )
        .with_provenance(provenance(e.llm))
    }

    /// Built and fully propagated at [`t0`].
    pub fn propagated(&self, cfg: &Config, op: OperatorKind) -> KnowledgeGraph {
        let mut g = self.build(cfg, op);
        g.propagate(cfg, t0(), PropagationMode::Full)
            .expect("acyclic");
        g
    }

    pub fn evidence_count(&self) -> usize {
        self.nodes.iter().map(|n| n.evidence.len()).sum()
    }

    /// The `k`-th evidence item across all nodes, as (node, slot).
    pub fn nth_evidence(&self, k: usize) -> Option<(usize, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(i, n)| (0..n.evidence.len()).map(move |j| (i, j)))
            .nth(k)
    }
}

pub fn ev_spec() -> impl Strategy<Value = EvSpec> {
    (
        unit(),
        select(FormalityLevel::ALL),
        select(VerificationMethod::ALL),
        select(EvidenceRole::ALL),
        pool_index(),
        prop_oneof![3 => 0i64..=30, 1 => 0i64..=400],
        proptest::bool::weighted(0.3),
    )
        .prop_map(
            |(raw, formality, method, role, scope, age_days, llm)| EvSpec {
                raw,
                formality,
                method,
                role,
                scope,
                age_days,
                llm,
            },
        )
}

pub fn node_attrs(max_evidence: usize) -> impl Strategy<Value = NodeSpec> {
    (
        select(EpistemicLayer::ALL),
        select(FormalityLevel::ALL),
        pool_index(),
        vec(ev_spec(), 0..=max_evidence),
    )
        .prop_map(|(layer, formality, scope, evidence)| NodeSpec {
            layer,
            formality,
            scope,
            evidence,
            deps: Vec::new(),
        })
}

fn attach(shape: Vec<Vec<usize>>, max_evidence: usize) -> impl Strategy<Value = Fixture> {
    let n = shape.len();
    vec(node_attrs(max_evidence), n).prop_map(move |mut nodes| {
        for (node, deps) in nodes.iter_mut().zip(&shape) {
            node.deps = deps.clone();
        }
        Fixture { nodes }
    })
}

/// One claim resting directly on up to three bare premises. The claim
/// under test is the last node.
pub fn direct_fixture() -> impl Strategy<Value = Fixture> {
    (0..=3usize)
        .prop_map(|k| {
            let mut shape = vec![Vec::new(); k];
            shape.push((0..k).collect());
            shape
        })
        .prop_flat_map(|shape| attach(shape, 4))
}

/// Small random DAGs where every claim is checked.
pub fn propagated_fixture() -> impl Strategy<Value = Fixture> {
    vec(vec(any::<Index>(), 0..=3), 2..=12)
        .prop_map(resolve)
        .prop_flat_map(|shape| attach(shape, 3))
}

fn resolve(raw: Vec<Vec<Index>>) -> Vec<Vec<usize>> {
    raw.into_iter()
        .enumerate()
        .map(|(i, idx)| {
            if i == 0 {
                return Vec::new();
            }
            let mut d: Vec<usize> = idx.iter().map(|x| x.index(i)).collect();
            d.sort_unstable();
            d.dedup();
            d
        })
        .collect()
}

/// Serial chain: each node rests on its predecessor.
pub fn chain_shape(n: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|i| if i == 0 { vec![] } else { vec![i - 1] })
        .collect()
}

/// Stacked diamonds: a root, then `stacks` rounds of `width` parallel
/// nodes joined by an apex.
pub fn diamond_shape(stacks: usize, width: usize) -> Vec<Vec<usize>> {
    let mut shape = vec![Vec::new()];
    let mut tail = 0;
    for _ in 0..stacks {
        let first = shape.len();
        for _ in 0..width {
            shape.push(vec![tail]);
        }
        shape.push((first..first + width).collect());
        tail = shape.len() - 1;
    }
    shape
}

/// Serial composition of chain and diamond segments.
pub fn mixed_shape(segments: &[(bool, usize)]) -> Vec<Vec<usize>> {
    let mut shape = vec![Vec::new()];
    let mut tail = 0;
    for &(parallel, size) in segments {
        if parallel {
            let first = shape.len();
            for _ in 0..size {
                shape.push(vec![tail]);
            }
            shape.push((first..first + size).collect());
        } else {
            for _ in 0..size {
                shape.push(vec![shape.len() - 1]);
            }
        }
        tail = shape.len() - 1;
    }
    shape
}

/// Chains (2 to 50 nodes), stacked diamonds, random DAGs of up to 50
/// nodes with about two premises per node, and mixed serial/parallel
/// compositions.
pub fn topology_shape() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop_oneof![
        (2..=50usize).prop_map(chain_shape),
        (1..=8usize, 2..=4usize).prop_map(|(s, w)| diamond_shape(s, w)),
        vec(vec(any::<Index>(), 0..=4), 2..=50).prop_map(resolve),
        vec((any::<bool>(), 1..=5usize), 1..=6).prop_map(|segs| mixed_shape(&segs)),
    ]
}

/// A topology whose nodes mostly share one scope, so scores propagate
/// instead of collapsing to zero.
pub fn topology_fixture() -> impl Strategy<Value = Fixture> {
    topology_shape().prop_flat_map(|shape| {
        let n = shape.len();
        vec(
            (
                select(EpistemicLayer::ALL),
                select(FormalityLevel::ALL),
                prop_oneof![4 => Just(0usize), 1 => 0..6usize],
                vec(
                    ev_spec().prop_map(|mut e| {
                        e.scope = 0;
                        e
                    }),
                    0..=2,
                ),
            ),
            n,
        )
        .prop_map(move |attrs| Fixture {
            nodes: attrs
                .into_iter()
                .zip(&shape)
                .map(|((layer, formality, scope, evidence), deps)| NodeSpec {
                    layer,
                    formality,
                    scope,
                    evidence,
                    deps: deps.clone(),
                })
                .collect(),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_are_acyclic_and_bounded() {
        for shape in [
            chain_shape(50),
            diamond_shape(8, 4),
            mixed_shape(&[(true, 5); 6]),
        ] {
            assert!(shape.len() <= 50);
            for (i, deps) in shape.iter().enumerate() {
                assert!(deps.iter().all(|d| *d < i));
            }
        }
        assert_eq!(
            diamond_shape(1, 2),
            vec![vec![], vec![0], vec![0], vec![1, 2]]
        );
    }
}
