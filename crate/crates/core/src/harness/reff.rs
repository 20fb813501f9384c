//! Effective-reliability properties.
//!
//! Every aspect runs in two settings: `direct`, where one claim rests on
//! its own evidence and up to three bare premises, and `propagated`, where
//! every claim of a random DAG is checked after full propagation. Graphs
//! use the suite's injected operator.

use std::collections::BTreeSet;

use chrono::Duration;
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::Index;
use proptest::strategy::BoxedStrategy;
use proptest::test_runner::TestCaseResult;

use super::gen::{
    claim_id, direct_fixture, evidence_id, pool_scope, propagated_fixture, score, t0, unit, Fixture,
};
use super::{Category, Ctx, Outcome, Property};
use crate::gamma::{
    aggregate, check_comm, check_comm_permuted, check_idem, check_idem_multiset, check_mono,
    check_wlnk, OperatorKind,
};
use crate::graph::{
    is_llm_generated, owa_conservative, probabilistic_sum, two_tier_aggregate, Bound, Breakdown,
    KnowledgeGraph, PropagationMode,
};
use crate::model::{load_config, Config, CongruenceLevel, EpistemicLayer};
use crate::scope::match_level;
use crate::score::ReliabilityScore;

#[derive(Debug, Clone)]
struct Extra {
    bump: f64,
    pick: Index,
    days: i64,
    flags: Vec<bool>,
}

fn extra() -> impl Strategy<Value = Extra> {
    (
        unit(),
        any::<Index>(),
        1i64..=400,
        vec(any::<bool>(), 1..=6),
    )
        .prop_map(|(bump, pick, days, flags)| Extra {
            bump,
            pick,
            days,
            flags,
        })
}

#[derive(Debug, Clone, Copy)]
enum Setting {
    Direct,
    Propagated,
}

struct Scenario<'a> {
    fx: &'a Fixture,
    extra: &'a Extra,
    cfg: Config,
    op: OperatorKind,
    g: KnowledgeGraph,
    targets: Vec<usize>,
}

impl Scenario<'_> {
    fn r(&self, i: usize) -> f64 {
        self.g
            .claim(&claim_id(i))
            .expect("built")
            .cached_r_eff
            .value()
    }

    fn bd(&self, i: usize) -> Breakdown {
        self.g
            .evaluate(&claim_id(i), &self.cfg, t0())
            .expect("built")
    }

    fn with_cfg(&self, cfg: &Config) -> KnowledgeGraph {
        self.fx.propagated(cfg, self.op)
    }

    fn close(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.op.slack()
    }
}

fn r_of(g: &KnowledgeGraph, i: usize) -> f64 {
    g.claim(&claim_id(i)).expect("built").cached_r_eff.value()
}

type Aspect = fn(&Scenario) -> TestCaseResult;

const ASPECTS: &[(&str, Aspect)] = &[
    ("bounds", bounds),
    ("wlnk_evidence", wlnk_evidence),
    ("wlnk_dependency", wlnk_dependency),
    ("layer_ceiling", layer_ceiling),
    ("formality_ceiling", formality_ceiling),
    ("weakest_term_attained", weakest_term_attained),
    ("dominating_matches_score", dominating_matches_score),
    ("weakest_link_upstream", weakest_link_upstream),
    ("mono_evidence", mono_evidence),
    ("mono_config_ceilings", mono_config_ceilings),
    ("comm_evidence_order", comm_evidence_order),
    ("congruence_exact", congruence_exact),
    ("congruence_monotone", congruence_monotone),
    ("scope_none_excluded", scope_none_excluded),
    ("multiplier_bound", multiplier_bound),
    ("decay_fresh_identity", decay_fresh_identity),
    ("decay_monotone_in_time", decay_monotone_in_time),
    ("decay_past_grace", decay_past_grace),
    ("empty_set_convention", empty_set_convention),
    ("faithfulness_cap_llm", faithfulness_cap_llm),
    ("faithfulness_human_untouched", faithfulness_human_untouched),
    ("faithfulness_claim_bound", faithfulness_claim_bound),
    ("two_tier_gate_zero", two_tier_gate_zero),
    ("two_tier_role_bound", two_tier_role_bound),
    ("two_tier_quality_bounds", two_tier_quality_bounds),
    ("two_tier_owa_bounds", two_tier_owa_bounds),
    ("preset_inheritance", preset_inheritance),
    ("preset_override_applies", preset_override_applies),
    ("reference_formula", reference_formula),
    ("deterministic", deterministic),
    ("penalty_floor", penalty_floor),
];

pub(super) fn properties() -> Vec<Property> {
    let mut out = operator_properties();
    for &(name, aspect) in ASPECTS {
        for (setting, suffix) in [
            (Setting::Direct, "direct"),
            (Setting::Propagated, "propagated"),
        ] {
            out.push(Property::new(
                format!("r_eff_{name}_{suffix}"),
                Category::REffCalculator,
                move |ctx| run_aspect(ctx, setting, aspect),
            ));
        }
    }
    out
}

fn run_aspect(ctx: &Ctx, setting: Setting, aspect: Aspect) -> Outcome {
    let fixtures: BoxedStrategy<Fixture> = match setting {
        Setting::Direct => direct_fixture().boxed(),
        Setting::Propagated => propagated_fixture().boxed(),
    };
    ctx.check((fixtures, extra()), |(fx, extra)| {
        let cfg = Config::default();
        let g = fx.propagated(&cfg, ctx.op);
        let targets = match setting {
            Setting::Direct => vec![fx.nodes.len() - 1],
            Setting::Propagated => (0..fx.nodes.len()).collect(),
        };
        aspect(&Scenario {
            fx: &fx,
            extra: &extra,
            cfg,
            op: ctx.op,
            g,
            targets,
        })
    })
}

fn bounds(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let v = s.r(i);
        prop_assert!(
            v.is_finite() && (0.0..=1.0).contains(&v),
            "claim {i} scored {v}"
        );
    }
    Ok(())
}

fn wlnk_evidence(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let b = s.bd(i);
        for t in &b.evidence {
            if let Some(a) = t.adjusted {
                prop_assert!(
                    b.r_eff <= a,
                    "claim {i}: {} above evidence {} at {a}",
                    b.r_eff,
                    t.id
                );
            }
        }
    }
    Ok(())
}

fn wlnk_dependency(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let b = s.bd(i);
        for d in &b.dependencies {
            prop_assert!(
                b.r_eff <= d.term,
                "claim {i}: {} above premise {} term {}",
                b.r_eff,
                d.id,
                d.term
            );
        }
    }
    Ok(())
}

fn layer_ceiling(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let b = s.bd(i);
        let c = s.cfg.layer_ceiling(s.fx.nodes[i].layer).value();
        prop_assert_eq!(b.layer_ceiling, c);
        prop_assert!(
            b.r_eff <= c,
            "claim {i}: {} above layer ceiling {c}",
            b.r_eff
        );
    }
    Ok(())
}

fn formality_ceiling(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let b = s.bd(i);
        let c = s.cfg.formality_ceiling(s.fx.nodes[i].formality).value();
        prop_assert_eq!(b.formality_ceiling, c);
        prop_assert!(
            b.r_eff <= c,
            "claim {i}: {} above formality ceiling {c}",
            b.r_eff
        );
    }
    Ok(())
}

fn terms(b: &Breakdown) -> Vec<f64> {
    let mut t: Vec<f64> = b.evidence.iter().filter_map(|e| e.adjusted).collect();
    t.extend(b.dependencies.iter().map(|d| d.term));
    t.push(b.layer_ceiling);
    t.push(b.formality_ceiling);
    t
}

fn weakest_term_attained(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let b = s.bd(i);
        let t = terms(&b);
        prop_assert!(
            t.iter().any(|v| v.to_bits() == b.r_eff.to_bits()),
            "claim {i}: {} is none of the terms {t:?}",
            b.r_eff
        );
    }
    Ok(())
}

fn bound_value(b: &Breakdown) -> f64 {
    match &b.dominating {
        Bound::Evidence(id) => b
            .evidence
            .iter()
            .find(|e| &e.id == id)
            .and_then(|e| e.adjusted)
            .expect("dominating evidence participates"),
        Bound::Dependency(id) => {
            b.dependencies
                .iter()
                .find(|d| &d.id == id)
                .expect("listed")
                .term
        }
        Bound::LayerCeiling => b.layer_ceiling,
        Bound::FormalityCeiling => b.formality_ceiling,
    }
}

fn dominating_matches_score(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let b = s.bd(i);
        let v = bound_value(&b);
        prop_assert!(
            terms(&b).iter().all(|t| v <= *t),
            "dominating term {v} is not the smallest"
        );
        prop_assert_eq!(
            v.to_bits(),
            b.r_eff.to_bits(),
            "claim {}: dominating {:?}",
            i,
            b.dominating
        );
    }
    Ok(())
}

fn ancestors(fx: &Fixture, i: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut stack = fx.nodes[i].deps.clone();
    while let Some(d) = stack.pop() {
        if seen.insert(d) {
            stack.extend(fx.nodes[d].deps.iter().copied());
        }
    }
    seen
}

fn weakest_link_upstream(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let b = s.bd(i);
        let wl = &b.weakest_link;
        let upstream = ancestors(s.fx, i)
            .into_iter()
            .map(claim_id)
            .any(|a| &a == wl);
        prop_assert!(
            *wl == claim_id(i) || upstream,
            "claim {i}: weakest link {wl} is not upstream"
        );
        let origin = s.g.evaluate(wl, &s.cfg, t0()).expect("exists");
        prop_assert!(
            !matches!(origin.dominating, Bound::Dependency(_)),
            "weakest link {wl} is itself bounded by a premise"
        );
    }
    Ok(())
}

fn mono_evidence(s: &Scenario) -> TestCaseResult {
    let count = s.fx.evidence_count();
    if count == 0 {
        return Ok(());
    }
    let (n, j) =
        s.fx.nth_evidence(s.extra.pick.index(count))
            .expect("in range");
    let id = evidence_id(n, j);
    let old = s.g.evidence(&id).expect("built").raw_score.value();
    let new = (old + (1.0 - old) * s.extra.bump).min(1.0);
    let mut g2 = s.g.clone();
    g2.set_evidence_score(&id, ReliabilityScore::new(new).expect("in range"))
        .expect("exists");
    g2.propagate(&s.cfg, t0(), PropagationMode::Incremental)
        .expect("acyclic");
    for &i in &s.targets {
        prop_assert!(
            r_of(&g2, i) + s.op.slack() >= s.r(i),
            "raising {id} from {old} to {new} lowered claim {i} from {} to {}",
            s.r(i),
            r_of(&g2, i)
        );
    }
    Ok(())
}

fn mono_config_ceilings(s: &Scenario) -> TestCaseResult {
    let factor = 0.5 + 0.5 * s.extra.bump;
    let mut cfg = s.cfg.clone();
    let scale =
        |c: ReliabilityScore| ReliabilityScore::new(c.value() * factor).expect("scaled down");
    cfg.formality_ceilings = cfg.formality_ceilings.map(scale);
    cfg.layer_ceilings = cfg.layer_ceilings.map(scale);
    let cfg = cfg.validated().expect("scaling preserves ordering");
    let g2 = s.with_cfg(&cfg);
    for &i in &s.targets {
        prop_assert!(
            r_of(&g2, i) <= s.r(i) + s.op.slack(),
            "lowering ceilings by {factor} raised claim {i}"
        );
    }
    Ok(())
}

fn comm_evidence_order(s: &Scenario) -> TestCaseResult {
    let mut g2 = s.fx.build_with(&s.cfg, s.op, true);
    g2.propagate(&s.cfg, t0(), PropagationMode::Full)
        .expect("acyclic");
    for &i in &s.targets {
        prop_assert!(
            s.close(r_of(&g2, i), s.r(i)),
            "claim {i}: {} vs {}",
            r_of(&g2, i),
            s.r(i)
        );
    }
    Ok(())
}

fn congruence_exact(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let b = s.bd(i);
        for d in &b.dependencies {
            let dep = s.g.claim(&d.id).expect("exists");
            let level = match_level(&pool_scope(s.fx.nodes[i].scope), &dep.scope);
            prop_assert_eq!(d.congruence, level);
            let expected = match s.cfg.congruence_penalty(level) {
                Some(p) => (dep.cached_r_eff.value() - p).max(0.0),
                None => 0.0,
            };
            prop_assert_eq!(
                d.term.to_bits(),
                expected.to_bits(),
                "premise {} at {}",
                d.id,
                level
            );
        }
    }
    Ok(())
}

fn rank(level: CongruenceLevel) -> u8 {
    match level {
        CongruenceLevel::Cl3 => 3,
        CongruenceLevel::Cl2 => 2,
        CongruenceLevel::Cl1 => 1,
        CongruenceLevel::None => 0,
    }
}

fn congruence_monotone(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        for eid in &s.g.claim(&claim_id(i)).expect("built").evidence_refs {
            let e = s.g.evidence(eid).expect("exists");
            let graded: Vec<(u8, f64)> = (0..super::gen::SCOPE_POOL.len())
                .map(pool_scope)
                .filter_map(|scope| {
                    let level = match_level(&scope, &e.scope);
                    crate::graph::adjust_evidence(e, &scope, t0(), &s.cfg)
                        .score()
                        .map(|a| (rank(level), a.value()))
                })
                .collect();
            for (ra, a) in &graded {
                for (rb, b) in &graded {
                    if ra > rb {
                        prop_assert!(
                            a >= b,
                            "{eid}: congruence rank {ra} gives {a} < rank {rb} gives {b}"
                        );
                    }
                }
            }
        }
    }
    Ok(())
}

fn scope_none_excluded(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let node = &s.fx.nodes[i];
        let claim_scope = pool_scope(node.scope);
        let Some(j) = node
            .evidence
            .iter()
            .position(|e| match_level(&claim_scope, &pool_scope(e.scope)) == CongruenceLevel::None)
        else {
            continue;
        };
        let mut fx2 = s.fx.clone();
        fx2.nodes[i].evidence.remove(j);
        let g2 = fx2.propagated(&s.cfg, s.op);
        for &k in &s.targets {
            prop_assert!(
                s.close(r_of(&g2, k), s.r(k)),
                "dropping unmatched evidence {j} of claim {i} moved claim {k}"
            );
        }
        return Ok(());
    }
    Ok(())
}

fn multiplier_bound(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        for t in &s.bd(i).evidence {
            if let Some(a) = t.adjusted {
                let limit = t.raw * s.cfg.multiplier(t.method);
                prop_assert!(
                    a <= limit,
                    "{}: adjusted {a} above raw × multiplier {limit}",
                    t.id
                );
            }
        }
    }
    Ok(())
}

fn decay_fresh_identity(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        for t in &s.bd(i).evidence {
            let e = s.g.evidence(&t.id).expect("exists");
            if e.is_expired(t0()) {
                continue;
            }
            prop_assert_eq!(t.decay, 1.0);
            let expected = s
                .cfg
                .congruence_penalty(t.congruence)
                .map(|p| (t.raw * s.cfg.multiplier(t.method) - p).max(0.0));
            prop_assert_eq!(
                t.adjusted.map(f64::to_bits),
                expected.map(f64::to_bits),
                "{}",
                t.id
            );
        }
    }
    Ok(())
}

fn decay_monotone_in_time(s: &Scenario) -> TestCaseResult {
    let later = t0() + Duration::days(s.extra.days);
    let mut g2 = s.g.clone();
    g2.propagate(&s.cfg, later, PropagationMode::Incremental)
        .expect("acyclic");
    for &i in &s.targets {
        prop_assert!(
            r_of(&g2, i) <= s.r(i) + s.op.slack(),
            "claim {i} rose from {} to {} after {} days",
            s.r(i),
            r_of(&g2, i),
            s.extra.days
        );
    }
    Ok(())
}

fn decay_past_grace(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        for t in &s.bd(i).evidence {
            let e = s.g.evidence(&t.id).expect("exists");
            if e.valid_until + s.cfg.grace() < t0() {
                prop_assert_eq!(t.decay, 0.0);
                prop_assert!(
                    matches!(t.adjusted, None | Some(0.0)),
                    "{} still contributes",
                    t.id
                );
            }
        }
    }
    Ok(())
}

fn empty_set_convention(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let b = s.bd(i);
        if b.dependencies.is_empty() && b.evidence.iter().all(|e| e.adjusted.is_none()) {
            let expected = b.layer_ceiling.min(b.formality_ceiling);
            prop_assert_eq!(
                b.r_eff.to_bits(),
                expected.to_bits(),
                "bare claim {} scored {}",
                i,
                b.r_eff
            );
        }
    }
    Ok(())
}

fn capped(s: &Scenario) -> (Config, KnowledgeGraph) {
    let mut cfg = s.cfg.clone();
    cfg.faithfulness_cap = Some(ReliabilityScore::new(s.extra.bump).expect("in range"));
    let g = s.with_cfg(&cfg);
    (cfg, g)
}

fn faithfulness_cap_llm(s: &Scenario) -> TestCaseResult {
    let (cfg, g) = capped(s);
    for &i in &s.targets {
        for t in &g
            .evaluate(&claim_id(i), &cfg, t0())
            .expect("built")
            .evidence
        {
            if is_llm_generated(&g.evidence(&t.id).expect("exists").provenance) {
                if let Some(a) = t.adjusted {
                    prop_assert!(
                        a <= s.extra.bump,
                        "{}: {a} above cap {}",
                        t.id,
                        s.extra.bump
                    );
                }
            }
        }
    }
    Ok(())
}

fn faithfulness_human_untouched(s: &Scenario) -> TestCaseResult {
    let (cfg, g) = capped(s);
    for &i in &s.targets {
        let with = g.evaluate(&claim_id(i), &cfg, t0()).expect("built");
        for (a, b) in with.evidence.iter().zip(&s.bd(i).evidence) {
            if !is_llm_generated(&g.evidence(&a.id).expect("exists").provenance) {
                prop_assert_eq!(
                    a.adjusted.map(f64::to_bits),
                    b.adjusted.map(f64::to_bits),
                    "{}",
                    a.id
                );
            }
        }
    }
    Ok(())
}

fn faithfulness_claim_bound(s: &Scenario) -> TestCaseResult {
    let (cfg, g) = capped(s);
    for &i in &s.targets {
        let b = g.evaluate(&claim_id(i), &cfg, t0()).expect("built");
        let llm_participates = b.evidence.iter().any(|t| {
            t.adjusted.is_some() && is_llm_generated(&g.evidence(&t.id).expect("exists").provenance)
        });
        if llm_participates {
            prop_assert!(
                b.r_eff <= s.extra.bump,
                "claim {i}: {} above cap {}",
                b.r_eff,
                s.extra.bump
            );
        }
    }
    Ok(())
}

fn groups_with_flags(s: &Scenario, i: usize) -> crate::graph::RoleGroups {
    let mut groups = s.g.role_groups(&claim_id(i), &s.cfg, t0()).expect("built");
    for (k, gate) in groups.gate.iter_mut().enumerate() {
        gate.passed = s.extra.flags[k % s.extra.flags.len()];
    }
    groups
}

fn two_tier_gate_zero(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let groups = groups_with_flags(s, i);
        if groups.is_empty() {
            prop_assert!(two_tier_aggregate(&groups).is_err());
            continue;
        }
        let overall = two_tier_aggregate(&groups).expect("non-empty");
        if groups.gate.iter().any(|g| !g.passed) {
            prop_assert_eq!(overall.value(), 0.0, "failed gate on claim {}", i);
        }
    }
    Ok(())
}

fn two_tier_role_bound(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let groups = groups_with_flags(s, i);
        if groups.is_empty() {
            continue;
        }
        let overall = two_tier_aggregate(&groups).expect("non-empty").value();
        for (role, score) in groups.role_scores() {
            prop_assert!(
                overall <= score.value(),
                "claim {i}: {overall} above {role} {}",
                score.value()
            );
        }
    }
    Ok(())
}

fn two_tier_quality_bounds(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let q = groups_with_flags(s, i).quality;
        if q.is_empty() {
            continue;
        }
        let p = probabilistic_sum(&q).value();
        let max = q.iter().map(|v| v.value()).fold(0.0, f64::max);
        prop_assert!(
            p + 1e-12 >= max && p <= 1.0,
            "probabilistic sum {p} of {q:?}"
        );
    }
    Ok(())
}

fn two_tier_owa_bounds(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let perf = groups_with_flags(s, i).performance;
        if perf.is_empty() {
            continue;
        }
        let o = owa_conservative(&perf).value();
        let vals: Vec<f64> = perf.iter().map(|v| v.value()).collect();
        let min = vals.iter().copied().fold(1.0, f64::min);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        prop_assert!(
            o + 1e-12 >= min && o <= mean + 1e-12,
            "OWA {o} outside [{min}, {mean}]"
        );
    }
    Ok(())
}

fn preset_inheritance(s: &Scenario) -> TestCaseResult {
    let partial =
        load_config(r#"{"grace_days": 7, "pbt_cases": {"fuzz": 100000}}"#).expect("valid");
    prop_assert_eq!(&partial, &s.cfg);
    let dumped = load_config(&s.cfg.to_json().to_string()).expect("round trip");
    prop_assert_eq!(&dumped, &s.cfg);
    let g2 = s.with_cfg(&dumped);
    for &i in &s.targets {
        prop_assert_eq!(r_of(&g2, i).to_bits(), s.r(i).to_bits());
    }
    Ok(())
}

fn preset_override_applies(s: &Scenario) -> TestCaseResult {
    let v = 0.76 + 0.24 * s.extra.bump;
    let cfg = load_config(&format!(r#"{{"layer_ceilings": {{"L2": {v}}}}}"#))
        .expect("ordering preserved");
    prop_assert_eq!(cfg.layer_ceiling(EpistemicLayer::L2).value(), v);
    prop_assert_eq!(
        cfg.layer_ceilings[..2].to_vec(),
        s.cfg.layer_ceilings[..2].to_vec()
    );
    prop_assert_eq!(cfg.formality_ceilings, s.cfg.formality_ceilings);
    let g2 = s.with_cfg(&cfg);
    for &i in &s.targets {
        let b = g2.evaluate(&claim_id(i), &cfg, t0()).expect("built");
        let expected = cfg.layer_ceiling(s.fx.nodes[i].layer).value();
        prop_assert_eq!(b.layer_ceiling, expected);
    }
    Ok(())
}

/// Independent evaluation of the formula straight from the fixture.
fn reference(fx: &Fixture, cfg: &Config, op: OperatorKind) -> Vec<f64> {
    let now = t0();
    let mut out: Vec<f64> = Vec::with_capacity(fx.nodes.len());
    for node in &fx.nodes {
        let scope = pool_scope(node.scope);
        let mut terms = Vec::new();
        // Evidence ids sort by slot, matching the graph's visiting order.
        for e in &node.evidence {
            let penalty = match match_level(&scope, &pool_scope(e.scope)) {
                CongruenceLevel::Cl3 => 0.0,
                CongruenceLevel::Cl2 => cfg.congruence_penalties[0],
                CongruenceLevel::Cl1 => cfg.congruence_penalties[1],
                CongruenceLevel::None => continue,
            };
            let valid_until = now - Duration::days(e.age_days)
                + Duration::days(cfg.validity_days[e.formality.index()].into());
            let decay = if now <= valid_until {
                1.0
            } else {
                let grace = Duration::days(cfg.grace_days.into()).num_milliseconds() as f64;
                (1.0 - (now - valid_until).num_milliseconds() as f64 / grace).max(0.0)
            };
            let mut a =
                (e.raw * cfg.verification_multipliers[e.method.index()] * decay - penalty).max(0.0);
            if let (Some(cap), true) = (cfg.faithfulness_cap, e.llm) {
                a = a.min(cap.value());
            }
            terms.push(a);
        }
        for &d in &node.deps {
            let term = match match_level(&scope, &pool_scope(fx.nodes[d].scope)) {
                CongruenceLevel::Cl3 => out[d],
                CongruenceLevel::Cl2 => (out[d] - cfg.congruence_penalties[0]).max(0.0),
                CongruenceLevel::Cl1 => (out[d] - cfg.congruence_penalties[1]).max(0.0),
                CongruenceLevel::None => 0.0,
            };
            terms.push(term);
        }
        terms.push(cfg.layer_ceilings[node.layer.index()].value());
        terms.push(cfg.formality_ceilings[node.formality.index()].value());
        let v = match op {
            OperatorKind::GodelMin => terms.iter().copied().fold(f64::INFINITY, f64::min),
            _ => {
                let scores: Vec<_> = terms
                    .iter()
                    .map(|t| ReliabilityScore::new(*t).expect("in range"))
                    .collect();
                aggregate(op, &scores).expect("non-empty").value()
            }
        };
        out.push(v);
    }
    out
}

fn reference_formula(s: &Scenario) -> TestCaseResult {
    let expected = reference(s.fx, &s.cfg, s.op);
    for &i in &s.targets {
        prop_assert!(
            s.close(s.r(i), expected[i]),
            "claim {i}: engine {} vs reference {}",
            s.r(i),
            expected[i]
        );
        if s.op == OperatorKind::GodelMin {
            prop_assert_eq!(s.r(i).to_bits(), expected[i].to_bits());
        }
    }
    Ok(())
}

fn deterministic(s: &Scenario) -> TestCaseResult {
    let again = s.fx.propagated(&s.cfg, s.op);
    let mut lazy = s.fx.build(&s.cfg, s.op);
    lazy.propagate(&s.cfg, t0(), PropagationMode::Incremental)
        .expect("acyclic");
    for &i in &s.targets {
        prop_assert_eq!(r_of(&again, i).to_bits(), s.r(i).to_bits());
        prop_assert_eq!(r_of(&lazy, i).to_bits(), s.r(i).to_bits());
    }
    Ok(())
}

fn penalty_floor(s: &Scenario) -> TestCaseResult {
    for &i in &s.targets {
        let b = s.bd(i);
        for t in &b.evidence {
            prop_assert!(t.adjusted.is_none_or(|a| a >= 0.0), "{} negative", t.id);
        }
        for d in &b.dependencies {
            prop_assert!(
                d.term >= 0.0 && d.term <= d.r_eff,
                "premise {} term {}",
                d.id,
                d.term
            );
        }
    }
    Ok(())
}

fn multiset() -> impl Strategy<Value = Vec<ReliabilityScore>> {
    vec(score(), 1..=8)
}

fn operator_properties() -> Vec<Property> {
    let op_prop =
        |name: &str, run: fn(&Ctx) -> Outcome| Property::new(name, Category::REffCalculator, run);
    vec![
        op_prop("operator_idempotent", |ctx| {
            ctx.check(score(), |x| {
                prop_assert!(check_idem(ctx.op, x), "Γ([{x}]) ≠ {x}");
                Ok(())
            })
        }),
        op_prop("operator_commutative", |ctx| {
            ctx.check((score(), score(), multiset()), |(a, b, v)| {
                prop_assert!(check_comm(ctx.op, a, b));
                let mut rev = v.clone();
                rev.reverse();
                prop_assert!(check_comm_permuted(ctx.op, &v, &rev));
                Ok(())
            })
        }),
        op_prop("operator_weakest_link", |ctx| {
            ctx.check(multiset(), |v| {
                prop_assert!(
                    check_wlnk(ctx.op, &v),
                    "aggregate above the minimum of {v:?}"
                );
                Ok(())
            })
        }),
        op_prop("operator_monotone", |ctx| {
            ctx.check((score(), score(), score()), |(a, b, c)| {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(check_mono(ctx.op, lo, hi, c));
                Ok(())
            })
        }),
        op_prop("operator_duplicate_insensitive", |ctx| {
            ctx.check(multiset(), |v| {
                prop_assert!(
                    check_idem_multiset(ctx.op, &v),
                    "duplicates change the aggregate of {v:?}"
                );
                Ok(())
            })
        }),
        op_prop("operator_bounds", |ctx| {
            ctx.check(multiset(), |v| {
                let r = aggregate(ctx.op, &v).expect("non-empty").value();
                prop_assert!(r.is_finite() && (0.0..=1.0).contains(&r));
                Ok(())
            })
        }),
    ]
}
