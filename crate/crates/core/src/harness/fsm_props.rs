//! Lifecycle properties over random command sequences, plus exhaustive
//! checks of the transition table.

use std::collections::{BTreeSet, VecDeque};

use chrono::Duration;
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::{select, Index};
use proptest::test_runner::TestCaseResult;

use super::gen::{actor, pool_scope, t0, unit};
use super::{Category, Ctx, Property};
use crate::drr::{ratify, verify_chain, DrrStore, ValidityWindow};
use crate::fsm::{transition, ActorId, ActorKind, Event, Phase, PromotionRequest};
use crate::graph::{ClaimStatus, Evidence, InferenceMode, KnowledgeGraph, Timestamp};
use crate::model::{Config, EpistemicLayer, EvidenceRole, FormalityLevel, VerificationMethod};
use crate::score::ReliabilityScore;

/// `gen-a` appears twice with different kinds: identity, not kind, decides
/// who counts as the proposer.
const ACTORS: [(&str, ActorKind); 6] = [
    ("gen-a", ActorKind::Generator),
    ("gen-b", ActorKind::Generator),
    ("ver-a", ActorKind::Verifier),
    ("hum-a", ActorKind::Human),
    ("hum-b", ActorKind::Human),
    ("gen-a", ActorKind::Human),
];

fn actor_at(i: usize) -> ActorId {
    let (id, kind) = ACTORS[i % ACTORS.len()];
    actor(id, kind)
}

#[derive(Debug, Clone)]
enum Cmd {
    Propose {
        actor: usize,
        scope: usize,
    },
    AddEvidence {
        raw: f64,
        method: VerificationMethod,
        scope: usize,
    },
    Promote {
        claim: Index,
        target: EpistemicLayer,
        actor: usize,
        evidence: Option<Index>,
    },
    Ratify {
        claim: Index,
        actor: usize,
    },
    Deploy {
        claim: Index,
    },
    Contradict {
        a: Index,
        b: Index,
    },
    Discard {
        claim: Index,
    },
    Advance {
        days: i64,
    },
}

fn cmd() -> impl Strategy<Value = Cmd> {
    let actor_idx = 0..ACTORS.len();
    prop_oneof![
        3 => (actor_idx.clone(), 0..6usize).prop_map(|(actor, scope)| Cmd::Propose { actor, scope }),
        3 => (unit(), select(VerificationMethod::ALL), 0..6usize)
            .prop_map(|(raw, method, scope)| Cmd::AddEvidence { raw, method, scope }),
        6 => (any::<Index>(), select(EpistemicLayer::ALL), actor_idx.clone(), proptest::option::of(any::<Index>()))
            .prop_map(|(claim, target, actor, evidence)| Cmd::Promote { claim, target, actor, evidence }),
        3 => (any::<Index>(), actor_idx).prop_map(|(claim, actor)| Cmd::Ratify { claim, actor }),
        1 => any::<Index>().prop_map(|claim| Cmd::Deploy { claim }),
        1 => (any::<Index>(), any::<Index>()).prop_map(|(a, b)| Cmd::Contradict { a, b }),
        1 => any::<Index>().prop_map(|claim| Cmd::Discard { claim }),
        1 => (1i64..=400).prop_map(|days| Cmd::Advance { days }),
    ]
}

fn sequence() -> impl Strategy<Value = Vec<Cmd>> {
    vec(cmd(), 1..=40)
}

/// What one command did.
struct Step {
    cmd: Cmd,
    /// Claim the command addressed, if any.
    claim: Option<String>,
    actor: Option<ActorId>,
    ok: bool,
    before: KnowledgeGraph,
    after: KnowledgeGraph,
    records_before: usize,
    records_after: usize,
    store_after: DrrStore,
}

fn simulate(cmds: &[Cmd]) -> Vec<Step> {
    let cfg = Config::default();
    let mut g = KnowledgeGraph::new();
    let mut store = DrrStore::new();
    let mut now: Timestamp = t0();
    let mut claims: Vec<String> = Vec::new();
    let mut evidence: Vec<String> = Vec::new();
    let mut steps = Vec::with_capacity(cmds.len());
    for c in cmds {
        let before = g.clone();
        let records_before = store.records().len();
        let pick = |i: &Index| (!claims.is_empty()).then(|| claims[i.index(claims.len())].clone());
        let (claim, who, ok) = match c {
            Cmd::Propose { actor, scope } => {
                let who = actor_at(*actor);
                let r = g.propose(
                    "conjecture",
                    pool_scope(*scope),
                    FormalityLevel::F2,
                    who.clone(),
                    now,
                );
                if let Ok(id) = &r {
                    claims.push(id.clone());
                }
                (r.as_ref().ok().cloned(), Some(who), r.is_ok())
            }
            Cmd::AddEvidence { raw, method, scope } => {
                let id = g.fresh_id("e");
                let e = Evidence::new(
                    id.clone(),
                    ReliabilityScore::new(*raw).expect("in range"),
                    FormalityLevel::F2,
                    pool_scope(*scope),
                    *method,
                    EvidenceRole::Performance,
                    now,
                    &cfg,
                );
                let ok = g.add_evidence(e).is_ok();
                if ok {
                    evidence.push(id);
                }
                (None, None, ok)
            }
            Cmd::Promote {
                claim,
                target,
                actor,
                evidence: ev,
            } => match pick(claim) {
                None => (None, None, false),
                Some(id) => {
                    let who = actor_at(*actor);
                    let ev: Vec<String> = ev
                        .iter()
                        .filter(|_| !evidence.is_empty())
                        .map(|i| evidence[i.index(evidence.len())].clone())
                        .collect();
                    let req = PromotionRequest {
                        claim: id.clone(),
                        target: *target,
                        evidence: ev,
                        actor: who.clone(),
                    };
                    let ok = g.promote(&req, &cfg, now).is_ok();
                    (Some(id), Some(who), ok)
                }
            },
            Cmd::Ratify { claim, actor } => match pick(claim) {
                None => (None, None, false),
                Some(id) => {
                    let who = actor_at(*actor);
                    let window = ValidityWindow {
                        from: now,
                        until: now + Duration::days(90),
                    };
                    let ok = ratify(&mut g, &mut store, &id, &who, window, &cfg).is_ok();
                    (Some(id), Some(who), ok)
                }
            },
            Cmd::Deploy { claim } => match pick(claim) {
                None => (None, None, false),
                Some(id) => {
                    let ok = g.deploy(&id).is_ok();
                    (Some(id), None, ok)
                }
            },
            Cmd::Contradict { a, b } => match (pick(a), pick(b)) {
                (Some(a), Some(b)) => (
                    Some(a.clone()),
                    None,
                    g.declare_contradiction(&a, &b).is_ok(),
                ),
                _ => (None, None, false),
            },
            Cmd::Discard { claim } => match pick(claim) {
                None => (None, None, false),
                Some(id) => {
                    let ok = g.discard(&id).is_ok();
                    (Some(id), None, ok)
                }
            },
            Cmd::Advance { days } => {
                now += Duration::days(*days);
                let ok = g.sweep_stale(&cfg, now).is_ok();
                (None, None, ok)
            }
        };
        steps.push(Step {
            cmd: c.clone(),
            claim,
            actor: who,
            ok,
            before,
            after: g.clone(),
            records_before,
            records_after: store.records().len(),
            store_after: store.clone(),
        });
    }
    steps
}

fn over_steps(name: &str, check: fn(&Step) -> TestCaseResult) -> Property {
    Property::new(name, Category::EpistemicFsm, move |ctx: &Ctx| {
        ctx.check(sequence(), |cmds| {
            for step in simulate(&cmds) {
                check(&step)?;
            }
            Ok(())
        })
    })
}

fn layer_num(l: EpistemicLayer) -> i32 {
    match l {
        EpistemicLayer::L0 => 0,
        EpistemicLayer::L1 => 1,
        EpistemicLayer::L2 => 2,
    }
}

/// Arcs allowed by the lifecycle, written out independently of the engine.
fn oracle(phase: Phase, event: Event) -> Option<Phase> {
    const ARCS: [(Phase, Event, Phase); 6] = [
        (Phase::Idle, Event::Start, Phase::Abduction),
        (Phase::Abduction, Event::Hypothesize, Phase::Deduction),
        (Phase::Deduction, Event::Verify, Phase::Induction),
        (Phase::Induction, Event::Validate, Phase::Ratified),
        (Phase::Induction, Event::Ratify, Phase::Ratified),
        (Phase::Ratified, Event::Deploy, Phase::Operation),
    ];
    if phase == Phase::Operation {
        return None;
    }
    if event == Event::Reset {
        return Some(Phase::Idle);
    }
    ARCS.iter()
        .find(|(p, e, _)| *p == phase && *e == event)
        .map(|(_, _, to)| *to)
}

pub(super) fn properties() -> Vec<Property> {
    vec![
        over_steps("fsm_no_layer_skip", |s| {
            for c in s.after.claims() {
                let before = s.before.claim(&c.id).map_or(0, |b| layer_num(b.layer));
                prop_assert!(
                    layer_num(c.layer) <= before + 1,
                    "{} jumped from L{before} to {} on {:?}",
                    c.id,
                    c.layer,
                    s.cmd
                );
            }
            Ok(())
        }),
        over_steps("fsm_promotion_is_single_step", |s| {
            if let (Cmd::Promote { target, .. }, true) = (&s.cmd, s.ok) {
                let id = s.claim.as_ref().expect("addressed");
                let before = s.before.claim(id).expect("existed").layer;
                prop_assert_eq!(layer_num(*target), layer_num(before) + 1);
                prop_assert_eq!(s.after.claim(id).expect("exists").layer, *target);
            }
            Ok(())
        }),
        over_steps("fsm_no_self_promotion", |s| {
            if let (Cmd::Promote { .. }, true) = (&s.cmd, s.ok) {
                let c = s
                    .before
                    .claim(s.claim.as_ref().expect("addressed"))
                    .expect("existed");
                prop_assert_ne!(&c.proposer.id, &s.actor.as_ref().expect("actor").id);
            }
            Ok(())
        }),
        over_steps("fsm_no_self_ratification", |s| {
            if let (Cmd::Ratify { .. }, true) = (&s.cmd, s.ok) {
                let c = s
                    .before
                    .claim(s.claim.as_ref().expect("addressed"))
                    .expect("existed");
                prop_assert_ne!(&c.proposer.id, &s.actor.as_ref().expect("actor").id);
            }
            Ok(())
        }),
        over_steps("fsm_generator_never_ratifies", |s| {
            if let (Cmd::Ratify { .. }, true) = (&s.cmd, s.ok) {
                prop_assert_ne!(s.actor.as_ref().expect("actor").kind, ActorKind::Generator);
            }
            Ok(())
        }),
        over_steps("fsm_ratification_requires_corroboration", |s| {
            if let (Cmd::Ratify { .. }, true) = (&s.cmd, s.ok) {
                let id = s.claim.as_ref().expect("addressed");
                let c = s.before.claim(id).expect("existed");
                prop_assert_eq!(c.layer, EpistemicLayer::L2);
                prop_assert_eq!(c.phase, Phase::Induction);
                prop_assert_eq!(s.after.claim(id).expect("exists").phase, Phase::Ratified);
                prop_assert_eq!(s.records_after, s.records_before + 1);
            }
            Ok(())
        }),
        over_steps("fsm_failed_commands_are_atomic", |s| {
            if !s.ok
                && matches!(
                    s.cmd,
                    Cmd::Promote { .. } | Cmd::Ratify { .. } | Cmd::Deploy { .. }
                )
            {
                prop_assert!(s.after == s.before, "failed {:?} modified the graph", s.cmd);
                prop_assert_eq!(s.records_after, s.records_before);
            }
            Ok(())
        }),
        over_steps("fsm_contradiction_blocks_promotion", |s| {
            if let (Cmd::Promote { .. }, true) = (&s.cmd, s.ok) {
                let c = s
                    .before
                    .claim(s.claim.as_ref().expect("addressed"))
                    .expect("existed");
                for o in &c.contradiction_refs {
                    let o = s.before.claim(o).expect("symmetric edge");
                    prop_assert!(
                        !(o.layer == EpistemicLayer::L2 && o.status == ClaimStatus::Active),
                        "{} promoted against validated {}",
                        c.id,
                        o.id
                    );
                }
            }
            Ok(())
        }),
        over_steps("fsm_history_well_formed", |s| {
            for c in s.after.claims() {
                let first = c.history.first().expect("proposal recorded");
                prop_assert_eq!(first.mode, InferenceMode::Abduction);
                for h in &c.history {
                    prop_assert_eq!(h.mode.layer(), h.layer);
                }
                for w in c.history.windows(2) {
                    prop_assert!(
                        layer_num(w[1].layer) <= layer_num(w[0].layer) + 1,
                        "{}: history skips",
                        c.id
                    );
                }
                prop_assert!(
                    layer_num(c.layer) <= layer_num(c.history.last().expect("non-empty").layer)
                );
            }
            Ok(())
        }),
        over_steps("fsm_phase_tracks_layer", |s| {
            for c in s.after.claims() {
                if !matches!(c.phase, Phase::Ratified | Phase::Operation) {
                    prop_assert_eq!(c.phase, Phase::for_layer(c.layer), "claim {}", c.id);
                }
            }
            Ok(())
        }),
        over_steps("fsm_audit_chain_valid", |s| {
            prop_assert!(verify_chain(&s.store_after).is_ok());
            if let (Cmd::Ratify { .. }, true) = (&s.cmd, s.ok) {
                let rec = s.store_after.records().last().expect("appended");
                prop_assert_eq!(Some(&rec.claim), s.claim.as_ref());
                prop_assert_eq!(
                    rec.steps.len(),
                    s.before.claim(&rec.claim).expect("existed").history.len()
                );
            }
            Ok(())
        }),
        Property::new(
            "fsm_reset_reaches_idle",
            Category::EpistemicFsm,
            |ctx: &Ctx| {
                ctx.check(select(&Phase::ALL[..]), |p| {
                    if p.is_terminal() {
                        prop_assert!(transition(p, Event::Reset).is_err());
                    } else {
                        prop_assert_eq!(
                            transition(p, Event::Reset).expect("reset allowed"),
                            Phase::Idle
                        );
                    }
                    Ok(())
                })
            },
        ),
        Property::new(
            "fsm_operation_is_terminal",
            Category::EpistemicFsm,
            |ctx: &Ctx| {
                ctx.check(select(&Event::ALL[..]), |e| {
                    prop_assert_eq!(
                        transition(Phase::Operation, e)
                            .expect_err("terminal")
                            .code(),
                        "IllegalTransition"
                    );
                    Ok(())
                })
            },
        ),
        Property::new(
            "fsm_transition_table",
            Category::EpistemicFsm,
            |ctx: &Ctx| {
                ctx.check(
                    (select(&Phase::ALL[..]), select(&Event::ALL[..])),
                    |(p, e)| {
                        prop_assert_eq!(transition(p, e).ok(), oracle(p, e), "{} --{}-->", p, e);
                        Ok(())
                    },
                )
            },
        ),
        Property::new(
            "fsm_every_phase_reachable",
            Category::EpistemicFsm,
            |ctx: &Ctx| {
                ctx.check(select(&Phase::ALL[..]), |target| {
                    let mut seen = BTreeSet::from([Phase::Idle]);
                    let mut queue = VecDeque::from([Phase::Idle]);
                    while let Some(p) = queue.pop_front() {
                        for e in Event::ALL {
                            if let Ok(q) = transition(p, e) {
                                if seen.insert(q) {
                                    queue.push_back(q);
                                }
                            }
                        }
                    }
                    prop_assert!(seen.contains(&target), "{} unreachable from idle", target);
                    Ok(())
                })
            },
        ),
    ]
}
