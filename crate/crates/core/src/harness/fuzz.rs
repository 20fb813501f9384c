//! Fuzz targets: IEEE 754 boundaries at every ingestion point, parser
//! mutation and round trips, store corruption, and readers racing a
//! writer.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use chrono::Duration;
use proptest::collection::{btree_set, vec};
use proptest::prelude::*;
use proptest::sample::{select, subsequence, Index};
use rand::RngExt;

use super::gen::{
    actor, boundary_f64, claim_id, evidence_id, pool_scope, scope, score, t0, topology_fixture,
    unit, Fixture,
};
use super::{Ctx, FuzzGroup, Outcome, Property};
use crate::drr::{
    verify_chain_bytes, ChainVerdict, DesignRationaleRecord, DrrStep, DrrStore, EvidenceProvenance,
    ValidityWindow,
};
use crate::fsm::{ActorKind, Phase};
use crate::gamma::{aggregate, OperatorKind};
use crate::graph::{
    adjust_evidence, decay_factor, two_tier_aggregate, ClaimNode, ClaimStatus, Evidence,
    GateEvidence, InferenceMode, KnowledgeGraph, PropagationMode, RoleGroups, SharedGraph,
};
use crate::model::{load_config, Config, EvidenceRole, FormalityLevel, VerificationMethod, SUITES};
use crate::scope::{parse_scope, serialize_scope, Scope};
use crate::score::{make_score, ReliabilityScore};
use crate::Error;

fn in_unit(v: f64) -> bool {
    v.is_finite() && (0.0..=1.0).contains(&v)
}

/// JSON text for `v`: a number when representable, otherwise (or when
/// `as_string`) the string form other tools use for non-finite values.
fn encode(v: f64, as_string: bool) -> serde_json::Value {
    if as_string || !v.is_finite() {
        serde_json::Value::String(v.to_string())
    } else {
        serde_json::json!(v)
    }
}

#[derive(Debug, Clone)]
enum Edit {
    Insert(Index, u8),
    Delete(Index),
    Replace(Index, u8),
    Duplicate(Index, Index),
}

/// Bytes that matter to the parsers, plus arbitrary ones.
fn edit_byte() -> impl Strategy<Value = u8> {
    prop_oneof![
        3 => select(b"{}[]\",:=*!-.0123456789eE \n\\az_".to_vec()),
        1 => any::<u8>(),
    ]
}

fn edits(max: usize) -> impl Strategy<Value = Vec<Edit>> {
    vec(
        prop_oneof![
            (any::<Index>(), edit_byte()).prop_map(|(i, b)| Edit::Insert(i, b)),
            any::<Index>().prop_map(Edit::Delete),
            (any::<Index>(), edit_byte()).prop_map(|(i, b)| Edit::Replace(i, b)),
            (any::<Index>(), any::<Index>()).prop_map(|(a, b)| Edit::Duplicate(a, b)),
        ],
        1..=max,
    )
}

fn apply(text: &str, edits: &[Edit]) -> String {
    let mut b = text.as_bytes().to_vec();
    for e in edits {
        let n = b.len();
        match e {
            Edit::Insert(i, x) => b.insert(i.index(n + 1), *x),
            Edit::Delete(i) if n > 0 => {
                b.remove(i.index(n));
            }
            Edit::Replace(i, x) if n > 0 => {
                let i = i.index(n);
                b[i] = *x;
            }
            Edit::Duplicate(i, j) if n > 0 => {
                let (a, z) = (i.index(n), j.index(n));
                let (a, z) = (a.min(z), a.max(z));
                let chunk = b[a..=z].to_vec();
                b.splice(z + 1..z + 1, chunk);
            }
            _ => {}
        }
    }
    String::from_utf8_lossy(&b).into_owned()
}

pub(super) fn properties() -> Vec<Property> {
    vec![
        // Numeric boundaries.
        Property::fuzz(
            "fuzz_make_score_boundaries",
            FuzzGroup::NumericBoundaries,
            |ctx| {
                ctx.check((boundary_f64(), any::<bool>()), |(v, as_string)| {
                    match make_score(v) {
                        Ok(s) => {
                            prop_assert!(in_unit(v));
                            prop_assert!(s.value() == v && !s.value().is_sign_negative());
                        }
                        Err(e) => {
                            prop_assert!(!in_unit(v));
                            prop_assert_eq!(e.code(), "RangeViolation");
                        }
                    }
                    let parsed = serde_json::from_value::<ReliabilityScore>(encode(v, as_string));
                    prop_assert_eq!(parsed.is_ok(), in_unit(v), "deserializing {:?}", v);
                    Ok(())
                })
            },
        ),
        Property::fuzz(
            "fuzz_aggregate_boundaries",
            FuzzGroup::NumericBoundaries,
            |ctx| {
                ctx.check(vec(boundary_f64(), 0..=8), |raw| {
                    let scores: Vec<ReliabilityScore> =
                        raw.iter().filter_map(|v| make_score(*v).ok()).collect();
                    for op in OperatorKind::ALL {
                        let Ok(r) = aggregate(op, &scores) else {
                            prop_assert!(scores.is_empty());
                            continue;
                        };
                        prop_assert!(in_unit(r.value()), "{op:?} escaped to {}", r.value());
                        let min = scores
                            .iter()
                            .copied()
                            .fold(ReliabilityScore::ONE, ReliabilityScore::min);
                        let max = scores
                            .iter()
                            .copied()
                            .fold(ReliabilityScore::ZERO, ReliabilityScore::max);
                        match op {
                            OperatorKind::GodelMin => {
                                prop_assert_eq!(r.value().to_bits(), min.value().to_bits())
                            }
                            OperatorKind::Max => {
                                prop_assert_eq!(r.value().to_bits(), max.value().to_bits())
                            }
                            OperatorKind::Product => prop_assert!(r <= min),
                            OperatorKind::Mean => prop_assert!(
                                r.value() >= min.value() - op.slack()
                                    && r.value() <= max.value() + op.slack()
                            ),
                        }
                    }
                    Ok(())
                })
            },
        ),
        Property::fuzz(
            "fuzz_two_tier_boundaries",
            FuzzGroup::NumericBoundaries,
            |ctx| {
                ctx.check(role_groups(), |groups| {
                    let Ok(r) = two_tier_aggregate(&groups) else {
                        prop_assert!(groups.is_empty());
                        return Ok(());
                    };
                    prop_assert!(in_unit(r.value()));
                    if groups.gate.iter().any(|g| !g.passed) {
                        prop_assert_eq!(r.value(), 0.0, "a failed gate left {}", r.value());
                    }
                    let roles = groups.role_scores();
                    for (name, s) in &roles {
                        prop_assert!(in_unit(s.value()), "{name} role at {}", s.value());
                        prop_assert!(
                            r <= *s,
                            "overall {} above role {name} at {}",
                            r.value(),
                            s.value()
                        );
                    }
                    prop_assert!(
                        roles.iter().any(|(_, s)| *s == r),
                        "overall is not a role score"
                    );
                    Ok(())
                })
            },
        ),
        Property::fuzz(
            "fuzz_decay_boundaries",
            FuzzGroup::NumericBoundaries,
            |ctx| {
                let offset = || {
                    prop_oneof![
                        select(vec![
                            0i64,
                            1,
                            -1,
                            86_400_000,
                            7 * 86_400_000,
                            7 * 86_400_000 + 1,
                            i64::from(i32::MAX)
                        ]),
                        -1_000_000_000_000i64..1_000_000_000_000,
                        0i64..40 * 86_400_000,
                    ]
                };
                ctx.check(
                    (offset(), offset(), 0u32..=30, boundary_f64()),
                    |(a, b, grace, raw)| {
                        let cfg = Config {
                            grace_days: grace,
                            ..Config::default()
                        };
                        let until = t0();
                        let f =
                            |ms: i64| decay_factor(until + Duration::milliseconds(ms), until, &cfg);
                        let (lo, hi) = (a.min(b), a.max(b));
                        prop_assert!(in_unit(f(lo)) && in_unit(f(hi)));
                        prop_assert!(f(hi) <= f(lo), "decay rose from {} to {}", f(lo), f(hi));
                        if lo <= 0 {
                            prop_assert_eq!(f(lo), 1.0);
                        }
                        if hi >= i64::from(grace) * 86_400_000 && hi > 0 {
                            prop_assert_eq!(f(hi), 0.0);
                        }
                        if let Ok(s) = make_score(raw) {
                            let mut e = Evidence::new(
                                "e",
                                s,
                                FormalityLevel::F0,
                                Scope::TOP,
                                VerificationMethod::ExecutedVerified,
                                EvidenceRole::Other,
                                until - cfg.validity(FormalityLevel::F0),
                                &cfg,
                            );
                            e.valid_until = until;
                            let adj = adjust_evidence(
                                &e,
                                &Scope::TOP,
                                until + Duration::milliseconds(hi),
                                &cfg,
                            );
                            let v = adj.score().expect("TOP always matches").value();
                            prop_assert!(in_unit(v) && v <= s.value());
                        }
                        Ok(())
                    },
                )
            },
        ),
        Property::fuzz(
            "fuzz_persistence_nan_rejection",
            FuzzGroup::NumericBoundaries,
            |ctx| {
                ctx.check(
                    (boundary_f64(), any::<bool>(), any::<bool>()),
                    |(v, on_claim, as_string)| {
                        let mut lines: Vec<serde_json::Value> = one_claim_graph()
                            .to_jsonl()
                            .lines()
                            .map(|l| serde_json::from_str(l).expect("own output"))
                            .collect();
                        let (line, field) = if on_claim {
                            (1, "cached_r_eff")
                        } else {
                            (0, "raw_score")
                        };
                        lines[line][field] = encode(v, as_string);
                        let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
                        match KnowledgeGraph::from_jsonl(&text) {
                            Ok(g) => {
                                prop_assert!(in_unit(v), "{} accepted in {}", v, field);
                                let stored = if on_claim {
                                    g.claim("c").expect("loaded").cached_r_eff
                                } else {
                                    g.evidence("e").expect("loaded").raw_score
                                };
                                prop_assert!(in_unit(stored.value()));
                            }
                            Err(e) => {
                                prop_assert!(!in_unit(v), "{} rejected: {}", v, e);
                                prop_assert!(
                                    matches!(e.code(), "RangeViolation" | "PersistenceError"),
                                    "{}",
                                    e
                                );
                            }
                        }
                        Ok(())
                    },
                )
            },
        ),
        Property::fuzz(
            "fuzz_config_numeric_rejection",
            FuzzGroup::NumericBoundaries,
            |ctx| {
                const KEYS: [(&str, &str); 13] = [
                    ("formality_ceilings", "F0"),
                    ("formality_ceilings", "F1"),
                    ("formality_ceilings", "F2"),
                    ("formality_ceilings", "F3"),
                    ("layer_ceilings", "L0"),
                    ("layer_ceilings", "L1"),
                    ("layer_ceilings", "L2"),
                    ("congruence_penalties", "CL2"),
                    ("congruence_penalties", "CL1"),
                    ("verification_multipliers", "self_reported"),
                    ("verification_multipliers", "script_attached"),
                    ("verification_multipliers", "executed_verified"),
                    ("faithfulness_cap", ""),
                ];
                ctx.check(
                    (select(&KEYS[..]), boundary_f64(), any::<bool>()),
                    |((section, key), v, as_string)| {
                        let doc = if key.is_empty() {
                            serde_json::json!({ section: encode(v, as_string) })
                        } else {
                            serde_json::json!({ section: { key: encode(v, as_string) } })
                        };
                        match load_config(&doc.to_string()) {
                            Ok(cfg) => {
                                let allowed = match section {
                                    "verification_multipliers" => in_unit(v) && v > 0.0,
                                    _ => in_unit(v),
                                };
                                prop_assert!(allowed, "{}.{} = {} accepted", section, key, v);
                                prop_assert!(cfg.clone().validated().is_ok());
                            }
                            Err(e) => {
                                prop_assert!(
                                    matches!(
                                        e.code(),
                                        "RangeViolation" | "OrderingViolation" | "ConfigError"
                                    ),
                                    "{}",
                                    e
                                );
                                if !v.is_finite() {
                                    prop_assert_eq!(e.code(), "RangeViolation");
                                }
                            }
                        }
                        Ok(())
                    },
                )
            },
        ),
        // Scope parser.
        Property::fuzz("fuzz_scope_mutation", FuzzGroup::ScopeParser, |ctx| {
            ctx.check((scope(), edits(4)), |(s, ed)| {
                let text = apply(&serialize_scope(&s), &ed);
                match parse_scope(&text) {
                    Ok(p) => {
                        let canon = serialize_scope(&p);
                        prop_assert_eq!(parse_scope(&canon).expect("canonical parses"), p);
                    }
                    Err(Error::Parse { offset, .. }) => prop_assert!(offset <= text.len()),
                    Err(e) => prop_assert!(false, "unexpected error {}", e),
                }
                Ok(())
            })
        }),
        Property::fuzz(
            "fuzz_scope_round_trip_stability",
            FuzzGroup::ScopeParser,
            |ctx| {
                ctx.check(
                    scope().prop_flat_map(|s| {
                        let pairs: Vec<String> = s
                            .constraints()
                            .map(|c| c.iter().map(|(k, v)| format!("{k}={v}")).collect())
                            .unwrap_or_default();
                        (Just(s), Just(pairs).prop_shuffle())
                    }),
                    |(s, shuffled)| {
                        let canon = serialize_scope(&s);
                        if let Some(c) = s.constraints().filter(|c| !c.is_empty()) {
                            prop_assert_eq!(shuffled.len(), c.len());
                            let p =
                                parse_scope(&shuffled.join(",")).expect("any pair order parses");
                            prop_assert_eq!(&p, &s);
                        }
                        let once = serialize_scope(&parse_scope(&canon).expect("canonical parses"));
                        prop_assert_eq!(&once, &canon);
                        prop_assert_eq!(
                            serialize_scope(&parse_scope(&once).expect("parses")),
                            once
                        );
                        Ok(())
                    },
                )
            },
        ),
        Property::fuzz("fuzz_scope_error_offsets", FuzzGroup::ScopeParser, |ctx| {
            let bad = select(vec!["A", " ", "#", "*", "!", "/", ":", ";", "\u{e9}", "\t"]);
            ctx.check((scope(), any::<Index>(), bad), |(s, at, b)| {
                let canon = serialize_scope(&s);
                if s.is_bottom() || s.is_top() {
                    return Ok(());
                }
                let p = at.index(canon.len() + 1);
                let text = format!("{}{}{}", &canon[..p], b, &canon[p..]);
                match parse_scope(&text) {
                    Err(Error::Parse { offset, .. }) => prop_assert_eq!(offset, p, "in {:?}", text),
                    other => prop_assert!(false, "{:?} gave {:?}", text, other),
                }
                Ok(())
            })
        }),
        // Config parser.
        Property::fuzz("fuzz_config_mutation", FuzzGroup::ConfigParser, |ctx| {
            ctx.check((valid_config(), edits(6)), |(cfg, ed)| {
                let text = apply(&cfg.to_json().to_string(), &ed);
                if let Ok(loaded) = load_config(&text) {
                    prop_assert!(loaded.clone().validated().is_ok());
                    let again =
                        load_config(&loaded.to_json().to_string()).expect("own output loads");
                    prop_assert_eq!(again, loaded);
                }
                Ok(())
            })
        }),
        Property::fuzz("fuzz_config_round_trip", FuzzGroup::ConfigParser, |ctx| {
            ctx.check(valid_config(), |cfg| {
                let text = cfg.to_json().to_string();
                let loaded = load_config(&text).expect("valid config loads");
                prop_assert_eq!(&loaded, &cfg);
                prop_assert_eq!(loaded.to_json().to_string(), text);
                Ok(())
            })
        }),
        // Persistence.
        Property::fuzz("fuzz_graph_file_mutation", FuzzGroup::Persistence, |ctx| {
            ctx.check((topology_fixture(), edits(6)), |(fx, ed)| {
                let g = fx.propagated(&Config::default(), OperatorKind::GodelMin);
                let text = apply(&g.to_jsonl(), &ed);
                if let Ok(loaded) = KnowledgeGraph::from_jsonl(&text) {
                    prop_assert!(loaded.topological_order().is_ok());
                    let again =
                        KnowledgeGraph::from_jsonl(&loaded.to_jsonl()).expect("own output loads");
                    prop_assert!(again == loaded);
                    for c in loaded.claims() {
                        for r in c.dependency_refs.iter().chain(&c.contradiction_refs) {
                            prop_assert!(loaded.claim(r).is_ok(), "dangling {r}");
                        }
                        for e in &c.evidence_refs {
                            prop_assert!(loaded.evidence(e).is_ok(), "dangling {e}");
                        }
                    }
                }
                Ok(())
            })
        }),
        Property::fuzz(
            "fuzz_audit_chain_corruption",
            FuzzGroup::Persistence,
            |ctx| {
                ctx.check(
                    (drr_store(), any::<Index>(), any::<Index>(), any::<u8>()),
                    |(store, k, at, byte)| {
                        let text = store.to_jsonl();
                        let k = k.index(store.records().len());
                        let (start, len) = record_span(&text, k);
                        let pos = start + at.index(len);
                        let mut bytes = text.into_bytes();
                        bytes[pos] = if bytes[pos] == byte {
                            byte.wrapping_add(1)
                        } else {
                            byte
                        };
                        match verify_chain_bytes(&bytes) {
                            ChainVerdict::FirstBadRecord { index, .. } => prop_assert_eq!(index, k),
                            other => {
                                prop_assert!(false, "corrupting record {} gave {:?}", k, other)
                            }
                        }
                        Ok(())
                    },
                )
            },
        ),
        Property::fuzz("fuzz_audit_chain_splice", FuzzGroup::Persistence, |ctx| {
            ctx.check((drr_store(), any::<Index>(), 0u8..3), |(store, k, op)| {
                let text = store.to_jsonl();
                let mut lines: Vec<&str> = text.lines().collect();
                let n = store.records().len();
                let k = k.index(n);
                // Header is line 0; record i is line i + 1.
                let expected = match op {
                    0 if k + 1 < n => {
                        lines.remove(k + 1);
                        k
                    }
                    1 if k + 1 < n => {
                        lines.swap(k + 1, k + 2);
                        k
                    }
                    _ => {
                        lines.insert(k + 2, lines[k + 1]);
                        k + 1
                    }
                };
                let spliced: String = lines.iter().map(|l| format!("{l}\n")).collect();
                match verify_chain_bytes(spliced.as_bytes()) {
                    ChainVerdict::FirstBadRecord { index, .. } => prop_assert_eq!(index, expected),
                    other => prop_assert!(false, "splice {} at {} gave {:?}", op, k, other),
                }
                Ok(())
            })
        }),
        // Concurrency.
        Property::fuzz(
            "fuzz_concurrent_snapshot_consistency",
            FuzzGroup::Concurrency,
            snapshot_consistency,
        ),
        Property::fuzz(
            "fuzz_concurrent_sweep_consistency",
            FuzzGroup::Concurrency,
            sweep_consistency,
        ),
    ]
}

fn role_groups() -> impl Strategy<Value = RoleGroups> {
    let gate = (score(), prop_oneof![4 => Just(true), 1 => Just(false)])
        .prop_map(|(score, passed)| GateEvidence { score, passed });
    (
        vec(gate, 0..=3),
        vec(score(), 0..=4),
        vec(score(), 0..=4),
        vec(score(), 0..=3),
    )
        .prop_map(|(gate, performance, quality, other)| RoleGroups {
            gate,
            performance,
            quality,
            other,
        })
}

fn one_claim_graph() -> KnowledgeGraph {
    let cfg = Config::default();
    let mut g = KnowledgeGraph::new();
    let e = Evidence::new(
        "e",
        ReliabilityScore::new(0.8).expect("in range"),
        FormalityLevel::F1,
        Scope::TOP,
        VerificationMethod::ExecutedVerified,
        EvidenceRole::Other,
        t0(),
        &cfg,
    );
    g.add_evidence(e).expect("fresh");
    let c = ClaimNode::new(
        "c",
        "claim",
        FormalityLevel::F1,
        Scope::TOP,
        actor("a", ActorKind::Generator),
    );
    g.add_claim(c).expect("fresh");
    g.attach_evidence("c", "e").expect("both exist");
    g.propagate(&cfg, t0(), PropagationMode::Full)
        .expect("acyclic");
    g
}

/// Exact binary fractions in (0, 1].
fn fraction() -> impl Strategy<Value = f64> {
    (1u64..=1 << 53).prop_map(|k| k as f64 / (1u64 << 53) as f64)
}

fn increasing<const N: usize>() -> impl Strategy<Value = [ReliabilityScore; N]> {
    btree_set(1u64..=1 << 53, N).prop_map(|s| {
        let v: Vec<ReliabilityScore> = s
            .into_iter()
            .map(|k| ReliabilityScore::new(k as f64 / (1u64 << 53) as f64).expect("in range"))
            .collect();
        v.try_into().expect("N distinct values")
    })
}

fn valid_config() -> impl Strategy<Value = Config> {
    (
        increasing::<4>(),
        increasing::<3>(),
        (unit(), unit()),
        vec(fraction(), 4),
        btree_set(1u32..=10_000, 4),
        0u32..=60,
        vec(
            (
                subsequence(SUITES.to_vec(), 0..=SUITES.len()),
                1u64..=1_000_000,
            ),
            1,
        ),
        proptest::option::of(score()),
    )
        .prop_map(|(fc, lc, (p2, p1), vm, vd, grace, cases, cap)| {
            let mut cfg = Config {
                formality_ceilings: fc,
                layer_ceilings: lc,
                congruence_penalties: [p2, p1],
                verification_multipliers: vm.try_into().expect("four"),
                validity_days: vd.into_iter().collect::<Vec<_>>().try_into().expect("four"),
                grace_days: grace,
                faithfulness_cap: cap,
                ..Config::default()
            };
            for (suites, n) in cases {
                for s in suites {
                    cfg.pbt_cases.insert(s.to_string(), n);
                }
            }
            cfg.validated().expect("generated valid")
        })
}

fn drr_record() -> impl Strategy<Value = DesignRationaleRecord> {
    let mode = select(vec![
        InferenceMode::Abduction,
        InferenceMode::Deduction,
        InferenceMode::Induction,
    ]);
    let step = (
        mode,
        select(vec!["gen-a", "ver-b", "hum-c"]),
        vec(("[a-z0-9]{1,6}", "[a-z:-]{0,16}"), 0..=2),
    )
        .prop_map(|(mode, a, ev)| DrrStep {
            claim: "c".into(),
            mode,
            layer: mode.layer(),
            actor: a.into(),
            evidence: ev
                .into_iter()
                .map(|(id, provenance)| EvidenceProvenance { id, provenance })
                .collect(),
        });
    (
        0..8usize,
        "[ -~]{0,24}",
        vec(step, 1..=3),
        score(),
        0..6usize,
        (0i64..1000, 1i64..400),
        select(vec![ActorKind::Verifier, ActorKind::Human]),
        proptest::option::of("drr-[0-9]{1,3}"),
    )
        .prop_map(
            |(c, decision, mut steps, r, sc, (from, span), kind, supersedes)| {
                for s in &mut steps {
                    s.claim = claim_id(c);
                }
                let from = t0() + Duration::days(from);
                DesignRationaleRecord {
                    drr_id: format!("drr-{c}-{}", steps.len()),
                    claim: claim_id(c),
                    decision,
                    steps,
                    final_r_eff: r,
                    scope_spec: pool_scope(sc),
                    validity_window: ValidityWindow {
                        from,
                        until: from + Duration::days(span),
                    },
                    ratifier: actor("rat", kind),
                    supersedes,
                    prev_hash: String::new(),
                    this_hash: String::new(),
                }
            },
        )
}

fn drr_store() -> impl Strategy<Value = DrrStore> {
    vec(drr_record(), 1..=5).prop_map(|records| {
        let mut store = DrrStore::new();
        for r in records {
            store.append(r);
        }
        store
    })
}

/// Byte offset and length of record `k`'s line, excluding its newline.
fn record_span(text: &str, k: usize) -> (usize, usize) {
    let mut start = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i == k + 1 {
            return (start, line.trim_end_matches('\n').len());
        }
        start += line.len();
    }
    unreachable!("record {k} exists")
}

const READERS: usize = 8;

/// Runs `writer` against `READERS` threads that call `read` on every
/// snapshot they see. Returns the first problem any thread reports.
fn race(
    shared: &SharedGraph,
    writer: impl FnOnce(&AtomicBool) -> Result<(), String> + Send,
    read: impl Fn(&KnowledgeGraph) -> Result<(), String> + Sync,
) -> Option<String> {
    let done = AtomicBool::new(false);
    let problem: Mutex<Option<String>> = Mutex::new(None);
    let report = |msg: String| {
        problem.lock().expect("poisoned").get_or_insert(msg);
        done.store(true, Ordering::Relaxed);
    };
    std::thread::scope(|s| {
        for _ in 0..READERS {
            s.spawn(|| {
                let mut seen = 0u64;
                while !done.load(Ordering::Relaxed) || seen == 0 {
                    seen += 1;
                    if let Err(msg) = read(&shared.snapshot()) {
                        report(msg);
                        break;
                    }
                }
            });
        }
        let r = writer(&done);
        done.store(true, Ordering::Relaxed);
        if let Err(msg) = r {
            report(msg);
        }
    });
    problem.into_inner().expect("poisoned")
}

fn bits(g: &KnowledgeGraph) -> Vec<u64> {
    g.claims()
        .map(|c| c.cached_r_eff.value().to_bits())
        .collect()
}

fn snapshot_consistency(ctx: &Ctx) -> Outcome {
    let cfg = Config::default();
    let fx: Fixture = ctx.sample(topology_fixture());
    let shared = SharedGraph::new(fx.propagated(&cfg, ctx.op));
    let count = fx.evidence_count();
    let mut rng = ctx.rng();
    let writer = |stop: &AtomicBool| {
        for _ in 0..ctx.cases {
            if stop.load(Ordering::Relaxed) {
                break;
            }
            let raw = match rng.random_range(0..8) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random::<f64>(),
            };
            let target = (count > 0).then(|| {
                fx.nth_evidence(rng.random_range(0..count))
                    .expect("in range")
            });
            shared
                .update(|g| {
                    if let Some((n, j)) = target {
                        g.set_evidence_score(&evidence_id(n, j), ReliabilityScore::new(raw)?)?;
                    }
                    g.propagate(&cfg, t0(), PropagationMode::Incremental)
                        .map(drop)
                })
                .map_err(|e| e.to_string())?;
        }
        Ok(())
    };
    let read = |g: &KnowledgeGraph| {
        let mut full = g.clone();
        full.propagate(&cfg, t0(), PropagationMode::Full)
            .map_err(|e| e.to_string())?;
        if bits(&full) != bits(g) {
            return Err("snapshot differs from a full recomputation".into());
        }
        for c in g.claims() {
            for d in &c.dependency_refs {
                let p = g.claim(d).map_err(|e| e.to_string())?;
                if c.cached_r_eff > p.cached_r_eff {
                    return Err(format!(
                        "{} at {} above premise {d} at {}",
                        c.id, c.cached_r_eff, p.cached_r_eff
                    ));
                }
            }
        }
        Ok(())
    };
    match race(&shared, writer, read) {
        None => Outcome::pass(u64::from(ctx.cases)),
        Some(msg) => Outcome::fail(0, format!("{} nodes", fx.nodes.len()), msg),
    }
}

fn sweep_consistency(ctx: &Ctx) -> Outcome {
    let cfg = Config::default();
    let fx: Fixture = ctx.sample(topology_fixture());
    let fresh = fx.propagated(&cfg, ctx.op);
    let shared = SharedGraph::new(fresh.clone());
    let mut rng = ctx.rng();
    let writer = |stop: &AtomicBool| {
        let mut now = t0();
        for _ in 0..ctx.cases {
            if stop.load(Ordering::Relaxed) {
                break;
            }
            if rng.random_range(0..16) == 0 {
                now = t0();
                shared.update(|g| {
                    *g = fresh.clone();
                    Ok(())
                })
            } else {
                now += Duration::hours(rng.random_range(0..=24 * 30));
                shared.update(|g| g.sweep_stale(&cfg, now).map(drop))
            }
            .map_err(|e| e.to_string())?;
        }
        Ok(())
    };
    let read = |g: &KnowledgeGraph| {
        for c in g.claims() {
            if c.phase != Phase::for_layer(c.layer) {
                return Err(format!("{} at {} in phase {}", c.id, c.layer, c.phase));
            }
            if c.status == ClaimStatus::Stale {
                for d in g.descendants(&c.id) {
                    let status = g.claim(&d).map_err(|e| e.to_string())?.status;
                    if matches!(status, ClaimStatus::Active | ClaimStatus::Contradicted) {
                        return Err(format!("{} is stale but its dependent {d} is not", c.id));
                    }
                }
            }
        }
        Ok(())
    };
    match race(&shared, writer, read) {
        None => Outcome::pass(u64::from(ctx.cases)),
        Some(msg) => Outcome::fail(0, format!("{} nodes", fx.nodes.len()), msg),
    }
}
