//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::Instant;

use adi_core::fsm::{transition, ActorId, ActorKind, Event, Phase};
use adi_core::gamma::{aggregate, quintet_report, OperatorKind};
use adi_core::graph::{ClaimNode, Evidence, KnowledgeGraph};
use adi_core::harness::{
    run_suite, run_suite_with, Category, Selection, SuiteOptions, SuiteReport,
};
use adi_core::model::{Config, EpistemicLayer, EvidenceRole, FormalityLevel, VerificationMethod};
use adi_core::scope::Scope;
use adi_core::ReliabilityScore;
use common::{Sandbox, T0};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($fmt)+)),
        }
    };
}

fn t0() -> adi_core::graph::Timestamp {
    T0.parse().unwrap()
}

fn s(v: f64) -> ReliabilityScore {
    ReliabilityScore::new(v).unwrap()
}

fn property(name: &str, cases: u32, seed: u64) -> Check {
    let r = run_suite(Selection::Property(name.into()), cases, seed);
    let p = r
        .property(name)
        .ok_or_else(|| format!("no property {name}"))?;
    ensure!(p.passed, "{name} failed: {:?}", p.counterexample);
    ensure!(
        p.cases_run == u64::from(cases),
        "{name} ran {} of {cases} cases",
        p.cases_run
    );
    Ok(format!("{name} x{cases}"))
}

fn quintet() -> Check {
    let start = Instant::now();
    let n = 100_000;
    let min = quintet_report(OperatorKind::GodelMin, n, 1);
    for inv in ["IDEM", "COMM", "WLNK", "MONO"] {
        let r = min.get(inv);
        ensure!(r.pass && r.cases_run == n, "min {inv}: {r:?}");
    }
    let product = quintet_report(OperatorKind::Product, n, 2);
    for inv in ["WLNK", "MONO"] {
        let r = product.get(inv);
        ensure!(r.pass && r.cases_run == n, "product {inv}: {r:?}");
    }
    let mean = quintet_report(OperatorKind::Mean, 1_000, 3);
    for inv in ["IDEM_MULTISET", "WLNK"] {
        let r = mean.get(inv);
        ensure!(
            !r.pass && r.counterexample.is_some() && r.cases_run <= 1_000,
            "mean {inv}: {r:?}"
        );
    }
    let max = quintet_report(OperatorKind::Max, 1_000, 4);
    let r = max.get("WLNK");
    ensure!(
        !r.pass && r.counterexample.is_some() && r.cases_run <= 1_000,
        "max WLNK: {r:?}"
    );
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1}s");
    Ok(format!(
        "min/product hold over {n} cases; mean WLNK broken at case {}, max WLNK at case {}; {secs:.1}s",
        mean.get("WLNK").cases_run,
        r.cases_run
    ))
}

fn worked_chain() -> Check {
    let steps = [s(0.95), s(0.85), s(0.40)];
    let min = aggregate(OperatorKind::GodelMin, &steps).unwrap().value();
    let mean = aggregate(OperatorKind::Mean, &steps).unwrap().value();
    ensure!(min == 0.40, "min gave {min}");
    ensure!((mean - 2.2 / 3.0).abs() < 1e-9, "mean gave {mean}");

    let sb = Sandbox::worked_chain();
    let text = sb.ok(&["score", "S3"]).out;
    ensure!(text.contains("R_eff = 0.4 "), "score output: {text}");
    ensure!(
        text.contains("dominating: evidence e3 (0.4)"),
        "score output: {text}"
    );
    ensure!(text.contains("weakest link: S3"), "score output: {text}");
    let v = sb.ok(&["--json", "score", "S3"]).json();
    ensure!(v["r_eff"] == 0.4, "json r_eff {}", v["r_eff"]);
    ensure!(
        v["dominating"] == serde_json::json!({"kind": "evidence", "id": "e3"}),
        "{}",
        v["dominating"]
    );
    ensure!(v["weakest_link"] == "S3", "{}", v["weakest_link"]);
    Ok(format!(
        "min 0.4, mean {mean:.10}; CLI names e3 of S3 as the dominating step"
    ))
}

fn bare(id: &str, layer: EpistemicLayer, f: FormalityLevel) -> ClaimNode {
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

fn contradiction_cap() -> Check {
    let cfg = Config::default();
    let mut g = KnowledgeGraph::new();
    for (id, raw) in [("p", 0.9), ("q", 0.3)] {
        let e = format!("e{id}");
        g.add_evidence(evidence(&e, raw, FormalityLevel::F3, &cfg))
            .unwrap();
        g.add_claim(bare(id, EpistemicLayer::L2, FormalityLevel::F3))
            .unwrap();
        g.attach_evidence(id, &e).unwrap();
    }
    g.add_claim(bare("c", EpistemicLayer::L2, FormalityLevel::F3))
        .unwrap();
    g.link_dependency("c", "p").unwrap();
    g.link_dependency("c", "q").unwrap();
    g.declare_contradiction("p", "q").unwrap();
    let r = g.effective_reliability("c", &cfg, t0()).unwrap().value();
    ensure!(r <= 0.3, "conclusion scored {r}");
    ensure!(
        r == 0.3,
        "conclusion scored {r}, expected the 0.3 premise exactly"
    );
    Ok(format!("premises 0.9 / 0.3 give {r}"))
}

fn dual_ceiling() -> Check {
    let cfg = Config::default();
    let mut g = KnowledgeGraph::new();
    g.add_claim(bare("a", EpistemicLayer::L0, FormalityLevel::F3))
        .unwrap();
    g.add_claim(bare("b", EpistemicLayer::L2, FormalityLevel::F2))
        .unwrap();
    let a = g.effective_reliability("a", &cfg, t0()).unwrap().value();
    let b = g.effective_reliability("b", &cfg, t0()).unwrap().value();
    ensure!(a == 0.35, "L0/F3 scored {a}");
    ensure!(b == 0.95, "L2/F2 scored {b}");
    Ok(format!("L0/F3 = {a}, L2/F2 = {b}"))
}

fn faithfulness() -> Check {
    let sb = Sandbox::bare();
    let cfg = sb.path().join("cap.json");
    std::fs::write(&cfg, r#"{"faithfulness_cap": 0.39}"#).unwrap();
    let cfg = cfg.display().to_string();
    sb.ok(&["--config", &cfg, "init"]);
    sb.ok(&[
        "add-evidence",
        "--id",
        "e",
        "--score",
        "0.85",
        "--formality",
        "F1",
        "--method",
        "executed_verified",
        "--provenance",
        "llm-generated",
    ]);
    sb.ok(&[
        "add-claim",
        "model-written finding",
        "--id",
        "c",
        "--formality",
        "F1",
        "--actor",
        "llm-1",
        "--evidence",
        "e",
    ]);
    sb.ok(&["promote", "c", "--actor", "reviewer"]);
    let v = sb.ok(&["--json", "score", "c"]).json();
    ensure!(v["r_eff"] == 0.39, "scored {}", v["r_eff"]);
    // Without the policy the same store scores the evidence itself.
    let plain = sb.path().join("plain.json");
    std::fs::write(&plain, "{}").unwrap();
    let v2 = sb
        .ok(&[
            "--config",
            &plain.display().to_string(),
            "--json",
            "score",
            "c",
        ])
        .json();
    ensure!(v2["r_eff"] == 0.75, "uncapped scored {}", v2["r_eff"]);
    Ok("capped at 0.39 exactly (0.75 without the policy)".into())
}

fn locality() -> Check {
    let a = property("topology_incremental_equals_full", 1_000, 6)?;
    let b = property("topology_perturbation_locality", 1_000, 6)?;
    Ok(format!("{a}; {b}"))
}

fn fsm() -> Check {
    let mut done = Vec::new();
    for name in [
        "fsm_no_layer_skip",
        "fsm_no_self_promotion",
        "fsm_no_self_ratification",
    ] {
        done.push(property(name, 10_000, 7)?);
    }
    for p in Phase::ALL {
        let reset = transition(p, Event::Reset);
        if p == Phase::Operation {
            for e in Event::ALL {
                ensure!(transition(p, e).is_err(), "operation accepts {e}");
            }
        } else {
            ensure!(reset == Ok(Phase::Idle), "{p} reset gave {reset:?}");
        }
    }
    Ok(format!(
        "{}; exhaustive reset/terminal check over {} phases",
        done.join(", "),
        Phase::ALL.len()
    ))
}

fn scope_algebra() -> Check {
    let r = run_suite(Selection::Category(Category::ScopeAlgebra), 100_000, 8);
    let c = r.category(Category::ScopeAlgebra).unwrap();
    ensure!(r.passed(), "{:?}", c.first_counterexample);
    ensure!(
        c.properties.iter().all(|p| p.cases_run == 100_000),
        "short run"
    );
    let m = property("fuzz_scope_mutation", 100_000, 8)?;
    Ok(format!(
        "{} lattice/round-trip properties x100000; {m}",
        c.properties_defined
    ))
}

fn two_tier() -> Check {
    property("fuzz_two_tier_boundaries", 10_000, 9)
}

fn inventory() -> Check {
    let cases = 400;
    let a = run_suite(Selection::All, cases, 42);
    let b = run_suite_with(&SuiteOptions {
        threads: Some(1),
        ..SuiteOptions::new(Selection::All, cases, 42)
    });
    let names: Vec<&str> = a.categories.iter().map(|c| c.name.name()).collect();
    let expected: Vec<&str> = Category::ALL.iter().map(|c| c.name()).collect();
    let mut sorted = expected.clone();
    sorted.sort();
    let mut got = names.clone();
    got.sort();
    ensure!(got == sorted, "categories {names:?}");
    let fuzz = a.category(Category::Fuzz).unwrap().properties_defined;
    let props = a.total_properties() - fuzz;
    ensure!(
        props >= 100 && fuzz >= 16,
        "{props} properties + {fuzz} fuzz targets"
    );
    for c in Category::ALL {
        let r = a.category(c).unwrap();
        ensure!(
            r.properties_defined >= c.required(),
            "{c}: {} < {}",
            r.properties_defined,
            c.required()
        );
    }
    ensure!(a.passed(), "failures: {}", failing(&a));
    ensure!(a == b, "two runs with seed 42 differ");
    Ok(format!("{props} properties + {fuzz} fuzz targets, all passing at {cases} cases; identical on rerun"))
}

fn failing(r: &SuiteReport) -> String {
    r.categories
        .iter()
        .flat_map(|c| &c.properties)
        .filter(|p| !p.passed)
        .map(|p| format!("{} {:?}", p.name, p.counterexample))
        .collect::<Vec<_>>()
        .join("; ")
}

fn staleness() -> Check {
    let sb = Sandbox::new();
    let until = "2026-02-01T00:00:00Z";
    sb.ok(&[
        "add-evidence",
        "--id",
        "old",
        "--score",
        "0.9",
        "--method",
        "script_attached",
        "--valid-until",
        until,
    ]);
    sb.ok(&[
        "add-evidence",
        "--id",
        "fresh",
        "--score",
        "0.9",
        "--method",
        "script_attached",
        "--formality",
        "F3",
    ]);
    let claims: [(&str, &[&str]); 5] = [
        ("sole", &["--evidence", "old"]),
        ("both", &["--evidence", "old", "--evidence", "fresh"]),
        ("child", &["--depends-on", "sole"]),
        ("grandchild", &["--depends-on", "child"]),
        ("other", &["--evidence", "fresh"]),
    ];
    for (id, extra) in claims {
        let mut args = vec!["add-claim", id, "--id", id, "--actor", "gen"];
        args.extend_from_slice(extra);
        sb.ok(&args);
        if extra.contains(&"--evidence") {
            sb.ok(&["promote", id, "--actor", "rev"]);
            sb.ok(&["promote", id, "--actor", "rev"]);
        }
    }
    let before = sb
        .ok(&["--json", "--now", "2026-01-31T00:00:00Z", "sweep"])
        .json();
    ensure!(
        before["flagged"] == serde_json::json!([]),
        "flagged before expiry: {}",
        before["flagged"]
    );
    let after = sb
        .ok(&["--json", "--now", "2026-02-01T00:00:01Z", "sweep"])
        .json();
    let expected = serde_json::json!(["both", "child", "grandchild", "sole"]);
    ensure!(after["flagged"] == expected, "flagged {}", after["flagged"]);
    let report = sb
        .ok(&["--json", "--now", "2026-02-01T00:00:01Z", "report"])
        .json();
    let layer = |id: &str| {
        report["claims"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["id"] == id)
            .map(|c| c["layer"].clone())
            .unwrap()
    };
    ensure!(
        layer("sole") == "L1",
        "sole-evidence claim at {}",
        layer("sole")
    );
    ensure!(
        layer("both") == "L2",
        "claim with other qualifying evidence at {}",
        layer("both")
    );
    ensure!(
        layer("other") == "L2",
        "unrelated claim at {}",
        layer("other")
    );
    Ok("flags exactly the citing claims and their dependents; only the sole-evidence L2 claim drops to L1".into())
}

fn audit_chain() -> Check {
    let a = property("fuzz_audit_chain_corruption", 1_000, 12)?;
    let sb = Sandbox::worked_chain();
    sb.ok(&["ratify", "S2", "--actor", "alice"]);
    sb.ok(&["ratify", "S3", "--actor", "alice"]);
    let path = sb.store().join("drr.jsonl");
    let mut bytes = std::fs::read(&path).unwrap();
    let second = bytes
        .iter()
        .enumerate()
        .filter(|(_, b)| **b == b'\n')
        .nth(1)
        .unwrap()
        .0
        + 1;
    bytes[second + 20] ^= 0x01;
    std::fs::write(&path, bytes).unwrap();
    let r = sb.run(&["--json", "report"]);
    ensure!(r.code == 1, "report exit {}", r.code);
    let v = r.json();
    ensure!(
        v["audit"]["status"] == "first_bad_record" && v["audit"]["index"] == 1,
        "{}",
        v["audit"]
    );
    Ok(format!(
        "{a}; CLI report localizes a flipped bit to record 1"
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("quintet compliance", quintet),
        ("worked chain", worked_chain),
        ("contradiction capping", contradiction_cap),
        ("dual ceiling", dual_ceiling),
        ("faithfulness cap", faithfulness),
        ("incremental locality", locality),
        ("transition discipline", fsm),
        ("scope algebra", scope_algebra),
        ("two-tier aggregation", two_tier),
        ("inventory parity", inventory),
        ("staleness sweep", staleness),
        ("audit chain localization", audit_chain),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.1}s): {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.1}s): {reason}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
