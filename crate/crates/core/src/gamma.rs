//! Aggregation operators over multisets of reliability scores, and pointwise
//! checks of the quintet invariants (IDEM, COMM, WLNK, MONO) against them.
//!
//! LOC is a property of how the knowledge graph propagates updates and is
//! checked there, not here.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::ReliabilityScore;

/// Slack for operators whose result is computed by rounding arithmetic.
pub const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `min`, the Gödel t-norm.
    GodelMin,
    Product,
    /// Negative control: violates WLNK.
    Mean,
    /// Negative control: violates WLNK.
    Max,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 4] = [
        OperatorKind::GodelMin,
        OperatorKind::Product,
        OperatorKind::Mean,
        OperatorKind::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::GodelMin => "godel_min",
            OperatorKind::Product => "product",
            OperatorKind::Mean => "mean",
            OperatorKind::Max => "max",
        }
    }

    /// Rounding tolerance for equality checks on this operator's results.
    pub fn slack(self) -> f64 {
        match self {
            OperatorKind::GodelMin | OperatorKind::Max => 0.0,
            OperatorKind::Product | OperatorKind::Mean => ROUNDING_SLACK,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorKind::ALL
            .into_iter()
            .find(|op| op.name() == s || (s == "min" && *op == OperatorKind::GodelMin))
            .ok_or_else(|| Error::Config(format!("unknown operator {s:?}")))
    }
}

/// Aggregates a non-empty multiset. `GodelMin` and `Max` return one of the
/// inputs bit-exactly.
pub fn aggregate(op: OperatorKind, scores: &[ReliabilityScore]) -> Result<ReliabilityScore> {
    let (first, rest) = scores.split_first().ok_or(Error::EmptyMultiset)?;
    match op {
        OperatorKind::GodelMin => Ok(rest.iter().fold(*first, |acc, s| acc.min(*s))),
        OperatorKind::Max => Ok(rest.iter().fold(*first, |acc, s| acc.max(*s))),
        OperatorKind::Product => {
            ReliabilityScore::saturating(scores.iter().map(|s| s.value()).product())
        }
        OperatorKind::Mean => {
            let sum: f64 = scores.iter().map(|s| s.value()).sum();
            ReliabilityScore::saturating(sum / scores.len() as f64)
        }
    }
}

fn multiset_min(scores: &[ReliabilityScore]) -> ReliabilityScore {
    aggregate(OperatorKind::GodelMin, scores).expect("non-empty")
}

fn agg(op: OperatorKind, scores: &[ReliabilityScore]) -> f64 {
    aggregate(op, scores).expect("non-empty").value()
}

/// `Γ([x]) = x`.
pub fn check_idem(op: OperatorKind, sample: ReliabilityScore) -> bool {
    (agg(op, &[sample]) - sample.value()).abs() <= op.slack()
}

/// `Γ([a, b]) = Γ([b, a])`.
pub fn check_comm(op: OperatorKind, a: ReliabilityScore, b: ReliabilityScore) -> bool {
    (agg(op, &[a, b]) - agg(op, &[b, a])).abs() <= op.slack()
}

/// `Γ(S) = Γ(σ(S))` for an arbitrary permutation of a multiset.
pub fn check_comm_permuted(
    op: OperatorKind,
    scores: &[ReliabilityScore],
    permuted: &[ReliabilityScore],
) -> bool {
    (agg(op, scores) - agg(op, permuted)).abs() <= op.slack()
}

/// `Γ(S) ≤ min(S)`. Empty input vacuously holds.
pub fn check_wlnk(op: OperatorKind, scores: &[ReliabilityScore]) -> bool {
    if scores.is_empty() {
        return true;
    }
    agg(op, scores) <= multiset_min(scores).value() + op.slack()
}

/// `a ≤ a′ ⇒ Γ([a, b]) ≤ Γ([a′, b])`. Inputs with `a > a′` are outside the
/// precondition and hold vacuously.
pub fn check_mono(
    op: OperatorKind,
    a: ReliabilityScore,
    a_prime: ReliabilityScore,
    b: ReliabilityScore,
) -> bool {
    if a > a_prime {
        return true;
    }
    agg(op, &[a, b]) <= agg(op, &[a_prime, b]) + op.slack()
}

/// Duplicate insensitivity: aggregating a multiset equals aggregating its
/// support set. This is the multiset reading of idempotence; it separates
/// quantity of evidence from quality, and `Mean` and `Product` fail it.
pub fn check_idem_multiset(op: OperatorKind, scores: &[ReliabilityScore]) -> bool {
    if scores.is_empty() {
        return true;
    }
    let mut support: Vec<ReliabilityScore> = Vec::with_capacity(scores.len());
    for s in scores {
        if !support.iter().any(|t| t.value() == s.value()) {
            support.push(*s);
        }
    }
    (agg(op, scores) - agg(op, &support)).abs() <= op.slack()
}

/// t-norm idempotence `Γ(x, x) = x`. Among continuous t-norms only `min`
/// satisfies it everywhere.
pub fn check_tnorm_idem(op: OperatorKind, x: ReliabilityScore) -> bool {
    (agg(op, &[x, x]) - x.value()).abs() <= op.slack()
}

/// The invariants reported by [`quintet_report`], in report order.
pub const REPORTED_INVARIANTS: [&str; 6] = [
    "IDEM",
    "COMM",
    "WLNK",
    "MONO",
    "IDEM_MULTISET",
    "TNORM_IDEM",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub pass: bool,
    pub cases_run: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub inputs: Vec<f64>,
    pub result: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub operator: OperatorKind,
    pub seed: u64,
    pub invariants: BTreeMap<String, InvariantResult>,
}

impl ComplianceReport {
    pub fn get(&self, invariant: &str) -> &InvariantResult {
        &self.invariants[invariant]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Draws a score biased towards the interesting corners of `[0, 1]`.
pub(crate) fn random_score(rng: &mut impl Rng) -> ReliabilityScore {
    let v = match rng.random_range(0..10u8) {
        0 => 0.0,
        1 => 1.0,
        2 => f64::MIN_POSITIVE * rng.random::<f64>(),
        3 => 1.0 - f64::EPSILON * rng.random_range(0.0..4.0),
        4 => (rng.random_range(0..=20u32) as f64) / 20.0,
        _ => rng.random::<f64>(),
    };
    ReliabilityScore::new(v).expect("generated in range")
}

fn random_multiset(rng: &mut impl Rng) -> Vec<ReliabilityScore> {
    let n = rng.random_range(1..=8usize);
    let mut out: Vec<_> = (0..n).map(|_| random_score(rng)).collect();
    // Duplicates exercise the multiset checks.
    if n > 1 && rng.random_bool(0.3) {
        out[n - 1] = out[0];
    }
    out
}

/// Runs every pointwise invariant over `case_count` random inputs.
/// Each invariant stops at its first counterexample; the report is fully
/// determined by `seed`.
pub fn quintet_report(op: OperatorKind, case_count: u64, seed: u64) -> ComplianceReport {
    let case_count = case_count.max(1);
    let mut invariants = BTreeMap::new();
    for (idx, name) in REPORTED_INVARIANTS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((idx as u64 + 1) << 56));
        let mut result = InvariantResult {
            pass: true,
            cases_run: 0,
            counterexample: None,
        };
        for _ in 0..case_count {
            result.cases_run += 1;
            if let Some(cx) = run_case(op, name, &mut rng) {
                result.pass = false;
                result.counterexample = Some(cx);
                break;
            }
        }
        invariants.insert(name.to_string(), result);
    }
    ComplianceReport {
        operator: op,
        seed,
        invariants,
    }
}

fn run_case(op: OperatorKind, invariant: &str, rng: &mut ChaCha8Rng) -> Option<Counterexample> {
    let cx = |inputs: &[ReliabilityScore], result: f64, detail: String| {
        Some(Counterexample {
            inputs: inputs.iter().map(|s| s.value()).collect(),
            result,
            detail,
        })
    };
    match invariant {
        "IDEM" => {
            let x = random_score(rng);
            if check_idem(op, x) {
                None
            } else {
                cx(&[x], agg(op, &[x]), format!("{op}([x]) != x"))
            }
        }
        "COMM" => {
            let s = random_multiset(rng);
            let mut p = s.clone();
            p.shuffle(rng);
            if check_comm_permuted(op, &s, &p) {
                None
            } else {
                cx(
                    &s,
                    agg(op, &s),
                    format!("permutation gives {}", agg(op, &p)),
                )
            }
        }
        "WLNK" => {
            let s = random_multiset(rng);
            if check_wlnk(op, &s) {
                None
            } else {
                cx(&s, agg(op, &s), format!("exceeds min {}", multiset_min(&s)))
            }
        }
        "MONO" => {
            let (x, y, b) = (random_score(rng), random_score(rng), random_score(rng));
            let (a, a_prime) = if x <= y { (x, y) } else { (y, x) };
            if check_mono(op, a, a_prime, b) {
                None
            } else {
                cx(
                    &[a, a_prime, b],
                    agg(op, &[a, b]),
                    format!("weakened to {} after strengthening", agg(op, &[a_prime, b])),
                )
            }
        }
        "IDEM_MULTISET" => {
            let mut s = random_multiset(rng);
            let dup = s[rng.random_range(0..s.len())];
            s.push(dup);
            if check_idem_multiset(op, &s) {
                None
            } else {
                cx(
                    &s,
                    agg(op, &s),
                    "duplicated premise changed the result".into(),
                )
            }
        }
        "TNORM_IDEM" => {
            let x = random_score(rng);
            if check_tnorm_idem(op, x) {
                None
            } else {
                cx(&[x, x], agg(op, &[x, x]), format!("{op}(x, x) != x"))
            }
        }
        other => unreachable!("unknown invariant {other}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> ReliabilityScore {
        ReliabilityScore::new(v).unwrap()
    }

    fn ss(vs: &[f64]) -> Vec<ReliabilityScore> {
        vs.iter().map(|v| s(*v)).collect()
    }

    #[test]
    fn worked_chain_under_min_and_mean() {
        let chain = ss(&[0.95, 0.85, 0.40]);
        assert_eq!(
            aggregate(OperatorKind::GodelMin, &chain).unwrap().value(),
            0.40
        );
        let mean = aggregate(OperatorKind::Mean, &chain).unwrap().value();
        assert!((mean - 2.2 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn product_is_below_min() {
        let p = aggregate(OperatorKind::Product, &ss(&[0.5, 0.5])).unwrap();
        assert_eq!(p.value(), 0.25);
        assert!(check_wlnk(OperatorKind::Product, &ss(&[0.5, 0.5])));
    }

    #[test]
    fn empty_multiset_is_rejected() {
        for op in OperatorKind::ALL {
            assert_eq!(aggregate(op, &[]), Err(Error::EmptyMultiset));
        }
    }

    #[test]
    fn named_checks() {
        assert!(check_wlnk(OperatorKind::GodelMin, &ss(&[0.3, 0.9, 0.1])));
        assert!(!check_wlnk(OperatorKind::Mean, &ss(&[0.9, 0.3])));
        assert!(!check_wlnk(OperatorKind::Max, &ss(&[0.9, 0.3])));
        assert!(check_mono(OperatorKind::GodelMin, s(0.2), s(0.6), s(0.5)));
        // Three weak premises at 0.4 average to 0.4: singleton-style
        // idempotence holds, so only the multiset check exposes Mean.
        assert!(check_idem(OperatorKind::Mean, s(0.4)));
        assert!(
            (aggregate(OperatorKind::Mean, &ss(&[0.4, 0.4, 0.4]))
                .unwrap()
                .value()
                - 0.4)
                .abs()
                < 1e-12
        );
        assert!(!check_idem_multiset(
            OperatorKind::Mean,
            &ss(&[0.4, 0.4, 0.9])
        ));
        assert!(check_idem_multiset(
            OperatorKind::GodelMin,
            &ss(&[0.4, 0.4, 0.9])
        ));
        assert!(!check_tnorm_idem(OperatorKind::Product, s(0.5)));
    }

    #[test]
    fn min_and_max_return_an_input_bit_exactly() {
        let v = ss(&[0.1 + 0.2, 0.7, 1.0 / 3.0]);
        let lo = aggregate(OperatorKind::GodelMin, &v).unwrap();
        let hi = aggregate(OperatorKind::Max, &v).unwrap();
        assert!(v
            .iter()
            .any(|x| x.value().to_bits() == lo.value().to_bits()));
        assert!(v
            .iter()
            .any(|x| x.value().to_bits() == hi.value().to_bits()));
    }

    #[test]
    fn report_matches_compliance_table() {
        let min = quintet_report(OperatorKind::GodelMin, 20_000, 7);
        assert!(min.invariants.values().all(|r| r.pass));
        let max = quintet_report(OperatorKind::Max, 1_000, 7);
        assert!(!max.get("WLNK").pass);
        assert!(max.get("MONO").pass && max.get("COMM").pass);
        let product = quintet_report(OperatorKind::Product, 20_000, 7);
        assert!(product.get("WLNK").pass && product.get("MONO").pass);
        assert!(!product.get("TNORM_IDEM").pass);
        let mean = quintet_report(OperatorKind::Mean, 1_000, 7);
        assert!(!mean.get("WLNK").pass && !mean.get("IDEM_MULTISET").pass);
        assert_eq!(mean, quintet_report(OperatorKind::Mean, 1_000, 7));
    }

    #[test]
    fn report_json_shape() {
        let r = quintet_report(OperatorKind::Max, 100, 1);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["invariants"]["WLNK"]["pass"], false);
        assert!(v["invariants"]["WLNK"]["counterexample"].is_object());
        assert!(v["invariants"]["IDEM"].get("counterexample").is_none());
    }

    proptest::proptest! {
        #[test]
        fn min_commutes_under_permutation(mut v in proptest::collection::vec(0.0f64..=1.0, 1..10)) {
            let a = aggregate(OperatorKind::GodelMin, &ss(&v)).unwrap();
            v.reverse();
            let b = aggregate(OperatorKind::GodelMin, &ss(&v)).unwrap();
            proptest::prop_assert_eq!(a.value().to_bits(), b.value().to_bits());
        }
    }
}
