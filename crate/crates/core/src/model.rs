//! Shared vocabulary: formality and layer levels, congruence, verification
//! methods, evidence roles, and the validated engine configuration.

use std::collections::BTreeMap;
use std::fmt;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::{make_score, LenientReal, ReliabilityScore};

macro_rules! token_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $tok:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $tok)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn token(self) -> &'static str {
                match self { $($name::$variant => $tok),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }

        impl std::str::FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($tok => Ok($name::$variant),)+
                    _ => Err(Error::Config(format!(
                        "unknown {} {s:?}", stringify!($name)
                    ))),
                }
            }
        }
    };
}

token_enum!(
    /// Rigor of expression, from informal to machine-checked.
    FormalityLevel { F0 => "F0", F1 => "F1", F2 => "F2", F3 => "F3" }
);

token_enum!(
    /// Epistemic status: conjecture, substantiated, corroborated.
    EpistemicLayer { L0 => "L0", L1 => "L1", L2 => "L2" }
);

token_enum!(
    /// How well an evidence or premise context matches the claim context.
    CongruenceLevel { Cl3 => "CL3", Cl2 => "CL2", Cl1 => "CL1", None => "none" }
);

token_enum!(
    /// Ordered from least to most credible.
    VerificationMethod {
        SelfReported => "self_reported",
        ScriptAttached => "script_attached",
        ExternallyReviewed => "externally_reviewed",
        ExecutedVerified => "executed_verified",
    }
);

token_enum!(
    EvidenceRole { Gate => "gate", Performance => "performance", Quality => "quality", Other => "other" }
);

impl FormalityLevel {
    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl EpistemicLayer {
    pub(crate) fn index(self) -> usize {
        self as usize
    }

    pub fn next(self) -> Option<Self> {
        match self {
            EpistemicLayer::L0 => Some(EpistemicLayer::L1),
            EpistemicLayer::L1 => Some(EpistemicLayer::L2),
            EpistemicLayer::L2 => None,
        }
    }

    pub fn prev(self) -> Option<Self> {
        match self {
            EpistemicLayer::L0 => None,
            EpistemicLayer::L1 => Some(EpistemicLayer::L0),
            EpistemicLayer::L2 => Some(EpistemicLayer::L1),
        }
    }
}

impl VerificationMethod {
    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

/// Property suites of the verification harness, used to key case counts.
pub const SUITES: [&str; 6] = [
    "r_eff_calculator",
    "scope_algebra",
    "epistemic_fsm",
    "graph_topology",
    "dependency_inspector",
    "fuzz",
];

/// Validated engine configuration. Immutable once built; per-context
/// overrides are separate `Config` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub formality_ceilings: [ReliabilityScore; 4],
    pub layer_ceilings: [ReliabilityScore; 3],
    /// Penalties for CL2 and CL1, in that order. CL3 is always 0.
    pub congruence_penalties: [f64; 2],
    pub verification_multipliers: [f64; 4],
    pub validity_days: [u32; 4],
    pub grace_days: u32,
    pub pbt_cases: BTreeMap<String, u64>,
    /// Cap applied to evidence whose provenance is tagged `llm-generated`.
    /// Disabled when `None`.
    pub faithfulness_cap: Option<ReliabilityScore>,
}

impl Default for Config {
    fn default() -> Self {
        let s = |v: f64| make_score(v).expect("default ceiling");
        Config {
            formality_ceilings: [s(0.70), s(0.85), s(0.95), s(0.99)],
            layer_ceilings: [s(0.35), s(0.75), s(1.00)],
            congruence_penalties: [0.1, 0.4],
            verification_multipliers: [0.60, 0.85, 0.95, 1.00],
            validity_days: [30, 90, 180, 365],
            grace_days: 7,
            pbt_cases: SUITES.iter().map(|s| (s.to_string(), 100_000)).collect(),
            faithfulness_cap: None,
        }
    }
}

impl Config {
    pub fn formality_ceiling(&self, level: FormalityLevel) -> ReliabilityScore {
        self.formality_ceilings[level.index()]
    }

    pub fn layer_ceiling(&self, layer: EpistemicLayer) -> ReliabilityScore {
        self.layer_ceilings[layer.index()]
    }

    pub fn congruence_penalty(&self, level: CongruenceLevel) -> Option<f64> {
        match level {
            CongruenceLevel::Cl3 => Some(0.0),
            CongruenceLevel::Cl2 => Some(self.congruence_penalties[0]),
            CongruenceLevel::Cl1 => Some(self.congruence_penalties[1]),
            CongruenceLevel::None => None,
        }
    }

    pub fn multiplier(&self, method: VerificationMethod) -> f64 {
        self.verification_multipliers[method.index()]
    }

    pub fn validity(&self, level: FormalityLevel) -> Duration {
        Duration::days(i64::from(self.validity_days[level.index()]))
    }

    pub fn grace(&self) -> Duration {
        Duration::days(i64::from(self.grace_days))
    }

    pub fn cases_for(&self, suite: &str) -> u64 {
        self.pbt_cases.get(suite).copied().unwrap_or(100_000)
    }

    /// Checks every range and ordering invariant.
    pub fn validated(self) -> Result<Self> {
        strictly_increasing(
            "formality_ceilings",
            &self.formality_ceilings.map(f64::from),
        )?;
        strictly_increasing("layer_ceilings", &self.layer_ceilings.map(f64::from))?;
        for (i, p) in self.congruence_penalties.iter().enumerate() {
            if !p.is_finite() || *p < 0.0 || *p > 1.0 {
                let name = ["CL2", "CL1"][i];
                return Err(Error::range(format!("congruence_penalties.{name}"), *p));
            }
        }
        for (m, v) in VerificationMethod::ALL
            .iter()
            .zip(self.verification_multipliers)
        {
            if !v.is_finite() || v <= 0.0 || v > 1.0 {
                return Err(Error::range(format!("verification_multipliers.{m}"), v));
            }
        }
        for (i, d) in self.validity_days.iter().enumerate() {
            if *d == 0 {
                return Err(Error::range(format!("validity_days.F{i}"), 0.0));
            }
        }
        strictly_increasing("validity_days", &self.validity_days.map(f64::from))?;
        for (suite, n) in &self.pbt_cases {
            if *n == 0 {
                return Err(Error::range(format!("pbt_cases.{suite}"), 0.0));
            }
        }
        Ok(self)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let levels = |names: &[&str], vals: &[f64]| -> serde_json::Value {
            names
                .iter()
                .zip(vals)
                .map(|(n, v)| (n.to_string(), serde_json::json!(v)))
                .collect::<serde_json::Map<_, _>>()
                .into()
        };
        serde_json::json!({
            "formality_ceilings": levels(&["F0", "F1", "F2", "F3"], &self.formality_ceilings.map(f64::from)),
            "layer_ceilings": levels(&["L0", "L1", "L2"], &self.layer_ceilings.map(f64::from)),
            "congruence_penalties": levels(&["CL2", "CL1"], &self.congruence_penalties),
            "verification_multipliers": levels(
                &VerificationMethod::ALL.iter().map(|m| m.token()).collect::<Vec<_>>(),
                &self.verification_multipliers,
            ),
            "validity_days": (["F0", "F1", "F2", "F3"])
                .iter()
                .zip(self.validity_days)
                .map(|(n, d)| (n.to_string(), serde_json::json!(d)))
                .collect::<serde_json::Map<_, _>>(),
            "grace_days": self.grace_days,
            "pbt_cases": self.pbt_cases,
            "faithfulness_cap": self.faithfulness_cap.map(f64::from),
        })
    }
}

fn strictly_increasing(name: &str, values: &[f64]) -> Result<()> {
    for w in values.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::OrderingViolation(format!(
                "{name} must strictly increase, got {values:?}"
            )));
        }
    }
    Ok(())
}

// On-disk schema. Every key is optional and falls back to the default.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    formality_ceilings: FormalityFile,
    #[serde(default)]
    layer_ceilings: LayerFile,
    #[serde(default)]
    congruence_penalties: PenaltyFile,
    #[serde(default)]
    verification_multipliers: MultiplierFile,
    #[serde(default)]
    validity_days: ValidityFile,
    grace_days: Option<u32>,
    #[serde(default)]
    pbt_cases: BTreeMap<String, u64>,
    faithfulness_cap: Option<LenientReal>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormalityFile {
    #[serde(rename = "F0")]
    f0: Option<LenientReal>,
    #[serde(rename = "F1")]
    f1: Option<LenientReal>,
    #[serde(rename = "F2")]
    f2: Option<LenientReal>,
    #[serde(rename = "F3")]
    f3: Option<LenientReal>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    #[serde(rename = "L0")]
    l0: Option<LenientReal>,
    #[serde(rename = "L1")]
    l1: Option<LenientReal>,
    #[serde(rename = "L2")]
    l2: Option<LenientReal>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PenaltyFile {
    #[serde(rename = "CL2")]
    cl2: Option<LenientReal>,
    #[serde(rename = "CL1")]
    cl1: Option<LenientReal>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiplierFile {
    self_reported: Option<LenientReal>,
    script_attached: Option<LenientReal>,
    externally_reviewed: Option<LenientReal>,
    executed_verified: Option<LenientReal>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidityFile {
    #[serde(rename = "F0")]
    f0: Option<u32>,
    #[serde(rename = "F1")]
    f1: Option<u32>,
    #[serde(rename = "F2")]
    f2: Option<u32>,
    #[serde(rename = "F3")]
    f3: Option<u32>,
}

fn score_or(
    name: &str,
    v: Option<LenientReal>,
    default: ReliabilityScore,
) -> Result<ReliabilityScore> {
    match v {
        None => Ok(default),
        Some(LenientReal(x)) => make_score(x).map_err(|_| Error::range(name, x)),
    }
}

fn real_or(v: Option<LenientReal>, default: f64) -> f64 {
    v.map_or(default, |r| r.0)
}

/// Parses a JSON configuration document; omitted keys take defaults.
/// An empty or whitespace-only source yields [`Config::default`].
pub fn load_config(source: &str) -> Result<Config> {
    if source.trim().is_empty() {
        return Ok(Config::default());
    }
    let file: ConfigFile =
        serde_json::from_str(source).map_err(|e| Error::Config(e.to_string()))?;
    let d = Config::default();
    let fc = &file.formality_ceilings;
    let lc = &file.layer_ceilings;
    let vm = &file.verification_multipliers;
    let vd = &file.validity_days;
    let mut pbt_cases = d.pbt_cases.clone();
    for (suite, n) in file.pbt_cases {
        if !SUITES.contains(&suite.as_str()) {
            return Err(Error::Config(format!("unknown pbt suite {suite:?}")));
        }
        pbt_cases.insert(suite, n);
    }
    let cfg = Config {
        formality_ceilings: [
            score_or("formality_ceilings.F0", fc.f0, d.formality_ceilings[0])?,
            score_or("formality_ceilings.F1", fc.f1, d.formality_ceilings[1])?,
            score_or("formality_ceilings.F2", fc.f2, d.formality_ceilings[2])?,
            score_or("formality_ceilings.F3", fc.f3, d.formality_ceilings[3])?,
        ],
        layer_ceilings: [
            score_or("layer_ceilings.L0", lc.l0, d.layer_ceilings[0])?,
            score_or("layer_ceilings.L1", lc.l1, d.layer_ceilings[1])?,
            score_or("layer_ceilings.L2", lc.l2, d.layer_ceilings[2])?,
        ],
        congruence_penalties: [
            real_or(file.congruence_penalties.cl2, d.congruence_penalties[0]),
            real_or(file.congruence_penalties.cl1, d.congruence_penalties[1]),
        ],
        verification_multipliers: [
            real_or(vm.self_reported, d.verification_multipliers[0]),
            real_or(vm.script_attached, d.verification_multipliers[1]),
            real_or(vm.externally_reviewed, d.verification_multipliers[2]),
            real_or(vm.executed_verified, d.verification_multipliers[3]),
        ],
        validity_days: [
            vd.f0.unwrap_or(d.validity_days[0]),
            vd.f1.unwrap_or(d.validity_days[1]),
            vd.f2.unwrap_or(d.validity_days[2]),
            vd.f3.unwrap_or(d.validity_days[3]),
        ],
        grace_days: file.grace_days.unwrap_or(d.grace_days),
        pbt_cases,
        faithfulness_cap: file
            .faithfulness_cap
            .map(|r| make_score(r.0).map_err(|_| Error::range("faithfulness_cap", r.0)))
            .transpose()?,
    };
    cfg.validated()
}
