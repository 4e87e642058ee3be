//! Scenario files: where an instance comes from and what to run on it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::generators::{
    common_cause2, generate_common_cause_with, generate_random_product, modular_instance, CommonCauseSpec,
    CoverageSpec,
};
use crate::constraints::Constraint;
use crate::error::{Error, Result};
use crate::greedy::{GreedyConfig, SampleCount, WeightMode, WeightVariant};
use crate::model::io::{read_document, ConstraintFile};
use crate::model::prob::{parse_prob, zero};
use crate::model::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RatioCheck,
    AdaptivityGap,
    IndependenceProfile,
    Certificate,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::RatioCheck => "ratio-check",
            ExperimentKind::AdaptivityGap => "adaptivity-gap",
            ExperimentKind::IndependenceProfile => "independence-profile",
            ExperimentKind::Certificate => "certificate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSource {
    /// Path relative to the scenario file.
    File { path: PathBuf },
    CommonCause2,
    CommonCause {
        m: usize,
        states: usize,
        worlds: usize,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise: Option<String>,
    },
    Product { m: usize, states: usize, seed: u64 },
    /// One state per item, private unit targets scaled by `weights`.
    Modular { weights: Vec<f64> },
}

impl InstanceSource {
    /// The instance and the constraint stored with it, if any.
    pub fn load(&self, base: &Path) -> Result<(Instance, Option<Constraint>)> {
        let inst = match self {
            InstanceSource::File { path } => {
                let doc = read_document(base.join(path))?;
                return Ok((doc.instance, doc.constraint));
            }
            InstanceSource::CommonCause2 => common_cause2(),
            InstanceSource::CommonCause {
                m,
                states,
                worlds,
                seed,
                noise,
            } => generate_common_cause_with(&CommonCauseSpec {
                m: *m,
                states: *states,
                worlds: *worlds,
                seed: *seed,
                noise: noise.as_deref().map(parse_prob).transpose()?.unwrap_or_else(zero),
                coverage: CoverageSpec::default(),
            })?,
            InstanceSource::Product { m, states, seed } => {
                generate_random_product(*m, *states, *seed, &CoverageSpec::default())?
            }
            InstanceSource::Modular { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::input("modular weights must be nonnegative and nonempty"));
                }
                modular_instance(weights)
            }
        };
        Ok((inst, None))
    }
}

/// A sample count, either a number or `"paper"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SamplesSpec {
    Count(usize),
    Named(PaperSamples),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaperSamples {
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSpec {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantSpec {
    Optimistic,
    Standard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreedySpec {
    pub delta: f64,
    pub mode: ModeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<SamplesSpec>,
    #[serde(default = "default_variant")]
    pub variant: VariantSpec,
}

fn default_variant() -> VariantSpec {
    VariantSpec::Optimistic
}

impl Default for GreedySpec {
    fn default() -> Self {
        GreedySpec {
            delta: 0.05,
            mode: ModeSpec::Exact,
            samples: None,
            variant: VariantSpec::Optimistic,
        }
    }
}

impl GreedySpec {
    pub fn config(&self, seed: u64) -> Result<GreedyConfig> {
        let weight_mode = match (self.mode, self.samples) {
            (ModeSpec::Exact, None) => WeightMode::Exact,
            (ModeSpec::Exact, Some(_)) => {
                return Err(Error::Configuration("exact mode takes no sample count".into()))
            }
            (ModeSpec::Sampled, Some(SamplesSpec::Count(n))) => WeightMode::Sampled(SampleCount::Fixed(n)),
            (ModeSpec::Sampled, Some(SamplesSpec::Named(PaperSamples::Paper))) => {
                WeightMode::Sampled(SampleCount::Paper)
            }
            (ModeSpec::Sampled, None) => {
                return Err(Error::Configuration("sampled mode needs a sample count".into()))
            }
        };
        let config = GreedyConfig {
            delta: self.delta,
            weight_mode,
            seed,
            variant: match self.variant {
                VariantSpec::Optimistic => WeightVariant::Optimistic,
                VariantSpec::Standard => WeightVariant::Standard,
            },
        };
        config.rounds()?;
        Ok(config)
    }
}

fn default_rounding_seeds() -> u64 {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: ExperimentKind,
    pub instance: InstanceSource,
    /// Overrides the constraint stored in an instance file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintFile>,
    #[serde(default)]
    pub greedy: GreedySpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rounding_seeds")]
    pub rounding_seeds: u64,
    /// Rounding-loss factor for non-matroid constraints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Points in the upper-bound sweep of certificate runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_points: Option<usize>,
}

impl Scenario {
    pub fn resolve(&self, base: &Path) -> Result<(Instance, Constraint)> {
        let (instance, stored) = self.instance.load(base)?;
        let constraint = match (&self.constraint, stored) {
            (Some(c), _) => c.resolve(&instance)?,
            (None, Some(c)) => c,
            (None, None) => {
                return Err(Error::input(format!("scenario {:?} has no constraint", self.name)))
            }
        };
        Ok((instance, constraint))
    }
}

/// Reads a JSON array of scenarios.
pub fn load_scenarios(text: &str) -> Result<Vec<Scenario>> {
    let scenarios: Vec<Scenario> = serde_json::from_str(text)?;
    let mut names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::input(format!("duplicate scenario name {:?}", w[0])));
    }
    Ok(scenarios)
}

pub fn read_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    load_scenarios(&std::fs::read_to_string(path)?)
}

pub fn scenarios_to_json(scenarios: &[Scenario]) -> String {
    let mut out = serde_json::to_string_pretty(scenarios).expect("scenarios serialize");
    out.push('\n');
    out
}

fn ratio_check(name: &str, instance: InstanceSource, constraint: ConstraintFile, seed: u64) -> Scenario {
    Scenario {
        name: name.into(),
        kind: ExperimentKind::RatioCheck,
        instance,
        constraint: Some(constraint),
        greedy: GreedySpec::default(),
        seed,
        rounding_seeds: default_rounding_seeds(),
        alpha: None,
        sweep_points: None,
    }
}

fn uniform(k: usize) -> ConstraintFile {
    ConstraintFile::Uniform { k }
}

fn halves(m: usize, caps: [usize; 2]) -> ConstraintFile {
    let names = |r: std::ops::Range<usize>| r.map(|i| format!("x{}", i + 1)).collect();
    ConstraintFile::Partition {
        blocks: vec![names(0..m / 2), names(m / 2..m)],
        capacities: caps.to_vec(),
    }
}

fn common_cause(m: usize, states: usize, worlds: usize, seed: u64) -> InstanceSource {
    InstanceSource::CommonCause {
        m,
        states,
        worlds,
        seed,
        noise: None,
    }
}

/// Two states per item; each item ignores the world half the time.
fn noisy(m: usize, worlds: usize, seed: u64) -> InstanceSource {
    InstanceSource::CommonCause {
        m,
        states: 2,
        worlds,
        seed,
        noise: Some("1/2".into()),
    }
}

/// The enumerable suite shipped with the crate: ratio checks on uniform and
/// partition matroids with `m ∈ {2, 3, 4}`, plus one run of each other kind.
pub fn bundled_suite() -> Vec<Scenario> {
    let product = |m, states, seed| InstanceSource::Product { m, states, seed };
    let mut suite = vec![
        ratio_check("cc2-rank1", InstanceSource::CommonCause2, uniform(1), 1),
        ratio_check("cc2-rank2", InstanceSource::CommonCause2, uniform(2), 2),
        ratio_check("product-m2-rank1", product(2, 2, 11), uniform(1), 3),
        ratio_check("product-m3-rank2", product(3, 3, 20), uniform(2), 4),
        ratio_check("product-m4-rank2-a", product(4, 2, 2), uniform(2), 14),
        ratio_check("product-m4-rank2-b", product(4, 2, 6), uniform(2), 15),
        ratio_check("product-m4-halves", product(4, 2, 13), halves(4, [1, 1]), 5),
        ratio_check("modular-m4-rank2", InstanceSource::Modular { weights: vec![3.0, 1.0, 4.0, 2.0] }, uniform(2), 6),
        ratio_check("cc-m3-w3-rank1", common_cause(3, 2, 3, 21), uniform(1), 7),
        ratio_check("cc-m3-w4-rank2", common_cause(3, 3, 4, 22), uniform(2), 8),
        ratio_check("cc-m4-w4-rank2", common_cause(4, 2, 4, 23), uniform(2), 9),
        ratio_check("cc-m4-w6-halves", common_cause(4, 3, 6, 24), halves(4, [1, 1]), 10),
        ratio_check("cc-m4-w8-rank3", common_cause(4, 2, 8, 25), uniform(3), 11),
        ratio_check("single-world-m3", common_cause(3, 2, 1, 26), uniform(2), 12),
        ratio_check(
            "noisy-m3-halves",
            InstanceSource::CommonCause {
                m: 3,
                states: 2,
                worlds: 2,
                seed: 27,
                noise: Some("1/4".into()),
            },
            ConstraintFile::Partition {
                blocks: vec![vec!["x1".into()], vec!["x2".into(), "x3".into()]],
                capacities: vec![1, 1],
            },
            13,
        ),
        ratio_check("noisy-m4-rank2", noisy(4, 3, 7), uniform(2), 16),
        ratio_check("noisy-m4-halves-a", noisy(4, 3, 8), halves(4, [1, 1]), 17),
        ratio_check("noisy-m4-halves-b", noisy(4, 3, 11), halves(4, [1, 1]), 18),
    ];
    for (name, kind, source, constraint) in [
        ("cc2-profile", ExperimentKind::IndependenceProfile, InstanceSource::CommonCause2, uniform(1)),
        ("noisy-m4-gap", ExperimentKind::AdaptivityGap, noisy(4, 3, 8), uniform(2)),
        ("noisy-m4-certificate", ExperimentKind::Certificate, noisy(4, 3, 7), uniform(2)),
        ("cc-m3-certificate", ExperimentKind::Certificate, common_cause(3, 3, 4, 22), uniform(2)),
    ] {
        let mut s = ratio_check(name, source, constraint, 99);
        s.kind = kind;
        if kind == ExperimentKind::Certificate {
            s.sweep_points = Some(50);
        }
        suite.push(s);
    }
    suite
}
