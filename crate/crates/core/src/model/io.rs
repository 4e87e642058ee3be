//! JSON instance documents.
//!
//! ```json
//! {
//!   "items": ["a", "b"],
//!   "states": ["good", "bad"],
//!   "distribution": [{"assignment": {"a": "good", "b": "good"}, "prob": "1/2"}, ...],
//!   "utility": {"kind": "weighted-coverage", "targets": [...], "weights": [...],
//!               "coverage": [{"item": "a", "state": "good", "targets": ["t1"]}, ...]},
//!   "constraint": {"kind": "uniform", "k": 1}
//! }
//! ```
//!
//! Saving then loading reproduces the instance exactly: probabilities are
//! written as `p/q` strings and doubles in shortest round-trip form.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::prob::{format_prob, parse_prob};
use super::{ExplicitTable, Instance, JointDistribution, Realization, UtilityFunction, WeightedCoverage};
use crate::constraints::Constraint;
use crate::error::{Error, Result};
use crate::itemset::ItemSet;

/// An instance plus the optional constraint stored alongside it.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceDocument {
    pub instance: Instance,
    pub constraint: Option<Constraint>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    items: Vec<String>,
    states: Vec<String>,
    distribution: Vec<SupportEntry>,
    utility: UtilityFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constraint: Option<ConstraintFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SupportEntry {
    assignment: BTreeMap<String, String>,
    prob: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind")]
enum UtilityFile {
    #[serde(rename = "weighted-coverage")]
    Coverage {
        targets: Vec<String>,
        weights: Vec<f64>,
        coverage: Vec<CoverageEntry>,
    },
    #[serde(rename = "explicit-table")]
    Table { table: Vec<TableEntry> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverageEntry {
    item: String,
    state: String,
    targets: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    pairs: Vec<(String, String)>,
    value: f64,
}

/// Constraint block, with items referenced by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConstraintFile {
    Uniform {
        k: usize,
    },
    Partition {
        blocks: Vec<Vec<String>>,
        capacities: Vec<usize>,
    },
    Knapsack {
        costs: Vec<f64>,
        budget: f64,
    },
    Explicit {
        feasible_sets: Vec<Vec<String>>,
    },
    PrefixClosed {
        sequences: Vec<Vec<String>>,
    },
}

impl ConstraintFile {
    pub fn resolve(&self, instance: &Instance) -> Result<Constraint> {
        let names = |list: &Vec<String>| -> Result<Vec<usize>> {
            list.iter().map(|n| instance.item_index(n)).collect()
        };
        let set = |list: &Vec<String>| -> Result<ItemSet> { Ok(names(list)?.into_iter().collect()) };
        match self {
            ConstraintFile::Uniform { k } => Ok(Constraint::uniform(*k)),
            ConstraintFile::Partition { blocks, capacities } => Constraint::partition(
                instance.m(),
                blocks.iter().map(set).collect::<Result<_>>()?,
                capacities.clone(),
            ),
            ConstraintFile::Knapsack { costs, budget } => Constraint::knapsack(instance.m(), costs.clone(), *budget),
            ConstraintFile::Explicit { feasible_sets } => {
                Constraint::explicit(feasible_sets.iter().map(set).collect::<Result<_>>()?)
            }
            ConstraintFile::PrefixClosed { sequences } => {
                Constraint::prefix_closed(sequences.iter().map(names).collect::<Result<_>>()?)
            }
        }
    }

    pub fn describe(constraint: &Constraint, instance: &Instance) -> Self {
        let names = |s: ItemSet| s.iter().map(|e| instance.items()[e].clone()).collect::<Vec<_>>();
        match constraint {
            Constraint::Uniform { k } => ConstraintFile::Uniform { k: *k },
            Constraint::Partition { blocks, capacities } => ConstraintFile::Partition {
                blocks: blocks.iter().map(|b| names(*b)).collect(),
                capacities: capacities.clone(),
            },
            Constraint::Knapsack { costs, budget } => ConstraintFile::Knapsack {
                costs: costs.clone(),
                budget: *budget,
            },
            Constraint::Explicit { feasible } => ConstraintFile::Explicit {
                feasible_sets: feasible.iter().map(|s| names(*s)).collect(),
            },
            Constraint::PrefixClosed { sequences } => ConstraintFile::PrefixClosed {
                sequences: sequences
                    .iter()
                    .map(|q| q.iter().map(|&e| instance.items()[e].clone()).collect())
                    .collect(),
            },
        }
    }
}

pub fn load_document(text: &str) -> Result<InstanceDocument> {
    let file: InstanceFile = serde_json::from_str(text)?;
    let InstanceFile {
        items,
        states,
        distribution,
        utility,
        constraint,
    } = file;
    let item_pos = |name: &str| {
        items
            .iter()
            .position(|i| i == name)
            .ok_or_else(|| Error::input(format!("unknown item {name:?}")))
    };
    let state_pos = |name: &str| {
        states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::input(format!("unknown state {name:?}")))
    };

    let mut support = Vec::with_capacity(distribution.len());
    for entry in &distribution {
        if entry.assignment.len() != items.len() {
            return Err(Error::input("every realization must assign a state to every item"));
        }
        let mut phi = vec![0; items.len()];
        for (item, state) in &entry.assignment {
            phi[item_pos(item)?] = state_pos(state)?;
        }
        support.push((Realization::new(phi), parse_prob(&entry.prob)?));
    }
    let dist = JointDistribution::new(items.len(), states.len(), support)?;

    let utility = match utility {
        UtilityFile::Coverage {
            targets,
            weights,
            coverage,
        } => {
            let mut lists = vec![Vec::new(); items.len() * states.len()];
            let mut seen = vec![false; lists.len()];
            for entry in &coverage {
                let idx = item_pos(&entry.item)? * states.len() + state_pos(&entry.state)?;
                if std::mem::replace(&mut seen[idx], true) {
                    return Err(Error::input(format!(
                        "coverage lists ({}, {}) twice",
                        entry.item, entry.state
                    )));
                }
                lists[idx] = entry
                    .targets
                    .iter()
                    .map(|t| {
                        targets
                            .iter()
                            .position(|x| x == t)
                            .ok_or_else(|| Error::input(format!("unknown target {t:?}")))
                    })
                    .collect::<Result<_>>()?;
            }
            UtilityFunction::Coverage(WeightedCoverage::new(targets, weights, items.len(), states.len(), lists)?)
        }
        UtilityFile::Table { table } => {
            let ground = items.len() * states.len();
            crate::error::Error::check_cap("explicit table ground set", ground, super::utility::MAX_TABLE_GROUND)?;
            let mut values = vec![None; 1 << ground];
            for entry in &table {
                let mut mask = 0usize;
                for (item, state) in &entry.pairs {
                    mask |= 1 << (item_pos(item)? * states.len() + state_pos(state)?);
                }
                if values[mask].replace(entry.value).is_some() {
                    return Err(Error::input("explicit table lists a pair set twice"));
                }
            }
            let values = values
                .into_iter()
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::input("explicit table must list every subset of E×O"))?;
            UtilityFunction::Table(ExplicitTable::new(items.len(), states.len(), values)?)
        }
    };
    let instance = Instance::new(items, states, dist, utility)?;
    let constraint = constraint.map(|c| c.resolve(&instance)).transpose()?;
    Ok(InstanceDocument { instance, constraint })
}

pub fn save_document(doc: &InstanceDocument) -> String {
    let inst = &doc.instance;
    let items = inst.items();
    let states = inst.states();
    let distribution = inst
        .distribution()
        .support()
        .iter()
        .map(|(phi, p)| SupportEntry {
            assignment: (0..inst.m())
                .map(|e| (items[e].clone(), states[phi.state(e)].clone()))
                .collect(),
            prob: format_prob(p),
        })
        .collect();
    let utility = match inst.utility() {
        UtilityFunction::Coverage(c) => {
            let mut coverage = Vec::new();
            for (e, item) in items.iter().enumerate() {
                for (o, state) in states.iter().enumerate() {
                    let covered = c.covered(e, o);
                    if !covered.is_empty() {
                        coverage.push(CoverageEntry {
                            item: item.clone(),
                            state: state.clone(),
                            targets: covered.into_iter().map(|t| c.targets()[t].clone()).collect(),
                        });
                    }
                }
            }
            UtilityFile::Coverage {
                targets: c.targets().to_vec(),
                weights: c.weights().to_vec(),
                coverage,
            }
        }
        UtilityFunction::Table(t) => {
            let n = inst.n_states();
            let table = t
                .values()
                .iter()
                .enumerate()
                .map(|(mask, &value)| TableEntry {
                    pairs: (0..t.ground())
                        .filter(|g| mask >> g & 1 == 1)
                        .map(|g| (items[g / n].clone(), states[g % n].clone()))
                        .collect(),
                    value,
                })
                .collect();
            UtilityFile::Table { table }
        }
    };
    let file = InstanceFile {
        items: items.to_vec(),
        states: states.to_vec(),
        distribution,
        utility,
        constraint: doc.constraint.as_ref().map(|c| ConstraintFile::describe(c, inst)),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("instance serializes");
    out.push('\n');
    out
}

pub fn read_document(path: impl AsRef<Path>) -> Result<InstanceDocument> {
    load_document(&std::fs::read_to_string(path)?)
}

pub fn write_document(path: impl AsRef<Path>, doc: &InstanceDocument) -> Result<()> {
    std::fs::write(path, save_document(doc))?;
    Ok(())
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Instance> {
        Ok(load_document(text)?.instance)
    }

    pub fn to_json(&self) -> String {
        save_document(&InstanceDocument {
            instance: self.clone(),
            constraint: None,
        })
    }
}
