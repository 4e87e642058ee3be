//! Adaptive policies as decision trees and exact oracles over them.

use std::collections::{BTreeMap, HashMap};

use serde_json::{Map, Value};

use crate::constraints::Constraint;
use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::model::{Instance, Realization};
use crate::multilinear::{FractionalPoint, Multilinear};

pub const DEFAULT_POLICY_ITEMS: usize = 5;
pub const DEFAULT_POLICY_SUPPORT: usize = 64;
/// Largest ground set the non-adaptive enumeration accepts.
pub const MAX_NONADAPTIVE_ITEMS: usize = 20;

/// Values closer than this (relative) are ties in the dynamic program.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Policy {
    Stop,
    Pick {
        item: usize,
        /// Child per observed state of `item`.
        branches: BTreeMap<usize, Policy>,
    },
}

impl Policy {
    /// Picks `items` in order regardless of what is observed.
    pub fn sequence(items: &[usize], states: usize) -> Self {
        items.iter().rev().fold(Policy::Stop, |child, &item| Policy::Pick {
            item,
            branches: (0..states).map(|o| (o, child.clone())).collect(),
        })
    }

    /// Longest root-to-leaf item count.
    pub fn depth(&self) -> usize {
        match self {
            Policy::Stop => 0,
            Policy::Pick { branches, .. } => 1 + branches.values().map(Policy::depth).max().unwrap_or(0),
        }
    }

    /// Item sequences along every root-to-leaf path.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        match self {
            Policy::Stop => vec![Vec::new()],
            Policy::Pick { item, branches } => {
                let mut out: Vec<Vec<usize>> = branches
                    .values()
                    .flat_map(Policy::paths)
                    .map(|mut p| {
                        p.insert(0, *item);
                        p
                    })
                    .collect();
                if out.is_empty() {
                    out.push(vec![*item]);
                }
                out
            }
        }
    }

    /// No repeated items on a path and every path prefix-feasible.
    pub fn is_feasible(&self, constraint: &Constraint) -> bool {
        self.paths()
            .iter()
            .all(|p| constraint.is_prefix_feasible(p).unwrap_or(false))
    }

    /// Items picked when the world is `phi`, in pick order. Branches that
    /// are missing for `phi` raise a policy error.
    pub fn run(&self, phi: &Realization) -> Result<Vec<usize>> {
        let mut picked = Vec::new();
        let mut node = self;
        while let Policy::Pick { item, branches } = node {
            if *item >= phi.len() {
                return Err(Error::Policy(format!("item index {item} out of range")));
            }
            if picked.contains(item) {
                return Err(Error::Policy(format!("item {item} picked twice on one path")));
            }
            picked.push(*item);
            let state = phi.state(*item);
            node = branches
                .get(&state)
                .ok_or_else(|| Error::Policy(format!("no branch for state {state} of item {item}")))?;
        }
        Ok(picked)
    }

    pub fn to_json(&self, instance: &Instance) -> Value {
        match self {
            Policy::Stop => Value::String("stop".into()),
            Policy::Pick { item, branches } => {
                let branches: Map<String, Value> = branches
                    .iter()
                    .map(|(o, child)| (instance.states()[*o].clone(), child.to_json(instance)))
                    .collect();
                serde_json::json!({ "item": instance.items()[*item], "branches": branches })
            }
        }
    }

    pub fn from_json(value: &Value, instance: &Instance) -> Result<Self> {
        match value {
            Value::String(s) if s == "stop" => Ok(Policy::Stop),
            Value::Object(obj) => {
                let item = obj
                    .get("item")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::input("policy node needs an item name"))?;
                let branches = obj
                    .get("branches")
                    .and_then(Value::as_object)
                    .ok_or_else(|| Error::input("policy node needs a branches object"))?;
                Ok(Policy::Pick {
                    item: instance.item_index(item)?,
                    branches: branches
                        .iter()
                        .map(|(state, child)| Ok((instance.state_index(state)?, Policy::from_json(child, instance)?)))
                        .collect::<Result<_>>()?,
                })
            }
            _ => Err(Error::input("policy node must be \"stop\" or an object")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyValue {
    pub value: f64,
    /// Per support point, aligned with the distribution: picked set and realized utility.
    pub per_realization: Vec<(ItemSet, f64)>,
}

/// `Σ_φ β_φ f(∪_{e∈E(π,φ)} φ_e)`.
pub fn evaluate_policy(instance: &Instance, policy: &Policy) -> Result<PolicyValue> {
    let mut value = 0.0;
    let mut per_realization = Vec::with_capacity(instance.distribution().support().len());
    for (phi, w) in instance.distribution().weighted() {
        if w == 0.0 {
            per_realization.push((ItemSet::EMPTY, 0.0));
            continue;
        }
        let picked: ItemSet = policy.run(phi)?.into_iter().collect();
        let u = instance.value(phi.pairs(picked));
        value += w * u;
        per_realization.push((picked, u));
    }
    Ok(PolicyValue { value, per_realization })
}

/// `y⋄_e`: probability that the policy picks `e`.
pub fn policy_pick_probabilities(instance: &Instance, policy: &Policy) -> Result<FractionalPoint> {
    let mut y = vec![0.0; instance.m()];
    for (phi, w) in instance.distribution().weighted() {
        if w == 0.0 {
            continue;
        }
        for e in policy.run(phi)? {
            y[e] += w;
        }
    }
    FractionalPoint::new(y.into_iter().map(|v| v.min(1.0)).collect())
}

/// Runs the policy on a virtual world `φ ∼ D` and scores the picked items on
/// an independent true world `φ' ∼ D`.
pub fn virtual_nonadaptive_value(instance: &Instance, policy: &Policy) -> Result<f64> {
    let mut value = 0.0;
    for (phi, w) in instance.distribution().weighted() {
        if w == 0.0 {
            continue;
        }
        let picked: ItemSet = policy.run(phi)?.into_iter().collect();
        value += w * instance.expected_set_value(picked);
    }
    Ok(value)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveOptimum {
    pub policy: Policy,
    pub value: f64,
}

pub fn optimal_adaptive(instance: &Instance, constraint: &Constraint) -> Result<AdaptiveOptimum> {
    optimal_adaptive_with_caps(instance, constraint, DEFAULT_POLICY_ITEMS, DEFAULT_POLICY_SUPPORT)
}

/// Backward induction over observation histories. Histories are keyed by
/// the observed pairs for downward-closed families and by the pick order for
/// sequence families. Stop wins ties, then the lowest item index.
pub fn optimal_adaptive_with_caps(
    instance: &Instance,
    constraint: &Constraint,
    max_items: usize,
    max_support: usize,
) -> Result<AdaptiveOptimum> {
    Error::check_cap("item count for the adaptive oracle", instance.m(), max_items)?;
    let support: Vec<(&Realization, f64)> = instance.distribution().weighted().filter(|(_, w)| *w > 0.0).collect();
    Error::check_cap("support size for the adaptive oracle", support.len(), max_support)?;
    let mut dp = Dp {
        instance,
        constraint,
        support,
        memo: HashMap::new(),
    };
    let all: Vec<usize> = (0..dp.support.len()).collect();
    let (w, policy) = dp.solve(&mut Vec::new(), &all)?;
    Ok(AdaptiveOptimum { policy, value: w })
}

struct Dp<'a> {
    instance: &'a Instance,
    constraint: &'a Constraint,
    support: Vec<(&'a Realization, f64)>,
    memo: HashMap<Vec<(usize, usize)>, (f64, Policy)>,
}

impl Dp<'_> {
    fn key(&self, history: &[(usize, usize)]) -> Vec<(usize, usize)> {
        let mut key = history.to_vec();
        if self.constraint.is_downward_closed() {
            key.sort_unstable();
        }
        key
    }

    /// Unnormalized value `Pr(history) · V(history)` and the best subtree.
    /// `consistent` lists the support points agreeing with `history`.
    fn solve(&mut self, history: &mut Vec<(usize, usize)>, consistent: &[usize]) -> Result<(f64, Policy)> {
        let key = self.key(history);
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let mass: f64 = consistent.iter().map(|&i| self.support[i].1).sum();
        let mut best = (mass * self.instance.value(history.iter().copied()), Policy::Stop);
        let picked: Vec<usize> = history.iter().map(|&(e, _)| e).collect();
        for e in 0..self.instance.m() {
            if picked.contains(&e) {
                continue;
            }
            let mut sequence = picked.clone();
            sequence.push(e);
            if !self.constraint.is_prefix_feasible(&sequence)? {
                continue;
            }
            let mut by_state: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &i in consistent {
                by_state.entry(self.support[i].0.state(e)).or_default().push(i);
            }
            let mut total = 0.0;
            let mut branches = BTreeMap::new();
            for (o, subset) in by_state {
                history.push((e, o));
                let (w, child) = self.solve(history, &subset)?;
                history.pop();
                total += w;
                branches.insert(o, child);
            }
            if total > best.0 + TIE_TOL * (1.0 + best.0.abs()) {
                best = (total, Policy::Pick { item: e, branches });
            }
        }
        self.memo.insert(key, best.clone());
        Ok(best)
    }
}

/// Best fixed set: argmax of `f(S)` over feasible `S`, first in mask order on ties.
pub fn best_nonadaptive(instance: &Instance, constraint: &Constraint) -> Result<(ItemSet, f64)> {
    Error::check_cap("item count for non-adaptive enumeration", instance.m(), MAX_NONADAPTIVE_ITEMS)?;
    let mut best = (ItemSet::EMPTY, instance.expected_set_value(ItemSet::EMPTY));
    for s in ItemSet::full(instance.m()).subsets() {
        if !constraint.is_feasible(s) {
            continue;
        }
        let v = instance.expected_set_value(s);
        if v > best.1 + TIE_TOL * (1.0 + best.1.abs()) {
            best = (s, v);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpperBoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `f(π)` with `F(x) + (1/κ) Σ_e y_e F_{x\e}(e)`, where `y` holds
/// the pick probabilities of `π`.
pub fn optimal_upper_bound_check(
    ml: &Multilinear,
    policy: &Policy,
    x: &FractionalPoint,
    kappa: f64,
) -> Result<UpperBoundCheck> {
    if kappa <= 0.0 {
        return Err(Error::DegenerateBound("kappa is zero; the upper bound is undefined".into()));
    }
    let instance = ml.instance();
    let lhs = evaluate_policy(instance, policy)?.value;
    let picks = policy_pick_probabilities(instance, policy)?;
    let mut sum = 0.0;
    for e in 0..instance.m() {
        if picks.get(e) > 0.0 {
            sum += picks.get(e) * ml.optimistic_weight(x, e)?;
        }
    }
    let rhs = ml.value(x)? + sum / kappa;
    Ok(UpperBoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators::{common_cause2, modular_instance, random_product, CoverageSpec};

    /// Every decision tree of depth ≤ 2 on two items.
    fn all_trees(m: usize, states: usize, used: ItemSet) -> Vec<Policy> {
        let mut out = vec![Policy::Stop];
        for e in 0..m {
            if used.contains(e) {
                continue;
            }
            let children = all_trees(m, states, used.with(e));
            let mut combos: Vec<BTreeMap<usize, Policy>> = vec![BTreeMap::new()];
            for o in 0..states {
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        children.iter().map(move |child| {
                            let mut c = c.clone();
                            c.insert(o, child.clone());
                            c
                        })
                    })
                    .collect();
            }
            out.extend(combos.into_iter().map(|branches| Policy::Pick { item: e, branches }));
        }
        out
    }

    #[test]
    fn stop_and_single_pick() {
        let inst = common_cause2();
        assert_eq!(evaluate_policy(&inst, &Policy::Stop).unwrap().value, inst.expected_set_value(ItemSet::EMPTY));
        let pick = Policy::sequence(&[1], 2);
        let v = evaluate_policy(&inst, &pick).unwrap().value;
        assert!((v - inst.expected_set_value(ItemSet::singleton(1))).abs() < 1e-12);
        assert_eq!(policy_pick_probabilities(&inst, &Policy::Stop).unwrap().coords(), &[0.0, 0.0]);
        assert_eq!(policy_pick_probabilities(&inst, &pick).unwrap().coords(), &[0.0, 1.0]);
    }

    #[test]
    fn missing_branch_is_an_error() {
        let inst = common_cause2();
        let p = Policy::Pick {
            item: 0,
            branches: [(0, Policy::Stop)].into(),
        };
        assert!(matches!(evaluate_policy(&inst, &p), Err(Error::Policy(_))));
    }

    #[test]
    fn common_cause_optimum_matches_tree_enumeration() {
        let inst = common_cause2();
        for k in [1, 2] {
            let c = Constraint::uniform(k);
            let opt = optimal_adaptive(&inst, &c).unwrap();
            let brute = all_trees(2, 2, ItemSet::EMPTY)
                .into_iter()
                .filter(|p| p.is_feasible(&c))
                .map(|p| evaluate_policy(&inst, &p).unwrap().value)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((opt.value - brute).abs() < 1e-12);
            assert!((evaluate_policy(&inst, &opt.policy).unwrap().value - opt.value).abs() < 1e-12);
        }
        assert_eq!(optimal_adaptive(&inst, &Constraint::uniform(1)).unwrap().value, 1.5);
        assert_eq!(optimal_adaptive(&inst, &Constraint::uniform(2)).unwrap().value, 2.5);
    }

    #[test]
    fn modular_independent_takes_top_k() {
        let inst = modular_instance(&[1.0, 4.0, 2.0, 3.0]);
        let c = Constraint::uniform(2);
        let opt = optimal_adaptive(&inst, &c).unwrap();
        let (set, v) = best_nonadaptive(&inst, &c).unwrap();
        assert_eq!(set, ItemSet::from_bits(0b1010));
        assert!((v - 7.0).abs() < 1e-12);
        assert!((opt.value - 7.0).abs() < 1e-12);
    }

    #[test]
    fn single_item_is_picked() {
        let inst = modular_instance(&[2.0]);
        let opt = optimal_adaptive(&inst, &Constraint::uniform(1)).unwrap();
        assert_eq!(opt.value, 2.0);
        assert_eq!(best_nonadaptive(&inst, &Constraint::uniform(1)).unwrap().0, ItemSet::singleton(0));
    }

    #[test]
    fn virtual_value_matches_double_enumeration() {
        let inst = common_cause2();
        let opt = optimal_adaptive(&inst, &Constraint::uniform(1)).unwrap();
        let support = inst.distribution().support();
        let mut double = 0.0;
        for (phi, p) in support {
            let picked: ItemSet = opt.policy.run(phi).unwrap().into_iter().collect();
            for (truth, q) in support {
                double += crate::model::prob::to_f64(&(p * q)) * inst.value(truth.pairs(picked));
            }
        }
        let v = virtual_nonadaptive_value(&inst, &opt.policy).unwrap();
        assert!((v - double).abs() < 1e-12);
        assert!(v >= 0.5 * opt.value - 1e-9);
    }

    #[test]
    fn depth_one_virtual_equals_true_on_product() {
        let inst = random_product(3, 2, 4, &CoverageSpec::default());
        let p = Policy::sequence(&[2], 2);
        let a = virtual_nonadaptive_value(&inst, &p).unwrap();
        let b = evaluate_policy(&inst, &p).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn prefix_closed_family_is_respected() {
        let inst = random_product(3, 2, 9, &CoverageSpec::default());
        let c = Constraint::prefix_closed(vec![vec![], vec![2], vec![2, 0], vec![1]]).unwrap();
        let opt = optimal_adaptive(&inst, &c).unwrap();
        assert!(opt.policy.is_feasible(&c));
        for path in opt.policy.paths() {
            assert!(c.is_prefix_feasible(&path).unwrap());
        }
    }

    #[test]
    fn caps_are_enforced() {
        let inst = random_product(4, 2, 0, &CoverageSpec::default());
        assert!(matches!(
            optimal_adaptive_with_caps(&inst, &Constraint::uniform(1), 3, 64),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            optimal_adaptive_with_caps(&inst, &Constraint::uniform(1), 5, 8),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn upper_bound_at_zero_and_json_round_trip() {
        let inst = common_cause2();
        let ml = Multilinear::new(&inst).unwrap();
        let opt = optimal_adaptive(&inst, &Constraint::uniform(2)).unwrap();
        let check = optimal_upper_bound_check(&ml, &opt.policy, &FractionalPoint::zeros(2), 2.0 / 3.0).unwrap();
        assert!(check.holds);
        assert!(optimal_upper_bound_check(&ml, &opt.policy, &FractionalPoint::zeros(2), 0.0).is_err());
        let json = opt.policy.to_json(&inst);
        assert_eq!(Policy::from_json(&json, &inst).unwrap(), opt.policy);
        assert_eq!(Policy::Stop.to_json(&inst), Value::String("stop".into()));
    }
}
