//! Brute-force oracles shared by the integration tests. They work straight
//! from the support table and never call the library's own enumerations.

#![allow(dead_code)]

use depsub::model::prob::exact;
use depsub::model::utility::ExplicitTable;
use depsub::{Instance, ItemSet, JointDistribution, Realization, UtilityFunction};
use num_rational::BigRational;
use num_traits::{One, Zero};

pub fn rational(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

/// Every assignment of states to the items of `v`, as `(item, state)` pairs.
pub fn assignments(v: ItemSet, states: usize) -> Vec<Vec<(usize, usize)>> {
    v.iter().fold(vec![Vec::new()], |acc, e| {
        acc.into_iter()
            .flat_map(|prefix| {
                (0..states).map(move |o| {
                    let mut next = prefix.clone();
                    next.push((e, o));
                    next
                })
            })
            .collect()
    })
}

fn agrees(phi: &Realization, obs: &[(usize, usize)]) -> bool {
    obs.iter().all(|&(e, o)| phi.state(e) == o)
}

fn mass(inst: &Instance, obs: &[(usize, usize)]) -> BigRational {
    inst.distribution()
        .support()
        .iter()
        .filter(|(phi, _)| agrees(phi, obs))
        .fold(BigRational::zero(), |acc, (_, p)| acc + p)
}

/// `Pr[Φ_e = o | obs]` for every state `o`.
fn conditional(inst: &Instance, e: usize, obs: &[(usize, usize)]) -> Vec<BigRational> {
    let total = mass(inst, obs);
    (0..inst.n_states())
        .map(|o| {
            let mut with = obs.to_vec();
            with.push((e, o));
            mass(inst, &with) / &total
        })
        .collect()
}

fn f(inst: &Instance, pairs: impl IntoIterator<Item = (usize, usize)>) -> BigRational {
    exact(inst.value(pairs))
}

/// `E_Φ[f(Φ_S ∪ extra) − f(Φ_S)]` over the unconditional prior.
fn expected_gain(inst: &Instance, s: ItemSet, extra: impl Fn(&Realization) -> (usize, usize)) -> BigRational {
    inst.distribution()
        .support()
        .iter()
        .fold(BigRational::zero(), |acc, (phi, p)| {
            let base: Vec<_> = s.iter().map(|v| (v, phi.state(v))).collect();
            let with = base.iter().copied().chain([extra(phi)]);
            acc + p * (f(inst, with) - f(inst, base.iter().copied()))
        })
}

/// Ratio with the `0/0 = 1` convention; `None` for a positive numerator over zero.
fn ratio(num: BigRational, den: BigRational) -> Option<BigRational> {
    match (num.is_zero(), den.is_zero()) {
        (true, true) => Some(BigRational::one()),
        (false, true) => None,
        _ => Some(num / den),
    }
}

fn min_of(values: impl Iterator<Item = Option<BigRational>>) -> BigRational {
    values
        .flatten()
        .min()
        .unwrap_or_else(BigRational::one)
}

/// First-form degree of independence by direct enumeration of
/// `(e, S, V, φ_V)` with `S` and `V` ranging independently.
pub fn kappa_oracle(inst: &Instance) -> BigRational {
    let m = inst.m();
    let full = ItemSet::full(m);
    let mut ratios = Vec::new();
    for e in 0..m {
        let rest = full.without(e);
        for s in rest.subsets() {
            let num = expected_gain(inst, s, |phi| (e, phi.state(e)));
            let gains: Vec<BigRational> = (0..inst.n_states())
                .map(|o| expected_gain(inst, s, |_| (e, o)))
                .collect();
            for v in rest.subsets() {
                for obs in assignments(v, inst.n_states()) {
                    if mass(inst, &obs).is_zero() {
                        continue;
                    }
                    let den = conditional(inst, e, &obs)
                        .iter()
                        .zip(&gains)
                        .fold(BigRational::zero(), |acc, (p, g)| acc + p * g);
                    ratios.push(ratio(num.clone(), den));
                }
            }
        }
    }
    min_of(ratios.into_iter())
}

/// Second-form degree of independence by direct enumeration of
/// `(e, V, φ_V, φ'_V)`.
pub fn gamma_oracle(inst: &Instance) -> BigRational {
    let m = inst.m();
    let mut ratios = Vec::new();
    for e in 0..m {
        for v in ItemSet::full(m).without(e).subsets() {
            let observations: Vec<_> = assignments(v, inst.n_states())
                .into_iter()
                .filter(|obs| !mass(inst, obs).is_zero())
                .collect();
            for first in &observations {
                for second in &observations {
                    let a: Vec<_> = first.iter().chain(second).copied().collect();
                    let base = f(inst, a.iter().copied());
                    let gains: Vec<BigRational> = (0..inst.n_states())
                        .map(|o| f(inst, a.iter().copied().chain([(e, o)])) - &base)
                        .collect();
                    let weigh = |obs: &[(usize, usize)]| {
                        conditional(inst, e, obs)
                            .iter()
                            .zip(&gains)
                            .fold(BigRational::zero(), |acc, (p, g)| acc + p * g)
                    };
                    ratios.push(ratio(weigh(first), weigh(second)));
                }
            }
        }
    }
    min_of(ratios.into_iter())
}

/// One item with states `lo`/`hi` of equal probability and an explicit
/// table valuing them at `values[1]` and `values[2]`.
pub fn one_item_table(values: [f64; 4]) -> Instance {
    let half = rational(1, 2);
    let dist = JointDistribution::new(
        1,
        2,
        vec![
            (Realization::new(vec![0]), half.clone()),
            (Realization::new(vec![1]), half),
        ],
    )
    .unwrap();
    Instance::new(
        vec!["x".into()],
        vec!["lo".into(), "hi".into()],
        dist,
        UtilityFunction::Table(ExplicitTable::new(1, 2, values.to_vec()).unwrap()),
    )
    .unwrap()
}
