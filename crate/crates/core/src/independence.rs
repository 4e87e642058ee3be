//! Degrees of independence of the prior and the closed-form guarantees that
//! depend on them.
//!
//! `κ` is the minimum over `(e, S, V, φ_V)` of
//! `f_S(e) / E_{Φ_e∼D_e(φ_V)}[f_S(Φ_e)]`, and `γ` the minimum over
//! `(e, V, φ_V, φ'_V)` of the ratio of expected state marginals of `e` under
//! the two conditionals, both measured against the fixed pair set
//! `φ_V ∪ φ'_V`. Both are computed exactly in rational arithmetic. Only
//! positive-probability observations are enumerated; `0/0` counts as 1 and a
//! positive numerator over a zero denominator is an infinite ratio, which
//! cannot be the minimum.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::model::prob::{exact, format_prob, ratio_or_one, to_f64};
use crate::model::{Instance, PartialRealization};

/// Default limit on `m` for the exhaustive enumerations.
pub const DEFAULT_INDEPENDENCE_CAP: usize = 6;

/// Which expectation the `κ` denominator takes over `Φ_S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KappaVariant {
    /// `Φ_S` drawn from the unconditional prior (the literal definition).
    Literal,
    /// `Φ_S` drawn from the prior conditioned on `Φ_V = φ_V`. Diagnostic only.
    Conditioned,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Kappa {
        item: usize,
        base: ItemSet,
        observation: PartialRealization,
    },
    Gamma {
        item: usize,
        first: PartialRealization,
        second: PartialRealization,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceReport {
    /// Raw minimum ratio.
    pub value: BigRational,
    /// `min(value, 1)`.
    pub clamped: BigRational,
    pub witness: Witness,
    pub ratios_examined: usize,
    /// Ratios with a positive numerator over a zero denominator.
    pub infinite_ratios: usize,
}

impl IndependenceReport {
    pub fn clamped_f64(&self) -> f64 {
        to_f64(&self.clamped)
    }

    pub fn value_f64(&self) -> f64 {
        to_f64(&self.value)
    }

    pub fn to_json(&self, instance: &Instance) -> Value {
        let obs = |p: &PartialRealization| {
            p.pairs()
                .iter()
                .map(|&(e, o)| (instance.items()[e].clone(), Value::from(instance.states()[o].clone())))
                .collect::<serde_json::Map<_, _>>()
        };
        let witness = match &self.witness {
            Witness::Kappa {
                item,
                base,
                observation,
            } => json!({
                "item": instance.items()[*item],
                "base": base.iter().map(|e| instance.items()[e].clone()).collect::<Vec<_>>(),
                "observation": obs(observation),
            }),
            Witness::Gamma { item, first, second } => json!({
                "item": instance.items()[*item],
                "first": obs(first),
                "second": obs(second),
            }),
        };
        json!({
            "value": format_prob(&self.value),
            "clamped": format_prob(&self.clamped),
            "value_f64": self.value_f64(),
            "witness": witness,
            "ratios_examined": self.ratios_examined,
            "infinite_ratios": self.infinite_ratios,
        })
    }
}

struct Minimum {
    best: Option<(BigRational, Witness)>,
    examined: usize,
    infinite: usize,
}

impl Minimum {
    fn new() -> Self {
        Minimum {
            best: None,
            examined: 0,
            infinite: 0,
        }
    }

    fn offer(&mut self, num: &BigRational, den: &BigRational, witness: impl FnOnce() -> Witness) {
        self.examined += 1;
        match ratio_or_one(num, den) {
            None => self.infinite += 1,
            Some(r) => {
                if self.best.as_ref().is_none_or(|(b, _)| r < *b) {
                    self.best = Some((r, witness()));
                }
            }
        }
    }

    fn finish(self) -> Result<IndependenceReport> {
        let (value, witness) = self
            .best
            .ok_or_else(|| Error::Internal("no finite ratio was examined".into()))?;
        let clamped = if value > BigRational::one() {
            BigRational::one()
        } else {
            value.clone()
        };
        Ok(IndependenceReport {
            value,
            clamped,
            witness,
            ratios_examined: self.examined,
            infinite_ratios: self.infinite,
        })
    }
}

/// Exact `f(S)` for every subset, indexed by bitmask.
fn exact_set_values(instance: &Instance) -> Vec<BigRational> {
    instance
        .all_items()
        .subsets()
        .map(|s| instance.expected_set_value_exact(s))
        .collect()
}

/// `κ(D)` with the literal definition.
pub fn kappa(instance: &Instance) -> Result<IndependenceReport> {
    kappa_with(instance, KappaVariant::Literal, DEFAULT_INDEPENDENCE_CAP)
}

pub fn kappa_with(instance: &Instance, variant: KappaVariant, cap: usize) -> Result<IndependenceReport> {
    Error::check_cap("item count for independence enumeration", instance.m(), cap)?;
    let m = instance.m();
    let states = instance.n_states();
    let values = exact_set_values(instance);
    let mut min = Minimum::new();
    for e in 0..m {
        let rest = instance.all_items().without(e);
        // conditionals of e for every (V, φ_V), in enumeration order
        let mut conditionals = Vec::new();
        for v in rest.subsets() {
            for (obs, _) in instance.distribution().observations(v) {
                let cond = instance.condition(e, &obs)?;
                conditionals.push((obs, cond.marginal));
            }
        }
        for s in rest.subsets() {
            let num = &values[s.with(e).bits() as usize] - &values[s.bits() as usize];
            let gains: Vec<BigRational> = match variant {
                KappaVariant::Literal => (0..states)
                    .map(|o| instance.state_marginal_exact(s, e, o))
                    .collect::<Result<_>>()?,
                KappaVariant::Conditioned => Vec::new(),
            };
            for (obs, cond) in &conditionals {
                let den = match variant {
                    KappaVariant::Literal => weighted_sum(cond, &gains),
                    KappaVariant::Conditioned => {
                        let gains = conditioned_state_marginals(instance, s, e, obs);
                        weighted_sum(cond, &gains)
                    }
                };
                min.offer(&num, &den, || Witness::Kappa {
                    item: e,
                    base: s,
                    observation: obs.clone(),
                });
            }
        }
    }
    min.finish()
}

/// `γ(D)`.
pub fn gamma(instance: &Instance) -> Result<IndependenceReport> {
    gamma_with_cap(instance, DEFAULT_INDEPENDENCE_CAP)
}

pub fn gamma_with_cap(instance: &Instance, cap: usize) -> Result<IndependenceReport> {
    Error::check_cap("item count for independence enumeration", instance.m(), cap)?;
    let m = instance.m();
    let mut min = Minimum::new();
    for e in 0..m {
        let rest = instance.all_items().without(e);
        for v in rest.subsets() {
            let conds = instance
                .distribution()
                .observations(v)
                .into_iter()
                .map(|(obs, _)| {
                    let c = instance.condition(e, &obs)?;
                    Ok((obs, c.marginal))
                })
                .collect::<Result<Vec<_>>>()?;
            for (first, c1) in &conds {
                for (second, c2) in &conds {
                    let gains = pair_set_gains(instance, e, first, second);
                    let num = weighted_sum(c1, &gains);
                    let den = weighted_sum(c2, &gains);
                    min.offer(&num, &den, || Witness::Gamma {
                        item: e,
                        first: first.clone(),
                        second: second.clone(),
                    });
                }
            }
        }
    }
    min.finish()
}

/// Recomputes one `κ` ratio directly from the model operations.
/// `None` means the ratio is infinite.
pub fn kappa_ratio(
    instance: &Instance,
    e: usize,
    base: ItemSet,
    observation: &PartialRealization,
) -> Result<Option<BigRational>> {
    let num = instance.marginal_exact(base, e)?;
    let cond = instance.condition(e, observation)?;
    let mut den = BigRational::zero();
    for (o, p) in cond.positive() {
        den += p * instance.state_marginal_exact(base, e, o)?;
    }
    Ok(ratio_or_one(&num, &den))
}

/// Recomputes one `γ` ratio directly.
pub fn gamma_ratio(
    instance: &Instance,
    e: usize,
    first: &PartialRealization,
    second: &PartialRealization,
) -> Result<Option<BigRational>> {
    if first.domain() != second.domain() {
        return Err(Error::input("gamma observations must share their item set"));
    }
    let c1 = instance.condition(e, first)?;
    let c2 = instance.condition(e, second)?;
    let gains = pair_set_gains(instance, e, first, second);
    Ok(ratio_or_one(&weighted_sum(&c1.marginal, &gains), &weighted_sum(&c2.marginal, &gains)))
}

/// `f(A ∪ {(e, o)}) − f(A)` for every state `o`, with `A = first ∪ second`.
fn pair_set_gains(
    instance: &Instance,
    e: usize,
    first: &PartialRealization,
    second: &PartialRealization,
) -> Vec<BigRational> {
    let a: Vec<(usize, usize)> = first.pairs().iter().chain(second.pairs()).copied().collect();
    let base = exact(instance.value(a.iter().copied()));
    (0..instance.n_states())
        .map(|o| exact(instance.value(a.iter().copied().chain([(e, o)]))) - &base)
        .collect()
}

/// `E[f(Φ_S ∪ (e,o)) | φ_V] − E[f(Φ_S) | φ_V]` for every state `o`.
fn conditioned_state_marginals(
    instance: &Instance,
    s: ItemSet,
    e: usize,
    obs: &PartialRealization,
) -> Vec<BigRational> {
    let mut mass = BigRational::zero();
    let mut base = BigRational::zero();
    let mut with = vec![BigRational::zero(); instance.n_states()];
    for (phi, p) in instance.distribution().support() {
        if p.is_zero() || !phi.agrees_with(obs) {
            continue;
        }
        mass += p;
        base += p * exact(instance.value(phi.pairs(s)));
        for (o, w) in with.iter_mut().enumerate() {
            *w += p * exact(instance.value(phi.pairs(s).chain([(e, o)])));
        }
    }
    with.into_iter().map(|w| (w - &base) / &mass).collect()
}

fn weighted_sum(probs: &[BigRational], values: &[BigRational]) -> BigRational {
    probs
        .iter()
        .zip(values)
        .filter(|(p, _)| !p.is_zero())
        .fold(BigRational::zero(), |acc, (p, v)| acc + p * v)
}

/// `α(1 − e^{−κ/2 + κ/(18m²)} − (κ+2)/(3mκ))`. May be negative for small `mκ`.
pub fn ratio_bound(kappa: f64, m: usize, alpha: f64) -> Result<f64> {
    if kappa <= 0.0 {
        return Err(Error::DegenerateBound("kappa is zero; the guarantee is undefined".into()));
    }
    if kappa > 1.0 {
        return Err(Error::input(format!("kappa {kappa} outside (0, 1]")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::input(format!("alpha {alpha} outside (0, 1]")));
    }
    if m == 0 {
        return Err(Error::input("ratio bound needs m ≥ 1"));
    }
    let m = m as f64;
    let exponent = -kappa / 2.0 + kappa / (18.0 * m * m);
    Ok(alpha * (1.0 - exponent.exp() - (kappa + 2.0) / (3.0 * m * kappa)))
}

/// `(1 + γ)/γ`.
pub fn adaptivity_gap_bound(gamma: f64) -> Result<f64> {
    if gamma <= 0.0 {
        return Err(Error::DegenerateBound("gamma is zero; the gap bound is undefined".into()));
    }
    if gamma > 1.0 {
        return Err(Error::input(format!("gamma {gamma} outside (0, 1]")));
    }
    Ok((1.0 + gamma) / gamma)
}

/// `γ/(1 + γ)`, the fraction of an adaptive policy's value its virtual
/// non-adaptive counterpart keeps. Zero when `γ = 0`.
pub fn virtual_factor(gamma: f64) -> f64 {
    gamma / (1.0 + gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators::{common_cause2, generate_common_cause, random_product, CoverageSpec};
    use crate::model::prob::parse_prob;
    use proptest::prelude::*;

    fn q(s: &str) -> BigRational {
        parse_prob(s).unwrap()
    }

    /// Brute force over every (e, S, V, φ_V) straight from the model operations.
    fn kappa_oracle(inst: &Instance) -> BigRational {
        let mut best: Option<BigRational> = None;
        for e in 0..inst.m() {
            let rest = inst.all_items().without(e);
            for s in rest.subsets() {
                for v in rest.subsets() {
                    for (obs, _) in inst.distribution().observations(v) {
                        if let Some(r) = kappa_ratio(inst, e, s, &obs).unwrap() {
                            if best.as_ref().is_none_or(|b| r < *b) {
                                best = Some(r);
                            }
                        }
                    }
                }
            }
        }
        best.unwrap()
    }

    #[test]
    fn product_instances_have_unit_degrees() {
        for seed in 0..5 {
            let inst = random_product(3, 2, seed, &CoverageSpec::default());
            assert_eq!(kappa(&inst).unwrap().value, BigRational::one());
            assert_eq!(gamma(&inst).unwrap().value, BigRational::one());
        }
    }

    #[test]
    fn single_item_has_unit_degrees() {
        let inst = random_product(1, 3, 9, &CoverageSpec::default());
        assert_eq!(kappa(&inst).unwrap().value, BigRational::one());
        assert_eq!(gamma(&inst).unwrap().value, BigRational::one());
    }

    #[test]
    fn common_cause2_values() {
        // worked by hand: the binding ratio is f_{a}(b) = 1 over the
        // state marginal of b=good against {a}, which is 3/2
        let inst = common_cause2();
        let k = kappa(&inst).unwrap();
        assert_eq!(k.value, q("2/3"));
        assert_eq!(k.value, kappa_oracle(&inst));
        let g = gamma(&inst).unwrap();
        assert_eq!(g.value, q("1"));
    }

    #[test]
    fn witnesses_reproduce_minimum() {
        for seed in 0..6 {
            let inst = generate_common_cause(3, 2, 3, seed).unwrap();
            let k = kappa(&inst).unwrap();
            match &k.witness {
                Witness::Kappa { item, base, observation } => {
                    assert_eq!(kappa_ratio(&inst, *item, *base, observation).unwrap(), Some(k.value.clone()));
                }
                _ => panic!("kappa produced a gamma witness"),
            }
            assert_eq!(k.value, kappa_oracle(&inst));
            let g = gamma(&inst).unwrap();
            match &g.witness {
                Witness::Gamma { item, first, second } => {
                    assert_eq!(gamma_ratio(&inst, *item, first, second).unwrap(), Some(g.value.clone()));
                }
                _ => panic!("gamma produced a kappa witness"),
            }
            assert!(g.value <= BigRational::one());
            assert!(k.clamped <= BigRational::one());
        }
    }

    #[test]
    fn deterministic_instance_has_unit_degrees() {
        let inst = generate_common_cause(3, 3, 1, 4).unwrap();
        assert_eq!(kappa(&inst).unwrap().value, BigRational::one());
        assert_eq!(gamma(&inst).unwrap().value, BigRational::one());
    }

    #[test]
    fn conditioned_variant_runs() {
        let inst = common_cause2();
        let lit = kappa(&inst).unwrap();
        let cond = kappa_with(&inst, KappaVariant::Conditioned, DEFAULT_INDEPENDENCE_CAP).unwrap();
        assert!(cond.value <= BigRational::one());
        assert_eq!(lit.ratios_examined, cond.ratios_examined);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = random_product(4, 2, 0, &CoverageSpec::default());
        assert!(matches!(kappa_with(&inst, KappaVariant::Literal, 3), Err(Error::Capacity { .. })));
        assert!(matches!(gamma_with_cap(&inst, 3), Err(Error::Capacity { .. })));
    }

    #[test]
    fn closed_form_bounds() {
        assert!((ratio_bound(1.0, 1_000_000, 1.0).unwrap() - (1.0 - (-0.5f64).exp())).abs() < 1e-5);
        // independently evaluated: 1 − e^{−1/2 + 1/288} − 1/4
        assert!((ratio_bound(1.0, 4, 1.0).unwrap() - 0.1413596705507547).abs() < 1e-12);
        assert!((ratio_bound(1.0, 4, 0.38).unwrap() - 0.05371667480928679).abs() < 1e-12);
        assert!(ratio_bound(1.0, 2, 1.0).unwrap() < 0.0);
        assert!(matches!(ratio_bound(0.0, 4, 1.0), Err(Error::DegenerateBound(_))));
        assert_eq!(adaptivity_gap_bound(1.0).unwrap(), 2.0);
        assert_eq!(adaptivity_gap_bound(0.5).unwrap(), 3.0);
        assert!((adaptivity_gap_bound(1.0 / 3.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(matches!(adaptivity_gap_bound(0.0), Err(Error::DegenerateBound(_))));
        assert_eq!(virtual_factor(1.0), 0.5);
    }

    #[test]
    fn report_serializes_witness_by_name() {
        let inst = common_cause2();
        let v = kappa(&inst).unwrap().to_json(&inst);
        assert_eq!(v["value"], "2/3");
        assert!(v["witness"]["item"].is_string());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn degrees_invariant_under_relabeling_and_scaling(seed in 0u64..1000, shift in 0usize..3, pow in -3i32..4) {
            let inst = generate_common_cause(3, 2, 3, seed).unwrap();
            let k = kappa(&inst).unwrap().value;
            let g = gamma(&inst).unwrap().value;
            let moved = crate::harness::generators::relabel_and_scale(&inst, shift, 2f64.powi(pow));
            prop_assert_eq!(kappa(&moved).unwrap().value, k);
            prop_assert_eq!(gamma(&moved).unwrap().value, g);
        }
    }
}
