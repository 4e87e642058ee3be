//! Explicit joint priors over full realizations, and exact conditioning.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::prob::{to_f64, Prob};
use crate::error::{Error, Result};
use crate::itemset::ItemSet;

/// A full assignment of one state index to every item.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Realization(Vec<usize>);

impl Realization {
    pub fn new(states: Vec<usize>) -> Self {
        Realization(states)
    }

    pub fn state(&self, e: usize) -> usize {
        self.0[e]
    }

    pub fn states(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The `(item, state)` pairs of the items in `items`.
    pub fn pairs(&self, items: ItemSet) -> impl Iterator<Item = (usize, usize)> + '_ {
        items.iter().map(move |e| (e, self.0[e]))
    }

    pub fn restrict(&self, items: ItemSet) -> PartialRealization {
        PartialRealization(self.pairs(items).collect())
    }

    pub fn agrees_with(&self, partial: &PartialRealization) -> bool {
        partial.0.iter().all(|&(e, o)| self.0[e] == o)
    }
}

/// An assignment of states to a subset of items, sorted by item index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialRealization(Vec<(usize, usize)>);

impl PartialRealization {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds from arbitrary-order pairs; fails if an item is assigned twice.
    pub fn from_pairs(mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::input("partial realization assigns an item twice"));
        }
        Ok(PartialRealization(pairs))
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn domain(&self) -> ItemSet {
        self.0.iter().map(|&(e, _)| e).collect()
    }

    pub fn state_of(&self, e: usize) -> Option<usize> {
        self.0.iter().find(|&&(i, _)| i == e).map(|&(_, o)| o)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[must_use]
    pub fn with(&self, e: usize, o: usize) -> Self {
        let mut pairs = self.0.clone();
        match pairs.binary_search_by_key(&e, |&(i, _)| i) {
            Ok(pos) => pairs[pos].1 = o,
            Err(pos) => pairs.insert(pos, (e, o)),
        }
        PartialRealization(pairs)
    }
}

/// Conditional law of one item's state given a positive-probability observation.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalDistribution {
    pub item: usize,
    pub conditioning: PartialRealization,
    /// Probability of each state index; sums to exactly 1.
    pub marginal: Vec<Prob>,
}

impl ConditionalDistribution {
    /// `(state, probability)` for states with positive probability.
    pub fn positive(&self) -> impl Iterator<Item = (usize, &Prob)> {
        self.marginal
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    items: usize,
    states: usize,
    support: Vec<(Realization, Prob)>,
    weights: Vec<f64>,
}

impl JointDistribution {
    pub fn new(items: usize, states: usize, support: Vec<(Realization, Prob)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::input("distribution has empty support"));
        }
        let mut total = Prob::zero();
        for (phi, p) in &support {
            if phi.len() != items {
                return Err(Error::input(format!(
                    "realization assigns {} items, expected {items}",
                    phi.len()
                )));
            }
            if let Some(&bad) = phi.states().iter().find(|&&o| o >= states) {
                return Err(Error::input(format!("state index {bad} out of range")));
            }
            if p.is_negative() {
                return Err(Error::input("negative probability"));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(Error::input(format!(
                "probabilities sum to {total}, not exactly 1"
            )));
        }
        let mut seen: Vec<&Realization> = support.iter().map(|(phi, _)| phi).collect();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("support lists a realization twice"));
        }
        let weights = support.iter().map(|(_, p)| to_f64(p)).collect();
        Ok(JointDistribution {
            items,
            states,
            support,
            weights,
        })
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn support(&self) -> &[(Realization, Prob)] {
        &self.support
    }

    /// Support entries with their probability as a double.
    pub fn weighted(&self) -> impl Iterator<Item = (&Realization, f64)> {
        self.support
            .iter()
            .zip(&self.weights)
            .map(|((phi, _), &w)| (phi, w))
    }

    pub fn probability_of(&self, observation: &PartialRealization) -> Prob {
        self.support
            .iter()
            .filter(|(phi, _)| phi.agrees_with(observation))
            .fold(Prob::zero(), |acc, (_, p)| acc + p)
    }

    /// `D_e(φ_V)`: the law of item `e` given `Φ_V = φ_V`.
    pub fn condition(&self, e: usize, observation: &PartialRealization) -> Result<ConditionalDistribution> {
        if e >= self.items {
            return Err(Error::input(format!("item index {e} out of range")));
        }
        if observation.domain().contains(e) {
            return Err(Error::input("conditioned item is part of the observation"));
        }
        let mut marginal = vec![Prob::zero(); self.states];
        let mut mass = Prob::zero();
        for (phi, p) in &self.support {
            if phi.agrees_with(observation) {
                marginal[phi.state(e)] += p;
                mass += p;
            }
        }
        if mass.is_zero() {
            return Err(Error::Conditioning);
        }
        for q in &mut marginal {
            *q /= &mass;
        }
        Ok(ConditionalDistribution {
            item: e,
            conditioning: observation.clone(),
            marginal,
        })
    }

    /// Unconditional marginal of `e`.
    pub fn marginal(&self, e: usize) -> Vec<Prob> {
        self.condition(e, &PartialRealization::empty())
            .expect("empty observation has probability one")
            .marginal
    }

    /// Distinct positive-probability restrictions `φ_V` of the support to `V`,
    /// with their probabilities, in sorted order.
    pub fn observations(&self, items: ItemSet) -> Vec<(PartialRealization, Prob)> {
        let mut acc: BTreeMap<PartialRealization, Prob> = BTreeMap::new();
        for (phi, p) in &self.support {
            if p.is_zero() {
                continue;
            }
            *acc.entry(phi.restrict(items)).or_insert_with(Prob::zero) += p;
        }
        acc.into_iter().collect()
    }

    /// True when the joint law equals the product of its marginals.
    pub fn is_product(&self) -> bool {
        let marginals: Vec<Vec<Prob>> = (0..self.items).map(|e| self.marginal(e)).collect();
        let positive = marginals
            .iter()
            .map(|m| m.iter().filter(|p| !p.is_zero()).count())
            .product::<usize>();
        let mut covered = 0usize;
        for (phi, p) in &self.support {
            let expect = (0..self.items).fold(Prob::one(), |acc, e| acc * &marginals[e][phi.state(e)]);
            if &expect != p {
                return false;
            }
            if !p.is_zero() {
                covered += 1;
            }
        }
        covered == positive
    }
}
