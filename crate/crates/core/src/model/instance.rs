use num_rational::BigRational;
use num_traits::Zero;

use super::distribution::{ConditionalDistribution, JointDistribution, PartialRealization};
use super::prob::{exact, Prob};
use super::utility::{UtilityFunction, ValidationReport};
use crate::error::{Error, Result};
use crate::itemset::{ItemSet, MAX_ITEMS};

/// Items `E`, states `O`, the prior `D` and the utility `f`.
///
/// Items and states are addressed by index internally; names are kept for
/// I/O and reporting.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    items: Vec<String>,
    states: Vec<String>,
    distribution: JointDistribution,
    utility: UtilityFunction,
}

impl Instance {
    pub fn new(
        items: Vec<String>,
        states: Vec<String>,
        distribution: JointDistribution,
        utility: UtilityFunction,
    ) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::input("instance needs at least one item"));
        }
        if states.is_empty() {
            return Err(Error::input("instance needs at least one state"));
        }
        Error::check_cap("item count", items.len(), MAX_ITEMS)?;
        if has_duplicates(&items) || has_duplicates(&states) {
            return Err(Error::input("duplicate item or state name"));
        }
        if distribution.items() != items.len() || distribution.states() != states.len() {
            return Err(Error::input("distribution shape does not match items and states"));
        }
        if let UtilityFunction::Table(t) = &utility {
            if t.ground() != items.len() * states.len() {
                return Err(Error::input("explicit table ground set does not match E×O"));
            }
        }
        Ok(Instance {
            items,
            states,
            distribution,
            utility,
        })
    }

    pub fn m(&self) -> usize {
        self.items.len()
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn all_items(&self) -> ItemSet {
        ItemSet::full(self.m())
    }

    pub fn distribution(&self) -> &JointDistribution {
        &self.distribution
    }

    pub fn utility(&self) -> &UtilityFunction {
        &self.utility
    }

    pub fn item_index(&self, name: &str) -> Result<usize> {
        self.items
            .iter()
            .position(|i| i == name)
            .ok_or_else(|| Error::input(format!("unknown item {name:?}")))
    }

    pub fn state_index(&self, name: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::input(format!("unknown state {name:?}")))
    }

    pub fn item_set(&self, names: &[&str]) -> Result<ItemSet> {
        names.iter().map(|n| self.item_index(n)).collect()
    }

    fn check_item(&self, e: usize) -> Result<()> {
        if e < self.m() {
            Ok(())
        } else {
            Err(Error::input(format!("item index {e} out of range")))
        }
    }

    fn check_set(&self, s: ItemSet) -> Result<()> {
        if s.is_subset_of(self.all_items()) {
            Ok(())
        } else {
            Err(Error::input("item set is not a subset of E"))
        }
    }

    /// `f` on named `(item, state)` pairs.
    pub fn evaluate(&self, pairs: &[(&str, &str)]) -> Result<f64> {
        let idx = pairs
            .iter()
            .map(|(e, o)| Ok((self.item_index(e)?, self.state_index(o)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.utility.value(idx))
    }

    /// `f` on index pairs; panics on out-of-range indices.
    pub fn value(&self, pairs: impl IntoIterator<Item = (usize, usize)>) -> f64 {
        self.utility.value(pairs)
    }

    /// `f(S) = E_Φ[f(∪_{v∈S} Φ_v)]`.
    pub fn expected_set_value(&self, s: ItemSet) -> f64 {
        self.distribution
            .weighted()
            .map(|(phi, w)| w * self.utility.value(phi.pairs(s)))
            .sum()
    }

    /// Exact rational form of [`Self::expected_set_value`]; utility doubles are
    /// converted without rounding.
    pub fn expected_set_value_exact(&self, s: ItemSet) -> BigRational {
        self.distribution
            .support()
            .iter()
            .filter(|(_, p)| !p.is_zero())
            .fold(BigRational::zero(), |acc, (phi, p)| {
                acc + p * exact(self.utility.value(phi.pairs(s)))
            })
    }

    /// `f_S(e) = f(S ∪ {e}) − f(S)`.
    pub fn marginal(&self, s: ItemSet, e: usize) -> Result<f64> {
        self.check_marginal_args(s, e)?;
        Ok(self.expected_set_value(s.with(e)) - self.expected_set_value(s))
    }

    pub fn marginal_exact(&self, s: ItemSet, e: usize) -> Result<BigRational> {
        self.check_marginal_args(s, e)?;
        Ok(self.expected_set_value_exact(s.with(e)) - self.expected_set_value_exact(s))
    }

    /// `f_S(φ_e) = E_Φ[f((∪_{v∈S} Φ_v) ∪ φ_e)] − f(S)`, with `Φ` drawn from the
    /// unconditional prior.
    pub fn state_marginal(&self, s: ItemSet, e: usize, state: usize) -> Result<f64> {
        self.check_state_args(s, e, state)?;
        let with: f64 = self
            .distribution
            .weighted()
            .map(|(phi, w)| w * self.utility.value(phi.pairs(s).chain([(e, state)])))
            .sum();
        Ok(with - self.expected_set_value(s))
    }

    pub fn state_marginal_exact(&self, s: ItemSet, e: usize, state: usize) -> Result<BigRational> {
        self.check_state_args(s, e, state)?;
        let with = self
            .distribution
            .support()
            .iter()
            .filter(|(_, p)| !p.is_zero())
            .fold(BigRational::zero(), |acc, (phi, p)| {
                acc + p * exact(self.utility.value(phi.pairs(s).chain([(e, state)])))
            });
        Ok(with - self.expected_set_value_exact(s))
    }

    /// `D_e(φ_V)`.
    pub fn condition(&self, e: usize, observation: &PartialRealization) -> Result<ConditionalDistribution> {
        self.distribution.condition(e, observation)
    }

    pub fn validate_utility(&self, cap: usize) -> Result<ValidationReport> {
        self.utility.validate(cap)
    }

    /// `Pr[Φ_V = φ_V]`.
    pub fn probability_of(&self, observation: &PartialRealization) -> Prob {
        self.distribution.probability_of(observation)
    }

    fn check_marginal_args(&self, s: ItemSet, e: usize) -> Result<()> {
        self.check_item(e)?;
        self.check_set(s)?;
        if s.contains(e) {
            return Err(Error::input("marginal of an item already in the set"));
        }
        Ok(())
    }

    fn check_state_args(&self, s: ItemSet, e: usize, state: usize) -> Result<()> {
        self.check_marginal_args(s, e)?;
        if state >= self.n_states() {
            return Err(Error::input(format!("state index {state} out of range")));
        }
        Ok(())
    }
}

fn has_duplicates(names: &[String]) -> bool {
    let mut sorted: Vec<&String> = names.iter().collect();
    sorted.sort();
    sorted.windows(2).any(|w| w[0] == w[1])
}
