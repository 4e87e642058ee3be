//! Monotone submodular utilities over `(item, state)` pairs.
//!
//! Two families are supported: weighted coverage, which is monotone and
//! submodular by construction, and an explicit table listing `f(X)` for every
//! subset `X ⊆ E×O`. Pair `(e, o)` has ground index `e * |O| + o`.

use crate::error::{Error, Result};

/// Default limit on `|E×O|` for exhaustive utility validation.
pub const DEFAULT_VALIDATE_CAP: usize = 14;

/// Largest ground set an explicit table may cover (`2^20` entries).
pub const MAX_TABLE_GROUND: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedCoverage {
    targets: Vec<String>,
    weights: Vec<f64>,
    states: usize,
    /// Target bitset for every ground pair.
    coverage: Vec<Vec<u64>>,
}

impl WeightedCoverage {
    /// `coverage[e * states + o]` lists the target indices covered by `(e, o)`.
    pub fn new(
        targets: Vec<String>,
        weights: Vec<f64>,
        items: usize,
        states: usize,
        coverage: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if targets.len() != weights.len() {
            return Err(Error::input("coverage targets and weights differ in length"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::input(format!("target weight {w} is not a nonnegative real")));
        }
        if coverage.len() != items * states {
            return Err(Error::input("coverage map must list every (item, state) pair"));
        }
        let words = targets.len().div_ceil(64).max(1);
        let coverage = coverage
            .into_iter()
            .map(|list| {
                let mut bits = vec![0u64; words];
                for t in list {
                    if t >= targets.len() {
                        return Err(Error::input(format!("target index {t} out of range")));
                    }
                    bits[t / 64] |= 1 << (t % 64);
                }
                Ok(bits)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightedCoverage {
            targets,
            weights,
            states,
            coverage,
        })
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Target indices covered by `(e, o)`.
    pub fn covered(&self, e: usize, o: usize) -> Vec<usize> {
        let bits = &self.coverage[e * self.states + o];
        (0..self.targets.len())
            .filter(|t| bits[t / 64] >> (t % 64) & 1 == 1)
            .collect()
    }

    fn value(&self, pairs: impl IntoIterator<Item = (usize, usize)>) -> f64 {
        let mut union = vec![0u64; self.coverage.first().map_or(1, Vec::len)];
        for (e, o) in pairs {
            for (u, w) in union.iter_mut().zip(&self.coverage[e * self.states + o]) {
                *u |= w;
            }
        }
        let mut total = 0.0;
        for (i, word) in union.iter().enumerate() {
            let mut rest = *word;
            while rest != 0 {
                let t = i * 64 + rest.trailing_zeros() as usize;
                total += self.weights[t];
                rest &= rest - 1;
            }
        }
        total
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitTable {
    states: usize,
    ground: usize,
    values: Vec<f64>,
}

impl ExplicitTable {
    /// `values[mask]` is `f` of the pair set encoded by `mask`.
    pub fn new(items: usize, states: usize, values: Vec<f64>) -> Result<Self> {
        let ground = items * states;
        Error::check_cap("explicit table ground set", ground, MAX_TABLE_GROUND)?;
        if values.len() != 1 << ground {
            return Err(Error::input(format!(
                "explicit table has {} entries, expected {}",
                values.len(),
                1u64 << ground
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::input(format!("table value {v} is not a nonnegative real")));
        }
        Ok(ExplicitTable {
            states,
            ground,
            values,
        })
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn value(&self, pairs: impl IntoIterator<Item = (usize, usize)>) -> f64 {
        let mask = pairs
            .into_iter()
            .fold(0usize, |m, (e, o)| m | 1 << (e * self.states + o));
        self.values[mask]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum UtilityFunction {
    Coverage(WeightedCoverage),
    Table(ExplicitTable),
}

/// A violation found by [`UtilityFunction::validate`]. Sets are ground-pair bitmasks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// `f(base ∪ {element}) < f(base)`.
    Monotonicity { base: u64, element: usize },
    /// `f(small ∪ {element}) − f(small) < f(large ∪ {element}) − f(large)`.
    Submodularity {
        small: u64,
        large: u64,
        element: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub monotone: bool,
    pub submodular: bool,
    pub witness: Option<Violation>,
    pub note: Option<String>,
}

impl UtilityFunction {
    /// `f` of a set of `(item, state)` pairs. Repeated items with different
    /// states are unioned.
    pub fn value(&self, pairs: impl IntoIterator<Item = (usize, usize)>) -> f64 {
        match self {
            UtilityFunction::Coverage(c) => c.value(pairs),
            UtilityFunction::Table(t) => t.value(pairs),
        }
    }

    /// Exhaustive check of monotonicity and submodularity on explicit tables.
    ///
    /// Uses the local forms `f(X+x) ≥ f(X)` and
    /// `f(X+x) − f(X) ≥ f(X+y+x) − f(X+y)`, which are equivalent to the
    /// global definitions; a local failure is itself a global witness.
    pub fn validate(&self, cap: usize) -> Result<ValidationReport> {
        let table = match self {
            UtilityFunction::Coverage(_) => {
                return Ok(ValidationReport {
                    monotone: true,
                    submodular: true,
                    witness: None,
                    note: Some("weighted coverage is monotone submodular by construction".into()),
                })
            }
            UtilityFunction::Table(t) => t,
        };
        let n = table.ground;
        Error::check_cap("utility ground set", n, cap)?;
        let f = &table.values;
        let full = (1u64 << n) - 1;
        for base in 0..=full {
            for x in (0..n).filter(|x| base >> x & 1 == 0) {
                if f[(base | 1 << x) as usize] < f[base as usize] {
                    return Ok(ValidationReport {
                        monotone: false,
                        submodular: false,
                        witness: Some(Violation::Monotonicity { base, element: x }),
                        note: None,
                    }
                    .recheck_submodular(f, n));
                }
            }
        }
        let witness = find_submodularity_violation(f, n);
        Ok(ValidationReport {
            monotone: true,
            submodular: witness.is_none(),
            witness,
            note: None,
        })
    }
}

impl ValidationReport {
    fn recheck_submodular(mut self, f: &[f64], n: usize) -> Self {
        self.submodular = find_submodularity_violation(f, n).is_none();
        self
    }
}

fn find_submodularity_violation(f: &[f64], n: usize) -> Option<Violation> {
    let full = (1u64 << n) - 1;
    for base in 0..=full {
        for x in (0..n).filter(|x| base >> x & 1 == 0) {
            let gain = f[(base | 1 << x) as usize] - f[base as usize];
            for y in (0..n).filter(|&y| y != x && base >> y & 1 == 0) {
                let large = base | 1 << y;
                let later = f[(large | 1 << x) as usize] - f[large as usize];
                if gain < later {
                    return Some(Violation::Submodularity {
                        small: base,
                        large,
                        element: x,
                    });
                }
            }
        }
    }
    None
}
