//! Feasibility families, their polytopes and the linear-maximization oracle
//! used in every continuous-greedy round.
//!
//! For the knapsack kind the polytope is the fractional relaxation
//! `{y ∈ [0,1]^m : c·y ≤ B}`, whose vertices have at most one fractional
//! coordinate. Every other kind uses the convex hull of feasible indicators.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::multilinear::FractionalPoint;

/// Membership tolerance for polytope checks on floating points.
pub const POLYTOPE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    /// `|S| ≤ k`.
    Uniform { k: usize },
    /// Blocks partition `E`; at most `capacities[b]` items from block `b`.
    Partition {
        blocks: Vec<ItemSet>,
        capacities: Vec<usize>,
    },
    /// `Σ_{e∈S} costs[e] ≤ budget`.
    Knapsack { costs: Vec<f64>, budget: f64 },
    /// A listed downward-closed family, stored sorted and deduplicated.
    Explicit { feasible: Vec<ItemSet> },
    /// A listed prefix-closed family of item sequences. Not necessarily
    /// downward closed as a family of sets.
    PrefixClosed { sequences: Vec<Vec<usize>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub point: FractionalPoint,
    pub objective: f64,
    /// Feasible set whose indicator is `point`, when the optimum is integral.
    pub vertex_set: Option<ItemSet>,
}

impl Constraint {
    pub fn uniform(k: usize) -> Self {
        Constraint::Uniform { k }
    }

    pub fn partition(m: usize, blocks: Vec<ItemSet>, capacities: Vec<usize>) -> Result<Self> {
        if blocks.len() != capacities.len() {
            return Err(Error::input("partition blocks and capacities differ in length"));
        }
        let mut seen = ItemSet::EMPTY;
        for b in &blocks {
            if b.bits() & seen.bits() != 0 {
                return Err(Error::input("partition blocks overlap"));
            }
            seen = seen.union(*b);
        }
        if seen != ItemSet::full(m) {
            return Err(Error::input("partition blocks must cover every item exactly once"));
        }
        Ok(Constraint::Partition { blocks, capacities })
    }

    pub fn knapsack(m: usize, costs: Vec<f64>, budget: f64) -> Result<Self> {
        if costs.len() != m {
            return Err(Error::input("knapsack needs one cost per item"));
        }
        if costs.iter().chain([&budget]).any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::input("knapsack costs and budget must be nonnegative reals"));
        }
        Ok(Constraint::Knapsack { costs, budget })
    }

    /// Validates downward closure (which implies `∅` is listed).
    pub fn explicit(mut feasible: Vec<ItemSet>) -> Result<Self> {
        feasible.sort();
        feasible.dedup();
        for s in &feasible {
            for e in s.iter() {
                if feasible.binary_search(&s.without(e)).is_err() {
                    return Err(Error::input(format!(
                        "explicit family is not downward closed: {s:?} listed without {:?}",
                        s.without(e)
                    )));
                }
            }
        }
        if feasible.binary_search(&ItemSet::EMPTY).is_err() {
            return Err(Error::input("explicit family must contain the empty set"));
        }
        Ok(Constraint::Explicit { feasible })
    }

    /// Validates prefix closure and distinct items per sequence.
    pub fn prefix_closed(mut sequences: Vec<Vec<usize>>) -> Result<Self> {
        sequences.sort();
        sequences.dedup();
        for seq in &sequences {
            check_distinct(seq)?;
            if !seq.is_empty() && sequences.binary_search(&seq[..seq.len() - 1].to_vec()).is_err() {
                return Err(Error::input(format!(
                    "sequence family is not prefix closed at {seq:?}"
                )));
            }
        }
        if sequences.binary_search(&Vec::new()).is_err() {
            return Err(Error::input("sequence family must contain the empty sequence"));
        }
        Ok(Constraint::PrefixClosed { sequences })
    }

    pub fn is_matroid(&self) -> bool {
        matches!(self, Constraint::Uniform { .. } | Constraint::Partition { .. })
    }

    /// True when feasibility depends only on the picked set, not its order.
    pub fn is_downward_closed(&self) -> bool {
        !matches!(self, Constraint::PrefixClosed { .. })
    }

    pub fn is_feasible(&self, s: ItemSet) -> bool {
        match self {
            Constraint::Uniform { k } => s.len() <= *k,
            Constraint::Partition { blocks, capacities } => blocks
                .iter()
                .zip(capacities)
                .all(|(b, &c)| ItemSet::from_bits(s.bits() & b.bits()).len() <= c),
            Constraint::Knapsack { costs, budget } => {
                s.iter().map(|e| costs[e]).sum::<f64>() <= *budget
            }
            Constraint::Explicit { feasible } => feasible.binary_search(&s).is_ok(),
            Constraint::PrefixClosed { sequences } => sequences
                .iter()
                .any(|q| q.iter().copied().collect::<ItemSet>() == s),
        }
    }

    /// Every prefix of `sequence` is feasible.
    pub fn is_prefix_feasible(&self, sequence: &[usize]) -> Result<bool> {
        check_distinct(sequence)?;
        Ok(match self {
            Constraint::PrefixClosed { sequences } => sequences.binary_search(&sequence.to_vec()).is_ok(),
            _ => self.is_feasible(sequence.iter().copied().collect()),
        })
    }

    /// Solves `max Σ w_e y_e` over the polytope. Negative weights are
    /// clamped to zero; ties go to the lowest item index.
    pub fn lp_maximize(&self, weights: &[f64]) -> Result<LpSolution> {
        let m = weights.len();
        if weights.iter().any(|w| w.is_nan()) {
            return Err(Error::input("LP weight is NaN"));
        }
        let w: Vec<f64> = weights.iter().map(|&x| x.max(0.0)).collect();
        let integral = |set: ItemSet| {
            let objective = set.iter().map(|e| w[e]).sum();
            LpSolution {
                point: FractionalPoint::indicator(m, set),
                objective,
                vertex_set: Some(set),
            }
        };
        let sol = match self {
            Constraint::Uniform { k } => integral(top_positive(&w, ItemSet::full(m), *k)),
            Constraint::Partition { blocks, capacities } => {
                check_partition_size(blocks, m)?;
                let set = blocks
                    .iter()
                    .zip(capacities)
                    .fold(ItemSet::EMPTY, |acc, (b, &c)| acc.union(top_positive(&w, *b, c)));
                integral(set)
            }
            Constraint::Knapsack { costs, budget } => {
                if costs.len() != m {
                    return Err(Error::input("knapsack cost vector does not match weights"));
                }
                fractional_knapsack(&w, costs, *budget)
            }
            Constraint::Explicit { feasible } => {
                let mut best = ItemSet::EMPTY;
                let mut best_val = 0.0;
                for &s in feasible {
                    if !s.is_subset_of(ItemSet::full(m)) {
                        return Err(Error::input("explicit family mentions items beyond the weights"));
                    }
                    let v: f64 = s.iter().map(|e| w[e]).sum();
                    if v > best_val {
                        best = s;
                        best_val = v;
                    }
                }
                integral(best)
            }
            Constraint::PrefixClosed { .. } => {
                return Err(Error::Unsupported(
                    "linear optimization over a prefix-closed sequence family".into(),
                ))
            }
        };
        Ok(sol)
    }

    /// Membership of `x` in the polytope via its defining inequalities.
    /// Explicit families have no inequality description here; use
    /// [`Constraint::contains_combination`] with a decomposition instead.
    pub fn polytope_contains(&self, x: &FractionalPoint) -> Result<bool> {
        let c = x.coords();
        if c.iter().any(|&v| !(-POLYTOPE_TOL..=1.0 + POLYTOPE_TOL).contains(&v)) {
            return Ok(false);
        }
        match self {
            Constraint::Uniform { k } => Ok(c.iter().sum::<f64>() <= *k as f64 + POLYTOPE_TOL),
            Constraint::Partition { blocks, capacities } => Ok(blocks.iter().zip(capacities).all(|(b, &cap)| {
                b.iter().map(|e| c[e]).sum::<f64>() <= cap as f64 + POLYTOPE_TOL
            })),
            Constraint::Knapsack { costs, budget } => {
                Ok(c.iter().zip(costs).map(|(v, k)| v * k).sum::<f64>() <= budget + POLYTOPE_TOL)
            }
            Constraint::Explicit { .. } | Constraint::PrefixClosed { .. } => Err(Error::Unsupported(
                "inequality membership test for a listed family".into(),
            )),
        }
    }

    /// Checks that `x` equals `Σ λ_i 1_{S_i}` with feasible `S_i`, `λ ≥ 0`
    /// and `Σ λ ≤ 1` (the remainder sits on `∅`).
    pub fn contains_combination(&self, x: &FractionalPoint, combination: &[(ItemSet, f64)]) -> bool {
        let mut acc = vec![0.0; x.len()];
        let mut total = 0.0;
        for &(s, lambda) in combination {
            if lambda < 0.0 || !self.is_feasible(s) {
                return false;
            }
            total += lambda;
            for e in s.iter() {
                if e >= acc.len() {
                    return false;
                }
                acc[e] += lambda;
            }
        }
        total <= 1.0 + POLYTOPE_TOL
            && acc
                .iter()
                .zip(x.coords())
                .all(|(a, b)| (a - b).abs() <= POLYTOPE_TOL)
    }
}

/// Rounding-loss factor for the constraint: 1 for matroids (lossless
/// rounding), otherwise the declared value, which must lie in `(0, 1]`.
pub fn alpha_for(constraint: &Constraint, declared: Option<f64>) -> Result<f64> {
    if constraint.is_matroid() {
        return Ok(1.0);
    }
    match declared {
        Some(a) if a > 0.0 && a <= 1.0 => Ok(a),
        Some(a) => Err(Error::Configuration(format!("alpha {a} outside (0, 1]"))),
        None => Err(Error::Configuration(
            "no rounding scheme for this constraint kind; declare alpha".into(),
        )),
    }
}

fn check_distinct(seq: &[usize]) -> Result<()> {
    let mut seen = ItemSet::EMPTY;
    for &e in seq {
        if seen.contains(e) {
            return Err(Error::input(format!("item {e} repeats in sequence")));
        }
        seen = seen.with(e);
    }
    Ok(())
}

fn check_partition_size(blocks: &[ItemSet], m: usize) -> Result<()> {
    let covered = blocks.iter().fold(ItemSet::EMPTY, |a, b| a.union(*b));
    if covered != ItemSet::full(m) {
        return Err(Error::input("partition blocks do not match the weight vector"));
    }
    Ok(())
}

/// Descending by weight, ascending index on ties.
fn by_weight_desc(w: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| w[b].partial_cmp(&w[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b))
}

fn top_positive(w: &[f64], pool: ItemSet, k: usize) -> ItemSet {
    let mut order: Vec<usize> = pool.iter().filter(|&e| w[e] > 0.0).collect();
    order.sort_by(by_weight_desc(w));
    order.into_iter().take(k).collect()
}

fn fractional_knapsack(w: &[f64], costs: &[f64], budget: f64) -> LpSolution {
    let m = w.len();
    let mut coords = vec![0.0; m];
    let mut objective = 0.0;
    // zero-cost items with positive weight are free
    let mut remaining = budget;
    let mut order: Vec<usize> = (0..m).filter(|&e| w[e] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let da = density(w[a], costs[a]);
        let db = density(w[b], costs[b]);
        db.partial_cmp(&da).unwrap_or(Ordering::Equal).then(a.cmp(&b))
    });
    for e in order {
        if costs[e] <= remaining {
            coords[e] = 1.0;
            remaining -= costs[e];
            objective += w[e];
        } else {
            let frac = remaining / costs[e];
            if frac > 0.0 {
                coords[e] = frac;
                objective += frac * w[e];
            }
            break;
        }
    }
    let integral = coords.iter().all(|&v| v == 0.0 || v == 1.0);
    let point = FractionalPoint::new(coords).expect("fractions lie in [0, 1]");
    let vertex_set = integral.then(|| point.support());
    LpSolution {
        point,
        objective,
        vertex_set,
    }
}

fn density(w: f64, c: f64) -> f64 {
    if c == 0.0 {
        f64::INFINITY
    } else {
        w / c
    }
}
