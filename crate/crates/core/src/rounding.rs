//! Randomized rounding of fractional points to feasible sets.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::Constraint;
use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::multilinear::FractionalPoint;

/// Coordinates within this distance of 0 or 1 are treated as integral.
const SNAP: f64 = 1e-9;

fn is_fractional(v: f64) -> bool {
    v > SNAP && v < 1.0 - SNAP
}

/// Swap rounding on a uniform or partition matroid.
///
/// Within each block (the whole ground set for a uniform matroid) the two
/// lowest-index fractional coordinates exchange mass until at most one stays
/// fractional; that one is rounded on its own. Every step keeps `E[y]` fixed.
pub fn pipage_round(constraint: &Constraint, y: &FractionalPoint, seed: u64) -> Result<ItemSet> {
    let m = y.len();
    let blocks = match constraint {
        Constraint::Uniform { .. } => vec![ItemSet::full(m)],
        Constraint::Partition { blocks, .. } => {
            if blocks.iter().any(|b| !b.is_subset_of(ItemSet::full(m))) {
                return Err(Error::input("partition mentions items beyond the point"));
            }
            blocks.clone()
        }
        _ => return Err(Error::Unsupported("swap rounding needs a uniform or partition matroid".into())),
    };
    if !constraint.polytope_contains(y)? {
        return Err(Error::input("point lies outside the matroid polytope"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = y.coords().to_vec();
    let mut set = ItemSet::EMPTY;
    for block in blocks {
        let mut leftover = None;
        for e in block.iter() {
            if !is_fractional(v[e]) {
                continue;
            }
            let Some(i) = leftover else {
                leftover = Some(e);
                continue;
            };
            let (up, down) = ((1.0 - v[i]).min(v[e]), v[i].min(1.0 - v[e]));
            if rng.random::<f64>() * (up + down) < down {
                v[i] += up;
                v[e] -= up;
            } else {
                v[i] -= down;
                v[e] += down;
            }
            leftover = [i, e].into_iter().find(|&k| is_fractional(v[k]));
        }
        for e in block.iter() {
            if v[e] >= 1.0 - SNAP {
                set = set.with(e);
            }
        }
        if let Some(i) = leftover {
            if rng.random::<f64>() < v[i] && constraint.is_feasible(set.with(i)) {
                set = set.with(i);
            }
        }
    }
    debug_assert!(constraint.is_feasible(set));
    Ok(set)
}

/// Includes each item independently with probability `y_e`.
pub fn independent_round(y: &FractionalPoint, seed: u64) -> ItemSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    y.coords()
        .iter()
        .enumerate()
        .filter(|&(_, &p)| rng.random::<f64>() < p)
        .map(|(e, _)| e)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn point(v: &[f64]) -> FractionalPoint {
        FractionalPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn integral_points_are_returned() {
        let y = point(&[1.0, 0.0, 1.0]);
        for seed in 0..20 {
            assert_eq!(pipage_round(&Constraint::uniform(2), &y, seed).unwrap(), ItemSet::from_bits(0b101));
        }
    }

    #[test]
    fn half_half_splits_evenly() {
        let y = point(&[0.5, 0.5]);
        let mut first = 0;
        let n = 4000;
        for seed in 0..n {
            let s = pipage_round(&Constraint::uniform(1), &y, seed).unwrap();
            assert_eq!(s.len(), 1);
            first += s.contains(0) as u32;
        }
        let p = first as f64 / n as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn rejects_bad_inputs() {
        let y = point(&[0.8, 0.8]);
        assert!(matches!(pipage_round(&Constraint::uniform(1), &y, 0), Err(Error::Input(_))));
        let k = Constraint::knapsack(2, vec![1.0, 1.0], 1.0).unwrap();
        assert!(matches!(pipage_round(&k, &point(&[0.5, 0.5]), 0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn independent_extremes() {
        assert_eq!(independent_round(&point(&[0.0; 3]), 4), ItemSet::EMPTY);
        assert_eq!(independent_round(&point(&[1.0; 3]), 4), ItemSet::full(3));
    }

    #[test]
    fn independent_frequencies() {
        let y = point(&[0.3, 0.7, 0.05]);
        let n = 10_000;
        let mut counts = [0u32; 3];
        for seed in 0..n {
            for e in independent_round(&y, seed).iter() {
                counts[e] += 1;
            }
        }
        for (e, &c) in counts.iter().enumerate() {
            let p = y.get(e);
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((c as f64 / n as f64 - p).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn partition_marginals_are_preserved() {
        let c = Constraint::partition(4, vec![ItemSet::from_bits(0b0111), ItemSet::from_bits(0b1000)], vec![2, 1]).unwrap();
        let y = point(&[0.6, 0.9, 0.3, 0.45]);
        let n = 10_000;
        let mut counts = [0u32; 4];
        for seed in 0..n {
            let s = pipage_round(&c, &y, seed).unwrap();
            assert!(c.is_feasible(s));
            for e in s.iter() {
                counts[e] += 1;
            }
        }
        for (e, &cnt) in counts.iter().enumerate() {
            let p = y.get(e);
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((cnt as f64 / n as f64 - p).abs() < 4.0 * sigma, "item {e}");
        }
    }

    fn capped_point(m: usize) -> impl Strategy<Value = (Vec<f64>, usize)> {
        (prop::collection::vec(0.0f64..=1.0, m), 1..=m).prop_map(|(mut v, k)| {
            let sum: f64 = v.iter().sum();
            if sum > k as f64 {
                v.iter_mut().for_each(|x| *x *= k as f64 / sum);
            }
            (v, k)
        })
    }

    proptest! {
        #[test]
        fn uniform_output_is_feasible((v, k) in (1usize..8).prop_flat_map(capped_point), seed in any::<u64>()) {
            let c = Constraint::uniform(k);
            let y = FractionalPoint::new(v.clone()).unwrap();
            let s = pipage_round(&c, &y, seed).unwrap();
            prop_assert!(c.is_feasible(s));
            for (e, &ye) in v.iter().enumerate() {
                if ye >= 1.0 - SNAP { prop_assert!(s.contains(e)); }
                if ye <= SNAP { prop_assert!(!s.contains(e)); }
            }
        }
    }
}
