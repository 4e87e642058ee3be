//! Seeded instance generators.
//!
//! All generated utilities are weighted coverage functions with small integer
//! target weights, so expected values are exact in double precision whenever
//! the probabilities are dyadic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::prob::Prob;
use crate::model::{Instance, JointDistribution, Realization, UtilityFunction, WeightedCoverage};

/// Largest support a generator will enumerate.
pub const MAX_GENERATED_SUPPORT: usize = 4096;

/// Shape of a random weighted-coverage utility.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageSpec {
    pub targets: usize,
    /// Target weights are integers drawn from `1..=max_weight`.
    pub max_weight: u32,
    /// Probability that a given `(item, state)` pair covers a given target.
    pub density: f64,
}

impl Default for CoverageSpec {
    fn default() -> Self {
        CoverageSpec {
            targets: 6,
            max_weight: 3,
            density: 0.35,
        }
    }
}

fn item_names(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("x{i}")).collect()
}

fn state_names(n: usize) -> Vec<String> {
    (0..n).map(|o| format!("s{o}")).collect()
}

fn random_coverage(rng: &mut ChaCha8Rng, m: usize, states: usize, spec: &CoverageSpec) -> Result<UtilityFunction> {
    let targets: Vec<String> = (1..=spec.targets).map(|t| format!("t{t}")).collect();
    let weights = (0..spec.targets)
        .map(|_| rng.random_range(1..=spec.max_weight.max(1)) as f64)
        .collect();
    let coverage = (0..m * states)
        .map(|_| {
            (0..spec.targets)
                .filter(|_| rng.random_bool(spec.density.clamp(0.0, 1.0)))
                .collect()
        })
        .collect();
    Ok(UtilityFunction::Coverage(WeightedCoverage::new(
        targets, weights, m, states, coverage,
    )?))
}

/// A random probability vector with small integer weights.
fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Prob> {
    let w: Vec<i64> = (0..n).map(|_| rng.random_range(1..=6)).collect();
    let total: i64 = w.iter().sum();
    w.into_iter()
        .map(|x| BigRational::new(BigInt::from(x), BigInt::from(total)))
        .collect()
}

/// All `states^m` realizations in lexicographic order.
fn all_realizations(m: usize, states: usize) -> Result<Vec<Vec<usize>>> {
    let count = (states as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if count > MAX_GENERATED_SUPPORT as u128 {
        return Err(Error::capacity(
            "generated support size",
            usize::try_from(count).unwrap_or(usize::MAX),
            MAX_GENERATED_SUPPORT,
        ));
    }
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..states).map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o);
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

/// Independent items with the given per-item marginals; the utility is a
/// random coverage function drawn from `seed`.
pub fn generate_product(marginals: &[Vec<Prob>], seed: u64, spec: &CoverageSpec) -> Result<Instance> {
    let m = marginals.len();
    if m == 0 {
        return Err(Error::input("product instance needs at least one item"));
    }
    let states = marginals[0].len();
    if marginals.iter().any(|p| p.len() != states) {
        return Err(Error::input("every item needs a marginal over the same states"));
    }
    if marginals.iter().any(|p| p.iter().fold(Prob::zero(), |a, b| a + b) != Prob::one()) {
        return Err(Error::input("each marginal must sum to exactly 1"));
    }
    let support = all_realizations(m, states)?
        .into_iter()
        .map(|phi| {
            let p = phi
                .iter()
                .enumerate()
                .fold(Prob::one(), |acc, (e, &o)| acc * &marginals[e][o]);
            (Realization::new(phi), p)
        })
        .filter(|(_, p)| !p.is_zero())
        .collect();
    let dist = JointDistribution::new(m, states, support)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let utility = random_coverage(&mut rng, m, states, spec)?;
    Instance::new(item_names(m), state_names(states), dist, utility)
}

/// Product instance with seeded random marginals.
pub fn generate_random_product(m: usize, states: usize, seed: u64, spec: &CoverageSpec) -> Result<Instance> {
    if states == 0 {
        return Err(Error::input("items need at least one state"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let marginals: Vec<Vec<Prob>> = (0..m).map(|_| random_simplex(&mut rng, states)).collect();
    generate_product(&marginals, seed, spec)
}

/// As [`generate_random_product`] for sizes known to be within caps.
pub fn random_product(m: usize, states: usize, seed: u64, spec: &CoverageSpec) -> Instance {
    generate_random_product(m, states, seed, spec).expect("random product within caps")
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommonCauseSpec {
    pub m: usize,
    pub states: usize,
    pub worlds: usize,
    pub seed: u64,
    /// Each item independently ignores the world and takes a uniform state
    /// with this probability.
    pub noise: Prob,
    pub coverage: CoverageSpec,
}

/// A latent world `W` drawn from a seeded categorical law fixes every item's
/// state; the support has at most `worlds` points.
pub fn generate_common_cause(m: usize, states: usize, worlds: usize, seed: u64) -> Result<Instance> {
    generate_common_cause_with(&CommonCauseSpec {
        m,
        states,
        worlds,
        seed,
        noise: Prob::zero(),
        coverage: CoverageSpec::default(),
    })
}

pub fn generate_common_cause_with(spec: &CommonCauseSpec) -> Result<Instance> {
    if spec.worlds == 0 {
        return Err(Error::input("common-cause generator needs at least one world"));
    }
    if spec.m == 0 || spec.states == 0 {
        return Err(Error::input("common-cause generator needs items and states"));
    }
    if spec.noise < Prob::zero() || spec.noise > Prob::one() {
        return Err(Error::input("noise must be a probability"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let world_probs = random_simplex(&mut rng, spec.worlds);
    let world_states: Vec<Vec<usize>> = (0..spec.worlds)
        .map(|_| (0..spec.m).map(|_| rng.random_range(0..spec.states)).collect())
        .collect();
    let utility = random_coverage(&mut rng, spec.m, spec.states, &spec.coverage)?;

    let support: Vec<(Realization, Prob)> = if spec.noise.is_zero() {
        let mut acc: Vec<(Vec<usize>, Prob)> = Vec::new();
        for (phi, p) in world_states.into_iter().zip(world_probs) {
            match acc.iter_mut().find(|(q, _)| *q == phi) {
                Some((_, mass)) => *mass += p,
                None => acc.push((phi, p)),
            }
        }
        acc.sort();
        acc.into_iter().map(|(phi, p)| (Realization::new(phi), p)).collect()
    } else {
        let uniform = BigRational::new(BigInt::one(), BigInt::from(spec.states));
        let keep = Prob::one() - &spec.noise;
        all_realizations(spec.m, spec.states)?
            .into_iter()
            .map(|phi| {
                let p = world_states
                    .iter()
                    .zip(&world_probs)
                    .fold(Prob::zero(), |acc, (ws, pw)| {
                        let lik = phi.iter().zip(ws).fold(Prob::one(), |l, (&o, &w)| {
                            let hit = if o == w { keep.clone() } else { Prob::zero() };
                            l * (hit + &spec.noise * &uniform)
                        });
                        acc + pw * lik
                    });
                (Realization::new(phi), p)
            })
            .filter(|(_, p)| !p.is_zero())
            .collect()
    };
    let dist = JointDistribution::new(spec.m, spec.states, support)?;
    Instance::new(item_names(spec.m), state_names(spec.states), dist, utility)
}

/// The fixed two-item, two-world instance used throughout the tests.
///
/// Items `a`, `b`; states `good`, `bad`; worlds `(good, good)` and
/// `(bad, bad)` with probability 1/2 each; unit-weight targets `t1..t3`
/// covered as `a:good → {t1,t2}`, `a:bad → {t1}`, `b:good → {t2,t3}`,
/// `b:bad → {t3}`.
pub fn common_cause2() -> Instance {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let dist = JointDistribution::new(
        2,
        2,
        vec![
            (Realization::new(vec![0, 0]), half.clone()),
            (Realization::new(vec![1, 1]), half),
        ],
    )
    .expect("valid distribution");
    let coverage = WeightedCoverage::new(
        vec!["t1".into(), "t2".into(), "t3".into()],
        vec![1.0; 3],
        2,
        2,
        vec![vec![0, 1], vec![0], vec![1, 2], vec![2]],
    )
    .expect("valid coverage");
    Instance::new(
        vec!["a".into(), "b".into()],
        vec!["good".into(), "bad".into()],
        dist,
        UtilityFunction::Coverage(coverage),
    )
    .expect("valid instance")
}

/// Deterministic single-state items each covering a private target of the
/// given weight, so `f(S) = Σ_{e∈S} w_e`.
pub fn modular_instance(weights: &[f64]) -> Instance {
    let m = weights.len();
    let dist = JointDistribution::new(m, 1, vec![(Realization::new(vec![0; m]), Prob::one())])
        .expect("valid distribution");
    let coverage = WeightedCoverage::new(
        (1..=m).map(|t| format!("t{t}")).collect(),
        weights.to_vec(),
        m,
        1,
        (0..m).map(|e| vec![e]).collect(),
    )
    .expect("valid coverage");
    Instance::new(item_names(m), vec!["on".into()], dist, UtilityFunction::Coverage(coverage))
        .expect("valid instance")
}

/// Rotates item and state labels by `shift` and scales target weights by
/// `scale`. Coverage utilities only.
pub fn relabel_and_scale(instance: &Instance, shift: usize, scale: f64) -> Instance {
    let m = instance.m();
    let n = instance.n_states();
    let item_map = |e: usize| (e + shift) % m;
    let state_map = |o: usize| (o + shift) % n;
    let mut items = vec![String::new(); m];
    for (e, name) in instance.items().iter().enumerate() {
        items[item_map(e)] = name.clone();
    }
    let mut states = vec![String::new(); n];
    for (o, name) in instance.states().iter().enumerate() {
        states[state_map(o)] = name.clone();
    }
    let support = instance
        .distribution()
        .support()
        .iter()
        .map(|(phi, p)| {
            let mut moved = vec![0; m];
            for e in 0..m {
                moved[item_map(e)] = state_map(phi.state(e));
            }
            (Realization::new(moved), p.clone())
        })
        .collect();
    let dist = JointDistribution::new(m, n, support).expect("relabelled distribution");
    let cov = match instance.utility() {
        UtilityFunction::Coverage(c) => c,
        UtilityFunction::Table(_) => panic!("relabel_and_scale supports coverage utilities only"),
    };
    let mut coverage = vec![Vec::new(); m * n];
    for e in 0..m {
        for o in 0..n {
            coverage[item_map(e) * n + state_map(o)] = cov.covered(e, o);
        }
    }
    let weights = cov.weights().iter().map(|w| w * scale).collect();
    let cov = WeightedCoverage::new(cov.targets().to_vec(), weights, m, n, coverage).expect("scaled coverage");
    Instance::new(items, states, dist, UtilityFunction::Coverage(cov)).expect("relabelled instance")
}
