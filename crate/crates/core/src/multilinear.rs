//! Exact and sampled evaluation of the multilinear extension
//! `F(x) = Σ_S f(S) Π_{e∈S} x_e Π_{e∉S} (1 − x_e)` of the expected set value,
//! along with the standard weight `F_x(e)` and the optimistic weight
//! `F_{x\e}(e)` driving continuous greedy.
//!
//! Exact mode tabulates `f(S)` for all `2^m` subsets once. Sampled mode draws
//! the random set `R ∼ x` from a counter-based stream keyed by
//! `(seed, round, item, sample index)`, so any partition of the sample indices
//! reproduces the same estimate.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::model::Instance;

/// Default limit on `m` for exact (subset-enumerating) evaluation.
pub const DEFAULT_EXACT_CAP: usize = 16;

/// A point of `[0,1]^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalPoint(Vec<f64>);

impl FractionalPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(v) = coords.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::input(format!("coordinate {v} outside [0, 1]")));
        }
        Ok(FractionalPoint(coords))
    }

    pub fn zeros(m: usize) -> Self {
        FractionalPoint(vec![0.0; m])
    }

    pub fn constant(m: usize, v: f64) -> Result<Self> {
        Self::new(vec![v; m])
    }

    pub fn indicator(m: usize, s: ItemSet) -> Self {
        FractionalPoint((0..m).map(|e| if s.contains(e) { 1.0 } else { 0.0 }).collect())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, e: usize) -> f64 {
        self.0[e]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `x \ e`: coordinate `e` set to 0.
    #[must_use]
    pub fn zero_out(&self, e: usize) -> Self {
        self.with_coord(e, 0.0)
    }

    /// `x ∨ 1_e`: coordinate `e` set to 1.
    #[must_use]
    pub fn raise(&self, e: usize) -> Self {
        self.with_coord(e, 1.0)
    }

    fn with_coord(&self, e: usize, v: f64) -> Self {
        let mut c = self.0.clone();
        c[e] = v;
        FractionalPoint(c)
    }

    /// Items with a positive coordinate.
    pub fn support(&self) -> ItemSet {
        (0..self.0.len()).filter(|&e| self.0[e] > 0.0).collect()
    }

    /// Items whose coordinate is exactly 1, provided every coordinate is 0 or 1.
    pub fn as_integral(&self) -> Option<ItemSet> {
        self.0
            .iter()
            .all(|&v| v == 0.0 || v == 1.0)
            .then(|| self.support())
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// A Monte-Carlo estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub sample_count: usize,
    /// Sample standard deviation over `√n`.
    pub std_error: f64,
    pub seed: u64,
}

impl Estimate {
    /// Mean and standard error of `values`, shifted by the first value so that
    /// constant samples reproduce their value exactly with zero error.
    pub fn from_samples(values: &[f64], seed: u64) -> Self {
        assert!(!values.is_empty(), "an estimate needs at least one sample");
        let n = values.len();
        let shift = values[0];
        let (sum, sum_sq) = values.iter().fold((0.0, 0.0), |(s, q), v| {
            let d = v - shift;
            (s + d, q + d * d)
        });
        let mean = shift + sum / n as f64;
        let std_error = if n > 1 {
            let var = ((sum_sq - sum * sum / n as f64) / (n - 1) as f64).max(0.0);
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            sample_count: n,
            std_error,
            seed,
        }
    }
}

/// Identifies an independent block of random draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleKey {
    pub seed: u64,
    pub round: u64,
    /// `None` for draws of `R ∼ x` itself, `Some(e)` for the block estimating item `e`.
    pub item: Option<usize>,
}

impl SampleKey {
    pub fn new(seed: u64) -> Self {
        SampleKey {
            seed,
            round: 0,
            item: None,
        }
    }

    fn stream(self) -> u64 {
        (self.round << 16) | self.item.map_or(0, |e| e as u64 + 1)
    }
}

/// Draws sample `index` of `R ∼ x` for the block `key`, skipping item `skip`.
///
/// Each sample reads its own window of the keyed ChaCha stream, so the draw
/// depends only on `(key, index)`.
pub fn draw_set(x: &FractionalPoint, key: SampleKey, index: u64, skip: Option<usize>) -> ItemSet {
    let m = x.len() as u128;
    let mut rng = ChaCha8Rng::seed_from_u64(key.seed);
    rng.set_stream(key.stream());
    rng.set_word_pos(index as u128 * m * 2);
    let mut s = ItemSet::EMPTY;
    for (e, &p) in x.coords().iter().enumerate() {
        let u = unit(rng.next_u64());
        if Some(e) != skip && u < p {
            s = s.with(e);
        }
    }
    s
}

fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `⌈(10/δ²)(1 + ln m)⌉`.
///
/// A relative slack of `1e-12` absorbs representation error in `δ`, so
/// `δ = 1/9, m = 1` yields 810 rather than 811.
pub fn paper_sample_count(delta: f64, m: usize) -> Result<u64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::input(format!("delta {delta} outside (0, 1]")));
    }
    if m == 0 {
        return Err(Error::input("sample count needs m ≥ 1"));
    }
    let raw = 10.0 / (delta * delta) * (1.0 + (m as f64).ln());
    Ok((raw * (1.0 - 1e-12)).ceil() as u64)
}

/// Evaluator for `F` and its marginal weights on one instance.
pub struct Multilinear<'a> {
    instance: &'a Instance,
    table: Option<Vec<f64>>,
}

impl<'a> Multilinear<'a> {
    /// Exact evaluator; tabulates `f(S)` for every subset.
    pub fn new(instance: &'a Instance) -> Result<Self> {
        Self::with_cap(instance, DEFAULT_EXACT_CAP)
    }

    pub fn with_cap(instance: &'a Instance, cap: usize) -> Result<Self> {
        Error::check_cap("item count for exact multilinear evaluation", instance.m(), cap)?;
        let table = ItemSet::full(instance.m())
            .subsets()
            .map(|s| instance.expected_set_value(s))
            .collect();
        Ok(Multilinear {
            instance,
            table: Some(table),
        })
    }

    /// Sampling-only evaluator; exact methods return a capacity error.
    pub fn sampled(instance: &'a Instance) -> Self {
        Multilinear {
            instance,
            table: None,
        }
    }

    pub fn instance(&self) -> &Instance {
        self.instance
    }

    pub fn is_exact(&self) -> bool {
        self.table.is_some()
    }

    /// `f(S)`, from the table when available.
    pub fn set_value(&self, s: ItemSet) -> f64 {
        match &self.table {
            Some(t) => t[s.bits() as usize],
            None => self.instance.expected_set_value(s),
        }
    }

    fn table(&self) -> Result<&[f64]> {
        self.table.as_deref().ok_or_else(|| {
            Error::capacity(
                "item count for exact multilinear evaluation",
                self.instance.m(),
                DEFAULT_EXACT_CAP,
            )
        })
    }

    fn check_point(&self, x: &FractionalPoint) -> Result<()> {
        if x.len() != self.instance.m() {
            return Err(Error::input(format!(
                "point has {} coordinates, instance has {} items",
                x.len(),
                self.instance.m()
            )));
        }
        Ok(())
    }

    fn check_item(&self, e: usize) -> Result<()> {
        if e >= self.instance.m() {
            return Err(Error::input(format!("item index {e} out of range")));
        }
        Ok(())
    }

    /// `F(x)` exactly.
    pub fn value(&self, x: &FractionalPoint) -> Result<f64> {
        self.check_point(x)?;
        Ok(extend(self.table()?.to_vec(), x))
    }

    /// `F_x(e) = F(x ∨ 1_e) − F(x)`.
    pub fn standard_weight(&self, x: &FractionalPoint, e: usize) -> Result<f64> {
        self.check_item(e)?;
        Ok(self.value(&x.raise(e))? - self.value(x)?)
    }

    /// `F_{x\e}(e) = E[f(R_ē ∪ {e})] − E[f(R_ē)]` with `R_ē ∼ x \ e`.
    pub fn optimistic_weight(&self, x: &FractionalPoint, e: usize) -> Result<f64> {
        self.check_item(e)?;
        self.standard_weight(&x.zero_out(e), e)
    }

    /// `F_x(φ_e) = E_R[E_Φ[f(Φ_R ∪ φ_e)] − f(R)]`.
    pub fn state_weight(&self, x: &FractionalPoint, e: usize, state: usize) -> Result<f64> {
        self.check_point(x)?;
        self.check_item(e)?;
        if state >= self.instance.n_states() {
            return Err(Error::input(format!("state index {state} out of range")));
        }
        let table = self.table()?;
        let dist = self.instance.distribution();
        let gains: Vec<f64> = ItemSet::full(self.instance.m())
            .subsets()
            .zip(table)
            .map(|(s, base)| {
                let with: f64 = dist
                    .weighted()
                    .map(|(phi, w)| w * self.instance.value(phi.pairs(s).chain([(e, state)])))
                    .sum();
                with - base
            })
            .collect();
        Ok(extend(gains, x))
    }

    /// Monte-Carlo `F(x)` from `n` independent draws of `R ∼ x`.
    pub fn estimate(&self, x: &FractionalPoint, n: usize, seed: u64) -> Result<Estimate> {
        self.estimate_keyed(x, n, SampleKey::new(seed))
    }

    pub fn estimate_keyed(&self, x: &FractionalPoint, n: usize, key: SampleKey) -> Result<Estimate> {
        self.check_point(x)?;
        check_samples(n)?;
        let values: Vec<f64> = (0..n as u64)
            .map(|i| self.set_value(draw_set(x, key, i, None)))
            .collect();
        Ok(Estimate::from_samples(&values, key.seed))
    }

    /// Paired Monte-Carlo estimate of the optimistic weight: each sample uses
    /// one draw `R_ē ∼ x \ e` for both `f(R_ē ∪ {e})` and `f(R_ē)`.
    pub fn optimistic_weight_estimate(&self, x: &FractionalPoint, e: usize, n: usize, seed: u64) -> Result<Estimate> {
        let key = SampleKey {
            seed,
            round: 0,
            item: Some(e),
        };
        self.optimistic_weight_estimate_keyed(x, e, n, key)
    }

    pub fn optimistic_weight_estimate_keyed(
        &self,
        x: &FractionalPoint,
        e: usize,
        n: usize,
        key: SampleKey,
    ) -> Result<Estimate> {
        self.check_point(x)?;
        self.check_item(e)?;
        check_samples(n)?;
        let values: Vec<f64> = (0..n as u64)
            .map(|i| {
                let r = draw_set(x, key, i, Some(e));
                self.set_value(r.with(e)) - self.set_value(r)
            })
            .collect();
        Ok(Estimate::from_samples(&values, key.seed))
    }

    /// Paired estimate of the standard weight `E[f(R ∪ {e})] − E[f(R)]`, `R ∼ x`.
    pub fn standard_weight_estimate_keyed(
        &self,
        x: &FractionalPoint,
        e: usize,
        n: usize,
        key: SampleKey,
    ) -> Result<Estimate> {
        self.check_point(x)?;
        self.check_item(e)?;
        check_samples(n)?;
        let values: Vec<f64> = (0..n as u64)
            .map(|i| {
                let r = draw_set(x, key, i, None);
                self.set_value(r.with(e)) - self.set_value(r)
            })
            .collect();
        Ok(Estimate::from_samples(&values, key.seed))
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::input("sample count must be at least 1"))
    } else {
        Ok(())
    }
}

/// Folds a subset-indexed table into `Σ_S v[S] Π x Π (1 − x)`, one
/// coordinate at a time.
fn extend(mut v: Vec<f64>, x: &FractionalPoint) -> f64 {
    for (e, &p) in x.coords().iter().enumerate() {
        let stride = 1usize << e;
        let q = 1.0 - p;
        for base in (0..v.len()).filter(|b| b & stride == 0) {
            v[base] = q * v[base] + p * v[base | stride];
        }
    }
    v[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators::{common_cause2, random_product, CoverageSpec};

    fn brute_force_f(inst: &Instance, x: &FractionalPoint) -> f64 {
        // direct double enumeration over (S, φ)
        let mut total = 0.0;
        for s in ItemSet::full(inst.m()).subsets() {
            let mut weight = 1.0;
            for e in 0..inst.m() {
                weight *= if s.contains(e) { x.get(e) } else { 1.0 - x.get(e) };
            }
            for (phi, p) in inst.distribution().weighted() {
                total += weight * p * inst.value(phi.pairs(s));
            }
        }
        total
    }

    #[test]
    fn extension_at_corners() {
        let inst = common_cause2();
        let ml = Multilinear::new(&inst).unwrap();
        assert_eq!(ml.value(&FractionalPoint::zeros(2)).unwrap(), inst.expected_set_value(ItemSet::EMPTY));
        for s in ItemSet::full(2).subsets() {
            assert_eq!(ml.value(&FractionalPoint::indicator(2, s)).unwrap(), inst.expected_set_value(s));
        }
    }

    #[test]
    fn extension_matches_double_enumeration() {
        let inst = random_product(3, 2, 5, &CoverageSpec::default());
        let ml = Multilinear::new(&inst).unwrap();
        let x = FractionalPoint::new(vec![0.2, 0.7, 0.45]).unwrap();
        assert!((ml.value(&x).unwrap() - brute_force_f(&inst, &x)).abs() < 1e-12);
    }

    #[test]
    fn modular_extension_is_linear() {
        // deterministic single-state items with disjoint coverage
        let inst = crate::harness::generators::modular_instance(&[5.0, 3.0, 1.0]);
        let ml = Multilinear::new(&inst).unwrap();
        let x = FractionalPoint::new(vec![0.5, 0.25, 1.0]).unwrap();
        assert!((ml.value(&x).unwrap() - (2.5 + 0.75 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn weights_at_edges() {
        let inst = common_cause2();
        let ml = Multilinear::new(&inst).unwrap();
        let zero = FractionalPoint::zeros(2);
        let single = inst.expected_set_value(ItemSet::singleton(0)) - inst.expected_set_value(ItemSet::EMPTY);
        assert_eq!(ml.standard_weight(&zero, 0).unwrap(), single);
        assert_eq!(ml.optimistic_weight(&zero, 0).unwrap(), single);
        let only_a = FractionalPoint::indicator(2, ItemSet::singleton(0));
        assert_eq!(ml.standard_weight(&only_a, 0).unwrap(), 0.0);
        assert_eq!(ml.optimistic_weight(&only_a, 0).unwrap(), single);
    }

    #[test]
    fn state_weight_enumeration() {
        let inst = common_cause2();
        let ml = Multilinear::new(&inst).unwrap();
        assert_eq!(
            ml.state_weight(&FractionalPoint::zeros(2), 1, 0).unwrap(),
            inst.evaluate(&[("b", "good")]).unwrap()
        );
        let only_a = FractionalPoint::indicator(2, ItemSet::singleton(0));
        assert!((ml.state_weight(&only_a, 1, 0).unwrap() - inst.state_marginal(ItemSet::singleton(0), 1, 0).unwrap()).abs() < 1e-15);
        // x = (1/2, 0): brute force over R ∈ {∅, {a}} and φ
        let x = FractionalPoint::new(vec![0.5, 0.0]).unwrap();
        let mut expect = 0.0;
        for (r, pr) in [(ItemSet::EMPTY, 0.5), (ItemSet::singleton(0), 0.5)] {
            for (phi, p) in inst.distribution().weighted() {
                let base = inst.value(phi.pairs(r));
                let with = inst.value(phi.pairs(r).chain([(1, 0)]));
                expect += pr * p * (with - base);
            }
        }
        assert!((ml.state_weight(&x, 1, 0).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn deterministic_points_have_zero_error() {
        let inst = common_cause2();
        let ml = Multilinear::new(&inst).unwrap();
        let s = ItemSet::singleton(1);
        for seed in 0..5 {
            let est = ml.estimate(&FractionalPoint::indicator(2, s), 17, seed).unwrap();
            assert_eq!(est.mean, inst.expected_set_value(s));
            assert_eq!(est.std_error, 0.0);
            let w = ml
                .optimistic_weight_estimate(&FractionalPoint::indicator(2, ItemSet::full(2)), 0, 9, seed)
                .unwrap();
            assert_eq!(w.mean, ml.optimistic_weight(&FractionalPoint::indicator(2, ItemSet::full(2)), 0).unwrap());
            assert_eq!(w.std_error, 0.0);
        }
        let zero = ml.estimate(&FractionalPoint::zeros(2), 3, 1).unwrap();
        assert_eq!(zero.mean, 0.0);
        assert_eq!(zero.std_error, 0.0);
    }

    #[test]
    fn estimates_are_reproducible_and_partitionable() {
        let inst = random_product(4, 2, 11, &CoverageSpec::default());
        let ml = Multilinear::new(&inst).unwrap();
        let x = FractionalPoint::constant(4, 0.5).unwrap();
        let a = ml.estimate(&x, 64, 42).unwrap();
        let b = ml.estimate(&x, 64, 42).unwrap();
        assert_eq!(a, b);
        let key = SampleKey::new(42);
        let serial: Vec<ItemSet> = (0..64).map(|i| draw_set(&x, key, i, None)).collect();
        let reversed: Vec<ItemSet> = (0..64).rev().map(|i| draw_set(&x, key, i, None)).collect();
        assert_eq!(serial, reversed.into_iter().rev().collect::<Vec<_>>());
    }

    #[test]
    fn estimates_track_exact_values() {
        let inst = random_product(4, 2, 3, &CoverageSpec::default());
        let ml = Multilinear::new(&inst).unwrap();
        let x = FractionalPoint::new(vec![0.3, 0.6, 0.5, 0.9]).unwrap();
        let exact = ml.value(&x).unwrap();
        let mut misses = 0;
        for seed in 0..100 {
            let est = ml.estimate(&x, 200, seed).unwrap();
            if (est.mean - exact).abs() > 4.0 * est.std_error {
                misses += 1;
            }
        }
        assert!(misses <= 2, "{misses} of 100 estimates outside 4 standard errors");
        let w_exact = ml.optimistic_weight(&x, 2).unwrap();
        let mut misses = 0;
        for seed in 0..100 {
            let est = ml.optimistic_weight_estimate(&x, 2, 200, seed).unwrap();
            if (est.mean - w_exact).abs() > 4.0 * est.std_error + 1e-12 {
                misses += 1;
            }
        }
        assert!(misses <= 2, "{misses} of 100 weight estimates outside 4 standard errors");
    }

    #[test]
    fn sample_count_formula() {
        assert_eq!(paper_sample_count(1.0, 1).unwrap(), 10);
        assert_eq!(paper_sample_count(1.0 / 9.0, 1).unwrap(), 810);
        // δ = 1/(9m²) at m = 2: ⌈12960 (1 + ln 2)⌉ = ⌈21943.187…⌉
        assert_eq!(paper_sample_count(1.0 / 36.0, 2).unwrap(), 21944);
        assert_eq!(paper_sample_count(0.1, 4).unwrap(), 2387);
        assert!(paper_sample_count(0.0, 1).is_err());
        assert!(paper_sample_count(0.5, 0).is_err());
    }

    #[test]
    fn capacity_and_shape_errors() {
        let inst = random_product(4, 2, 1, &CoverageSpec::default());
        assert!(matches!(Multilinear::with_cap(&inst, 3), Err(Error::Capacity { .. })));
        let sampled = Multilinear::sampled(&inst);
        assert!(matches!(sampled.value(&FractionalPoint::zeros(4)), Err(Error::Capacity { .. })));
        assert!(sampled.estimate(&FractionalPoint::zeros(4), 4, 0).is_ok());
        let ml = Multilinear::new(&inst).unwrap();
        assert!(ml.value(&FractionalPoint::zeros(3)).is_err());
        assert!(ml.estimate(&FractionalPoint::zeros(4), 0, 0).is_err());
        assert!(FractionalPoint::new(vec![1.5]).is_err());
    }
}
