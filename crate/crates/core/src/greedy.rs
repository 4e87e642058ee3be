//! Optimistic continuous greedy over a constraint polytope.

use std::fmt::Write as _;

use crate::constraints::{Constraint, LpSolution};
use crate::error::{Error, Result};
use crate::model::Instance;
use crate::multilinear::{paper_sample_count, FractionalPoint, Multilinear, SampleKey};

/// Grid positions closer than this to an integer count as integral.
const GRID_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightVariant {
    /// `F_{y\e}(e)`: the marginal of `e` with its own coordinate zeroed.
    Optimistic,
    /// `F_y(e)`: the classic continuous-greedy weight.
    Standard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleCount {
    Fixed(usize),
    /// `⌈(10/δ²)(1 + ln m)⌉` samples per weight.
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    Exact,
    Sampled(SampleCount),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreedyConfig {
    pub delta: f64,
    pub weight_mode: WeightMode,
    pub seed: u64,
    pub variant: WeightVariant,
}

impl GreedyConfig {
    pub fn exact(delta: f64) -> Self {
        GreedyConfig {
            delta,
            weight_mode: WeightMode::Exact,
            seed: 0,
            variant: WeightVariant::Optimistic,
        }
    }

    /// Exact weights with `δ = 0.05`.
    pub fn desk() -> Self {
        Self::exact(0.05)
    }

    /// `δ = 1/(9m²)` with the matching sample count.
    pub fn paper_faithful(m: usize, seed: u64) -> Self {
        GreedyConfig {
            delta: 1.0 / (9.0 * (m.max(1) * m.max(1)) as f64),
            weight_mode: WeightMode::Sampled(SampleCount::Paper),
            seed,
            variant: WeightVariant::Optimistic,
        }
    }

    pub fn rounds(&self) -> Result<usize> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Configuration(format!("delta {} outside (0, 1]", self.delta)));
        }
        Ok((1.0 / self.delta - GRID_TOL).ceil().max(1.0) as usize)
    }

    /// Step length of round `i`; the last round absorbs the remainder so the
    /// steps sum to one.
    pub fn step_size(&self, i: usize) -> Result<f64> {
        let n = self.rounds()?;
        if i >= n {
            return Err(Error::input(format!("round {i} beyond the {n}-round schedule")));
        }
        Ok(if i + 1 == n {
            1.0 - (n - 1) as f64 * self.delta
        } else {
            self.delta
        })
    }

    fn samples(&self, m: usize) -> Result<Option<usize>> {
        match self.weight_mode {
            WeightMode::Exact => Ok(None),
            WeightMode::Sampled(SampleCount::Fixed(n)) => Ok(Some(n)),
            WeightMode::Sampled(SampleCount::Paper) => Ok(Some(paper_sample_count(self.delta, m)? as usize)),
        }
    }
}

/// One round of the ascent.
#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    pub t: f64,
    pub step: f64,
    /// `y(t)` before the update.
    pub y: FractionalPoint,
    pub weights: Vec<f64>,
    pub lp: LpSolution,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub rounds: Vec<Round>,
    pub final_point: FractionalPoint,
}

impl Trajectory {
    /// Tab-separated rows `t, y_*, w_*, lp_objective, F`, one per round plus a
    /// closing row at `t = 1`. `F` is `NA` without an exact evaluator.
    pub fn to_tsv(&self, ml: &Multilinear) -> String {
        let items = ml.instance().items();
        let mut out = String::from("t");
        for prefix in ["y", "w"] {
            for name in items {
                write!(out, "\t{prefix}_{name}").unwrap();
            }
        }
        out.push_str("\tlp_objective\tF\n");
        let f = |y: &FractionalPoint| ml.value(y).map_or_else(|_| "NA".to_string(), |v| v.to_string());
        for r in &self.rounds {
            write!(out, "{}", r.t).unwrap();
            for v in r.y.coords().iter().chain(&r.weights) {
                write!(out, "\t{v}").unwrap();
            }
            writeln!(out, "\t{}\t{}", r.lp.objective, f(&r.y)).unwrap();
        }
        write!(out, "1").unwrap();
        for v in self.final_point.coords() {
            write!(out, "\t{v}").unwrap();
        }
        for _ in items {
            out.push_str("\tNA");
        }
        writeln!(out, "\tNA\t{}", f(&self.final_point)).unwrap();
        out
    }
}

/// Runs every round from `y(0) = 0`.
pub fn run(instance: &Instance, constraint: &Constraint, config: &GreedyConfig) -> Result<Trajectory> {
    let ml = evaluator(instance, config)?;
    run_with(&ml, constraint, config)
}

/// As [`run`], reusing an evaluator.
pub fn run_with(ml: &Multilinear, constraint: &Constraint, config: &GreedyConfig) -> Result<Trajectory> {
    let n = config.rounds()?;
    let mut y = FractionalPoint::zeros(ml.instance().m());
    let mut rounds = Vec::with_capacity(n);
    for i in 0..n {
        let (next, weights, lp) = round(ml, constraint, &y, i, config)?;
        rounds.push(Round {
            t: i as f64 * config.delta,
            step: config.step_size(i)?,
            y: std::mem::replace(&mut y, next),
            weights,
            lp,
        });
    }
    Ok(Trajectory {
        rounds,
        final_point: y,
    })
}

/// A single round starting at time `t`, which must lie on the grid.
pub fn step(
    instance: &Instance,
    constraint: &Constraint,
    y: &FractionalPoint,
    t: f64,
    config: &GreedyConfig,
) -> Result<(FractionalPoint, LpSolution)> {
    let n = config.rounds()?;
    let i = (t / config.delta).round();
    if !(i >= 0.0 && (i as usize) < n) || (i * config.delta - t).abs() > GRID_TOL {
        return Err(Error::input(format!("t = {t} is not a round start for delta {}", config.delta)));
    }
    let ml = evaluator(instance, config)?;
    let (next, _, lp) = round(&ml, constraint, y, i as usize, config)?;
    Ok((next, lp))
}

/// Exact table when the instance is small enough; sampled mode falls back to
/// direct evaluation otherwise.
fn evaluator<'a>(instance: &'a Instance, config: &GreedyConfig) -> Result<Multilinear<'a>> {
    match (Multilinear::new(instance), config.weight_mode) {
        (Ok(ml), _) => Ok(ml),
        (Err(_), WeightMode::Sampled(_)) => Ok(Multilinear::sampled(instance)),
        (Err(e), WeightMode::Exact) => Err(e),
    }
}

/// Per-item weights used in round `i` at point `y`.
pub fn round_weights(ml: &Multilinear, y: &FractionalPoint, i: usize, config: &GreedyConfig) -> Result<Vec<f64>> {
    let m = ml.instance().m();
    let samples = config.samples(m)?;
    (0..m)
        .map(|e| {
            let w = match (samples, config.variant) {
                (None, WeightVariant::Optimistic) => ml.optimistic_weight(y, e)?,
                (None, WeightVariant::Standard) => ml.standard_weight(y, e)?,
                (Some(n), variant) => {
                    let key = SampleKey {
                        seed: config.seed,
                        round: i as u64,
                        item: Some(e),
                    };
                    match variant {
                        WeightVariant::Optimistic => ml.optimistic_weight_estimate_keyed(y, e, n, key)?.mean,
                        WeightVariant::Standard => ml.standard_weight_estimate_keyed(y, e, n, key)?.mean,
                    }
                }
            };
            if !w.is_finite() {
                return Err(Error::Internal(format!("weight of item {e} in round {i} is {w}")));
            }
            Ok(w.max(0.0))
        })
        .collect()
}

fn round(
    ml: &Multilinear,
    constraint: &Constraint,
    y: &FractionalPoint,
    i: usize,
    config: &GreedyConfig,
) -> Result<(FractionalPoint, Vec<f64>, LpSolution)> {
    let step = config.step_size(i)?;
    let weights = round_weights(ml, y, i, config)?;
    let lp = constraint.lp_maximize(&weights)?;
    let mut next = y.clone();
    for (v, d) in next.coords_mut().iter_mut().zip(lp.point.coords()) {
        *v = (*v + step * d).min(1.0);
    }
    Ok((next, weights, lp))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateRound {
    pub t: f64,
    /// `F(y(t+δ)) − F(y(t))`.
    pub lhs: f64,
    /// `(1−t)δκ((1 − (κ+2)mδ/κ)·opt − F(y(t)))`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub rounds: Vec<CertificateRound>,
    pub violations: usize,
}

/// Evaluates the per-round progress inequality along an exact trajectory.
/// Violations are reported, not raised; they are expected for sampled runs.
pub fn lower_bound_certificate(
    ml: &Multilinear,
    trajectory: &Trajectory,
    optimal_value: f64,
    kappa: f64,
) -> Result<Certificate> {
    if kappa <= 0.0 {
        return Err(Error::DegenerateBound("kappa is zero; the per-round bound is undefined".into()));
    }
    let m = ml.instance().m() as f64;
    let mut rounds = Vec::with_capacity(trajectory.rounds.len());
    let mut values = Vec::with_capacity(trajectory.rounds.len() + 1);
    for r in &trajectory.rounds {
        values.push(ml.value(&r.y)?);
    }
    values.push(ml.value(&trajectory.final_point)?);
    for (k, r) in trajectory.rounds.iter().enumerate() {
        let d = r.step;
        let lhs = values[k + 1] - values[k];
        let rhs = (1.0 - r.t) * d * kappa * ((1.0 - (kappa + 2.0) * m * d / kappa) * optimal_value - values[k]);
        rounds.push(CertificateRound {
            t: r.t,
            lhs,
            rhs,
            holds: lhs >= rhs - 1e-9,
        });
    }
    let violations = rounds.iter().filter(|r| !r.holds).count();
    Ok(Certificate { rounds, violations })
}
