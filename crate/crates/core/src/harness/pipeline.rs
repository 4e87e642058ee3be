//! End-to-end runs: independence degrees, continuous greedy, rounding and the
//! exact oracles, compared through the bound flags.

use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::report::{Flag, Report, Row};
use super::scenario::{ExperimentKind, Scenario};
use crate::constraints::{alpha_for, Constraint};
use crate::error::Result;
use crate::greedy::{lower_bound_certificate, run_with, WeightMode};
use crate::independence::{
    adaptivity_gap_bound, gamma, kappa, kappa_with, ratio_bound, virtual_factor, KappaVariant,
    DEFAULT_INDEPENDENCE_CAP,
};
use crate::model::prob::format_prob;
use crate::multilinear::{Estimate, FractionalPoint, Multilinear};
use crate::policies::{
    best_nonadaptive, optimal_adaptive, optimal_upper_bound_check, virtual_nonadaptive_value, Policy,
    UpperBoundCheck,
};
use crate::rounding::pipage_round;

/// Absolute slack on exact-mode comparisons.
pub const EXACT_TOL: f64 = 1e-9;
/// Standard errors of slack on Monte-Carlo comparisons.
pub const SE_SLACK: f64 = 4.0;

/// Seed of rounding trial `i` under scenario seed `base`.
pub fn rounding_seed(base: u64, i: u64) -> u64 {
    base.rotate_left(32) ^ i
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingSummary {
    pub estimate: Estimate,
    pub infeasible: u64,
}

/// Rounds `y` under `trials` seeds and averages `f` over the results.
pub fn rounding_trial(
    ml: &Multilinear,
    constraint: &Constraint,
    y: &FractionalPoint,
    trials: u64,
    base_seed: u64,
) -> Result<RoundingSummary> {
    let mut values = Vec::with_capacity(trials as usize);
    let mut infeasible = 0;
    for i in 0..trials.max(1) {
        let s = pipage_round(constraint, y, rounding_seed(base_seed, i))?;
        infeasible += u64::from(!constraint.is_feasible(s));
        values.push(ml.set_value(s));
    }
    Ok(RoundingSummary {
        estimate: Estimate::from_samples(&values, base_seed),
        infeasible,
    })
}

/// Evaluates the optimal-policy upper bound at `n` seeded points of `[0,1]^m`.
pub fn upper_bound_sweep(
    ml: &Multilinear,
    policy: &Policy,
    kappa: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<UpperBoundCheck>> {
    let m = ml.instance().m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = FractionalPoint::new((0..m).map(|_| rng.random::<f64>()).collect())?;
            optimal_upper_bound_check(ml, policy, &x, kappa)
        })
        .collect()
}

/// `Vacuous` when the bound is non-positive, otherwise `value ≥ bound·opt − slack`.
fn bound_flag(value: f64, bound: f64, opt: f64, slack: f64) -> Flag {
    if bound <= 0.0 {
        Flag::Vacuous
    } else {
        Flag::check(value >= bound * opt - slack)
    }
}

pub fn run_pipeline(scenario: &Scenario, base: &Path) -> Row {
    let mut row = Row::new(&scenario.name, scenario.kind);
    if let Err(e) = fill(&mut row, scenario, base) {
        row.error = Some(e.to_string());
    }
    row
}

pub fn run_suite(scenarios: &[Scenario], base: &Path) -> Report {
    Report {
        rows: scenarios.iter().map(|s| run_pipeline(s, base)).collect(),
    }
}

fn fill(row: &mut Row, scenario: &Scenario, base: &Path) -> Result<()> {
    let (instance, constraint) = scenario.resolve(base)?;
    let kind = scenario.kind;
    row.m = Some(instance.m());
    row.support = Some(instance.distribution().support().len());
    let mut details = serde_json::Map::new();

    let k = kappa(&instance)?;
    row.kappa_raw = Some(format_prob(&k.value));
    row.kappa = Some(k.clamped_f64());
    details.insert("kappa".into(), k.to_json(&instance));
    if kind == ExperimentKind::IndependenceProfile {
        let kc = kappa_with(&instance, KappaVariant::Conditioned, DEFAULT_INDEPENDENCE_CAP)?;
        row.kappa_conditioned = Some(kc.clamped_f64());
        details.insert("kappa_conditioned".into(), kc.to_json(&instance));
    }
    let g = if kind == ExperimentKind::Certificate {
        None
    } else {
        let g = gamma(&instance)?;
        row.gamma_raw = Some(format_prob(&g.value));
        row.gamma = Some(g.clamped_f64());
        details.insert("gamma".into(), g.to_json(&instance));
        Some(g.clamped_f64())
    };
    row.details = Some(details.clone().into());
    if kind == ExperimentKind::IndependenceProfile {
        return Ok(());
    }

    let ml = Multilinear::new(&instance)?;
    let opt = optimal_adaptive(&instance, &constraint)?;
    row.opt_adaptive = Some(opt.value);
    details.insert("optimal_policy".into(), opt.policy.to_json(&instance));
    row.details = Some(details.clone().into());

    if let Some(gamma) = g {
        let (best_set, best) = best_nonadaptive(&instance, &constraint)?;
        row.best_nonadaptive = Some(best);
        row.gap_ratio = (best > 0.0).then(|| opt.value / best);
        row.gap_bound = adaptivity_gap_bound(gamma).ok();
        let virt = virtual_nonadaptive_value(&instance, &opt.policy)?;
        row.virtual_value = Some(virt);
        row.virtual_flag = Some(Flag::check(virt >= virtual_factor(gamma) * opt.value - EXACT_TOL));
        details.insert(
            "best_nonadaptive_set".into(),
            json!(best_set.iter().map(|e| instance.items()[e].clone()).collect::<Vec<_>>()),
        );
        row.details = Some(details.clone().into());
    }
    if kind == ExperimentKind::AdaptivityGap {
        return Ok(());
    }

    let kappa = k.clamped_f64();
    let config = scenario.greedy.config(scenario.seed)?;
    let trajectory = run_with(&ml, &constraint, &config)?;
    let y1 = &trajectory.final_point;
    let f_y1 = ml.value(y1)?;
    row.f_y1 = Some(f_y1);
    let inner = ratio_bound(kappa, instance.m(), 1.0).ok();
    row.inner_bound = inner;
    row.inner_flag = Some(match inner {
        Some(b) => bound_flag(f_y1, b, opt.value, EXACT_TOL),
        None => Flag::Vacuous,
    });

    if kind == ExperimentKind::Certificate {
        let exact = config.weight_mode == WeightMode::Exact;
        if kappa > 0.0 {
            let cert = lower_bound_certificate(&ml, &trajectory, opt.value, kappa)?;
            row.certificate_violations = Some(cert.violations);
            row.certificate_flag = exact.then(|| Flag::check(cert.violations == 0));
            let sweep = upper_bound_sweep(&ml, &opt.policy, kappa, scenario.sweep_points.unwrap_or(50), scenario.seed)?;
            let bad = sweep.iter().filter(|c| !c.holds).count();
            row.sweep_violations = Some(bad);
            row.sweep_flag = Some(Flag::check(bad == 0));
        } else {
            row.certificate_flag = Some(Flag::Vacuous);
            row.sweep_flag = Some(Flag::Vacuous);
        }
        return Ok(());
    }

    let alpha = alpha_for(&constraint, scenario.alpha)?;
    row.alpha = Some(alpha);
    let ratio = ratio_bound(kappa, instance.m(), alpha).ok();
    row.ratio_bound = ratio;
    if constraint.is_matroid() {
        let summary = rounding_trial(&ml, &constraint, y1, scenario.rounding_seeds, scenario.seed)?;
        let (mean, se) = (summary.estimate.mean, summary.estimate.std_error);
        row.rounded_mean = Some(mean);
        row.rounded_se = Some(se);
        row.rounded_infeasible = Some(summary.infeasible);
        let slack = SE_SLACK * se + EXACT_TOL;
        row.rounding_flag = Some(Flag::check(summary.infeasible == 0 && mean >= f_y1 - slack));
        row.ratio_flag = Some(match ratio {
            Some(b) => bound_flag(mean, b, opt.value, slack),
            None => Flag::Vacuous,
        });
    }
    Ok(())
}
