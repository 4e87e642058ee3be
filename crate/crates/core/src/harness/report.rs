//! Report rows and their tabular and JSON renderings.

use std::fmt::Display;

use serde::Serialize;
use serde_json::Value;

use super::scenario::ExperimentKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    Pass,
    Fail,
    /// The bound is undefined or non-positive, so there is nothing to check.
    Vacuous,
}

impl Flag {
    pub fn check(holds: bool) -> Self {
        if holds {
            Flag::Pass
        } else {
            Flag::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Pass => "pass",
            Flag::Fail => "fail",
            Flag::Vacuous => "vacuous",
        }
    }
}

/// One scenario's results. Absent quantities render as `NA`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub scenario: String,
    pub kind: ExperimentKind,
    pub m: Option<usize>,
    pub support: Option<usize>,
    /// Exact unclamped values as `p/q`.
    pub kappa_raw: Option<String>,
    pub kappa: Option<f64>,
    pub kappa_conditioned: Option<f64>,
    pub gamma_raw: Option<String>,
    pub gamma: Option<f64>,
    pub opt_adaptive: Option<f64>,
    pub best_nonadaptive: Option<f64>,
    pub gap_ratio: Option<f64>,
    pub gap_bound: Option<f64>,
    pub virtual_value: Option<f64>,
    pub f_y1: Option<f64>,
    pub rounded_mean: Option<f64>,
    pub rounded_se: Option<f64>,
    pub rounded_infeasible: Option<u64>,
    pub inner_bound: Option<f64>,
    pub alpha: Option<f64>,
    pub ratio_bound: Option<f64>,
    pub certificate_violations: Option<usize>,
    pub sweep_violations: Option<usize>,
    pub inner_flag: Option<Flag>,
    pub rounding_flag: Option<Flag>,
    pub ratio_flag: Option<Flag>,
    pub virtual_flag: Option<Flag>,
    pub certificate_flag: Option<Flag>,
    pub sweep_flag: Option<Flag>,
    pub error: Option<String>,
    /// Witnesses and the optimal policy; JSON dump only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl Row {
    pub fn new(scenario: &str, kind: ExperimentKind) -> Self {
        Row {
            scenario: scenario.into(),
            kind,
            m: None,
            support: None,
            kappa_raw: None,
            kappa: None,
            kappa_conditioned: None,
            gamma_raw: None,
            gamma: None,
            opt_adaptive: None,
            best_nonadaptive: None,
            gap_ratio: None,
            gap_bound: None,
            virtual_value: None,
            f_y1: None,
            rounded_mean: None,
            rounded_se: None,
            rounded_infeasible: None,
            inner_bound: None,
            alpha: None,
            ratio_bound: None,
            certificate_violations: None,
            sweep_violations: None,
            inner_flag: None,
            rounding_flag: None,
            ratio_flag: None,
            virtual_flag: None,
            certificate_flag: None,
            sweep_flag: None,
            error: None,
            details: None,
        }
    }

    pub fn flags(&self) -> [(&'static str, Option<Flag>); 6] {
        [
            ("inner", self.inner_flag),
            ("rounding", self.rounding_flag),
            ("ratio", self.ratio_flag),
            ("virtual", self.virtual_flag),
            ("certificate", self.certificate_flag),
            ("sweep", self.sweep_flag),
        ]
    }

    /// A failed flag or an error.
    pub fn is_violation(&self) -> bool {
        self.error.is_some() || self.flags().iter().any(|(_, f)| *f == Some(Flag::Fail))
    }

    fn cells(&self) -> Vec<String> {
        fn na<T: Display>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(|| "NA".into(), ToString::to_string)
        }
        let mut cells = vec![
            self.scenario.clone(),
            self.kind.as_str().into(),
            na(&self.m),
            na(&self.support),
            na(&self.kappa_raw),
            na(&self.kappa),
            na(&self.kappa_conditioned),
            na(&self.gamma_raw),
            na(&self.gamma),
            na(&self.opt_adaptive),
            na(&self.best_nonadaptive),
            na(&self.gap_ratio),
            na(&self.gap_bound),
            na(&self.virtual_value),
            na(&self.f_y1),
            na(&self.rounded_mean),
            na(&self.rounded_se),
            na(&self.rounded_infeasible),
            na(&self.inner_bound),
            na(&self.alpha),
            na(&self.ratio_bound),
            na(&self.certificate_violations),
            na(&self.sweep_violations),
        ];
        cells.extend(self.flags().iter().map(|(_, f)| f.map_or("NA", Flag::as_str).to_string()));
        cells.push(self.error.as_deref().map_or_else(|| "NA".into(), |e| e.replace(['\t', '\n'], " ")));
        cells
    }
}

pub const COLUMNS: [&str; 30] = [
    "scenario",
    "kind",
    "m",
    "support",
    "kappa_raw",
    "kappa",
    "kappa_conditioned",
    "gamma_raw",
    "gamma",
    "opt_adaptive",
    "best_nonadaptive",
    "gap_ratio",
    "gap_bound",
    "virtual_value",
    "f_y1",
    "rounded_mean",
    "rounded_se",
    "rounded_infeasible",
    "inner_bound",
    "alpha",
    "ratio_bound",
    "certificate_violations",
    "sweep_violations",
    "inner_flag",
    "rounding_flag",
    "ratio_flag",
    "virtual_flag",
    "certificate_flag",
    "sweep_flag",
    "error",
];

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    pub rows: Vec<Row>,
}

impl Report {
    pub fn to_tsv(&self) -> String {
        let mut out = COLUMNS.join("\t");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.cells().join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.is_violation()).count()
    }
}
