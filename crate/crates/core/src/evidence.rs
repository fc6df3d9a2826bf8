//! Weight of evidence on 2×2 tables and log-odds combination.
//!
//! For an event E and hypothesis H the weight is the natural log of the
//! likelihood ratio `p(E|H) / p(E|¬H)`. Weights add onto prior log odds:
//! `posterior = ln O(H) + Σ W(H:Eᵢ)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Hypothesis};
use crate::error::{Error, Result};
use crate::symptom::SymptomGroup;

pub const DEFAULT_SMOOTHING: f64 = 0.5;
pub const DEFAULT_Z_CRIT: f64 = 1.96;

/// Counts of `(E, H)` over the cases complete for a symptom group.
///
/// ```text
///          H    ¬H
///    E     a     c
///   ¬E     b     d
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
    pub n_excluded: u64,
}

impl ContingencyTable {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Self {
            a,
            b,
            c,
            d,
            n_excluded: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    /// Cases where the event holds.
    pub fn support(&self) -> u64 {
        self.a + self.c
    }

    /// Same counts with the hypothesis rows exchanged (H ↔ ¬H).
    pub fn swap_hypothesis(&self) -> Self {
        Self {
            a: self.c,
            b: self.d,
            c: self.a,
            d: self.b,
            n_excluded: self.n_excluded,
        }
    }
}

/// Tallies the group's table: a case counts toward E when every descriptor
/// holds for it. Cases missing any group attribute or the hypothesis label
/// are excluded.
pub fn build_table(
    dataset: &Dataset,
    group: &SymptomGroup,
    hypothesis: Hypothesis,
) -> Result<ContingencyTable> {
    let resolved = group.resolve(dataset.schema())?;
    let mut table = ContingencyTable::default();
    for case in dataset.cases() {
        let (Some(event), Some(h)) = (resolved.evaluate(case), hypothesis.label(case)) else {
            table.n_excluded += 1;
            continue;
        };
        match (event, h) {
            (true, true) => table.a += 1,
            (false, true) => table.b += 1,
            (true, false) => table.c += 1,
            (false, false) => table.d += 1,
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightEstimate {
    /// Natural-log weight of evidence.
    pub w: f64,
    pub se: f64,
    pub z: f64,
    pub smoothing: f64,
}

/// Weight of evidence with additive smoothing `s` on each E cell:
///
/// `w = ln[((a+s)/(a+b+2s)) / ((c+s)/(c+d+2s))]`
///
/// The standard error is the delta-method error of a log ratio of two
/// independent binomial proportions.
pub fn estimate_weight(table: &ContingencyTable, smoothing: f64) -> Result<WeightEstimate> {
    if !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "smoothing must be finite and non-negative, got {smoothing}"
        )));
    }
    let s = smoothing;
    if s == 0.0 && (table.a == 0 || table.c == 0) {
        return Err(Error::UndefinedWeight(format!(
            "zero E cell without smoothing (a={}, c={})",
            table.a, table.c
        )));
    }
    if table.total() == 0 {
        return Err(Error::UndefinedWeight("empty table".into()));
    }
    let a = table.a as f64 + s;
    let n_h = (table.a + table.b) as f64 + 2.0 * s;
    let c = table.c as f64 + s;
    let n_not_h = (table.c + table.d) as f64 + 2.0 * s;
    if n_h == 0.0 || n_not_h == 0.0 {
        return Err(Error::UndefinedWeight(
            "one hypothesis class is empty and smoothing is zero".into(),
        ));
    }

    let w = (a / n_h).ln() - (c / n_not_h).ln();
    let variance = (1.0 / a - 1.0 / n_h) + (1.0 / c - 1.0 / n_not_h);
    let se = variance.max(0.0).sqrt();
    let z = if se > 0.0 { w / se } else { 0.0 };
    Ok(WeightEstimate {
        w,
        se,
        z,
        smoothing: s,
    })
}

/// Two-sided z-test: `|z| ≥ z_crit`.
pub fn is_significant(estimate: &WeightEstimate, z_crit: f64) -> bool {
    estimate.z.abs() >= z_crit
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorOdds {
    pub prevalence: f64,
    pub log_odds: f64,
}

impl PriorOdds {
    pub fn from_prevalence(prevalence: f64) -> Result<Self> {
        if !(prevalence > 0.0 && prevalence < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "prevalence must lie strictly inside (0, 1), got {prevalence}"
            )));
        }
        Ok(Self {
            prevalence,
            log_odds: (prevalence / (1.0 - prevalence)).ln(),
        })
    }

    /// Prior given directly in log-odds units.
    pub fn from_log_odds(log_odds: f64) -> Result<Self> {
        if !log_odds.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite log odds {log_odds}"
            )));
        }
        Ok(Self {
            prevalence: logistic(log_odds),
            log_odds,
        })
    }
}

/// Sum of weights in canonical (ascending, total-order) sequence, so any
/// permutation of the input produces the same bits.
pub fn sum_weights(weights: &[f64]) -> f64 {
    let mut sorted = weights.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum()
}

/// Posterior log odds.
pub fn combine(prior: &PriorOdds, weights: &[f64]) -> f64 {
    prior.log_odds + sum_weights(weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbabilityMode {
    /// `p = e^L / (1 + e^L)`.
    #[default]
    Canonical,
    /// `p = L / (1 + L)`, treating the posterior value itself as odds.
    /// Reads the posterior log odds as odds, `p = L/(1+L)`; only defined for `L > 0`.
    OddsCompat,
}

impl fmt::Display for ProbabilityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProbabilityMode::Canonical => "canonical",
            ProbabilityMode::OddsCompat => "odds-compat",
        })
    }
}

impl FromStr for ProbabilityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(ProbabilityMode::Canonical),
            "odds-compat" => Ok(ProbabilityMode::OddsCompat),
            other => Err(Error::InvalidArgument(format!(
                "unknown probability mode `{other}`"
            ))),
        }
    }
}

pub fn to_probability(log_odds: f64, mode: ProbabilityMode) -> Result<f64> {
    match mode {
        ProbabilityMode::Canonical => Ok(logistic(log_odds)),
        ProbabilityMode::OddsCompat => {
            if log_odds > 0.0 {
                Ok(log_odds / (1.0 + log_odds))
            } else {
                Err(Error::InvalidArgument(format!(
                    "odds-compat probability needs a positive posterior, got {log_odds}"
                )))
            }
        }
    }
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
