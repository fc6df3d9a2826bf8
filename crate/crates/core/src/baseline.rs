//! Fixed-coefficient logistic baseline and predictive-value evaluation.

use std::fmt::Write as _;

use serde::{Serialize, Serializer};

use crate::dataset::{Case, Dataset, Hypothesis};
use crate::error::{Error, Result};
use crate::evidence::logistic;
use crate::schema::Schema;

/// `Y = β₀ + β_a2·A2 + β_pulse·ln(pulse) + β_dist·distension`, `p = e^Y/(1+e^Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coef_a2: f64,
    pub coef_ln_pulse: f64,
    pub coef_distension: f64,
}

impl Default for LogisticModel {
    /// The fixed-coefficient surgical-lesion model.
    fn default() -> Self {
        Self {
            intercept: 7.86,
            coef_a2: -1.73,
            coef_ln_pulse: -1.54,
            coef_distension: -0.498,
        }
    }
}

impl LogisticModel {
    /// Returns `(Y, p)`.
    pub fn score(&self, a2: bool, pulse: f64, distension: f64) -> Result<(f64, f64)> {
        if !(pulse > 0.0 && pulse.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "pulse must be positive, got {pulse}"
            )));
        }
        let y = self.intercept
            + self.coef_a2 * f64::from(u8::from(a2))
            + self.coef_ln_pulse * pulse.ln()
            + self.coef_distension * distension;
        Ok((y, logistic(y)))
    }
}

/// Where the baseline's three inputs come from in a case.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticInputs {
    pub a2_attribute: String,
    /// Values of `a2_attribute` that set A2 = 1.
    pub a2_values: Vec<String>,
    pub pulse_attribute: String,
    pub distension_attribute: String,
    /// Ordinal code of each distension value.
    pub distension_codes: Vec<(String, f64)>,
}

impl LogisticInputs {
    /// Mapping for the bundled colic schema: A2 marks firm feces or a
    /// distended large intestine; distension is coded 1 (none) … 4 (severe),
    /// so moderate distension scores 3.
    pub fn colic() -> Self {
        Self {
            a2_attribute: "abdomen".into(),
            a2_values: vec!["firm_feces".into(), "distended_large_intestine".into()],
            pulse_attribute: "pulse".into(),
            distension_attribute: "abdominal_distension".into(),
            distension_codes: ["none", "slight", "moderate", "severe"]
                .iter()
                .enumerate()
                .map(|(i, v)| (v.to_string(), (i + 1) as f64))
                .collect(),
        }
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        let a2 = schema
            .attribute(&self.a2_attribute)
            .ok_or_else(|| Error::UnknownAttribute(self.a2_attribute.clone()))?;
        let a2_values = a2.categorical_values().ok_or_else(|| {
            Error::InvalidArgument(format!("`{}` must be categorical", self.a2_attribute))
        })?;
        if let Some(v) = self.a2_values.iter().find(|v| !a2_values.contains(v)) {
            return Err(Error::InvalidArgument(format!(
                "`{v}` is not a value of `{}`",
                a2.name
            )));
        }
        let pulse = schema
            .attribute(&self.pulse_attribute)
            .ok_or_else(|| Error::UnknownAttribute(self.pulse_attribute.clone()))?;
        if !pulse.is_continuous() {
            return Err(Error::InvalidArgument(format!(
                "`{}` must be continuous",
                pulse.name
            )));
        }
        let dist = schema
            .attribute(&self.distension_attribute)
            .ok_or_else(|| Error::UnknownAttribute(self.distension_attribute.clone()))?;
        let dist_values = dist.categorical_values().ok_or_else(|| {
            Error::InvalidArgument(format!("`{}` must be categorical", dist.name))
        })?;
        if let Some(v) = dist_values
            .iter()
            .find(|v| !self.distension_codes.iter().any(|(c, _)| c == *v))
        {
            return Err(Error::InvalidArgument(format!(
                "no distension code for `{v}`"
            )));
        }
        Ok(())
    }

    /// `(a2, pulse, distension)` when all three are observed.
    pub fn extract(&self, case: &Case, schema: &Schema) -> Option<(bool, f64, f64)> {
        let a2 = case
            .value(schema.index_of(&self.a2_attribute)?)?
            .as_label()?;
        let pulse = case
            .value(schema.index_of(&self.pulse_attribute)?)?
            .as_number()?;
        let dist = case
            .value(schema.index_of(&self.distension_attribute)?)?
            .as_label()?;
        let code = self
            .distension_codes
            .iter()
            .find(|(v, _)| v == dist)
            .map(|(_, c)| *c)?;
        Some((self.a2_values.iter().any(|v| v == a2), pulse, code))
    }
}

/// Confusion counts. Rates with a zero denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    pub n_unscored: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    pub fn npv(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fn_)
    }

    pub fn ppv(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn scored(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl Serialize for Metrics {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Metrics", 9)?;
        st.serialize_field("tp", &self.tp)?;
        st.serialize_field("fp", &self.fp)?;
        st.serialize_field("tn", &self.tn)?;
        st.serialize_field("fn", &self.fn_)?;
        st.serialize_field("n_unscored", &self.n_unscored)?;
        st.serialize_field("npv", &self.npv())?;
        st.serialize_field("ppv", &self.ppv())?;
        st.serialize_field("sensitivity", &self.sensitivity())?;
        st.serialize_field("specificity", &self.specificity())?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub case_id: String,
    pub label: Option<bool>,
    pub probability: Option<f64>,
    pub predicted: Option<bool>,
}

/// Scores every case and tallies the confusion matrix. A case is unscored
/// when the predictor returns `None` or its hypothesis label is missing.
pub fn evaluate_detailed<F>(
    predictor: F,
    dataset: &Dataset,
    threshold: f64,
    hypothesis: Hypothesis,
) -> Result<(Metrics, Vec<Prediction>)>
where
    F: Fn(&Case) -> Option<f64>,
{
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    let mut m = Metrics::default();
    let mut predictions = Vec::with_capacity(dataset.len());
    for case in dataset.cases() {
        let label = hypothesis.label(case);
        let probability = predictor(case);
        let predicted = probability.map(|p| p >= threshold);
        match (predicted, label) {
            (Some(true), Some(true)) => m.tp += 1,
            (Some(true), Some(false)) => m.fp += 1,
            (Some(false), Some(false)) => m.tn += 1,
            (Some(false), Some(true)) => m.fn_ += 1,
            _ => m.n_unscored += 1,
        }
        predictions.push(Prediction {
            case_id: case.id.clone(),
            label,
            probability,
            predicted,
        });
    }
    if m.scored() == 0 {
        return Err(Error::Evaluation("no scorable cases".into()));
    }
    Ok((m, predictions))
}

pub fn evaluate<F>(
    predictor: F,
    dataset: &Dataset,
    threshold: f64,
    hypothesis: Hypothesis,
) -> Result<Metrics>
where
    F: Fn(&Case) -> Option<f64>,
{
    evaluate_detailed(predictor, dataset, threshold, hypothesis).map(|(m, _)| m)
}

fn percent(rate: Option<f64>) -> String {
    rate.map_or_else(|| "n/a".to_string(), |r| format!("{:.1}%", 100.0 * r))
}

/// Predictive-value table, one row per method.
pub fn render_comparison(n_cases: usize, rows: &[(&str, Metrics)]) -> String {
    let name_width = rows
        .iter()
        .map(|(n, _)| n.len())
        .max()
        .unwrap_or(0)
        .max("Method".len());
    let mut out = String::new();
    let _ = writeln!(out, "Comparison of Predictive Power ({n_cases} Cases)");
    let _ = writeln!(
        out,
        "{:<name_width$}  {:>25}  {:>25}  {:>11}  {:>11}  {:>6}  {:>8}",
        "Method",
        "Negative Predictive Value",
        "Positive Predictive Value",
        "Sensitivity",
        "Specificity",
        "Scored",
        "Unscored"
    );
    for (name, m) in rows {
        let _ = writeln!(
            out,
            "{:<name_width$}  {:>25}  {:>25}  {:>11}  {:>11}  {:>6}  {:>8}",
            name,
            percent(m.npv()),
            percent(m.ppv()),
            percent(m.sensitivity()),
            percent(m.specificity()),
            m.scored(),
            m.n_unscored
        );
    }
    out
}
