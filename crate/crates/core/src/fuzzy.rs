//! Fuzzy clinical events and their α-level cuts.
//!
//! A continuous measurement such as pulse is graded into a linguistic label
//! ("very high") by a piecewise-linear membership function. The cut at α
//! keeps the cases whose grade is at least α; the α that makes the cut most
//! informative about the hypothesis turns the fuzzy event into a crisp one.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::dataset::{Dataset, Hypothesis};
use crate::error::{Error, Result};
use crate::evidence::{estimate_weight, ContingencyTable};

pub type CaseId = String;

const PROBABILITY_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipFunction {
    breakpoints: Vec<(f64, f64)>,
}

impl MembershipFunction {
    /// Breakpoints must be non-empty, strictly increasing in x, with grades in [0, 1].
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidArgument(
                "membership function needs a breakpoint".into(),
            ));
        }
        for &(x, mu) in &breakpoints {
            if !x.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite breakpoint x = {x}"
                )));
            }
            if !(0.0..=1.0).contains(&mu) {
                return Err(Error::InvalidArgument(format!("grade {mu} outside [0, 1]")));
            }
        }
        if breakpoints.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidArgument(
                "breakpoints must be strictly increasing in x".into(),
            ));
        }
        Ok(Self { breakpoints })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Grade of `x`: linear between breakpoints, clamped to the end grades.
    pub fn grade(&self, x: f64) -> f64 {
        let pts = &self.breakpoints;
        let (x0, mu0) = pts[0];
        let (xn, mun) = pts[pts.len() - 1];
        if x <= x0 {
            return mu0;
        }
        if x >= xn {
            return mun;
        }
        // first breakpoint strictly greater than x; exists because x < xn
        let hi = pts.partition_point(|&(bx, _)| bx <= x);
        let (xl, ml) = pts[hi - 1];
        let (xr, mr) = pts[hi];
        if x == xl {
            return ml;
        }
        let t = (x - xl) / (xr - xl);
        (ml + t * (mr - ml)).clamp(0.0, 1.0)
    }
}

/// Validated α values, strictly increasing within (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrid(Vec<f64>);

impl AlphaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty alpha grid".into()));
        }
        for &a in &values {
            check_alpha(a)?;
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "alpha grid must be strictly increasing".into(),
            ));
        }
        Ok(Self(values))
    }

    /// `step, 2·step, …` up to 1. When 1/step is an integer n the points are
    /// computed as k/n, so a step of 0.01 yields exactly 0.07 rather than
    /// 7 × 0.01.
    pub fn with_step(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha step must be in (0, 1], got {step}"
            )));
        }
        let n = 1.0 / step;
        let values = if (n - n.round()).abs() < 1e-9 {
            let n = n.round() as u32;
            (1..=n).map(|k| f64::from(k) / f64::from(n)).collect()
        } else {
            let n = n.floor() as u32;
            (1..=n).map(|k| f64::from(k) * step).collect()
        };
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self::with_step(0.01).expect("default step is valid")
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "alpha must be in (0, 1], got {alpha}"
        )))
    }
}

/// Membership grades of the cases that observed the attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyEvent {
    pub attribute: String,
    pub label: String,
    grades: BTreeMap<CaseId, f64>,
}

impl FuzzyEvent {
    pub fn new<A: Into<String>, L: Into<String>>(
        attribute: A,
        label: L,
        grades: BTreeMap<CaseId, f64>,
    ) -> Result<Self> {
        if let Some((id, g)) = grades.iter().find(|(_, g)| !(0.0..=1.0).contains(*g)) {
            return Err(Error::InvalidArgument(format!(
                "grade {g} for case `{id}` outside [0, 1]"
            )));
        }
        Ok(Self {
            attribute: attribute.into(),
            label: label.into(),
            grades,
        })
    }

    /// Grades every case of the dataset that observed `attribute`.
    pub fn from_dataset(dataset: &Dataset, attribute: &str, label: &str) -> Result<Self> {
        let schema = dataset.schema();
        let idx = schema.require(attribute)?;
        let attr = &schema.attributes()[idx];
        let fuzzy = attr.fuzzy_label(label).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "attribute `{attribute}` has no fuzzy label `{label}`"
            ))
        })?;
        let grades = dataset
            .cases()
            .iter()
            .filter_map(|case| {
                let x = case.value(idx)?.as_number()?;
                Some((case.id.clone(), fuzzy.membership.grade(x)))
            })
            .collect();
        Self::new(attribute, label, grades)
    }

    pub fn grades(&self) -> &BTreeMap<CaseId, f64> {
        &self.grades
    }

    pub fn name(&self) -> String {
        format!("{}:{}", self.attribute, self.label)
    }

    /// Equal probability on every graded case.
    pub fn uniform_probabilities(&self) -> BTreeMap<CaseId, f64> {
        let p = 1.0 / self.grades.len() as f64;
        self.grades.keys().map(|id| (id.clone(), p)).collect()
    }
}

/// Cases whose grade is at least α.
pub fn alpha_cut(event: &FuzzyEvent, alpha: f64) -> Result<BTreeSet<CaseId>> {
    check_alpha(alpha)?;
    Ok(event
        .grades
        .iter()
        .filter(|(_, &g)| g >= alpha)
        .map(|(id, _)| id.clone())
        .collect())
}

fn check_probabilities(event: &FuzzyEvent, probabilities: &BTreeMap<CaseId, f64>) -> Result<()> {
    if let Some((id, p)) = probabilities
        .iter()
        .find(|(_, p)| !(0.0..=1.0).contains(*p))
    {
        return Err(Error::InvalidArgument(format!(
            "probability {p} for case `{id}`"
        )));
    }
    let total: f64 = event
        .grades
        .keys()
        .map(|id| probabilities.get(id).copied().unwrap_or(0.0))
        .sum();
    if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
        return Err(Error::InvalidArgument(format!(
            "case probabilities sum to {total} over the event's cases, expected 1"
        )));
    }
    Ok(())
}

/// Expected membership grade, `Σ μ(x)·p(x)`.
pub fn zadeh_probability(event: &FuzzyEvent, probabilities: &BTreeMap<CaseId, f64>) -> Result<f64> {
    check_probabilities(event, probabilities)?;
    let p: f64 = event
        .grades
        .iter()
        .map(|(id, g)| g * probabilities.get(id).copied().unwrap_or(0.0))
        .sum();
    Ok(p.clamp(0.0, 1.0))
}

/// Crisp probability of each α-cut along the grid.
pub fn yager_probability(
    event: &FuzzyEvent,
    grid: &AlphaGrid,
    probabilities: &BTreeMap<CaseId, f64>,
) -> Result<Vec<(f64, f64)>> {
    check_probabilities(event, probabilities)?;
    // sort grades once; P(A_α) is the probability mass of the tail at or above α
    let mut by_grade: Vec<(f64, f64)> = event
        .grades
        .iter()
        .map(|(id, &g)| (g, probabilities.get(id).copied().unwrap_or(0.0)))
        .collect();
    by_grade.sort_by(|x, y| x.0.total_cmp(&y.0));
    // tail[i] = mass of by_grade[i..]; built from the top so it never decreases going down
    let mut tail = vec![0.0; by_grade.len() + 1];
    for i in (0..by_grade.len()).rev() {
        tail[i] = tail[i + 1] + by_grade[i].1;
    }
    Ok(grid
        .values()
        .iter()
        .map(|&alpha| {
            let start = by_grade.partition_point(|&(g, _)| g < alpha);
            (alpha, tail[start].clamp(0.0, 1.0))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaChoice {
    pub alpha: f64,
    pub weight_at_alpha: f64,
    pub subset_size: usize,
}

/// Table for the cut at α over the cases that are both graded and labeled.
pub fn cut_table(
    event: &FuzzyEvent,
    labels: &BTreeMap<CaseId, bool>,
    alpha: f64,
) -> Result<ContingencyTable> {
    check_alpha(alpha)?;
    let mut table = ContingencyTable::default();
    for (id, &g) in &event.grades {
        let Some(&h) = labels.get(id) else {
            table.n_excluded += 1;
            continue;
        };
        match (g >= alpha, h) {
            (true, true) => table.a += 1,
            (false, true) => table.b += 1,
            (true, false) => table.c += 1,
            (false, false) => table.d += 1,
        }
    }
    Ok(table)
}

/// α on the grid maximizing `|W(H:E_α)|`. Cuts that are empty or contain
/// every graded case are skipped; ties go to the smallest α.
pub fn optimal_alpha(
    event: &FuzzyEvent,
    labels: &BTreeMap<CaseId, bool>,
    grid: &AlphaGrid,
    smoothing: f64,
) -> Result<AlphaChoice> {
    let (mut positives, mut negatives) = (0usize, 0usize);
    for id in event.grades.keys() {
        match labels.get(id) {
            Some(true) => positives += 1,
            Some(false) => negatives += 1,
            None => {}
        }
    }
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateHypothesis(format!(
            "fuzzy event `{}` needs both hypothesis classes among graded cases \
             ({positives} positive, {negatives} negative)",
            event.name()
        )));
    }

    let mut best: Option<AlphaChoice> = None;
    for &alpha in grid.values() {
        let table = cut_table(event, labels, alpha)?;
        let size = table.support() as usize;
        if size == 0 || size as u64 == table.total() {
            continue;
        }
        let estimate = match estimate_weight(&table, smoothing) {
            Ok(e) => e,
            Err(Error::UndefinedWeight(_)) => continue,
            Err(e) => return Err(e),
        };
        let better = match best {
            None => true,
            Some(b) => estimate.w.abs() > b.weight_at_alpha.abs(),
        };
        if better {
            best = Some(AlphaChoice {
                alpha,
                weight_at_alpha: estimate.w,
                subset_size: size,
            });
        }
    }
    best.ok_or_else(|| Error::DegenerateFuzzyEvent(event.name()))
}

/// Row of the inspection table for a fuzzy event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaProfileRow {
    pub alpha: f64,
    pub probability: f64,
    /// Absent where the cut is degenerate.
    pub weight: Option<f64>,
}

/// `(α, P(A_α), W(H:E_α))` along the grid, with uniform case probabilities.
pub fn alpha_profile(
    event: &FuzzyEvent,
    labels: &BTreeMap<CaseId, bool>,
    grid: &AlphaGrid,
    smoothing: f64,
) -> Result<Vec<AlphaProfileRow>> {
    if event.grades.is_empty() {
        return Err(Error::DegenerateFuzzyEvent(event.name()));
    }
    let probabilities = yager_probability(event, grid, &event.uniform_probabilities())?;
    probabilities
        .into_iter()
        .map(|(alpha, probability)| {
            let table = cut_table(event, labels, alpha)?;
            let degenerate = table.support() == 0 || table.support() == table.total();
            let weight = if degenerate {
                None
            } else {
                estimate_weight(&table, smoothing).ok().map(|e| e.w)
            };
            Ok(AlphaProfileRow {
                alpha,
                probability,
                weight,
            })
        })
        .collect()
}

/// Hypothesis labels keyed by case id, for labeled cases only.
pub fn hypothesis_labels(dataset: &Dataset, hypothesis: Hypothesis) -> BTreeMap<CaseId, bool> {
    dataset
        .cases()
        .iter()
        .filter_map(|c| hypothesis.label(c).map(|h| (c.id.clone(), h)))
        .collect()
}
