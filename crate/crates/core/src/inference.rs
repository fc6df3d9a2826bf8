//! Scoring a new case against a knowledge base.
//!
//! All rules whose descriptors hold for the case are collected, then a
//! greedy pass keeps the best-scoring rules that touch disjoint attributes
//! so that no symptom is counted twice. The kept weights are added onto the
//! prior log odds.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Case, Hypothesis};
use crate::error::{Error, Result};
use crate::evidence::{combine, sum_weights, to_probability, ProbabilityMode};
use crate::kb::KnowledgeBase;
use crate::miner::MinedRule;
use crate::schema::Schema;

/// Linear trade-off between a group's size, weight magnitude and error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreWeights {
    pub size: f64,
    pub weight: f64,
    pub error: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            size: 1.0,
            weight: 1.0,
            error: 1.0,
        }
    }
}

impl ScoreWeights {
    pub fn new(size: f64, weight: f64, error: f64) -> Result<Self> {
        let sw = Self {
            size,
            weight,
            error,
        };
        sw.validate()?;
        Ok(sw)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.size, self.weight, self.error]
            .iter()
            .all(|x| x.is_finite())
        {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "score weights must be finite".into(),
            ))
        }
    }
}

impl FromStr for ScoreWeights {
    type Err = Error;

    /// `"ws,ww,we"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [ws, ww, we] = parts.as_slice() else {
            return Err(Error::InvalidArgument(format!(
                "score weights `{s}`: expected three comma-separated numbers"
            )));
        };
        let num = |x: &str| {
            x.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("score weight `{x}` is not a number")))
        };
        Self::new(num(ws)?, num(ww)?, num(we)?)
    }
}

/// `size·|group| + weight·|w| − error·se`.
pub fn group_score(rule: &MinedRule, weights: &ScoreWeights) -> f64 {
    weights.size * rule.group.len() as f64 + weights.weight * rule.estimate.w.abs()
        - weights.error * rule.estimate.se
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseEvidence {
    pub matched: Vec<MinedRule>,
    pub selected: Vec<MinedRule>,
    /// Attributes whose absence kept a rule from matching.
    pub unmatched_missing: BTreeSet<String>,
}

/// Rules whose every descriptor holds for the case. A rule touching a
/// missing attribute never matches; when its observed descriptors all hold,
/// the missing attributes are reported as the blockers.
pub fn match_rules(case: &Case, schema: &Schema, kb: &KnowledgeBase) -> Result<CaseEvidence> {
    kb.check_schema(schema)?;
    let mut matched = Vec::new();
    let mut unmatched_missing = BTreeSet::new();
    for rule in kb.rules() {
        let resolved = rule.group.resolve(schema)?;
        match resolved.evaluate(case) {
            Some(true) => matched.push(rule.clone()),
            Some(false) => {}
            None => {
                if resolved.observed_hold(case) {
                    for idx in resolved.missing(case) {
                        unmatched_missing.insert(schema.attributes()[idx].name.clone());
                    }
                }
            }
        }
    }
    Ok(CaseEvidence {
        matched,
        selected: Vec::new(),
        unmatched_missing,
    })
}

/// Greedy attribute-disjoint selection by descending score; equal scores
/// fall back to canonical group order.
pub fn select_disjoint(matched: &[MinedRule], weights: &ScoreWeights) -> Vec<MinedRule> {
    let mut ranked: Vec<(f64, &MinedRule)> = matched
        .iter()
        .map(|r| (group_score(r, weights), r))
        .collect();
    ranked.sort_by(|(sx, rx), (sy, ry)| sy.total_cmp(sx).then_with(|| rx.group.cmp(&ry.group)));

    let mut used: BTreeSet<&str> = BTreeSet::new();
    let mut selected = Vec::new();
    for (_, rule) in ranked {
        if rule.group.attributes().any(|a| used.contains(a)) {
            continue;
        }
        used.extend(rule.group.attributes());
        selected.push(rule.clone());
    }
    selected
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InferOptions {
    pub mode: ProbabilityMode,
    /// Overrides the knowledge base's configured score weights.
    pub score_weights: Option<ScoreWeights>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub group: String,
    pub w: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceReport {
    pub case_id: String,
    pub hypothesis: String,
    /// Sorted by descending weight.
    pub rows: Vec<ReportRow>,
    pub prior: f64,
    pub weight_sum: f64,
    pub posterior: f64,
    pub probability: f64,
    pub mode: ProbabilityMode,
    pub unmatched_missing: Vec<String>,
}

impl EvidenceReport {
    pub fn in_favor(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.w >= 0.0)
    }

    pub fn against(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.w < 0.0)
    }
}

pub fn infer(
    case: &Case,
    schema: &Schema,
    kb: &KnowledgeBase,
    options: &InferOptions,
) -> Result<(CaseEvidence, EvidenceReport)> {
    let mut evidence = match_rules(case, schema, kb)?;
    let weights = options.score_weights.unwrap_or(kb.config().score_weights);
    evidence.selected = select_disjoint(&evidence.matched, &weights);

    let ws: Vec<f64> = evidence.selected.iter().map(|r| r.estimate.w).collect();
    let prior = *kb.prior();
    let weight_sum = sum_weights(&ws);
    let posterior = combine(&prior, &ws);
    let probability = to_probability(posterior, options.mode)?;

    let mut rows: Vec<ReportRow> = evidence
        .selected
        .iter()
        .map(|r| ReportRow {
            group: r.group.to_string(),
            w: r.estimate.w,
            se: r.estimate.se,
        })
        .collect();
    rows.sort_by(|x, y| y.w.total_cmp(&x.w).then_with(|| x.group.cmp(&y.group)));

    let report = EvidenceReport {
        case_id: case.id.clone(),
        hypothesis: hypothesis_title(kb.hypothesis()),
        rows,
        prior: prior.log_odds,
        weight_sum,
        posterior,
        probability,
        mode: options.mode,
        unmatched_missing: evidence.unmatched_missing.iter().cloned().collect(),
    };
    Ok((evidence, report))
}

fn hypothesis_title(h: Hypothesis) -> String {
    let mut s = h.describe();
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s
}

/// Text ledger: supporting and opposing groups with their weights, then
/// the log-odds arithmetic and the resulting probability.
pub fn render_report(report: &EvidenceReport) -> String {
    let width = report
        .rows
        .iter()
        .map(|r| r.group.chars().count())
        .max()
        .unwrap_or(0)
        .max("Symptom Group".len());
    let mut out = String::new();
    let _ = writeln!(out, "Case {}", report.case_id);

    let section = |out: &mut String, title: &str, rows: Vec<&ReportRow>| {
        if rows.is_empty() {
            return;
        }
        let _ = writeln!(out, "{title}");
        let _ = writeln!(out, "  {:<width$}  {:>8}", "Symptom Group", "W(H:E)");
        for r in rows {
            let _ = writeln!(out, "  {:<width$}  {:>8.3}", r.group, r.w);
        }
    };
    section(
        &mut out,
        &format!("Evidence in Favor of {}:", report.hypothesis),
        report.in_favor().collect(),
    );
    section(&mut out, "Evidence Against:", report.against().collect());

    let _ = writeln!(out, "Final Results:");
    let _ = writeln!(out, "  Prior Log Odds     ===== {:>8.3}", report.prior);
    let _ = writeln!(out, "+ W(H:E)             ===== {:>8.3}", report.weight_sum);
    let _ = writeln!(out, "= Post. Log Odds     ===== {:>8.3}", report.posterior);
    let _ = writeln!(
        out,
        "=> p({}) = {:.3}  [{}]",
        report.hypothesis.to_lowercase(),
        report.probability,
        report.mode
    );
    if !report.unmatched_missing.is_empty() {
        let _ = writeln!(
            out,
            "Rules blocked by missing values: {}",
            report.unmatched_missing.join(", ")
        );
    }
    out
}
