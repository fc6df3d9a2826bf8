//! Seeded synthetic datasets and a brute-force mining oracle shared by the
//! integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use woe_core::dataset::{Case, Outcomes};
use woe_core::evidence::{estimate_weight, is_significant};
use woe_core::fuzzy::MembershipFunction;
use woe_core::schema::{Attribute, AttributeKind};
use woe_core::symptom::DescriptorTest;
use woe_core::{
    ContingencyTable, Dataset, MinedRule, MiningConfig, Schema, SymptomDescriptor, SymptomGroup,
    Value,
};

#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub n_cases: usize,
    pub categorical: usize,
    /// Values per categorical attribute are drawn from this inclusive range.
    pub values: (usize, usize),
    /// Continuous attributes, each with a "high" fuzzy label.
    pub continuous: usize,
    pub missing_rate: f64,
    pub unlabeled_rate: f64,
    pub prevalence: f64,
    /// Whether some attributes shift the hypothesis rate.
    pub signal: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_cases: 200,
            categorical: 3,
            values: (2, 3),
            continuous: 1,
            missing_rate: 0.05,
            unlabeled_rate: 0.02,
            prevalence: 0.6,
            signal: true,
        }
    }
}

pub fn synthetic(seed: u64, spec: SynthSpec) -> Dataset {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut attrs = Vec::new();
    for i in 0..spec.categorical {
        let k = rng.gen_range(spec.values.0..=spec.values.1);
        let values: Vec<String> = (0..k).map(|v| format!("v{v}")).collect();
        let refs: Vec<&str> = values.iter().map(String::as_str).collect();
        attrs.push(Attribute::categorical(format!("c{i}"), &refs));
    }
    for i in 0..spec.continuous {
        attrs.push(Attribute::continuous(format!("x{i}"), "u").with_fuzzy(
            "high",
            MembershipFunction::new(vec![(40.0, 0.0), (80.0, 1.0)]).unwrap(),
        ));
    }
    let schema = Schema::new(attrs).unwrap();

    let cases = (0..spec.n_cases)
        .map(|i| {
            let mut values = Vec::with_capacity(schema.len());
            let mut logit = (spec.prevalence / (1.0 - spec.prevalence)).ln();
            for (j, attr) in schema.attributes().iter().enumerate() {
                let v = match &attr.kind {
                    AttributeKind::Categorical { values } => {
                        let pick = rng.gen_range(0..values.len());
                        if spec.signal && j % 2 == 0 && pick == 0 {
                            logit += 1.5;
                        }
                        Value::Categorical(values[pick].clone())
                    }
                    AttributeKind::Continuous { .. } => {
                        let x: f64 = rng.gen_range(20.0..100.0);
                        let x = (x * 4.0).round() / 4.0;
                        if spec.signal && x > 65.0 {
                            logit += 1.0;
                        }
                        Value::Continuous(x)
                    }
                };
                values.push(if rng.gen_bool(spec.missing_rate) {
                    None
                } else {
                    Some(v)
                });
            }
            let p = 1.0 / (1.0 + (-logit).exp());
            let h = rng.gen_bool(p);
            Case {
                id: format!("case{i:05}"),
                values,
                outcomes: Outcomes {
                    surgical_lesion: if rng.gen_bool(spec.unlabeled_rate) {
                        None
                    } else {
                        Some(h)
                    },
                    ..Outcomes::default()
                },
            }
        })
        .collect();
    Dataset::new(schema, cases).unwrap()
}

/// Direct per-case evaluation of a descriptor, independent of the library's
/// resolution path. `None` when the attribute is missing.
fn descriptor_holds(dataset: &Dataset, case: &Case, d: &SymptomDescriptor) -> Option<bool> {
    let schema = dataset.schema();
    let idx = schema.index_of(&d.attribute).unwrap();
    let value = case.values[idx].as_ref()?;
    Some(match (&d.test, value) {
        (DescriptorTest::Equals { value: want }, Value::Categorical(got)) => want == got,
        (DescriptorTest::FuzzyAtAlpha { label, alpha }, Value::Continuous(x)) => {
            let mf = &schema.attributes()[idx]
                .fuzzy_label(label)
                .unwrap()
                .membership;
            mf.grade(*x) >= *alpha
        }
        _ => false,
    })
}

pub fn oracle_support(dataset: &Dataset, group: &[SymptomDescriptor]) -> u64 {
    dataset
        .cases()
        .iter()
        .filter(|c| {
            group
                .iter()
                .all(|d| descriptor_holds(dataset, c, d) == Some(true))
        })
        .count() as u64
}

pub fn oracle_table(dataset: &Dataset, group: &[SymptomDescriptor]) -> ContingencyTable {
    let mut t = ContingencyTable::default();
    for case in dataset.cases() {
        let states: Option<Vec<bool>> = group
            .iter()
            .map(|d| descriptor_holds(dataset, case, d))
            .collect();
        match (states, case.outcomes.surgical_lesion) {
            (Some(s), Some(h)) => {
                let e = s.iter().all(|&x| x);
                match (e, h) {
                    (true, true) => t.a += 1,
                    (false, true) => t.b += 1,
                    (true, false) => t.c += 1,
                    (false, false) => t.d += 1,
                }
            }
            _ => t.n_excluded += 1,
        }
    }
    t
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for mut rest in combinations(n - first - 1, k - 1) {
            for r in &mut rest {
                *r += first + 1;
            }
            let mut v = vec![first];
            v.extend(rest);
            out.push(v);
        }
    }
    out
}

/// Every group of ≤ max_size descriptors on distinct attributes whose every
/// non-empty subset reaches min_support, in canonical order.
pub fn brute_force_candidates(
    dataset: &Dataset,
    descriptors: &[SymptomDescriptor],
    config: &MiningConfig,
) -> Vec<SymptomGroup> {
    let mut out = Vec::new();
    for k in 1..=config.max_size.min(descriptors.len()) {
        for combo in combinations(descriptors.len(), k) {
            let members: Vec<SymptomDescriptor> =
                combo.iter().map(|&i| descriptors[i].clone()).collect();
            let mut attrs: Vec<&str> = members.iter().map(|d| d.attribute.as_str()).collect();
            attrs.sort();
            attrs.dedup();
            if attrs.len() != members.len() {
                continue;
            }
            let every_subset_frequent = (1u32..(1 << k)).all(|mask| {
                let subset: Vec<SymptomDescriptor> = (0..k)
                    .filter(|b| mask & (1 << b) != 0)
                    .map(|b| members[b].clone())
                    .collect();
                oracle_support(dataset, &subset) >= config.min_support
            });
            if every_subset_frequent {
                out.push(SymptomGroup::new(members).unwrap());
            }
        }
    }
    out.sort();
    out
}

/// Brute-force counterpart of `mine`'s rule list.
pub fn brute_force_rules(
    dataset: &Dataset,
    descriptors: &[SymptomDescriptor],
    config: &MiningConfig,
) -> Vec<MinedRule> {
    brute_force_candidates(dataset, descriptors, config)
        .into_iter()
        .filter_map(|group| {
            let table = oracle_table(dataset, group.descriptors());
            let estimate = estimate_weight(&table, config.smoothing).ok()?;
            let significant = is_significant(&estimate, config.z_crit);
            significant.then_some(MinedRule {
                group,
                table,
                estimate,
                significant,
            })
        })
        .collect()
}

pub fn labels(dataset: &Dataset) -> BTreeMap<String, bool> {
    dataset
        .cases()
        .iter()
        .filter_map(|c| c.outcomes.surgical_lesion.map(|h| (c.id.clone(), h)))
        .collect()
}

pub mod props {
    //! Generators and checks for the algebraic properties, shared by the
    //! proptest suites and the acceptance runner.

    use std::collections::{BTreeMap, BTreeSet};

    use proptest::prelude::*;
    use proptest::test_runner::TestCaseError;

    use woe_core::baseline::evaluate;
    use woe_core::dataset::{Case, Outcomes};
    use woe_core::evidence::{combine, estimate_weight, WeightEstimate};
    use woe_core::fuzzy::{alpha_cut, yager_probability, AlphaGrid, FuzzyEvent};
    use woe_core::inference::{group_score, select_disjoint};
    use woe_core::schema::Attribute;
    use woe_core::{
        ContingencyTable, Dataset, Hypothesis, MinedRule, PriorOdds, Schema, ScoreWeights,
        SymptomDescriptor, SymptomGroup,
    };

    fn grade() -> impl Strategy<Value = f64> {
        prop_oneof![
            Just(0.0),
            Just(1.0),
            (0u32..=20).prop_map(|k| f64::from(k) / 20.0),
            0.0..=1.0f64,
        ]
    }

    fn alpha() -> impl Strategy<Value = f64> {
        prop_oneof![(1u32..=20).prop_map(|k| f64::from(k) / 20.0), 1e-6..=1.0f64]
    }

    pub fn fuzzy_event() -> impl Strategy<Value = FuzzyEvent> {
        prop::collection::vec(grade(), 0..40).prop_map(|grades| {
            let grades = grades
                .into_iter()
                .enumerate()
                .map(|(i, g)| (format!("x{i}"), g))
                .collect();
            FuzzyEvent::new("attr", "label", grades).unwrap()
        })
    }

    pub fn alpha_cut_case() -> impl Strategy<Value = (FuzzyEvent, f64, f64)> {
        (fuzzy_event(), alpha(), alpha()).prop_map(|(e, x, y)| (e, x.min(y), x.max(y)))
    }

    pub fn check_alpha_cut(case: &(FuzzyEvent, f64, f64)) -> Result<(), TestCaseError> {
        let (event, lo, hi) = case;
        let wide = alpha_cut(event, *lo).unwrap();
        let narrow = alpha_cut(event, *hi).unwrap();
        prop_assert!(
            narrow.is_subset(&wide),
            "cut at {hi} not inside cut at {lo}"
        );
        Ok(())
    }

    /// A non-empty event with case probabilities summing to one.
    pub fn yager_case() -> impl Strategy<Value = (FuzzyEvent, BTreeMap<String, f64>, f64)> {
        prop::collection::vec((grade(), 0.01..1.0f64), 1..40).prop_flat_map(|rows| {
            let total: f64 = rows.iter().map(|(_, m)| m).sum();
            let mut grades = BTreeMap::new();
            let mut probs = BTreeMap::new();
            for (i, (g, m)) in rows.iter().enumerate() {
                grades.insert(format!("x{i}"), *g);
                probs.insert(format!("x{i}"), m / total);
            }
            let event = FuzzyEvent::new("attr", "label", grades).unwrap();
            let step = prop_oneof![Just(0.01), Just(0.05), Just(0.1), Just(0.25), 0.003..0.5f64];
            (Just(event), Just(probs), step)
        })
    }

    pub fn check_yager(
        case: &(FuzzyEvent, BTreeMap<String, f64>, f64),
    ) -> Result<(), TestCaseError> {
        let (event, probs, step) = case;
        let grid = AlphaGrid::with_step(*step).unwrap();
        let curve = yager_probability(event, &grid, probs).unwrap();
        for pair in curve.windows(2) {
            prop_assert!(
                pair[1].1 <= pair[0].1,
                "P rose from {:?} to {:?}",
                pair[0],
                pair[1]
            );
        }
        Ok(())
    }

    pub fn table() -> impl Strategy<Value = ContingencyTable> {
        let cell = prop_oneof![0u64..5, 0u64..60, 0u64..2000];
        (cell.clone(), cell.clone(), cell.clone(), cell)
            .prop_map(|(a, b, c, d)| ContingencyTable::new(a, b, c, d))
    }

    fn smoothing() -> impl Strategy<Value = f64> {
        prop_oneof![Just(0.0), Just(0.5), Just(1.0), 1e-3..5.0f64]
    }

    pub fn antisymmetry_case() -> impl Strategy<Value = (ContingencyTable, f64)> {
        (table(), smoothing())
    }

    pub fn check_antisymmetry(case: &(ContingencyTable, f64)) -> Result<(), TestCaseError> {
        let (t, s) = case;
        match (
            estimate_weight(t, *s),
            estimate_weight(&t.swap_hypothesis(), *s),
        ) {
            (Ok(x), Ok(y)) => {
                prop_assert_eq!(x.w, -y.w, "table {:?}", t);
                prop_assert_eq!(x.se, y.se);
            }
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "definedness differs: {:?} vs {:?}", x, y),
        }
        Ok(())
    }

    pub fn shrinkage_case() -> impl Strategy<Value = (ContingencyTable, f64)> {
        (table(), prop_oneof![Just(0.5), 1e-3..5.0f64])
    }

    pub fn check_shrinkage(case: &(ContingencyTable, f64)) -> Result<(), TestCaseError> {
        let (t, s) = case;
        if let Ok(raw) = estimate_weight(t, 0.0) {
            let smoothed: WeightEstimate = estimate_weight(t, *s).unwrap();
            prop_assert!(
                smoothed.w.abs() <= raw.w.abs() + 1e-12,
                "table {:?}: |w({})| = {} > |w(0)| = {}",
                t,
                s,
                smoothed.w.abs(),
                raw.w.abs()
            );
        }
        Ok(())
    }

    pub fn permutation_case() -> impl Strategy<Value = (f64, Vec<f64>, Vec<f64>)> {
        (
            -5.0..5.0f64,
            prop::collection::vec(
                prop_oneof![-10.0..10.0f64, -1e-3..1e-3f64, (-1e4..1e4f64)],
                0..30,
            ),
        )
            .prop_flat_map(|(prior, ws)| (Just(prior), Just(ws.clone()), Just(ws).prop_shuffle()))
    }

    pub fn check_permutation(case: &(f64, Vec<f64>, Vec<f64>)) -> Result<(), TestCaseError> {
        let (prior, ws, shuffled) = case;
        let prior = PriorOdds::from_log_odds(*prior).unwrap();
        let x = combine(&prior, ws);
        let y = combine(&prior, shuffled);
        prop_assert_eq!(x.to_bits(), y.to_bits(), "{} vs {}", x, y);
        Ok(())
    }

    fn rule(attrs: BTreeSet<usize>, w: f64, se: f64) -> MinedRule {
        let group = SymptomGroup::new(
            attrs
                .into_iter()
                .map(|a| SymptomDescriptor::equals(format!("a{a}"), "y"))
                .collect(),
        )
        .unwrap();
        MinedRule {
            group,
            table: ContingencyTable::default(),
            estimate: WeightEstimate {
                w,
                se,
                z: w / se,
                smoothing: 0.5,
            },
            significant: true,
        }
    }

    pub fn selection_case() -> impl Strategy<Value = (Vec<MinedRule>, ScoreWeights)> {
        let one = (
            prop::collection::btree_set(0usize..8, 1..=3),
            prop_oneof![-3.0..3.0f64, Just(0.5), Just(-0.5)],
            prop_oneof![0.05..1.0f64, Just(0.25)],
        )
            .prop_map(|(attrs, w, se)| rule(attrs, w, se));
        let weights = (0.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64)
            .prop_map(|(s, w, e)| ScoreWeights::new(s, w, e).unwrap());
        (prop::collection::vec(one, 0..25), weights).prop_map(|(mut rules, weights)| {
            rules.sort_by(|x, y| x.group.cmp(&y.group));
            rules.dedup_by(|x, y| x.group == y.group);
            (rules, weights)
        })
    }

    /// Selected groups are pairwise attribute-disjoint, drawn from the
    /// input, and every skipped group collides with a better-scored pick.
    pub fn check_selection(case: &(Vec<MinedRule>, ScoreWeights)) -> Result<(), TestCaseError> {
        let (rules, weights) = case;
        let picked = select_disjoint(rules, weights);
        for (i, x) in picked.iter().enumerate() {
            prop_assert!(rules.contains(x));
            for y in &picked[i + 1..] {
                prop_assert!(
                    !x.group.shares_attribute(&y.group),
                    "{} / {}",
                    x.group,
                    y.group
                );
            }
        }
        for r in rules.iter().filter(|r| !picked.contains(r)) {
            let blocker = picked.iter().find(|p| p.group.shares_attribute(&r.group));
            prop_assert!(
                blocker.is_some(),
                "{} was dropped without a conflict",
                r.group
            );
            let blocker = blocker.unwrap();
            prop_assert!(group_score(blocker, weights) >= group_score(r, weights));
        }
        Ok(())
    }

    /// `(probability, label)` per case plus a threshold.
    pub type MetricsCase = (Vec<(Option<f64>, Option<bool>)>, f64);

    pub fn metrics_case() -> impl Strategy<Value = MetricsCase> {
        let row = (
            prop_oneof![1 => Just(None), 6 => (0.0..=1.0f64).prop_map(Some), 1 => Just(Some(0.5))],
            prop_oneof![1 => Just(None), 8 => any::<bool>().prop_map(Some)],
        );
        (
            prop::collection::vec(row, 1..60),
            prop_oneof![Just(0.5), 0.0..=1.0f64],
        )
    }

    pub fn metrics_dataset(rows: &[(Option<f64>, Option<bool>)]) -> Dataset {
        let schema = Schema::new(vec![Attribute::categorical("flag", &["y", "n"])]).unwrap();
        let cases = rows
            .iter()
            .enumerate()
            .map(|(i, (_, label))| Case {
                id: format!("m{i}"),
                values: vec![None],
                outcomes: Outcomes {
                    surgical_lesion: *label,
                    ..Outcomes::default()
                },
            })
            .collect();
        Dataset::new(schema, cases).unwrap()
    }

    /// Counts add up to the number of cases and agree with a direct tally.
    pub fn check_metrics(case: &MetricsCase) -> Result<(), TestCaseError> {
        let (rows, threshold) = case;
        let data = metrics_dataset(rows);
        let probs: BTreeMap<String, Option<f64>> = data
            .cases()
            .iter()
            .zip(rows)
            .map(|(c, (p, _))| (c.id.clone(), *p))
            .collect();
        let scored = rows
            .iter()
            .filter(|(p, l)| p.is_some() && l.is_some())
            .count() as u64;
        let result = evaluate(
            |c| probs[&c.id],
            &data,
            *threshold,
            Hypothesis::SurgicalLesion,
        );
        if scored == 0 {
            prop_assert!(result.is_err());
            return Ok(());
        }
        let m = result.unwrap();
        prop_assert_eq!(m.tp + m.fp + m.tn + m.fn_ + m.n_unscored, rows.len() as u64);
        prop_assert_eq!(m.scored(), scored);
        let positives = rows
            .iter()
            .filter(|(p, l)| p.is_some() && *l == Some(true))
            .count() as u64;
        prop_assert_eq!(m.tp + m.fn_, positives);
        let called = rows
            .iter()
            .filter(|(p, l)| l.is_some() && p.is_some_and(|p| p >= *threshold))
            .count() as u64;
        prop_assert_eq!(m.tp + m.fp, called);
        Ok(())
    }
}
