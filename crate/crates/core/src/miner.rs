//! Discovery of significant symptom groups.
//!
//! Every categorical value and every fuzzy label (cut at its optimal α)
//! becomes a crisp descriptor. Groups of up to `max_size` descriptors on
//! distinct attributes are enumerated level by level; a group is only
//! considered when all of its sub-groups reach `min_support`. Each surviving
//! group's weight of evidence is estimated and kept if it passes the z-test.

use std::collections::HashSet;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Hypothesis};
use crate::error::{Error, Result};
use crate::evidence::{
    estimate_weight, is_significant, ContingencyTable, PriorOdds, WeightEstimate,
    DEFAULT_SMOOTHING, DEFAULT_Z_CRIT,
};
use crate::fuzzy::{hypothesis_labels, optimal_alpha, AlphaGrid, FuzzyEvent};
use crate::inference::ScoreWeights;
use crate::kb::KnowledgeBase;
use crate::schema::AttributeKind;
use crate::symptom::{SymptomDescriptor, SymptomGroup, DEFAULT_MAX_GROUP_SIZE};

pub const DEFAULT_MIN_SUPPORT: u64 = 5;
pub const DEFAULT_ALPHA_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiningConfig {
    pub max_size: usize,
    pub min_support: u64,
    pub z_crit: f64,
    pub smoothing: f64,
    pub alpha_step: f64,
    pub score_weights: ScoreWeights,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            max_size: DEFAULT_MAX_GROUP_SIZE,
            min_support: DEFAULT_MIN_SUPPORT,
            z_crit: DEFAULT_Z_CRIT,
            smoothing: DEFAULT_SMOOTHING,
            alpha_step: DEFAULT_ALPHA_STEP,
            score_weights: ScoreWeights::default(),
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidArgument(what));
        if self.max_size == 0 {
            return bad("max_size must be at least 1".into());
        }
        if self.min_support == 0 {
            return bad("min_support must be at least 1".into());
        }
        if !(self.z_crit.is_finite() && self.z_crit > 0.0) {
            return bad(format!("z_crit must be positive, got {}", self.z_crit));
        }
        if !(self.smoothing.is_finite() && self.smoothing >= 0.0) {
            return bad(format!(
                "smoothing must be non-negative, got {}",
                self.smoothing
            ));
        }
        AlphaGrid::with_step(self.alpha_step)?;
        self.score_weights.validate()
    }

    pub fn alpha_grid(&self) -> Result<AlphaGrid> {
        AlphaGrid::with_step(self.alpha_step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinedRule {
    pub group: SymptomGroup,
    pub table: ContingencyTable,
    pub estimate: WeightEstimate,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Binarization {
    /// Canonically ordered.
    pub descriptors: Vec<SymptomDescriptor>,
    /// Fuzzy labels left out, with the reason.
    pub warnings: Vec<String>,
}

fn check_both_classes(dataset: &Dataset, hypothesis: Hypothesis) -> Result<(usize, usize)> {
    let (pos, neg) = dataset.class_counts(hypothesis);
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateHypothesis(format!(
            "`{hypothesis}` needs both classes among labeled cases ({pos} positive, {neg} negative)"
        )));
    }
    Ok((pos, neg))
}

/// Turns the schema into crisp descriptors: one per categorical value seen
/// in the data, one per fuzzy label at its optimal α.
pub fn binarize_symptoms(
    dataset: &Dataset,
    hypothesis: Hypothesis,
    grid: &AlphaGrid,
    smoothing: f64,
) -> Result<Binarization> {
    check_both_classes(dataset, hypothesis)?;
    let labels = hypothesis_labels(dataset, hypothesis);
    let mut out = Binarization::default();

    for (idx, attr) in dataset.schema().attributes().iter().enumerate() {
        match &attr.kind {
            AttributeKind::Categorical { values } => {
                for value in values {
                    let seen = dataset
                        .cases()
                        .iter()
                        .any(|c| c.value(idx).and_then(|v| v.as_label()) == Some(value.as_str()));
                    if seen {
                        out.descriptors
                            .push(SymptomDescriptor::equals(&attr.name, value));
                    }
                }
            }
            AttributeKind::Continuous { .. } => {
                for fuzzy in &attr.fuzzy {
                    let event = FuzzyEvent::from_dataset(dataset, &attr.name, &fuzzy.label)?;
                    match optimal_alpha(&event, &labels, grid, smoothing) {
                        Ok(choice) => out.descriptors.push(SymptomDescriptor::fuzzy(
                            &attr.name,
                            &fuzzy.label,
                            choice.alpha,
                        )),
                        Err(
                            e @ (Error::DegenerateFuzzyEvent(_) | Error::DegenerateHypothesis(_)),
                        ) => out.warnings.push(format!("omitted {}: {e}", event.name())),
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    out.descriptors.sort();
    Ok(out)
}

type Bits = Vec<u64>;

fn popcount(bits: &[u64]) -> u64 {
    bits.iter().map(|w| u64::from(w.count_ones())).sum()
}

fn and_into(acc: &mut [u64], other: &[u64]) {
    for (x, y) in acc.iter_mut().zip(other) {
        *x &= y;
    }
}

/// Per-descriptor case bitsets.
struct DescriptorMatrix {
    descriptors: Vec<SymptomDescriptor>,
    /// Attribute index of each descriptor.
    attrs: Vec<usize>,
    /// Cases that observed the descriptor's attribute.
    observed: Vec<Bits>,
    /// Cases where the descriptor holds.
    holds: Vec<Bits>,
    words: usize,
    n_cases: u64,
}

impl DescriptorMatrix {
    fn new(dataset: &Dataset, descriptors: &[SymptomDescriptor]) -> Result<Self> {
        let mut descriptors = descriptors.to_vec();
        descriptors.sort();
        descriptors.dedup();
        let n = dataset.len();
        let words = n.div_ceil(64);
        let schema = dataset.schema();
        let mut attrs = Vec::with_capacity(descriptors.len());
        let mut observed = Vec::with_capacity(descriptors.len());
        let mut holds = Vec::with_capacity(descriptors.len());
        for d in &descriptors {
            attrs.push(schema.require(&d.attribute)?);
            let group = SymptomGroup::single(d.clone());
            let resolved = group.resolve(schema)?;
            let mut obs = vec![0u64; words];
            let mut hold = vec![0u64; words];
            for (i, case) in dataset.cases().iter().enumerate() {
                if let Some(h) = resolved.evaluate(case) {
                    obs[i / 64] |= 1 << (i % 64);
                    if h {
                        hold[i / 64] |= 1 << (i % 64);
                    }
                }
            }
            observed.push(obs);
            holds.push(hold);
        }
        Ok(Self {
            descriptors,
            attrs,
            observed,
            holds,
            words,
            n_cases: n as u64,
        })
    }

    fn event_bits(&self, group: &[usize]) -> Bits {
        let mut acc = self.holds[group[0]].clone();
        for &j in &group[1..] {
            and_into(&mut acc, &self.holds[j]);
        }
        acc
    }

    fn table(&self, group: &[usize], labels: &LabelBits) -> ContingencyTable {
        let mut complete = labels.known.clone();
        let mut event = labels.known.clone();
        for &j in group {
            and_into(&mut complete, &self.observed[j]);
            and_into(&mut event, &self.holds[j]);
        }
        let n = popcount(&complete);
        let e = popcount(&event);
        and_into(&mut complete, &labels.positive);
        and_into(&mut event, &labels.positive);
        let n_pos = popcount(&complete);
        let a = popcount(&event);
        let b = n_pos - a;
        let c = e - a;
        let d = n - e - b;
        ContingencyTable {
            a,
            b,
            c,
            d,
            n_excluded: self.n_cases - n,
        }
    }

    fn group(&self, indices: &[usize]) -> SymptomGroup {
        SymptomGroup::new(
            indices
                .iter()
                .map(|&i| self.descriptors[i].clone())
                .collect(),
        )
        .expect("enumerated groups have distinct attributes")
    }

    /// Level-wise enumeration; output sorted lexicographically by index,
    /// which is the canonical group order because descriptors are sorted.
    fn enumerate(&self, max_size: usize, min_support: u64) -> Vec<Vec<usize>> {
        let singles: Vec<usize> = (0..self.descriptors.len())
            .filter(|&i| popcount(&self.holds[i]) >= min_support)
            .collect();
        let mut all: Vec<Vec<usize>> = singles.iter().map(|&i| vec![i]).collect();
        let mut level: Vec<Vec<usize>> = all.clone();

        for _size in 2..=max_size {
            if level.is_empty() {
                break;
            }
            let frequent: HashSet<&[usize]> = level.iter().map(Vec::as_slice).collect();
            let mut next = Vec::new();
            let mut probe = Vec::new();
            for g in &level {
                let last = *g.last().expect("groups are non-empty");
                let prefix_bits = self.event_bits(g);
                for &j in singles.iter().filter(|&&j| j > last) {
                    if g.iter().any(|&i| self.attrs[i] == self.attrs[j]) {
                        continue;
                    }
                    // every sub-group one element smaller must be frequent; the
                    // one dropping j is g itself
                    let all_subsets_frequent = (0..g.len()).all(|skip| {
                        probe.clear();
                        probe.extend(
                            g.iter()
                                .enumerate()
                                .filter(|(k, _)| *k != skip)
                                .map(|(_, &i)| i),
                        );
                        probe.push(j);
                        frequent.contains(probe.as_slice())
                    });
                    if !all_subsets_frequent {
                        continue;
                    }
                    let mut bits = prefix_bits.clone();
                    and_into(&mut bits, &self.holds[j]);
                    if popcount(&bits) >= min_support {
                        let mut candidate = g.clone();
                        candidate.push(j);
                        next.push(candidate);
                    }
                }
            }
            all.extend(next.iter().cloned());
            level = next;
        }
        all.sort();
        all
    }
}

struct LabelBits {
    known: Bits,
    positive: Bits,
}

impl LabelBits {
    fn new(dataset: &Dataset, hypothesis: Hypothesis, words: usize) -> Self {
        let mut known = vec![0u64; words];
        let mut positive = vec![0u64; words];
        for (i, case) in dataset.cases().iter().enumerate() {
            if let Some(h) = hypothesis.label(case) {
                known[i / 64] |= 1 << (i % 64);
                if h {
                    positive[i / 64] |= 1 << (i % 64);
                }
            }
        }
        Self { known, positive }
    }
}

/// Support of a group: cases observing every group attribute on which all
/// descriptors hold.
pub fn group_support(dataset: &Dataset, group: &SymptomGroup) -> Result<u64> {
    let resolved = group.resolve(dataset.schema())?;
    Ok(dataset
        .cases()
        .iter()
        .filter(|c| resolved.evaluate(c) == Some(true))
        .count() as u64)
}

/// Groups of at most `max_size` descriptors on distinct attributes whose
/// every sub-group has support ≥ `min_support`, in canonical order.
pub fn enumerate_candidates(
    dataset: &Dataset,
    descriptors: &[SymptomDescriptor],
    config: &MiningConfig,
) -> Result<Vec<SymptomGroup>> {
    config.validate()?;
    let matrix = DescriptorMatrix::new(dataset, descriptors)?;
    Ok(matrix
        .enumerate(config.max_size, config.min_support)
        .iter()
        .map(|g| matrix.group(g))
        .collect())
}

fn score_shard(
    matrix: &DescriptorMatrix,
    labels: &LabelBits,
    candidates: &[Vec<usize>],
    config: &MiningConfig,
) -> Result<Vec<MinedRule>> {
    let mut out = Vec::with_capacity(candidates.len());
    for g in candidates {
        let table = matrix.table(g, labels);
        let estimate = match estimate_weight(&table, config.smoothing) {
            Ok(e) => e,
            // zero cells without smoothing, or no labeled complete cases
            Err(Error::UndefinedWeight(_)) => continue,
            Err(e) => return Err(e),
        };
        out.push(MinedRule {
            group: matrix.group(g),
            table,
            significant: is_significant(&estimate, config.z_crit),
            estimate,
        });
    }
    Ok(out)
}

/// Estimates every candidate group, significant or not. Candidates whose
/// weight is undefined are left out. The candidate list is cut into
/// `shards` contiguous pieces scored on separate threads; results are merged
/// in canonical order, so the output does not depend on `shards`.
pub fn score_candidates(
    dataset: &Dataset,
    hypothesis: Hypothesis,
    descriptors: &[SymptomDescriptor],
    config: &MiningConfig,
    shards: usize,
) -> Result<Vec<MinedRule>> {
    config.validate()?;
    let matrix = DescriptorMatrix::new(dataset, descriptors)?;
    let labels = LabelBits::new(dataset, hypothesis, matrix.words);
    let candidates = matrix.enumerate(config.max_size, config.min_support);

    let shards = shards.max(1);
    let chunk = candidates.len().div_ceil(shards).max(1);
    let mut rules = if shards == 1 {
        score_shard(&matrix, &labels, &candidates, config)?
    } else {
        let results: Vec<Result<Vec<MinedRule>>> = thread::scope(|scope| {
            let handles: Vec<_> = candidates
                .chunks(chunk)
                .map(|piece| scope.spawn(|| score_shard(&matrix, &labels, piece, config)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("scoring shard panicked"))
                .collect()
        });
        let mut merged = Vec::with_capacity(candidates.len());
        for shard in results {
            merged.extend(shard?);
        }
        merged
    };
    rules.sort_by(|x, y| x.group.cmp(&y.group));
    Ok(rules)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MineOptions {
    /// Prevalence for the prior instead of the training prevalence.
    pub prior_prevalence: Option<f64>,
    /// Number of scoring shards; 0 or 1 scores on the calling thread.
    pub shards: usize,
}

pub fn mine(
    dataset: &Dataset,
    hypothesis: Hypothesis,
    config: &MiningConfig,
) -> Result<KnowledgeBase> {
    mine_with(dataset, hypothesis, config, &MineOptions::default())
}

pub fn mine_with(
    dataset: &Dataset,
    hypothesis: Hypothesis,
    config: &MiningConfig,
    options: &MineOptions,
) -> Result<KnowledgeBase> {
    config.validate()?;
    let (pos, neg) = check_both_classes(dataset, hypothesis)?;
    let prevalence = options
        .prior_prevalence
        .unwrap_or(pos as f64 / (pos + neg) as f64);
    let prior = PriorOdds::from_prevalence(prevalence)?;

    let binarized =
        binarize_symptoms(dataset, hypothesis, &config.alpha_grid()?, config.smoothing)?;
    let rules = score_candidates(
        dataset,
        hypothesis,
        &binarized.descriptors,
        config,
        options.shards,
    )?
    .into_iter()
    .filter(|r| r.significant)
    .collect();

    KnowledgeBase::new(
        dataset.schema().clone(),
        hypothesis,
        prior,
        *config,
        binarized.warnings,
        rules,
    )
}
