//! Persisted knowledge base: mined rules, prior, mining configuration and
//! the schema they were mined against.
//!
//! The file is pretty-printed JSON. Floats are written in their shortest
//! exact form, so `load(save(kb)) == kb` and re-saving is byte-identical.

use serde::{Deserialize, Serialize};

use crate::dataset::Hypothesis;
use crate::error::{Error, Result};
use crate::evidence::{estimate_weight, is_significant, ContingencyTable, PriorOdds};
use crate::miner::{MinedRule, MiningConfig};
use crate::schema::{RawAttribute, Schema};
use crate::symptom::SymptomGroup;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    schema: Schema,
    schema_digest: String,
    hypothesis: Hypothesis,
    prior: PriorOdds,
    config: MiningConfig,
    warnings: Vec<String>,
    rules: Vec<MinedRule>,
}

impl KnowledgeBase {
    /// Sorts rules canonically; rejects duplicate groups.
    pub fn new(
        schema: Schema,
        hypothesis: Hypothesis,
        prior: PriorOdds,
        config: MiningConfig,
        warnings: Vec<String>,
        mut rules: Vec<MinedRule>,
    ) -> Result<Self> {
        config.validate()?;
        rules.sort_by(|x, y| x.group.cmp(&y.group));
        if let Some(w) = rules.windows(2).find(|w| w[0].group == w[1].group) {
            return Err(Error::KnowledgeBase(format!(
                "duplicate rule for `{}`",
                w[0].group
            )));
        }
        for rule in &rules {
            rule.group.resolve(&schema)?;
        }
        Ok(Self {
            schema_digest: schema.digest(),
            schema,
            hypothesis,
            prior,
            config,
            warnings,
            rules,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_digest(&self) -> &str {
        &self.schema_digest
    }

    pub fn hypothesis(&self) -> Hypothesis {
        self.hypothesis
    }

    pub fn prior(&self) -> &PriorOdds {
        &self.prior
    }

    pub fn config(&self) -> &MiningConfig {
        &self.config
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn rules(&self) -> &[MinedRule] {
        &self.rules
    }

    /// Rules ordered by descending |w|, canonical order among equals.
    pub fn top_rules(&self, n: usize) -> Vec<&MinedRule> {
        let mut ranked: Vec<&MinedRule> = self.rules.iter().collect();
        ranked.sort_by(|x, y| {
            y.estimate
                .w
                .abs()
                .total_cmp(&x.estimate.w.abs())
                .then_with(|| x.group.cmp(&y.group))
        });
        ranked.truncate(n);
        ranked
    }

    pub fn check_schema(&self, schema: &Schema) -> Result<()> {
        let found = schema.digest();
        if found == self.schema_digest {
            Ok(())
        } else {
            Err(Error::SchemaDigestMismatch {
                expected: self.schema_digest.clone(),
                found,
            })
        }
    }

    pub fn save(&self) -> String {
        let file = KbFile {
            format_version: FORMAT_VERSION,
            hypothesis: self.hypothesis,
            prior: self.prior,
            config: self.config,
            schema_digest: self.schema_digest.clone(),
            schema: self.schema.to_raw(),
            warnings: self.warnings.clone(),
            rules: self.rules.iter().map(RuleRecord::from_rule).collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("knowledge base serializes");
        text.push('\n');
        text
    }

    /// Parses and fully validates; any inconsistency rejects the whole file.
    pub fn load(text: &str) -> Result<Self> {
        let file: KbFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::KnowledgeBase(format!(
                "unsupported format version {}",
                file.format_version
            )));
        }
        let schema = Schema::from_raw(file.schema)?;
        if schema.digest() != file.schema_digest {
            return Err(Error::KnowledgeBase(
                "schema_digest does not match the embedded schema".into(),
            ));
        }
        file.config.validate()?;
        let expected_prior = PriorOdds::from_prevalence(file.prior.prevalence)?;
        if (expected_prior.log_odds - file.prior.log_odds).abs() > 1e-9 {
            return Err(Error::KnowledgeBase(
                "prior log odds do not match prevalence".into(),
            ));
        }

        let mut rules = Vec::with_capacity(file.rules.len());
        for (i, record) in file.rules.into_iter().enumerate() {
            rules.push(
                record
                    .into_rule(&file.config)
                    .map_err(|e| Error::KnowledgeBase(format!("rule {}: {e}", i + 1)))?,
            );
        }
        if rules.windows(2).any(|w| w[0].group >= w[1].group) {
            return Err(Error::KnowledgeBase(
                "rules are not in canonical order or repeat a group".into(),
            ));
        }
        Self::new(
            schema,
            file.hypothesis,
            file.prior,
            file.config,
            file.warnings,
            rules,
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KbFile {
    format_version: u32,
    hypothesis: Hypothesis,
    prior: PriorOdds,
    config: MiningConfig,
    schema_digest: String,
    schema: Vec<RawAttribute>,
    #[serde(default)]
    warnings: Vec<String>,
    rules: Vec<RuleRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleRecord {
    group: SymptomGroup,
    a: u64,
    b: u64,
    c: u64,
    d: u64,
    n_excluded: u64,
    w: f64,
    se: f64,
    z: f64,
}

impl RuleRecord {
    fn from_rule(rule: &MinedRule) -> Self {
        Self {
            group: rule.group.clone(),
            a: rule.table.a,
            b: rule.table.b,
            c: rule.table.c,
            d: rule.table.d,
            n_excluded: rule.table.n_excluded,
            w: rule.estimate.w,
            se: rule.estimate.se,
            z: rule.estimate.z,
        }
    }

    fn into_rule(self, config: &MiningConfig) -> Result<MinedRule> {
        let table = ContingencyTable {
            a: self.a,
            b: self.b,
            c: self.c,
            d: self.d,
            n_excluded: self.n_excluded,
        };
        let estimate = estimate_weight(&table, config.smoothing)?;
        let same = |x: f64, y: f64| x.to_bits() == y.to_bits();
        if !(same(estimate.w, self.w) && same(estimate.se, self.se) && same(estimate.z, self.z)) {
            return Err(Error::KnowledgeBase(format!(
                "stored estimate for `{}` does not recompute from its table",
                self.group
            )));
        }
        let significant = is_significant(&estimate, config.z_crit);
        if !significant {
            return Err(Error::KnowledgeBase(format!(
                "rule `{}` is not significant at z_crit {}",
                self.group, config.z_crit
            )));
        }
        Ok(MinedRule {
            group: self.group,
            table,
            estimate,
            significant,
        })
    }
}
