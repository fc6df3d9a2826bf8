//! Crisp symptom descriptors and the groups mined from them.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Case;
use crate::error::{Error, Result};
use crate::fuzzy::MembershipFunction;
use crate::schema::{AttributeKind, Schema};

pub const DEFAULT_MAX_GROUP_SIZE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DescriptorTest {
    /// Categorical attribute equals `value`.
    Equals { value: String },
    /// Fuzzy label graded at least `alpha`.
    FuzzyAtAlpha { label: String, alpha: f64 },
}

/// A single crisp symptom, e.g. `pain = depressed` or `pulse is very_high (α ≥ 0.6)`.
///
/// Ordered by attribute name, then categorical tests before fuzzy ones, then
/// value (or label, then α).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomDescriptor {
    pub attribute: String,
    #[serde(flatten)]
    pub test: DescriptorTest,
}

impl SymptomDescriptor {
    pub fn equals<A: Into<String>, V: Into<String>>(attribute: A, value: V) -> Self {
        Self {
            attribute: attribute.into(),
            test: DescriptorTest::Equals {
                value: value.into(),
            },
        }
    }

    pub fn fuzzy<A: Into<String>, L: Into<String>>(attribute: A, label: L, alpha: f64) -> Self {
        Self {
            attribute: attribute.into(),
            test: DescriptorTest::FuzzyAtAlpha {
                label: label.into(),
                alpha,
            },
        }
    }

    fn resolve<'s>(&self, schema: &'s Schema) -> Result<ResolvedDescriptor<'s>> {
        let index = schema.require(&self.attribute)?;
        let attr = &schema.attributes()[index];
        let check = match (&self.test, &attr.kind) {
            (DescriptorTest::Equals { value }, AttributeKind::Categorical { values }) => {
                if !values.contains(value) {
                    return Err(Error::InvalidArgument(format!(
                        "`{value}` is not a value of `{}`",
                        self.attribute
                    )));
                }
                Check::Equals(value.clone())
            }
            (DescriptorTest::FuzzyAtAlpha { label, alpha }, AttributeKind::Continuous { .. }) => {
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "descriptor `{self}` has alpha outside (0, 1]"
                    )));
                }
                let fuzzy = attr.fuzzy_label(label).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "`{}` has no fuzzy label `{label}`",
                        self.attribute
                    ))
                })?;
                Check::Fuzzy(&fuzzy.membership, *alpha)
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "descriptor `{self}` does not fit the kind of attribute `{}`",
                    self.attribute
                )))
            }
        };
        Ok(ResolvedDescriptor { index, check })
    }

    /// `None` when the case leaves the attribute missing.
    pub fn holds(&self, case: &Case, schema: &Schema) -> Result<Option<bool>> {
        Ok(self.resolve(schema)?.evaluate(case))
    }
}

impl Eq for SymptomDescriptor {}

impl Ord for SymptomDescriptor {
    fn cmp(&self, other: &Self) -> Ordering {
        use DescriptorTest::*;
        self.attribute
            .cmp(&other.attribute)
            .then_with(|| match (&self.test, &other.test) {
                (Equals { value: x }, Equals { value: y }) => x.cmp(y),
                (Equals { .. }, FuzzyAtAlpha { .. }) => Ordering::Less,
                (FuzzyAtAlpha { .. }, Equals { .. }) => Ordering::Greater,
                (
                    FuzzyAtAlpha {
                        label: l1,
                        alpha: a1,
                    },
                    FuzzyAtAlpha {
                        label: l2,
                        alpha: a2,
                    },
                ) => l1.cmp(l2).then_with(|| a1.total_cmp(a2)),
            })
    }
}

impl PartialOrd for SymptomDescriptor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SymptomDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.test {
            DescriptorTest::Equals { value } => write!(f, "{}={}", self.attribute, value),
            DescriptorTest::FuzzyAtAlpha { label, alpha } => {
                write!(f, "{}~{}@{}", self.attribute, label, alpha)
            }
        }
    }
}

enum Check<'s> {
    Equals(String),
    Fuzzy(&'s MembershipFunction, f64),
}

struct ResolvedDescriptor<'s> {
    index: usize,
    check: Check<'s>,
}

impl ResolvedDescriptor<'_> {
    fn evaluate(&self, case: &Case) -> Option<bool> {
        let value = case.value(self.index)?;
        Some(match &self.check {
            Check::Equals(expected) => value.as_label() == Some(expected.as_str()),
            Check::Fuzzy(mf, alpha) => value.as_number().is_some_and(|x| mf.grade(x) >= *alpha),
        })
    }
}

/// A conjunction of descriptors on distinct attributes, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct SymptomGroup {
    descriptors: Vec<SymptomDescriptor>,
}

impl SymptomGroup {
    pub fn new(mut descriptors: Vec<SymptomDescriptor>) -> Result<Self> {
        if descriptors.is_empty() {
            return Err(Error::InvalidArgument("empty symptom group".into()));
        }
        descriptors.sort();
        let mut attrs = BTreeSet::new();
        for d in &descriptors {
            if !attrs.insert(d.attribute.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "symptom group tests attribute `{}` twice",
                    d.attribute
                )));
            }
        }
        Ok(Self { descriptors })
    }

    pub fn single(descriptor: SymptomDescriptor) -> Self {
        Self {
            descriptors: vec![descriptor],
        }
    }

    pub fn descriptors(&self) -> &[SymptomDescriptor] {
        &self.descriptors
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.descriptors.iter().map(|d| d.attribute.as_str())
    }

    pub fn shares_attribute(&self, other: &SymptomGroup) -> bool {
        self.attributes()
            .any(|a| other.attributes().any(|b| a == b))
    }

    pub(crate) fn resolve<'s>(&self, schema: &'s Schema) -> Result<ResolvedGroup<'s>> {
        Ok(ResolvedGroup {
            parts: self
                .descriptors
                .iter()
                .map(|d| d.resolve(schema))
                .collect::<Result<_>>()?,
        })
    }
}

impl<'de> Deserialize<'de> for SymptomGroup {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let descriptors = Vec::<SymptomDescriptor>::deserialize(d)?;
        let sorted = descriptors.windows(2).all(|w| w[0] < w[1]);
        if !sorted {
            return Err(serde::de::Error::custom(
                "group descriptors are not in canonical order",
            ));
        }
        SymptomGroup::new(descriptors).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for SymptomGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.descriptors.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

pub(crate) struct ResolvedGroup<'s> {
    parts: Vec<ResolvedDescriptor<'s>>,
}

impl ResolvedGroup<'_> {
    /// `None` if any group attribute is missing, otherwise whether all hold.
    pub(crate) fn evaluate(&self, case: &Case) -> Option<bool> {
        let mut all = true;
        for part in &self.parts {
            all &= part.evaluate(case)?;
        }
        Some(all)
    }

    /// Indices of group attributes the case leaves missing.
    pub(crate) fn missing<'c>(&'c self, case: &'c Case) -> impl Iterator<Item = usize> + 'c {
        self.parts
            .iter()
            .filter(move |p| case.value(p.index).is_none())
            .map(|p| p.index)
    }

    /// Whether every observed descriptor holds (missing ones ignored).
    pub(crate) fn observed_hold(&self, case: &Case) -> bool {
        self.parts.iter().all(|p| p.evaluate(case).unwrap_or(true))
    }
}
