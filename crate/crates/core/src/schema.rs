//! Attribute schema: the clinical variables a case may carry, their kinds,
//! and the fuzzy labels defined over continuous measurements.
//!
//! Schema files are JSON arrays of attribute objects:
//!
//! ```json
//! [
//!   {"name": "pain", "kind": "categorical",
//!    "values": ["alert", "depressed", "mild", "severe", "extreme"]},
//!   {"name": "pulse", "kind": "continuous", "unit": "beats/min",
//!    "fuzzy": [{"label": "very_high", "points": [[70, 0], [100, 1]]}]}
//! ]
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fuzzy::MembershipFunction;

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeKind {
    Categorical { values: Vec<String> },
    Continuous { unit: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyLabel {
    pub label: String,
    pub membership: MembershipFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
    pub fuzzy: Vec<FuzzyLabel>,
}

impl Attribute {
    pub fn categorical<S: Into<String>>(name: S, values: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Categorical {
                values: values.iter().map(|v| v.to_string()).collect(),
            },
            fuzzy: Vec::new(),
        }
    }

    pub fn continuous<S: Into<String>, U: Into<String>>(name: S, unit: U) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Continuous { unit: unit.into() },
            fuzzy: Vec::new(),
        }
    }

    pub fn with_fuzzy<S: Into<String>>(mut self, label: S, membership: MembershipFunction) -> Self {
        self.fuzzy.push(FuzzyLabel {
            label: label.into(),
            membership,
        });
        self
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, AttributeKind::Continuous { .. })
    }

    pub fn categorical_values(&self) -> Option<&[String]> {
        match &self.kind {
            AttributeKind::Categorical { values } => Some(values),
            AttributeKind::Continuous { .. } => None,
        }
    }

    pub fn fuzzy_label(&self, label: &str) -> Option<&FuzzyLabel> {
        self.fuzzy.iter().find(|f| f.label == label)
    }
}

/// Validated, ordered set of attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    attributes: Vec<Attribute>,
    index: BTreeMap<String, usize>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, attr) in attributes.iter().enumerate() {
            validate_attribute(attr)?;
            if index.insert(attr.name.clone(), i).is_some() {
                return Err(Error::Schema(format!(
                    "duplicate attribute `{}`",
                    attr.name
                )));
            }
        }
        Ok(Self { attributes, index })
    }

    /// Parses schema-file text.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: Vec<RawAttribute> = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        let attributes = raw
            .into_iter()
            .map(RawAttribute::into_attribute)
            .collect::<Result<Vec<_>>>()?;
        Self::new(attributes)
    }

    /// Canonical schema-file rendering; `parse(to_json())` reproduces the schema.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("schema serialization is infallible")
    }

    pub(crate) fn to_raw(&self) -> Vec<RawAttribute> {
        self.attributes
            .iter()
            .map(RawAttribute::from_attribute)
            .collect()
    }

    pub(crate) fn from_raw(raw: Vec<RawAttribute>) -> Result<Self> {
        Self::new(
            raw.into_iter()
                .map(RawAttribute::into_attribute)
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// SHA-256 over the canonical compact JSON rendering, hex encoded.
    pub fn digest(&self) -> String {
        let canonical =
            serde_json::to_string(&self.to_raw()).expect("schema serialization is infallible");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.index_of(name).map(|i| &self.attributes[i])
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }
}

fn validate_attribute(attr: &Attribute) -> Result<()> {
    if attr.name.trim().is_empty() {
        return Err(Error::Schema("attribute with empty name".into()));
    }
    match &attr.kind {
        AttributeKind::Categorical { values } => {
            if values.is_empty() {
                return Err(Error::Schema(format!(
                    "categorical attribute `{}` has no values",
                    attr.name
                )));
            }
            let mut seen = BTreeSet::new();
            for v in values {
                if v == crate::dataset::MISSING_TOKEN {
                    return Err(Error::Schema(format!(
                        "attribute `{}` uses the missing token as a value",
                        attr.name
                    )));
                }
                if !seen.insert(v.as_str()) {
                    return Err(Error::Schema(format!(
                        "attribute `{}` lists value `{v}` twice",
                        attr.name
                    )));
                }
            }
            if !attr.fuzzy.is_empty() {
                return Err(Error::Schema(format!(
                    "fuzzy labels on categorical attribute `{}`",
                    attr.name
                )));
            }
        }
        AttributeKind::Continuous { .. } => {
            let mut seen = BTreeSet::new();
            for f in &attr.fuzzy {
                if !seen.insert(f.label.as_str()) {
                    return Err(Error::Schema(format!(
                        "attribute `{}` defines fuzzy label `{}` twice",
                        attr.name, f.label
                    )));
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawAttribute {
    name: String,
    kind: RawKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    fuzzy: Vec<RawFuzzy>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawKind {
    Categorical,
    Continuous,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFuzzy {
    label: String,
    points: Vec<(f64, f64)>,
}

impl RawAttribute {
    fn into_attribute(self) -> Result<Attribute> {
        let kind = match self.kind {
            RawKind::Categorical => {
                if self.unit.is_some() {
                    return Err(Error::Schema(format!(
                        "categorical attribute `{}` has a unit",
                        self.name
                    )));
                }
                AttributeKind::Categorical {
                    values: self.values.ok_or_else(|| {
                        Error::Schema(format!(
                            "categorical attribute `{}` lacks values",
                            self.name
                        ))
                    })?,
                }
            }
            RawKind::Continuous => {
                if self.values.is_some() {
                    return Err(Error::Schema(format!(
                        "continuous attribute `{}` lists values",
                        self.name
                    )));
                }
                AttributeKind::Continuous {
                    unit: self.unit.unwrap_or_default(),
                }
            }
        };
        let fuzzy = self
            .fuzzy
            .into_iter()
            .map(|f| {
                let membership = MembershipFunction::new(f.points).map_err(|e| {
                    Error::Schema(format!("fuzzy label `{}` on `{}`: {e}", f.label, self.name))
                })?;
                Ok(FuzzyLabel {
                    label: f.label,
                    membership,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Attribute {
            name: self.name,
            kind,
            fuzzy,
        })
    }

    fn from_attribute(attr: &Attribute) -> Self {
        let (kind, values, unit) = match &attr.kind {
            AttributeKind::Categorical { values } => {
                (RawKind::Categorical, Some(values.clone()), None)
            }
            AttributeKind::Continuous { unit } => (RawKind::Continuous, None, Some(unit.clone())),
        };
        Self {
            name: attr.name.clone(),
            kind,
            values,
            unit,
            fuzzy: attr
                .fuzzy
                .iter()
                .map(|f| RawFuzzy {
                    label: f.label.clone(),
                    points: f.membership.breakpoints().to_vec(),
                })
                .collect(),
        }
    }
}

/// The equine colic attribute set, reconstructed from the clinical variables
/// the original study recorded. Codings and membership breakpoints are
/// configuration, not reference values.
pub fn colic_schema() -> Schema {
    Schema::parse(COLIC_SCHEMA_JSON).expect("bundled colic schema is valid")
}

pub const COLIC_SCHEMA_JSON: &str = include_str!("../data/colic_schema.json");
