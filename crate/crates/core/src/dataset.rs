//! Case records and CSV ingestion.
//!
//! Missing cells (`?`) are kept as `None` at load time. Cases are only
//! dropped per analysis, by whichever computation needs a complete subset
//! of attributes (see [`Case::complete_for`]).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{AttributeKind, Schema};

pub const MISSING_TOKEN: &str = "?";

pub const ID_COLUMN: &str = "id";
pub const OUTCOME_COLUMNS: [&str; 4] = [
    "surgery_performed",
    "surgical_lesion",
    "outcome",
    "lesion_type",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Categorical(String),
    Continuous(f64),
}

impl Value {
    pub fn as_label(&self) -> Option<&str> {
        match self {
            Value::Categorical(s) => Some(s),
            Value::Continuous(_) => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Continuous(x) => Some(*x),
            Value::Categorical(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Categorical(s) => f.write_str(s),
            // `{}` on f64 is the shortest representation that parses back exactly.
            Value::Continuous(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Lived,
    Died,
    Euthanized,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::Lived => "lived",
            OutcomeKind::Died => "died",
            OutcomeKind::Euthanized => "euthanized",
        }
    }
}

impl FromStr for OutcomeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "lived" => Ok(OutcomeKind::Lived),
            "died" => Ok(OutcomeKind::Died),
            "euthanized" => Ok(OutcomeKind::Euthanized),
            other => Err(format!("`{other}` is not one of lived, died, euthanized")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcomes {
    pub surgery_performed: Option<bool>,
    pub surgical_lesion: Option<bool>,
    pub outcome: Option<OutcomeKind>,
    pub lesion_type: Option<String>,
}

/// Which boolean outcome plays the role of the hypothesis H.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Hypothesis {
    #[default]
    SurgicalLesion,
    SurgeryPerformed,
    /// H holds when the recorded outcome equals the given kind.
    Outcome(OutcomeKind),
}

impl Hypothesis {
    pub fn label(&self, case: &Case) -> Option<bool> {
        match self {
            Hypothesis::SurgicalLesion => case.outcomes.surgical_lesion,
            Hypothesis::SurgeryPerformed => case.outcomes.surgery_performed,
            Hypothesis::Outcome(kind) => case.outcomes.outcome.map(|o| o == *kind),
        }
    }

    /// Human-readable name used in report headings.
    pub fn describe(&self) -> String {
        match self {
            Hypothesis::SurgicalLesion => "surgical lesion".into(),
            Hypothesis::SurgeryPerformed => "surgery performed".into(),
            Hypothesis::Outcome(kind) => format!("outcome {}", kind.as_str()),
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::SurgicalLesion => f.write_str("surgical_lesion"),
            Hypothesis::SurgeryPerformed => f.write_str("surgery_performed"),
            Hypothesis::Outcome(kind) => write!(f, "outcome={}", kind.as_str()),
        }
    }
}

impl FromStr for Hypothesis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "surgical_lesion" => Ok(Hypothesis::SurgicalLesion),
            "surgery_performed" => Ok(Hypothesis::SurgeryPerformed),
            _ => match s.strip_prefix("outcome=") {
                Some(kind) => kind
                    .parse()
                    .map(Hypothesis::Outcome)
                    .map_err(Error::InvalidArgument),
                None => Err(Error::InvalidArgument(format!(
                    "unknown hypothesis `{s}` (expected surgical_lesion, surgery_performed \
                     or outcome=<lived|died|euthanized>)"
                ))),
            },
        }
    }
}

impl Serialize for Hypothesis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Hypothesis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One patient record. `values` is aligned with the schema's attribute order.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub id: String,
    pub values: Vec<Option<Value>>,
    pub outcomes: Outcomes,
}

impl Case {
    pub fn value(&self, index: usize) -> Option<&Value> {
        self.values.get(index).and_then(Option::as_ref)
    }

    /// Listwise-deletion predicate: every named attribute is observed.
    pub fn complete_for<'a, I>(&self, schema: &Schema, attrs: I) -> Result<bool>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut complete = true;
        for name in attrs {
            let idx = schema.require(name)?;
            complete &= self.value(idx).is_some();
        }
        Ok(complete)
    }

    /// Names of attributes the case leaves missing, in schema order.
    pub fn missing_attributes<'s>(&self, schema: &'s Schema) -> Vec<&'s str> {
        schema
            .attributes()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.value(*i).is_none())
            .map(|(_, a)| a.name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    cases: Vec<Case>,
}

impl Dataset {
    pub fn new(schema: Schema, cases: Vec<Case>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for case in &cases {
            if !ids.insert(case.id.as_str()) {
                return Err(Error::CaseFile(format!("duplicate case id `{}`", case.id)));
            }
            if case.values.len() != schema.len() {
                return Err(Error::CaseFile(format!(
                    "case `{}` has {} values, schema has {} attributes",
                    case.id,
                    case.values.len(),
                    schema.len()
                )));
            }
            for (attr, value) in schema.attributes().iter().zip(&case.values) {
                if let Some(value) = value {
                    check_value(&attr.kind, value).map_err(|message| {
                        Error::CaseFile(format!(
                            "case `{}`, attribute `{}`: {message}",
                            case.id, attr.name
                        ))
                    })?;
                }
            }
        }
        Ok(Self { schema, cases })
    }

    /// Reads CSV text. Columns may appear in any order and any subset of the
    /// schema attributes and outcome columns may be present; absent columns
    /// read as missing. Without an `id` column cases are numbered from 1.
    pub fn parse_csv(text: &str, schema: &Schema) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::CaseFile(e.to_string()))?
            .clone();

        let mut columns = Vec::with_capacity(headers.len());
        let mut seen = BTreeSet::new();
        for name in headers.iter() {
            if !seen.insert(name.to_string()) {
                return Err(Error::CaseFile(format!("duplicate column `{name}`")));
            }
            let column = if name == ID_COLUMN {
                Column::Id
            } else if let Some(idx) = schema.index_of(name) {
                Column::Attribute(idx)
            } else {
                match name {
                    "surgery_performed" => Column::SurgeryPerformed,
                    "surgical_lesion" => Column::SurgicalLesion,
                    "outcome" => Column::Outcome,
                    "lesion_type" => Column::LesionType,
                    _ => return Err(Error::CaseFile(format!("unknown column `{name}`"))),
                }
            };
            columns.push(column);
        }

        let mut cases = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::CaseFile(format!("row {row}: {e}")))?;
            let mut case = Case {
                id: row.to_string(),
                values: vec![None; schema.len()],
                outcomes: Outcomes::default(),
            };
            for ((column, cell), header) in columns.iter().zip(record.iter()).zip(headers.iter()) {
                let cell_err = |message: String| Error::Cell {
                    row,
                    column: header.to_string(),
                    message,
                };
                if *column == Column::Id {
                    if cell.is_empty() || cell == MISSING_TOKEN {
                        return Err(cell_err("case id may not be missing".into()));
                    }
                    case.id = cell.to_string();
                    continue;
                }
                if cell == MISSING_TOKEN {
                    continue;
                }
                match *column {
                    Column::Attribute(idx) => {
                        let attr = &schema.attributes()[idx];
                        case.values[idx] = Some(parse_value(&attr.kind, cell).map_err(cell_err)?);
                    }
                    Column::SurgeryPerformed => {
                        case.outcomes.surgery_performed = Some(parse_bool(cell).map_err(cell_err)?)
                    }
                    Column::SurgicalLesion => {
                        case.outcomes.surgical_lesion = Some(parse_bool(cell).map_err(cell_err)?)
                    }
                    Column::Outcome => {
                        case.outcomes.outcome = Some(cell.parse().map_err(cell_err)?)
                    }
                    Column::LesionType => case.outcomes.lesion_type = Some(cell.to_string()),
                    Column::Id => unreachable!(),
                }
            }
            cases.push(case);
        }
        Self::new(schema.clone(), cases)
    }

    /// Writes every schema attribute and outcome column, `?` for missing.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec![ID_COLUMN.to_string()];
        header.extend(self.schema.attributes().iter().map(|a| a.name.clone()));
        header.extend(OUTCOME_COLUMNS.iter().map(|s| s.to_string()));
        writer.write_record(&header).expect("in-memory write");

        for case in &self.cases {
            let mut row = vec![case.id.clone()];
            row.extend(case.values.iter().map(|v| match v {
                Some(v) => v.to_string(),
                None => MISSING_TOKEN.to_string(),
            }));
            let o = &case.outcomes;
            row.push(render_opt(o.surgery_performed.map(render_bool)));
            row.push(render_opt(o.surgical_lesion.map(render_bool)));
            row.push(render_opt(o.outcome.map(OutcomeKind::as_str)));
            row.push(render_opt(o.lesion_type.as_deref()));
            writer.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn case(&self, id: &str) -> Option<&Case> {
        self.cases.iter().find(|c| c.id == id)
    }

    /// Labeled cases split as (positive, negative) counts.
    pub fn class_counts(&self, hypothesis: Hypothesis) -> (usize, usize) {
        self.cases
            .iter()
            .filter_map(|c| hypothesis.label(c))
            .fold((0, 0), |(p, n), h| if h { (p + 1, n) } else { (p, n + 1) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    Id,
    Attribute(usize),
    SurgeryPerformed,
    SurgicalLesion,
    Outcome,
    LesionType,
}

fn parse_value(kind: &AttributeKind, cell: &str) -> std::result::Result<Value, String> {
    let value = match kind {
        AttributeKind::Categorical { .. } => Value::Categorical(cell.to_string()),
        AttributeKind::Continuous { .. } => {
            let x: f64 = cell
                .parse()
                .map_err(|_| format!("`{cell}` is not a number"))?;
            Value::Continuous(x)
        }
    };
    check_value(kind, &value)?;
    Ok(value)
}

fn check_value(kind: &AttributeKind, value: &Value) -> std::result::Result<(), String> {
    match (kind, value) {
        (AttributeKind::Categorical { values }, Value::Categorical(v)) => {
            if values.iter().any(|allowed| allowed == v) {
                Ok(())
            } else {
                Err(format!("value `{v}` is not one of [{}]", values.join(", ")))
            }
        }
        (AttributeKind::Continuous { .. }, Value::Continuous(x)) => {
            if x.is_finite() {
                Ok(())
            } else {
                Err(format!("non-finite value {x}"))
            }
        }
        (AttributeKind::Categorical { .. }, Value::Continuous(_)) => {
            Err("numeric value for a categorical attribute".into())
        }
        (AttributeKind::Continuous { .. }, Value::Categorical(_)) => {
            Err("label value for a continuous attribute".into())
        }
    }
}

fn parse_bool(cell: &str) -> std::result::Result<bool, String> {
    match cell.to_ascii_lowercase().as_str() {
        "yes" | "true" | "1" => Ok(true),
        "no" | "false" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean (yes/no)")),
    }
}

fn render_bool(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn render_opt(v: Option<&str>) -> String {
    v.unwrap_or(MISSING_TOKEN).to_string()
}
