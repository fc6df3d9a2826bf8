use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed schema or knowledge-base text.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid schema: {0}")]
    Schema(String),

    /// A case-file cell failed validation. `row` is the 1-based data row.
    #[error("case file row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("case file: {0}")]
    CaseFile(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("undefined weight: {0}")]
    UndefinedWeight(String),

    #[error("degenerate fuzzy event `{0}`: no admissible alpha on the grid")]
    DegenerateFuzzyEvent(String),

    #[error("degenerate hypothesis: {0}")]
    DegenerateHypothesis(String),

    #[error("schema digest mismatch: knowledge base expects {expected}, got {found}")]
    SchemaDigestMismatch { expected: String, found: String },

    #[error("invalid knowledge base: {0}")]
    KnowledgeBase(String),

    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
