use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// Each variant has a stable name (see [`Error::name`]) that the CLI prints
/// as `error[<name>]: ...`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed schema: {0}")]
    SchemaFormat(String),

    #[error("no join path connects tables {tables:?}")]
    NoJoinPath { tables: Vec<String> },

    #[error("SemQL syntax error at offset {offset}: {message}")]
    SemQlSyntax { offset: usize, message: String },

    #[error("action #{index} is not applicable: {message}")]
    IllegalAction { index: usize, message: String },

    #[error("derivation incomplete: {pending} frontier node(s) left unexpanded")]
    IncompleteDerivation { pending: usize },

    #[error("action text line {line}: {message}")]
    ActionSyntax { line: usize, message: String },

    #[error("SQL syntax error at offset {offset}: {message}")]
    SqlSyntax { offset: usize, message: String },

    #[error("cannot resolve {0}")]
    Resolution(String),

    #[error("unsupported SQL: {0}")]
    UnsupportedSql(String),

    #[error("cannot assign a table to `*`: candidates {candidates:?}")]
    StarAmbiguity { candidates: Vec<String> },

    #[error("table `{0}` has no primary key to group by")]
    MissingPrimaryKey(String),

    #[error("invalid SemQL tree: {0}")]
    InvalidTree(String),

    #[error("knowledge source: {0}")]
    KnowledgeSource(String),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::SchemaFormat(_) => "SchemaFormatError",
            Error::NoJoinPath { .. } => "NoJoinPathError",
            Error::SemQlSyntax { .. } => "SemQLSyntaxError",
            Error::IllegalAction { .. } => "IllegalActionError",
            Error::IncompleteDerivation { .. } => "IncompleteDerivationError",
            Error::ActionSyntax { .. } => "ActionSyntaxError",
            Error::SqlSyntax { .. } => "SqlSyntaxError",
            Error::Resolution(_) => "ResolutionError",
            Error::UnsupportedSql(_) => "UnsupportedSqlError",
            Error::StarAmbiguity { .. } => "StarAmbiguityError",
            Error::MissingPrimaryKey(_) => "MissingPrimaryKeyError",
            Error::InvalidTree(_) => "InvalidTreeError",
            Error::KnowledgeSource(_) => "KnowledgeSourceError",
        }
    }
}
