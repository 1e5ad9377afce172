use std::fmt;

use thiserror::Error;

/// A source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unsupported construct: {construct}")]
    Unsupported { pos: Pos, construct: String },
    #[error("{pos}: pragma is not followed by a statement")]
    DanglingPragma { pos: Pos },
    #[error("{pos}: malformed pragma: {msg}")]
    Pragma { pos: Pos, msg: String },
    #[error("{pos}: undeclared identifier `{name}`")]
    Undeclared { pos: Pos, name: String },
    #[error("{pos}: {msg}")]
    Transform { pos: Pos, msg: String },
    #[error("recursive call chain through `{0}` cannot be inlined")]
    Recursion(String),
    #[error("invalid signature ({a}, {b}, {c}): {rule}")]
    InvalidSignature { a: u32, b: u32, c: u32, rule: String },
    #[error("invalid flag set: {0}")]
    InvalidFlags(String),
    #[error("{count} variants exceed the cap of {cap}; pin blocks with fixed(a,b,c) to explore a smaller space")]
    VariantCap { count: usize, cap: usize },
    #[error("plan error: {0}")]
    Plan(String),
    #[error("unsound transfer plan: {0}")]
    Unsound(String),
    #[error("invalid cost model: {0}")]
    CostModel(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Position of the error in the source, when it has one.
    pub fn pos(&self) -> Option<Pos> {
        match self {
            Error::Syntax { pos, .. }
            | Error::Unsupported { pos, .. }
            | Error::DanglingPragma { pos }
            | Error::Pragma { pos, .. }
            | Error::Undeclared { pos, .. }
            | Error::Transform { pos, .. } => Some(*pos),
            _ => None,
        }
    }

    /// Message without the position prefix.
    pub fn message(&self) -> String {
        match self {
            Error::Syntax { msg, .. } => format!("syntax error: {msg}"),
            Error::Unsupported { construct, .. } => format!("unsupported construct: {construct}"),
            Error::DanglingPragma { .. } => "pragma is not followed by a statement".to_string(),
            Error::Pragma { msg, .. } => format!("malformed pragma: {msg}"),
            Error::Undeclared { name, .. } => format!("undeclared identifier `{name}`"),
            Error::Transform { msg, .. } => msg.clone(),
            other => other.to_string(),
        }
    }

    /// Render as `file:line:col: message`.
    pub fn render(&self, file: &str) -> String {
        match self.pos() {
            Some(p) => format!("{file}:{}:{}: {}", p.line, p.col, self.message()),
            None => format!("{file}: {}", self.message()),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Warning,
    Error,
}

/// Non-fatal finding reported by analyses.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub pos: Pos,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn warning(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { pos, severity: Severity::Warning, message: message.into() }
    }

    pub fn error(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { pos, severity: Severity::Error, message: message.into() }
    }

    pub fn render(&self, file: &str) -> String {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        format!("{file}:{}:{}: {sev}: {}", self.pos.line, self.pos.col, self.message)
    }
}
