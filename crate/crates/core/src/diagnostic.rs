//! Model diagnostics shared by construction-time checks and the validator.

use std::fmt;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
        })
    }
}

/// Closed set of diagnostic codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Code {
    #[serde(rename = "CYCLE")]
    Cycle,
    #[serde(rename = "ISOLATED")]
    Isolated,
    #[serde(rename = "DUP_CARD")]
    DupCard,
    #[serde(rename = "CARD_RANGE")]
    CardRange,
    #[serde(rename = "MISSING_ROOT")]
    MissingRoot,
    #[serde(rename = "UNKNOWN_ID")]
    UnknownId,
    #[serde(rename = "DUP_FEATURE")]
    DupFeature,
    #[serde(rename = "SELF_CONSTRAINT")]
    SelfConstraint,
    #[serde(rename = "CONTRA_REQ_MUTEX")]
    ContraReqMutex,
    #[serde(rename = "MUTEX_MANDATORY")]
    MutexMandatory,
    #[serde(rename = "FALSE_OPTIONAL")]
    FalseOptional,
    #[serde(rename = "REQUIRES_SELF_ANCESTOR")]
    RequiresSelfAncestor,
    #[serde(rename = "DEAD_FEATURE")]
    DeadFeature,
    #[serde(rename = "UNSAT_MODEL")]
    UnsatModel,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Cycle => "CYCLE",
            Code::Isolated => "ISOLATED",
            Code::DupCard => "DUP_CARD",
            Code::CardRange => "CARD_RANGE",
            Code::MissingRoot => "MISSING_ROOT",
            Code::UnknownId => "UNKNOWN_ID",
            Code::DupFeature => "DUP_FEATURE",
            Code::SelfConstraint => "SELF_CONSTRAINT",
            Code::ContraReqMutex => "CONTRA_REQ_MUTEX",
            Code::MutexMandatory => "MUTEX_MANDATORY",
            Code::FalseOptional => "FALSE_OPTIONAL",
            Code::RequiresSelfAncestor => "REQUIRES_SELF_ANCESTOR",
            Code::DeadFeature => "DEAD_FEATURE",
            Code::UnsatModel => "UNSAT_MODEL",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            Code::FalseOptional | Code::RequiresSelfAncestor | Code::DeadFeature => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    /// Model elements concerned: feature ids, or a group id for group-level codes.
    pub subject: Vec<String>,
    pub message: String,
    /// 1-based source line, when the model came from a document.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    /// Declaration positions of the subject, for canonical ordering.
    #[serde(skip)]
    pub(crate) order: Vec<usize>,
}

impl Diagnostic {
    pub fn new(code: Code, subject: Vec<String>, message: impl Into<String>) -> Self {
        Diagnostic { severity: code.severity(), code, subject, message: message.into(), line: None, order: Vec::new() }
    }

    pub(crate) fn at(mut self, line: Option<usize>) -> Self {
        self.line = line;
        self
    }

    pub(crate) fn ordered(mut self, order: Vec<usize>) -> Self {
        self.order = order;
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.severity, self.code)?;
        for s in &self.subject {
            write!(f, " {s}")?;
        }
        write!(f, " : {}", self.message)
    }
}

/// Sorts by (code, subject declaration order) and drops exact repeats of
/// (code, subject), keeping the first.
pub fn canonicalize(diagnostics: &mut Vec<Diagnostic>) {
    diagnostics.sort_by(|x, y| {
        x.code.as_str().cmp(y.code.as_str()).then_with(|| x.order.cmp(&y.order)).then_with(|| x.subject.cmp(&y.subject))
    });
    diagnostics.dedup_by(|later, earlier| later.code == earlier.code && later.subject == earlier.subject);
}
