use psychoprobe_collector::CollectorError;
use psychoprobe_core::jsonl::JsonlError;
use psychoprobe_core::questionnaire::QuestionnaireError;
use psychoprobe_core::report::ReportError;
use psychoprobe_core::scoring::ScoringError;
use thiserror::Error;

/// Failure classes and their process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or input content (exit 1).
    #[error("{0}")]
    Validation(String),
    /// Unreadable or unwritable files, unreachable endpoints (exit 2).
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<JsonlError> for CliError {
    fn from(e: JsonlError) -> Self {
        match e {
            JsonlError::Io { .. } => CliError::Io(e.to_string()),
            JsonlError::SchemaViolation { .. } => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Io { .. } => CliError::Io(e.to_string()),
            ReportError::NoCases => CliError::Validation("no valid cases".into()),
            ReportError::Json { .. } => CliError::Validation(e.to_string()),
        }
    }
}

impl From<QuestionnaireError> for CliError {
    fn from(e: QuestionnaireError) -> Self {
        match e {
            QuestionnaireError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<CollectorError> for CliError {
    fn from(e: CollectorError) -> Self {
        match e {
            CollectorError::EndpointUnreachable { .. } | CollectorError::Client(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
