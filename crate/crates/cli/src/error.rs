use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{field}`{}: {message}", location(*line, *column))]
    Config {
        field: String,
        message: String,
        line: Option<usize>,
        column: Option<usize>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] qcmod::QcError),
}

fn location(line: Option<usize>, column: Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(" (line {l}, column {c})"),
        (Some(l), None) => format!(" (line {l})"),
        _ => String::new(),
    }
}
