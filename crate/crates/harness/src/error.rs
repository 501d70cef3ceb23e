use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("unknown method `{name}`; valid methods: {valid}")]
    UnknownMethod { name: String, valid: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("seed {seed} failed")]
    Seed {
        seed: u64,
        #[source]
        source: imbmix::Error,
    },
    #[error("{failed} of {total} seeds failed; completed records kept in {dir}")]
    PartialRun {
        failed: usize,
        total: usize,
        dir: PathBuf,
    },
    #[error("tables describe different datasets: {0}")]
    DatasetMismatch(String),
    #[error("need at least {needed} records with a margin gap, found {found}")]
    TooFewRecords { needed: usize, found: usize },
    #[error("cannot access {path}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("bad glob pattern: {0}")]
    Pattern(#[from] glob::PatternError),
    #[error(transparent)]
    Core(#[from] imbmix::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
