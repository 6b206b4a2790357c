use spike_core::SpikeError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("ingestion error: {0}")]
    Ingestion(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    /// Process exit code: 2 configuration, 3 ingestion (and file i/o), 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Ingestion(_) | HarnessError::Io { .. } => 3,
            HarnessError::Numeric(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<SpikeError> for HarnessError {
    fn from(e: SpikeError) -> Self {
        match e {
            SpikeError::Configuration(m) => HarnessError::Config(m),
            SpikeError::DimensionMismatch { .. } => HarnessError::Config(e.to_string()),
            SpikeError::InvalidData(m) => HarnessError::Ingestion(m),
            SpikeError::Numeric(m) => HarnessError::Numeric(m),
            SpikeError::DegenerateSpike { .. } => HarnessError::Numeric(e.to_string()),
        }
    }
}
