use std::fmt;

/// CLI failure classes with their exit codes. Every failure prints one
/// machine-readable line `error<TAB><kind><TAB><message>` on stderr.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config (exit 2).
    Usage(String),
    /// Malformed or inconsistent input data (exit 3).
    Data(String),
    /// A model or math contract was violated (exit 4).
    Contract(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Contract(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Contract(_) => "contract",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Contract(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<moldiff_core::selfies::VocabularyError> for CliError {
    fn from(e: moldiff_core::selfies::VocabularyError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<moldiff_core::selfies::SelfiesError> for CliError {
    fn from(e: moldiff_core::selfies::SelfiesError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<moldiff_core::dataprep::DataprepError> for CliError {
    fn from(e: moldiff_core::dataprep::DataprepError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<moldiff_core::peplink::PeplinkError> for CliError {
    fn from(e: moldiff_core::peplink::PeplinkError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<moldiff_core::denoiser::DenoiserError> for CliError {
    fn from(e: moldiff_core::denoiser::DenoiserError) -> Self {
        use moldiff_core::denoiser::DenoiserError as E;
        match e {
            E::MaskLeak(_) | E::CopyThroughViolation(_) | E::DivergenceDetected(_) => {
                CliError::Contract(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<moldiff_core::diffusion::DiffusionError> for CliError {
    fn from(e: moldiff_core::diffusion::DiffusionError) -> Self {
        CliError::Contract(e.to_string())
    }
}

impl From<moldiff_core::guidance::GuidanceError> for CliError {
    fn from(e: moldiff_core::guidance::GuidanceError) -> Self {
        CliError::Contract(e.to_string())
    }
}

impl From<moldiff_core::sampler::SamplerError> for CliError {
    fn from(e: moldiff_core::sampler::SamplerError) -> Self {
        CliError::Contract(e.to_string())
    }
}

impl From<moldiff_core::fusion::FusionError> for CliError {
    fn from(e: moldiff_core::fusion::FusionError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<toml::de::Error> for CliError {
    fn from(e: toml::de::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}
