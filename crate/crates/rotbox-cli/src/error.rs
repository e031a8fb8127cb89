use rotbox::bell::BellError;
use rotbox::fejer::FejerError;
use rotbox::fixtures::FixtureError;
use rotbox::games::GamesError;
use rotbox::gpt::GptError;
use rotbox::qset::QsetError;
use rotbox::rset::RsetError;
use rotbox::sdp::SdpError;
use rotbox::trigpoly::TrigPolyError;

/// Everything that stops a command before it can report a verdict.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// The input itself is outside the set being asked about.
    #[error("{0}")]
    Rejected(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Rejected(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("bad JSON: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Numerical(format!("csv output: {e}"))
    }
}

impl From<TrigPolyError> for CliError {
    fn from(e: TrigPolyError) -> Self {
        match e {
            TrigPolyError::QuadratureNonConvergence { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<SdpError> for CliError {
    fn from(e: SdpError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<RsetError> for CliError {
    fn from(e: RsetError) -> Self {
        match e {
            RsetError::Solver(_) | RsetError::Sdp(_) => CliError::Numerical(e.to_string()),
            RsetError::NormalizationViolation(_) => CliError::Rejected(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<QsetError> for CliError {
    fn from(e: QsetError) -> Self {
        match e {
            QsetError::Solver(_) | QsetError::Sdp(_) | QsetError::NonMonotone { .. } => {
                CliError::Numerical(e.to_string())
            }
            QsetError::TrigPoly(inner) => inner.into(),
            QsetError::NotExtremalForm(_) | QsetError::EmptyFace(_) => CliError::Rejected(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<FejerError> for CliError {
    fn from(e: FejerError) -> Self {
        match e {
            FejerError::NotNonnegative { .. } => CliError::Rejected(e.to_string()),
            FejerError::RootPairingFailure(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<GamesError> for CliError {
    fn from(e: GamesError) -> Self {
        match e {
            GamesError::NotMember => CliError::Rejected(e.to_string()),
            GamesError::Rset(inner) => inner.into(),
            GamesError::Qset(inner) => inner.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<BellError> for CliError {
    fn from(e: BellError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<GptError> for CliError {
    fn from(e: GptError) -> Self {
        match e {
            GptError::Rset(inner) => inner.into(),
            GptError::Residual { .. } => CliError::Numerical(e.to_string()),
            GptError::NotInRJA => CliError::Rejected(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<FixtureError> for CliError {
    fn from(e: FixtureError) -> Self {
        CliError::Usage(e.to_string())
    }
}
