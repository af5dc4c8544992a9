use std::fmt;

/// Failure classes, one per exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    NonConvergence(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Numerical(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::NonConvergence(m) | CliError::Numerical(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<vpid::Error> for CliError {
    fn from(e: vpid::Error) -> Self {
        use vpid::Error::*;
        let msg = e.to_string();
        match e {
            DegenerateData(_) | DimensionMismatch { .. } | InsufficientData { .. } => CliError::Data(msg),
            InvalidParameter(_)
            | InvalidProgram(_)
            | InvalidTimeGrid(_)
            | OutOfRange { .. }
            | UnsupportedModel(_)
            | ZeroReferenceParameter { .. } => CliError::Config(msg),
            NonPositiveDeterminant(_)
            | SingularTensor
            | NonPositiveDefinite
            | StepFailure { .. }
            | FactorizationFailure(_)
            | NonFiniteResidual
            | NonFiniteJacobian
            | SingularNormalMatrix(_) => CliError::Numerical(msg),
        }
    }
}

/// Output files that cannot be written count as a configuration problem
/// (the output directory is part of the configuration).
pub fn output_error(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Config(format!("output_dir: cannot write {}: {e}", path.display()))
}
