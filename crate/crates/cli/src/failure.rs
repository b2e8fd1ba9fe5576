use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] microevo::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 config, 3 numerical guard, 4 I/O.
    pub fn exit_code(&self) -> u8 {
        use microevo::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                E::Io { .. } | E::BadMagic(_) | E::Unsupported { .. } | E::TruncatedPayload { .. } => 4,
                E::Numerical(_) => 3,
                E::Shape(_) | E::InvalidParams(_) | E::Manifest(_) | E::Precondition(_) => 2,
            },
        }
    }

    pub fn into_exit(self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(microevo::Error::Numerical("x".into())).exit_code(), 3);
        assert_eq!(CliError::Core(microevo::Error::InvalidParams("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(microevo::Error::BadMagic("p".into())).exit_code(), 4);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(CliError::io("p", io).exit_code(), 4);
    }
}
