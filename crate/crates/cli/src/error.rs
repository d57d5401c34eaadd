use std::fmt;

/// Failure classes, each with its own exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Rejected configuration or arguments (exit 2).
    Config(String),
    /// A numerical procedure failed (exit 3).
    Numerical(String),
    /// Writing outputs failed (exit 1).
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    /// `error kind=<kind> message=<text>` on a single line.
    pub fn diagnostic(&self) -> String {
        let msg = match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        };
        let flat: String = msg.split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error kind={} message={flat}", self.kind())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.diagnostic())
    }
}

impl From<sohkit::Error> for CliError {
    fn from(e: sohkit::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagnostics_are_single_line() {
        let e = CliError::config("bad\nvalue  here");
        assert_eq!(e.diagnostic(), "error kind=config message=bad value here");
        assert_eq!(e.exit_code(), 2);
        let n: CliError = sohkit::Error::NoConvergence("x".into()).into();
        assert_eq!(n.exit_code(), 3);
        let c: CliError = sohkit::Error::InvalidInput("x".into()).into();
        assert_eq!(c.exit_code(), 2);
    }
}
