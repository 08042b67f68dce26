use zeno_core::Error;

/// Exit codes: 2 is clap's usage error; the rest are assigned here.
pub mod code {
    pub const IO: i32 = 3;
    pub const PARSE: i32 = 4;
    pub const PARAMETER: i32 = 5;
    pub const NUMERICAL: i32 = 6;
    pub const INTERNAL: i32 = 70;
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub msg: String,
}

impl CliError {
    pub fn io(msg: impl Into<String>) -> Self {
        Self { code: code::IO, msg: msg.into() }
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Self { code: code::PARSE, msg: msg.into() }
    }

    pub fn param(msg: impl Into<String>) -> Self {
        Self { code: code::PARAMETER, msg: msg.into() }
    }

    pub fn internal(msg: impl std::fmt::Display) -> Self {
        Self { code: code::INTERNAL, msg: msg.to_string() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => code::IO,
            Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => code::PARSE,
            Error::InvalidParameter(_)
            | Error::InvalidInstance(_)
            | Error::GapTooSmall { .. }
            | Error::Generation(_) => code::PARAMETER,
            Error::Spectral { .. }
            | Error::GroundspaceMismatch(..)
            | Error::TraceDrift { .. }
            | Error::CorruptState(_)
            | Error::FixedPoint { .. }
            | Error::NonFinite(_) => code::NUMERICAL,
        };
        Self { code, msg: e.to_string() }
    }
}
