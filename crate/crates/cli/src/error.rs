use std::fmt;
use std::path::Path;

use sensornoise::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CALIBRATION: i32 = 4;

/// A failure carrying its exit status and a short machine-readable kind.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    pub path: Option<String>,
    pub field: Option<String>,
}

impl CliError {
    pub fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            kind,
            message: message.into(),
            path: None,
            field: None,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, "usage", message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(EXIT_DATA, "data", message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        let mut e = Self::new(EXIT_DATA, "io", err.to_string());
        e.path = Some(path.display().to_string());
        e
    }

    /// Map a library error; fit failures count as calibration failures only
    /// inside `calibrate`.
    pub fn from_lib(err: Error, calibrating: bool) -> Self {
        let fit_code = if calibrating { EXIT_CALIBRATION } else { EXIT_DATA };
        match err {
            Error::Format { path, field, message } => Self {
                code: EXIT_DATA,
                kind: "format",
                message,
                path: Some(path.display().to_string()),
                field: Some(field),
            },
            Error::Io { path, source } => Self::io(&path, source),
            Error::Config(m) => Self::new(EXIT_USAGE, "config", m),
            Error::Domain(m) => Self::new(EXIT_DATA, "domain", m),
            Error::Shape(m) => Self::new(EXIT_DATA, "shape", m),
            Error::InsufficientData(m) => Self::new(fit_code, "insufficient_data", m),
            Error::Degenerate(m) => Self::new(fit_code, "degenerate", m),
            Error::CalibrationFailure(m) => Self::new(EXIT_CALIBRATION, "calibration_failure", m),
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json_line(&self) -> String {
        let mut obj = serde_json::Map::new();
        obj.insert("error".into(), self.kind.into());
        obj.insert("code".into(), self.code.into());
        obj.insert("message".into(), self.message.clone().into());
        if let Some(p) = &self.path {
            obj.insert("path".into(), p.clone().into());
        }
        if let Some(f) = &self.field {
            obj.insert("field".into(), f.clone().into());
        }
        serde_json::Value::Object(obj).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// `?`-friendly conversion for library results outside calibration.
pub trait LibResultExt<T> {
    fn data_err(self) -> CliResult<T>;
    fn calib_err(self) -> CliResult<T>;
}

impl<T> LibResultExt<T> for sensornoise::Result<T> {
    fn data_err(self) -> CliResult<T> {
        self.map_err(|e| CliError::from_lib(e, false))
    }

    fn calib_err(self) -> CliResult<T> {
        self.map_err(|e| CliError::from_lib(e, true))
    }
}
