use std::fmt;

use fwm_core::atomic::AtomicError;
use fwm_core::photon::PhotonError;
use fwm_core::tomography::TomographyError;

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;
pub const EXIT_UNSORTED: i32 = 5;
pub const EXIT_OPTIMIZER: i32 = 6;

/// An error message with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(EXIT_VALIDATION, message)
    }

    pub fn io(context: impl fmt::Display, e: std::io::Error) -> Self {
        Self::new(EXIT_OTHER, format!("{context}: {e}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<AtomicError> for Failure {
    fn from(e: AtomicError) -> Self {
        let code = match e {
            AtomicError::NoUniqueSteadyState { .. } | AtomicError::AtVelocity { .. } => EXIT_SOLVER,
            _ => EXIT_VALIDATION,
        };
        Self::new(code, e.to_string())
    }
}

impl From<PhotonError> for Failure {
    fn from(e: PhotonError) -> Self {
        let code = match e {
            PhotonError::CapacityExceeded { .. } => EXIT_CAPACITY,
            PhotonError::UnsortedStream { .. } => EXIT_UNSORTED,
            PhotonError::Io(_) => EXIT_OTHER,
            _ => EXIT_VALIDATION,
        };
        Self::new(code, e.to_string())
    }
}

impl From<TomographyError> for Failure {
    fn from(e: TomographyError) -> Self {
        let code = match e {
            TomographyError::OptimizerFailed { .. } => EXIT_OPTIMIZER,
            TomographyError::Io(_) => EXIT_OTHER,
            _ => EXIT_VALIDATION,
        };
        Self::new(code, e.to_string())
    }
}
