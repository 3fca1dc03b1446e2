//! Error type shared by all engine modules.

use alloc::string::String;
use core::fmt;

/// Errors surfaced by the exact engine.
///
/// Every computation is exact inside a stated quotient; errors report either
/// a domain violation (division by zero, non-unit head) or loss of the
/// quotient itself (insufficient precision, exhausted window).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Operands belong to sessions with different extension constants.
    FieldMismatch,
    /// Inversion of zero.
    DivisionByZero,
    /// The requested extension constant is a rational square (or zero).
    SquareExtension(String),
    /// Inversion of a non-unit (zero constant term / non-invertible head).
    NonUnit(String),
    /// An operation ran out of tracked x-precision; names the chain.
    InsufficientPrecision(String),
    /// Argument outside the operation's domain (e.g. exp of a unit).
    Domain(String),
    /// A verdict could not be certified inside the current window.
    Indeterminate(String),
    /// The truncation window is too small; reports the required bound.
    WindowExhausted(String),
    /// Operator malformed for the requested order computation.
    Malformed(String),
    /// The admissible-basis staircase has a gap at the named position.
    NotAOneSpace(String),
    /// The dressing system is inconsistent: the space is not of dressed form.
    NotRealizable(String),
    /// Pair normalization hit an obstruction; carries the witness.
    NotNormalizable(String),
    /// No eventually-constant second difference in the dimension table.
    NoFit(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::FieldMismatch => write!(f, "mismatched extension constants"),
            Error::DivisionByZero => write!(f, "division by zero"),
            Error::SquareExtension(d) => write!(f, "extension constant {d} is a rational square"),
            Error::NonUnit(w) => write!(f, "not a unit: {w}"),
            Error::InsufficientPrecision(w) => write!(f, "insufficient precision: {w}"),
            Error::Domain(w) => write!(f, "domain error: {w}"),
            Error::Indeterminate(w) => write!(f, "indeterminate within window: {w}"),
            Error::WindowExhausted(w) => write!(f, "window exhausted: {w}"),
            Error::Malformed(w) => write!(f, "malformed operator: {w}"),
            Error::NotAOneSpace(w) => write!(f, "not a 1-space: {w}"),
            Error::NotRealizable(w) => write!(f, "not realizable: {w}"),
            Error::NotNormalizable(w) => write!(f, "not normalizable: {w}"),
            Error::NoFit(w) => write!(f, "no fit: {w}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
