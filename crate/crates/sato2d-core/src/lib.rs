//! Exact-arithmetic workbench for truncated two-variable operator calculus.
//!
//! The crate implements, over Q or a quadratic extension Q(alpha):
//!
//! * truncated power series in `x1, x2` with the M-adic order (`series`),
//! * the noncommutative algebra of truncated operators in `d1, d2` with
//!   Laurent tails in `d2^-1`, bi-orders, growth conditions and conjugation
//!   (`opalg`, `zseries`),
//! * the `k[[u]]((t))` picture: rank-two valuations, filtration dimension
//!   tables, Hilbert-growth fitting and GCD invariants (`localfield`),
//! * dressing-operator solving and both directions of the ring <->
//!   Schur-pair dictionary, Darboux transforms, triviality tests (`schur`),
//! * Laurent expansion of rational symbols and membership tests (`ratexp`),
//! * built-in worked examples on nodal and cuspidal spectral curves
//!   (`catalog`).
//!
//! Everything is computed exactly inside an explicitly tracked quotient
//! (x-precision, `d1` degree cap, `d2` exponent window); verdicts that depend
//! on the window say so.
#![no_std]

extern crate alloc;

pub mod catalog;
pub mod error;
pub mod field;
pub mod localfield;
pub mod opalg;
pub mod ratexp;
pub mod schur;
pub mod series;
pub mod zseries;

pub use error::{Error, Result};
pub use field::{KElem, KField, Rat};
pub use opalg::{BiOrd, EOp, Trunc};
pub use series::XSeries;
pub use zseries::ZSeries;
