//! Frontend for the exact operator-calculus engine: expression parsing,
//! canonical printing round trips, CLI dispatch and structured reports.

pub mod cli;
pub mod parser;
pub mod report;
