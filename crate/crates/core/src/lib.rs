//! OpenMP-annotated C to HMPP source-to-source translation, transfer
//! placement analysis and variant exploration.

pub mod cfront;
pub mod context;
pub mod emit;
pub mod error;
pub mod explore;
pub mod report;
pub mod sim;
pub mod transform;
pub mod variants;

pub use error::{Diagnostic, Error, Pos, Result, Severity};
