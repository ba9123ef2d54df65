//! Configuration, built-in benchmark cases, error norms, and the run
//! driver behind the command-line interface.

pub mod cases;
pub mod config;
pub mod driver;
pub mod norms;

pub use cases::{builtin_case, CaseSetup};
pub use config::{CaseName, RunConfig};
pub use driver::{convergence_ladder, format_ladder, run, RunOutput};
pub use norms::{eoc, l2_error};
