//! Orchestration shared by the command-line tool and the acceptance tests:
//! exact runs, ratio reports, parameter sweeps and the verification suites.

mod config;
mod report;
mod run;
mod sweep;
mod verify;

pub use config::{OutputFormat, SweepConfig};
pub use report::{ratio_report, RatioHeader, RatioReport, RatioRequest, RatioRow, XRule, MIN_TAIL};
pub use run::{compute_exact, window_mean, CapRule, ExactMethod, ExactRun};
pub use sweep::{run_sweep, write_sweep, PointStatus, PointSummary, SweepOutcome, SweepSummary};
pub use verify::{verify_lemmas, Grid, SuiteResult, VerifyOptions, VerifyReport, SUITES};
