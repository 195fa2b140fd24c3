//! Run harness behind the command-line tool: correction-factor sweeps,
//! the interpolated GMI table, and coded BER over a fading channel.

pub mod ber;
pub mod cli;
pub mod gmi_table;
pub mod output;
pub mod sweep;

pub use ber::{run_ber, BerConfig, BerResult, BerRow, InterferenceModel, LlrMode};
pub use gmi_table::{GmiTable, GmiTableSpec};
pub use sweep::{run_alpha_sweep, SweepConfig, SweepRow};
