//! Deterministic discrete-event simulation of a fleet on a lossy broadcast
//! medium, with scripted adversaries.
//!
//! One logical clock (milliseconds) drives every module's trusted clock at
//! whole-second resolution. Every frame is offered to every other honest
//! vehicle with an independent drop and a uniform latency; each link
//! delivers in send order. Identical scenarios produce byte-identical event
//! logs.

mod engine;
mod report;
mod scenario;

use std::fs;
use std::io;
use std::path::Path;

pub use engine::{run, RunOutput};
pub use report::{
    AdversaryStats, HonestStats, LogRecord, MediumStats, RunReport, SizeStats, Sizes,
    VehicleCounters,
};
pub use scenario::{Adversary, Medium, Protocol, Scenario, ScenarioError, Traffic};

/// File names written by [`RunOutput::write_to`].
pub const EVENTS_FILE: &str = "events.ndjson";
pub const REPORT_FILE: &str = "report.toml";
pub const COUNTERS_FILE: &str = "counters.csv";

impl RunOutput {
    /// Writes the event log, report and counters into `dir`, creating it.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(EVENTS_FILE), &self.events)?;
        fs::write(dir.join(REPORT_FILE), self.report.to_toml())?;
        fs::write(dir.join(COUNTERS_FILE), self.report.counters_csv())
    }
}
