//! Performance captor and measurements collector.
//!
//! Workers stamp each CCDU at five points and hand a [`KpiRecord`] to a
//! [`Captor`]; a collector thread drains them off the hot path. Summaries and
//! CSV export run after the fact.

mod captor;
mod export;
mod summary;

use std::fmt;
use std::str::FromStr;

pub use captor::{start_collector, Captor, CaptureCounts, Collected, Collector};
pub use export::{
    export_records, export_summary, parse_records, read_records, write_records, RECORD_COLUMNS,
};
pub use summary::{relative_gain, summarize, DelayStats, GroupSummary, KpiSummary};

use crate::scheduler::{Direction, Granularity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    DecodeFailure,
    /// Removed from the queue without running.
    Purged,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::DecodeFailure => "decode_failure",
            Outcome::Purged => "purged",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "success" => Ok(Outcome::Success),
            "decode_failure" => Ok(Outcome::DecodeFailure),
            "purged" => Ok(Outcome::Purged),
            other => Err(format!("unknown outcome {other:?}")),
        }
    }
}

/// Timing and outcome of one CCDU. Timestamps are monotonic nanoseconds
/// since the start of the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KpiRecord {
    pub ccdu_id: u64,
    pub subframe: u64,
    /// `None` for a whole-subframe CCDU.
    pub ue: Option<u32>,
    /// Set only at code-block granularity.
    pub cb_index: Option<u32>,
    pub granularity: Granularity,
    pub direction: Direction,
    pub t_enqueue: u64,
    /// Picked up by a worker.
    pub t_start: u64,
    /// Conditioning done, coding begins.
    pub t_code_start: u64,
    pub t_code_end: u64,
    pub t_end: u64,
    /// Largest decoder iteration count over the CCDU's code blocks.
    pub iterations: u32,
    pub code_blocks: u32,
    /// Transport blocks carried by this CCDU (0 or 1 at CB granularity).
    pub tb_total: u32,
    /// Of those, how many failed to decode.
    pub tb_failed: u32,
    pub worker: Option<u32>,
    pub outcome: Outcome,
}

impl KpiRecord {
    pub fn queue_wait(&self) -> u64 {
        self.t_start - self.t_enqueue
    }

    pub fn conditioning(&self) -> u64 {
        self.t_code_start - self.t_start
    }

    /// Queue wait plus conditioning.
    pub fn pre_processing(&self) -> u64 {
        self.t_code_start - self.t_enqueue
    }

    pub fn coding(&self) -> u64 {
        self.t_code_end - self.t_code_start
    }

    pub fn post_processing(&self) -> u64 {
        self.t_end - self.t_code_end
    }

    pub fn timestamps_monotone(&self) -> bool {
        self.t_enqueue <= self.t_start
            && self.t_start <= self.t_code_start
            && self.t_code_start <= self.t_code_end
            && self.t_code_end <= self.t_end
    }

    pub fn validate(&self, max_iterations: u32) -> Result<(), String> {
        if !self.timestamps_monotone() {
            return Err(format!("CCDU {}: timestamps not monotone", self.ccdu_id));
        }
        if self.iterations > max_iterations {
            return Err(format!(
                "CCDU {}: {} iterations exceeds limit {max_iterations}",
                self.ccdu_id, self.iterations
            ));
        }
        if self.outcome == Outcome::DecodeFailure && self.iterations != max_iterations {
            return Err(format!(
                "CCDU {}: decode failure after {} of {max_iterations} iterations",
                self.ccdu_id, self.iterations
            ));
        }
        if (self.cb_index.is_some()) != (self.granularity == Granularity::Cb) {
            return Err(format!(
                "CCDU {}: cb_index present iff CB granularity",
                self.ccdu_id
            ));
        }
        if self.tb_failed > self.tb_total {
            return Err(format!(
                "CCDU {}: more failed TBs than carried",
                self.ccdu_id
            ));
        }
        Ok(())
    }
}
