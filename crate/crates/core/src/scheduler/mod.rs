//! Thread pool for channel-coding jobs.
//!
//! A producer cuts each subframe into CCDUs (channel-coding data units) at
//! subframe, TB or CB granularity and appends them to one FIFO [`JobQueue`].
//! A dispatcher thread hands the head of the queue to the next free worker,
//! which runs it to completion. A decode failure purges the queued siblings
//! of the failed transport block.

mod affinity;
mod pool;
mod queue;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::codec::DEFAULT_MAX_ITERATIONS;
use crate::codec::{
    CodeBlock, CodecError, LlrBlock, TbKey, TbLayout, TransportBlock, DEFAULT_MAX_CODE_BLOCKS,
};

pub use pool::{Pool, PoolStats, SubframeReport, TbReport, TbStatus};
pub use queue::JobQueue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Granularity {
    Subframe,
    Tb,
    Cb,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Subframe => "subframe",
            Granularity::Tb => "tb",
            Granularity::Cb => "cb",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "subframe" => Ok(Granularity::Subframe),
            "tb" => Ok(Granularity::Tb),
            "cb" => Ok(Granularity::Cb),
            other => Err(format!("unknown granularity {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Encode,
    Decode,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Encode => "encode",
            Direction::Decode => "decode",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "encode" => Ok(Direction::Encode),
            "decode" => Ok(Direction::Decode),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

/// How a subframe is cut into CCDUs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ParallelismMode {
    /// One CCDU per subframe.
    #[default]
    None,
    /// One CCDU per transport block.
    Tb,
    /// One CCDU per code block for TBs that need more than one; one per TB
    /// otherwise.
    Cb,
}

impl ParallelismMode {
    pub const ALL: [ParallelismMode; 3] = [
        ParallelismMode::None,
        ParallelismMode::Tb,
        ParallelismMode::Cb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParallelismMode::None => "none",
            ParallelismMode::Tb => "tb",
            ParallelismMode::Cb => "cb",
        }
    }
}

impl fmt::Display for ParallelismMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParallelismMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "subframe" => Ok(ParallelismMode::None),
            "tb" => Ok(ParallelismMode::Tb),
            "cb" => Ok(ParallelismMode::Cb),
            other => Err(format!(
                "unknown parallelism mode {other:?} (expected none|tb|cb)"
            )),
        }
    }
}

/// What the dispatcher does while the queue is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IdleStrategy {
    /// Sleep on the queue's condition variable.
    #[default]
    Block,
    /// Poll this many times, yielding between polls, then block.
    Spin(u32),
}

impl FromStr for IdleStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "block" => Ok(IdleStrategy::Block),
            "spin" => Ok(IdleStrategy::Spin(10_000)),
            other => other
                .strip_prefix("spin:")
                .and_then(|n| n.parse().ok())
                .map(IdleStrategy::Spin)
                .ok_or_else(|| {
                    format!("unknown idle strategy {s:?} (expected block|spin|spin:<n>)")
                }),
        }
    }
}

/// What happens to queued CCDUs at shutdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShutdownMode {
    /// Finish everything already enqueued.
    #[default]
    Drain,
    /// Drop queued CCDUs (recorded as purged) and finish only those in flight.
    Cancel,
}

/// Forces a decode failure of code block `index` of a TB. The block is still
/// decoded, with early stopping off.
pub type FailHook = Arc<dyn Fn(TbKey, usize) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct PoolConfig {
    pub num_workers: usize,
    pub mode: ParallelismMode,
    /// Pin worker `i` to core `(i + 1) mod ncpu`, best effort.
    pub pinning: bool,
    /// Run workers under SCHED_FIFO, best effort.
    pub realtime: bool,
    pub max_iterations: u32,
    pub early_stop: bool,
    pub idle: IdleStrategy,
    pub max_code_blocks: usize,
    pub fail_hook: Option<FailHook>,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self {
            num_workers: 6,
            mode: ParallelismMode::None,
            pinning: false,
            realtime: false,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            early_stop: true,
            idle: IdleStrategy::Block,
            max_code_blocks: DEFAULT_MAX_CODE_BLOCKS,
            fail_hook: None,
        }
    }
}

impl fmt::Debug for PoolConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PoolConfig")
            .field("num_workers", &self.num_workers)
            .field("mode", &self.mode)
            .field("pinning", &self.pinning)
            .field("realtime", &self.realtime)
            .field("max_iterations", &self.max_iterations)
            .field("early_stop", &self.early_stop)
            .field("idle", &self.idle)
            .field("max_code_blocks", &self.max_code_blocks)
            .field("fail_hook", &self.fail_hook.is_some())
            .finish()
    }
}

impl PoolConfig {
    pub fn validate(&self) -> Result<(), SchedulerError> {
        if self.num_workers == 0 {
            return Err(SchedulerError::InvalidConfig(
                "num_workers must be at least 1".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(SchedulerError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.max_code_blocks == 0 {
            return Err(SchedulerError::InvalidConfig(
                "max_code_blocks must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("invalid pool configuration: {0}")]
    InvalidConfig(String),
    #[error("{direction} subframe {subframe} was never enqueued or was already collected")]
    UnknownSubframe { direction: Direction, subframe: u64 },
    #[error("{direction} subframe {subframe} is already pending")]
    DuplicateSubframe { direction: Direction, subframe: u64 },
    #[error("transport block {ue} in subframe {subframe}: {reason}")]
    InvalidInput {
        subframe: u64,
        ue: u32,
        reason: String,
    },
    #[error("pool is shut down")]
    ShutDown,
    #[error("shutdown did not finish within {0:?}")]
    ShutdownTimeout(Duration),
    #[error("worker failed: {0}")]
    WorkerPanicked(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Soft input of one TB for the decode path, blocks in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeTb<T> {
    pub layout: TbLayout,
    pub blocks: Vec<LlrBlock<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EncodeItem {
    /// Segmented by the worker.
    Tb(TransportBlock),
    /// Segmented at enqueue time.
    Cb(CodeBlock),
}

/// Code blocks of one TB carried by a decode CCDU, as `(index, llr)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeItem<T> {
    pub layout: TbLayout,
    pub blocks: Vec<(usize, LlrBlock<T>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload<T> {
    Encode(Vec<EncodeItem>),
    Decode(Vec<DecodeItem<T>>),
}

impl<T> Payload<T> {
    pub fn direction(&self) -> Direction {
        match self {
            Payload::Encode(_) => Direction::Encode,
            Payload::Decode(_) => Direction::Decode,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Payload::Encode(v) => v.is_empty(),
            Payload::Decode(v) => v.iter().all(|d| d.blocks.is_empty()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ccdu<T> {
    pub id: u64,
    pub subframe: u64,
    pub granularity: Granularity,
    /// `None` at subframe granularity.
    pub ue: Option<u32>,
    /// Set iff granularity is [`Granularity::Cb`].
    pub cb_index: Option<u32>,
    pub payload: Payload<T>,
    /// Nanoseconds since the pool started.
    pub t_enqueue: u64,
}

impl<T> Ccdu<T> {
    pub fn direction(&self) -> Direction {
        self.payload.direction()
    }

    pub fn tb_key(&self) -> Option<TbKey> {
        self.ue.map(|ue| TbKey {
            subframe: self.subframe,
            ue,
        })
    }
}
