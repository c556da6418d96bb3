//! End-to-end benchmark: generate traffic, encode on the pool, pass each code
//! block through the channel, decode on the pool, and collect KPIs.

use std::io::Write;
use std::time::{Duration, Instant};

use log::{info, warn};
use thiserror::Error;

use crate::codec::{TbKey, TbLayout, TransportBlock};
use crate::metrics::{start_collector, summarize, CaptureCounts, KpiRecord, KpiSummary};
use crate::scheduler::{
    DecodeTb, Direction, ParallelismMode, Pool, PoolConfig, PoolStats, SchedulerError,
    ShutdownMode, SubframeReport, TbStatus,
};
use crate::workload::{
    channel_pass, derive_seed, generate_subframe, ChannelModel, TickMode, TrafficProfile,
};
use crate::Llr;

const CHANNEL_TAG: u64 = 0xc4a;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error("encode of UE {} in subframe {} did not complete", .0.ue, .0.subframe)]
    EncodeIncomplete(TbKey),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub pool: PoolConfig,
    pub profile: TrafficProfile,
    pub channel: ChannelModel,
    /// Per-subframe wait limit; `None` waits indefinitely.
    pub await_timeout: Option<Duration>,
    pub collector_capacity: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            pool: PoolConfig::default(),
            profile: TrafficProfile::default(),
            channel: ChannelModel::new(-1.0),
            await_timeout: None,
            collector_capacity: 1 << 16,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.pool.validate()?;
        self.profile.validate().map_err(PipelineError::Config)?;
        self.channel.validate().map_err(PipelineError::Config)?;
        if self.collector_capacity == 0 {
            return Err(PipelineError::Config(
                "collector capacity must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Decode verdict of one TB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TbOutcome {
    pub key: TbKey,
    /// Reassembled payload, `None` when lost or unfinished.
    pub payload: Option<Vec<u8>>,
    /// Delivered and bit-exact against the transmitted payload.
    pub correct: bool,
}

#[derive(Debug)]
pub struct BenchRun {
    pub mode: ParallelismMode,
    pub num_workers: usize,
    pub records: Vec<KpiRecord>,
    pub counts: CaptureCounts,
    pub summary: KpiSummary,
    /// Sorted by subframe, then UE.
    pub outcomes: Vec<TbOutcome>,
    pub stats: PoolStats,
    pub wall: Duration,
    /// Decode subframes whose wait timed out.
    pub incomplete: usize,
}

impl BenchRun {
    /// Delivered TBs whose payload differs from what was sent. Always zero
    /// unless the CRC misses an error.
    pub fn undetected_errors(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| o.payload.is_some() && !o.correct)
            .count()
    }
}

struct Runner<'a> {
    config: &'a BenchConfig,
    pool: Pool<Llr>,
    sent: Vec<Vec<TransportBlock>>,
    outcomes: Vec<TbOutcome>,
    incomplete: usize,
}

impl Runner<'_> {
    fn encode(&mut self, sf: u64) -> Result<(), PipelineError> {
        let tbs = generate_subframe(&self.config.profile, sf);
        self.pool.enqueue_encode(sf, tbs.clone())?;
        self.sent.push(tbs);
        Ok(())
    }

    /// Collects the encoded blocks of `sf`, applies the channel and queues
    /// the decode.
    fn channel_and_decode(&mut self, sf: u64) -> Result<(), PipelineError> {
        let report = self.pool.await_subframe(Direction::Encode, sf, None)?;
        let ch = &self.config.channel;
        let seed = self.config.profile.seed;
        let max = self.config.pool.max_code_blocks;
        let mut soft = Vec::with_capacity(report.tbs.len());
        for (tb, sent) in report.tbs.into_iter().zip(&self.sent[sf as usize]) {
            let TbStatus::Encoded(blocks) = tb.status else {
                return Err(PipelineError::EncodeIncomplete(tb.key));
            };
            let layout =
                TbLayout::plan(tb.key, sent.payload.len(), max).map_err(SchedulerError::from)?;
            let blocks = blocks
                .iter()
                .enumerate()
                .map(|(i, eb)| {
                    channel_pass(
                        eb,
                        ch,
                        derive_seed(seed, &[CHANNEL_TAG, sf, u64::from(tb.key.ue), i as u64]),
                    )
                })
                .collect();
            soft.push(DecodeTb { layout, blocks });
        }
        self.pool.enqueue_decode(sf, soft)?;
        Ok(())
    }

    fn collect(&mut self, sf: u64) -> Result<(), PipelineError> {
        let report = self
            .pool
            .await_subframe(Direction::Decode, sf, self.config.await_timeout)?;
        if !report.complete {
            warn!("decode of subframe {sf} timed out");
            self.incomplete += 1;
        }
        self.record(&report);
        Ok(())
    }

    fn record(&mut self, report: &SubframeReport) {
        let sent = &self.sent[report.subframe as usize];
        for (tb, input) in report.tbs.iter().zip(sent) {
            let payload = match &tb.status {
                TbStatus::Delivered(out) => Some(out.payload.clone()),
                _ => None,
            };
            let correct = payload.as_deref() == Some(input.payload.as_slice());
            self.outcomes.push(TbOutcome {
                key: tb.key,
                payload,
                correct,
            });
        }
    }
}

/// Runs the full pipeline once. With `stream`, KPI records are also written
/// there as CSV lines while the run is in progress.
pub fn run_bench(
    config: &BenchConfig,
    stream: Option<Box<dyn Write + Send>>,
) -> Result<BenchRun, PipelineError> {
    config.validate()?;
    let (captor, collector) = start_collector(config.collector_capacity, stream);
    let pool = Pool::<Llr>::start(config.pool.clone(), Some(captor))?;
    let mut run = Runner {
        config,
        pool,
        sent: Vec::new(),
        outcomes: Vec::new(),
        incomplete: 0,
    };
    let n = config.profile.n_subframes;
    let started = Instant::now();

    match config.profile.tick {
        TickMode::Lockstep => {
            for sf in 0..n {
                run.encode(sf)?;
                run.channel_and_decode(sf)?;
                run.collect(sf)?;
            }
        }
        TickMode::Batch => {
            for sf in 0..n {
                run.encode(sf)?;
            }
            for sf in 0..n {
                run.channel_and_decode(sf)?;
            }
            for sf in 0..n {
                run.collect(sf)?;
            }
        }
        TickMode::Periodic(period) => {
            for sf in 0..n {
                let due = started + period * sf as u32;
                if let Some(wait) = due.checked_duration_since(Instant::now()) {
                    std::thread::sleep(wait);
                }
                run.encode(sf)?;
                run.channel_and_decode(sf)?;
            }
            for sf in 0..n {
                run.collect(sf)?;
            }
        }
    }
    let wall = started.elapsed();
    let Runner {
        pool,
        outcomes,
        incomplete,
        ..
    } = run;
    let stats = pool.shutdown(ShutdownMode::Drain, Duration::from_secs(60))?;
    let collected = collector.finish();
    if collected.counts.dropped > 0 {
        warn!(
            "{} KPI records dropped by a full collector buffer",
            collected.counts.dropped
        );
    }
    let summary = summarize(&collected.records);
    info!(
        "mode {} x{}: {} subframes in {:.2?}, loss rate {:.4}",
        config.pool.mode, config.pool.num_workers, n, wall, summary.loss_rate
    );
    Ok(BenchRun {
        mode: config.pool.mode,
        num_workers: config.pool.num_workers,
        records: collected.records,
        counts: collected.counts,
        summary,
        outcomes,
        stats,
        wall,
        incomplete,
    })
}

/// Runs the same seeded workload once per mode.
pub fn run_modes(
    config: &BenchConfig,
    modes: &[ParallelismMode],
) -> Result<Vec<BenchRun>, PipelineError> {
    modes
        .iter()
        .map(|&mode| {
            let mut c = config.clone();
            c.pool.mode = mode;
            run_bench(&c, None)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::TbsDistribution;

    fn small(tick: TickMode, mode: ParallelismMode) -> BenchConfig {
        BenchConfig {
            pool: PoolConfig {
                num_workers: 2,
                mode,
                ..Default::default()
            },
            profile: TrafficProfile {
                n_ues: 2,
                tbs: TbsDistribution::Uniform(vec![800, 9000]),
                n_subframes: 6,
                tick,
                seed: 11,
            },
            channel: ChannelModel::new(20.0),
            ..Default::default()
        }
    }

    #[test]
    fn clean_channel_delivers_everything() {
        for tick in [
            TickMode::Batch,
            TickMode::Lockstep,
            TickMode::Periodic(Duration::from_micros(200)),
        ] {
            let run = run_bench(&small(tick, ParallelismMode::Cb), None).unwrap();
            assert_eq!(run.outcomes.len(), 12);
            assert!(run.outcomes.iter().all(|o| o.correct), "{tick:?}");
            assert_eq!(run.summary.tbs_total, 12);
            assert_eq!(run.summary.loss_rate, 0.0);
            assert!(run.stats.quiescent());
            assert!(run.counts.conserved() && run.counts.dropped == 0);
            assert!(run.records.iter().all(|r| r.validate(8).is_ok()));
        }
    }

    #[test]
    fn modes_agree() {
        let mut c = small(TickMode::Batch, ParallelismMode::None);
        c.channel = ChannelModel::new(-4.5);
        let runs = run_modes(&c, &ParallelismMode::ALL).unwrap();
        for r in &runs[1..] {
            assert_eq!(r.outcomes, runs[0].outcomes, "{}", r.mode);
        }
        assert_eq!(runs[0].summary.tbs_total, 12);
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = small(TickMode::Batch, ParallelismMode::Tb);
        c.profile.n_ues = 0;
        assert!(matches!(run_bench(&c, None), Err(PipelineError::Config(_))));
        let mut c = small(TickMode::Batch, ParallelismMode::Tb);
        c.pool.num_workers = 0;
        assert!(run_bench(&c, None).is_err());
    }
}
