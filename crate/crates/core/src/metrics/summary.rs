use std::collections::{BTreeMap, BTreeSet};

use super::{KpiRecord, Outcome};
use crate::scheduler::{Direction, Granularity};

/// Delay distribution in nanoseconds. Percentiles use the nearest-rank rule.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DelayStats {
    pub count: usize,
    pub mean: f64,
    pub p50: u64,
    pub p95: u64,
    pub p99: u64,
    pub max: u64,
}

impl DelayStats {
    pub fn from_samples(mut samples: Vec<u64>) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        samples.sort_unstable();
        let n = samples.len();
        let rank = |p: f64| samples[((p * n as f64).ceil() as usize).clamp(1, n) - 1];
        Self {
            count: n,
            mean: samples.iter().map(|&v| v as f64).sum::<f64>() / n as f64,
            p50: rank(0.50),
            p95: rank(0.95),
            p99: rank(0.99),
            max: samples[n - 1],
        }
    }
}

/// Per-stage delays of the CCDUs sharing a direction and granularity.
/// Purged CCDUs never ran and are left out.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub direction: Direction,
    pub granularity: Granularity,
    pub queue_wait: DelayStats,
    pub conditioning: DelayStats,
    pub pre_processing: DelayStats,
    pub coding: DelayStats,
    pub post_processing: DelayStats,
    pub total: DelayStats,
    pub mean_iterations: f64,
}

impl GroupSummary {
    pub fn delays(&self) -> [(&'static str, &DelayStats); 6] {
        [
            ("queue_wait", &self.queue_wait),
            ("conditioning", &self.conditioning),
            ("pre_processing", &self.pre_processing),
            ("coding", &self.coding),
            ("post_processing", &self.post_processing),
            ("total", &self.total),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiSummary {
    pub groups: Vec<GroupSummary>,
    /// Per subframe: last completion minus first enqueue.
    pub subframe_latency: Vec<(Direction, DelayStats)>,
    /// Decoded transport blocks observed.
    pub tbs_total: u64,
    pub tbs_lost: u64,
    pub loss_rate: f64,
    /// CCDUs completed by each worker.
    pub worker_jobs: BTreeMap<u32, u64>,
    pub purged: u64,
}

impl KpiSummary {
    pub fn empty() -> Self {
        Self {
            groups: Vec::new(),
            subframe_latency: Vec::new(),
            tbs_total: 0,
            tbs_lost: 0,
            loss_rate: 0.0,
            worker_jobs: BTreeMap::new(),
            purged: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty() && self.purged == 0
    }

    pub fn group(&self, direction: Direction, granularity: Granularity) -> Option<&GroupSummary> {
        self.groups
            .iter()
            .find(|g| g.direction == direction && g.granularity == granularity)
    }

    pub fn latency(&self, direction: Direction) -> Option<&DelayStats> {
        self.subframe_latency
            .iter()
            .find(|(d, _)| *d == direction)
            .map(|(_, s)| s)
    }
}

fn stats(records: &[&KpiRecord], f: impl Fn(&KpiRecord) -> u64) -> DelayStats {
    DelayStats::from_samples(records.iter().map(|r| f(r)).collect())
}

pub fn summarize(records: &[KpiRecord]) -> KpiSummary {
    let mut summary = KpiSummary::empty();
    summary.purged = records
        .iter()
        .filter(|r| r.outcome == Outcome::Purged)
        .count() as u64;

    let mut by_group: BTreeMap<(Direction, Granularity), Vec<&KpiRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.outcome != Outcome::Purged) {
        by_group
            .entry((r.direction, r.granularity))
            .or_default()
            .push(r);
        if let Some(w) = r.worker {
            *summary.worker_jobs.entry(w).or_default() += 1;
        }
    }
    for ((direction, granularity), rs) in by_group {
        summary.groups.push(GroupSummary {
            direction,
            granularity,
            queue_wait: stats(&rs, KpiRecord::queue_wait),
            conditioning: stats(&rs, KpiRecord::conditioning),
            pre_processing: stats(&rs, KpiRecord::pre_processing),
            coding: stats(&rs, KpiRecord::coding),
            post_processing: stats(&rs, KpiRecord::post_processing),
            total: stats(&rs, |r| r.t_end - r.t_enqueue),
            mean_iterations: rs.iter().map(|r| f64::from(r.iterations)).sum::<f64>()
                / rs.len() as f64,
        });
    }

    let mut spans: BTreeMap<(Direction, u64), (u64, u64)> = BTreeMap::new();
    for r in records {
        let e = spans
            .entry((r.direction, r.subframe))
            .or_insert((r.t_enqueue, r.t_end));
        e.0 = e.0.min(r.t_enqueue);
        e.1 = e.1.max(r.t_end);
    }
    let mut latencies: BTreeMap<Direction, Vec<u64>> = BTreeMap::new();
    for ((d, _), (start, end)) in spans {
        latencies.entry(d).or_default().push(end - start);
    }
    summary.subframe_latency = latencies
        .into_iter()
        .map(|(d, v)| (d, DelayStats::from_samples(v)))
        .collect();

    // Code-block CCDUs are grouped back into their TB; a TB is lost when any
    // of its blocks did not succeed.
    let mut cb_tbs: BTreeMap<(u64, Option<u32>), bool> = BTreeMap::new();
    let mut seen_cb = BTreeSet::new();
    for r in records.iter().filter(|r| r.direction == Direction::Decode) {
        if r.granularity == Granularity::Cb {
            seen_cb.insert((r.subframe, r.ue));
            let failed = cb_tbs.entry((r.subframe, r.ue)).or_insert(false);
            *failed |= r.outcome != Outcome::Success;
        } else {
            summary.tbs_total += u64::from(r.tb_total);
            summary.tbs_lost += u64::from(r.tb_failed);
        }
    }
    summary.tbs_total += seen_cb.len() as u64;
    summary.tbs_lost += cb_tbs.values().filter(|&&f| f).count() as u64;
    if summary.tbs_total > 0 {
        summary.loss_rate = summary.tbs_lost as f64 / summary.tbs_total as f64;
    }
    summary
}

/// `1 − other/baseline`: positive when `other` is faster.
pub fn relative_gain(baseline: f64, other: f64) -> f64 {
    if baseline == 0.0 {
        return 0.0;
    }
    1.0 - other / baseline
}
