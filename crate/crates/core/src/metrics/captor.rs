use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use crossbeam_channel::{bounded, Receiver, Sender, TrySendError};
use log::warn;

use super::export::{write_header, write_row};
use super::KpiRecord;

#[derive(Debug, Default)]
struct Counters {
    emitted: AtomicU64,
    dropped: AtomicU64,
}

/// Producer handle held by each worker. Never blocks: a full buffer drops
/// the record and counts it.
#[derive(Debug, Clone)]
pub struct Captor {
    tx: Sender<KpiRecord>,
    counters: Arc<Counters>,
}

impl Captor {
    pub fn capture(&self, record: KpiRecord) {
        self.counters.emitted.fetch_add(1, Ordering::Relaxed);
        match self.tx.try_send(record) {
            Ok(()) => {}
            Err(TrySendError::Full(_)) | Err(TrySendError::Disconnected(_)) => {
                self.counters.dropped.fetch_add(1, Ordering::Relaxed);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaptureCounts {
    pub emitted: u64,
    pub received: u64,
    pub dropped: u64,
}

impl CaptureCounts {
    pub fn conserved(&self) -> bool {
        self.emitted == self.received + self.dropped
    }
}

#[derive(Debug)]
pub struct Collected {
    /// Per-worker arrival order is preserved.
    pub records: Vec<KpiRecord>,
    pub counts: CaptureCounts,
}

/// Consumer side, draining on its own thread.
#[derive(Debug)]
pub struct Collector {
    handle: JoinHandle<Vec<KpiRecord>>,
    counters: Arc<Counters>,
}

impl Collector {
    /// Waits for every [`Captor`] clone to be dropped, then returns what was
    /// received.
    pub fn finish(self) -> Collected {
        let records = self.handle.join().expect("collector thread panicked");
        let counts = CaptureCounts {
            emitted: self.counters.emitted.load(Ordering::Acquire),
            received: records.len() as u64,
            dropped: self.counters.dropped.load(Ordering::Acquire),
        };
        Collected { records, counts }
    }
}

/// Starts a collector with a buffer of `capacity` records. With `stream`,
/// every record is also written there as a CSV line as it arrives (a named
/// pipe read by another process, for instance).
pub fn start_collector(
    capacity: usize,
    stream: Option<Box<dyn Write + Send>>,
) -> (Captor, Collector) {
    let (tx, rx) = bounded(capacity.max(1));
    let counters = Arc::new(Counters::default());
    let handle = thread::Builder::new()
        .name("kpi-collector".into())
        .spawn(move || drain(rx, stream))
        .expect("spawn collector thread");
    (
        Captor {
            tx,
            counters: counters.clone(),
        },
        Collector { handle, counters },
    )
}

fn drain(rx: Receiver<KpiRecord>, stream: Option<Box<dyn Write + Send>>) -> Vec<KpiRecord> {
    let mut sink = stream.map(|w| csv::WriterBuilder::new().has_headers(false).from_writer(w));
    if let Some(w) = sink.as_mut() {
        if let Err(e) = write_header(w) {
            warn!("KPI stream disabled: {e}");
            sink = None;
        }
    }
    let mut records = Vec::new();
    for r in rx.iter() {
        if let Some(w) = sink.as_mut() {
            if let Err(e) = write_row(w, &r).and_then(|_| w.flush().map_err(csv::Error::from)) {
                warn!("KPI stream disabled: {e}");
                sink = None;
            }
        }
        records.push(r);
    }
    records
}

#[cfg(test)]
mod tests {
    use std::time::Instant;

    use super::*;
    use crate::metrics::testing::record;
    use crate::metrics::Outcome;

    #[test]
    fn conservation_without_drops() {
        let (captor, collector) = start_collector(1 << 16, None);
        for i in 0..10_000 {
            captor.capture(record(i, 0, 0, Some(0), Outcome::Success));
        }
        drop(captor);
        let c = collector.finish();
        assert_eq!(
            c.counts,
            CaptureCounts {
                emitted: 10_000,
                received: 10_000,
                dropped: 0
            }
        );
    }

    #[test]
    fn overflow_is_counted_not_blocking() {
        let (captor, collector) = start_collector(4, None);
        // tiny buffer, flooded faster than it drains
        for i in 0..100_000 {
            captor.capture(record(i, 0, 0, Some(0), Outcome::Success));
        }
        drop(captor);
        let c = collector.finish();
        assert!(c.counts.conserved(), "{:?}", c.counts);
        assert_eq!(c.counts.emitted, 100_000);
    }

    #[test]
    fn per_worker_order_is_kept() {
        let (captor, collector) = start_collector(1 << 16, None);
        let handles: Vec<_> = (0..4u32)
            .map(|w| {
                let c = captor.clone();
                thread::spawn(move || {
                    for i in 0..2000u64 {
                        let mut r = record(i, 0, 0, Some(0), Outcome::Success);
                        r.worker = Some(w);
                        c.capture(r);
                    }
                })
            })
            .collect();
        drop(captor);
        handles.into_iter().for_each(|h| h.join().unwrap());
        let c = collector.finish();
        assert_eq!(c.counts.dropped, 0);
        for w in 0..4 {
            let ids: Vec<u64> = c
                .records
                .iter()
                .filter(|r| r.worker == Some(w))
                .map(|r| r.ccdu_id)
                .collect();
            assert_eq!(ids, (0..2000).collect::<Vec<_>>());
        }
    }

    #[test]
    fn streams_csv_lines() {
        let file = tempfile::NamedTempFile::new().unwrap();
        let out = Box::new(file.reopen().unwrap());
        let (captor, collector) = start_collector(16, Some(out));
        captor.capture(record(1, 0, 0, Some(0), Outcome::Success));
        captor.capture(record(2, 0, 0, Some(1), Outcome::Purged));
        drop(captor);
        let c = collector.finish();
        let parsed = crate::metrics::read_records(file.path()).unwrap();
        assert_eq!(parsed, c.records);
    }

    #[test]
    fn capture_cost_is_small() {
        let (captor, collector) = start_collector(1 << 17, None);
        let mut samples = Vec::with_capacity(20_000);
        for i in 0..20_000 {
            let r = record(i, 0, 0, Some(0), Outcome::Success);
            let t = Instant::now();
            captor.capture(r);
            samples.push(t.elapsed().as_nanos() as u64);
        }
        drop(captor);
        collector.finish();
        samples.sort_unstable();
        let median = samples[samples.len() / 2];
        assert!(median < 1_000, "median capture cost {median} ns");
    }
}
