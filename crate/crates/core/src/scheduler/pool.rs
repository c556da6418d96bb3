use std::any::Any;
use std::collections::{BTreeMap, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, Receiver, Sender};
use log::{debug, warn};

use super::affinity::{available_cores, pin_to_core, raise_priority};
use super::{
    Ccdu, DecodeItem, DecodeTb, Direction, EncodeItem, Granularity, JobQueue, ParallelismMode,
    Payload, PoolConfig, SchedulerError, ShutdownMode,
};
use crate::codec::{
    reassemble_tb, segment_tb_with_limit, turbo_encode, CodecError, DecodeResult, EncodedBlock,
    Reassembly, TbKey, TbLayout, TransportBlock, TurboDecoder,
};
use crate::metrics::{Captor, KpiRecord, Outcome};
use crate::scalar::LlrScalar;

/// Final state of one TB of an awaited subframe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TbStatus {
    /// Every code block passed its CRC; the payload is reassembled.
    Delivered(TransportBlock),
    /// Encoded code blocks in index order.
    Encoded(Vec<EncodedBlock>),
    /// Failed code block indices and how many queued CCDUs were purged.
    Lost { failed: Vec<usize>, purged: u32 },
    /// Not finished when the wait timed out.
    Pending,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TbReport {
    pub key: TbKey,
    pub status: TbStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubframeReport {
    pub direction: Direction,
    pub subframe: u64,
    /// False when the wait timed out first.
    pub complete: bool,
    /// In UE order.
    pub tbs: Vec<TbReport>,
}

impl SubframeReport {
    pub fn lost(&self) -> usize {
        self.tbs
            .iter()
            .filter(|t| matches!(t.status, TbStatus::Lost { .. }))
            .count()
    }

    pub fn delivered(&self) -> impl Iterator<Item = &TransportBlock> {
        self.tbs.iter().filter_map(|t| match &t.status {
            TbStatus::Delivered(tb) => Some(tb),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolStats {
    pub enqueued: u64,
    /// Run by a worker, whatever the outcome.
    pub completed: u64,
    /// Removed from the queue without running.
    pub purged: u64,
    pub queued: usize,
}

impl PoolStats {
    pub fn quiescent(&self) -> bool {
        self.enqueued == self.completed + self.purged
    }
}

#[derive(Debug)]
struct TbState {
    layout: TbLayout,
    decoded: Vec<(usize, DecodeResult)>,
    encoded: Vec<(usize, EncodedBlock)>,
    failed: Vec<usize>,
    purged: u32,
    lost: bool,
    done: Option<TbStatus>,
}

impl TbState {
    fn new(layout: TbLayout) -> Self {
        Self {
            layout,
            decoded: Vec::new(),
            encoded: Vec::new(),
            failed: Vec::new(),
            purged: 0,
            lost: false,
            done: None,
        }
    }

    fn status(&self) -> TbStatus {
        if self.lost {
            let mut failed = self.failed.clone();
            failed.sort_unstable();
            TbStatus::Lost {
                failed,
                purged: self.purged,
            }
        } else {
            self.done.clone().unwrap_or(TbStatus::Pending)
        }
    }
}

#[derive(Debug)]
struct SubframeState {
    expected: usize,
    finished: usize,
    tbs: BTreeMap<u32, TbState>,
}

#[derive(Debug, Default)]
struct Tracker {
    subframes: HashMap<(Direction, u64), SubframeState>,
    fault: Option<String>,
}

struct Shared<T> {
    config: PoolConfig,
    queue: JobQueue<Ccdu<T>>,
    tracker: Mutex<Tracker>,
    changed: Condvar,
    epoch: Instant,
    next_id: AtomicU64,
    enqueued: AtomicU64,
    completed: AtomicU64,
    purged: AtomicU64,
}

/// Sends on drop, so the pool learns about every thread exit, panics included.
struct ExitSignal(Sender<()>);

impl Drop for ExitSignal {
    fn drop(&mut self) {
        let _ = self.0.send(());
    }
}

/// Worker pool with one FIFO queue, one dispatcher and `num_workers`
/// non-preemptive workers.
pub struct Pool<T: LlrScalar + 'static = f32> {
    shared: Arc<Shared<T>>,
    captor: Option<Captor>,
    threads: Vec<JoinHandle<()>>,
    exited: Receiver<()>,
    stopped: bool,
}

type Job<T> = (Granularity, Option<u32>, Option<u32>, Payload<T>);

impl<T: LlrScalar + 'static> Pool<T> {
    /// Starts the dispatcher and workers. Records go to `captor` when given.
    pub fn start(config: PoolConfig, captor: Option<Captor>) -> Result<Self, SchedulerError> {
        config.validate()?;
        let n = config.num_workers;
        let cores = available_cores();
        if n > cores {
            warn!("{n} workers on {cores} logical cores; workers will share cores");
        }
        let shared = Arc::new(Shared {
            config,
            queue: JobQueue::new(),
            tracker: Mutex::new(Tracker::default()),
            changed: Condvar::new(),
            epoch: Instant::now(),
            next_id: AtomicU64::new(0),
            enqueued: AtomicU64::new(0),
            completed: AtomicU64::new(0),
            purged: AtomicU64::new(0),
        });
        let (idle_tx, idle_rx) = bounded(n);
        let (exit_tx, exited) = bounded(n + 1);
        let mut threads = Vec::with_capacity(n + 1);
        let mut job_txs = Vec::with_capacity(n);
        for id in 0..n {
            let (tx, rx) = bounded(1);
            job_txs.push(tx);
            let shared = shared.clone();
            let idle = idle_tx.clone();
            let captor = captor.clone();
            let signal = ExitSignal(exit_tx.clone());
            let handle = thread::Builder::new()
                .name(format!("coding-worker-{id}"))
                .spawn(move || {
                    let _signal = signal;
                    worker_loop(&shared, id, &rx, &idle, captor.as_ref());
                })
                .map_err(|e| SchedulerError::InvalidConfig(format!("cannot spawn worker: {e}")))?;
            threads.push(handle);
        }
        drop(idle_tx);
        let dispatcher_shared = shared.clone();
        let signal = ExitSignal(exit_tx);
        let handle = thread::Builder::new()
            .name("coding-dispatcher".into())
            .spawn(move || {
                let _signal = signal;
                dispatch_loop(&dispatcher_shared, &idle_rx, job_txs);
            })
            .map_err(|e| SchedulerError::InvalidConfig(format!("cannot spawn dispatcher: {e}")))?;
        threads.push(handle);
        Ok(Self {
            shared,
            captor,
            threads,
            exited,
            stopped: false,
        })
    }

    pub fn config(&self) -> &PoolConfig {
        &self.shared.config
    }

    /// Nanoseconds since the pool started, the time base of every record.
    pub fn now_ns(&self) -> u64 {
        self.shared.now()
    }

    pub fn stats(&self) -> PoolStats {
        self.shared.stats()
    }

    /// Queues the encode jobs of one subframe according to the pool's mode.
    pub fn enqueue_encode(
        &self,
        subframe: u64,
        tbs: Vec<TransportBlock>,
    ) -> Result<usize, SchedulerError> {
        let max = self.shared.config.max_code_blocks;
        let mut layouts = Vec::with_capacity(tbs.len());
        for tb in &tbs {
            if tb.subframe_id != subframe {
                return Err(invalid(
                    subframe,
                    tb.ue_id,
                    format!("belongs to subframe {}", tb.subframe_id),
                ));
            }
            let layout = TbLayout::plan(tb.key(), tb.payload.len(), max)
                .map_err(|e| invalid(subframe, tb.ue_id, e.to_string()))?;
            layouts.push(layout);
        }
        check_unique(subframe, &layouts)?;

        let mut jobs: Vec<Job<T>> = Vec::new();
        match self.shared.config.mode {
            ParallelismMode::None => {
                if !tbs.is_empty() {
                    let items = tbs.into_iter().map(EncodeItem::Tb).collect();
                    jobs.push((Granularity::Subframe, None, None, Payload::Encode(items)));
                }
            }
            ParallelismMode::Tb => {
                for tb in tbs {
                    jobs.push((
                        Granularity::Tb,
                        Some(tb.ue_id),
                        None,
                        Payload::Encode(vec![EncodeItem::Tb(tb)]),
                    ));
                }
            }
            ParallelismMode::Cb => {
                for (tb, layout) in tbs.into_iter().zip(&layouts) {
                    if layout.count > 1 {
                        for cb in segment_tb_with_limit(&tb, max)? {
                            let index = Some(cb.index as u32);
                            jobs.push((
                                Granularity::Cb,
                                Some(tb.ue_id),
                                index,
                                Payload::Encode(vec![EncodeItem::Cb(cb)]),
                            ));
                        }
                    } else {
                        jobs.push((
                            Granularity::Tb,
                            Some(tb.ue_id),
                            None,
                            Payload::Encode(vec![EncodeItem::Tb(tb)]),
                        ));
                    }
                }
            }
        }
        self.submit(Direction::Encode, subframe, layouts, jobs)
    }

    /// Queues the decode jobs of one subframe according to the pool's mode.
    pub fn enqueue_decode(
        &self,
        subframe: u64,
        tbs: Vec<DecodeTb<T>>,
    ) -> Result<usize, SchedulerError> {
        for tb in &tbs {
            let l = &tb.layout;
            let err = |reason: String| invalid(subframe, l.key.ue, reason);
            if l.key.subframe != subframe {
                return Err(err(format!("belongs to subframe {}", l.key.subframe)));
            }
            if tb.blocks.len() != l.count {
                return Err(err(format!(
                    "{} soft blocks for {} code blocks",
                    tb.blocks.len(),
                    l.count
                )));
            }
            for b in &tb.blocks {
                b.validate().map_err(|e| err(e.to_string()))?;
                if b.k() != l.block_size {
                    return Err(err(format!(
                        "soft block of size {} in a TB of size {}",
                        b.k(),
                        l.block_size
                    )));
                }
                let mut values = b
                    .systematic
                    .iter()
                    .chain(&b.parity1)
                    .chain(&b.parity2)
                    .chain(&b.tail);
                if values.any(|v| !v.is_finite()) {
                    return Err(err(CodecError::NonFiniteLlr.to_string()));
                }
            }
        }
        let layouts: Vec<TbLayout> = tbs.iter().map(|t| t.layout).collect();
        check_unique(subframe, &layouts)?;

        let item = |tb: DecodeTb<T>| DecodeItem {
            layout: tb.layout,
            blocks: tb.blocks.into_iter().enumerate().collect(),
        };
        let mut jobs: Vec<Job<T>> = Vec::new();
        match self.shared.config.mode {
            ParallelismMode::None => {
                if !tbs.is_empty() {
                    let items = tbs.into_iter().map(item).collect();
                    jobs.push((Granularity::Subframe, None, None, Payload::Decode(items)));
                }
            }
            ParallelismMode::Tb => {
                for tb in tbs {
                    let ue = Some(tb.layout.key.ue);
                    jobs.push((Granularity::Tb, ue, None, Payload::Decode(vec![item(tb)])));
                }
            }
            ParallelismMode::Cb => {
                for tb in tbs {
                    let ue = Some(tb.layout.key.ue);
                    if tb.layout.count > 1 {
                        let layout = tb.layout;
                        for (index, llr) in tb.blocks.into_iter().enumerate() {
                            let one = DecodeItem {
                                layout,
                                blocks: vec![(index, llr)],
                            };
                            jobs.push((
                                Granularity::Cb,
                                ue,
                                Some(index as u32),
                                Payload::Decode(vec![one]),
                            ));
                        }
                    } else {
                        jobs.push((Granularity::Tb, ue, None, Payload::Decode(vec![item(tb)])));
                    }
                }
            }
        }
        self.submit(Direction::Decode, subframe, layouts, jobs)
    }

    fn submit(
        &self,
        direction: Direction,
        subframe: u64,
        layouts: Vec<TbLayout>,
        jobs: Vec<Job<T>>,
    ) -> Result<usize, SchedulerError> {
        let shared = &self.shared;
        let key = (direction, subframe);
        {
            let mut t = shared.tracker();
            if let Some(f) = &t.fault {
                return Err(SchedulerError::WorkerPanicked(f.clone()));
            }
            if shared.queue.is_closed() {
                return Err(SchedulerError::ShutDown);
            }
            if t.subframes.contains_key(&key) {
                return Err(SchedulerError::DuplicateSubframe {
                    direction,
                    subframe,
                });
            }
            let tbs = layouts
                .into_iter()
                .map(|l| (l.key.ue, TbState::new(l)))
                .collect();
            t.subframes.insert(
                key,
                SubframeState {
                    expected: jobs.len(),
                    finished: 0,
                    tbs,
                },
            );
        }
        let n = jobs.len();
        let now = shared.now();
        let ccdus = jobs
            .into_iter()
            .map(|(granularity, ue, cb_index, payload)| Ccdu {
                id: shared.next_id.fetch_add(1, Ordering::Relaxed),
                subframe,
                granularity,
                ue,
                cb_index,
                payload,
                t_enqueue: now,
            })
            .collect();
        shared.enqueued.fetch_add(n as u64, Ordering::SeqCst);
        if shared.queue.push_all(ccdus).is_err() {
            shared.enqueued.fetch_sub(n as u64, Ordering::SeqCst);
            shared.tracker().subframes.remove(&key);
            return Err(SchedulerError::ShutDown);
        }
        Ok(n)
    }

    /// Removes queued decode CCDUs of `key` and marks the TB lost.
    pub fn purge_tb(&self, key: TbKey) -> usize {
        if let Some(tb) = self
            .shared
            .tracker()
            .subframes
            .get_mut(&(Direction::Decode, key.subframe))
            .and_then(|s| s.tbs.get_mut(&key.ue))
        {
            tb.lost = true;
        }
        self.shared.purge(key, self.captor.as_ref())
    }

    /// Blocks until every CCDU of the subframe has run or been purged, then
    /// hands back per-TB results. After a timeout the report is flagged
    /// incomplete and the subframe can be awaited again.
    pub fn await_subframe(
        &self,
        direction: Direction,
        subframe: u64,
        timeout: Option<Duration>,
    ) -> Result<SubframeReport, SchedulerError> {
        let deadline = timeout.map(|d| Instant::now() + d);
        let key = (direction, subframe);
        let mut t = self.shared.tracker();
        loop {
            if let Some(f) = &t.fault {
                return Err(SchedulerError::WorkerPanicked(f.clone()));
            }
            let st = t
                .subframes
                .get(&key)
                .ok_or(SchedulerError::UnknownSubframe {
                    direction,
                    subframe,
                })?;
            if st.finished >= st.expected {
                let st = t.subframes.remove(&key).expect("present");
                return Ok(report(direction, subframe, &st, true));
            }
            match deadline {
                None => {
                    t = self
                        .shared
                        .changed
                        .wait(t)
                        .unwrap_or_else(|e| e.into_inner())
                }
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        return Ok(report(direction, subframe, st, false));
                    }
                    t = self
                        .shared
                        .changed
                        .wait_timeout(t, d - now)
                        .unwrap_or_else(|e| e.into_inner())
                        .0;
                }
            }
        }
    }

    /// Stops the pool within `timeout`. Drain finishes queued work first;
    /// cancel purges it. Threads still busy at the deadline are detached.
    pub fn shutdown(
        mut self,
        mode: ShutdownMode,
        timeout: Duration,
    ) -> Result<PoolStats, SchedulerError> {
        self.stop(mode, timeout)
    }

    fn stop(&mut self, mode: ShutdownMode, timeout: Duration) -> Result<PoolStats, SchedulerError> {
        if self.stopped {
            return Ok(self.stats());
        }
        self.stopped = true;
        let deadline = Instant::now() + timeout;
        let mut result = Ok(());
        if mode == ShutdownMode::Drain {
            let mut t = self.shared.tracker();
            while !self.shared.stats().quiescent() {
                if let Some(f) = &t.fault {
                    result = Err(SchedulerError::WorkerPanicked(f.clone()));
                    break;
                }
                let now = Instant::now();
                if now >= deadline {
                    result = Err(SchedulerError::ShutdownTimeout(timeout));
                    break;
                }
                t = self
                    .shared
                    .changed
                    .wait_timeout(t, deadline - now)
                    .unwrap_or_else(|e| e.into_inner())
                    .0;
            }
        }
        let leftovers = self.shared.queue.close();
        if !leftovers.is_empty() {
            debug!("cancelling {} queued CCDUs", leftovers.len());
        }
        self.shared.retire(leftovers, self.captor.as_ref());

        let mut all_exited = true;
        for _ in 0..self.threads.len() {
            if self.exited.recv_deadline(deadline).is_err() {
                all_exited = false;
                break;
            }
        }
        if all_exited {
            for h in self.threads.drain(..) {
                let _ = h.join();
            }
        } else {
            warn!("pool threads still running at shutdown deadline; detaching");
            self.threads.clear();
            result = result.and(Err(SchedulerError::ShutdownTimeout(timeout)));
        }
        self.captor = None;
        result.map(|()| self.stats())
    }
}

impl<T: LlrScalar + 'static> Drop for Pool<T> {
    fn drop(&mut self) {
        if !self.stopped {
            if let Err(e) = self.stop(ShutdownMode::Cancel, Duration::from_secs(10)) {
                warn!("pool shutdown on drop: {e}");
            }
        }
    }
}

fn invalid(subframe: u64, ue: u32, reason: String) -> SchedulerError {
    SchedulerError::InvalidInput {
        subframe,
        ue,
        reason,
    }
}

fn check_unique(subframe: u64, layouts: &[TbLayout]) -> Result<(), SchedulerError> {
    let mut seen = std::collections::BTreeSet::new();
    for l in layouts {
        if !seen.insert(l.key.ue) {
            return Err(invalid(subframe, l.key.ue, "UE appears twice".into()));
        }
    }
    Ok(())
}

fn report(
    direction: Direction,
    subframe: u64,
    st: &SubframeState,
    complete: bool,
) -> SubframeReport {
    let tbs = st
        .tbs
        .values()
        .map(|tb| TbReport {
            key: tb.layout.key,
            status: tb.status(),
        })
        .collect();
    SubframeReport {
        direction,
        subframe,
        complete,
        tbs,
    }
}

fn panic_message(p: &(dyn Any + Send)) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

fn dispatch_loop<T>(shared: &Shared<T>, idle: &Receiver<usize>, workers: Vec<Sender<Ccdu<T>>>) {
    // a worker id arrives each time that worker becomes free
    while let Ok(w) = idle.recv() {
        let Some(job) = shared.queue.pop_wait(shared.config.idle) else {
            break;
        };
        if workers[w].send(job).is_err() {
            shared.set_fault(format!("worker {w} exited with work pending"));
            break;
        }
    }
}

fn worker_loop<T: LlrScalar>(
    shared: &Shared<T>,
    id: usize,
    jobs: &Receiver<Ccdu<T>>,
    idle: &Sender<usize>,
    captor: Option<&Captor>,
) {
    if shared.config.pinning {
        let core = (id + 1) % available_cores();
        match pin_to_core(core) {
            Ok(()) => debug!("worker {id} pinned to core {core}"),
            Err(e) => warn!("worker {id}: pinning to core {core} skipped: {e}"),
        }
    }
    if shared.config.realtime {
        if let Err(e) = raise_priority() {
            warn!("worker {id}: real-time priority skipped: {e}");
        }
    }
    let mut decoder = TurboDecoder::<T>::new();
    if idle.send(id).is_err() {
        return;
    }
    while let Ok(job) = jobs.recv() {
        let t_start = shared.now();
        let ran = panic::catch_unwind(AssertUnwindSafe(|| {
            shared.run(job, id, t_start, &mut decoder, captor)
        }));
        if let Err(p) = ran {
            shared.set_fault(format!(
                "worker {id} panicked: {}",
                panic_message(p.as_ref())
            ));
            return;
        }
        if idle.send(id).is_err() {
            return;
        }
    }
}

impl<T> Shared<T> {
    fn now(&self) -> u64 {
        self.epoch.elapsed().as_nanos() as u64
    }

    fn tracker(&self) -> MutexGuard<'_, Tracker> {
        self.tracker.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn stats(&self) -> PoolStats {
        PoolStats {
            enqueued: self.enqueued.load(Ordering::SeqCst),
            completed: self.completed.load(Ordering::SeqCst),
            purged: self.purged.load(Ordering::SeqCst),
            queued: self.queue.len(),
        }
    }

    fn set_fault(&self, message: String) {
        warn!("{message}");
        let mut t = self.tracker();
        t.fault.get_or_insert(message);
        drop(t);
        self.changed.notify_all();
    }

    fn purge(&self, key: TbKey, captor: Option<&Captor>) -> usize {
        let removed = self
            .queue
            .remove_where(|c| c.direction() == Direction::Decode && c.tb_key() == Some(key));
        self.retire(removed, captor)
    }

    /// Accounts for CCDUs taken off the queue without running.
    fn retire(&self, jobs: Vec<Ccdu<T>>, captor: Option<&Captor>) -> usize {
        if jobs.is_empty() {
            return 0;
        }
        let now = self.now();
        {
            let mut t = self.tracker();
            for job in &jobs {
                if let Some(st) = t.subframes.get_mut(&(job.direction(), job.subframe)) {
                    st.finished += 1;
                    for key in tb_keys(&job.payload) {
                        if let Some(tb) = st.tbs.get_mut(&key.ue) {
                            tb.lost = true;
                            tb.purged += 1;
                        }
                    }
                }
            }
            self.purged.fetch_add(jobs.len() as u64, Ordering::SeqCst);
        }
        self.changed.notify_all();
        let n = jobs.len();
        if let Some(c) = captor {
            for job in jobs {
                c.capture(purged_record(&job, now));
            }
        }
        n
    }

    /// Marks one CCDU as run and applies `f` to its subframe state.
    fn finish(&self, direction: Direction, subframe: u64, f: impl FnOnce(&mut SubframeState)) {
        {
            let mut t = self.tracker();
            if let Some(st) = t.subframes.get_mut(&(direction, subframe)) {
                f(st);
                st.finished += 1;
            }
            self.completed.fetch_add(1, Ordering::SeqCst);
        }
        self.changed.notify_all();
    }
}

fn tb_keys<T>(payload: &Payload<T>) -> Vec<TbKey> {
    match payload {
        Payload::Encode(items) => items
            .iter()
            .map(|i| match i {
                EncodeItem::Tb(tb) => tb.key(),
                EncodeItem::Cb(cb) => cb.tb,
            })
            .collect(),
        Payload::Decode(items) => items.iter().map(|i| i.layout.key).collect(),
    }
}

fn block_count<T>(payload: &Payload<T>) -> u32 {
    match payload {
        Payload::Encode(items) => items.len() as u32,
        Payload::Decode(items) => items.iter().map(|i| i.blocks.len() as u32).sum(),
    }
}

fn carried_tbs(granularity: Granularity, items: usize) -> u32 {
    if granularity == Granularity::Cb {
        0
    } else {
        items as u32
    }
}

fn purged_record<T>(job: &Ccdu<T>, now: u64) -> KpiRecord {
    let t = now.max(job.t_enqueue);
    let tbs = carried_tbs(job.granularity, tb_keys(&job.payload).len());
    KpiRecord {
        ccdu_id: job.id,
        subframe: job.subframe,
        ue: job.ue,
        cb_index: job.cb_index,
        granularity: job.granularity,
        direction: job.direction(),
        t_enqueue: job.t_enqueue,
        t_start: t,
        t_code_start: t,
        t_code_end: t,
        t_end: t,
        iterations: 0,
        code_blocks: block_count(&job.payload),
        tb_total: tbs,
        tb_failed: tbs,
        worker: None,
        outcome: Outcome::Purged,
    }
}

impl<T: LlrScalar> Shared<T> {
    fn run(
        &self,
        job: Ccdu<T>,
        worker: usize,
        t_start: u64,
        decoder: &mut TurboDecoder<T>,
        captor: Option<&Captor>,
    ) {
        let mut rec = KpiRecord {
            ccdu_id: job.id,
            subframe: job.subframe,
            ue: job.ue,
            cb_index: job.cb_index,
            granularity: job.granularity,
            direction: job.direction(),
            t_enqueue: job.t_enqueue,
            t_start,
            t_code_start: t_start,
            t_code_end: t_start,
            t_end: t_start,
            iterations: 0,
            code_blocks: 0,
            tb_total: 0,
            tb_failed: 0,
            worker: Some(worker as u32),
            outcome: Outcome::Success,
        };
        match job.payload {
            Payload::Encode(items) => self.run_encode(items, &mut rec),
            Payload::Decode(items) => self.run_decode(items, &mut rec, decoder, captor),
        }
        rec.t_end = self.now();
        if let Some(c) = captor {
            c.capture(rec);
        }
    }

    fn run_encode(&self, items: Vec<EncodeItem>, rec: &mut KpiRecord) {
        rec.tb_total = carried_tbs(rec.granularity, items.len());
        let max = self.config.max_code_blocks;
        let blocks: Vec<_> = items
            .into_iter()
            .flat_map(|item| match item {
                EncodeItem::Tb(tb) => {
                    segment_tb_with_limit(&tb, max).expect("TB checked at enqueue")
                }
                EncodeItem::Cb(cb) => vec![cb],
            })
            .collect();
        rec.t_code_start = self.now();
        let encoded: Vec<(TbKey, usize, EncodedBlock)> = blocks
            .iter()
            .map(|cb| {
                (
                    cb.tb,
                    cb.index,
                    turbo_encode(cb).expect("segmented block has a supported size"),
                )
            })
            .collect();
        rec.t_code_end = self.now();
        rec.code_blocks = encoded.len() as u32;

        self.finish(Direction::Encode, rec.subframe, |st| {
            for (key, index, eb) in encoded {
                let Some(tb) = st.tbs.get_mut(&key.ue) else {
                    continue;
                };
                tb.encoded.push((index, eb));
                if tb.encoded.len() == tb.layout.count {
                    tb.encoded.sort_by_key(|(i, _)| *i);
                    let blocks = std::mem::take(&mut tb.encoded)
                        .into_iter()
                        .map(|(_, eb)| eb)
                        .collect();
                    tb.done = Some(TbStatus::Encoded(blocks));
                }
            }
        });
    }

    fn run_decode(
        &self,
        items: Vec<DecodeItem<T>>,
        rec: &mut KpiRecord,
        decoder: &mut TurboDecoder<T>,
        captor: Option<&Captor>,
    ) {
        rec.tb_total = carried_tbs(rec.granularity, items.len());
        let max_iter = self.config.max_iterations;
        rec.t_code_start = self.now();
        let mut results: Vec<(TbLayout, Vec<(usize, DecodeResult)>, bool)> =
            Vec::with_capacity(items.len());
        for item in &items {
            let key = item.layout.key;
            let mut out = Vec::with_capacity(item.blocks.len());
            let mut failed = false;
            for (index, llr) in &item.blocks {
                let forced = self
                    .config
                    .fail_hook
                    .as_ref()
                    .is_some_and(|h| h(key, *index));
                let mut r = decoder
                    .decode(llr, max_iter, self.config.early_stop && !forced)
                    .expect("soft block checked at enqueue");
                if forced {
                    r.success = false;
                }
                rec.iterations = rec.iterations.max(r.iterations_used);
                rec.code_blocks += 1;
                failed |= !r.success;
                out.push((*index, r));
                if failed {
                    // the TB is lost; its remaining blocks are skipped
                    break;
                }
            }
            results.push((item.layout, out, failed));
        }
        rec.t_code_end = self.now();

        let n_failed = results.iter().filter(|r| r.2).count() as u32;
        if n_failed > 0 {
            rec.outcome = Outcome::DecodeFailure;
            if rec.granularity != Granularity::Cb {
                rec.tb_failed = n_failed;
            }
            for (layout, _, failed) in &results {
                if *failed {
                    let purged = self.purge(layout.key, captor);
                    if purged > 0 {
                        debug!(
                            "purged {purged} CCDUs of UE {} subframe {}",
                            layout.key.ue, layout.key.subframe
                        );
                    }
                }
            }
        }

        let mut fault = None;
        self.finish(Direction::Decode, rec.subframe, |st| {
            for (layout, out, failed) in results {
                let Some(tb) = st.tbs.get_mut(&layout.key.ue) else {
                    continue;
                };
                if failed {
                    tb.lost = true;
                    tb.failed
                        .extend(out.iter().filter(|(_, r)| !r.success).map(|(i, _)| *i));
                }
                if tb.lost {
                    continue;
                }
                tb.decoded.extend(out);
                if tb.decoded.len() == tb.layout.count {
                    match reassemble_tb(&tb.layout, &std::mem::take(&mut tb.decoded)) {
                        Ok(Reassembly::Delivered(payload)) => {
                            tb.done = Some(TbStatus::Delivered(payload))
                        }
                        Ok(Reassembly::Lost { failed }) => {
                            tb.lost = true;
                            tb.failed = failed;
                        }
                        Err(e) => fault = Some(format!("reassembly of UE {}: {e}", layout.key.ue)),
                    }
                }
            }
        });
        if let Some(f) = fault {
            self.set_fault(f);
        }
    }
}
