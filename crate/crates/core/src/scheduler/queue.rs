use std::collections::VecDeque;
use std::sync::{Condvar, Mutex, MutexGuard};
use std::thread;

use super::IdleStrategy;

#[derive(Debug)]
struct Inner<J> {
    items: VecDeque<J>,
    /// Mirrors `items.len()`.
    pending: usize,
    closed: bool,
}

/// FIFO job queue under one mutex, with a condition variable for waiters.
#[derive(Debug)]
pub struct JobQueue<J> {
    inner: Mutex<Inner<J>>,
    ready: Condvar,
}

impl<J> Default for JobQueue<J> {
    fn default() -> Self {
        Self::new()
    }
}

impl<J> JobQueue<J> {
    pub fn new() -> Self {
        Self {
            inner: Mutex::new(Inner {
                items: VecDeque::new(),
                pending: 0,
                closed: false,
            }),
            ready: Condvar::new(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, Inner<J>> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Appends all jobs atomically. Returns them back if the queue is closed.
    pub fn push_all(&self, jobs: Vec<J>) -> Result<(), Vec<J>> {
        let mut g = self.lock();
        if g.closed {
            return Err(jobs);
        }
        g.pending += jobs.len();
        g.items.extend(jobs);
        drop(g);
        self.ready.notify_all();
        Ok(())
    }

    pub fn push(&self, job: J) -> Result<(), J> {
        self.push_all(vec![job])
            .map_err(|mut v| v.pop().expect("one job"))
    }

    pub fn try_pop(&self) -> Option<J> {
        let mut g = self.lock();
        let job = g.items.pop_front();
        if job.is_some() {
            g.pending -= 1;
        }
        job
    }

    /// Waits for the head of the queue. `None` once the queue is closed.
    pub fn pop_wait(&self, idle: IdleStrategy) -> Option<J> {
        if let IdleStrategy::Spin(n) = idle {
            for _ in 0..n {
                {
                    let mut g = self.lock();
                    if g.closed {
                        return None;
                    }
                    if let Some(job) = g.items.pop_front() {
                        g.pending -= 1;
                        return Some(job);
                    }
                }
                thread::yield_now();
            }
        }
        let mut g = self.lock();
        loop {
            if g.closed {
                return None;
            }
            if let Some(job) = g.items.pop_front() {
                g.pending -= 1;
                return Some(job);
            }
            g = self.ready.wait(g).unwrap_or_else(|e| e.into_inner());
        }
    }

    /// Removes every queued job matching `pred`, keeping the others in order.
    pub fn remove_where(&self, mut pred: impl FnMut(&J) -> bool) -> Vec<J> {
        let mut g = self.lock();
        let mut removed = Vec::new();
        let mut kept = VecDeque::with_capacity(g.items.len());
        for job in g.items.drain(..) {
            if pred(&job) {
                removed.push(job);
            } else {
                kept.push_back(job);
            }
        }
        g.items = kept;
        g.pending = g.items.len();
        removed
    }

    pub fn len(&self) -> usize {
        self.lock().pending
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rejects further pushes and wakes every waiter. Queued jobs are
    /// returned.
    pub fn close(&self) -> Vec<J> {
        let mut g = self.lock();
        g.closed = true;
        g.pending = 0;
        let rest = g.items.drain(..).collect();
        drop(g);
        self.ready.notify_all();
        rest
    }

    pub fn is_closed(&self) -> bool {
        self.lock().closed
    }
}
