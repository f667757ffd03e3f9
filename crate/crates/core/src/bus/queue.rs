//! Bounded per-subscriber sample queue.

use std::collections::VecDeque;
use std::net::SocketAddr;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

/// Where a sample came from. Sequence numbers are only comparable between
/// samples sharing an origin and topic hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    /// Publisher in the same participant, identified by a process-unique key.
    Local(u64),
    /// Remote participant's data socket.
    Remote(SocketAddr),
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub topic_hash: u64,
    pub seq: u32,
    pub timestamp_ns: u64,
    pub origin: Origin,
    pub payload: Arc<[u8]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Overflow {
    DropOldest,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PushOutcome {
    Accepted,
    ReplacedOldest,
    Closed,
}

struct State {
    items: VecDeque<Sample>,
    closed: bool,
    dropped: u64,
}

pub(crate) struct SampleQueue {
    state: Mutex<State>,
    readable: Condvar,
    writable: Condvar,
    depth: usize,
    overflow: Overflow,
}

impl SampleQueue {
    pub(crate) fn new(depth: usize, overflow: Overflow) -> Self {
        Self {
            state: Mutex::new(State {
                items: VecDeque::with_capacity(depth.min(1024)),
                closed: false,
                dropped: 0,
            }),
            readable: Condvar::new(),
            writable: Condvar::new(),
            depth,
            overflow,
        }
    }

    pub(crate) fn push(&self, sample: Sample) -> PushOutcome {
        let mut st = self.state.lock().unwrap();
        let mut outcome = PushOutcome::Accepted;
        loop {
            if st.closed {
                return PushOutcome::Closed;
            }
            if st.items.len() < self.depth {
                break;
            }
            match self.overflow {
                Overflow::DropOldest => {
                    st.items.pop_front();
                    st.dropped += 1;
                    outcome = PushOutcome::ReplacedOldest;
                    break;
                }
                Overflow::Block => st = self.writable.wait(st).unwrap(),
            }
        }
        st.items.push_back(sample);
        drop(st);
        self.readable.notify_one();
        outcome
    }

    pub(crate) fn try_pop(&self) -> Option<Sample> {
        let item = self.state.lock().unwrap().items.pop_front();
        if item.is_some() {
            self.writable.notify_one();
        }
        item
    }

    /// Waits up to `timeout`; returns `None` on timeout or once closed and
    /// drained.
    pub(crate) fn pop_timeout(&self, timeout: Duration) -> Option<Sample> {
        let deadline = Instant::now() + timeout;
        let mut st = self.state.lock().unwrap();
        loop {
            if let Some(item) = st.items.pop_front() {
                drop(st);
                self.writable.notify_one();
                return Some(item);
            }
            if st.closed {
                return None;
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            st = self.readable.wait_timeout(st, deadline - now).unwrap().0;
        }
    }

    pub(crate) fn close(&self) {
        self.state.lock().unwrap().closed = true;
        self.readable.notify_all();
        self.writable.notify_all();
    }

    pub(crate) fn is_closed(&self) -> bool {
        self.state.lock().unwrap().closed
    }

    pub(crate) fn len(&self) -> usize {
        self.state.lock().unwrap().items.len()
    }

    pub(crate) fn dropped(&self) -> u64 {
        self.state.lock().unwrap().dropped
    }
}
