use std::sync::atomic::{AtomicU64, Ordering};

/// Snapshot of a participant's traffic counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TransportCounters {
    /// Data frames and acks handed to the socket.
    pub frames_sent: u64,
    pub frames_received: u64,
    /// Samples delivered through the in-process path.
    pub intra_deliveries: u64,
    /// Outgoing frames discarded by loss injection.
    pub loss_injected: u64,
    pub retransmits: u64,
    /// Reliable frames given up after `max_retries`.
    pub abandoned: u64,
    pub acks_sent: u64,
    pub duplicates: u64,
    pub malformed: u64,
    pub send_errors: u64,
    pub announcements_sent: u64,
    pub announcements_received: u64,
}

#[derive(Default)]
pub(crate) struct Counters {
    pub(crate) frames_sent: AtomicU64,
    pub(crate) frames_received: AtomicU64,
    pub(crate) intra_deliveries: AtomicU64,
    pub(crate) loss_injected: AtomicU64,
    pub(crate) retransmits: AtomicU64,
    pub(crate) abandoned: AtomicU64,
    pub(crate) acks_sent: AtomicU64,
    pub(crate) duplicates: AtomicU64,
    pub(crate) malformed: AtomicU64,
    pub(crate) send_errors: AtomicU64,
    pub(crate) announcements_sent: AtomicU64,
    pub(crate) announcements_received: AtomicU64,
}

pub(crate) fn bump(c: &AtomicU64) {
    c.fetch_add(1, Ordering::Relaxed);
}

impl Counters {
    pub(crate) fn snapshot(&self) -> TransportCounters {
        let g = |c: &AtomicU64| c.load(Ordering::Relaxed);
        TransportCounters {
            frames_sent: g(&self.frames_sent),
            frames_received: g(&self.frames_received),
            intra_deliveries: g(&self.intra_deliveries),
            loss_injected: g(&self.loss_injected),
            retransmits: g(&self.retransmits),
            abandoned: g(&self.abandoned),
            acks_sent: g(&self.acks_sent),
            duplicates: g(&self.duplicates),
            malformed: g(&self.malformed),
            send_errors: g(&self.send_errors),
            announcements_sent: g(&self.announcements_sent),
            announcements_received: g(&self.announcements_received),
        }
    }
}
