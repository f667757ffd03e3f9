//! UDP data path: unicast frames, positive acks with exponential backoff and
//! per-stream reordering on the receiving side.

use std::collections::{HashMap, HashSet, VecDeque};
use std::io;
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socket2::{Domain, Protocol, Socket, Type};

use super::config::UdpConfig;
use super::counters::{bump, Counters};
use super::envelope::{encode_frame, flags, FrameView, MAX_PAYLOAD_LEN, MIN_FRAME_LEN};
use super::queue::Sample;
use super::BusError;

/// Socket read timeout; bounds how long shutdown waits on the receive thread.
pub(crate) const POLL: Duration = Duration::from_millis(20);
const IDLE_TIMER: Duration = Duration::from_millis(100);

/// `a` comes after `b` in wrapping sequence order.
fn after(a: u32, b: u32) -> bool {
    (a.wrapping_sub(b) as i32) > 0
}

struct Pending {
    seq: u32,
    frame: Vec<u8>,
    retries: u32,
    max_retries: u32,
    first_sent: Instant,
    due: Instant,
}

#[derive(Default)]
struct TxStream {
    started: bool,
    pending: VecDeque<Pending>,
}

#[derive(Default)]
struct TxState {
    streams: HashMap<(SocketAddr, u64), TxStream>,
    last_ack: HashMap<SocketAddr, Instant>,
    dead: HashSet<SocketAddr>,
}

#[derive(Default)]
struct RxStream {
    synced: bool,
    expected: u32,
    buffer: HashMap<u32, Sample>,
    stalled_since: Option<Instant>,
    last_best_effort: Option<u32>,
}

impl RxStream {
    fn drain(&mut self, now: Instant, out: &mut Vec<Sample>) {
        while let Some(s) = self.buffer.remove(&self.expected) {
            out.push(s);
            self.expected = self.expected.wrapping_add(1);
        }
        self.stalled_since = if self.buffer.is_empty() { None } else { Some(now) };
    }

    fn earliest_buffered(&self) -> Option<u32> {
        let mut keys = self.buffer.keys().copied();
        let first = keys.next()?;
        Some(keys.fold(first, |m, k| if after(m, k) { k } else { m }))
    }

    /// Deliver everything buffered before `target` in order, then continue at
    /// `target`.
    fn skip_to(&mut self, target: u32, out: &mut Vec<Sample>) {
        let mut earlier: Vec<u32> = self
            .buffer
            .keys()
            .copied()
            .filter(|&k| after(target, k))
            .collect();
        earlier.sort_by_key(|&k| k.wrapping_sub(target) as i32);
        for k in earlier {
            out.push(self.buffer.remove(&k).unwrap());
        }
        self.expected = target;
        self.synced = true;
    }

    fn accept_reliable(&mut self, sample: Sample, sync: bool, now: Instant, out: &mut Vec<Sample>) -> bool {
        let seq = sample.seq;
        if !self.synced {
            if !sync {
                self.buffer.entry(seq).or_insert(sample);
                self.stalled_since.get_or_insert(now);
                return true;
            }
            self.buffer.retain(|&k, _| !after(seq, k));
            self.synced = true;
            self.expected = seq;
        } else if sync && after(seq, self.expected) {
            // The sender restarted the stream towards us.
            self.skip_to(seq, out);
        }
        if seq == self.expected {
            out.push(sample);
            self.expected = seq.wrapping_add(1);
            self.drain(now, out);
            true
        } else if after(seq, self.expected) {
            let fresh = !self.buffer.contains_key(&seq);
            self.buffer.entry(seq).or_insert(sample);
            self.stalled_since.get_or_insert(now);
            fresh
        } else {
            false
        }
    }

    fn accept_best_effort(&mut self, sample: Sample, out: &mut Vec<Sample>) -> bool {
        if self.last_best_effort.is_none_or(|last| after(sample.seq, last)) {
            self.last_best_effort = Some(sample.seq);
            out.push(sample);
            true
        } else {
            false
        }
    }
}

pub(crate) struct UdpLink {
    socket: UdpSocket,
    local_addr: SocketAddr,
    retransmit_base: Duration,
    gap_timeout: Duration,
    loss: Option<Mutex<(f64, ChaCha8Rng)>>,
    tx: Mutex<TxState>,
    window_cv: Condvar,
    timer_cv: Condvar,
    rx: Mutex<HashMap<(SocketAddr, u64), RxStream>>,
}

impl UdpLink {
    pub(crate) fn bind(cfg: &UdpConfig) -> io::Result<Self> {
        let domain = if cfg.bind.is_ipv4() { Domain::IPV4 } else { Domain::IPV6 };
        let s = Socket::new(domain, Type::DGRAM, Some(Protocol::UDP))?;
        // Best effort: the kernel may clamp buffer sizes.
        let _ = s.set_recv_buffer_size(cfg.recv_buffer_bytes);
        let _ = s.set_send_buffer_size(cfg.recv_buffer_bytes);
        s.bind(&SocketAddr::new(cfg.bind, 0).into())?;
        let socket: UdpSocket = s.into();
        socket.set_read_timeout(Some(POLL))?;
        let local_addr = socket.local_addr()?;
        Ok(Self {
            socket,
            local_addr,
            retransmit_base: cfg.retransmit_base,
            gap_timeout: cfg.gap_timeout,
            loss: cfg
                .loss
                .map(|l| Mutex::new((l.rate, ChaCha8Rng::seed_from_u64(l.seed)))),
            tx: Mutex::new(TxState::default()),
            window_cv: Condvar::new(),
            timer_cv: Condvar::new(),
            rx: Mutex::new(HashMap::new()),
        })
    }

    pub(crate) fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    fn transmit(&self, frame: &[u8], dest: SocketAddr, counters: &Counters) {
        if let Some(loss) = &self.loss {
            let mut g = loss.lock().unwrap();
            let rate = g.0;
            if g.1.random::<f64>() < rate {
                bump(&counters.loss_injected);
                return;
            }
        }
        match self.socket.send_to(frame, dest) {
            Ok(_) => bump(&counters.frames_sent),
            Err(_) => bump(&counters.send_errors),
        }
    }

    pub(crate) fn send_best_effort(&self, frame: &[u8], dests: &[SocketAddr], counters: &Counters) {
        for &d in dests {
            self.transmit(frame, d, counters);
        }
    }

    /// Queue and send one reliable frame, blocking while the stream already
    /// has `window` unacknowledged frames.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn send_reliable(
        &self,
        running: &AtomicBool,
        counters: &Counters,
        dest: SocketAddr,
        topic_hash: u64,
        seq: u32,
        timestamp_ns: u64,
        payload: &[u8],
        window: usize,
        max_retries: u32,
    ) -> Result<(), BusError> {
        let mut tx = self.tx.lock().unwrap();
        loop {
            if !running.load(Ordering::Acquire) {
                return Err(BusError::Closed);
            }
            if tx.dead.contains(&dest) {
                return Ok(());
            }
            let stream = tx.streams.entry((dest, topic_hash)).or_default();
            if stream.pending.len() < window {
                break;
            }
            tx = self.window_cv.wait_timeout(tx, IDLE_TIMER).unwrap().0;
        }
        let stream = tx.streams.get_mut(&(dest, topic_hash)).unwrap();
        let mut f = flags::RELIABLE;
        if !stream.started {
            f |= flags::SYNC;
            stream.started = true;
        }
        let frame = encode_frame(f, topic_hash, seq, timestamp_ns, payload)?;
        self.transmit(&frame, dest, counters);
        let now = Instant::now();
        stream.pending.push_back(Pending {
            seq,
            frame,
            retries: 0,
            max_retries,
            first_sent: now,
            due: now + self.retransmit_base,
        });
        drop(tx);
        self.timer_cv.notify_one();
        Ok(())
    }

    pub(crate) fn send_ack(&self, dest: SocketAddr, topic_hash: u64, seq: u32, counters: &Counters) {
        let frame = encode_frame(flags::ACK, topic_hash, seq, 0, &[]).expect("empty payload");
        bump(&counters.acks_sent);
        self.transmit(&frame, dest, counters);
    }

    pub(crate) fn on_ack(&self, src: SocketAddr, topic_hash: u64, seq: u32) {
        let mut tx = self.tx.lock().unwrap();
        tx.last_ack.insert(src, Instant::now());
        if let Some(stream) = tx.streams.get_mut(&(src, topic_hash)) {
            if let Some(i) = stream.pending.iter().position(|p| p.seq == seq) {
                stream.pending.remove(i);
                drop(tx);
                self.window_cv.notify_all();
            }
        }
    }

    /// Retransmits due frames. Returns destinations declared dead: a frame
    /// ran out of retries and nothing at all was acknowledged by that
    /// destination since the frame was first sent.
    fn retransmit_pass(&self, counters: &Counters, tx: &mut TxState) -> (Instant, Vec<SocketAddr>) {
        let now = Instant::now();
        let mut next = now + IDLE_TIMER;
        let mut exhausted: Vec<(SocketAddr, Instant)> = Vec::new();
        for (&(dest, _), stream) in tx.streams.iter_mut() {
            stream.pending.retain_mut(|p| {
                if p.due <= now {
                    if p.retries >= p.max_retries {
                        bump(&counters.abandoned);
                        exhausted.push((dest, p.first_sent));
                        return false;
                    }
                    p.retries += 1;
                    bump(&counters.retransmits);
                    self.transmit(&p.frame, dest, counters);
                    p.due = now + self.retransmit_base * (1u32 << p.retries.min(16));
                }
                next = next.min(p.due);
                true
            });
        }
        let mut dead = Vec::new();
        for (dest, first_sent) in exhausted {
            let silent = tx.last_ack.get(&dest).is_none_or(|&t| t < first_sent);
            if silent && !dead.contains(&dest) {
                dead.push(dest);
            }
        }
        for d in &dead {
            tx.streams.retain(|(a, _), _| a != d);
            tx.dead.insert(*d);
        }
        (next, dead)
    }

    /// Timer loop; `on_dead` runs without the transmit lock held.
    pub(crate) fn run_timer(&self, running: &AtomicBool, counters: &Counters, on_dead: impl Fn(SocketAddr)) {
        let mut tx = self.tx.lock().unwrap();
        while running.load(Ordering::Acquire) {
            let (next, dead) = self.retransmit_pass(counters, &mut tx);
            if !dead.is_empty() {
                drop(tx);
                self.window_cv.notify_all();
                for d in dead {
                    on_dead(d);
                }
                tx = self.tx.lock().unwrap();
                continue;
            }
            let wait = next.saturating_duration_since(Instant::now());
            tx = self.timer_cv.wait_timeout(tx, wait).unwrap().0;
        }
    }

    /// Drop all state for a peer that expired or was declared dead.
    pub(crate) fn forget(&self, dest: SocketAddr) {
        {
            let mut tx = self.tx.lock().unwrap();
            tx.streams.retain(|(a, _), _| *a != dest);
            tx.last_ack.remove(&dest);
            tx.dead.insert(dest);
        }
        self.rx.lock().unwrap().retain(|(a, _), _| *a != dest);
        self.window_cv.notify_all();
    }

    /// A peer reappeared in discovery.
    pub(crate) fn revive(&self, dest: SocketAddr) {
        self.tx.lock().unwrap().dead.remove(&dest);
    }

    pub(crate) fn wake_all(&self) {
        self.window_cv.notify_all();
        self.timer_cv.notify_all();
    }

    pub(crate) fn recv(&self, buf: &mut [u8]) -> io::Result<(usize, SocketAddr)> {
        self.socket.recv_from(buf)
    }

    /// Runs an incoming data frame through the per-stream ordering rules and
    /// appends deliverable samples to `out`.
    pub(crate) fn order(&self, src: SocketAddr, view: &FrameView<'_>, sample: Sample, counters: &Counters, out: &mut Vec<Sample>) {
        let mut rx = self.rx.lock().unwrap();
        let stream = rx.entry((src, view.topic_hash)).or_default();
        let fresh = if view.flags & flags::RELIABLE != 0 {
            stream.accept_reliable(sample, view.flags & flags::SYNC != 0, Instant::now(), out)
        } else {
            stream.accept_best_effort(sample, out)
        };
        if !fresh {
            bump(&counters.duplicates);
        }
    }

    /// Gives up on gaps older than the gap timeout.
    pub(crate) fn sweep(&self, out: &mut Vec<Sample>) {
        let now = Instant::now();
        let mut rx = self.rx.lock().unwrap();
        for stream in rx.values_mut() {
            let Some(since) = stream.stalled_since else { continue };
            if now.duration_since(since) < self.gap_timeout {
                continue;
            }
            if let Some(first) = stream.earliest_buffered() {
                stream.skip_to(first, out);
                stream.drain(now, out);
            } else {
                stream.stalled_since = None;
            }
        }
    }
}

/// Largest datagram a data socket can receive.
pub(crate) const RECV_BUF_LEN: usize = MAX_PAYLOAD_LEN + MIN_FRAME_LEN;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bus::queue::Origin;
    use std::sync::Arc;

    fn s(seq: u32) -> Sample {
        Sample {
            topic_hash: 9,
            seq,
            timestamp_ns: 0,
            origin: Origin::Local(0),
            payload: Arc::from(&[][..]),
        }
    }

    fn seqs(v: &[Sample]) -> Vec<u32> {
        v.iter().map(|s| s.seq).collect()
    }

    #[test]
    fn wrapping_order() {
        assert!(after(1, 0));
        assert!(after(0, u32::MAX));
        assert!(!after(5, 5));
        assert!(!after(u32::MAX, 0));
    }

    #[test]
    fn reorders_and_waits_for_sync() {
        let now = Instant::now();
        let mut st = RxStream::default();
        let mut out = Vec::new();
        st.accept_reliable(s(11), false, now, &mut out);
        assert!(out.is_empty());
        st.accept_reliable(s(10), true, now, &mut out);
        assert_eq!(seqs(&out), vec![10, 11]);
        st.accept_reliable(s(13), false, now, &mut out);
        st.accept_reliable(s(12), false, now, &mut out);
        assert_eq!(seqs(&out), vec![10, 11, 12, 13]);
        assert!(!st.accept_reliable(s(12), false, now, &mut out));
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn reorders_across_wrap() {
        let now = Instant::now();
        let mut st = RxStream::default();
        let mut out = Vec::new();
        st.accept_reliable(s(u32::MAX - 1), true, now, &mut out);
        st.accept_reliable(s(0), false, now, &mut out);
        st.accept_reliable(s(u32::MAX), false, now, &mut out);
        assert_eq!(seqs(&out), vec![u32::MAX - 1, u32::MAX, 0]);
    }

    #[test]
    fn skip_delivers_in_order() {
        let mut st = RxStream::default();
        let mut out = Vec::new();
        for k in [7, 5, 6] {
            st.buffer.insert(k, s(k));
        }
        let first = st.earliest_buffered().unwrap();
        assert_eq!(first, 5);
        st.skip_to(first, &mut out);
        st.drain(Instant::now(), &mut out);
        assert_eq!(seqs(&out), vec![5, 6, 7]);
    }

    #[test]
    fn best_effort_drops_stale() {
        let mut st = RxStream::default();
        let mut out = Vec::new();
        for k in [1, 3, 2, 4] {
            st.accept_best_effort(s(k), &mut out);
        }
        assert_eq!(seqs(&out), vec![1, 3, 4]);
    }
}
