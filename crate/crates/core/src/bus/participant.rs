use std::collections::HashMap;
use std::fmt;
use std::marker::PhantomData;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use super::config::{check_domain, ParticipantConfig};
use super::counters::{bump, Counters, TransportCounters};
use super::discovery::{self, PeerTable};
use super::envelope::{encode_frame, flags, EnvelopeError, FrameView, MAX_PAYLOAD_LEN};
use super::hash::topic_hash;
use super::qos::QosPolicy;
use super::queue::{Origin, Overflow, PushOutcome, Sample, SampleQueue};
use super::registry::{LocalRegistry, SubShared};
use super::transport::{UdpLink, RECV_BUF_LEN};
use super::BusError;
use crate::messages::{CodecError, Direction, Endpoint, Message, ParticipantInfo};

static NEXT_KEY: AtomicU64 = AtomicU64::new(1);

fn now_ns() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

fn check_name(what: &'static str, s: &str) -> Result<(), BusError> {
    if s.is_empty() {
        return Err(BusError::InvalidName(what));
    }
    if s.len() > usize::from(u16::MAX) {
        return Err(BusError::InvalidName("name longer than 65535 bytes"));
    }
    Ok(())
}

#[derive(Default)]
struct LocalEndpoints {
    publishers: HashMap<u64, (String, String)>,
    subscribers: HashMap<u64, Arc<SubShared>>,
}

pub(crate) struct Shared {
    pub(crate) id: u64,
    pub(crate) name: String,
    pub(crate) domain_id: u8,
    registry: LocalRegistry,
    local: Mutex<LocalEndpoints>,
    pub(crate) peers: Mutex<PeerTable>,
    pub(crate) udp: Option<UdpLink>,
    pub(crate) counters: Counters,
    pub(crate) running: AtomicBool,
    pub(crate) announce_requested: AtomicBool,
}

impl Shared {
    pub(crate) fn info(&self) -> ParticipantInfo {
        let mut endpoints = Vec::new();
        if let Some(udp) = &self.udp {
            let address = udp.local_addr();
            let local = self.local.lock().unwrap();
            for &h in local.publishers.keys() {
                endpoints.push(Endpoint {
                    topic_hash: h,
                    direction: Direction::Publish,
                    address,
                });
            }
            for &h in local.subscribers.keys() {
                endpoints.push(Endpoint {
                    topic_hash: h,
                    direction: Direction::Subscribe,
                    address,
                });
            }
            endpoints.sort_by_key(|e| (e.topic_hash, e.direction == Direction::Subscribe));
        }
        ParticipantInfo {
            participant_id: self.id,
            name: self.name.clone(),
            domain_id: self.domain_id,
            endpoints,
        }
    }

    fn remote_destinations(&self, topic_hash: u64) -> Vec<SocketAddr> {
        let mut out = Vec::new();
        if self.udp.is_some() {
            let table = self.peers.lock().unwrap();
            table.subscriber_addresses(topic_hash, |id| self.registry.is_member(id), &mut out);
        }
        out
    }

    fn mark_dead(&self, addr: SocketAddr) {
        self.peers
            .lock()
            .unwrap()
            .peers
            .retain(|_, p| !p.data_addresses().any(|a| a == addr));
    }

    fn deliver_remote(&self, sample: Sample) {
        let sub = self.local.lock().unwrap().subscribers.get(&sample.topic_hash).cloned();
        if let Some(sub) = sub {
            sub.queue.push(sample);
        }
    }

    fn receive_loop(&self) {
        let udp = self.udp.as_ref().expect("receive loop requires UDP");
        let mut buf = vec![0u8; RECV_BUF_LEN];
        let mut ready = Vec::new();
        let mut last_sweep = Instant::now();
        while self.running.load(Ordering::Acquire) {
            if let Ok((n, src)) = udp.recv(&mut buf) {
                bump(&self.counters.frames_received);
                match FrameView::parse(&buf[..n]) {
                    Err(_) => bump(&self.counters.malformed),
                    Ok(view) if view.flags & flags::ACK != 0 => udp.on_ack(src, view.topic_hash, view.seq),
                    Ok(view) => {
                        if view.flags & flags::RELIABLE != 0 {
                            udp.send_ack(src, view.topic_hash, view.seq, &self.counters);
                        }
                        let sample = Sample {
                            topic_hash: view.topic_hash,
                            seq: view.seq,
                            timestamp_ns: view.timestamp_ns,
                            origin: Origin::Remote(src),
                            payload: Arc::from(view.payload),
                        };
                        udp.order(src, &view, sample, &self.counters, &mut ready);
                    }
                }
            }
            if last_sweep.elapsed() >= Duration::from_millis(50) {
                udp.sweep(&mut ready);
                last_sweep = Instant::now();
            }
            for s in ready.drain(..) {
                self.deliver_remote(s);
            }
        }
    }

    fn request_announce(&self) {
        self.announce_requested.store(true, Ordering::Release);
    }
}

/// A named member of a domain that owns publishers and subscribers.
///
/// Dropping the participant stops its transport threads immediately and
/// closes its subscriber queues. Nothing is sent on the way out; remote
/// peers notice through discovery expiry, exactly as they would for a crash.
pub struct Participant {
    shared: Arc<Shared>,
    threads: Vec<JoinHandle<()>>,
}

impl fmt::Debug for Participant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Participant")
            .field("id", &self.shared.id)
            .field("name", &self.shared.name)
            .field("domain_id", &self.shared.domain_id)
            .finish()
    }
}

impl Participant {
    pub fn new(name: &str, domain_id: u32, config: ParticipantConfig) -> Result<Self, BusError> {
        Self::with_registry(name, domain_id, config, LocalRegistry::new())
    }

    /// Like [`Participant::new`], joining an existing in-process registry.
    pub fn with_registry(
        name: &str,
        domain_id: u32,
        config: ParticipantConfig,
        registry: LocalRegistry,
    ) -> Result<Self, BusError> {
        check_name("participant name must be non-empty", name)?;
        let domain_id = check_domain(domain_id)?;
        let udp = match &config.udp {
            Some(cfg) => Some(UdpLink::bind(cfg).map_err(BusError::TransportUnavailable)?),
            None => None,
        };
        let discovery = match (&config.discovery, &udp) {
            (Some(cfg), Some(_)) => Some((
                discovery::open_socket(cfg).map_err(BusError::TransportUnavailable)?,
                cfg.clone(),
            )),
            _ => None,
        };
        let mut id = rand::random::<u64>();
        while id == 0 {
            id = rand::random();
        }
        registry.join(id);
        let shared = Arc::new(Shared {
            id,
            name: name.to_string(),
            domain_id,
            registry,
            local: Mutex::new(LocalEndpoints::default()),
            peers: Mutex::new(PeerTable::default()),
            udp,
            counters: Counters::default(),
            running: AtomicBool::new(true),
            announce_requested: AtomicBool::new(false),
        });
        let mut threads = Vec::new();
        if shared.udp.is_some() {
            let s = Arc::clone(&shared);
            threads.push(spawn(&format!("{name}-rx"), move || s.receive_loop())?);
            let s = Arc::clone(&shared);
            threads.push(spawn(&format!("{name}-rtx"), move || {
                let udp = s.udp.as_ref().unwrap();
                udp.run_timer(&s.running, &s.counters, |dead| {
                    s.mark_dead(dead);
                    udp.forget(dead);
                })
            })?);
        }
        if let Some((socket, cfg)) = discovery {
            let s = Arc::clone(&shared);
            threads.push(spawn(&format!("{name}-disc"), move || discovery::run(&s, socket, cfg))?);
        }
        Ok(Self { shared, threads })
    }

    /// Intra-process participant with no sockets, joined to `registry`.
    pub fn local(name: &str, domain_id: u32, registry: &LocalRegistry) -> Result<Self, BusError> {
        Self::with_registry(name, domain_id, ParticipantConfig::intra_process(), registry.clone())
    }

    pub fn id(&self) -> u64 {
        self.shared.id
    }

    pub fn name(&self) -> &str {
        &self.shared.name
    }

    pub fn domain_id(&self) -> u8 {
        self.shared.domain_id
    }

    /// Current announcement contents.
    pub fn info(&self) -> ParticipantInfo {
        self.shared.info()
    }

    /// Data socket address, if UDP is enabled.
    pub fn data_address(&self) -> Option<SocketAddr> {
        self.shared.udp.as_ref().map(UdpLink::local_addr)
    }

    /// Peers currently known through discovery.
    pub fn peers(&self) -> Vec<ParticipantInfo> {
        let table = self.shared.peers.lock().unwrap();
        let mut v: Vec<_> = table.peers.values().map(|p| p.info.clone()).collect();
        v.sort_by_key(|i| i.participant_id);
        v
    }

    pub fn counters(&self) -> TransportCounters {
        self.shared.counters.snapshot()
    }

    pub fn advertise(&self, topic: &str, type_name: &str, qos: QosPolicy) -> Result<Publisher, BusError> {
        check_name("topic name must be non-empty", topic)?;
        check_name("type name must be non-empty", type_name)?;
        qos.validate()?;
        let hash = topic_hash(topic, type_name);
        {
            let mut local = self.shared.local.lock().unwrap();
            if local.publishers.contains_key(&hash) {
                return Err(BusError::AlreadyExists {
                    topic: topic.to_string(),
                    type_name: type_name.to_string(),
                });
            }
            local.publishers.insert(hash, (topic.to_string(), type_name.to_string()));
        }
        self.shared.request_announce();
        Ok(Publisher {
            shared: Arc::clone(&self.shared),
            key: NEXT_KEY.fetch_add(1, Ordering::Relaxed),
            topic: topic.to_string(),
            type_name: type_name.to_string(),
            topic_hash: hash,
            qos,
            next_seq: Mutex::new(0),
        })
    }

    /// Typed [`Participant::advertise`] using the message's type name.
    pub fn advertise_msg<M: Message>(&self, topic: &str, qos: QosPolicy) -> Result<TypedPublisher<M>, BusError> {
        Ok(TypedPublisher {
            inner: self.advertise(topic, M::TYPE_NAME, qos)?,
            scratch: Mutex::new(Vec::new()),
            _type: PhantomData,
        })
    }

    fn register_subscriber(&self, topic: &str, type_name: &str, qos: QosPolicy) -> Result<Arc<SubShared>, BusError> {
        check_name("topic name must be non-empty", topic)?;
        check_name("type name must be non-empty", type_name)?;
        qos.validate()?;
        let hash = topic_hash(topic, type_name);
        let overflow = if qos.is_reliable() { Overflow::Block } else { Overflow::DropOldest };
        let sub = Arc::new(SubShared {
            participant_id: self.shared.id,
            topic_hash: hash,
            queue: SampleQueue::new(qos.history_depth, overflow),
        });
        {
            let mut local = self.shared.local.lock().unwrap();
            if local.subscribers.contains_key(&hash) {
                return Err(BusError::AlreadyExists {
                    topic: topic.to_string(),
                    type_name: type_name.to_string(),
                });
            }
            local.subscribers.insert(hash, Arc::clone(&sub));
        }
        self.shared.registry.add_subscriber(self.shared.domain_id, Arc::clone(&sub));
        self.shared.request_announce();
        Ok(sub)
    }

    /// Subscribe with a handler run on a dedicated delivery thread, once per
    /// accepted sample and never concurrently with itself.
    pub fn subscribe<F>(&self, topic: &str, type_name: &str, qos: QosPolicy, mut handler: F) -> Result<Subscriber, BusError>
    where
        F: FnMut(Sample) + Send + 'static,
    {
        let sub = self.register_subscriber(topic, type_name, qos)?;
        let s = Arc::clone(&sub);
        let thread = spawn(&format!("{}-sub", self.shared.name), move || loop {
            match s.queue.pop_timeout(Duration::from_millis(100)) {
                Some(sample) => handler(sample),
                None if s.queue.is_closed() => break,
                None => {}
            }
        })?;
        Ok(Subscriber {
            handle: SubscriptionHandle::new(&self.shared, sub),
            thread: Some(thread),
        })
    }

    /// Typed [`Participant::subscribe`]; samples that fail to decode are
    /// passed to the handler as errors.
    pub fn subscribe_msg<M, F>(&self, topic: &str, qos: QosPolicy, mut handler: F) -> Result<Subscriber, BusError>
    where
        M: Message + Send + 'static,
        F: FnMut(Result<Delivered<M>, CodecError>) + Send + 'static,
    {
        self.subscribe(topic, M::TYPE_NAME, qos, move |s| handler(Delivered::from_sample(&s)))
    }

    /// Subscribe without a delivery thread; samples wait in the queue until
    /// polled.
    pub fn subscribe_queue(&self, topic: &str, type_name: &str, qos: QosPolicy) -> Result<QueueSubscriber, BusError> {
        let sub = self.register_subscriber(topic, type_name, qos)?;
        Ok(QueueSubscriber {
            handle: SubscriptionHandle::new(&self.shared, sub),
        })
    }

    pub fn subscribe_queue_msg<M: Message>(&self, topic: &str, qos: QosPolicy) -> Result<QueueSubscriber, BusError> {
        self.subscribe_queue(topic, M::TYPE_NAME, qos)
    }

    fn stop(&mut self) {
        if !self.shared.running.swap(false, Ordering::AcqRel) {
            return;
        }
        if let Some(udp) = &self.shared.udp {
            udp.wake_all();
        }
        let subs: Vec<_> = self.shared.local.lock().unwrap().subscribers.values().cloned().collect();
        for s in subs {
            s.queue.close();
        }
        self.shared.registry.leave(self.shared.id);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    /// Stop abruptly, as if the process hosting this participant died.
    pub fn kill(mut self) {
        self.stop();
    }
}

impl Drop for Participant {
    fn drop(&mut self) {
        self.stop();
    }
}

fn spawn(name: &str, f: impl FnOnce() + Send + 'static) -> Result<JoinHandle<()>, BusError> {
    thread::Builder::new()
        .name(name.to_string())
        .spawn(f)
        .map_err(BusError::TransportUnavailable)
}

/// Publishing endpoint. Safe to share between threads; concurrent
/// publishes are serialized so sequence numbers follow send order.
pub struct Publisher {
    shared: Arc<Shared>,
    key: u64,
    topic: String,
    type_name: String,
    topic_hash: u64,
    qos: QosPolicy,
    next_seq: Mutex<u32>,
}

impl fmt::Debug for Publisher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Publisher")
            .field("topic", &self.topic)
            .field("type_name", &self.type_name)
            .field("topic_hash", &format_args!("{:#018x}", self.topic_hash))
            .finish()
    }
}

impl Publisher {
    pub fn topic(&self) -> &str {
        &self.topic
    }

    pub fn type_name(&self) -> &str {
        &self.type_name
    }

    pub fn topic_hash(&self) -> u64 {
        self.topic_hash
    }

    pub fn qos(&self) -> QosPolicy {
        self.qos
    }

    pub fn publish(&self, payload: &[u8]) -> Result<u32, BusError> {
        self.publish_at(payload, now_ns())
    }

    /// Publish with an explicit timestamp (simulation time, for instance).
    pub fn publish_at(&self, payload: &[u8], timestamp_ns: u64) -> Result<u32, BusError> {
        if payload.len() > MAX_PAYLOAD_LEN {
            return Err(EnvelopeError::PayloadTooLarge { len: payload.len() }.into());
        }
        let shared = &*self.shared;
        if !shared.running.load(Ordering::Acquire) {
            return Err(BusError::Closed);
        }
        let mut next_seq = self.next_seq.lock().unwrap();
        let seq = *next_seq;

        if let Some(subs) = shared.registry.subscribers(shared.domain_id, self.topic_hash) {
            let data: Arc<[u8]> = Arc::from(payload);
            for sub in subs.iter() {
                let sample = Sample {
                    topic_hash: self.topic_hash,
                    seq,
                    timestamp_ns,
                    origin: Origin::Local(self.key),
                    payload: Arc::clone(&data),
                };
                if sub.queue.push(sample) != PushOutcome::Closed {
                    bump(&shared.counters.intra_deliveries);
                }
            }
        }

        if let Some(udp) = &shared.udp {
            let dests = shared.remote_destinations(self.topic_hash);
            if !dests.is_empty() {
                if self.qos.is_reliable() {
                    for d in dests {
                        udp.send_reliable(
                            &shared.running,
                            &shared.counters,
                            d,
                            self.topic_hash,
                            seq,
                            timestamp_ns,
                            payload,
                            self.qos.history_depth,
                            self.qos.max_retries,
                        )?;
                    }
                } else {
                    let frame = encode_frame(0, self.topic_hash, seq, timestamp_ns, payload)?;
                    udp.send_best_effort(&frame, &dests, &shared.counters);
                }
            }
        }

        *next_seq = seq.wrapping_add(1);
        Ok(seq)
    }

    /// Matched subscribers: in-process ones plus distinct remote addresses.
    pub fn matched(&self) -> usize {
        let local = self
            .shared
            .registry
            .subscribers(self.shared.domain_id, self.topic_hash)
            .map_or(0, |s| s.len());
        local + self.shared.remote_destinations(self.topic_hash).len()
    }

    /// Polls until at least `n` subscribers match or `timeout` passes.
    pub fn wait_for_matches(&self, n: usize, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        loop {
            if self.matched() >= n {
                return true;
            }
            if Instant::now() >= deadline {
                return false;
            }
            thread::sleep(Duration::from_millis(5));
        }
    }
}

impl Drop for Publisher {
    fn drop(&mut self) {
        self.shared.local.lock().unwrap().publishers.remove(&self.topic_hash);
        self.shared.request_announce();
    }
}

/// Publisher bound to one message type.
pub struct TypedPublisher<M> {
    inner: Publisher,
    scratch: Mutex<Vec<u8>>,
    _type: PhantomData<fn(&M)>,
}

impl<M> fmt::Debug for TypedPublisher<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.inner.fmt(f)
    }
}

impl<M: Message> TypedPublisher<M> {
    pub fn publish(&self, msg: &M) -> Result<u32, BusError> {
        self.publish_at(msg, now_ns())
    }

    pub fn publish_at(&self, msg: &M, timestamp_ns: u64) -> Result<u32, BusError> {
        let mut buf = self.scratch.lock().unwrap();
        buf.clear();
        msg.encode_into(&mut buf)?;
        self.inner.publish_at(&buf, timestamp_ns)
    }

    pub fn untyped(&self) -> &Publisher {
        &self.inner
    }
}

/// A decoded sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivered<M> {
    pub msg: M,
    pub seq: u32,
    pub timestamp_ns: u64,
    pub origin: Origin,
}

impl<M: Message> Delivered<M> {
    pub fn from_sample(s: &Sample) -> Result<Self, CodecError> {
        Ok(Self {
            msg: M::decode(&s.payload)?,
            seq: s.seq,
            timestamp_ns: s.timestamp_ns,
            origin: s.origin,
        })
    }
}

struct SubscriptionHandle {
    shared: Arc<Shared>,
    sub: Arc<SubShared>,
}

impl SubscriptionHandle {
    fn new(shared: &Arc<Shared>, sub: Arc<SubShared>) -> Self {
        Self {
            shared: Arc::clone(shared),
            sub,
        }
    }
}

impl Drop for SubscriptionHandle {
    fn drop(&mut self) {
        let shared = &self.shared;
        shared.registry.remove_subscriber(shared.domain_id, &self.sub);
        shared.local.lock().unwrap().subscribers.remove(&self.sub.topic_hash);
        self.sub.queue.close();
        shared.request_announce();
    }
}

/// Callback subscription. Dropping it unsubscribes and waits for the
/// delivery thread, unless dropped from inside its own handler.
pub struct Subscriber {
    handle: SubscriptionHandle,
    thread: Option<JoinHandle<()>>,
}

impl fmt::Debug for Subscriber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Subscriber")
            .field("topic_hash", &format_args!("{:#018x}", self.handle.sub.topic_hash))
            .finish()
    }
}

impl Subscriber {
    pub fn topic_hash(&self) -> u64 {
        self.handle.sub.topic_hash
    }

    /// Samples discarded because the handler fell behind.
    pub fn dropped(&self) -> u64 {
        self.handle.sub.queue.dropped()
    }
}

impl Drop for Subscriber {
    fn drop(&mut self) {
        self.handle.sub.queue.close();
        if let Some(t) = self.thread.take() {
            if t.thread().id() != thread::current().id() {
                let _ = t.join();
            }
        }
    }
}

/// Polled subscription.
pub struct QueueSubscriber {
    handle: SubscriptionHandle,
}

impl fmt::Debug for QueueSubscriber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QueueSubscriber")
            .field("topic_hash", &format_args!("{:#018x}", self.handle.sub.topic_hash))
            .field("queued", &self.handle.sub.queue.len())
            .finish()
    }
}

impl QueueSubscriber {
    pub fn topic_hash(&self) -> u64 {
        self.handle.sub.topic_hash
    }

    pub fn try_recv(&self) -> Option<Sample> {
        self.handle.sub.queue.try_pop()
    }

    pub fn recv_timeout(&self, timeout: Duration) -> Option<Sample> {
        self.handle.sub.queue.pop_timeout(timeout)
    }

    /// Pops everything currently queued.
    pub fn drain(&self) -> impl Iterator<Item = Sample> + '_ {
        std::iter::from_fn(|| self.try_recv())
    }

    pub fn try_recv_msg<M: Message>(&self) -> Option<Result<Delivered<M>, CodecError>> {
        self.try_recv().map(|s| Delivered::from_sample(&s))
    }

    pub fn len(&self) -> usize {
        self.handle.sub.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dropped(&self) -> u64 {
        self.handle.sub.queue.dropped()
    }
}
