//! Ping-pong latency benchmark.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::config::ParticipantConfig;
use super::participant::Participant;
use super::qos::QosPolicy;
use super::registry::LocalRegistry;
use super::BusError;

pub const MIN_ITERATIONS: usize = 100;
const BENCH_TYPE: &str = "BenchPayload";
const REPLY_TIMEOUT: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportKind {
    IntraProcess,
    UdpLoopback,
}

impl fmt::Display for TransportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IntraProcess => "intra_process",
            Self::UdpLoopback => "udp_loopback",
        })
    }
}

/// `DoubleConvert` passes every payload through an intermediate JSON
/// representation and back before publishing and again after receiving,
/// the way a wrapper layered over another middleware converts between
/// message formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConversionMode {
    Direct,
    DoubleConvert,
}

impl fmt::Display for ConversionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Direct => "direct",
            Self::DoubleConvert => "double_convert",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub samples: usize,
    pub median_ns: u64,
    pub p99_ns: u64,
    pub mean_ns: u64,
    pub min_ns: u64,
    pub max_ns: u64,
}

impl LatencyStats {
    /// Nearest-rank statistics; `None` for an empty input.
    pub fn from_samples(samples: &[u64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut v = samples.to_vec();
        v.sort_unstable();
        let n = v.len();
        let rank = |q: f64| v[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
        let sum: u128 = v.iter().map(|&x| u128::from(x)).sum();
        Some(Self {
            samples: n,
            median_ns: rank(0.5),
            p99_ns: rank(0.99),
            mean_ns: (sum / n as u128) as u64,
            min_ns: v[0],
            max_ns: v[n - 1],
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub transport: TransportKind,
    pub payload_size: usize,
    pub iterations: usize,
    pub conversion: ConversionMode,
    /// Domain for the UDP variant; topics also carry a random suffix so
    /// concurrent runs on one host do not cross.
    pub domain_id: u32,
    pub match_timeout: Duration,
}

impl BenchOptions {
    pub fn new(transport: TransportKind, payload_size: usize, iterations: usize, conversion: ConversionMode) -> Self {
        Self {
            transport,
            payload_size,
            iterations,
            conversion,
            domain_id: 0,
            match_timeout: Duration::from_secs(5),
        }
    }
}

fn convert(payload: &[u8]) -> Vec<u8> {
    let json = serde_json::to_vec(payload).expect("byte slices serialize");
    serde_json::from_slice(&json).expect("round trip of own output")
}

fn maybe_convert(mode: ConversionMode, payload: &[u8]) -> Vec<u8> {
    match mode {
        ConversionMode::Direct => payload.to_vec(),
        ConversionMode::DoubleConvert => convert(payload),
    }
}

/// Round-trip latency between two participants. The first 10% of
/// iterations warm up and are not reported.
pub fn benchmark_roundtrip(
    transport: TransportKind,
    payload_size: usize,
    iterations: usize,
    conversion: ConversionMode,
) -> Result<LatencyStats, BusError> {
    benchmark_roundtrip_with(&BenchOptions::new(transport, payload_size, iterations, conversion))
}

pub fn benchmark_roundtrip_with(opts: &BenchOptions) -> Result<LatencyStats, BusError> {
    if opts.iterations < MIN_ITERATIONS {
        return Err(BusError::InvalidBenchmark("at least 100 iterations are required"));
    }
    let (ping, pong) = match opts.transport {
        TransportKind::IntraProcess => {
            let reg = LocalRegistry::new();
            (
                Participant::local("bench-ping", opts.domain_id, &reg)?,
                Participant::local("bench-pong", opts.domain_id, &reg)?,
            )
        }
        TransportKind::UdpLoopback => (
            Participant::new("bench-ping", opts.domain_id, ParticipantConfig::default())?,
            Participant::new("bench-pong", opts.domain_id, ParticipantConfig::default())?,
        ),
    };
    let tag: u32 = rand::random();
    let ping_topic = format!("bench/{tag:08x}/ping");
    let pong_topic = format!("bench/{tag:08x}/pong");
    let qos = QosPolicy::best_effort(4);

    let request = ping.advertise(&ping_topic, BENCH_TYPE, qos)?;
    let replies = ping.subscribe_queue(&pong_topic, BENCH_TYPE, qos)?;
    let reply = pong.advertise(&pong_topic, BENCH_TYPE, qos)?;
    let requests = pong.subscribe_queue(&ping_topic, BENCH_TYPE, qos)?;
    if !request.wait_for_matches(1, opts.match_timeout) || !reply.wait_for_matches(1, opts.match_timeout) {
        return Err(BusError::Timeout("benchmark peers did not match"));
    }

    let stop = Arc::new(AtomicBool::new(false));
    let mode = opts.conversion;
    let echo = {
        let stop = Arc::clone(&stop);
        thread::spawn(move || -> Result<(), BusError> {
            while !stop.load(Ordering::Acquire) {
                if let Some(s) = requests.recv_timeout(Duration::from_millis(50)) {
                    let native = maybe_convert(mode, &s.payload);
                    reply.publish(&maybe_convert(mode, &native))?;
                }
            }
            Ok(())
        })
    };

    let warmup = opts.iterations / 10;
    let mut samples = Vec::with_capacity(opts.iterations - warmup);
    let mut payload = vec![0u8; opts.payload_size];
    let mut result = Ok(());
    for i in 0..opts.iterations {
        let stamp = (i as u32).to_le_bytes();
        let k = payload.len().min(4);
        payload[..k].copy_from_slice(&stamp[..k]);
        let t0 = Instant::now();
        let wire = maybe_convert(mode, &payload);
        if let Err(e) = request.publish(&wire) {
            result = Err(e);
            break;
        }
        let got = loop {
            match replies.recv_timeout(REPLY_TIMEOUT) {
                Some(s) if s.payload[..k] == stamp[..k] => break Some(s),
                Some(_) => continue,
                None => break None,
            }
        };
        let Some(got) = got else {
            result = Err(BusError::Timeout("benchmark reply lost"));
            break;
        };
        let _native = maybe_convert(mode, &got.payload);
        let dt = t0.elapsed().as_nanos() as u64;
        if i >= warmup {
            samples.push(dt);
        }
    }
    stop.store(true, Ordering::Release);
    let echoed = echo.join().expect("echo thread panicked");
    result?;
    echoed?;
    Ok(LatencyStats::from_samples(&samples).expect("iterations exceed warm-up"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_stats() {
        let v: Vec<u64> = (1..=100).collect();
        let s = LatencyStats::from_samples(&v).unwrap();
        assert_eq!((s.samples, s.median_ns, s.p99_ns, s.min_ns, s.max_ns), (100, 50, 99, 1, 100));
        assert_eq!(s.mean_ns, 50);
        assert!(LatencyStats::from_samples(&[]).is_none());
    }

    #[test]
    fn conversion_is_lossless() {
        let p: Vec<u8> = (0..=255).collect();
        assert_eq!(convert(&p), p);
    }

    #[test]
    fn too_few_iterations() {
        let r = benchmark_roundtrip(TransportKind::IntraProcess, 64, 0, ConversionMode::Direct);
        assert!(matches!(r, Err(BusError::InvalidBenchmark(_))));
    }
}
