use std::collections::HashMap;
use std::sync::{Arc, Barrier};
use std::thread;
use std::time::{Duration, Instant};

use raptor::bus::{
    benchmark_roundtrip_with, BenchOptions, ConversionMode, LocalRegistry, LossInjection, Origin, Participant,
    ParticipantConfig, QosPolicy, TransportKind,
};

const TOPIC: &str = "chatter";
const TYPE: &str = "Blob";

fn udp(name: &str, domain: u32) -> Participant {
    let cfg = ParticipantConfig::default().with_announce_interval(Duration::from_millis(200));
    Participant::new(name, domain, cfg).unwrap()
}

fn lossy(name: &str, domain: u32, seed: u64) -> Participant {
    let cfg = ParticipantConfig::default()
        .with_announce_interval(Duration::from_millis(200))
        .with_loss(LossInjection { rate: 0.05, seed });
    Participant::new(name, domain, cfg).unwrap()
}

fn tagged(publisher: u32, counter: u32) -> [u8; 8] {
    let mut b = [0u8; 8];
    b[..4].copy_from_slice(&publisher.to_le_bytes());
    b[4..].copy_from_slice(&counter.to_le_bytes());
    b
}

fn untag(p: &[u8]) -> (u32, u32) {
    (u32::from_le_bytes(p[..4].try_into().unwrap()), u32::from_le_bytes(p[4..8].try_into().unwrap()))
}

#[test]
fn discovery_converges_for_eight_participants() {
    let t0 = Instant::now();
    let ps: Vec<Participant> = (0..8).map(|i| udp(&format!("p{i}"), 61)).collect();
    let _subs: Vec<_> = ps
        .iter()
        .map(|p| p.subscribe_queue(TOPIC, TYPE, QosPolicy::best_effort(4)).unwrap())
        .collect();
    let converged = loop {
        if ps.iter().all(|p| p.peers().len() == 7) {
            break Some(t0.elapsed());
        }
        if t0.elapsed() > Duration::from_secs(5) {
            break None;
        }
        thread::sleep(Duration::from_millis(5));
    };
    let took = converged.expect("discovery never converged");
    println!("8 participants converged in {took:?}");
    assert!(took < Duration::from_secs(2));
    // Every peer has also learnt every subscription.
    let publisher = ps[0].advertise(TOPIC, TYPE, QosPolicy::best_effort(4)).unwrap();
    assert!(publisher.wait_for_matches(7, Duration::from_secs(1)));
}

#[test]
fn reliable_delivery_under_five_percent_loss() {
    const N: u32 = 10_000;
    let tx = lossy("tx", 62, 1);
    let rx = lossy("rx", 62, 2);
    let sub = rx.subscribe_queue(TOPIC, TYPE, QosPolicy::reliable(N as usize, 0)).unwrap();
    let publisher = tx.advertise(TOPIC, TYPE, QosPolicy::reliable(64, 12)).unwrap();
    assert!(publisher.wait_for_matches(1, Duration::from_secs(3)));

    let t0 = Instant::now();
    for i in 0..N {
        publisher.publish(&tagged(0, i)).unwrap();
    }
    let mut got = Vec::with_capacity(N as usize);
    let deadline = Instant::now() + Duration::from_secs(60);
    while got.len() < N as usize && Instant::now() < deadline {
        if let Some(s) = sub.recv_timeout(Duration::from_millis(100)) {
            got.push((s.seq, untag(&s.payload).1));
        }
    }
    let (ct, cr) = (tx.counters(), rx.counters());
    println!(
        "{} delivered in {:?}; loss injected {} + {}, retransmits {}, abandoned {}",
        got.len(),
        t0.elapsed(),
        ct.loss_injected,
        cr.loss_injected,
        ct.retransmits,
        ct.abandoned
    );
    assert!(ct.loss_injected > 0 && cr.loss_injected > 0, "loss injection inactive");
    assert_eq!(got.len(), N as usize);
    assert!(got.iter().enumerate().all(|(i, &(seq, c))| seq == i as u32 && c == i as u32));
    assert_eq!(ct.abandoned, 0);
}

#[test]
fn per_publisher_fifo_across_ten_publishers() {
    const PER: u32 = 1000;
    let rx = udp("rx", 63);
    let sub = rx.subscribe_queue(TOPIC, TYPE, QosPolicy::reliable(10 * PER as usize, 0)).unwrap();
    let txs: Vec<Participant> = (0..10).map(|i| udp(&format!("tx{i}"), 63)).collect();
    let pubs: Vec<_> = txs
        .iter()
        .map(|p| p.advertise(TOPIC, TYPE, QosPolicy::reliable(32, 12)).unwrap())
        .collect();
    for p in &pubs {
        assert!(p.wait_for_matches(1, Duration::from_secs(3)));
    }
    let barrier = Barrier::new(pubs.len());
    thread::scope(|s| {
        for (k, p) in pubs.iter().enumerate() {
            let barrier = &barrier;
            s.spawn(move || {
                barrier.wait();
                for i in 0..PER {
                    p.publish(&tagged(k as u32, i)).unwrap();
                }
            });
        }
    });
    let mut last: HashMap<u32, (Origin, u32)> = HashMap::new();
    let mut total = 0;
    let deadline = Instant::now() + Duration::from_secs(30);
    while total < 10 * PER && Instant::now() < deadline {
        let Some(s) = sub.recv_timeout(Duration::from_millis(100)) else { continue };
        let (k, i) = untag(&s.payload);
        let expected = last.get(&k).map_or(0, |&(_, c)| c + 1);
        assert_eq!(i, expected, "publisher {k} out of order");
        if let Some(&(origin, _)) = last.get(&k) {
            assert_eq!(origin, s.origin);
        }
        last.insert(k, (s.origin, i));
        total += 1;
    }
    assert_eq!(total, 10 * PER);
}

#[test]
fn intra_process_fifo_across_ten_publishers() {
    const PER: u32 = 5000;
    let registry = LocalRegistry::new();
    let rx = Participant::local("rx", 0, &registry).unwrap();
    let sub = rx.subscribe_queue(TOPIC, TYPE, QosPolicy::reliable(10 * PER as usize, 0)).unwrap();
    let txs: Vec<Participant> = (0..10).map(|i| Participant::local(&format!("tx{i}"), 0, &registry).unwrap()).collect();
    let pubs: Vec<_> = txs
        .iter()
        .map(|p| p.advertise(TOPIC, TYPE, QosPolicy::reliable(32, 0)).unwrap())
        .collect();
    let barrier = Barrier::new(pubs.len());
    thread::scope(|s| {
        for (k, p) in pubs.iter().enumerate() {
            let barrier = &barrier;
            s.spawn(move || {
                barrier.wait();
                for i in 0..PER {
                    p.publish(&tagged(k as u32, i)).unwrap();
                }
            });
        }
    });
    let mut next = [0u32; 10];
    for s in sub.drain() {
        let (k, i) = untag(&s.payload);
        assert_eq!(i, next[k as usize]);
        assert_eq!(s.seq, i);
        next[k as usize] += 1;
    }
    assert!(next.iter().all(|&n| n == PER));
}

#[test]
fn crashed_subscriber_does_not_stall_others() {
    let tx = udp("tx", 64);
    let alive = udp("alive", 64);
    let doomed = udp("doomed", 64);
    let sub = alive.subscribe_queue(TOPIC, TYPE, QosPolicy::reliable(1024, 0)).unwrap();
    let _dead_sub = doomed.subscribe_queue(TOPIC, TYPE, QosPolicy::reliable(1, 0)).unwrap();
    let publisher = tx.advertise(TOPIC, TYPE, QosPolicy::reliable(16, 6)).unwrap();
    assert!(publisher.wait_for_matches(2, Duration::from_secs(3)));
    doomed.kill();

    let t0 = Instant::now();
    for i in 0..500 {
        publisher.publish(&tagged(0, i)).unwrap();
    }
    let took = t0.elapsed();
    let mut got = 0;
    while sub.recv_timeout(Duration::from_secs(2)).is_some() {
        got += 1;
        if got == 500 {
            break;
        }
    }
    println!("500 publishes with a dead peer took {took:?}");
    assert_eq!(got, 500);
    assert!(took < Duration::from_secs(5));
    assert!(tx.counters().abandoned > 0);
}

#[test]
fn killed_publisher_leaves_subscriber_usable() {
    let rx = udp("rx", 65);
    let sub = rx.subscribe_queue(TOPIC, TYPE, QosPolicy::reliable(64, 0)).unwrap();
    let a = udp("a", 65);
    let pa = a.advertise(TOPIC, TYPE, QosPolicy::reliable(16, 6)).unwrap();
    assert!(pa.wait_for_matches(1, Duration::from_secs(3)));
    pa.publish(&tagged(0, 0)).unwrap();
    assert!(sub.recv_timeout(Duration::from_secs(2)).is_some());
    drop(pa);
    a.kill();
    let b = udp("b", 65);
    let pb = b.advertise(TOPIC, TYPE, QosPolicy::reliable(16, 6)).unwrap();
    assert!(pb.wait_for_matches(1, Duration::from_secs(3)));
    pb.publish(&tagged(1, 0)).unwrap();
    let s = sub.recv_timeout(Duration::from_secs(2)).unwrap();
    assert_eq!(untag(&s.payload), (1, 0));
}

#[test]
fn domains_are_isolated() {
    let a = udp("a", 66);
    let b = udp("b", 67);
    let a2 = udp("a2", 66);
    let sub_b = b.subscribe_queue(TOPIC, TYPE, QosPolicy::best_effort(16)).unwrap();
    let sub_a2 = a2.subscribe_queue(TOPIC, TYPE, QosPolicy::best_effort(16)).unwrap();
    let publisher = a.advertise(TOPIC, TYPE, QosPolicy::best_effort(16)).unwrap();
    assert!(publisher.wait_for_matches(1, Duration::from_secs(3)));
    thread::sleep(Duration::from_millis(500));
    assert_eq!(publisher.matched(), 1);
    assert!(a.peers().iter().all(|p| p.domain_id == 66));
    assert!(b.peers().iter().all(|p| p.domain_id == 67));
    publisher.publish(&tagged(0, 0)).unwrap();
    assert!(sub_a2.recv_timeout(Duration::from_secs(2)).is_some());
    assert!(sub_b.recv_timeout(Duration::from_millis(300)).is_none());

    // The same holds for in-process delivery.
    let registry = LocalRegistry::new();
    let x = Participant::local("x", 1, &registry).unwrap();
    let y = Participant::local("y", 2, &registry).unwrap();
    let sy = y.subscribe_queue(TOPIC, TYPE, QosPolicy::best_effort(4)).unwrap();
    x.advertise(TOPIC, TYPE, QosPolicy::best_effort(4)).unwrap().publish(&[1]).unwrap();
    assert!(sy.is_empty());
}

#[test]
fn intra_process_uses_no_socket() {
    let registry = LocalRegistry::new();
    let a = Participant::local("a", 0, &registry).unwrap();
    let b = Participant::local("b", 0, &registry).unwrap();
    assert!(a.data_address().is_none());
    let sub = b.subscribe_queue(TOPIC, TYPE, QosPolicy::best_effort(128)).unwrap();
    let p = a.advertise(TOPIC, TYPE, QosPolicy::best_effort(128)).unwrap();
    for i in 0..100 {
        p.publish(&tagged(0, i)).unwrap();
    }
    assert_eq!(sub.len(), 100);
    let c = a.counters();
    assert_eq!(c.intra_deliveries, 100);
    assert_eq!(c.frames_sent + b.counters().frames_received, 0);
}

#[test]
fn intra_process_latency_and_conversion_cost() {
    let direct = benchmark_roundtrip_with(&BenchOptions::new(TransportKind::IntraProcess, 64, 5000, ConversionMode::Direct))
        .unwrap();
    let double = benchmark_roundtrip_with(&BenchOptions::new(
        TransportKind::IntraProcess,
        64,
        5000,
        ConversionMode::DoubleConvert,
    ))
    .unwrap();
    println!("intra 64 B median: direct {} ns, double {} ns", direct.median_ns, double.median_ns);
    assert!(direct.median_ns < 1_000_000);
    assert!(double.median_ns > direct.median_ns);
}

#[test]
fn udp_conversion_cost() {
    let opts = |mode| BenchOptions::new(TransportKind::UdpLoopback, 1024, 2000, mode);
    let direct = benchmark_roundtrip_with(&opts(ConversionMode::Direct)).unwrap();
    let double = benchmark_roundtrip_with(&opts(ConversionMode::DoubleConvert)).unwrap();
    println!("udp 1024 B median: direct {} ns, double {} ns", direct.median_ns, double.median_ns);
    assert!(double.median_ns > direct.median_ns);
}

#[test]
fn shared_publisher_keeps_sequence_order() {
    let registry = LocalRegistry::new();
    let a = Participant::local("a", 0, &registry).unwrap();
    let sub = a.subscribe_queue(TOPIC, TYPE, QosPolicy::reliable(40_000, 0)).unwrap();
    let p = Arc::new(a.advertise(TOPIC, TYPE, QosPolicy::reliable(1, 0)).unwrap());
    thread::scope(|s| {
        for _ in 0..4 {
            let p = Arc::clone(&p);
            s.spawn(move || {
                for i in 0..10_000 {
                    p.publish(&tagged(0, i)).unwrap();
                }
            });
        }
    });
    let seqs: Vec<u32> = sub.drain().map(|s| s.seq).collect();
    assert_eq!(seqs, (0..40_000).collect::<Vec<_>>());
}
