//! Serverless discovery over UDP multicast.
//!
//! Each participant announces its [`ParticipantInfo`] as a frame with topic
//! hash 0 on startup, whenever its endpoints change, whenever it sees a new
//! peer, and otherwise once per announce interval. Peers silent for longer
//! than the expiry are dropped.

use std::collections::HashMap;
use std::io;
use std::net::{Ipv4Addr, SocketAddr, SocketAddrV4, UdpSocket};
use std::sync::atomic::Ordering;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use socket2::{Domain, Protocol, Socket, Type};

use super::config::DiscoveryConfig;
use super::counters::bump;
use super::envelope::{encode_frame, FrameView};
use super::hash::DISCOVERY_TOPIC_HASH;
use super::participant::Shared;
use super::transport::{POLL, RECV_BUF_LEN};
use crate::messages::{Direction, Message, ParticipantInfo};

pub(crate) struct Peer {
    pub(crate) info: ParticipantInfo,
    last_seen: Instant,
}

impl Peer {
    pub(crate) fn data_addresses(&self) -> impl Iterator<Item = SocketAddr> + '_ {
        self.info.endpoints.iter().map(|e| e.address)
    }
}

#[derive(Default)]
pub(crate) struct PeerTable {
    pub(crate) peers: HashMap<u64, Peer>,
}

impl PeerTable {
    /// Addresses of remote subscribers for `topic_hash`, excluding peers
    /// accepted by `skip` (those reached in-process).
    pub(crate) fn subscriber_addresses(&self, topic_hash: u64, skip: impl Fn(u64) -> bool, out: &mut Vec<SocketAddr>) {
        for (&id, peer) in &self.peers {
            if skip(id) {
                continue;
            }
            for ep in &peer.info.endpoints {
                if ep.topic_hash == topic_hash && ep.direction == Direction::Subscribe && !out.contains(&ep.address) {
                    out.push(ep.address);
                }
            }
        }
    }
}

pub(crate) fn open_socket(cfg: &DiscoveryConfig) -> io::Result<UdpSocket> {
    let s = Socket::new(Domain::IPV4, Type::DGRAM, Some(Protocol::UDP))?;
    s.set_reuse_address(true)?;
    #[cfg(unix)]
    s.set_reuse_port(true)?;
    s.bind(&SocketAddrV4::new(Ipv4Addr::UNSPECIFIED, cfg.port).into())?;
    s.join_multicast_v4(&cfg.group, &cfg.interface)?;
    s.set_multicast_if_v4(&cfg.interface)?;
    s.set_multicast_loop_v4(true)?;
    s.set_multicast_ttl_v4(1)?;
    let socket: UdpSocket = s.into();
    socket.set_read_timeout(Some(POLL))?;
    Ok(socket)
}

fn now_ns() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

pub(crate) fn run(shared: &Shared, socket: UdpSocket, cfg: DiscoveryConfig) {
    let group = SocketAddr::V4(SocketAddrV4::new(cfg.group, cfg.port));
    let mut buf = vec![0u8; RECV_BUF_LEN];
    let mut next_announce = Instant::now();
    let mut announce_seq = 0u32;
    while shared.running.load(Ordering::Acquire) {
        let now = Instant::now();
        if shared.announce_requested.swap(false, Ordering::AcqRel) || now >= next_announce {
            let payload = shared.info().encode().expect("participant info encodes");
            if let Ok(frame) = encode_frame(0, DISCOVERY_TOPIC_HASH, announce_seq, now_ns(), &payload) {
                if socket.send_to(&frame, group).is_ok() {
                    bump(&shared.counters.announcements_sent);
                }
            }
            announce_seq = announce_seq.wrapping_add(1);
            next_announce = now + cfg.announce_interval;
        }
        if let Ok((n, _)) = socket.recv_from(&mut buf) {
            handle(shared, &buf[..n]);
        }
        expire(shared, &cfg);
    }
}

fn handle(shared: &Shared, frame: &[u8]) {
    let Ok(view) = FrameView::parse(frame) else {
        bump(&shared.counters.malformed);
        return;
    };
    if view.topic_hash != DISCOVERY_TOPIC_HASH {
        return;
    }
    let Ok(info) = ParticipantInfo::decode(view.payload) else {
        bump(&shared.counters.malformed);
        return;
    };
    if info.participant_id == shared.id || info.domain_id != shared.domain_id {
        return;
    }
    bump(&shared.counters.announcements_received);
    let mut revived = Vec::new();
    {
        let mut table = shared.peers.lock().unwrap();
        match table.peers.get_mut(&info.participant_id) {
            Some(peer) => {
                peer.info = info;
                peer.last_seen = Instant::now();
            }
            None => {
                revived.extend(info.endpoints.iter().map(|e| e.address));
                table.peers.insert(
                    info.participant_id,
                    Peer {
                        info,
                        last_seen: Instant::now(),
                    },
                );
                // Let the newcomer learn about us without waiting a full interval.
                shared.announce_requested.store(true, Ordering::Release);
            }
        }
    }
    if let Some(udp) = &shared.udp {
        for a in revived {
            udp.revive(a);
        }
    }
}

fn expire(shared: &Shared, cfg: &DiscoveryConfig) {
    let now = Instant::now();
    let mut gone = Vec::new();
    {
        let mut table = shared.peers.lock().unwrap();
        table.peers.retain(|_, p| {
            let alive = now.duration_since(p.last_seen) <= cfg.expiry;
            if !alive {
                gone.extend(p.data_addresses());
            }
            alive
        });
    }
    if let Some(udp) = &shared.udp {
        for a in gone {
            udp.forget(a);
        }
    }
}
