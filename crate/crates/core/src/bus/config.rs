use std::net::{IpAddr, Ipv4Addr};
use std::time::Duration;

use super::BusError;

pub const DISCOVERY_GROUP: Ipv4Addr = Ipv4Addr::new(239, 82, 80, 84);
pub const DISCOVERY_PORT: u16 = 7400;
pub const MAX_DOMAIN_ID: u32 = 232;
/// Environment variable overriding the default domain.
pub const DOMAIN_ENV: &str = "RAPTOR_DOMAIN_ID";

/// Domain from `RAPTOR_DOMAIN_ID`, or 0 when unset.
pub fn default_domain_id() -> Result<u8, BusError> {
    match std::env::var(DOMAIN_ENV) {
        Ok(raw) => parse_domain(&raw),
        Err(_) => Ok(0),
    }
}

pub(crate) fn parse_domain(raw: &str) -> Result<u8, BusError> {
    let id: u32 = raw
        .trim()
        .parse()
        .map_err(|_| BusError::InvalidDomainEnv(raw.to_string()))?;
    check_domain(id)
}

pub(crate) fn check_domain(id: u32) -> Result<u8, BusError> {
    if id > MAX_DOMAIN_ID {
        Err(BusError::InvalidDomain(id))
    } else {
        Ok(id as u8)
    }
}

#[derive(Debug, Clone)]
pub struct DiscoveryConfig {
    pub group: Ipv4Addr,
    pub port: u16,
    /// Interface used for multicast send and membership.
    pub interface: Ipv4Addr,
    pub announce_interval: Duration,
    /// Remote participants silent for this long are forgotten.
    pub expiry: Duration,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self {
            group: DISCOVERY_GROUP,
            port: DISCOVERY_PORT,
            interface: Ipv4Addr::LOCALHOST,
            announce_interval: Duration::from_secs(1),
            expiry: Duration::from_secs(5),
        }
    }
}

/// Seeded random loss applied to outgoing data frames and acks.
#[derive(Debug, Clone, Copy)]
pub struct LossInjection {
    pub rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct UdpConfig {
    /// Address the data socket binds to and announces.
    pub bind: IpAddr,
    pub recv_buffer_bytes: usize,
    /// First retransmission delay; doubles on every retry.
    pub retransmit_base: Duration,
    /// A reliable stream waiting this long on a missing frame skips it.
    pub gap_timeout: Duration,
    pub loss: Option<LossInjection>,
}

impl Default for UdpConfig {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            recv_buffer_bytes: 4 << 20,
            retransmit_base: Duration::from_millis(2),
            gap_timeout: Duration::from_secs(2),
            loss: None,
        }
    }
}

/// Transport and discovery settings for a participant.
///
/// `udp: None` gives an intra-process participant with no sockets or
/// background threads; discovery requires UDP.
#[derive(Debug, Clone)]
pub struct ParticipantConfig {
    pub udp: Option<UdpConfig>,
    pub discovery: Option<DiscoveryConfig>,
}

impl ParticipantConfig {
    pub fn intra_process() -> Self {
        Self {
            udp: None,
            discovery: None,
        }
    }

    pub fn with_loss(mut self, loss: LossInjection) -> Self {
        self.udp.get_or_insert_with(UdpConfig::default).loss = Some(loss);
        self
    }

    pub fn with_announce_interval(mut self, interval: Duration) -> Self {
        if let Some(d) = self.discovery.as_mut() {
            d.announce_interval = interval;
        }
        self
    }
}

impl Default for ParticipantConfig {
    fn default() -> Self {
        Self {
            udp: Some(UdpConfig::default()),
            discovery: Some(DiscoveryConfig::default()),
        }
    }
}
