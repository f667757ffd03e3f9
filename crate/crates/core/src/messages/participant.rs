//! Discovery payload describing a participant and its endpoints.

use std::net::{IpAddr, Ipv4Addr, Ipv6Addr, SocketAddr};

use super::codec::{Reader, Writer};
use super::{CodecError, Message};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Publish,
    Subscribe,
}

/// One advertised or subscribed topic and the data address serving it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub topic_hash: u64,
    pub direction: Direction,
    pub address: SocketAddr,
}

/// Announced periodically on the discovery group.
///
/// Layout: `participant_id u64 | domain_id u8 | name (u16 len + UTF-8) |
/// endpoint count u16 | endpoints`, each endpoint being
/// `topic_hash u64 | direction u8 | family u8 (4 or 6) | ip | port u16`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticipantInfo {
    pub participant_id: u64,
    pub name: String,
    pub domain_id: u8,
    pub endpoints: Vec<Endpoint>,
}

impl Message for ParticipantInfo {
    const TYPE_NAME: &'static str = "ParticipantInfo";

    fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), CodecError> {
        let count = u16::try_from(self.endpoints.len()).map_err(|_| CodecError::TooLong {
            field: "endpoints",
            len: self.endpoints.len(),
        })?;
        let mut w = Writer::new(out);
        w.u64(self.participant_id);
        w.u8(self.domain_id);
        w.str16("name", &self.name)?;
        w.u16(count);
        for ep in &self.endpoints {
            w.u64(ep.topic_hash);
            w.u8(match ep.direction {
                Direction::Publish => 0,
                Direction::Subscribe => 1,
            });
            match ep.address.ip() {
                IpAddr::V4(ip) => {
                    w.u8(4);
                    w.bytes(&ip.octets());
                }
                IpAddr::V6(ip) => {
                    w.u8(6);
                    w.bytes(&ip.octets());
                }
            }
            w.u16(ep.address.port());
        }
        Ok(())
    }

    fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(Self::TYPE_NAME, bytes);
        let participant_id = r.u64()?;
        let domain_id = r.u8()?;
        let name = r.str16()?;
        let count = r.u16()?;
        let mut endpoints = Vec::with_capacity(usize::from(count));
        for _ in 0..count {
            let topic_hash = r.u64()?;
            let direction = match r.u8()? {
                0 => Direction::Publish,
                1 => Direction::Subscribe,
                tag => return Err(CodecError::InvalidTag { field: "direction", tag }),
            };
            let ip = match r.u8()? {
                4 => IpAddr::V4(Ipv4Addr::from(r.array::<4>()?)),
                6 => IpAddr::V6(Ipv6Addr::from(r.array::<16>()?)),
                tag => return Err(CodecError::InvalidTag { field: "family", tag }),
            };
            let port = r.u16()?;
            endpoints.push(Endpoint {
                topic_hash,
                direction,
                address: SocketAddr::new(ip, port),
            });
        }
        r.finish()?;
        Ok(Self {
            participant_id,
            name,
            domain_id,
            endpoints,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_mixed_families() {
        let info = ParticipantInfo {
            participant_id: 0xDEAD_BEEF_0000_0001,
            name: "offboard".into(),
            domain_id: 3,
            endpoints: vec![
                Endpoint {
                    topic_hash: 42,
                    direction: Direction::Publish,
                    address: "127.0.0.1:5000".parse().unwrap(),
                },
                Endpoint {
                    topic_hash: 7,
                    direction: Direction::Subscribe,
                    address: "[::1]:6000".parse().unwrap(),
                },
            ],
        };
        let bytes = info.encode().unwrap();
        assert_eq!(ParticipantInfo::decode(&bytes).unwrap(), info);
        assert!(ParticipantInfo::decode(&bytes[..bytes.len() - 1]).is_err());
    }
}
