//! Framing for every datagram on the wire.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "RPTR"
//!      4     1  version (1)
//!      5     1  flags
//!      6     8  topic_hash
//!     14     4  seq
//!     18     8  timestamp_ns
//!     26     4  payload_len
//!     30     n  payload
//!   30+n     4  crc32 (IEEE) over bytes [0, 30+n)
//! ```
//!
//! All integers are little-endian.

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"RPTR";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 30;
pub const CRC_LEN: usize = 4;
/// Smallest valid frame (empty payload).
pub const MIN_FRAME_LEN: usize = HEADER_LEN + CRC_LEN;
/// Largest IPv4 UDP payload.
const MAX_DATAGRAM: usize = 65_507;
/// Largest payload that still fits in one datagram.
pub const MAX_PAYLOAD_LEN: usize = MAX_DATAGRAM - MIN_FRAME_LEN;

pub mod flags {
    pub const RELIABLE: u8 = 0b0000_0001;
    pub const ACK: u8 = 0b0000_0010;
    /// First frame of a reliable stream towards one destination.
    pub const SYNC: u8 = 0b0000_0100;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvelopeError {
    #[error("frame of {len} bytes is shorter than the {MIN_FRAME_LEN}-byte minimum")]
    Truncated { len: usize },
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("payload_len {declared} does not match the {actual} bytes present")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("crc mismatch: frame says {expected:08x}, computed {computed:08x}")]
    CrcMismatch { expected: u32, computed: u32 },
    #[error("payload of {len} bytes exceeds the {MAX_PAYLOAD_LEN}-byte datagram limit")]
    PayloadTooLarge { len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireEnvelope {
    pub flags: u8,
    pub topic_hash: u64,
    pub seq: u32,
    pub timestamp_ns: u64,
    pub payload: Vec<u8>,
}

impl WireEnvelope {
    pub fn is_reliable(&self) -> bool {
        self.flags & flags::RELIABLE != 0
    }

    pub fn is_ack(&self) -> bool {
        self.flags & flags::ACK != 0
    }

    pub fn is_sync(&self) -> bool {
        self.flags & flags::SYNC != 0
    }

    pub fn encoded_len(&self) -> usize {
        MIN_FRAME_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Result<Vec<u8>, EnvelopeError> {
        encode_frame(self.flags, self.topic_hash, self.seq, self.timestamp_ns, &self.payload)
    }

    pub fn decode(frame: &[u8]) -> Result<Self, EnvelopeError> {
        let view = FrameView::parse(frame)?;
        Ok(Self {
            flags: view.flags,
            topic_hash: view.topic_hash,
            seq: view.seq,
            timestamp_ns: view.timestamp_ns,
            payload: view.payload.to_vec(),
        })
    }
}

/// Encode a frame straight from its parts, without building an envelope.
pub fn encode_frame(
    flags: u8,
    topic_hash: u64,
    seq: u32,
    timestamp_ns: u64,
    payload: &[u8],
) -> Result<Vec<u8>, EnvelopeError> {
    if payload.len() > MAX_PAYLOAD_LEN {
        return Err(EnvelopeError::PayloadTooLarge { len: payload.len() });
    }
    let mut out = Vec::with_capacity(MIN_FRAME_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(flags);
    out.extend_from_slice(&topic_hash.to_le_bytes());
    out.extend_from_slice(&seq.to_le_bytes());
    out.extend_from_slice(&timestamp_ns.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Borrowed, validated view of a frame.
#[derive(Debug, Clone, Copy)]
pub struct FrameView<'a> {
    pub flags: u8,
    pub topic_hash: u64,
    pub seq: u32,
    pub timestamp_ns: u64,
    pub payload: &'a [u8],
}

impl<'a> FrameView<'a> {
    pub fn parse(frame: &'a [u8]) -> Result<Self, EnvelopeError> {
        if frame.len() < MIN_FRAME_LEN {
            return Err(EnvelopeError::Truncated { len: frame.len() });
        }
        let magic: [u8; 4] = frame[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(EnvelopeError::BadMagic(magic));
        }
        if frame[4] != VERSION {
            return Err(EnvelopeError::BadVersion(frame[4]));
        }
        let declared = u32::from_le_bytes(frame[26..30].try_into().unwrap()) as usize;
        let actual = frame.len() - MIN_FRAME_LEN;
        if declared != actual {
            return Err(EnvelopeError::LengthMismatch { declared, actual });
        }
        let body_end = HEADER_LEN + actual;
        let expected = u32::from_le_bytes(frame[body_end..].try_into().unwrap());
        let computed = crc32fast::hash(&frame[..body_end]);
        if expected != computed {
            return Err(EnvelopeError::CrcMismatch { expected, computed });
        }
        Ok(Self {
            flags: frame[5],
            topic_hash: u64::from_le_bytes(frame[6..14].try_into().unwrap()),
            seq: u32::from_le_bytes(frame[14..18].try_into().unwrap()),
            timestamp_ns: u64::from_le_bytes(frame[18..26].try_into().unwrap()),
            payload: &frame[HEADER_LEN..body_end],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> WireEnvelope {
        WireEnvelope {
            flags: flags::RELIABLE,
            topic_hash: 0x0123_4567_89AB_CDEF,
            seq: 17,
            timestamp_ns: 1_000_000_007,
            payload: b"hello".to_vec(),
        }
    }

    #[test]
    fn empty_frame_prefix() {
        let env = WireEnvelope {
            flags: 0,
            topic_hash: 0,
            seq: 0,
            timestamp_ns: 0,
            payload: vec![],
        };
        let frame = env.encode().unwrap();
        assert_eq!(frame.len(), 34);
        assert_eq!(&frame[..5], &[0x52, 0x50, 0x54, 0x52, 0x01]);
    }

    #[test]
    fn distinct_errors() {
        let frame = sample().encode().unwrap();

        assert_eq!(
            WireEnvelope::decode(&frame[..20]),
            Err(EnvelopeError::Truncated { len: 20 })
        );

        let mut bad = frame.clone();
        bad[0] = b'X';
        assert!(matches!(WireEnvelope::decode(&bad), Err(EnvelopeError::BadMagic(_))));

        let mut bad = frame.clone();
        bad[4] = 2;
        assert_eq!(WireEnvelope::decode(&bad), Err(EnvelopeError::BadVersion(2)));

        let mut bad = frame.clone();
        bad.insert(HEADER_LEN, 0);
        assert!(matches!(
            WireEnvelope::decode(&bad),
            Err(EnvelopeError::LengthMismatch { declared: 5, actual: 6 })
        ));

        let mut bad = frame.clone();
        bad[HEADER_LEN + 1] ^= 0x01;
        assert!(matches!(WireEnvelope::decode(&bad), Err(EnvelopeError::CrcMismatch { .. })));
    }

    #[test]
    fn oversized_payload() {
        let env = WireEnvelope {
            payload: vec![0; MAX_PAYLOAD_LEN + 1],
            ..sample()
        };
        assert!(matches!(env.encode(), Err(EnvelopeError::PayloadTooLarge { .. })));
        let env = WireEnvelope {
            payload: vec![0; MAX_PAYLOAD_LEN],
            ..sample()
        };
        assert_eq!(env.encode().unwrap().len(), MAX_DATAGRAM);
    }
}
