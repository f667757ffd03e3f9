const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Hash identifying a `(topic, type)` pair on the wire: FNV-1a 64 over
/// `topic + "/" + type`.
///
/// Collisions are treated as matches. Hash 0 is reserved for discovery and
/// is never returned for a user topic.
pub fn topic_hash(topic: &str, type_name: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in topic.as_bytes().iter().chain(b"/").chain(type_name.as_bytes()) {
        h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
    }
    if h == DISCOVERY_TOPIC_HASH {
        1
    } else {
        h
    }
}

pub const DISCOVERY_TOPIC_HASH: u64 = 0;
