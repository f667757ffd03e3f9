//! Typed publish/subscribe over UDP with multicast discovery.
//!
//! A [`Participant`] joins a numeric domain and owns publishers and
//! subscribers. Topics are matched by [`topic_hash`] of the topic and type
//! names. Matching publishers and subscribers inside one [`LocalRegistry`]
//! exchange samples through in-memory queues; everything else travels as
//! [`WireEnvelope`] frames over unicast UDP, optionally with acknowledgement
//! and retransmission.
//!
//! ```no_run
//! use raptor::bus::{Participant, ParticipantConfig, QosPolicy};
//!
//! let p = Participant::new("drone", 0, ParticipantConfig::default())?;
//! let pose = p.advertise("pose/drone", "Pose", QosPolicy::best_effort(8))?;
//! pose.publish(&[0u8; 56])?;
//! # Ok::<(), raptor::bus::BusError>(())
//! ```

mod bench;
mod config;
mod counters;
mod discovery;
pub mod envelope;
mod error;
mod hash;
mod participant;
mod qos;
mod queue;
mod registry;
mod transport;

pub use bench::{
    benchmark_roundtrip, benchmark_roundtrip_with, BenchOptions, ConversionMode, LatencyStats, TransportKind,
    MIN_ITERATIONS,
};
pub use config::{
    default_domain_id, DiscoveryConfig, LossInjection, ParticipantConfig, UdpConfig, DISCOVERY_GROUP,
    DISCOVERY_PORT, DOMAIN_ENV, MAX_DOMAIN_ID,
};
pub use counters::TransportCounters;
pub use envelope::{EnvelopeError, FrameView, WireEnvelope, MAX_PAYLOAD_LEN};
pub use error::BusError;
pub use hash::{fnv1a64, topic_hash, DISCOVERY_TOPIC_HASH};
pub use participant::{Delivered, Participant, Publisher, QueueSubscriber, Subscriber, TypedPublisher};
pub use qos::{QosPolicy, Reliability};
pub use queue::{Origin, Sample};
pub use registry::LocalRegistry;
