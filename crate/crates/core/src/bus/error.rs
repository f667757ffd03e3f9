use std::io;

use thiserror::Error;

use super::envelope::EnvelopeError;
use crate::messages::CodecError;

#[derive(Debug, Error)]
pub enum BusError {
    #[error("invalid name: {0}")]
    InvalidName(&'static str),
    #[error("domain id {0} outside [0, 232]")]
    InvalidDomain(u32),
    #[error("invalid RAPTOR_DOMAIN_ID value `{0}`")]
    InvalidDomainEnv(String),
    #[error("invalid QoS: {0}")]
    InvalidQos(&'static str),
    #[error("`{topic}` with type `{type_name}` already exists on this participant")]
    AlreadyExists { topic: String, type_name: String },
    #[error("transport unavailable: {0}")]
    TransportUnavailable(#[source] io::Error),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("participant is shut down")]
    Closed,
    #[error("invalid benchmark: {0}")]
    InvalidBenchmark(&'static str),
    #[error("timed out: {0}")]
    Timeout(&'static str),
}
