use serde::{Deserialize, Serialize};

use super::BusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reliability {
    BestEffort,
    Reliable,
}

/// Per-endpoint delivery policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QosPolicy {
    pub reliability: Reliability,
    /// Subscriber queue length; also the publisher's unacknowledged window
    /// in reliable mode.
    pub history_depth: usize,
    /// Retransmissions before a reliable frame is abandoned.
    pub max_retries: u32,
}

impl QosPolicy {
    /// Default for high-rate state streams such as poses.
    pub fn best_effort(history_depth: usize) -> Self {
        Self {
            reliability: Reliability::BestEffort,
            history_depth,
            max_retries: 0,
        }
    }

    /// Default for commands.
    pub fn reliable(history_depth: usize, max_retries: u32) -> Self {
        Self {
            reliability: Reliability::Reliable,
            history_depth,
            max_retries,
        }
    }

    pub fn is_reliable(&self) -> bool {
        self.reliability == Reliability::Reliable
    }

    pub fn validate(&self) -> Result<(), BusError> {
        if self.history_depth == 0 {
            return Err(BusError::InvalidQos("history_depth must be at least 1"));
        }
        if self.reliability == Reliability::BestEffort && self.max_retries != 0 {
            return Err(BusError::InvalidQos("best-effort endpoints cannot retry"));
        }
        Ok(())
    }
}

impl Default for QosPolicy {
    fn default() -> Self {
        Self::best_effort(16)
    }
}
