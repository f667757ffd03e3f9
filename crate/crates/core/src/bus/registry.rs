use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use super::queue::SampleQueue;

pub(crate) struct SubShared {
    pub(crate) participant_id: u64,
    pub(crate) topic_hash: u64,
    pub(crate) queue: SampleQueue,
}

#[derive(Default)]
struct State {
    members: HashSet<u64>,
    subscribers: HashMap<(u8, u64), Arc<[Arc<SubShared>]>>,
}

/// In-process rendezvous for participants that exchange samples through
/// queues instead of sockets.
///
/// Every participant owns a registry. Participants created with a clone of
/// the same registry deliver to each other directly and never send each
/// other datagrams, even when they also discover each other over UDP.
#[derive(Clone, Default)]
pub struct LocalRegistry {
    state: Arc<Mutex<State>>,
}

impl fmt::Debug for LocalRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let st = self.state.lock().unwrap();
        f.debug_struct("LocalRegistry")
            .field("members", &st.members.len())
            .finish()
    }
}

impl LocalRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn join(&self, participant_id: u64) {
        self.state.lock().unwrap().members.insert(participant_id);
    }

    pub(crate) fn leave(&self, participant_id: u64) {
        let mut st = self.state.lock().unwrap();
        st.members.remove(&participant_id);
        st.subscribers.retain(|_, subs| {
            if subs.iter().any(|s| s.participant_id == participant_id) {
                *subs = subs
                    .iter()
                    .filter(|s| s.participant_id != participant_id)
                    .cloned()
                    .collect();
            }
            !subs.is_empty()
        });
    }

    pub(crate) fn is_member(&self, participant_id: u64) -> bool {
        self.state.lock().unwrap().members.contains(&participant_id)
    }

    pub(crate) fn add_subscriber(&self, domain_id: u8, sub: Arc<SubShared>) {
        let mut st = self.state.lock().unwrap();
        let slot = st
            .subscribers
            .entry((domain_id, sub.topic_hash))
            .or_insert_with(|| Arc::from(Vec::new()));
        let mut list: Vec<_> = slot.iter().cloned().collect();
        list.push(sub);
        *slot = Arc::from(list);
    }

    pub(crate) fn remove_subscriber(&self, domain_id: u8, sub: &Arc<SubShared>) {
        let mut st = self.state.lock().unwrap();
        let key = (domain_id, sub.topic_hash);
        if let Some(slot) = st.subscribers.get_mut(&key) {
            let list: Vec<_> = slot.iter().filter(|s| !Arc::ptr_eq(s, sub)).cloned().collect();
            if list.is_empty() {
                st.subscribers.remove(&key);
            } else {
                *slot = Arc::from(list);
            }
        }
    }

    pub(crate) fn subscribers(&self, domain_id: u8, topic_hash: u64) -> Option<Arc<[Arc<SubShared>]>> {
        self.state
            .lock()
            .unwrap()
            .subscribers
            .get(&(domain_id, topic_hash))
            .cloned()
    }
}
