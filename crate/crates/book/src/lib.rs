//! Doc-test harness for the guide. Each chapter becomes a module so a
//! failing snippet points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/messages.md")]
pub mod messages {}
#[doc = include_str!("../../../book/src/bus.md")]
pub mod bus {}
#[doc = include_str!("../../../book/src/trajectories.md")]
pub mod trajectories {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/missions.md")]
pub mod missions {}
#[doc = include_str!("../../../book/src/campaigns.md")]
pub mod campaigns {}
