pub mod bus;
pub mod lab;
pub mod messages;
pub mod mission;
pub mod simsuite;
pub mod trajgen;
