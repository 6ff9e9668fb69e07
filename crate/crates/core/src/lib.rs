//! Multi-agent railway rescheduling under disruption, with a coloured Petri-net
//! verification layer.

pub mod agents;
pub mod cli;
pub mod constraints;
pub mod io;
pub mod model;
pub mod network;
pub mod petri;
pub mod resched;
