//! Simulator and protocol library for a satellite-relayed QKD network.

pub mod bits;
pub mod netsim;
pub mod orbit_link;
pub mod par;
pub mod post_processing;
pub mod quantum_layer;
pub mod relay_keystore;
pub mod rng;
pub mod secure_apps;

pub use bits::BitString;
pub use par::Parallelism;
