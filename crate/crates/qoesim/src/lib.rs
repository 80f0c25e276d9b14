//! QoE-aware resource allocation for video clients in a converged
//! OFDMA-wireless + EPON access network.
//!
//! The library models video-conference QoE (empirical MoS and call-drop
//! probability per quality profile), prices profiles in wireless PRBs
//! from a Rayleigh-faded channel, and allocates resources two ways:
//! per-cell PRB scheduling ([`wireless`]: round robin, water filling, or
//! a multiple-choice-knapsack FPTAS) and EPON downstream capacity
//! sharing ([`epon`]: call-drop-proportional or priority-greedy). The
//! [`sim`] module composes both into seeded, reproducible scenario runs;
//! [`verify`] bundles the self-checks behind the `qoesim verify` command.

pub mod channel;
pub mod epon;
pub mod error;
pub mod qoe;
pub mod sim;
pub mod verify;
pub mod wireless;

pub use error::{Error, Result};
