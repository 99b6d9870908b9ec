//! Vulnerability analysis of fixed-time traffic signal control under
//! falsified sensor readings.
//!
//! The crate contains a bounded-variable simplex ([`lp`]), a binary
//! branch-and-bound on top of it ([`milp`]), the network model
//! ([`network`]), per-intersection fixed-time scheduling ([`fixed_time`]),
//! bilevel attacker models reformulated through KKT conditions
//! ([`attack`]) and reporting helpers ([`analysis`]).

pub mod analysis;
pub mod attack;
pub mod fixed_time;
pub mod fixtures;
pub mod lp;
pub mod milp;
pub mod network;
