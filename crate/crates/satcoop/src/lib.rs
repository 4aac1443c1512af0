//! Deterministic desk-scale simulator for the uplink from a single-antenna
//! handheld terminal to a cluster of cooperating LEO satellites.
//!
//! The crate builds a two-shell Walker constellation, propagates it on
//! circular orbits, draws land-mobile-satellite channels from a two-state
//! semi-Markov process with Loo fading, and runs linear MMSE detection in
//! two cooperation modes:
//!
//! * **full CSI** — every satellite forwards its received sample and its
//!   instantaneous channel estimate to one processing satellite;
//! * **partial CSI** — satellites locally normalize by their own estimate
//!   and forward only the sample plus long-term channel moments to the
//!   network controller (the nearest satellite).
//!
//! On top of the physical layer, [`experiments`] orchestrates capacity
//! time series, capacity/BER versus cluster size, carrier/bandwidth
//! sweeps, a single-satellite no-handover baseline, and data-sharing
//! overhead accounting. All randomness is derived from a master seed per
//! (purpose, satellite, time index), so every run is reproducible
//! byte-for-byte regardless of thread count.

pub mod channel;
pub mod detection;
pub mod experiments;
pub mod geometry;
pub mod output;
pub mod scenario;
pub mod streams;
