//! System-level simulator for downlink NOMA fog radio access networks.
//!
//! A macro cell (MRRH) shares its spectrum with a set of small fog access
//! points (F-APs), each serving its own users (F-UEs) and holding a local
//! content cache. Several F-UEs may be multiplexed on one subchannel in the
//! power domain and separated at the receivers by successive interference
//! cancellation. The library covers the full allocation pipeline:
//!
//! - [`topology`] — random network geometries under distance constraints;
//! - [`channel`] — path loss, Rayleigh fading, and per-subchannel CRNN values;
//! - [`noma`] — SIC decoding order, SINR, Shannon rates, macro-cell
//!   interference accounting;
//! - [`caching`] — Zipf content popularity and per-user cache-hit
//!   coefficients;
//! - [`matching`] — many-to-many F-UE/subchannel matching with quotas and an
//!   exhaustive oracle for small instances;
//! - [`power_game`] — non-cooperative best-response power allocation with
//!   interference pricing and a caching reward;
//! - [`config`] / [`harness`] — flat-file configuration, seeded Monte Carlo
//!   drops, scheme comparison, and CSV sweeps.
//!
//! The `simulate` binary drives [`harness::run_sweep`] from the command line.

pub mod caching;
pub mod channel;
pub mod config;
pub mod harness;
pub mod matching;
pub mod noma;
pub mod power_game;
pub mod topology;

pub use caching::{CacheConfig, CachePlacement};
pub use channel::{ChannelConfig, ChannelState, SpectrumConfig};
pub use config::{Scheme, SchemeVariant, SimConfig};
pub use harness::DropResult;
pub use matching::Matching;
pub use noma::PowerAllocation;
pub use power_game::{GameResult, UtilityParams};
pub use topology::{GeometryConfig, NetworkTopology};
