//! Simulated display-advertising ecosystem (taxonomy, ad user profiles,
//! campaign marketplace, display network) together with an attack that
//! infers individual visitors' affinity audiences from per-window audience
//! counters.
//!
//! Everything here is `no_std` with `alloc`; file formats and the command
//! line live in the `adtrap` crate.

#![no_std]

extern crate alloc;

pub mod gdn;
pub mod ids;
pub mod marketplace;
pub mod money;
pub mod profile;
pub mod simulation;
pub mod taxonomy;
pub mod trap;

pub use ids::*;
pub use money::Money;
