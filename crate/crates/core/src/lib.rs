//! Simulation and audit toolkit for a two-photon interferometer with a
//! partially absorbing phase shifter in one arm.
//!
//! A down-conversion source emits photon pairs in a path-entangled state.
//! Each photon is recombined on its own beam splitter and detected at one of
//! two ports; on side 2 the in-arm phase shifter additionally absorbs with
//! amplitude `sqrt(1 - u^2)`, giving a third possible outcome. The crate
//! answers three questions about this apparatus:
//!
//! 1. For which settings do the three zero-coincidence conditions hold
//!    together with a nonzero target coincidence ([`hardy`])?
//! 2. Which Bell-type inequalities are violated by the resulting statistics,
//!    and how does the answer change when absorption events are discarded
//!    versus counted ([`bell`], [`lhv`], [`events`])?
//! 3. How well does the same apparatus detect the absorber without
//!    scattering a photon off it ([`ifm`])?
//!
//! [`optics`] propagates amplitudes element by element and is the reference
//! implementation; [`closed_form`] freezes the interference algebra. The two
//! are developed independently and cross-checked to 1e-12.

pub mod bell;
pub mod cli;
pub mod closed_form;
pub mod error;
pub mod events;
pub mod hardy;
pub mod ifm;
pub mod lhv;
pub mod optics;

pub use error::{Error, Result};
pub use optics::{JointProbabilityTable, OpticalSetting, SettingPair, Side1Outcome, Side2Outcome};
