//! First-Born model of coherently controlled electron-impact dissociation of H₂⁺.
//!
//! The crate builds Morse vibrational states on the bonding curve, energy-normalized
//! continuum states on the repulsive curve, LCAO Born amplitudes between them, and the
//! cross sections of entangled and wave-packet incident superpositions.

pub mod born_amplitudes;
pub mod collision_timing;
pub mod continuum_states;
pub mod cross_sections;
pub mod error;
pub mod grid;
pub mod kinematics;
pub mod molecular_structure;
pub mod numerov;
pub mod special;
pub mod superposition;
pub mod units;

pub use error::{Error, Result};
