//! Exact pointer states for cascaded Stern-Gerlach spin measurements.
//!
//! The crate builds post-selected meter distributions from closed-form
//! Gaussian wavepacket solutions, compares them against the asymptotic
//! weak-value (AAV) approximation, and simulates the sequential
//! discrimination of two realizations of the maximally mixed spin state.
//!
//! Module map:
//!
//! - [`gaussian`]: complex Gaussian terms, Fourier transforms, overlaps.
//! - [`spin`]: spinors, Pauli algebra, weak values.
//! - [`sgevolve`]: branch-state evolution through Stern-Gerlach stages.
//! - [`aav`]: the first-order weak-measurement prediction and its validity checks.
//! - [`analysis`]: peak extraction, limiting densities, distance metrics.
//! - [`discriminate`]: Monte Carlo sampling and Bob's decision strategies.
//! - [`config`], [`presets`], [`pipeline`]: declarative runs used by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aav;
pub mod analysis;
pub mod config;
pub mod discriminate;
pub mod error;
pub mod gaussian;
pub mod grid;
pub mod pipeline;
pub mod presets;
pub mod rng;
pub mod sgevolve;
pub mod spin;
pub mod stats;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use gaussian::{inner_product, ChirpedGaussian, WavepacketSum};
pub use grid::{Distribution, Grid};
pub use sgevolve::{BranchState, Particle, Regime, SGStage};
pub use spin::{bloch_state, Sign, SpinOperator, Spinor};

/// Spatial axis carrying a non-trivial meter state.
///
/// `y` is the beam axis; its motion never reaches the reduced pointer and is not modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 2] = [Axis::X, Axis::Z];

    pub(crate) fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Z => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Position,
    Momentum,
}
