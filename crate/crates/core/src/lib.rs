//! Stochastic emulation of pure-state quantum circuits with grabits.
//!
//! An `n`-qubit real state is carried by the alternating-parity sum of a
//! probability distribution over byte4 values (blv plus gradient bit per
//! grabit). Circuits propagate either a finite ensemble of realizations or
//! the exact probability vector, and refreshment procedures restore the
//! signal lost to destructive interference.

pub mod algorithms;
pub mod byte4;
pub mod circuit;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod gates;
pub mod prob;
pub mod refresh;
pub mod rng;
pub mod state;
pub mod unitary;

pub use byte4::Byte4Value;
pub use ensemble::{sample_ensemble, RealizationEnsemble};
pub use error::{GrabitError, Result};
pub use gates::{build_gate, oracle_gate, GateKind, Oracle, StochasticGate};
pub use prob::{B4ProbabilityVector, ProbVector, Weight};
pub use refresh::{rf1, rf2, rf3, RefreshReport, RefreshVariant};
pub use rng::RngStream;
pub use state::{
    encode_state, extract_state, physical_distribution, Gauge, GrabitStateEstimate, PhysicalDistribution,
    RealifiedState,
};
