//! Simulation of spatially extended wavefields that evolve unitarily and
//! respond to localised energy transfers: sub-threshold transfers narrow the
//! field, transfers at or above `hbar^2 / (8 m dx^2)` collapse it onto a
//! Born-sampled location.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`wavefield`], [`spectral`], [`units`]: the sampled field and
//!   its position and momentum statistics.
//! * [`evolution`]: split-operator propagation.
//! * [`collapse`] and [`deformation`]: what an interaction does to a field.
//! * [`trajectory`]: the event engine that interleaves the two.
//! * [`experiments`]: double slit, Born statistics, localisation table and
//!   entangled pair harnesses.
//! * [`comparator`]: rank-based scoring of interpretations.

pub mod collapse;
pub mod comparator;
pub mod deformation;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod grid;
pub mod spectral;
pub mod trajectory;
pub mod units;
pub mod wavefield;

pub use collapse::{
    apply_collapse, born_sample, check_collapse, collapse_threshold, indicator_integral, BornSampler, CollapseOperator,
    CollapsePolicy, Criterion, OperatorShape,
};
pub use comparator::{posteriors, scores_from_ranks, RankingTable};
pub use deformation::{
    apply_deformation, deform_sequence, deform_width, Accumulation, AdditiveMap, DeformationParams, SequenceOutcome,
};
pub use error::{DowError, Result};
pub use evolution::{evolve, free_spread, step, Barrier, EvolutionConfig, Potential, Propagator, Slit};
pub use grid::{GridSpec, Position, Region};
pub use trajectory::{
    run_ensemble, run_ensemble_map, run_trajectory, EventRecord, InteractionEvent, Outcome, TrajectoryResult,
    WidthSample,
};
pub use units::{UnitLabel, UnitSystem};
pub use wavefield::{gaussian_packet, Spread, Wavefield};
