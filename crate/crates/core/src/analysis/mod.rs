//! Diagnostics on programs: separated sets and entropy estimates, pair
//! classification, eventual constancy, distality and convergence.

pub mod convergence;
pub mod pairs;
pub mod separation;

pub use convergence::{convergence_report, ConvergenceReport, StageEnvelope};
pub use pairs::{
    distality_report, eventual_constancy, ly_classify, Classification, DistalPair,
    DistalityReport, PairVerdict, Settling,
};
pub use separation::{
    entropy_estimate, greedy_separated, grid, rho_na, sample_values, EntropyCell, EntropyReport,
    RhoResult, SeparationReport,
};
