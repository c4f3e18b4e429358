//! Scoring, sweeps, perturbation and interaction-frequency reports.

mod f1;
mod frequency;
mod perturb;
mod sweep;

pub use f1::{align_labels, macro_f1, min_cost_assignment, EvaluationReport, GroundTruth};
pub use frequency::{interaction_frequency_report, FrequencyReport};
pub use perturb::{
    noise_matrix, perturb, perturb_graph, perturb_masked, unit_scale, NoiseKind, NoiseMode,
    NoiseSpec, NoiseSupport,
};
pub use sweep::{
    grid, sweep, GridPoint, MethodScore, SweepConfig, SweepReport, SweepRow, SweepTable,
};
