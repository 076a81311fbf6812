//! `H`-norm machinery, the VI view of the saddle-point problem and
//! numerical certification of the contraction theory.

mod checks;
mod metric;
mod vi;

pub use checks::{
    check_contraction, check_h_positive_definite, check_prediction_inequality, check_skew_identity, record_trace,
    ContractionCheck, InequalityCheck, PdWitness, SkewCheck, TraceStep, ASSEMBLED_MATCH_TOL, CONTRACTION_TOL,
    PREDICTION_TOL, SKEW_TOL, SUMMABILITY_SLACK,
};
pub use metric::{h_dist_sq, h_quadratic, Coupling, HMetric, ASSEMBLY_LIMIT};
pub use vi::{lagrangian_value, vi_operator, SaddleProblem};
