//! Scale-indexed quantities on solved fields and the estimate checks built on them.
//!
//! All averages over `B_r` treat the solution as zero outside the domain, so
//! they divide by `|B_r|` even where the mesh only covers `D_r`.

pub mod averaging;
pub mod checks;
pub mod config;
pub mod excess;
pub mod integrate;
pub mod iteration;
pub mod report;

pub use averaging::{averaging_mt, averaging_mt_spaced, overlap_constant, sample_grid, truncated_maximal, SampledField};
pub use checks::{
    approximation_error, check_caccioppoli, check_excess_decay, check_large_scale_cz, check_lipschitz, check_rate,
    check_reverse_holder, convexity_fit, estimate_delta, fit_rate, BallRecord, DecayResult, LipschitzResult,
};
pub use config::AnalysisConfig;
pub use excess::{build_profile, excess_quantities, ladder, Excess, ScaleProfile};
pub use integrate::BallIntegrator;
pub use iteration::{iteration_verify, measure_c0, ConclusionVerdict, IterationParams, IterationReport, SampledTriple};
pub use report::CheckRow;
