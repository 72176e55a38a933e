//! Evolutionary machinery: theory constants, empirical losses, the two
//! selection rules and the generation loop.

mod evolution;
mod selection;
mod theory;

pub use crate::mutators::{Neighborhood, NeighborhoodKind};
pub use evolution::{
    run_evolution, support_precision_recall, write_traces_csv, Algorithm, EvolutionConfig,
    EvolutionSettings, EvolutionTrace, GenerationRecord, RunStatus, TRACE_HEADER,
};
pub use selection::{
    bn_choose, bn_eligible, bn_select, empirical_loss, opt_choose, opt_eligible, opt_select,
    LossEvaluator, SelectionEvent, SelectionOutcome,
};
pub use theory::{theory_params_bn, theory_params_opt, TheoryParams, FEASIBLE_SAMPLE_EVALUATIONS};
