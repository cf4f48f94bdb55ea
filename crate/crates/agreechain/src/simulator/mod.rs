//! Workflow models with failure injection.
//!
//! Encodes the two maintenance workflows (paper-contract and ledger-backed)
//! as executable task lists and compares them by Monte Carlo failure
//! injection. With independent modes the success probability has the closed
//! form ∏(1 − p_i), which the acceptance suite checks the sampler against.

mod monte_carlo;
mod workflow;

pub use monte_carlo::{
    compare, exact_success_probability, report_csv, resolve_probabilities, run_monte_carlo,
    trial_rng, Comparison, ComparisonSide, ProbabilityOverride, SimulationConfig,
    SimulationReport,
};
pub use workflow::{
    build_workflow, FailureMode, FailureSource, Interaction, Participant, Task, WorkflowModel,
    WorkflowName,
};
