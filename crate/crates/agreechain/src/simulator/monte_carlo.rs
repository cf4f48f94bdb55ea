//! Monte Carlo failure injection over workflow models.
//!
//! Each trial samples every failure mode independently with its probability;
//! a trial succeeds iff no mode fires. Trial `t` draws from its own RNG
//! stream — ChaCha8 keyed by a SplitMix64 mix of `(seed, t)` — so reports are
//! bit-identical regardless of execution order or thread count. All modes are
//! sampled even after the trial has already failed, keeping per-mode fire
//! counts unbiased.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SimError;

use super::workflow::{build_workflow, WorkflowModel, WorkflowName};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Where each mode's firing probability comes from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityOverride {
    /// Use each mode's default_probability from the model.
    #[default]
    Default,
    /// One probability for every mode.
    Uniform(f64),
    /// Per-mode overrides; modes not named keep their default.
    PerMode(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub workflow: WorkflowName,
    #[serde(default)]
    pub probability: ProbabilityOverride,
    pub trials: u64,
    pub seed: u64,
}

/// Aggregated results plus the config echo that makes them reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationReport {
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    /// Fire counts per mode id, sorted by id.
    pub mode_fires: BTreeMap<String, u64>,
    pub mean_fired_per_trial: f64,
    pub config: SimulationConfig,
}

// ---------------------------------------------------------------------------
// RNG derivation
// ---------------------------------------------------------------------------

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// RNG stream for one trial, derived solely from (seed, trial).
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mixed = splitmix64(seed.wrapping_add(trial.wrapping_add(1).wrapping_mul(SPLITMIX_GAMMA)));
    ChaCha8Rng::seed_from_u64(mixed)
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Per-mode probabilities in model order, after applying overrides.
pub fn resolve_probabilities(
    model: &WorkflowModel,
    probability: &ProbabilityOverride,
) -> Result<Vec<(String, f64)>, SimError> {
    let sources = model.failure_sources();
    let resolved: Vec<(String, f64)> = match probability {
        ProbabilityOverride::Default => sources
            .iter()
            .map(|s| (s.mode_id.clone(), s.default_probability))
            .collect(),
        ProbabilityOverride::Uniform(p) => {
            sources.iter().map(|s| (s.mode_id.clone(), *p)).collect()
        }
        ProbabilityOverride::PerMode(map) => {
            for key in map.keys() {
                if !sources.iter().any(|s| s.mode_id == *key) {
                    return Err(SimError::UnknownMode(key.clone()));
                }
            }
            sources
                .iter()
                .map(|s| {
                    let p = map.get(&s.mode_id).copied().unwrap_or(s.default_probability);
                    (s.mode_id.clone(), p)
                })
                .collect()
        }
    };
    for (id, p) in &resolved {
        if !(0.0..=1.0).contains(p) || !p.is_finite() {
            return Err(SimError::InvalidProbability { scope: id.clone(), value: *p });
        }
    }
    Ok(resolved)
}

#[derive(Clone)]
struct TrialAccumulator {
    successes: u64,
    total_fires: u64,
    fires: Vec<u64>,
}

impl TrialAccumulator {
    fn new(modes: usize) -> Self {
        Self { successes: 0, total_fires: 0, fires: vec![0; modes] }
    }

    fn merge(mut self, other: Self) -> Self {
        self.successes += other.successes;
        self.total_fires += other.total_fires;
        for (a, b) in self.fires.iter_mut().zip(other.fires) {
            *a += b;
        }
        self
    }
}

/// Run the simulation. Trials are embarrassingly parallel; the result is a
/// deterministic function of the config alone.
pub fn run_monte_carlo(config: &SimulationConfig) -> Result<SimulationReport, SimError> {
    if config.trials == 0 {
        return Err(SimError::ZeroTrials);
    }
    let model = build_workflow(config.workflow);
    let probs = resolve_probabilities(&model, &config.probability)?;
    let mode_count = probs.len();
    let seed = config.seed;

    let acc = (0..config.trials)
        .into_par_iter()
        .fold(
            || TrialAccumulator::new(mode_count),
            |mut acc, trial| {
                let mut rng = trial_rng(seed, trial);
                let mut any_fired = false;
                for (i, (_, p)) in probs.iter().enumerate() {
                    let draw: f64 = rng.gen();
                    if draw < *p {
                        acc.fires[i] += 1;
                        acc.total_fires += 1;
                        any_fired = true;
                    }
                }
                if !any_fired {
                    acc.successes += 1;
                }
                acc
            },
        )
        .reduce(|| TrialAccumulator::new(mode_count), TrialAccumulator::merge);

    let mode_fires: BTreeMap<String, u64> = probs
        .iter()
        .map(|(id, _)| id.clone())
        .zip(acc.fires)
        .collect();
    Ok(SimulationReport {
        trials: config.trials,
        successes: acc.successes,
        success_rate: acc.successes as f64 / config.trials as f64,
        mode_fires,
        mean_fired_per_trial: acc.total_fires as f64 / config.trials as f64,
        config: config.clone(),
    })
}

/// Closed-form success probability for independent modes: ∏(1 − p_i).
pub fn exact_success_probability(probabilities: &[f64]) -> f64 {
    probabilities.iter().map(|p| 1.0 - p).product()
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSide {
    pub workflow: WorkflowName,
    pub success_rate: f64,
    pub failure_sources: u64,
    pub participants: u64,
}

/// Pure arithmetic over two reports with the same trial count; deltas are
/// a − b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub trials: u64,
    pub a: ComparisonSide,
    pub b: ComparisonSide,
    pub success_rate_delta: f64,
    pub failure_source_delta: i64,
    pub participant_delta: i64,
}

fn side(report: &SimulationReport) -> ComparisonSide {
    let model = build_workflow(report.config.workflow);
    ComparisonSide {
        workflow: report.config.workflow,
        success_rate: report.success_rate,
        failure_sources: model.failure_source_count() as u64,
        participants: model.participant_symbols().len() as u64,
    }
}

pub fn compare(a: &SimulationReport, b: &SimulationReport) -> Result<Comparison, SimError> {
    if a.trials != b.trials {
        return Err(SimError::MismatchedTrials { a: a.trials, b: b.trials });
    }
    let side_a = side(a);
    let side_b = side(b);
    Ok(Comparison {
        trials: a.trials,
        success_rate_delta: side_a.success_rate - side_b.success_rate,
        failure_source_delta: side_a.failure_sources as i64 - side_b.failure_sources as i64,
        participant_delta: side_a.participants as i64 - side_b.participants as i64,
        a: side_a,
        b: side_b,
    })
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

/// One row per mode, with the run summary denormalized into every row.
pub fn report_csv(report: &SimulationReport) -> String {
    let mut out = String::from(
        "workflow,trials,seed,successes,success_rate,mode_id,fires,fire_rate\n",
    );
    for (mode, fires) in &report.mode_fires {
        let fire_rate = *fires as f64 / report.trials as f64;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            report.config.workflow,
            report.trials,
            report.config.seed,
            report.successes,
            report.success_rate,
            mode,
            fires,
            fire_rate,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(workflow: WorkflowName, p: f64, trials: u64, seed: u64) -> SimulationConfig {
        SimulationConfig {
            workflow,
            probability: ProbabilityOverride::Uniform(p),
            trials,
            seed,
        }
    }

    #[test]
    fn zero_probability_always_succeeds() {
        let report = run_monte_carlo(&config(WorkflowName::Smart, 0.0, 500, 1)).unwrap();
        assert_eq!(report.successes, 500);
        assert_eq!(report.success_rate, 1.0);
        assert!(report.mode_fires.values().all(|&f| f == 0));
    }

    #[test]
    fn unit_probability_fires_every_mode_every_trial() {
        let report = run_monte_carlo(&config(WorkflowName::Smart, 1.0, 200, 1)).unwrap();
        assert_eq!(report.successes, 0);
        assert_eq!(report.success_rate, 0.0);
        assert_eq!(report.mode_fires.len(), 5);
        assert!(report.mode_fires.values().all(|&f| f == 200));
        assert_eq!(report.mean_fired_per_trial, 5.0);
    }

    #[test]
    fn identical_config_gives_identical_report() {
        let c = config(WorkflowName::Traditional, 0.05, 2_000, 42);
        let a = run_monte_carlo(&c).unwrap();
        let b = run_monte_carlo(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn changing_seed_changes_only_stochastic_fields() {
        let a = run_monte_carlo(&config(WorkflowName::Smart, 0.3, 2_000, 1)).unwrap();
        let b = run_monte_carlo(&config(WorkflowName::Smart, 0.3, 2_000, 2)).unwrap();
        assert_ne!(a.mode_fires, b.mode_fires);
        assert_eq!(a.trials, b.trials);
        assert_eq!(
            a.mode_fires.keys().collect::<Vec<_>>(),
            b.mode_fires.keys().collect::<Vec<_>>()
        );
        assert_eq!(a.config.workflow, b.config.workflow);
    }

    #[test]
    fn raising_one_probability_never_raises_success_rate() {
        // Common random numbers: each mode consumes exactly one draw per
        // trial in model order, so firing sets only grow.
        let base: BTreeMap<String, f64> =
            [("error_not_fixed".to_string(), 0.1)].into_iter().collect();
        let mut raised = base.clone();
        raised.insert("error_not_fixed".to_string(), 0.6);

        let a = run_monte_carlo(&SimulationConfig {
            workflow: WorkflowName::Smart,
            probability: ProbabilityOverride::PerMode(base),
            trials: 5_000,
            seed: 7,
        })
        .unwrap();
        let b = run_monte_carlo(&SimulationConfig {
            workflow: WorkflowName::Smart,
            probability: ProbabilityOverride::PerMode(raised),
            trials: 5_000,
            seed: 7,
        })
        .unwrap();
        assert!(b.success_rate <= a.success_rate);
    }

    #[test]
    fn invalid_probability_is_rejected() {
        let err = run_monte_carlo(&config(WorkflowName::Smart, 1.5, 10, 1)).unwrap_err();
        assert!(matches!(err, SimError::InvalidProbability { .. }));
        let err = run_monte_carlo(&config(WorkflowName::Smart, -0.1, 10, 1)).unwrap_err();
        assert!(matches!(err, SimError::InvalidProbability { .. }));
    }

    #[test]
    fn zero_trials_is_rejected() {
        let err = run_monte_carlo(&config(WorkflowName::Smart, 0.5, 0, 1)).unwrap_err();
        assert!(matches!(err, SimError::ZeroTrials));
    }

    #[test]
    fn unknown_mode_override_is_rejected() {
        let map: BTreeMap<String, f64> = [("ghost".to_string(), 0.5)].into_iter().collect();
        let err = run_monte_carlo(&SimulationConfig {
            workflow: WorkflowName::Smart,
            probability: ProbabilityOverride::PerMode(map),
            trials: 10,
            seed: 1,
        })
        .unwrap_err();
        assert!(matches!(err, SimError::UnknownMode(_)));
    }

    #[test]
    fn comparison_of_identical_reports_is_all_zero() {
        let report = run_monte_carlo(&config(WorkflowName::Smart, 0.05, 1_000, 3)).unwrap();
        let cmp = compare(&report, &report).unwrap();
        assert_eq!(cmp.success_rate_delta, 0.0);
        assert_eq!(cmp.failure_source_delta, 0);
        assert_eq!(cmp.participant_delta, 0);
    }

    #[test]
    fn comparison_rejects_mismatched_trials() {
        let a = run_monte_carlo(&config(WorkflowName::Smart, 0.05, 100, 3)).unwrap();
        let b = run_monte_carlo(&config(WorkflowName::Smart, 0.05, 200, 3)).unwrap();
        assert!(matches!(compare(&a, &b), Err(SimError::MismatchedTrials { .. })));
    }

    #[test]
    fn traditional_vs_smart_source_delta_is_fifteen() {
        let a = run_monte_carlo(&config(WorkflowName::Traditional, 0.05, 100, 3)).unwrap();
        let b = run_monte_carlo(&config(WorkflowName::Smart, 0.05, 100, 3)).unwrap();
        let cmp = compare(&a, &b).unwrap();
        assert_eq!(cmp.failure_source_delta, 15);
        assert_eq!(cmp.a.participants, 7);
    }

    #[test]
    fn trial_rng_streams_are_stable() {
        let mut a = trial_rng(42, 7);
        let mut b = trial_rng(42, 7);
        let mut c = trial_rng(42, 8);
        let xs: Vec<u64> = (0..8).map(|_| a.gen()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.gen()).collect();
        let zs: Vec<u64> = (0..8).map(|_| c.gen()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }
}
