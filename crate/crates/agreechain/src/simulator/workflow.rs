//! Executable workflow models: task lists with participant interactions and
//! per-task failure modes. The two shipped models describe the same
//! maintenance case handled with paper contracts (20 failure sources, seven
//! participants) and with ledger-backed contracts (five failure sources).

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SimError;

const TRADITIONAL_JSON: &str = include_str!("../../data/traditional.json");
const SMART_JSON: &str = include_str!("../../data/smart.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WorkflowName {
    Traditional,
    Smart,
}

impl WorkflowName {
    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Traditional => "Traditional",
            Self::Smart => "Smart",
        }
    }
}

impl std::fmt::Display for WorkflowName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WorkflowName {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "traditional" => Ok(Self::Traditional),
            "smart" => Ok(Self::Smart),
            other => Err(SimError::UnknownWorkflow(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Participant {
    pub symbol: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interaction {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureMode {
    pub id: String,
    pub description: String,
    pub default_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub description: String,
    pub interactions: Vec<Interaction>,
    #[serde(default)]
    pub failure_modes: Vec<FailureMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowModel {
    pub name: WorkflowName,
    pub participants: Vec<Participant>,
    pub tasks: Vec<Task>,
}

/// One failure source paired with its task (task indexes are 1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureSource {
    pub task_index: usize,
    pub task_description: String,
    pub mode_id: String,
    pub description: String,
    pub default_probability: f64,
}

impl WorkflowModel {
    /// The shipped model for a workflow name.
    pub fn build(name: WorkflowName) -> Self {
        let json = match name {
            WorkflowName::Traditional => TRADITIONAL_JSON,
            WorkflowName::Smart => SMART_JSON,
        };
        Self::from_json(json).expect("embedded workflow data is valid")
    }

    /// Parse and validate a workflow model from JSON.
    pub fn from_json(json: &str) -> Result<Self, SimError> {
        let model: WorkflowModel =
            serde_json::from_str(json).map_err(|e| SimError::BadModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let mut symbols = BTreeSet::new();
        for participant in &self.participants {
            if !symbols.insert(participant.symbol.as_str()) {
                return Err(SimError::BadModel(format!(
                    "duplicate participant symbol {}",
                    participant.symbol
                )));
            }
        }
        let mut mode_ids = BTreeSet::new();
        for (i, task) in self.tasks.iter().enumerate() {
            for interaction in &task.interactions {
                for endpoint in [&interaction.from, &interaction.to] {
                    if !symbols.contains(endpoint.as_str()) {
                        return Err(SimError::BadModel(format!(
                            "task {} references undeclared participant {}",
                            i + 1,
                            endpoint
                        )));
                    }
                }
            }
            for mode in &task.failure_modes {
                if !mode_ids.insert(mode.id.as_str()) {
                    return Err(SimError::BadModel(format!("duplicate mode id {}", mode.id)));
                }
                if !(0.0..=1.0).contains(&mode.default_probability) {
                    return Err(SimError::InvalidProbability {
                        scope: mode.id.clone(),
                        value: mode.default_probability,
                    });
                }
            }
        }
        Ok(())
    }

    /// Distinct participant symbols, in declaration order.
    pub fn participant_symbols(&self) -> Vec<&str> {
        self.participants.iter().map(|p| p.symbol.as_str()).collect()
    }

    /// Every failure mode paired with its task, in table order.
    pub fn failure_sources(&self) -> Vec<FailureSource> {
        self.tasks
            .iter()
            .enumerate()
            .flat_map(|(i, task)| {
                task.failure_modes.iter().map(move |mode| FailureSource {
                    task_index: i + 1,
                    task_description: task.description.clone(),
                    mode_id: mode.id.clone(),
                    description: mode.description.clone(),
                    default_probability: mode.default_probability,
                })
            })
            .collect()
    }

    /// Total failure-mode count.
    pub fn failure_source_count(&self) -> usize {
        self.tasks.iter().map(|t| t.failure_modes.len()).sum()
    }
}

/// Build the shipped model for a workflow name.
pub fn build_workflow(name: WorkflowName) -> WorkflowModel {
    WorkflowModel::build(name)
}
