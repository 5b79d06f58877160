//! JSON scenario files.
//!
//! A scenario holds the network (`num_sessions`, `receivers_per_session`,
//! `noise_variance`, `gains` with one row per receiver in session-major
//! order), optional power caps with 1-based session indices, and an
//! optional description. Zero-outage instances use their own small format
//! with per-receiver lists of gain states.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{ConstraintSet, PowerConstraint};
use crate::model::NetworkModel;
use crate::region::ZeroOutageInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    /// 1-based session indices.
    pub sessions: Vec<usize>,
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub num_sessions: usize,
    pub receivers_per_session: Vec<usize>,
    pub noise_variance: f64,
    pub gains: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<ConstraintSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: NetworkModel,
    pub constraints: Option<ConstraintSet>,
    pub description: Option<String>,
}

impl ScenarioFile {
    pub fn from_model(
        model: &NetworkModel,
        constraints: Option<&ConstraintSet>,
        description: Option<String>,
    ) -> Self {
        Self {
            num_sessions: model.num_sessions(),
            receivers_per_session: model.receivers_per_session().to_vec(),
            noise_variance: model.noise_variance(),
            gains: model.gain_rows(),
            constraints: constraints.map(|c| {
                c.constraints()
                    .iter()
                    .map(|pc| ConstraintSpec {
                        sessions: pc.sessions().iter().map(|s| s + 1).collect(),
                        cap: pc.cap(),
                    })
                    .collect()
            }),
            description,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn validate(&self) -> Result<Scenario> {
        if self.receivers_per_session.len() != self.num_sessions {
            return Err(Error::InvalidModel(format!(
                "num_sessions is {} but receivers_per_session has {} entries",
                self.num_sessions,
                self.receivers_per_session.len()
            )));
        }
        let model = NetworkModel::new(
            self.receivers_per_session.clone(),
            self.gains.clone(),
            self.noise_variance,
        )?;
        let constraints = match &self.constraints {
            None => None,
            Some(specs) => {
                let cons = specs
                    .iter()
                    .map(|s| {
                        if let Some(&bad) = s
                            .sessions
                            .iter()
                            .find(|&&i| i == 0 || i > self.num_sessions)
                        {
                            return Err(Error::InvalidConstraint(format!(
                                "session index {bad} is outside 1..={}",
                                self.num_sessions
                            )));
                        }
                        PowerConstraint::new(s.sessions.iter().map(|i| i - 1).collect(), s.cap)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let set = ConstraintSet::new(cons)?;
                set.validate_for(self.num_sessions)?;
                Some(set)
            }
        };
        Ok(Scenario {
            model,
            constraints,
            description: self.description.clone(),
        })
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<ScenarioFile>(text)?.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile::from_model(&self.model, self.constraints.as_ref(), self.description.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        self.to_file().to_json()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Zero-outage instance file: `gain_states[i][k]` is the gain vector seen
/// by receiver `i` in its state `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroOutageFile {
    pub num_pairs: usize,
    pub noise_variance: f64,
    pub gain_states: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ZeroOutageFile {
    pub fn validate(&self) -> Result<ZeroOutageInstance> {
        if self.gain_states.len() != self.num_pairs {
            return Err(Error::InvalidModel(format!(
                "num_pairs is {} but gain_states has {} entries",
                self.num_pairs,
                self.gain_states.len()
            )));
        }
        ZeroOutageInstance::new(self.gain_states.clone(), self.noise_variance)
    }

    pub fn from_instance(inst: &ZeroOutageInstance) -> Self {
        Self {
            num_pairs: inst.num_pairs(),
            noise_variance: inst.noise_variance(),
            gain_states: inst.gain_states().to_vec(),
            description: None,
        }
    }
}

pub fn load_zero_outage(path: &Path) -> Result<ZeroOutageInstance> {
    serde_json::from_str::<ZeroOutageFile>(&std::fs::read_to_string(path)?)?.validate()
}
