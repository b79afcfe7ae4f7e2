//! JSON-serializable instance descriptions; enough to rebuild an
//! [`Environment`] bit-exactly.

use serde::{Deserialize, Serialize};

use super::adversary::AdversarySpec;
use super::{Environment, RewardSchedule};
use crate::error::Result;
use crate::model::ActionSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub actions: ActionSet,
    pub schedule: RewardSchedule,
    pub adversary: AdversarySpec,
    #[serde(default = "default_noise")]
    pub noise: f64,
    pub horizon: usize,
    pub seed: u64,
    /// Misspecification level, when the instance was built as one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default = "default_omniscient")]
    pub omniscient: bool,
}

fn default_noise() -> f64 {
    1.0
}

fn default_omniscient() -> bool {
    true
}

impl InstanceSpec {
    pub fn build(&self) -> Result<Environment> {
        Ok(Environment::new(
            self.actions.clone(),
            self.schedule.clone(),
            self.adversary.build(),
            self.noise,
            self.horizon,
            self.seed,
        )?
        .with_omniscient(self.omniscient))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
