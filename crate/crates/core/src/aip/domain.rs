//! Symbolic domains: factors and action templates, loaded from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::belief::{BeliefState, StateFactor};
use crate::error::{Error, Result};

/// `factor == value`, both resolved to indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub factor: usize,
    pub value: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionTemplate {
    pub name: String,
    pub parameters: Vec<String>,
    pub preconditions: Vec<Condition>,
    pub postconditions: Vec<Condition>,
    /// Key the plan interface resolves to a cost function.
    pub cost_key: String,
}

impl ActionTemplate {
    pub fn display(&self) -> String {
        if self.parameters.is_empty() {
            self.name.clone()
        } else {
            format!("{}({})", self.name, self.parameters.join(","))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorDef {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub factors: Vec<FactorDef>,
    pub actions: Vec<ActionTemplate>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCondition {
    factor: String,
    value: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAction {
    name: String,
    #[serde(default)]
    parameters: Vec<String>,
    #[serde(default)]
    preconditions: Vec<RawCondition>,
    postconditions: Vec<RawCondition>,
    cost_key: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    format_version: u32,
    name: String,
    factors: Vec<FactorDef>,
    actions: Vec<RawAction>,
}

pub const DOMAIN_FORMAT_VERSION: u32 = 1;

impl Domain {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawDomain = toml::from_str(text).map_err(|e| Error::Domain(e.to_string()))?;
        if raw.format_version != DOMAIN_FORMAT_VERSION {
            return Err(Error::Domain(format!(
                "unsupported domain format_version {}",
                raw.format_version
            )));
        }
        let factors = raw.factors;
        for (i, f) in factors.iter().enumerate() {
            if f.values.len() < 2 {
                return Err(Error::Domain(format!("factor {} needs at least two values", f.name)));
            }
            if factors[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::Domain(format!("duplicate factor {}", f.name)));
            }
        }
        let resolve = |c: &RawCondition, action: &str| -> Result<Condition> {
            let factor = factors
                .iter()
                .position(|f| f.name == c.factor)
                .ok_or_else(|| Error::Domain(format!("action {action} references unknown factor {}", c.factor)))?;
            let value = factors[factor]
                .values
                .iter()
                .position(|v| *v == c.value)
                .ok_or_else(|| {
                    Error::Domain(format!("action {action}: factor {} has no value {}", c.factor, c.value))
                })?;
            Ok(Condition { factor, value })
        };
        let mut actions = Vec::with_capacity(raw.actions.len());
        for a in &raw.actions {
            if a.postconditions.is_empty() {
                return Err(Error::Domain(format!("action {} has no postconditions", a.name)));
            }
            if actions.iter().any(|b: &ActionTemplate| b.name == a.name) {
                return Err(Error::Domain(format!("duplicate action {}", a.name)));
            }
            actions.push(ActionTemplate {
                name: a.name.clone(),
                parameters: a.parameters.clone(),
                preconditions: a.preconditions.iter().map(|c| resolve(c, &a.name)).collect::<Result<_>>()?,
                postconditions: a.postconditions.iter().map(|c| resolve(c, &a.name)).collect::<Result<_>>()?,
                cost_key: a.cost_key.clone(),
            });
        }
        Ok(Domain {
            name: raw.name,
            factors,
            actions,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Uniform beliefs over every factor.
    pub fn initial_beliefs(&self) -> BeliefState {
        BeliefState {
            factors: self
                .factors
                .iter()
                .map(|f| StateFactor::new(f.name.clone(), f.values.clone()))
                .collect(),
        }
    }

    /// Resolves `(factor, value)` names into a condition.
    pub fn condition(&self, factor: &str, value: &str) -> Result<Condition> {
        let f = self
            .factors
            .iter()
            .position(|d| d.name == factor)
            .ok_or_else(|| Error::Domain(format!("desired state references unknown factor {factor}")))?;
        let v = self.factors[f]
            .values
            .iter()
            .position(|x| x == value)
            .ok_or_else(|| Error::Domain(format!("factor {factor} has no value {value}")))?;
        Ok(Condition { factor: f, value: v })
    }

    pub fn action(&self, name: &str) -> Option<&ActionTemplate> {
        self.actions.iter().find(|a| a.name == name)
    }
}
