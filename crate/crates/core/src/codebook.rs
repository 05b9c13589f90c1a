//! Variable declarations shared by joints, datasets, and frequency models.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a variable stands for in the causal model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[serde(alias = "U")]
    LatentConfounder,
    #[serde(alias = "M")]
    LatentMediator,
    #[serde(alias = "X")]
    Covariate,
    #[serde(alias = "W")]
    OutcomeProxy,
    #[serde(alias = "Z")]
    TreatmentProxy,
    #[serde(alias = "A")]
    Treatment,
    #[serde(alias = "Y")]
    Outcome,
}

impl Role {
    pub fn is_latent(self) -> bool {
        matches!(self, Role::LatentConfounder | Role::LatentMediator)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Role::LatentConfounder => "U",
            Role::LatentMediator => "M",
            Role::Covariate => "X",
            Role::OutcomeProxy => "W",
            Role::TreatmentProxy => "Z",
            Role::Treatment => "A",
            Role::Outcome => "Y",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub cardinality: usize,
    pub role: Role,
}

impl Variable {
    pub fn new(name: impl Into<String>, cardinality: usize, role: Role) -> Self {
        Variable {
            name: name.into(),
            cardinality,
            role,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Codebook {
    variables: Vec<Variable>,
    y_values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawCodebook {
    variables: Vec<Variable>,
    #[serde(default)]
    y_values: Vec<f64>,
}

impl<'de> Deserialize<'de> for Codebook {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawCodebook::deserialize(de)?;
        Codebook::new(raw.variables, raw.y_values).map_err(serde::de::Error::custom)
    }
}

impl Codebook {
    /// Builds a codebook, checking the structural invariants that hold for
    /// every sub-codebook as well: unique names, positive cardinalities, a
    /// binary treatment, at most one variable per non-covariate role, and
    /// strictly increasing outcome values (one per outcome level).
    pub fn new(variables: Vec<Variable>, y_values: Vec<f64>) -> Result<Self> {
        let mut names = HashSet::new();
        let mut roles = HashSet::new();
        for v in &variables {
            if !names.insert(v.name.as_str()) {
                return Err(Error::InvalidCodebook(format!(
                    "duplicate name `{}`",
                    v.name
                )));
            }
            if v.cardinality == 0 {
                return Err(Error::InvalidCodebook(format!(
                    "`{}` has cardinality 0",
                    v.name
                )));
            }
            if v.role != Role::Covariate && !roles.insert(v.role) {
                return Err(Error::InvalidCodebook(format!(
                    "more than one {} variable",
                    v.role
                )));
            }
            if v.role == Role::Treatment && v.cardinality != 2 {
                return Err(Error::InvalidCodebook(format!(
                    "treatment `{}` must be binary, got cardinality {}",
                    v.name, v.cardinality
                )));
            }
        }
        if let Some(y) = variables.iter().find(|v| v.role == Role::Outcome) {
            if y_values.len() != y.cardinality {
                return Err(Error::InvalidCodebook(format!(
                    "{} y_values for outcome of cardinality {}",
                    y_values.len(),
                    y.cardinality
                )));
            }
            if y_values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidCodebook("non-finite y_values".into()));
            }
            if y_values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidCodebook(
                    "y_values must be strictly increasing".into(),
                ));
            }
        } else if !y_values.is_empty() {
            return Err(Error::InvalidCodebook(
                "y_values given without an outcome variable".into(),
            ));
        }
        Ok(Codebook {
            variables,
            y_values,
        })
    }

    /// Checks that both treatment and outcome are declared.
    pub fn require_complete(&self) -> Result<()> {
        self.role_index(Role::Treatment)
            .ok_or(Error::MissingRole("treatment (A)"))?;
        self.role_index(Role::Outcome)
            .ok_or(Error::MissingRole("outcome (Y)"))?;
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn y_values(&self) -> &[f64] {
        &self.y_values
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    pub fn role_index(&self, role: Role) -> Option<usize> {
        self.variables.iter().position(|v| v.role == role)
    }

    pub fn variable(&self, role: Role) -> Option<&Variable> {
        self.variables.iter().find(|v| v.role == role)
    }

    pub fn cardinality(&self, role: Role) -> Option<usize> {
        self.variable(role).map(|v| v.cardinality)
    }

    pub fn covariate_indices(&self) -> Vec<usize> {
        (0..self.variables.len())
            .filter(|&i| self.variables[i].role == Role::Covariate)
            .collect()
    }

    /// Cardinality of the composite covariate axis (product; 1 when there
    /// are no covariates).
    pub fn x_cardinality(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.role == Role::Covariate)
            .map(|v| v.cardinality)
            .product()
    }

    pub fn y_inf(&self) -> f64 {
        self.y_values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn y_sup(&self) -> f64 {
        self.y_values.last().copied().unwrap_or(f64::NAN)
    }

    /// The sub-codebook with latent variables removed.
    pub fn observed(&self) -> Codebook {
        self.subset(|v| !v.role.is_latent())
    }

    pub(crate) fn subset(&self, keep: impl Fn(&Variable) -> bool) -> Codebook {
        let variables: Vec<Variable> = self.variables.iter().filter(|v| keep(v)).cloned().collect();
        let has_y = variables.iter().any(|v| v.role == Role::Outcome);
        Codebook {
            variables,
            y_values: if has_y {
                self.y_values.clone()
            } else {
                Vec::new()
            },
        }
    }
}
