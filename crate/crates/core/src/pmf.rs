//! Dense joint probability tables over named categorical axes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codebook::{Codebook, Role};
use crate::error::{Error, Result};

/// Tolerance on the total mass of a table handed to [`JointPmf::new`].
const MASS_TOLERANCE: f64 = 1e-9;

/// A normalized probability table indexed by the full cross-product of the
/// codebook's categories, stored row-major in codebook order (last axis
/// varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointPmf {
    codebook: Codebook,
    table: Vec<f64>,
}

#[derive(Deserialize)]
struct RawJoint {
    codebook: Codebook,
    table: Vec<f64>,
}

impl<'de> Deserialize<'de> for JointPmf {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawJoint::deserialize(de)?;
        JointPmf::new(raw.codebook, raw.table).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn shape_of(codebook: &Codebook) -> Vec<usize> {
    codebook.variables().iter().map(|v| v.cardinality).collect()
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

/// Advances a mixed-radix counter; returns false once it wraps around.
pub(crate) fn advance(index: &mut [usize], shape: &[usize]) -> bool {
    for i in (0..index.len()).rev() {
        index[i] += 1;
        if index[i] < shape[i] {
            return true;
        }
        index[i] = 0;
    }
    false
}

impl JointPmf {
    /// Wraps an explicit table. Entries must be finite and non-negative and
    /// sum to one within 1e-9; the table is renormalized afterwards.
    pub fn new(codebook: Codebook, table: Vec<f64>) -> Result<Self> {
        let total = Self::check_entries(&codebook, &table)?;
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidTable(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        Ok(Self::normalized(codebook, table, total))
    }

    /// Normalizes arbitrary non-negative weights into a joint.
    pub fn from_weights(codebook: Codebook, weights: Vec<f64>) -> Result<Self> {
        let total = Self::check_entries(&codebook, &weights)?;
        if total <= 0.0 {
            return Err(Error::InvalidTable("weights have zero total mass".into()));
        }
        Ok(Self::normalized(codebook, weights, total))
    }

    /// Evaluates `weight` at every cell (index tuple in codebook order) and
    /// normalizes.
    pub fn from_fn(codebook: Codebook, weight: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let shape = shape_of(&codebook);
        let size: usize = shape.iter().product();
        let mut table = Vec::with_capacity(size);
        let mut index = vec![0; shape.len()];
        loop {
            table.push(weight(&index));
            if !advance(&mut index, &shape) {
                break;
            }
        }
        Self::from_weights(codebook, table)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn check_entries(codebook: &Codebook, table: &[f64]) -> Result<f64> {
        let size: usize = shape_of(codebook).iter().product();
        if table.len() != size {
            return Err(Error::InvalidTable(format!(
                "table has {} entries, codebook implies {size}",
                table.len()
            )));
        }
        if let Some(bad) = table.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidTable(format!(
                "entry {bad} is negative or not finite"
            )));
        }
        Ok(table.iter().sum())
    }

    fn normalized(codebook: Codebook, mut table: Vec<f64>, total: f64) -> Self {
        table.iter_mut().for_each(|p| *p /= total);
        JointPmf { codebook, table }
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn shape(&self) -> Vec<usize> {
        shape_of(&self.codebook)
    }

    pub fn axis_names(&self) -> Vec<&str> {
        self.codebook
            .variables()
            .iter()
            .map(|v| v.name.as_str())
            .collect()
    }

    /// Probability of one full cell.
    pub fn get(&self, index: &[usize]) -> f64 {
        let strides = strides_of(&self.shape());
        let flat: usize = index.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.table[flat]
    }

    /// Calls `f(index, p)` for every cell in storage order.
    pub fn for_each_cell(&self, mut f: impl FnMut(&[usize], f64)) {
        let shape = self.shape();
        let mut index = vec![0; shape.len()];
        for &p in &self.table {
            f(&index, p);
            advance(&mut index, &shape);
        }
    }

    fn axes_for(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut axes = names
            .iter()
            .map(|n| self.codebook.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        axes.sort_unstable();
        axes.dedup();
        Ok(axes)
    }

    /// Sums out every axis not named in `keep`. Kept axes stay in codebook
    /// order.
    pub fn marginal(&self, keep: &[&str]) -> Result<JointPmf> {
        let axes = self.axes_for(keep)?;
        Ok(self.marginal_axes(&axes))
    }

    /// Marginal over every axis whose role satisfies `keep`.
    pub fn marginal_roles(&self, keep: impl Fn(Role) -> bool) -> JointPmf {
        let axes: Vec<usize> = (0..self.codebook.len())
            .filter(|&i| keep(self.codebook.variables()[i].role))
            .collect();
        self.marginal_axes(&axes)
    }

    fn marginal_axes(&self, axes: &[usize]) -> JointPmf {
        let names: Vec<&str> = axes
            .iter()
            .map(|&i| self.codebook.variables()[i].name.as_str())
            .collect();
        let codebook = self.codebook.subset(|v| names.contains(&v.name.as_str()));
        let out_shape = shape_of(&codebook);
        let out_strides = strides_of(&out_shape);
        let mut out = vec![0.0; out_shape.iter().product()];
        self.for_each_cell(|index, p| {
            let flat: usize = axes
                .iter()
                .zip(&out_strides)
                .map(|(&a, s)| index[a] * s)
                .sum();
            out[flat] += p;
        });
        let total: f64 = out.iter().sum();
        Self::normalized(codebook, out, total)
    }

    fn given_axes(&self, given: &[(&str, usize)]) -> Result<Vec<(usize, usize)>> {
        given
            .iter()
            .map(|&(name, level)| {
                let axis = self.codebook.index_of(name)?;
                let card = self.codebook.variables()[axis].cardinality;
                if level >= card {
                    return Err(Error::InvalidArgument(format!(
                        "level {level} out of range for `{name}` (cardinality {card})"
                    )));
                }
                Ok((axis, level))
            })
            .collect()
    }

    /// Total probability of the partial assignment `given`.
    pub fn mass(&self, given: &[(&str, usize)]) -> Result<f64> {
        let given = self.given_axes(given)?;
        let mut total = 0.0;
        self.for_each_cell(|index, p| {
            if given.iter().all(|&(a, l)| index[a] == l) {
                total += p;
            }
        });
        Ok(total)
    }

    /// p(target | given), normalized over the target axes.
    pub fn conditional(&self, target: &[&str], given: &[(&str, usize)]) -> Result<JointPmf> {
        let target_axes = self.axes_for(target)?;
        let given_axes = self.given_axes(given)?;
        let names: Vec<&str> = target_axes
            .iter()
            .map(|&i| self.codebook.variables()[i].name.as_str())
            .collect();
        let codebook = self.codebook.subset(|v| names.contains(&v.name.as_str()));
        let out_shape = shape_of(&codebook);
        let out_strides = strides_of(&out_shape);
        let mut out = vec![0.0; out_shape.iter().product()];
        self.for_each_cell(|index, p| {
            if given_axes.iter().all(|&(a, l)| index[a] == l) {
                let flat: usize = target_axes
                    .iter()
                    .zip(&out_strides)
                    .map(|(&a, s)| index[a] * s)
                    .sum();
                out[flat] += p;
            }
        });
        let total: f64 = out.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroConditioningMass(format!("P({given:?}) = 0")));
        }
        Ok(Self::normalized(codebook, out, total))
    }

    /// E[Y | given] using the codebook's outcome values.
    pub fn cond_mean_y(&self, given: &[(&str, usize)]) -> Result<f64> {
        let y = self
            .codebook
            .variable(Role::Outcome)
            .ok_or(Error::MissingRole("outcome (Y)"))?
            .name
            .clone();
        let dist = self.conditional(&[y.as_str()], given)?;
        Ok(dist
            .table
            .iter()
            .zip(self.codebook.y_values())
            .map(|(p, v)| p * v)
            .sum())
    }
}
