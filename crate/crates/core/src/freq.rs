//! Plug-in conditional tables consumed by the bound estimators.
//!
//! A [`FrequencyModel`] is a normalized table over the observed axes
//! (x, w, z, a, y). It is built either from data (counts plus an add-λ
//! pseudo-count on every cell of the joint count table) or from the observed
//! margin of an exact [`JointPmf`]. Every conditional is derived from that one
//! table, so the conditionals are mutually consistent whatever λ is.

use serde::{Deserialize, Serialize};

use crate::codebook::{Codebook, Role};
use crate::data::{Dataset, ObservedLayout};
use crate::error::{Error, Result};
use crate::pmf::JointPmf;

/// A cell of a required conditional table whose raw count (or, in population
/// mode, probability) is zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub conditional: String,
    pub cell: String,
}

#[derive(Debug, Clone)]
struct Margins {
    /// p(x, a)
    xa: Vec<f64>,
    /// p(x, w, a)
    xwa: Vec<f64>,
    /// p(x, z, a)
    xza: Vec<f64>,
    /// p(x, w, z, a)
    xwza: Vec<f64>,
    /// p(x, a, y)
    xay: Vec<f64>,
    /// p(x, z, a, y)
    xzay: Vec<f64>,
}

impl Margins {
    fn from_table(l: &ObservedLayout, table: &[f64]) -> Self {
        let mut m = Margins {
            xa: vec![0.0; l.nx * 2],
            xwa: vec![0.0; l.nx * l.nw * 2],
            xza: vec![0.0; l.nx * l.nz * 2],
            xwza: vec![0.0; l.nx * l.nw * l.nz * 2],
            xay: vec![0.0; l.nx * 2 * l.ny],
            xzay: vec![0.0; l.nx * l.nz * 2 * l.ny],
        };
        let mut flat = 0;
        for x in 0..l.nx {
            for w in 0..l.nw {
                for z in 0..l.nz {
                    for a in 0..2 {
                        for y in 0..l.ny {
                            let p = table[flat];
                            flat += 1;
                            m.xa[x * 2 + a] += p;
                            m.xwa[(x * l.nw + w) * 2 + a] += p;
                            m.xza[(x * l.nz + z) * 2 + a] += p;
                            m.xwza[((x * l.nw + w) * l.nz + z) * 2 + a] += p;
                            m.xay[(x * 2 + a) * l.ny + y] += p;
                            m.xzay[((x * l.nz + z) * 2 + a) * l.ny + y] += p;
                        }
                    }
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct FrequencyModel {
    codebook: Codebook,
    layout: ObservedLayout,
    smoothing: f64,
    n: Option<usize>,
    joint: Vec<f64>,
    margins: Margins,
    /// Σ_y y·p(x, a, y)
    ysum_xa: Vec<f64>,
    /// Σ_y y·p(x, z, a, y)
    ysum_xza: Vec<f64>,
    audit: Vec<AuditEntry>,
}

impl FrequencyModel {
    /// Tabulates the dataset and adds `lambda` to every cell of the observed
    /// joint count table before normalizing.
    pub fn fit(data: &Dataset, lambda: f64) -> Result<Self> {
        let layout = data.layout();
        let mut counts = vec![0.0; layout.size()];
        for cell in data.cell_indices() {
            counts[cell] += 1.0;
        }
        Self::from_counts(data.codebook(), counts, lambda)
    }

    /// Builds a model from a raw count table laid out as [`ObservedLayout`].
    pub fn from_counts(codebook: &Codebook, counts: Vec<f64>, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "smoothing λ = {lambda} must be ≥ 0"
            )));
        }
        let layout = ObservedLayout::new(codebook)?;
        if counts.len() != layout.size() {
            return Err(Error::InvalidTable(format!(
                "count table has {} cells, layout needs {}",
                counts.len(),
                layout.size()
            )));
        }
        let n: f64 = counts.iter().sum();
        if n <= 0.0 {
            return Err(Error::InvalidArgument("no records".into()));
        }
        let raw = Margins::from_table(&layout, &counts);
        let total = n + lambda * counts.len() as f64;
        let joint: Vec<f64> = counts.iter().map(|c| (c + lambda) / total).collect();
        let mut model =
            Self::assemble(codebook.observed(), layout, joint, lambda, Some(n as usize));
        model.audit = audit(&model.codebook, &model.layout, &raw);
        Ok(model)
    }

    /// Population mode: exact conditionals from the observed margin of a
    /// joint (latent axes summed out).
    pub fn from_joint(joint: &JointPmf) -> Result<Self> {
        let observed = joint.marginal_roles(|r| !r.is_latent());
        let layout = ObservedLayout::new(observed.codebook())?;
        let mut table = vec![0.0; layout.size()];
        observed.for_each_cell(|index, p| table[layout.flat_of_record(index)] += p);
        let raw = Margins::from_table(&layout, &table);
        let mut model = Self::assemble(observed.codebook().clone(), layout, table, 0.0, None);
        model.audit = audit(&model.codebook, &model.layout, &raw);
        Ok(model)
    }

    fn assemble(
        codebook: Codebook,
        layout: ObservedLayout,
        joint: Vec<f64>,
        smoothing: f64,
        n: Option<usize>,
    ) -> Self {
        let margins = Margins::from_table(&layout, &joint);
        let yv = codebook.y_values();
        let ny = layout.ny;
        let ysum_xa = margins
            .xay
            .chunks(ny)
            .map(|c| c.iter().zip(yv).map(|(p, v)| p * v).sum())
            .collect();
        let ysum_xza = margins
            .xzay
            .chunks(ny)
            .map(|c| c.iter().zip(yv).map(|(p, v)| p * v).sum())
            .collect();
        FrequencyModel {
            codebook,
            layout,
            smoothing,
            n,
            joint,
            margins,
            ysum_xa,
            ysum_xza,
            audit: Vec::new(),
        }
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn layout(&self) -> &ObservedLayout {
        &self.layout
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Sample size, or `None` in population mode.
    pub fn n(&self) -> Option<usize> {
        self.n
    }

    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    pub fn positivity_audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn nx(&self) -> usize {
        self.layout.nx
    }

    pub fn nw(&self) -> usize {
        self.layout.nw
    }

    pub fn nz(&self) -> usize {
        self.layout.nz
    }

    pub fn y_inf(&self) -> f64 {
        self.codebook.y_inf()
    }

    pub fn y_sup(&self) -> f64 {
        self.codebook.y_sup()
    }

    pub fn require_w(&self) -> Result<()> {
        if self.layout.has_w {
            Ok(())
        } else {
            Err(Error::MissingRole("outcome proxy (W)"))
        }
    }

    pub fn require_z(&self) -> Result<()> {
        if self.layout.has_z {
            Ok(())
        } else {
            Err(Error::MissingRole("treatment proxy (Z)"))
        }
    }

    pub fn p_a(&self, a: usize) -> f64 {
        (0..self.layout.nx)
            .map(|x| self.margins.xa[x * 2 + a])
            .sum()
    }

    pub fn p_xa(&self, x: usize, a: usize) -> f64 {
        self.margins.xa[x * 2 + a]
    }

    pub fn p_x(&self, x: usize) -> f64 {
        self.margins.xa[x * 2] + self.margins.xa[x * 2 + 1]
    }

    /// p(x | a); `None` when p(a) = 0.
    pub fn p_x_given_a(&self, x: usize, a: usize) -> Option<f64> {
        let pa = self.p_a(a);
        (pa > 0.0).then(|| self.p_xa(x, a) / pa)
    }

    /// p(w, x, a)
    pub fn p_xwa(&self, x: usize, w: usize, a: usize) -> f64 {
        self.margins.xwa[(x * self.layout.nw + w) * 2 + a]
    }

    /// p(z, x, a)
    pub fn p_xza(&self, x: usize, z: usize, a: usize) -> f64 {
        self.margins.xza[(x * self.layout.nz + z) * 2 + a]
    }

    /// p(w, z, x, a)
    pub fn p_xwza(&self, x: usize, w: usize, z: usize, a: usize) -> f64 {
        self.margins.xwza[((x * self.layout.nw + w) * self.layout.nz + z) * 2 + a]
    }

    /// p(w | a, x); `None` when p(a, x) = 0.
    pub fn p_w_given_ax(&self, w: usize, a: usize, x: usize) -> Option<f64> {
        let pax = self.p_xa(x, a);
        (pax > 0.0).then(|| self.p_xwa(x, w, a) / pax)
    }

    /// p(z | a, x); `None` when p(a, x) = 0.
    pub fn p_z_given_ax(&self, z: usize, a: usize, x: usize) -> Option<f64> {
        let pax = self.p_xa(x, a);
        (pax > 0.0).then(|| self.p_xza(x, z, a) / pax)
    }

    /// p(w, z | a, x); `None` when p(a, x) = 0.
    pub fn p_wz_given_ax(&self, w: usize, z: usize, a: usize, x: usize) -> Option<f64> {
        let pax = self.p_xa(x, a);
        (pax > 0.0).then(|| self.p_xwza(x, w, z, a) / pax)
    }

    /// p(a | w, x); `None` when p(w, x) = 0.
    pub fn p_a_given_wx(&self, a: usize, w: usize, x: usize) -> Option<f64> {
        let pwx = self.p_xwa(x, w, 0) + self.p_xwa(x, w, 1);
        (pwx > 0.0).then(|| self.p_xwa(x, w, a) / pwx)
    }

    /// Σ_y y·p(y, a, x) = E[I(A=a)·I(X=x)·Y].
    pub fn ysum_xa(&self, x: usize, a: usize) -> f64 {
        self.ysum_xa[x * 2 + a]
    }

    /// E[I(A=a)·Y].
    pub fn ysum_a(&self, a: usize) -> f64 {
        (0..self.layout.nx).map(|x| self.ysum_xa(x, a)).sum()
    }

    /// E[Y | a, x].
    pub fn mean_y_ax(&self, a: usize, x: usize) -> Result<f64> {
        let pax = self.p_xa(x, a);
        if pax <= 0.0 {
            return Err(Error::ZeroConditioningMass(format!("p(A={a}, X={x}) = 0")));
        }
        Ok(self.ysum_xa(x, a) / pax)
    }

    /// E[Y | z, a, x]; `None` when p(z, a, x) = 0.
    pub fn mean_y_zax(&self, z: usize, a: usize, x: usize) -> Option<f64> {
        let p = self.p_xza(x, z, a);
        (p > 0.0).then(|| self.ysum_xza[(x * self.layout.nz + z) * 2 + a] / p)
    }

    /// E[Y | a].
    pub fn mean_y_a(&self, a: usize) -> Result<f64> {
        let pa = self.p_a(a);
        if pa <= 0.0 {
            return Err(Error::ZeroConditioningMass(format!("p(A={a}) = 0")));
        }
        Ok(self.ysum_a(a) / pa)
    }

    /// p(y | a, x) as a vector over outcome levels.
    pub fn p_y_given_ax(&self, a: usize, x: usize) -> Option<Vec<f64>> {
        let pax = self.p_xa(x, a);
        let ny = self.layout.ny;
        (pax > 0.0).then(|| {
            self.margins.xay[(x * 2 + a) * ny..(x * 2 + a + 1) * ny]
                .iter()
                .map(|p| p / pax)
                .collect()
        })
    }

    /// Audit entries belonging to the named conditionals.
    pub fn audit_for(&self, conditionals: &[&str]) -> Vec<AuditEntry> {
        self.audit
            .iter()
            .filter(|e| conditionals.contains(&e.conditional.as_str()))
            .cloned()
            .collect()
    }
}

fn audit(codebook: &Codebook, l: &ObservedLayout, raw: &Margins) -> Vec<AuditEntry> {
    let mut out = Vec::new();
    let mut push = |conditional: &str, cell: String| {
        out.push(AuditEntry {
            conditional: conditional.to_string(),
            cell,
        })
    };
    let has_w = codebook.role_index(Role::OutcomeProxy).is_some();
    let has_z = codebook.role_index(Role::TreatmentProxy).is_some();
    for x in 0..l.nx {
        for a in 0..2 {
            if raw.xa[x * 2 + a] == 0.0 {
                push("x|a", format!("x={x},a={a}"));
            }
            for y in 0..l.ny {
                if raw.xay[(x * 2 + a) * l.ny + y] == 0.0 {
                    push("y|a,x", format!("y={y},a={a},x={x}"));
                }
            }
            if has_w {
                for w in 0..l.nw {
                    if raw.xwa[(x * l.nw + w) * 2 + a] == 0.0 {
                        push("w|a,x", format!("w={w},a={a},x={x}"));
                    }
                }
            }
            if has_z {
                for z in 0..l.nz {
                    if raw.xza[(x * l.nz + z) * 2 + a] == 0.0 {
                        push("z|a,x", format!("z={z},a={a},x={x}"));
                    }
                    for y in 0..l.ny {
                        if raw.xzay[((x * l.nz + z) * 2 + a) * l.ny + y] == 0.0 {
                            push("y|z,a,x", format!("y={y},z={z},a={a},x={x}"));
                        }
                    }
                }
            }
            if has_w && has_z {
                for w in 0..l.nw {
                    for z in 0..l.nz {
                        if raw.xwza[((x * l.nw + w) * l.nz + z) * 2 + a] == 0.0 {
                            push("w,z|a,x", format!("w={w},z={z},a={a},x={x}"));
                        }
                    }
                }
            }
        }
    }
    for a in 0..2 {
        if (0..l.nx).all(|x| raw.xa[x * 2 + a] == 0.0) {
            push("a", format!("a={a}"));
        }
    }
    out
}
