//! Random softmax data-generating processes over latent-variable models.
//!
//! Three topologies are supported:
//!
//! * `confounder`: p(u,x)·p(w|u,x)·p(z|u,x)·p(a|u,x,z)·p(y|u,x,w,a)
//! * `mediation`:  p(x)·p(a|x)·p(m|a,x)·p(w|m,x)·p(y|m,a,x,w)
//! * `frontdoor`:  p(u,x)·p(a|u,x)·p(m|a,x)·p(w|m,x)·p(y|u,x,m,w)
//!
//! Root weights are drawn from Unif[0.1, 1] and normalized; every softmax
//! coefficient is drawn from Unif[-0.5, 0.5], one intercept and one slope per
//! parent for every target level. Parents enter the linear predictor through
//! their 0-based category index.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codebook::{Codebook, Role, Variable};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::pmf::{advance, strides_of, JointPmf};
use crate::rng::{self, domain};

/// Smallest magnitude accepted for a latent-to-proxy slope.
pub const MIN_LATENT_LINK: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Confounder,
    Mediation,
    Frontdoor,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Confounder => "confounder",
            Family::Mediation => "mediation",
            Family::Frontdoor => "frontdoor",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "confounder" => Ok(Family::Confounder),
            "mediation" => Ok(Family::Mediation),
            "frontdoor" | "front-door" => Ok(Family::Frontdoor),
            other => Err(Error::InvalidArgument(format!("unknown family `{other}`"))),
        }
    }
}

/// Category counts. Axes a family does not use must be 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Cardinalities {
    #[serde(default)]
    pub u: usize,
    #[serde(default)]
    pub m: usize,
    pub x: usize,
    pub w: usize,
    #[serde(default)]
    pub z: usize,
    pub y: usize,
}

impl Cardinalities {
    pub fn confounder(u: usize, x: usize, w: usize, z: usize, y: usize) -> Self {
        Cardinalities {
            u,
            m: 0,
            x,
            w,
            z,
            y,
        }
    }

    pub fn mediation(m: usize, x: usize, w: usize, y: usize) -> Self {
        Cardinalities {
            u: 0,
            m,
            x,
            w,
            z: 0,
            y,
        }
    }

    pub fn frontdoor(u: usize, m: usize, x: usize, w: usize, y: usize) -> Self {
        Cardinalities {
            u,
            m,
            x,
            w,
            z: 0,
            y,
        }
    }

    pub fn validate(&self, family: Family) -> Result<()> {
        let bad = |msg: &str| {
            Err(Error::InvalidCardinalities(format!(
                "{family}: {msg} ({self:?})"
            )))
        };
        if self.x == 0 || self.w == 0 {
            return bad("x and w must be ≥ 1");
        }
        if self.y < 2 {
            return bad("y must be ≥ 2");
        }
        let (needs_u, needs_m, needs_z) = match family {
            Family::Confounder => (true, false, true),
            Family::Mediation => (false, true, false),
            Family::Frontdoor => (true, true, false),
        };
        for (name, card, needed) in [
            ("u", self.u, needs_u),
            ("m", self.m, needs_m),
            ("z", self.z, needs_z),
        ] {
            if needed && card == 0 {
                return bad(&format!("{name} must be ≥ 1"));
            }
            if !needed && card != 0 {
                return bad(&format!("{name} is not part of this family and must be 0"));
            }
        }
        Ok(())
    }
}

/// p(target | parents) ∝ exp(intercept[t] + Σ_k slopes[k][t]·parent_k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxConditional {
    pub target: String,
    pub parents: Vec<String>,
    pub intercept: Vec<f64>,
    /// One row per parent, one entry per target level.
    pub slopes: Vec<Vec<f64>>,
}

/// Unnormalized weights of the root marginal (p(u,x) or p(x)), row-major over
/// `variables`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootTable {
    pub variables: Vec<String>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub family: Family,
    pub cardinalities: Cardinalities,
    pub root: RootTable,
    pub conditionals: Vec<SoftmaxConditional>,
    pub seed: u64,
}

struct Topology {
    order: &'static [&'static str],
    root: &'static [&'static str],
    conditionals: &'static [(&'static str, &'static [&'static str])],
}

fn topology(family: Family) -> Topology {
    match family {
        Family::Confounder => Topology {
            order: &["U", "X", "W", "Z", "A", "Y"],
            root: &["U", "X"],
            conditionals: &[
                ("W", &["U", "X"]),
                ("Z", &["U", "X"]),
                ("A", &["U", "X", "Z"]),
                ("Y", &["U", "X", "W", "A"]),
            ],
        },
        Family::Mediation => Topology {
            order: &["X", "A", "M", "W", "Y"],
            root: &["X"],
            conditionals: &[
                ("A", &["X"]),
                ("M", &["A", "X"]),
                ("W", &["M", "X"]),
                ("Y", &["M", "A", "X", "W"]),
            ],
        },
        Family::Frontdoor => Topology {
            order: &["U", "X", "A", "M", "W", "Y"],
            root: &["U", "X"],
            conditionals: &[
                ("A", &["U", "X"]),
                ("M", &["A", "X"]),
                ("W", &["M", "X"]),
                ("Y", &["U", "X", "M", "W"]),
            ],
        },
    }
}

fn role_of(name: &str) -> Role {
    match name {
        "U" => Role::LatentConfounder,
        "M" => Role::LatentMediator,
        "X" => Role::Covariate,
        "W" => Role::OutcomeProxy,
        "Z" => Role::TreatmentProxy,
        "A" => Role::Treatment,
        _ => Role::Outcome,
    }
}

impl Cardinalities {
    fn of(&self, name: &str) -> usize {
        match name {
            "U" => self.u,
            "M" => self.m,
            "X" => self.x,
            "W" => self.w,
            "Z" => self.z,
            "A" => 2,
            _ => self.y,
        }
    }
}

/// Codebook of a family's full joint, with outcome values 1, …, |Y|.
pub fn family_codebook(family: Family, cards: &Cardinalities) -> Result<Codebook> {
    cards.validate(family)?;
    let vars = topology(family)
        .order
        .iter()
        .map(|&n| Variable::new(n, cards.of(n), role_of(n)))
        .collect();
    Codebook::new(vars, (1..=cards.y).map(|v| v as f64).collect())
}

/// Draws a spec: root weights from Unif[0.1, 1], coefficients from
/// Unif[-0.5, 0.5], latent-to-proxy slopes redrawn until |β| ≥ 0.01.
pub fn sample_dgp_spec(cards: Cardinalities, family: Family, seed: u64) -> Result<DgpSpec> {
    cards.validate(family)?;
    let topo = topology(family);
    let mut rng = rng::stream(seed, domain::DGP_SPEC, 0);
    let root_size: usize = topo.root.iter().map(|n| cards.of(n)).product();
    let weights = (0..root_size)
        .map(|_| rng.random_range(0.1..=1.0))
        .collect();
    let coef = |rng: &mut rand_chacha::ChaCha8Rng| rng.random_range(-0.5..=0.5);
    let conditionals = topo
        .conditionals
        .iter()
        .map(|&(target, parents)| {
            let levels = cards.of(target);
            let intercept = (0..levels).map(|_| coef(&mut rng)).collect();
            let latent_link = matches!(target, "W" | "Z");
            let slopes = parents
                .iter()
                .map(|&p| {
                    (0..levels)
                        .map(|_| loop {
                            let b: f64 = coef(&mut rng);
                            if !(latent_link && role_of(p).is_latent())
                                || b.abs() >= MIN_LATENT_LINK
                            {
                                break b;
                            }
                        })
                        .collect()
                })
                .collect();
            SoftmaxConditional {
                target: target.to_string(),
                parents: parents.iter().map(|p| p.to_string()).collect(),
                intercept,
                slopes,
            }
        })
        .collect();
    Ok(DgpSpec {
        family,
        cardinalities: cards,
        root: RootTable {
            variables: topo.root.iter().map(|s| s.to_string()).collect(),
            weights,
        },
        conditionals,
        seed,
    })
}

impl DgpSpec {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: DgpSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn codebook(&self) -> Result<Codebook> {
        family_codebook(self.family, &self.cardinalities)
    }

    pub fn conditional(&self, target: &str) -> Option<&SoftmaxConditional> {
        self.conditionals.iter().find(|c| c.target == target)
    }

    pub fn conditional_mut(&mut self, target: &str) -> Option<&mut SoftmaxConditional> {
        self.conditionals.iter_mut().find(|c| c.target == target)
    }

    /// Zeroes the slopes of `parent` in every conditional (or only in
    /// `target`'s conditional when given).
    pub fn zero_slopes(&mut self, parent: &str, target: Option<&str>) {
        for c in &mut self.conditionals {
            if target.is_some_and(|t| t != c.target) {
                continue;
            }
            if let Some(k) = c.parents.iter().position(|p| p == parent) {
                c.slopes[k].iter_mut().for_each(|b| *b = 0.0);
            }
        }
    }

    /// Checks the spec's shape against its family topology.
    pub fn validate(&self) -> Result<()> {
        let cards = &self.cardinalities;
        cards.validate(self.family)?;
        let topo = topology(self.family);
        let bad = |msg: String| Err(Error::InvalidArgument(format!("dgp spec: {msg}")));
        if self.root.variables != topo.root {
            return bad(format!("root must be over {:?}", topo.root));
        }
        let root_size: usize = topo.root.iter().map(|n| cards.of(n)).product();
        if self.root.weights.len() != root_size
            || self
                .root
                .weights
                .iter()
                .any(|w| !(w.is_finite() && *w >= 0.0))
            || self.root.weights.iter().sum::<f64>() <= 0.0
        {
            return bad(format!(
                "root needs {root_size} non-negative weights with positive sum"
            ));
        }
        if self.conditionals.len() != topo.conditionals.len() {
            return bad(format!("expected {} conditionals", topo.conditionals.len()));
        }
        for &(target, parents) in topo.conditionals {
            let Some(c) = self.conditional(target) else {
                return bad(format!("missing conditional for {target}"));
            };
            if c.parents != parents {
                return bad(format!("{target} must have parents {parents:?}"));
            }
            let levels = cards.of(target);
            if c.intercept.len() != levels
                || c.slopes.len() != parents.len()
                || c.slopes.iter().any(|s| s.len() != levels)
            {
                return bad(format!(
                    "{target} coefficients must have one entry per level"
                ));
            }
            if c.intercept
                .iter()
                .chain(c.slopes.iter().flatten())
                .any(|b| !b.is_finite())
            {
                return bad(format!("{target} has non-finite coefficients"));
            }
        }
        Ok(())
    }
}

/// Probability table of one softmax conditional, laid out as
/// (parent levels…, target level) row-major.
struct CondTable {
    parent_axes: Vec<usize>,
    target_axis: usize,
    probs: Vec<f64>,
}

fn cond_table(c: &SoftmaxConditional, codebook: &Codebook) -> Result<CondTable> {
    let parent_axes = c
        .parents
        .iter()
        .map(|p| codebook.index_of(p))
        .collect::<Result<Vec<_>>>()?;
    let target_axis = codebook.index_of(&c.target)?;
    let card = |a: usize| codebook.variables()[a].cardinality;
    let parent_shape: Vec<usize> = parent_axes.iter().map(|&a| card(a)).collect();
    let levels = card(target_axis);
    let mut probs = Vec::with_capacity(parent_shape.iter().product::<usize>() * levels);
    let mut idx = vec![0; parent_shape.len()];
    let mut logits = vec![0.0; levels];
    loop {
        for (t, l) in logits.iter_mut().enumerate() {
            *l = c.intercept[t]
                + idx
                    .iter()
                    .zip(&c.slopes)
                    .map(|(&v, s)| s[t] * v as f64)
                    .sum::<f64>();
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        probs.extend(logits.iter().map(|l| (l - max).exp() / denom));
        if !advance(&mut idx, &parent_shape) {
            break;
        }
    }
    Ok(CondTable {
        parent_axes,
        target_axis,
        probs,
    })
}

/// Exact joint: the product of the root marginal and every softmax factor.
pub fn build_joint(spec: &DgpSpec) -> Result<JointPmf> {
    spec.validate()?;
    let codebook = spec.codebook()?;
    let shape: Vec<usize> = codebook.variables().iter().map(|v| v.cardinality).collect();
    let root_axes = spec
        .root
        .variables
        .iter()
        .map(|n| codebook.index_of(n))
        .collect::<Result<Vec<_>>>()?;
    let root_shape: Vec<usize> = root_axes.iter().map(|&a| shape[a]).collect();
    let root_strides = strides_of(&root_shape);
    let root_total: f64 = spec.root.weights.iter().sum();
    let tables = spec
        .conditionals
        .iter()
        .map(|c| cond_table(c, &codebook))
        .collect::<Result<Vec<_>>>()?;
    let lookups: Vec<(Vec<usize>, usize)> = tables
        .iter()
        .map(|t| {
            let mut s: Vec<usize> = t.parent_axes.iter().map(|&a| shape[a]).collect();
            s.push(shape[t.target_axis]);
            (strides_of(&s), shape[t.target_axis])
        })
        .collect();
    JointPmf::from_fn(codebook, |idx| {
        let root_flat: usize = root_axes
            .iter()
            .zip(&root_strides)
            .map(|(&a, s)| idx[a] * s)
            .sum();
        let mut p = spec.root.weights[root_flat] / root_total;
        for (t, (strides, _)) in tables.iter().zip(&lookups) {
            let flat: usize = t
                .parent_axes
                .iter()
                .chain(std::iter::once(&t.target_axis))
                .zip(strides)
                .map(|(&a, s)| idx[a] * s)
                .sum();
            p *= t.probs[flat];
        }
        p
    })
}

/// n i.i.d. records from the observed margin of `joint`.
pub fn draw_dataset(joint: &JointPmf, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be ≥ 1".into()));
    }
    let observed = joint.marginal_roles(|r| !r.is_latent());
    let shape = observed.shape();
    let strides = strides_of(&shape);
    let mut cumulative = Vec::with_capacity(observed.table().len());
    let mut acc = 0.0;
    for &p in observed.table() {
        acc += p;
        cumulative.push(acc);
    }
    let last_positive = observed
        .table()
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("normalized table has positive mass");
    let mut rng = rng::stream(seed, domain::DATASET, 0);
    let records = (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            let flat = cumulative.partition_point(|&c| c <= u).min(last_positive);
            shape
                .iter()
                .zip(&strides)
                .map(|(card, s)| (flat / s) % card)
                .collect()
        })
        .collect();
    Dataset::new(observed.codebook(), records)
}
