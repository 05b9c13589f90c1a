//! Existence checks for non-negative bridge functions on exact joints.
//!
//! A bridge exists in a conditioning cell when a linear system with one row
//! per latent level and one column per proxy level has a non-negative
//! solution. Each system is solved by non-negative least squares and declared
//! feasible when the worst row violation is within [`BRIDGE_TOLERANCE`].
//! These checks need the latent axis, so they only run on simulated joints.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::codebook::Role;
use crate::error::{Error, Result};
use crate::pmf::JointPmf;

pub const BRIDGE_TOLERANCE: f64 = 1e-8;

/// Solver entries in [−CLIP, 0) are treated as zero.
const CLIP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BridgeKind {
    #[serde(rename = "outcome-h")]
    OutcomeH,
    #[serde(rename = "treatment-q")]
    TreatmentQ,
}

/// Which model the outcome bridge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeVariant {
    /// Σ_w h(w) p(w | a, x, u) = E[Y | a, x, u]
    Confounder,
    /// Σ_w h(w) p(w | x, m) = E[Y | A=1, x, m]
    Mediation,
    /// Σ_w h(w) p(w | a, x, m) = E[Y | a, x, m]
    Frontdoor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeCell {
    /// Treatment level of the cell; `None` for the mediation variant.
    pub a: Option<u8>,
    pub x: usize,
    pub feasible: bool,
    /// Max absolute row violation at the least-squares non-negative solution.
    pub residual: f64,
    /// h(w) or q(z), present when feasible.
    pub solution: Option<Vec<f64>>,
    /// Σ_z q(z) p(z | a, x) for feasible treatment bridges (should be 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeCheckResult {
    pub kind: BridgeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<OutcomeVariant>,
    pub tolerance: f64,
    pub cells: Vec<BridgeCell>,
    pub overall_feasible: bool,
    pub diagnostics: Vec<String>,
}

/// Lawson-Hanson active-set solver for min ‖Ax − b‖₂ subject to x ≥ 0.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let tol = 1e-12 * a.amax().max(1.0) * b.amax().max(1.0) * (a.nrows().max(n) as f64);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let gradient = |x: &DVector<f64>| a.transpose() * (b - a * x);
    let mut w = gradient(&x);

    for _ in 0..3 * n.max(1) {
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;

        loop {
            let s = passive_solve(a, b, &passive);
            if (0..n).all(|i| !passive[i] || s[i] > 0.0) {
                x = s;
                break;
            }
            let mut step = f64::INFINITY;
            for i in 0..n {
                if passive[i] && s[i] <= 0.0 {
                    step = step.min(x[i] / (x[i] - s[i]));
                }
            }
            x += (&s - &x) * step;
            for i in 0..n {
                if passive[i] && x[i] <= tol {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        w = gradient(&x);
    }
    x
}

/// Unconstrained least squares on the passive columns, zero elsewhere.
fn passive_solve(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..a.ncols()).filter(|&j| passive[j]).collect();
    let sub = a.select_columns(&cols);
    let sol = sub
        .svd(true, true)
        .solve(b, 1e-14)
        .expect("both singular-vector sets were computed");
    let mut s = DVector::zeros(a.ncols());
    for (k, &j) in cols.iter().enumerate() {
        s[j] = sol[k];
    }
    s
}

/// Solves the non-negative system and thresholds its residual.
pub fn solve_bridge(kernel: &DMatrix<f64>, target: &DVector<f64>) -> (bool, f64, DVector<f64>) {
    let mut h = nnls(kernel, target);
    for v in h.iter_mut() {
        if *v < 0.0 && *v >= -CLIP {
            *v = 0.0;
        }
    }
    let residual = (kernel * &h - target).amax();
    let feasible = residual <= BRIDGE_TOLERANCE && h.iter().all(|&v| v >= 0.0);
    (feasible, residual, h)
}

/// Joint tabulated as (cell, latent level, proxy level) with Y sums, where a
/// cell is (a, x) flattened as x·2 + a.
struct Tab {
    nx: usize,
    nl: usize,
    np: usize,
    /// p(a, x, l, k)
    mass: Vec<f64>,
    /// Σ_y y·p(a, x, l, y)
    ysum: Vec<f64>,
}

impl Tab {
    fn new(joint: &JointPmf, latent: Role, proxy: Role) -> Result<Self> {
        let cb = joint.codebook();
        let find =
            |role: Role, what: &'static str| cb.role_index(role).ok_or(Error::MissingRole(what));
        let l_axis = find(latent, "latent axis (U or M)")?;
        let p_axis = find(proxy, "proxy axis")?;
        let a_axis = find(Role::Treatment, "treatment (A)")?;
        let y_axis = find(Role::Outcome, "outcome (Y)")?;
        let x_axes = cb.covariate_indices();
        let card = |i: usize| cb.variables()[i].cardinality;
        let (nx, nl, np) = (cb.x_cardinality(), card(l_axis), card(p_axis));
        let mut t = Tab {
            nx,
            nl,
            np,
            mass: vec![0.0; nx * 2 * nl * np],
            ysum: vec![0.0; nx * 2 * nl],
        };
        let yv = cb.y_values();
        joint.for_each_cell(|idx, p| {
            let x = x_axes.iter().fold(0, |acc, &i| acc * card(i) + idx[i]);
            let cl = (x * 2 + idx[a_axis]) * nl + idx[l_axis];
            t.mass[cl * np + idx[p_axis]] += p;
            t.ysum[cl] += p * yv[idx[y_axis]];
        });
        Ok(t)
    }

    /// p(a, x, l)
    fn p_axl(&self, cell: usize, l: usize) -> f64 {
        let base = (cell * self.nl + l) * self.np;
        self.mass[base..base + self.np].iter().sum()
    }

    fn p_ax(&self, cell: usize) -> f64 {
        (0..self.nl).map(|l| self.p_axl(cell, l)).sum()
    }

    /// p(k | a, x, l) row.
    fn kernel_row(&self, cell: usize, l: usize) -> Vec<f64> {
        let base = (cell * self.nl + l) * self.np;
        let total = self.p_axl(cell, l);
        self.mass[base..base + self.np]
            .iter()
            .map(|m| m / total)
            .collect()
    }
}

fn solved_cell(
    a: Option<u8>,
    x: usize,
    kernel: &DMatrix<f64>,
    target: &DVector<f64>,
) -> BridgeCell {
    let (feasible, residual, h) = solve_bridge(kernel, target);
    BridgeCell {
        a,
        x,
        feasible,
        residual,
        solution: feasible.then(|| h.iter().copied().collect()),
        normalization: None,
    }
}

fn finish(
    kind: BridgeKind,
    variant: Option<OutcomeVariant>,
    cells: Vec<BridgeCell>,
    diagnostics: Vec<String>,
) -> BridgeCheckResult {
    BridgeCheckResult {
        kind,
        variant,
        tolerance: BRIDGE_TOLERANCE,
        overall_feasible: cells.iter().all(|c| c.feasible),
        cells,
        diagnostics,
    }
}

/// Checks for a non-negative outcome bridge h with E[h(W) | cell, latent] =
/// E[Y | cell, latent] in every conditioning cell.
pub fn check_outcome_bridge(
    joint: &JointPmf,
    variant: OutcomeVariant,
) -> Result<BridgeCheckResult> {
    let latent = match variant {
        OutcomeVariant::Confounder => Role::LatentConfounder,
        OutcomeVariant::Mediation | OutcomeVariant::Frontdoor => Role::LatentMediator,
    };
    let t = Tab::new(joint, latent, Role::OutcomeProxy)?;
    let mut cells = Vec::new();
    let mut diagnostics = Vec::new();
    for x in 0..t.nx {
        if variant == OutcomeVariant::Mediation {
            let treated = x * 2 + 1;
            let mut kernel = Vec::new();
            let mut target = Vec::new();
            for l in 0..t.nl {
                let p1 = t.p_axl(treated, l);
                let p0 = t.p_axl(x * 2, l);
                if p1 <= 0.0 {
                    if p0 > 0.0 {
                        diagnostics.push(format!("x={x}, m={l}: p(A=1, x, m) = 0, row skipped"));
                    }
                    continue;
                }
                let pooled: Vec<f64> = (0..t.np)
                    .map(|k| {
                        let i = |c: usize| t.mass[(c * t.nl + l) * t.np + k];
                        (i(x * 2) + i(treated)) / (p0 + p1)
                    })
                    .collect();
                kernel.extend(pooled);
                target.push(t.ysum[treated * t.nl + l] / p1);
            }
            if target.is_empty() {
                diagnostics.push(format!("x={x}: p(A=1, x) = 0, cell skipped"));
                continue;
            }
            let k = DMatrix::from_row_slice(target.len(), t.np, &kernel);
            cells.push(solved_cell(None, x, &k, &DVector::from_vec(target)));
            continue;
        }
        for a in 0..2 {
            let cell = x * 2 + a;
            if t.p_ax(cell) <= 0.0 {
                diagnostics.push(format!("a={a}, x={x}: p(a, x) = 0, cell skipped"));
                continue;
            }
            let mut kernel = Vec::new();
            let mut target = Vec::new();
            for l in 0..t.nl {
                let p = t.p_axl(cell, l);
                if p <= 0.0 {
                    continue;
                }
                kernel.extend(t.kernel_row(cell, l));
                target.push(t.ysum[cell * t.nl + l] / p);
            }
            let k = DMatrix::from_row_slice(target.len(), t.np, &kernel);
            cells.push(solved_cell(
                Some(a as u8),
                x,
                &k,
                &DVector::from_vec(target),
            ));
        }
    }
    Ok(finish(
        BridgeKind::OutcomeH,
        Some(variant),
        cells,
        diagnostics,
    ))
}

/// Checks for a non-negative treatment bridge q with
/// E[q(Z) | a, x, u] = p(u | 1−a, x) / p(u | a, x) in every (a, x) cell.
pub fn check_treatment_bridge(joint: &JointPmf) -> Result<BridgeCheckResult> {
    let t = Tab::new(joint, Role::LatentConfounder, Role::TreatmentProxy)?;
    let mut cells = Vec::new();
    let mut diagnostics = Vec::new();
    for x in 0..t.nx {
        for a in 0..2 {
            let (cell, other) = (x * 2 + a, x * 2 + 1 - a);
            let (p_cell, p_other) = (t.p_ax(cell), t.p_ax(other));
            if p_cell <= 0.0 || p_other <= 0.0 {
                diagnostics.push(format!(
                    "a={a}, x={x}: p(a, x) or p(1-a, x) = 0, cell skipped"
                ));
                continue;
            }
            let mut kernel = Vec::new();
            let mut target = Vec::new();
            for l in 0..t.nl {
                let p = t.p_axl(cell, l);
                if p <= 0.0 {
                    return Err(Error::PositivityViolation(format!(
                        "p(u={l} | a={a}, x={x}) = 0"
                    )));
                }
                kernel.extend(t.kernel_row(cell, l));
                target.push((t.p_axl(other, l) / p_other) / (p / p_cell));
            }
            let k = DMatrix::from_row_slice(t.nl, t.np, &kernel);
            let mut c = solved_cell(Some(a as u8), x, &k, &DVector::from_vec(target));
            if let Some(q) = &c.solution {
                let norm: f64 = (0..t.np)
                    .map(|z| {
                        let pz: f64 = (0..t.nl)
                            .map(|l| t.mass[(cell * t.nl + l) * t.np + z])
                            .sum();
                        q[z] * pz / p_cell
                    })
                    .sum();
                if (norm - 1.0).abs() > BRIDGE_TOLERANCE {
                    diagnostics.push(format!("a={a}, x={x}: Σ_z q(z) p(z|a,x) = {norm}"));
                    c.feasible = false;
                }
                c.normalization = Some(norm);
            }
            cells.push(c);
        }
    }
    Ok(finish(BridgeKind::TreatmentQ, None, cells, diagnostics))
}
