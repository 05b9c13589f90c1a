//! Replicated simulation studies: sample a DGP, compute its oracle truth,
//! draw data, estimate bounds (and optionally bootstrap CIs), aggregate.
//!
//! Replication `r` of grid point `g` always uses the same DGP for every
//! sample size, so the n-trajectories of a study compare like with like.
//! All seeds derive from the study seed and task indices; aggregation runs
//! in task order, so summaries are identical for every worker count.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_ci, BootstrapConfig};
use crate::bounds::{estimate, Estimand, Method, DEFAULT_ALPHA};
use crate::data::Dataset;
use crate::dgp::{build_joint, draw_dataset, sample_dgp_spec, Cardinalities, DgpSpec, Family};
use crate::error::{Error, Result};
use crate::freq::FrequencyModel;
use crate::oracle::{oracle_estimands, OracleTruth};
use crate::pmf::JointPmf;
use crate::rng::{child_seed, domain, RNG_ALGORITHM};

fn default_alpha() -> Option<f64> {
    Some(DEFAULT_ALPHA)
}

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub family: Family,
    /// Cardinality settings; each is crossed with every sample size.
    pub grid: Vec<Cardinalities>,
    pub n: Vec<usize>,
    pub replications: usize,
    /// Bootstrap replicates per CI; 0 skips the bootstrap.
    #[serde(default, rename = "B")]
    pub bootstrap: usize,
    #[serde(default = "default_alpha")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_level")]
    pub level: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub estimand: Estimand,
    #[serde(default)]
    pub output: Option<String>,
}

impl StudyConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: StudyConfig =
            serde_json::from_str(&text).map_err(|e| Error::Schema(format!("study config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Schema(m));
        if self.replications == 0 {
            return bad("replications must be ≥ 1".into());
        }
        if self.grid.is_empty() || self.n.is_empty() || self.methods.is_empty() {
            return bad("grid, n and methods must be nonempty".into());
        }
        if self.n.contains(&0) {
            return bad("sample sizes must be ≥ 1".into());
        }
        if self.bootstrap == 1 {
            return bad("B must be 0 (no bootstrap) or ≥ 2".into());
        }
        if !(0.0..=1.0).contains(&self.level) {
            return bad(format!("level {} outside [0, 1]", self.level));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("λ = {} must be ≥ 0", self.lambda));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return bad(format!("α = {a} must be positive"));
            }
        }
        for cards in &self.grid {
            cards.validate(self.family)?;
        }
        Ok(())
    }
}

/// One (grid point, n, replication, method) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub grid: usize,
    pub n: usize,
    pub replication: usize,
    pub method: Method,
    pub dgp_seed: u64,
    pub truth: f64,
    pub hard_lower: f64,
    pub hard_upper: f64,
    pub smoothed_lower: f64,
    pub smoothed_upper: f64,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub error: Option<String>,
}

impl ReplicationRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn hard_width(&self) -> f64 {
        self.hard_upper - self.hard_lower
    }

    pub fn covered(&self) -> bool {
        self.hard_lower <= self.truth && self.truth <= self.hard_upper
    }

    pub fn ci_width(&self) -> Option<f64> {
        Some(self.ci_upper? - self.ci_lower?)
    }

    pub fn ci_covers_truth(&self) -> Option<bool> {
        Some(self.ci_lower? <= self.truth && self.truth <= self.ci_upper?)
    }

    pub fn ci_contains_point(&self) -> Option<bool> {
        Some(self.ci_lower? <= self.smoothed_lower && self.smoothed_upper <= self.ci_upper?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub family: Family,
    pub u: usize,
    pub m: usize,
    pub x: usize,
    pub w: usize,
    pub z: usize,
    pub y: usize,
    pub n: usize,
    pub method: Method,
    pub estimand: Estimand,
    pub replications: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub avg_truth: f64,
    pub avg_hard_width: f64,
    pub avg_smoothed_width: f64,
    /// Fraction of replications whose hard interval contains the truth.
    pub coverage: f64,
    pub avg_ci_width: Option<f64>,
    pub ci_coverage: Option<f64>,
    pub ci_contains_point: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub rng: String,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub records: Vec<ReplicationRecord>,
}

/// Summarizes `records` (those of one grid point, n and method).
pub fn summarize<'a>(
    config: &StudyConfig,
    grid: usize,
    n: usize,
    method: Method,
    records: impl IntoIterator<Item = &'a ReplicationRecord>,
) -> SummaryRow {
    let all: Vec<&ReplicationRecord> = records.into_iter().collect();
    let ok: Vec<&ReplicationRecord> = all.iter().copied().filter(|r| !r.failed()).collect();
    let k = ok.len() as f64;
    let mean = |f: &dyn Fn(&ReplicationRecord) -> f64| {
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().map(|r| f(r)).sum::<f64>() / k
        }
    };
    let mean_opt = |f: &dyn Fn(&ReplicationRecord) -> Option<f64>| -> Option<f64> {
        let v: Option<Vec<f64>> = ok.iter().map(|r| f(r)).collect();
        v.filter(|v| !v.is_empty())
            .map(|v| v.iter().sum::<f64>() / v.len() as f64)
    };
    let frac = |b: bool| if b { 1.0 } else { 0.0 };
    let cards = config.grid[grid];
    SummaryRow {
        family: config.family,
        u: cards.u,
        m: cards.m,
        x: cards.x,
        w: cards.w,
        z: cards.z,
        y: cards.y,
        n,
        method,
        estimand: config.estimand,
        replications: all.len(),
        succeeded: ok.len(),
        failed: all.len() - ok.len(),
        avg_truth: mean(&|r| r.truth),
        avg_hard_width: mean(&|r| r.hard_width()),
        avg_smoothed_width: mean(&|r| r.smoothed_upper - r.smoothed_lower),
        coverage: mean(&|r| frac(r.covered())),
        avg_ci_width: mean_opt(&|r| r.ci_width()),
        ci_coverage: mean_opt(&|r| r.ci_covers_truth().map(frac)),
        ci_contains_point: mean_opt(&|r| r.ci_contains_point().map(frac)),
    }
}

/// Runs every (grid point, n, replication) task on up to `workers` threads.
pub fn run_study(config: &StudyConfig, workers: usize) -> Result<StudyReport> {
    config.validate()?;
    let tasks: Vec<(usize, usize, usize)> = (0..config.grid.len())
        .flat_map(|g| {
            (0..config.n.len())
                .flat_map(move |ni| (0..config.replications).map(move |r| (g, ni, r)))
        })
        .collect();
    let run = |&(g, ni, r): &(usize, usize, usize)| replication(config, g, ni, r);
    let per_task: Vec<Vec<ReplicationRecord>> = if workers <= 1 {
        tasks.iter().map(run).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(|| tasks.par_iter().map(run).collect())
    };
    let records: Vec<ReplicationRecord> = per_task.into_iter().flatten().collect();

    let mut summary = Vec::new();
    for g in 0..config.grid.len() {
        for &n in &config.n {
            for &method in &config.methods {
                let rows = records
                    .iter()
                    .filter(|r| r.grid == g && r.n == n && r.method == method);
                summary.push(summarize(config, g, n, method, rows));
            }
        }
    }
    let failures = records
        .iter()
        .filter_map(|r| {
            r.error.as_ref().map(|e| {
                format!(
                    "grid {} n {} replication {} method {}: {e}",
                    r.grid, r.n, r.replication, r.method
                )
            })
        })
        .collect();
    Ok(StudyReport {
        config: config.clone(),
        rng: RNG_ALGORITHM.to_string(),
        summary,
        failures,
        records,
    })
}

/// Seed of the DGP used by replication `r` at grid point `g`.
pub fn dgp_seed(config: &StudyConfig, g: usize, r: usize) -> u64 {
    child_seed(config.seed, domain::DGP_SPEC, ((g as u64) << 32) | r as u64)
}

fn task_seed(config: &StudyConfig, domain: u64, g: usize, ni: usize, r: usize) -> u64 {
    child_seed(
        config.seed,
        domain,
        ((g as u64) << 48) | ((ni as u64) << 32) | r as u64,
    )
}

/// The DGP, its exact truth and the dataset of one study task.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub spec: DgpSpec,
    pub joint: JointPmf,
    pub truth: OracleTruth,
    pub data: Dataset,
}

/// Reproduces the simulation step of task (grid point `g`, sample size
/// index `ni`, replication `r`) exactly as [`run_study`] performs it.
pub fn simulate_replication(
    config: &StudyConfig,
    g: usize,
    ni: usize,
    r: usize,
) -> Result<Simulated> {
    let spec = sample_dgp_spec(config.grid[g], config.family, dgp_seed(config, g, r))?;
    let joint = build_joint(&spec)?;
    let truth = oracle_estimands(&joint)?;
    let data = draw_dataset(
        &joint,
        config.n[ni],
        task_seed(config, domain::DATASET, g, ni, r),
    )?;
    Ok(Simulated {
        spec,
        joint,
        truth,
        data,
    })
}

fn replication(config: &StudyConfig, g: usize, ni: usize, r: usize) -> Vec<ReplicationRecord> {
    let n = config.n[ni];
    let seed = dgp_seed(config, g, r);
    let blank = |method: Method| ReplicationRecord {
        grid: g,
        n,
        replication: r,
        method,
        dgp_seed: seed,
        truth: f64::NAN,
        hard_lower: f64::NAN,
        hard_upper: f64::NAN,
        smoothed_lower: f64::NAN,
        smoothed_upper: f64::NAN,
        ci_lower: None,
        ci_upper: None,
        error: None,
    };
    let prepared = simulate_replication(config, g, ni, r).and_then(|sim| {
        let truth = sim.truth.value(config.estimand).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{} has no oracle value for this family",
                config.estimand
            ))
        })?;
        let model = FrequencyModel::fit(&sim.data, config.lambda)?;
        Ok((truth, sim.data, model))
    });
    let (truth, data, model) = match prepared {
        Ok(p) => p,
        Err(e) => {
            return config
                .methods
                .iter()
                .map(|&m| ReplicationRecord {
                    error: Some(e.to_string()),
                    ..blank(m)
                })
                .collect()
        }
    };

    config
        .methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let mut rec = ReplicationRecord {
                truth,
                ..blank(method)
            };
            let result = (|| {
                let report = estimate(&model, method, config.estimand, config.alpha)?;
                rec.hard_lower = report.hard.lower;
                rec.hard_upper = report.hard.upper;
                rec.smoothed_lower = report.smoothed.lower;
                rec.smoothed_upper = report.smoothed.upper;
                if config.bootstrap >= 2 {
                    let boot = BootstrapConfig {
                        method,
                        estimand: config.estimand,
                        alpha: config.alpha,
                        lambda: config.lambda,
                        replicates: config.bootstrap,
                        level: config.level,
                        seed: task_seed(config, domain::BOOTSTRAP, g, ni, r) ^ mi as u64,
                    };
                    let ci = bootstrap_ci(&data, &boot, 1)?;
                    rec.ci_lower = Some(ci.ci.lower);
                    rec.ci_upper = Some(ci.ci.upper);
                }
                Ok::<_, Error>(())
            })();
            if let Err(e) = result {
                rec.error = Some(e.to_string());
            }
            rec
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl StudyReport {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "family,u,m,x,w,z,y,n,method,estimand,replications,succeeded,failed,avg_truth,\
             avg_hard_width,avg_smoothed_width,coverage,avg_ci_width,ci_coverage,ci_contains_point\n",
        );
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.family,
                s.u,
                s.m,
                s.x,
                s.w,
                s.z,
                s.y,
                s.n,
                s.method,
                s.estimand,
                s.replications,
                s.succeeded,
                s.failed,
                s.avg_truth,
                s.avg_hard_width,
                s.avg_smoothed_width,
                s.coverage,
                opt(s.avg_ci_width),
                opt(s.ci_coverage),
                opt(s.ci_contains_point),
            );
        }
        out
    }

    pub fn records_csv(&self) -> String {
        let mut out = String::from(
            "grid,n,replication,method,dgp_seed,truth,hard_lower,hard_upper,smoothed_lower,\
             smoothed_upper,ci_lower,ci_upper,error\n",
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.grid,
                r.n,
                r.replication,
                r.method,
                r.dgp_seed,
                r.truth,
                r.hard_lower,
                r.hard_upper,
                r.smoothed_lower,
                r.smoothed_upper,
                opt(r.ci_lower),
                opt(r.ci_upper),
                r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            );
        }
        out
    }
}
