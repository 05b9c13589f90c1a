//! Basic-bootstrap confidence intervals around smoothed bounds.
//!
//! Replicate `b` resamples whole records from `rng::stream(seed, BOOTSTRAP,
//! b·256 + attempt)`. Replicates are reduced in index order, so the report is
//! bit-identical for every worker count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{estimate, Estimand, Interval, Method};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::freq::FrequencyModel;
use crate::rng::{self, domain, RNG_ALGORITHM};

/// Resample attempts per replicate before giving up.
pub const MAX_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub method: Method,
    pub estimand: Estimand,
    /// LSE parameter; `None` bootstraps the hard bounds.
    pub alpha: Option<f64>,
    /// Add-λ pseudo-count, applied identically to every replicate.
    pub lambda: f64,
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(method: Method, estimand: Estimand) -> Self {
        BootstrapConfig {
            method,
            estimand,
            alpha: Some(crate::bounds::DEFAULT_ALPHA),
            lambda: 0.0,
            replicates: 500,
            level: 0.95,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidArgument(
                "bootstrap needs at least 2 replicates".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.level) {
            return Err(Error::InvalidArgument(format!(
                "level {} outside [0, 1]",
                self.level
            )));
        }
        Ok(())
    }
}

/// Order statistics of one replicate endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointSummary {
    pub min: f64,
    pub q025: f64,
    pub median: f64,
    pub q975: f64,
    pub max: f64,
    pub mean: f64,
}

impl EndpointSummary {
    fn of(sorted: &[f64]) -> Self {
        EndpointSummary {
            min: sorted[0],
            q025: nearest_rank(sorted, 0.025),
            median: nearest_rank(sorted, 0.5),
            q975: nearest_rank(sorted, 0.975),
            max: sorted[sorted.len() - 1],
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummaries {
    pub lower: EndpointSummary,
    pub upper: EndpointSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CIReport {
    pub estimand: Estimand,
    pub method: Method,
    pub alpha: Option<f64>,
    pub lambda: f64,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    pub rng: String,
    pub n: usize,
    /// Smoothed bounds on the full sample.
    pub point: Interval,
    pub hard: Interval,
    pub ci: Interval,
    /// The raw interval was inverted and has been replaced by its hull with
    /// the point interval.
    pub inverted: bool,
    /// Resamples redrawn because the estimator failed on them.
    pub retries: usize,
    pub replicate_summaries: ReplicateSummaries,
    /// Every replicate's (lower, upper), in replicate order.
    #[serde(skip)]
    pub replicate_bounds: Vec<Interval>,
}

impl CIReport {
    /// CSV with one `replicate,lower,upper` row per replicate.
    pub fn replicates_csv(&self) -> String {
        let mut out = String::from("replicate,lower,upper\n");
        for (i, r) in self.replicate_bounds.iter().enumerate() {
            out.push_str(&format!("{i},{},{}\n", r.lower, r.upper));
        }
        out
    }
}

/// The ⌈B·β⌉-th order statistic (1-based, clamped to [1, B]) of sorted values.
pub fn nearest_rank(sorted: &[f64], beta: f64) -> f64 {
    let b = sorted.len();
    let k = ((b as f64 * beta).ceil() as usize).clamp(1, b);
    sorted[k - 1]
}

/// Basic bootstrap: (2ψ̂_L − ψ*_L at 1 − (1−level)/2, 2ψ̂_U − ψ*_U at (1−level)/2).
///
/// `workers` bounds the thread count; results do not depend on it.
pub fn bootstrap_ci(data: &Dataset, config: &BootstrapConfig, workers: usize) -> Result<CIReport> {
    config.validate()?;
    let full = FrequencyModel::fit(data, config.lambda)?;
    let report = estimate(&full, config.method, config.estimand, config.alpha)?;

    let cells = data.cell_indices();
    let size = data.layout().size();
    let run = |b: usize| replicate(data, &cells, size, config, b);
    let results: Vec<Result<(Interval, usize)>> = if workers <= 1 {
        (0..config.replicates).map(run).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(|| (0..config.replicates).into_par_iter().map(run).collect())
    };
    let mut bounds = Vec::with_capacity(config.replicates);
    let mut retries = 0;
    for r in results {
        let (iv, attempts) = r?;
        retries += attempts - 1;
        bounds.push(iv);
    }

    let mut lows: Vec<f64> = bounds.iter().map(|i| i.lower).collect();
    let mut highs: Vec<f64> = bounds.iter().map(|i| i.upper).collect();
    lows.sort_by(f64::total_cmp);
    highs.sort_by(f64::total_cmp);
    let tail = (1.0 - config.level) / 2.0;
    let point = report.smoothed;
    let mut ci = Interval::new(
        2.0 * point.lower - nearest_rank(&lows, 1.0 - tail),
        2.0 * point.upper - nearest_rank(&highs, tail),
    );
    let inverted = ci.lower > ci.upper;
    if inverted {
        ci = Interval::new(ci.upper.min(point.lower), ci.lower.max(point.upper));
    }
    Ok(CIReport {
        estimand: config.estimand,
        method: config.method,
        alpha: config.alpha,
        lambda: config.lambda,
        replicates: config.replicates,
        level: config.level,
        seed: config.seed,
        rng: RNG_ALGORITHM.to_string(),
        n: data.n(),
        point,
        hard: report.hard,
        ci,
        inverted,
        retries,
        replicate_summaries: ReplicateSummaries {
            lower: EndpointSummary::of(&lows),
            upper: EndpointSummary::of(&highs),
        },
        replicate_bounds: bounds,
    })
}

fn replicate(
    data: &Dataset,
    cells: &[usize],
    size: usize,
    config: &BootstrapConfig,
    b: usize,
) -> Result<(Interval, usize)> {
    let n = cells.len();
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = rng::stream(
            config.seed,
            domain::BOOTSTRAP,
            ((b as u64) << 8) | attempt as u64,
        );
        let mut counts = vec![0.0; size];
        for _ in 0..n {
            counts[cells[rng.random_range(0..n)]] += 1.0;
        }
        let outcome = FrequencyModel::from_counts(data.codebook(), counts, config.lambda)
            .and_then(|m| estimate(&m, config.method, config.estimand, config.alpha));
        match outcome {
            Ok(r) => return Ok((r.smoothed, attempt + 1)),
            Err(e) if e.is_precondition() => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(Error::ReplicateFailed {
        replicate: b,
        attempts: MAX_ATTEMPTS,
        last: Box::new(last.expect("at least one attempt")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_convention() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(nearest_rank(&v, 0.0), 1.0);
        assert_eq!(nearest_rank(&v, 0.25), 1.0);
        assert_eq!(nearest_rank(&v, 0.26), 2.0);
        assert_eq!(nearest_rank(&v, 0.975), 4.0);
        assert_eq!(nearest_rank(&v, 1.0), 4.0);
    }
}
