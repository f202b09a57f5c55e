//! Seeded Monte Carlo replications and their percentile summaries.
//!
//! Replication `r` simulates from `child_seed(master_seed, r)` only, and
//! results are collected in replication order, so output is identical for
//! any number of worker threads.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::estimators::EstimateSet;
use crate::scm::{simulate, to_natural_units, validate_scm, Dataset, Scm, ScmSpec};
use rayon::prelude::*;

pub const PAPER_REPLICATIONS: usize = 10_000;
pub const DESK_REPLICATIONS: usize = 1_000;
pub const DEFAULT_N: usize = 10_000;
pub const DEFAULT_Y0_FIXED_KG: f64 = 80.0;

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub spec: ScmSpec,
    pub replications: usize,
    pub n_per_replication: usize,
    pub master_seed: u64,
    pub y0_fixed_kg: f64,
}

impl McConfig {
    /// Desk-scale defaults: 1,000 replications of 10,000 rows.
    pub fn new(spec: ScmSpec, master_seed: u64) -> Self {
        McConfig {
            spec,
            replications: DESK_REPLICATIONS,
            n_per_replication: DEFAULT_N,
            master_seed,
            y0_fixed_kg: DEFAULT_Y0_FIXED_KG,
        }
    }

    pub fn paper_scale(mut self) -> Self {
        self.replications = PAPER_REPLICATIONS;
        self
    }

    pub fn validate(&self) -> Result<Scm> {
        if self.replications < 1 {
            return Err(LabError::Config("replications must be at least 1".into()));
        }
        if self.n_per_replication < 10 {
            return Err(LabError::Config("n_per_replication must be at least 10".into()));
        }
        if !self.y0_fixed_kg.is_finite() {
            return Err(LabError::Config("y0_fixed_kg must be finite".into()));
        }
        validate_scm(self.spec.clone())
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `rep`, a hash of (master seed, replication index).
pub fn child_seed(master_seed: u64, rep: usize) -> u64 {
    mix64(mix64(master_seed).wrapping_add((rep as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

/// Simulated natural-unit dataset for replication `rep`.
pub fn replication_dataset(scm: &Scm, cfg: &McConfig, rep: usize) -> Result<Dataset> {
    let ds = simulate(scm, cfg.n_per_replication, child_seed(cfg.master_seed, rep))?;
    to_natural_units(&ds, scm)
}

/// Runs `f` on every replication's dataset, in parallel on `workers`
/// threads (`None`: rayon's default pool), returning results in
/// replication order.
pub fn replicate<T, F>(cfg: &McConfig, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &Dataset) -> Result<T> + Sync,
{
    let scm = cfg.validate()?;
    let job = || {
        (0..cfg.replications)
            .into_par_iter()
            .map(|rep| {
                replication_dataset(&scm, cfg, rep)
                    .and_then(|ds| f(rep, &ds))
                    .map_err(|e| LabError::Replication {
                        rep,
                        source: Box::new(e),
                    })
            })
            .collect::<Result<Vec<T>>>()
    };
    match workers {
        None => job(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| LabError::Config(e.to_string()))?
            .install(job),
    }
}

/// The six estimates for every replication.
pub fn run_replications(cfg: &McConfig, workers: Option<usize>) -> Result<Vec<EstimateSet>> {
    let y0_fixed = cfg.y0_fixed_kg;
    replicate(cfg, workers, |_, ds| EstimateSet::compute(ds, y0_fixed))
}

/// Linearly interpolated percentile of sorted data, `p` in [0, 1]
/// (position `p * (n - 1)` between order statistics).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachSummary {
    pub approach: String,
    pub median_kg: f64,
    pub lo_kg: f64,
    pub hi_kg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub replications: usize,
    pub n_per_replication: usize,
    pub master_seed: u64,
    pub y0_fixed_kg: f64,
}

impl From<&McConfig> for ConfigEcho {
    fn from(c: &McConfig) -> Self {
        ConfigEcho {
            replications: c.replications,
            n_per_replication: c.n_per_replication,
            master_seed: c.master_seed,
            y0_fixed_kg: c.y0_fixed_kg,
        }
    }
}

/// Median and 95% simulation interval per approach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigEcho>,
    pub approaches: Vec<ApproachSummary>,
    /// Wall-clock time of the run; never serialized so that summaries of
    /// identical runs are byte-identical.
    #[serde(skip)]
    pub elapsed_secs: Option<f64>,
}

impl SummaryTable {
    pub fn get(&self, approach: &str) -> Option<&ApproachSummary> {
        self.approaches.iter().find(|a| a.approach == approach)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn summarize_values(name: &str, values: &[f64]) -> Result<ApproachSummary> {
    if values.is_empty() {
        return Err(LabError::EmptySummary);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ApproachSummary {
        approach: name.to_string(),
        median_kg: percentile(&sorted, 0.5),
        lo_kg: percentile(&sorted, 0.025),
        hi_kg: percentile(&sorted, 0.975),
    })
}

pub fn summarize(estimates: &[EstimateSet]) -> Result<SummaryTable> {
    let approaches = EstimateSet::NAMES
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let column: Vec<f64> = estimates.iter().map(|e| e.values()[j]).collect();
            summarize_values(name, &column)
        })
        .collect::<Result<_>>()?;
    Ok(SummaryTable {
        config: None,
        approaches,
        elapsed_secs: None,
    })
}

/// Replications plus their summary, with config echo and timing.
pub fn run_and_summarize(
    cfg: &McConfig,
    workers: Option<usize>,
) -> Result<(Vec<EstimateSet>, SummaryTable)> {
    let start = Instant::now();
    let estimates = run_replications(cfg, workers)?;
    let mut table = summarize(&estimates)?;
    table.config = Some(cfg.into());
    table.elapsed_secs = Some(start.elapsed().as_secs_f64());
    Ok((estimates, table))
}
