use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::net::NetError;
use crate::placement::AlgoConfig;
use crate::scalar::Real;
use crate::scenario::Scenario;

use super::{run_scenario, SimulationReport};

/// z-value of a two-sided 99% normal interval.
pub const Z99: f64 = 2.576;

/// One labelled configuration to run over every seed.
#[derive(Debug, Clone)]
pub struct BatchJob {
    pub label: String,
    pub config: AlgoConfig,
}

/// Row of the per-run results CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub config: String,
    pub seed: u64,
    pub acceptance: f64,
    pub rtc_sum: f64,
    pub rtc_mean: f64,
    pub accepted: usize,
    pub arrived: usize,
    pub mean_ms_per_slice: f64,
}

impl RunRow {
    pub fn new(config: &str, seed: u64, rep: &SimulationReport) -> Self {
        Self {
            config: config.to_string(),
            seed,
            acceptance: rep.acceptance_ratio,
            rtc_sum: rep.rtc_sum,
            rtc_mean: rep.rtc_mean,
            accepted: rep.accepted,
            arrived: rep.arrived,
            mean_ms_per_slice: rep.mean_ms_per_slice(),
        }
    }
}

/// Sample mean with a normal-approximation 99% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub mean: f64,
    /// `None` with fewer than two samples.
    pub half_width: Option<f64>,
}

impl Interval {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, half_width: None };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self { mean, half_width: None };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self { mean, half_width: Some(Z99 * var.sqrt() / (n as f64).sqrt()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config: String,
    pub runs: usize,
    pub acceptance: Interval,
    pub rtc_sum: Interval,
    pub rtc_mean: Interval,
    pub ms_per_slice: Interval,
}

/// Aggregates rows per configuration label, in first-seen label order.
pub fn summarize(rows: &[RunRow]) -> Vec<Summary> {
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        if !labels.contains(&r.config.as_str()) {
            labels.push(&r.config);
        }
    }
    labels
        .into_iter()
        .map(|label| {
            let mine: Vec<&RunRow> = rows.iter().filter(|r| r.config == label).collect();
            let col = |f: fn(&RunRow) -> f64| Interval::from_samples(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
            Summary {
                config: label.to_string(),
                runs: mine.len(),
                acceptance: col(|r| r.acceptance),
                rtc_sum: col(|r| r.rtc_sum),
                rtc_mean: col(|r| r.rtc_mean),
                ms_per_slice: col(|r| r.mean_ms_per_slice),
            }
        })
        .collect()
}

/// Runs every (job, seed) pair on `scenario`, in parallel on the current
/// rayon pool. Results come back in job-major, seed-minor order.
pub fn run_batch<F: Real>(
    scenario: &Scenario,
    jobs: &[BatchJob],
    seeds: &[u64],
) -> Result<Vec<(String, u64, SimulationReport)>, NetError> {
    let pairs: Vec<(&BatchJob, u64)> = jobs.iter().flat_map(|j| seeds.iter().map(move |&s| (j, s))).collect();
    pairs
        .into_par_iter()
        .map(|(job, seed)| {
            let rep = run_scenario::<F>(scenario, &job.config, seed)?;
            log::info!("{} seed {}: acceptance {:.4} rtc {:.4}", job.label, seed, rep.acceptance_ratio, rep.rtc_sum);
            Ok((job.label.clone(), seed, rep))
        })
        .collect()
}

pub fn write_runs_csv<W: Write>(out: W, rows: &[RunRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SliceRow<'a> {
    config: &'a str,
    seed: u64,
    slice: u64,
    accepted: bool,
    reward: f64,
    revenue: u64,
    cost: u64,
    wall_ms: f64,
    routing_attempts: u64,
    simulations: u64,
}

/// Long-form CSV with one row per (run, slice).
pub fn write_slices_csv<W: Write>(out: W, runs: &[(String, u64, SimulationReport)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (config, seed, rep) in runs {
        for r in &rep.records {
            w.serialize(SliceRow {
                config,
                seed: *seed,
                slice: r.id,
                accepted: r.accepted,
                reward: r.reward,
                revenue: r.revenue,
                cost: r.cost,
                wall_ms: r.wall_ms,
                routing_attempts: r.routing_attempts,
                simulations: r.simulations,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
