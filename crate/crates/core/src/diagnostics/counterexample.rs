use serde::{Deserialize, Serialize};

use super::binomial::binomial_upper_tail;
use super::report::{Criterion, TestReport};
use super::{check_work, replicate, DEFAULT_WORK_CAP};
use crate::error::{Error, Result};
use crate::field::{sample_iid_field, Law};
use crate::process::{evaluate, modulus_with, Normalization};
use crate::regions::{
    adaptive_region, counterexample_params, lebesgue, CounterexampleParams, Region,
};
use crate::rng::derive_seed;

/// P(W_r) = P(Bin(n_r^d, beta_r^(-p-1)/2) >= k_r).
pub fn wr_exact_probability(params: &CounterexampleParams) -> f64 {
    binomial_upper_tail(params.sites, params.exceedance_probability(), params.k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub p: u32,
    pub d: u32,
    pub rs: Vec<u32>,
    pub reps: usize,
    pub seed: u64,
    /// modulus window delta = delta_factor * eps_r
    pub delta_factor: f64,
    /// the statistic must reach this level
    pub level: f64,
    pub min_frequency: f64,
    /// allowed distance from the oracle in binomial SEs
    pub se_multiplier: f64,
    pub work_cap: u64,
}

impl CounterexampleConfig {
    pub fn new(p: u32, d: u32, rs: Vec<u32>, reps: usize, seed: u64) -> Self {
        Self {
            p,
            d,
            rs,
            reps,
            seed,
            delta_factor: 2.0,
            level: 0.5,
            min_frequency: 0.2,
            se_multiplier: 4.0,
            work_cap: DEFAULT_WORK_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleRow {
    pub params: CounterexampleParams,
    /// frequency of {A_r exists and the modulus at delta reaches `level`}
    pub frequency: f64,
    pub oracle: f64,
    pub se: f64,
    /// mean lambda(A_r) over replications where A_r exists
    pub measure: f64,
    pub report: TestReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleOutcome {
    pub rows: Vec<CounterexampleRow>,
    pub reports: Vec<TestReport>,
}

/// Simulates the non-tightness construction for each r: R fields under the
/// integer law, the adaptive set A_r, and the modulus of the normalized
/// process over {A_r, ∅} at window delta_factor * eps_r.
pub fn counterexample_experiment(cfg: &CounterexampleConfig) -> Result<CounterexampleOutcome> {
    if cfg.rs.is_empty() || cfg.reps == 0 {
        return Err(Error::InvalidArgument(
            "need at least one r and one replication".into(),
        ));
    }
    let params = cfg
        .rs
        .iter()
        .map(|&r| counterexample_params(cfg.p, cfg.d, r))
        .collect::<Result<Vec<_>>>()?;
    for p in &params {
        check_work(p.sites, cfg.reps, cfg.work_cap)?;
    }
    let law = Law::CounterexampleInteger { p: cfg.p };
    let mut rows = Vec::with_capacity(params.len());
    for par in params {
        let seed_r = derive_seed(cfg.seed, u64::from(par.r));
        let (d, n) = (par.d as usize, par.n as usize);
        let delta = cfg.delta_factor * par.eps;
        let outcomes = replicate(seed_r, cfg.reps, |_, s| {
            let field = sample_iid_field::<f64>(&law, d, n, s)?;
            let Some(region) = adaptive_region(&field, &par)? else {
                return Ok(None);
            };
            let measure = lebesgue(&region);
            let pair = [region, Region::Empty];
            let eval = evaluate(&field, &pair, Normalization::Standard)?;
            let rho = [0.0, measure.sqrt(), measure.sqrt(), 0.0];
            Ok(Some((modulus_with(&eval, &rho, delta)?, measure)))
        })?;
        let hits = outcomes
            .iter()
            .flatten()
            .filter(|(m, _)| *m >= cfg.level)
            .count();
        let existing: Vec<f64> = outcomes.iter().flatten().map(|(_, a)| *a).collect();
        let measure = if existing.is_empty() {
            f64::NAN
        } else {
            existing.iter().sum::<f64>() / existing.len() as f64
        };
        let frequency = hits as f64 / cfg.reps as f64;
        let oracle = wr_exact_probability(&par);
        let se = (oracle * (1.0 - oracle) / cfg.reps as f64).sqrt();
        let report = TestReport::new(
            format!("wr_frequency_r{}", par.r),
            frequency,
            oracle,
            Criterion::Within,
            cfg.se_multiplier * se,
            Some(se),
            seed_r,
        );
        rows.push(CounterexampleRow {
            params: par,
            frequency,
            oracle,
            se,
            measure,
            report,
        });
    }
    let mut reports: Vec<TestReport> = rows.iter().map(|r| r.report.clone()).collect();
    let min_f = rows
        .iter()
        .map(|r| r.frequency)
        .fold(f64::INFINITY, f64::min);
    reports.push(TestReport::new(
        "min_frequency",
        min_f,
        cfg.min_frequency,
        Criterion::AtLeast,
        0.0,
        None,
        cfg.seed,
    ));
    if rows.len() >= 2 {
        let ratio = rows
            .windows(2)
            .map(|w| w[1].measure / w[0].measure)
            .fold(f64::NEG_INFINITY, f64::max);
        let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
        reports.push(TestReport::new(
            "measure_ratio_max",
            ratio,
            1.0,
            Criterion::AtMost,
            0.0,
            None,
            cfg.seed,
        ));
    }
    Ok(CounterexampleOutcome { rows, reports })
}
