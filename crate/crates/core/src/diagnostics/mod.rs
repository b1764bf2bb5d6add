//! Monte Carlo replication and statistical verdicts.

mod binomial;
mod checks;
mod counterexample;
mod lemma1;
mod orlicz;
mod report;
mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{sample_field, Law};
use crate::process::{evaluate, Normalization, ProcessEvaluation};
use crate::regions::Region;
use crate::rng::derive_seed;
use crate::scalar::Scalar;

pub use binomial::{binomial_upper_tail, ln_binomial_pmf};
pub use checks::{
    covariance_check, fidi_gaussian_test, lemma2_check, lemma2_oracle, raikov_check, Lemma2Outcome,
    Lemma2Row, RaikovOutcome,
};
pub use counterexample::{
    counterexample_experiment, wr_exact_probability, CounterexampleConfig, CounterexampleOutcome,
    CounterexampleRow,
};
pub use lemma1::{
    default_lemma1_groups, lemma1_ratio, lemma1_sweep, Lemma1Group, Lemma1Result, Lemma1Row,
    Lemma1Sweep,
};
pub use orlicz::{orlicz_norm, Young};
pub use report::{overall_verdict, Criterion, TestReport, Verdict};
pub use stats::{covariance_with_se, ks_distance, mean_and_se, median, standard_normal_cdf};

/// Default ceiling on n^d * R for one experiment.
pub const DEFAULT_WORK_CAP: u64 = 1 << 32;

/// n^d as a u64.
pub fn site_count(d: usize, n: usize) -> Result<u64> {
    u32::try_from(d)
        .ok()
        .and_then(|e| (n as u64).checked_pow(e))
        .ok_or(Error::LatticeTooLarge { d, n })
}

/// Fails when `sites * reps` exceeds `cap`.
pub fn check_work(sites: u64, reps: usize, cap: u64) -> Result<()> {
    let work = u128::from(sites) * reps as u128;
    if work > u128::from(cap) {
        return Err(Error::ResourceCap {
            work,
            cap: u128::from(cap),
        });
    }
    Ok(())
}

/// Runs `f(j, seed_j)` for j in 0..reps with seed_j = derive_seed(seed, j),
/// in parallel, returning results in replication order.
pub fn replicate<O, F>(seed: u64, reps: usize, f: F) -> Result<Vec<O>>
where
    O: Send,
    F: Fn(usize, u64) -> Result<O> + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|j| f(j, derive_seed(seed, j as u64)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    bound(serialize = "T: Scalar", deserialize = "T: Scalar + std::str::FromStr")
)]
pub struct ExperimentPlan<T: Scalar = f64> {
    pub law: Law,
    pub d: usize,
    pub n: usize,
    pub regions: Vec<Region<T>>,
    pub normalization: Normalization,
    pub replications: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub work_cap: u64,
}

impl<T: Scalar> ExperimentPlan<T> {
    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        if self.d == 0 || self.n == 0 {
            return Err(Error::InvalidLattice {
                d: self.d,
                n: self.n,
            });
        }
        if self.replications == 0 {
            return Err(Error::InvalidArgument(
                "replications must be at least 1".into(),
            ));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if let Normalization::Norming(b) = self.normalization {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "norming constant must be positive, got {b}"
                )));
            }
        }
        for r in &self.regions {
            r.check_dim(self.d)?;
        }
        let sites = site_count(self.d, self.n)?;
        check_work(sites, self.replications, self.work_cap)
    }
}

/// One evaluation per replication; replication j samples its field with
/// seed derive_seed(plan.seed, j).
pub fn run_replications<T: Scalar>(plan: &ExperimentPlan<T>) -> Result<Vec<ProcessEvaluation<T>>> {
    plan.validate()?;
    replicate(plan.seed, plan.replications, |_, s| {
        let field = sample_field::<T>(&plan.law, plan.d, plan.n, s)?;
        evaluate(&field, &plan.regions, plan.normalization)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::partial_sum;

    fn plan(reps: usize) -> ExperimentPlan {
        ExperimentPlan {
            law: Law::Gaussian { variance: 1.0 },
            d: 2,
            n: 8,
            regions: vec![Region::quadrant(vec![0.5, 0.5]).unwrap()],
            normalization: Normalization::Standard,
            replications: reps,
            seed: 11,
            tolerance: 0.05,
            work_cap: DEFAULT_WORK_CAP,
        }
    }

    #[test]
    fn single_replication_matches_direct_evaluation() {
        let out = run_replications(&plan(1)).unwrap();
        let field = sample_field::<f64>(&Law::Gaussian { variance: 1.0 }, 2, 8, derive_seed(11, 0))
            .unwrap();
        let s = partial_sum(&field, &plan(1).regions[0]).unwrap();
        assert_eq!(out[0].raw[0], s);
    }

    #[test]
    fn replications_are_independent_of_scheduling() {
        let a = run_replications(&plan(64)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| run_replications(&plan(64))).unwrap();
        assert_eq!(a, b);
        let rev: Vec<f64> = replicate(11, 64, |j, s| {
            let field = sample_field::<f64>(&Law::Gaussian { variance: 1.0 }, 2, 8, s)?;
            Ok((j, partial_sum(&field, &plan(1).regions[0])?))
        })
        .unwrap()
        .into_iter()
        .rev()
        .map(|(_, v)| v)
        .collect();
        assert!(rev.iter().rev().zip(&a).all(|(x, e)| *x == e.raw[0]));
    }

    #[test]
    fn centered_mean_within_three_se() {
        let mut p = plan(2000);
        p.n = 16;
        let vals: Vec<f64> = run_replications(&p)
            .unwrap()
            .iter()
            .map(|e| e.normalized_values().unwrap()[0])
            .collect();
        let (m, se) = mean_and_se(&vals);
        assert!(m.abs() <= 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn work_cap_and_validation() {
        let mut p = plan(10);
        p.work_cap = 100;
        assert!(matches!(
            run_replications(&p),
            Err(Error::ResourceCap {
                work: 640,
                cap: 100
            })
        ));
        let mut p = plan(0);
        assert!(p.validate().is_err());
        p.replications = 1;
        p.tolerance = 0.0;
        assert!(p.validate().is_err());
    }
}
