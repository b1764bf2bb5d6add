use serde::Serialize;

use super::report::{Criterion, TestReport};
use super::stats::{covariance_with_se, ks_distance, mean_and_se, median, standard_normal_cdf};
use super::{check_work, replicate, site_count};
use crate::error::{Error, Result};
use crate::field::{sample_field, sample_iid_field, Law};
use crate::process::{gamma_discrepancy, gamma_set, norming_constant, NormingConstant};
use crate::regions::{weight_grid, Region};
use crate::rng::derive_seed;
use crate::scalar::compensated_sum;

/// KS distance of `samples` from N(0, variance). The default tolerance is
/// 1.36/sqrt(R) + 0.03.
pub fn fidi_gaussian_test(
    samples: &[f64],
    variance: f64,
    tolerance: Option<f64>,
    seed: u64,
) -> Result<TestReport> {
    if samples.len() < 200 {
        return Err(Error::InvalidArgument(format!(
            "KS test needs at least 200 samples, got {}",
            samples.len()
        )));
    }
    if variance.is_nan() || variance <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "target variance must be positive, got {variance}"
        )));
    }
    let sd = variance.sqrt();
    let ks = ks_distance(samples, |x| standard_normal_cdf(x / sd));
    let tol = tolerance.unwrap_or(1.36 / (samples.len() as f64).sqrt() + 0.03);
    Ok(TestReport::new(
        "ks",
        ks,
        0.0,
        Criterion::AtMost,
        tol,
        None,
        seed,
    ))
}

/// Sample covariance against `target`; passes within 3 SE + `tolerance`.
pub fn covariance_check(
    x: &[f64],
    y: &[f64],
    target: f64,
    tolerance: f64,
    seed: u64,
) -> Result<TestReport> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument(
            "covariance needs at least two paired samples".into(),
        ));
    }
    let (cov, se) = covariance_with_se(x, y);
    Ok(TestReport::new(
        "covariance",
        cov,
        target,
        Criterion::Within,
        3.0 * se + tolerance,
        Some(se),
        seed,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RaikovOutcome {
    pub norming: NormingConstant,
    /// U_n^2 / b_n^2 per replication
    pub ratios: Vec<f64>,
    pub median: f64,
    /// fraction of replications with |ratio - 1| > 0.25
    pub exceed_frequency: f64,
    pub reports: Vec<TestReport>,
}

/// Distribution of U_n^2 / b_n^2; the median must fall in [lo, hi].
pub fn raikov_check(
    law: &Law,
    d: usize,
    n: usize,
    reps: usize,
    seed: u64,
    band: (f64, f64),
    work_cap: u64,
) -> Result<RaikovOutcome> {
    let (lo, hi) = band;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "empty median band [{lo}, {hi}]"
        )));
    }
    let norming = norming_constant(law, d, n)?;
    let sites = site_count(d, n)?;
    check_work(sites, reps, work_cap)?;
    let ratios = replicate(seed, reps, |_, s| {
        let field = sample_field::<f64>(law, d, n, s)?;
        Ok(compensated_sum(field.values.iter().map(|x| x * x)) / norming.b_squared)
    })?;
    let med = median(&ratios);
    let exceed = ratios.iter().filter(|r| (*r - 1.0).abs() > 0.25).count() as f64 / reps as f64;
    let reports = vec![
        TestReport::new(
            "raikov_median",
            med,
            0.5 * (lo + hi),
            Criterion::Within,
            0.5 * (hi - lo),
            None,
            seed,
        ),
        TestReport::new(
            "norming_residual",
            norming.residual,
            0.0,
            Criterion::AtMost,
            1e-10,
            None,
            seed,
        ),
    ];
    Ok(RaikovOutcome {
        norming,
        ratios,
        median: med,
        exceed_frequency: exceed,
        reports,
    })
}

/// sqrt(sum_i a_i^2 E X^2) / n^(d/2) with a_i = lambda(nA ∩ R_i) - 1{i in Γ_n(A)}.
pub fn lemma2_oracle(region: &Region<f64>, d: usize, n: usize, variance: f64) -> Result<f64> {
    let grid = weight_grid(region, d, n)?;
    let gamma = gamma_set(region, d, n)?;
    let mut a = grid.weights;
    for i in gamma {
        a[i] -= 1.0;
    }
    let ss = compensated_sum(a.iter().map(|x| x * x));
    Ok((ss * variance).sqrt() / (grid.lattice.len() as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma2Row {
    pub n: usize,
    /// sqrt(mean D^2) / n^(d/2)
    pub estimate: f64,
    /// delta-method SE of `estimate`
    pub se: f64,
    pub oracle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma2Outcome {
    pub rows: Vec<Lemma2Row>,
    pub nonincreasing: bool,
    pub reports: Vec<TestReport>,
}

/// Monte Carlo L2 distance between S_n(A) and the lattice sum over Γ_n(A)
/// along a ladder of n, against the closed form.
#[allow(clippy::too_many_arguments)]
pub fn lemma2_check(
    law: &Law,
    region: &Region<f64>,
    d: usize,
    ladder: &[usize],
    reps: usize,
    seed: u64,
    final_tolerance: f64,
    work_cap: u64,
) -> Result<Lemma2Outcome> {
    if !law.is_iid() {
        return Err(Error::UnsupportedCombination(format!(
            "L2 approximation check needs an i.i.d. law, got {law}"
        )));
    }
    let variance = law.variance().ok_or_else(|| {
        Error::UnsupportedCombination(format!(
            "L2 approximation check needs finite variance ({law})"
        ))
    })?;
    if ladder.is_empty() || reps < 2 {
        return Err(Error::InvalidArgument(
            "need a nonempty ladder and at least 2 replications".into(),
        ));
    }
    region.check_dim(d)?;
    let mut rows = Vec::with_capacity(ladder.len());
    let mut reports = Vec::new();
    for &n in ladder {
        let sites = site_count(d, n)?;
        check_work(sites, reps, work_cap)?;
        let gamma = gamma_set(region, d, n)?;
        let seed_n = derive_seed(seed, n as u64);
        let sq = replicate(seed_n, reps, |_, s| {
            let field = sample_iid_field::<f64>(law, d, n, s)?;
            let g = gamma_discrepancy(&field, region, &gamma)?;
            Ok(g * g)
        })?;
        let (m2, se_m2) = mean_and_se(&sq);
        let scale = (sites as f64).sqrt();
        let estimate = m2.sqrt() / scale;
        let se = if m2 > 0.0 {
            se_m2 / (2.0 * m2.sqrt()) / scale
        } else {
            0.0
        };
        let oracle = lemma2_oracle(region, d, n, variance)?;
        reports.push(TestReport::new(
            format!("lemma2_oracle_n{n}"),
            estimate,
            oracle,
            Criterion::Within,
            3.0 * se,
            Some(se),
            seed_n,
        ));
        rows.push(Lemma2Row {
            n,
            estimate,
            se,
            oracle,
        });
    }
    let mut rise = f64::NEG_INFINITY;
    let mut noise = 0.0f64;
    for w in rows.windows(2) {
        rise = rise.max(w[1].estimate - w[0].estimate);
        noise = noise.max(3.0 * (w[0].se * w[0].se + w[1].se * w[1].se).sqrt());
    }
    let nonincreasing = rows.len() < 2 || rise <= noise;
    if rows.len() >= 2 {
        reports.push(TestReport::new(
            "lemma2_nonincreasing",
            rise,
            0.0,
            Criterion::AtMost,
            noise,
            None,
            seed,
        ));
    }
    let last = rows.last().expect("nonempty ladder").estimate;
    reports.push(TestReport::new(
        "lemma2_final",
        last,
        0.0,
        Criterion::AtMost,
        final_tolerance,
        None,
        seed,
    ));
    Ok(Lemma2Outcome {
        rows,
        nonincreasing,
        reports,
    })
}
