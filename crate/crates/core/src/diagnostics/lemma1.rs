use serde::{Deserialize, Serialize};

use super::orlicz::{orlicz_norm, Young};
use super::report::{Criterion, TestReport};
use super::{check_work, replicate, site_count};
use crate::error::{Error, Result};
use crate::field::{sample_field, Law, TruncationPiece};
use crate::process::{truncated_piece_process, Centering};
use crate::regions::{rho, Region};
use crate::rng::derive_seed;

/// Classes G1, G2 and the law for one group of the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma1Group {
    pub name: String,
    pub law: Law,
    pub d: usize,
    pub g1: Vec<Region<f64>>,
    pub g2: Vec<Region<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma1Result {
    pub n: usize,
    pub pairs: usize,
    pub max_rho: f64,
    /// empirical psi_1 norm of max over G of |Θ(A) - Θ(B)|
    pub norm: f64,
    /// beta tau psi_1^-1(|G|) + max rho psi_2^-1(|G|)
    pub bracket: f64,
    pub k_hat: f64,
}

/// Empirical constant of the maximal inequality for one group at one n,
/// with c_n = n^(d/2), conditional centering and band [alpha, beta).
#[allow(clippy::too_many_arguments)]
pub fn lemma1_ratio(
    group: &Lemma1Group,
    n: usize,
    tau: f64,
    alpha: f64,
    beta: f64,
    reps: usize,
    seed: u64,
    work_cap: u64,
) -> Result<Lemma1Result> {
    let pairs = group.g1.len() * group.g2.len();
    if pairs == 0 {
        return Err(Error::InvalidArgument(format!(
            "group {} has an empty class",
            group.name
        )));
    }
    if reps == 0 {
        return Err(Error::InvalidArgument(
            "replications must be at least 1".into(),
        ));
    }
    let sites = site_count(group.d, n)?;
    check_work(sites, reps, work_cap)?;
    let piece = TruncationPiece::new(tau, (sites as f64).sqrt(), alpha, beta)?;
    let mut max_rho = 0.0f64;
    for a in &group.g1 {
        for b in &group.g2 {
            max_rho = max_rho.max(rho(a, b)?);
        }
    }
    let maxima = replicate(seed, reps, |_, s| {
        let field = sample_field::<f64>(&group.law, group.d, n, s)?;
        let theta = |set: &[Region<f64>]| {
            set.iter()
                .map(|a| truncated_piece_process(&field, a, &piece, Centering::ConditionalMean))
                .collect::<Result<Vec<f64>>>()
        };
        let (t1, t2) = (theta(&group.g1)?, theta(&group.g2)?);
        Ok(t1
            .iter()
            .flat_map(|a| t2.iter().map(move |b| (a - b).abs()))
            .fold(0.0f64, f64::max))
    })?;
    let norm = orlicz_norm(&maxima, Young::Psi1);
    let g = pairs as f64;
    let bracket = beta * tau * Young::Psi1.inverse(g) + max_rho * Young::Psi2.inverse(g);
    Ok(Lemma1Result {
        n,
        pairs,
        max_rho,
        norm,
        bracket,
        k_hat: norm / bracket,
    })
}

/// The four (law, class) groups of the standard sweep, all with d = 2:
/// a single pair under rademacher, gaussian and md innovations, and the
/// quadrant grid with corners in {1/2, 1}^2 under rademacher.
pub fn default_lemma1_groups() -> Vec<Lemma1Group> {
    let q = |a: f64, b: f64| Region::quadrant(vec![a, b]).expect("valid corner");
    let pair = (vec![q(0.5, 0.5)], vec![q(0.75, 0.75)]);
    let grid: Vec<Region<f64>> = [0.5, 1.0]
        .iter()
        .flat_map(|&a| [0.5, 1.0].map(|b| q(a, b)))
        .collect();
    let md = Law::MdBounded {
        base: Box::new(Law::Rademacher),
        amplitude: 0.5,
        window: 1,
    };
    let group =
        |name: &str, law: Law, (g1, g2): (Vec<Region<f64>>, Vec<Region<f64>>)| Lemma1Group {
            name: name.into(),
            law,
            d: 2,
            g1,
            g2,
        };
    vec![
        group("pair_rademacher", Law::Rademacher, pair.clone()),
        group(
            "pair_gaussian",
            Law::Gaussian { variance: 1.0 },
            pair.clone(),
        ),
        group("pair_md", md, pair),
        group("grid_rademacher", Law::Rademacher, (grid.clone(), grid)),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Row {
    pub group: String,
    pub law: Law,
    pub result: Lemma1Result,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Sweep {
    pub rows: Vec<Lemma1Row>,
    pub k_hat_max: f64,
    /// max over groups of max/min K̂ across n
    pub stability: f64,
    pub reports: Vec<TestReport>,
}

/// K̂ over every (group, n); passes when max K̂ <= `k_bound` and each
/// group's max/min over n is at most `stability_bound`.
#[allow(clippy::too_many_arguments)]
pub fn lemma1_sweep(
    groups: &[Lemma1Group],
    ns: &[usize],
    tau: f64,
    reps: usize,
    seed: u64,
    k_bound: f64,
    stability_bound: f64,
    work_cap: u64,
) -> Result<Lemma1Sweep> {
    if groups.is_empty() || ns.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one group and one n".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut stability = 1.0f64;
    for (gi, group) in groups.iter().enumerate() {
        let mut ks = Vec::new();
        for &n in ns {
            let s = derive_seed(derive_seed(seed, gi as u64), n as u64);
            let result = lemma1_ratio(group, n, tau, 0.0, 1.0, reps, s, work_cap)?;
            ks.push(result.k_hat);
            rows.push(Lemma1Row {
                group: group.name.clone(),
                law: group.law.clone(),
                result,
            });
        }
        let hi = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = ks.iter().copied().fold(f64::INFINITY, f64::min);
        stability = stability.max(if lo > 0.0 { hi / lo } else { f64::INFINITY });
    }
    let k_hat_max = rows
        .iter()
        .map(|r| r.result.k_hat)
        .fold(f64::NEG_INFINITY, f64::max);
    let reports = vec![
        TestReport::new(
            "lemma1_khat_max",
            k_hat_max,
            0.0,
            Criterion::AtMost,
            k_bound,
            None,
            seed,
        ),
        TestReport::new(
            "lemma1_stability",
            stability,
            1.0,
            Criterion::AtMost,
            stability_bound - 1.0,
            None,
            seed,
        ),
    ];
    Ok(Lemma1Sweep {
        rows,
        k_hat_max,
        stability,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pairs_give_zero() {
        let a = Region::quadrant(vec![0.5, 0.5]).unwrap();
        let group = Lemma1Group {
            name: "same".into(),
            law: Law::Rademacher,
            d: 2,
            g1: vec![a.clone()],
            g2: vec![a],
        };
        let r = lemma1_ratio(&group, 8, 1.0, 0.0, 1.0, 50, 1, u64::MAX).unwrap();
        assert_eq!(r.norm, 0.0);
        assert_eq!(r.k_hat, 0.0);
        assert!(r.bracket > 0.0);
    }

    #[test]
    fn single_pair_finite() {
        let g = &default_lemma1_groups()[0];
        let r = lemma1_ratio(g, 16, 1.0, 0.0, 1.0, 300, 4, u64::MAX).unwrap();
        assert!(r.k_hat.is_finite() && r.k_hat > 0.0);
        // rho between the quadrants: sqrt(9/16 - 1/4)
        assert!((r.max_rho - (5.0f64 / 16.0).sqrt()).abs() < 1e-15);
    }
}
