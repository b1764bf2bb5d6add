//! Covering numbers under rho, entropy integrals and the entropy arithmetic
//! of the non-tightness construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regions::{rho_matrix, Region};
use crate::scalar::{compensated_sum, Scalar};

/// Largest class [`greedy_cover`] accepts; the rho matrix is quadratic in it.
pub const MAX_COVER_CLASS: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    GreedyEmpirical,
    AnalyticBound,
}

impl ProfileSource {
    pub fn label(&self) -> &'static str {
        match self {
            ProfileSource::GreedyEmpirical => "greedy_empirical",
            ProfileSource::AnalyticBound => "analytic_bound",
        }
    }
}

/// log N(A, rho, eps) on a decreasing grid of radii.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyProfile {
    pub eps: Vec<f64>,
    pub log_n: Vec<f64>,
    pub source: ProfileSource,
}

impl EntropyProfile {
    /// Sorts by decreasing eps and takes the monotone envelope so that
    /// log N never decreases as eps shrinks.
    pub fn new(eps: Vec<f64>, log_n: Vec<f64>, source: ProfileSource) -> Result<Self> {
        if eps.len() != log_n.len() || eps.is_empty() {
            return Err(Error::InvalidArgument(
                "profile needs matching, nonempty eps and logN lists".into(),
            ));
        }
        if eps.iter().any(|&e| e.is_nan() || e <= 0.0 || e > 1.0)
            || log_n.iter().any(|&h| !h.is_finite() || h < 0.0)
        {
            return Err(Error::InvalidArgument(
                "profile needs eps in (0,1] and finite logN >= 0".into(),
            ));
        }
        let mut pairs: Vec<(f64, f64)> = eps.into_iter().zip(log_n).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        pairs.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 = a.1.max(b.1);
                true
            } else {
                false
            }
        });
        let mut running = 0.0f64;
        for p in pairs.iter_mut() {
            running = running.max(p.1);
            p.1 = running;
        }
        let (eps, log_n) = pairs.into_iter().unzip();
        Ok(Self { eps, log_n, source })
    }
}

/// Covering count from a row-major rho matrix: greedy set cover with balls
/// rho(c, .) < eps centred on class members (most newly covered members
/// first, ties to the lowest index).
pub fn greedy_cover_from_matrix<T: Scalar>(rho: &[T], k: usize, eps: T) -> usize {
    debug_assert_eq!(rho.len(), k * k);
    let mut covered = vec![false; k];
    let mut remaining = k;
    let mut centers = 0;
    while remaining > 0 {
        let mut best = (0usize, 0usize);
        for c in 0..k {
            let gain = (0..k)
                .filter(|&j| !covered[j] && rho[c * k + j] < eps)
                .count();
            if gain > best.1 {
                best = (c, gain);
            }
        }
        // every uncovered member covers itself, so gain >= 1
        let c = best.0;
        for j in 0..k {
            if !covered[j] && rho[c * k + j] < eps {
                covered[j] = true;
                remaining -= 1;
            }
        }
        centers += 1;
    }
    centers
}

/// Greedy estimate of N(class, rho, eps); 0 for an empty class.
pub fn greedy_cover<T: Scalar>(class: &[Region<T>], eps: T) -> Result<usize> {
    if class.is_empty() {
        return Ok(0);
    }
    if class.len() > MAX_COVER_CLASS {
        return Err(Error::InvalidArgument(format!(
            "class of {} sets exceeds the covering cap {MAX_COVER_CLASS}",
            class.len()
        )));
    }
    if eps <= T::zero() {
        return Err(Error::InvalidArgument(
            "covering radius must be positive".into(),
        ));
    }
    let rho = rho_matrix(class)?;
    Ok(greedy_cover_from_matrix(&rho, class.len(), eps))
}

/// Greedy covering profile on a grid of radii (one rho matrix for all).
pub fn cover_profile<T: Scalar>(class: &[Region<T>], eps_grid: &[f64]) -> Result<EntropyProfile> {
    if class.is_empty() || class.len() > MAX_COVER_CLASS {
        return Err(Error::InvalidArgument(format!(
            "class size {} outside 1..={MAX_COVER_CLASS}",
            class.len()
        )));
    }
    let rho = rho_matrix(class)?;
    let log_n = eps_grid
        .iter()
        .map(|&e| (greedy_cover_from_matrix(&rho, class.len(), T::from_f64_lossy(e)) as f64).ln())
        .collect();
    EntropyProfile::new(eps_grid.to_vec(), log_n, ProfileSource::GreedyEmpirical)
}

/// Bracketing bound for lower-left quadrants of [0,1]^d: with grid spacing
/// s = eps^2 / d per axis, consecutive grid quadrants bracket every
/// quadrant with lambda(A+ \ A-) <= d s = eps^2, using (ceil(d/eps^2)+1)^d
/// sets. Returns d ln(ceil(d/eps^2) + 1).
pub fn quadrant_bracketing_profile(d: usize, eps_grid: &[f64]) -> Result<EntropyProfile> {
    let df = d as f64;
    let log_n = eps_grid
        .iter()
        .map(|&e| df * ((df / (e * e)).ceil() + 1.0).ln())
        .collect();
    EntropyProfile::new(eps_grid.to_vec(), log_n, ProfileSource::AnalyticBound)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyIntegral {
    pub value: f64,
    /// Lower integration limit actually used (0 when extended).
    pub lower_limit: f64,
    pub extended_to_zero: bool,
}

/// Trapezoidal estimate of the integral of sqrt(log N) over (0, 1].
///
/// Above the largest grid radius the first value is held (log N is
/// nonincreasing in eps, so this overestimates). Below the smallest radius
/// the profile is extended to 0 only when its last two values agree;
/// otherwise the integral stops at eps_min.
pub fn entropy_integral(profile: &EntropyProfile) -> EntropyIntegral {
    let root: Vec<f64> = profile.log_n.iter().map(|h| h.sqrt()).collect();
    let eps = &profile.eps;
    let mut parts = Vec::with_capacity(eps.len() + 1);
    parts.push((1.0 - eps[0]).max(0.0) * root[0]);
    for i in 1..eps.len() {
        parts.push((eps[i - 1] - eps[i]) * 0.5 * (root[i - 1] + root[i]));
    }
    let last = eps.len() - 1;
    let flat_tail = last == 0 || profile.log_n[last] == profile.log_n[last - 1];
    if flat_tail {
        parts.push(eps[last] * root[last]);
    }
    EntropyIntegral {
        value: compensated_sum(parts),
        lower_limit: if flat_tail { 0.0 } else { eps[last] },
        extended_to_zero: flat_tail,
    }
}

fn ce_k(p: u32, d: u32, r: u32) -> f64 {
    let e = i64::from(r) * i64::from(d) * (i64::from(p) - 1);
    if e == 0 {
        1.0
    } else {
        2f64.powi((e - 1) as i32)
    }
}

fn ce_ln_n(p: u32, r: u32) -> f64 {
    2.0 * f64::from(r) * f64::from(p) * std::f64::consts::LN_2
}

fn ce_eps(p: u32, d: u32, r: u32) -> f64 {
    2f64.powf(-(f64::from(r) * f64::from(d) * f64::from(p + 1)) / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyBound {
    pub r: u32,
    pub eps: f64,
    pub k: f64,
    /// ln(1 + 2 r n_r^(d k_r)), evaluated in log space
    pub log_count: f64,
    /// 3 d k_r ln n_r
    pub simplified: f64,
}

/// Entropy bounds at eps_r for the class built from (p, d); valid for any r
/// (no integer overflow, everything in log space).
pub fn counterexample_entropy_bound(p: u32, d: u32, r: u32) -> Result<EntropyBound> {
    if p == 0 || d == 0 || r == 0 {
        return Err(Error::InvalidArgument("need p, d, r >= 1".into()));
    }
    let k = ce_k(p, d, r);
    let ln_n = ce_ln_n(p, r);
    let big = (2.0 * f64::from(r)).ln() + f64::from(d) * k * ln_n;
    let log_count = big + (-big).exp().ln_1p();
    Ok(EntropyBound {
        r,
        eps: ce_eps(p, d, r),
        k,
        log_count,
        simplified: 3.0 * f64::from(d) * k * ln_n,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesTerm {
    pub r: u32,
    pub term: f64,
    pub partial_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleSeries {
    pub p: u32,
    pub d: u32,
    pub terms: Vec<SeriesTerm>,
    /// max over computed r of term_r 2^(rd) / sqrt(r)
    pub majorant_constant: f64,
    /// majorant_constant * sum over r > R of sqrt(r) / 2^(rd)
    pub tail_bound: f64,
}

impl CounterexampleSeries {
    pub fn total(&self) -> f64 {
        self.terms.last().map_or(0.0, |t| t.partial_sum)
    }
}

/// Partial sums of sum_{r=2}^{R} eps_{r-1} sqrt(3 d k_r ln n_r).
pub fn counterexample_series(p: u32, d: u32, last_r: u32) -> Result<CounterexampleSeries> {
    if last_r < 2 {
        return Err(Error::InvalidArgument("series needs R >= 2".into()));
    }
    let mut terms = Vec::new();
    let mut partial = 0.0;
    let mut constant = 0.0f64;
    let dd = f64::from(d);
    for r in 2..=last_r {
        let bound = counterexample_entropy_bound(p, d, r)?;
        let term = ce_eps(p, d, r - 1) * bound.simplified.sqrt();
        partial += term;
        constant = constant.max(term * 2f64.powf(f64::from(r) * dd) / f64::from(r).sqrt());
        terms.push(SeriesTerm {
            r,
            term,
            partial_sum: partial,
        });
    }
    let mut tail = 0.0;
    let mut r = f64::from(last_r) + 1.0;
    loop {
        let inc = r.sqrt() * 2f64.powf(-r * dd);
        tail += inc;
        if inc < 1e-18 * tail.max(1e-300) || inc == 0.0 {
            break;
        }
        r += 1.0;
    }
    Ok(CounterexampleSeries {
        p,
        d,
        terms,
        majorant_constant: constant,
        tail_bound: constant * tail,
    })
}

/// Analytic profile at the radii eps_r, r = 1..=R, with log N = 3 d k_r ln n_r.
pub fn counterexample_profile(p: u32, d: u32, last_r: u32) -> Result<EntropyProfile> {
    let bounds = (1..=last_r)
        .map(|r| counterexample_entropy_bound(p, d, r))
        .collect::<Result<Vec<_>>>()?;
    EntropyProfile::new(
        bounds.iter().map(|b| b.eps).collect(),
        bounds.iter().map(|b| b.simplified).collect(),
        ProfileSource::AnalyticBound,
    )
}
