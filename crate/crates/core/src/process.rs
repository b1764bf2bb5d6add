//! The smoothed partial-sum process and its normalizations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{truncated_second_moment, FieldSample, Law, TruncationPiece};
use crate::regions::{rho_matrix, Region};
use crate::scalar::{compensated_sum, CompensatedSum, Scalar};

/// S_n(A) = sum_i lambda(nA ∩ R_i) X_i, visiting only sites with positive weight.
pub fn partial_sum<T: Scalar>(field: &FieldSample<T>, region: &Region<T>) -> Result<T> {
    let mut acc = CompensatedSum::new();
    region.for_each_weight(&field.lattice, |i, w| acc.add(w * field.values[i]))?;
    Ok(acc.value())
}

/// U_n = sqrt(sum over {1..n}^d of X_i^2).
pub fn self_normalizer<T: Scalar>(field: &FieldSample<T>) -> T {
    compensated_sum(field.values.iter().map(|&x| x * x)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// n^(d/2)
    Standard,
    /// A norming constant b_n.
    Norming(f64),
    /// U_n
    SelfNormalized,
}

impl Normalization {
    pub fn label(&self) -> &'static str {
        match self {
            Normalization::Standard => "standard",
            Normalization::Norming(_) => "norming",
            Normalization::SelfNormalized => "self",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessEvaluation<T> {
    pub regions: Vec<Region<T>>,
    pub raw: Vec<T>,
    pub normalization: Normalization,
    pub divisor: T,
    /// `None` when the divisor vanishes (U_n = 0).
    pub normalized: Vec<Option<T>>,
    /// U_n^2
    pub sum_of_squares: T,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub law: Law,
}

impl<T: Scalar> ProcessEvaluation<T> {
    pub fn normalized_values(&self) -> Result<Vec<T>> {
        self.normalized
            .iter()
            .map(|v| v.ok_or_else(|| Error::Undefined("normalizer vanished (U_n = 0)".into())))
            .collect()
    }
}

pub fn evaluate<T: Scalar>(
    field: &FieldSample<T>,
    regions: &[Region<T>],
    normalization: Normalization,
) -> Result<ProcessEvaluation<T>> {
    let raw = regions
        .iter()
        .map(|a| partial_sum(field, a))
        .collect::<Result<Vec<T>>>()?;
    let sum_of_squares = compensated_sum(field.values.iter().map(|&x| x * x));
    let divisor = match normalization {
        Normalization::Standard => T::from_usize_exact(field.lattice.len()).sqrt(),
        Normalization::Norming(b) => T::from_f64_lossy(b),
        Normalization::SelfNormalized => sum_of_squares.sqrt(),
    };
    let normalized = raw
        .iter()
        .map(|&s| (divisor > T::zero()).then(|| s / divisor))
        .collect();
    Ok(ProcessEvaluation {
        regions: regions.to_vec(),
        raw,
        normalization,
        divisor,
        normalized,
        sum_of_squares,
        d: field.dim(),
        n: field.side(),
        seed: field.seed,
        law: field.law.clone(),
    })
}

/// Fixed point b of b^2 = N E[X^2 1{|X| < b}], N = n^d.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormingConstant {
    pub n: usize,
    pub b: f64,
    /// N E[X^2 1{|X| < b}] at the returned b; use this rather than b*b
    /// when forming ratios so exact cases stay exact.
    pub b_squared: f64,
    /// |b^2 - N E[X^2 1{|X| < b}]| / b^2
    pub residual: f64,
}

/// Above this b, N m(b) / b^2 < 1 for good.
fn envelope_bound(law: &Law, sites: f64) -> Result<f64> {
    Ok(match law {
        Law::ParetoTail { alpha } if *alpha < 2.0 => {
            (sites * alpha / (2.0 - alpha)).powf(1.0 / alpha) * (1.0 + 1e-9) + 1.0
        }
        Law::ParetoTail { alpha } if *alpha == 2.0 => {
            let mut b = std::f64::consts::E.sqrt().max(2.0);
            while 2.0 * sites * b.ln() >= b * b {
                b *= 2.0;
            }
            b
        }
        Law::CounterexampleInteger { p: 1 } => {
            // m(b) <= 2 ln(b + 1)
            let mut b: f64 = 2.0;
            while 2.0 * sites * (b + 1.0).ln() >= b * b {
                b *= 2.0;
            }
            b
        }
        other => {
            let v = other
                .variance()
                .ok_or_else(|| Error::InvalidLaw(format!("no norming constant for {other}")))?;
            if v <= 0.0 {
                return Err(Error::NoNormingConstant("E X^2 = 0".into()));
            }
            (sites * v).sqrt() * (1.0 + 1e-9) + 1e-300
        }
    })
}

/// b_n by bracketed bisection on the largest crossing of
/// N E[X^2 1{|X| < b}] / b^2 = 1, then one fixed-point polish.
pub fn norming_constant(law: &Law, d: usize, n: usize) -> Result<NormingConstant> {
    law.validate()?;
    if !law.is_iid() {
        return Err(Error::InvalidLaw(
            "norming constants need an i.i.d. law".into(),
        ));
    }
    if d == 0 || n == 0 {
        return Err(Error::InvalidLattice { d, n });
    }
    let sites = (n as f64).powi(d as i32);
    let ratio =
        |b: f64| -> f64 { sites * truncated_second_moment(law, b).unwrap_or(0.0) / (b * b) };

    let mut hi = envelope_bound(law, sites)?;
    let floor = hi * 1e-12;
    let step = 2f64.powf(-1.0 / 16.0);
    let mut lo = hi;
    while ratio(lo) < 1.0 {
        hi = lo;
        lo *= step;
        if lo < floor {
            return Err(Error::NoNormingConstant(format!(
                "N E[X^2 1{{|X|<b}}] < b^2 for every b (law {law}, N = {sites})"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ratio(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b_squared = sites * truncated_second_moment(law, lo)?;
    let b = b_squared.sqrt();
    let at_b = sites * truncated_second_moment(law, b)?;
    let residual = (b * b - at_b).abs() / (b * b);
    Ok(NormingConstant {
        n,
        b,
        b_squared: at_b,
        residual,
    })
}

/// Table of b_n over a ladder of side lengths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormingSequence {
    pub law: Law,
    pub d: usize,
    pub table: Vec<NormingConstant>,
}

pub fn norming_sequence(law: &Law, d: usize, ns: &[usize]) -> Result<NormingSequence> {
    let table = ns
        .iter()
        .map(|&n| norming_constant(law, d, n))
        .collect::<Result<_>>()?;
    Ok(NormingSequence {
        law: law.clone(),
        d,
        table,
    })
}

/// Γ_n(A) = nA ∩ {1..n}^d as sorted linear indices.
pub fn gamma_set<T: Scalar>(region: &Region<T>, d: usize, n: usize) -> Result<Vec<usize>> {
    region.check_dim(d)?;
    let lattice = crate::lattice::Lattice::new(d, n)?;
    let mut idx = vec![0usize; d];
    Ok((0..lattice.len())
        .filter(|&l| {
            lattice.coords_into(l, &mut idx);
            region.contains_scaled_point(&idx, n)
        })
        .collect())
}

/// S_n(A) - sum over Γ_n(A) of X_k.
pub fn gamma_discrepancy<T: Scalar>(
    field: &FieldSample<T>,
    region: &Region<T>,
    gamma: &[usize],
) -> Result<T> {
    let s = partial_sum(field, region)?;
    let g = compensated_sum(gamma.iter().map(|&i| field.values[i]));
    Ok(s - g)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TStatistics<T> {
    /// S_Γ / sqrt(sum_Γ X^2); `None` when Γ is empty or X vanishes on Γ.
    pub t1: Option<T>,
    /// sum_Γ X^2 / U_n^2; `None` when U_n = 0.
    pub t2_squared: Option<T>,
}

pub fn t_statistics<T: Scalar>(
    field: &FieldSample<T>,
    region: &Region<T>,
) -> Result<TStatistics<T>> {
    let gamma = gamma_set(region, field.dim(), field.side())?;
    Ok(t_statistics_with(field, &gamma))
}

pub fn t_statistics_with<T: Scalar>(field: &FieldSample<T>, gamma: &[usize]) -> TStatistics<T> {
    let sum = compensated_sum(gamma.iter().map(|&i| field.values[i]));
    let sq = compensated_sum(gamma.iter().map(|&i| field.values[i] * field.values[i]));
    let total = compensated_sum(field.values.iter().map(|&x| x * x));
    TStatistics {
        t1: (sq > T::zero()).then(|| sum / sq.sqrt()),
        t2_squared: (total > T::zero()).then(|| sq / total),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Centering {
    /// E(band | lexicographic past). For independent fields this is the
    /// law mean of the band.
    ConditionalMean,
    /// Unconditional law mean of the band.
    Mean,
    None,
}

/// (1/c) sum_i lambda(nA ∩ R_i) [X_i 1{alpha tau c <= |X_i| < beta tau c} - centering_i].
pub fn truncated_piece_process<T: Scalar>(
    field: &FieldSample<T>,
    region: &Region<T>,
    piece: &TruncationPiece,
    centering: Centering,
) -> Result<T> {
    let (lo, hi) = (piece.lower(), piece.upper());
    let law_mean = match (&field.law, centering) {
        (_, Centering::None) => 0.0,
        (Law::MdBounded { .. }, Centering::ConditionalMean) => {
            if field.scales.is_none() {
                return Err(Error::InvalidArgument(
                    "md field carries no conditional scales".into(),
                ));
            }
            0.0
        }
        (law, _) => law.band_mean(lo, hi),
    };
    let base = match &field.law {
        Law::MdBounded { base, .. } => Some(base.as_ref()),
        _ => None,
    };
    let mut acc = CompensatedSum::new();
    region.for_each_weight(&field.lattice, |i, w| {
        let x = field.values[i];
        let center = match (centering, base, &field.scales) {
            (Centering::ConditionalMean, Some(innov), Some(scales)) => {
                // X = sigma eps with eps independent of the past
                let s = scales[i].to_f64_lossy();
                s * innov.band_mean(lo / s, hi / s)
            }
            _ => law_mean,
        };
        acc.add(w * (piece.select(x) - T::from_f64_lossy(center)));
    })?;
    Ok(acc.value() / T::from_f64_lossy(piece.norming))
}

/// Largest |normalized(A) - normalized(B)| over pairs with rho(A, B) < delta.
pub fn modulus<T: Scalar>(evaluation: &ProcessEvaluation<T>, delta: T) -> Result<T> {
    let rho = rho_matrix(&evaluation.regions)?;
    modulus_with(evaluation, &rho, delta)
}

/// [`modulus`] with a precomputed row-major rho matrix.
pub fn modulus_with<T: Scalar>(
    evaluation: &ProcessEvaluation<T>,
    rho: &[T],
    delta: T,
) -> Result<T> {
    let k = evaluation.regions.len();
    if rho.len() != k * k {
        return Err(Error::InvalidArgument(format!(
            "rho matrix has {} entries for {k} regions",
            rho.len()
        )));
    }
    let values = evaluation.normalized_values()?;
    let mut best = T::zero();
    for i in 0..k {
        for j in i + 1..k {
            if rho[i * k + j] < delta {
                best = best.max((values[i] - values[j]).abs());
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_iid_field, sample_md_field};
    use crate::lattice::Lattice;
    use crate::regions::{adaptive_region, counterexample_params};
    use proptest::prelude::*;

    fn q(t: &[f64]) -> Region<f64> {
        Region::quadrant(t.to_vec()).unwrap()
    }

    fn constant_field(d: usize, n: usize, v: f64) -> FieldSample<f64> {
        let lat = Lattice::new(d, n).unwrap();
        FieldSample::from_values(lat, vec![v; lat.len()], Law::Rademacher, 0).unwrap()
    }

    #[test]
    fn partial_sum_examples() {
        let f: FieldSample<f64> =
            sample_iid_field(&Law::Gaussian { variance: 1.0 }, 2, 8, 1).unwrap();
        assert_eq!(partial_sum(&f, &Region::Empty).unwrap(), 0.0);
        let ones = constant_field(2, 10, 1.0);
        for a in [
            q(&[0.33, 0.71]),
            Region::rect(vec![0.1, 0.2], vec![0.5, 0.95]).unwrap(),
        ] {
            assert!((partial_sum(&ones, &a).unwrap() - 100.0 * a.lebesgue()).abs() < 1e-12);
        }
        assert!(partial_sum(&f, &q(&[0.5])).is_err());
    }

    #[test]
    fn partial_sum_matches_dense_weights() {
        let f: FieldSample<f64> =
            sample_iid_field(&Law::ParetoTail { alpha: 1.5 }, 2, 13, 4).unwrap();
        let a = Region::rect(vec![0.13, 0.0], vec![0.77, 0.61]).unwrap();
        let g = crate::regions::weight_grid(&a, 2, 13).unwrap();
        let dense: f64 = g.weights.iter().zip(&f.values).map(|(w, x)| w * x).sum();
        let sparse = partial_sum(&f, &a).unwrap();
        assert!((dense - sparse).abs() <= 1e-12 * dense.abs().max(1.0));
    }

    #[test]
    fn self_normalizer_examples() {
        let f: FieldSample<f64> = sample_iid_field(&Law::Rademacher, 2, 3, 9).unwrap();
        assert_eq!(self_normalizer(&f), 3.0);
        assert_eq!(self_normalizer(&constant_field(1, 5, 0.0)), 0.0);
        let big: FieldSample<f64> =
            sample_iid_field(&Law::ParetoTail { alpha: 2.0 }, 1, 200, 9).unwrap();
        let small = FieldSample::from_values(
            Lattice::new(1, 100).unwrap(),
            big.values[..100].to_vec(),
            big.law.clone(),
            9,
        )
        .unwrap();
        assert!(self_normalizer(&small) <= self_normalizer(&big));
    }

    #[test]
    fn self_normalized_evaluation_flags_zero_field() {
        let z = constant_field(1, 4, 0.0);
        let ev = evaluate(&z, &[q(&[0.5])], Normalization::SelfNormalized).unwrap();
        assert_eq!(ev.normalized, vec![None]);
        assert!(ev.normalized_values().is_err());
    }

    #[test]
    fn norming_constant_examples() {
        let g = norming_constant(&Law::Gaussian { variance: 1.0 }, 1, 100).unwrap();
        assert!((g.b - 10.0).abs() < 1e-9, "{g:?}");
        assert!(g.residual < 1e-10);
        for (d, n) in [(1, 4), (2, 3), (1, 100_000), (3, 5)] {
            let r = norming_constant(&Law::Rademacher, d, n).unwrap();
            let exact = (n as f64).powi(d as i32);
            assert_eq!(r.b_squared, exact);
            assert!((r.b - exact.sqrt()).abs() <= 1e-12 * exact.sqrt());
        }
        assert!(norming_constant(&Law::Rademacher, 1, 1).is_err());
    }

    #[test]
    fn pareto_norming_matches_log_fixed_point() {
        // b^2 = 2 N ln b exactly at the fixed point
        let law = Law::ParetoTail { alpha: 2.0 };
        let mut prev = 0.0;
        for n in [10usize, 100, 1000, 100_000, 10_000_000] {
            let c = norming_constant(&law, 1, n).unwrap();
            assert!(c.residual < 1e-10, "{c:?}");
            assert!((c.b * c.b / (n as f64 * c.b.ln()) - 2.0).abs() < 1e-9);
            assert!(c.b >= prev);
            prev = c.b;
        }
    }

    #[test]
    fn norming_other_laws() {
        for law in [
            Law::ParetoTail { alpha: 1.5 },
            Law::ParetoTail { alpha: 3.0 },
            Law::CounterexampleInteger { p: 1 },
            Law::CounterexampleInteger { p: 2 },
            Law::Gaussian { variance: 4.0 },
        ] {
            let seq = norming_sequence(&law, 2, &[4, 16, 64]).unwrap();
            for w in seq.table.windows(2) {
                assert!(w[0].b <= w[1].b, "{law}: {:?}", seq.table);
            }
            for c in &seq.table {
                assert!(c.b > 0.0);
                // discontinuous laws may land on a jump; continuous ones must be tight
                if !matches!(law, Law::CounterexampleInteger { .. }) {
                    assert!(c.residual < 1e-10, "{law}: {c:?}");
                }
            }
        }
    }

    #[test]
    fn gamma_set_examples() {
        assert_eq!(gamma_set(&q(&[0.5]), 1, 4).unwrap(), vec![0, 1]);
        assert_eq!(gamma_set(&q(&[1.0, 1.0]), 2, 5).unwrap().len(), 25);
        let a = q(&[0.5, 0.5]);
        let mut prev_err = f64::INFINITY;
        for n in [8usize, 16, 32, 64] {
            let ratio = gamma_set(&a, 2, n).unwrap().len() as f64 / (n * n) as f64;
            let err = (ratio - 0.25).abs();
            assert!(err <= prev_err);
            prev_err = err;
        }
        let cells = Region::<f64>::cells(1, 4, vec![vec![2]]).unwrap();
        // ]1/4, 1/2] scaled by 8 is ]2, 4]
        assert_eq!(gamma_set(&cells, 1, 8).unwrap(), vec![2, 3]);
    }

    #[test]
    fn t_statistics_examples() {
        let f: FieldSample<f64> =
            sample_iid_field(&Law::Gaussian { variance: 1.0 }, 2, 6, 3).unwrap();
        let full = t_statistics(&f, &q(&[1.0, 1.0])).unwrap();
        assert_eq!(full.t2_squared, Some(1.0));
        let ones = constant_field(2, 6, 1.0);
        let a = q(&[0.5, 0.7]);
        let g = gamma_set(&a, 2, 6).unwrap().len() as f64;
        let t = t_statistics(&ones, &a).unwrap();
        assert!((t.t1.unwrap() - g.sqrt()).abs() < 1e-12);
        let none = t_statistics(&ones, &Region::Empty).unwrap();
        assert_eq!(none.t1, None);
    }

    #[test]
    fn truncated_piece_examples() {
        let f: FieldSample<f64> = sample_iid_field(&Law::Rademacher, 1, 32, 2).unwrap();
        let a = q(&[0.6]);
        let empty = TruncationPiece::new(1.0, 2.0, 0.4, 0.4).unwrap();
        assert_eq!(
            truncated_piece_process(&f, &a, &empty, Centering::Mean).unwrap(),
            0.0
        );
        let full = TruncationPiece::plain(1.0, 2.0).unwrap();
        let z = truncated_piece_process(&f, &a, &full, Centering::Mean).unwrap();
        assert!((z - partial_sum(&f, &a).unwrap() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn md_conditional_centering() {
        let md = Law::MdBounded {
            base: Box::new(Law::Gaussian { variance: 1.0 }),
            amplitude: 0.5,
            window: 1,
        };
        let f: FieldSample<f64> = sample_md_field(&md, 2, 16, 2).unwrap();
        let a = q(&[0.7, 0.4]);
        let piece = TruncationPiece::new(1.0, 4.0, 0.1, 0.8).unwrap();
        let c = truncated_piece_process(&f, &a, &piece, Centering::ConditionalMean).unwrap();
        let m = truncated_piece_process(&f, &a, &piece, Centering::Mean).unwrap();
        assert!((c - m).abs() < 1e-12);
        let mut stripped = f.clone();
        stripped.scales = None;
        assert!(
            truncated_piece_process(&stripped, &a, &piece, Centering::ConditionalMean).is_err()
        );
    }

    #[test]
    fn modulus_examples() {
        let f: FieldSample<f64> =
            sample_iid_field(&Law::Gaussian { variance: 1.0 }, 1, 64, 6).unwrap();
        let single = evaluate(&f, &[q(&[0.3])], Normalization::Standard).unwrap();
        assert_eq!(modulus(&single, 1.0).unwrap(), 0.0);
        let regions = vec![q(&[0.1]), q(&[0.4]), q(&[0.9])];
        let ev = evaluate(&f, &regions, Normalization::Standard).unwrap();
        let v = ev.normalized_values().unwrap();
        let all = (v[0] - v[1])
            .abs()
            .max((v[0] - v[2]).abs())
            .max((v[1] - v[2]).abs());
        assert_eq!(modulus(&ev, 2.0).unwrap(), all);
        // only the pair (0.1, 0.4) has rho = sqrt(0.3) < 0.6
        assert_eq!(modulus(&ev, 0.6).unwrap(), (v[0] - v[1]).abs());
    }

    #[test]
    fn counterexample_bound_on_w_r() {
        let params = counterexample_params(1, 1, 3).unwrap();
        let law = Law::CounterexampleInteger { p: 1 };
        let mut hit = 0;
        for seed in 0..200 {
            let f: FieldSample<f64> = sample_iid_field(&law, 1, params.n as usize, seed).unwrap();
            if let Some(a) = adaptive_region(&f, &params).unwrap() {
                hit += 1;
                let ev = evaluate(&f, &[Region::Empty, a], Normalization::Standard).unwrap();
                assert!(ev.normalized[1].unwrap() >= 0.5);
                // rho(A_r, empty) = sqrt(k_r / n_r) = eps_r here, so the window must exceed eps_r
                assert!(modulus(&ev, 2.0 * params.eps).unwrap() >= 0.5);
                assert_eq!(modulus(&ev, params.eps).unwrap(), 0.0);
            }
        }
        assert!(hit > 0);
    }

    #[test]
    fn compensated_sum_order_insensitive() {
        let f: FieldSample<f64> =
            sample_iid_field(&Law::ParetoTail { alpha: 1.2 }, 2, 64, 77).unwrap();
        let a = q(&[0.77, 0.93]);
        let fwd = partial_sum(&f, &a).unwrap();
        let g = crate::regions::weight_grid(&a, 2, 64).unwrap();
        let rev = compensated_sum(g.weights.iter().zip(&f.values).rev().map(|(w, x)| w * x));
        assert!((fwd - rev).abs() <= 1e-9 * fwd.abs().max(1.0));
    }

    #[test]
    fn f32_path_tracks_f64() {
        let f64f: FieldSample<f64> =
            sample_iid_field(&Law::Gaussian { variance: 1.0 }, 2, 32, 5).unwrap();
        let f32f: FieldSample<f32> =
            sample_iid_field(&Law::Gaussian { variance: 1.0 }, 2, 32, 5).unwrap();
        let a64 = q(&[0.5, 0.25]);
        let a32 = Region::<f32>::quadrant(vec![0.5, 0.25]).unwrap();
        let s64 = partial_sum(&f64f, &a64).unwrap();
        let s32 = partial_sum(&f32f, &a32).unwrap();
        assert!((f64::from(s32) - s64).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn additive_over_disjoint_cell_unions(seed in 0u64..1000, split in 1usize..15) {
            let f: FieldSample<f64> = sample_iid_field(&Law::Gaussian { variance: 1.0 }, 1, 24, seed).unwrap();
            let left: Vec<Vec<usize>> = (1..=split).map(|c| vec![c]).collect();
            let right: Vec<Vec<usize>> = (split + 1..=16).map(|c| vec![c]).collect();
            let all: Vec<Vec<usize>> = (1..=16).map(|c| vec![c]).collect();
            let s = |cells| partial_sum(&f, &Region::cells(1, 16, cells).unwrap()).unwrap();
            let (l, r, t) = (s(left), s(right), s(all));
            prop_assert!((l + r - t).abs() < 1e-10);
        }

        #[test]
        fn scale_equivariance(seed in 0u64..500, s in prop_oneof![0.001f64..0.1, 2.0f64..1e4, -100.0f64..-0.5]) {
            let f: FieldSample<f64> = sample_iid_field(&Law::ParetoTail { alpha: 2.0 }, 1, 128, seed).unwrap();
            let g = f.scaled(s);
            let a = q(&[0.5]);
            let raw = partial_sum(&f, &a).unwrap();
            prop_assert!((partial_sum(&g, &a).unwrap() - s * raw).abs() <= 1e-12 * (s * raw).abs().max(1e-300) + 1e-12);
            let t = t_statistics(&f, &a).unwrap();
            let ts = t_statistics(&g, &a).unwrap();
            prop_assert!((ts.t2_squared.unwrap() - t.t2_squared.unwrap()).abs() < 1e-12);
            prop_assert!((ts.t1.unwrap() - s.signum() * t.t1.unwrap()).abs() < 1e-12 * t.t1.unwrap().abs().max(1.0));
            let u = evaluate(&f, std::slice::from_ref(&a), Normalization::SelfNormalized).unwrap().normalized[0].unwrap();
            let us = evaluate(&g, &[a], Normalization::SelfNormalized).unwrap().normalized[0].unwrap();
            prop_assert!((us - s.signum() * u).abs() < 1e-12);
        }

        #[test]
        fn piece_telescopes(seed in 0u64..300, split in 0.0f64..1.0) {
            let f: FieldSample<f64> = sample_iid_field(&Law::ParetoTail { alpha: 1.0 }, 2, 16, seed).unwrap();
            let a = q(&[0.6, 0.8]);
            let c = 16.0;
            let p = |lo, hi| truncated_piece_process(&f, &a, &TruncationPiece::new(0.5, c, lo, hi).unwrap(), Centering::Mean).unwrap();
            prop_assert!((p(0.0, split) + p(split, 1.0) - p(0.0, 1.0)).abs() < 1e-10);
        }
    }
}
