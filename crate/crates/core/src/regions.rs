//! Subsets of [0,1]^d: Lebesgue measure, the smoothing weights
//! lambda(nA ∩ R_i), the pseudo-metric rho and the counter-example class.
//!
//! R_i = ]i_1 - 1, i_1] x ... x ]i_d - 1, i_d] is the unit cube with upper
//! corner at i. Quadrants and boxes are closed; the cells of a
//! [`CellUnion`] are half-open like R_i.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSample;
use crate::lattice::Lattice;
use crate::scalar::{compensated_sum, Scalar};

/// Union of distinct cells ](c-1)/m, c/m] at resolution m.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellUnion {
    dim: usize,
    resolution: usize,
    cells: Vec<Vec<usize>>,
}

impl CellUnion {
    pub fn new(dim: usize, resolution: usize, cells: Vec<Vec<usize>>) -> Result<Self> {
        if dim == 0 || resolution == 0 {
            return Err(Error::InvalidRegion(
                "cell union needs d >= 1 and m >= 1".into(),
            ));
        }
        for c in &cells {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                });
            }
            if c.iter().any(|&x| x == 0 || x > resolution) {
                return Err(Error::InvalidRegion(format!(
                    "cell {c:?} outside 1..={resolution}"
                )));
            }
        }
        let distinct: BTreeSet<&Vec<usize>> = cells.iter().collect();
        if distinct.len() != cells.len() {
            return Err(Error::InvalidRegion(
                "cell union cells must be distinct".into(),
            ));
        }
        Ok(Self {
            dim,
            resolution,
            cells,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Region<T> {
    Empty,
    /// [0, t_1] x ... x [0, t_d]
    Quadrant(Vec<T>),
    /// [l_1, u_1] x ... x [l_d, u_d]
    Box {
        lower: Vec<T>,
        upper: Vec<T>,
    },
    Cells(CellUnion),
}

/// Axis-aligned box given by its lower and upper corners, in whatever
/// units the caller works in.
#[derive(Clone, Debug, PartialEq)]
struct Rect<T> {
    lo: Vec<T>,
    hi: Vec<T>,
}

impl<T: Scalar> Rect<T> {
    fn volume(&self) -> T {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| (h - l).max(T::zero()))
            .fold(T::one(), |a, b| a * b)
    }

    fn overlap(&self, other: &Rect<T>) -> T {
        let mut v = T::one();
        for k in 0..self.lo.len() {
            let w = self.hi[k].min(other.hi[k]) - self.lo[k].max(other.lo[k]);
            if w <= T::zero() {
                return T::zero();
            }
            v = v * w;
        }
        v
    }
}

fn unit_interval<T: Scalar>(x: T) -> bool {
    x >= T::zero() && x <= T::one()
}

impl<T: Scalar> Region<T> {
    pub fn quadrant(t: Vec<T>) -> Result<Self> {
        if t.is_empty() || !t.iter().all(|&x| unit_interval(x)) {
            return Err(Error::InvalidRegion(format!(
                "quadrant corner {t:?} must lie in [0,1]^d"
            )));
        }
        Ok(Region::Quadrant(t))
    }

    pub fn rect(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty()
            || !lower.iter().chain(&upper).all(|&x| unit_interval(x))
            || lower.iter().zip(&upper).any(|(l, u)| l > u)
        {
            return Err(Error::InvalidRegion(format!(
                "box {lower:?}..{upper:?} must satisfy 0 <= l <= u <= 1"
            )));
        }
        Ok(Region::Box { lower, upper })
    }

    pub fn cells(dim: usize, resolution: usize, cells: Vec<Vec<usize>>) -> Result<Self> {
        Ok(Region::Cells(CellUnion::new(dim, resolution, cells)?))
    }

    /// `None` for the empty set, which is compatible with every dimension.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Region::Empty => None,
            Region::Quadrant(t) => Some(t.len()),
            Region::Box { lower, .. } => Some(lower.len()),
            Region::Cells(c) => Some(c.dim),
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self.dim() {
            Some(k) if k != d => Err(Error::DimensionMismatch {
                expected: d,
                got: k,
            }),
            _ => Ok(()),
        }
    }

    /// Rectangles (pairwise disjoint up to null sets) whose union is the
    /// region, in unit coordinates scaled by `scale` (use 1 for [0,1]^d).
    fn rects(&self, scale: usize) -> Vec<Rect<T>> {
        let s = T::from_usize_exact(scale);
        match self {
            Region::Empty => Vec::new(),
            Region::Quadrant(t) => vec![Rect {
                lo: vec![T::zero(); t.len()],
                hi: t.iter().map(|&x| s * x).collect(),
            }],
            Region::Box { lower, upper } => vec![Rect {
                lo: lower.iter().map(|&x| s * x).collect(),
                hi: upper.iter().map(|&x| s * x).collect(),
            }],
            Region::Cells(u) => {
                let m = T::from_usize_exact(u.resolution);
                // (c-1)·scale/m: integer product first, so the bound is exact
                // whenever m divides it
                u.cells
                    .iter()
                    .map(|c| Rect {
                        lo: c
                            .iter()
                            .map(|&x| T::from_usize_exact((x - 1) * scale) / m)
                            .collect(),
                        hi: c
                            .iter()
                            .map(|&x| T::from_usize_exact(x * scale) / m)
                            .collect(),
                    })
                    .collect()
            }
        }
    }

    /// Exact Lebesgue measure.
    pub fn lebesgue(&self) -> T {
        match self {
            Region::Empty => T::zero(),
            Region::Cells(u) => {
                T::from_usize_exact(u.cells.len())
                    / T::from_usize_exact(u.resolution).powi(u.dim as i32)
            }
            _ => self
                .rects(1)
                .iter()
                .map(Rect::volume)
                .fold(T::zero(), |a, b| a + b),
        }
    }

    /// lambda(A ∩ B).
    pub fn intersection_measure(&self, other: &Region<T>) -> Result<T> {
        if let (Some(a), Some(b)) = (self.dim(), other.dim()) {
            if a != b {
                return Err(Error::DimensionMismatch {
                    expected: a,
                    got: b,
                });
            }
        }
        Ok(match (self, other) {
            (Region::Empty, _) | (_, Region::Empty) => T::zero(),
            (Region::Cells(a), Region::Cells(b)) if a.resolution == b.resolution => {
                let (small, large) = if a.cells.len() <= b.cells.len() {
                    (a, b)
                } else {
                    (b, a)
                };
                let lookup: BTreeSet<&Vec<usize>> = large.cells.iter().collect();
                let common = small.cells.iter().filter(|c| lookup.contains(c)).count();
                T::from_usize_exact(common) / T::from_usize_exact(a.resolution).powi(a.dim as i32)
            }
            _ => {
                let ra = self.rects(1);
                let rb = other.rects(1);
                compensated_sum(ra.iter().flat_map(|x| rb.iter().map(move |y| x.overlap(y))))
            }
        })
    }

    /// Calls `f(linear_index, lambda(nA ∩ R_i))` for every site with a
    /// positive weight. Sites covered by several cells of a cell union at a
    /// resolution different from `n` are reported once per cell.
    pub fn for_each_weight(&self, lattice: &Lattice, mut f: impl FnMut(usize, T)) -> Result<()> {
        self.check_dim(lattice.dim())?;
        let n = lattice.side();
        let d = lattice.dim();
        let mut axis_weights: Vec<Vec<T>> = vec![Vec::new(); d];
        let mut ranges = vec![(0usize, 0usize); d];
        for rect in self.rects(n) {
            let mut empty = false;
            for k in 0..d {
                let (lo, hi) = (rect.lo[k], rect.hi[k]);
                if hi <= lo {
                    empty = true;
                    break;
                }
                let first = (lo.floor().to_f64_lossy() as usize + 1).max(1);
                let last = (hi.ceil().to_f64_lossy() as usize).min(n);
                if first > last {
                    empty = true;
                    break;
                }
                ranges[k] = (first, last);
                axis_weights[k].clear();
                for i in first..=last {
                    let upper = T::from_usize_exact(i);
                    let w = hi.min(upper) - lo.max(upper - T::one());
                    axis_weights[k].push(w.max(T::zero()).min(T::one()));
                }
            }
            if empty {
                continue;
            }
            lattice.for_each_in_ranges(&ranges, |linear, idx| {
                let mut w = T::one();
                for k in 0..d {
                    w = w * axis_weights[k][idx[k] - ranges[k].0];
                }
                if w > T::zero() {
                    f(linear, w);
                }
            });
        }
        Ok(())
    }

    /// Whether the lattice point i (1-based) lies in nA.
    pub fn contains_scaled_point(&self, i: &[usize], n: usize) -> bool {
        let nf = T::from_usize_exact(n);
        match self {
            Region::Empty => false,
            Region::Quadrant(t) => i
                .iter()
                .zip(t)
                .all(|(&c, &tj)| T::from_usize_exact(c) <= nf * tj),
            Region::Box { lower, upper } => {
                i.iter().zip(lower.iter().zip(upper)).all(|(&c, (&l, &u))| {
                    let c = T::from_usize_exact(c);
                    c >= nf * l && c <= nf * u
                })
            }
            // (c-1)/m < i/n <= c/m, in integers
            Region::Cells(u) => u.cells.iter().any(|cell| {
                cell.iter()
                    .zip(i)
                    .all(|(&c, &x)| (c - 1) * n < x * u.resolution && x * u.resolution <= c * n)
            }),
        }
    }
}

/// Dense smoothing weights w_i = lambda(nA ∩ R_i).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightGrid<T> {
    pub lattice: Lattice,
    pub weights: Vec<T>,
}

impl<T: Scalar> WeightGrid<T> {
    pub fn total(&self) -> T {
        compensated_sum(self.weights.iter().copied())
    }
}

pub fn lebesgue<T: Scalar>(region: &Region<T>) -> T {
    region.lebesgue()
}

pub fn weight_grid<T: Scalar>(region: &Region<T>, d: usize, n: usize) -> Result<WeightGrid<T>> {
    let lattice = Lattice::new(d, n)?;
    let mut weights = vec![T::zero(); lattice.len()];
    region.for_each_weight(&lattice, |i, w| weights[i] = weights[i] + w)?;
    Ok(WeightGrid { lattice, weights })
}

/// rho(A, B) = sqrt(lambda(A Δ B)).
pub fn rho<T: Scalar>(a: &Region<T>, b: &Region<T>) -> Result<T> {
    let two = T::one() + T::one();
    let sym = a.lebesgue() + b.lebesgue() - two * a.intersection_measure(b)?;
    Ok(sym.max(T::zero()).sqrt())
}

/// Pairwise rho matrix, row-major.
pub fn rho_matrix<T: Scalar>(class: &[Region<T>]) -> Result<Vec<T>> {
    use rayon::prelude::*;
    let k = class.len();
    let rows: Result<Vec<Vec<T>>> = (0..k)
        .into_par_iter()
        .map(|i| (0..k).map(|j| rho(&class[i], &class[j])).collect())
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

impl<T: Scalar> fmt::Display for Region<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[T]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            Region::Empty => write!(f, "empty"),
            Region::Quadrant(t) => write!(f, "quadrant:{}", join(t)),
            Region::Box { lower, upper } => write!(f, "box:{}:{}", join(lower), join(upper)),
            Region::Cells(u) => {
                write!(f, "cells:m={}:d={}:[", u.resolution, u.dim)?;
                for (k, c) in u.cells.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    let inner: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                    write!(f, "({})", inner.join(","))?;
                }
                write!(f, "]")
            }
        }
    }
}

impl<T: Scalar + FromStr> FromStr for Region<T> {
    type Err = Error;

    /// Grammar: `empty`, `quadrant:t1,..,td`, `box:l1,..,ld:u1,..,ud`,
    /// `cells:m=<m>:[(i1,..,id),...]` (an optional `d=<d>:` segment after
    /// the resolution fixes the dimension of an empty cell list).
    fn from_str(s: &str) -> Result<Self> {
        let syntax = |reason: &str| Error::RegionSyntax {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let list = |txt: &str| -> Result<Vec<T>> {
            txt.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<T>()
                        .map_err(|_| syntax("expected a comma-separated list of reals"))
                })
                .collect()
        };
        let s_trim = s.trim();
        if s_trim == "empty" {
            return Ok(Region::Empty);
        }
        let (kind, rest) = s_trim
            .split_once(':')
            .ok_or_else(|| syntax("missing `kind:` prefix"))?;
        match kind {
            "quadrant" => Region::quadrant(list(rest)?),
            "box" => {
                let (l, u) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax("expected box:lower:upper"))?;
                Region::rect(list(l)?, list(u)?)
            }
            "cells" => {
                let (m, mut rest) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax("expected cells:m=<m>:[...]"))?;
                let m: usize = m
                    .trim()
                    .strip_prefix("m=")
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(|| syntax("expected m=<resolution>"))?;
                let mut dim = None;
                if let Some(after) = rest.trim().strip_prefix("d=") {
                    let (dtxt, r) = after
                        .split_once(':')
                        .ok_or_else(|| syntax("expected d=<d>:[...]"))?;
                    dim = Some(
                        dtxt.trim()
                            .parse::<usize>()
                            .map_err(|_| syntax("bad dimension"))?,
                    );
                    rest = r;
                }
                let body = rest
                    .trim()
                    .strip_prefix('[')
                    .and_then(|x| x.strip_suffix(']'))
                    .ok_or_else(|| syntax("cell list must be bracketed"))?
                    .trim();
                let mut cells = Vec::new();
                let mut remaining = body;
                while !remaining.is_empty() {
                    let open = remaining
                        .strip_prefix('(')
                        .ok_or_else(|| syntax("expected `(`"))?;
                    let (inner, after) =
                        open.split_once(')').ok_or_else(|| syntax("unclosed `(`"))?;
                    let cell: Vec<usize> = inner
                        .split(',')
                        .map(|x| {
                            x.trim()
                                .parse()
                                .map_err(|_| syntax("cell indices must be positive integers"))
                        })
                        .collect::<Result<_>>()?;
                    cells.push(cell);
                    remaining = after.trim_start();
                    if let Some(r) = remaining.strip_prefix(',') {
                        remaining = r.trim_start();
                    }
                }
                let dim = match (dim, cells.first()) {
                    (Some(d), _) => d,
                    (None, Some(c)) => c.len(),
                    (None, None) => return Err(syntax("empty cell list needs d=<d>")),
                };
                Region::cells(dim, m, cells)
            }
            _ => Err(syntax("unknown region kind")),
        }
    }
}

impl<T: Scalar + FromStr> TryFrom<String> for Region<T> {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl<T: Scalar> From<Region<T>> for String {
    fn from(r: Region<T>) -> String {
        r.to_string()
    }
}

impl<T: Scalar> Serialize for Region<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de, T: Scalar + FromStr> Deserialize<'de> for Region<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parameters of the non-tightness construction for a given (p, d, r).
///
/// n_r = 4^(rp), beta_r = 2^(rd), eps_r = 2^(-rd(p+1)/2) and
/// k_r = ceil(n_r^d beta_r^(-p-1) / 2), the expected number of sites with
/// X_i >= beta_r under the symmetric integer law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CounterexampleParams {
    pub p: u32,
    pub d: u32,
    pub r: u32,
    pub n: u64,
    pub beta: u64,
    pub k: u64,
    pub eps: f64,
    /// n_r^d
    pub sites: u64,
}

impl CounterexampleParams {
    pub fn new(p: u32, d: u32, r: u32) -> Result<Self> {
        if p == 0 || d == 0 || r == 0 {
            return Err(Error::InvalidArgument(
                "counter-example needs p, d, r >= 1".into(),
            ));
        }
        let (p64, d64, r64) = (u64::from(p), u64::from(d), u64::from(r));
        // n_r^d = 2^(2rpd) must fit in a u64 lattice
        let site_bits = 2 * r64 * p64 * d64;
        if site_bits > 62 {
            return Err(Error::ParameterOverflow(format!(
                "n_r^d = 2^{site_bits} for p={p}, d={d}, r={r}; need 2rpd <= 62 (try smaller r)"
            )));
        }
        let n = 1u64 << (2 * r64 * p64);
        let beta = 1u64 << (r64 * d64);
        let k_exp = r64 * d64 * (p64 - 1);
        let k = if k_exp == 0 { 1 } else { 1u64 << (k_exp - 1) };
        let eps = 2f64.powf(-((r64 * d64 * (p64 + 1)) as f64) / 2.0);
        Ok(Self {
            p,
            d,
            r,
            n,
            beta,
            k,
            eps,
            sites: 1u64 << site_bits,
        })
    }

    /// P(X_0 >= beta_r) = beta_r^(-p-1) / 2.
    pub fn exceedance_probability(&self) -> f64 {
        0.5 * (self.beta as f64).powi(-(self.p as i32 + 1))
    }

    /// lambda(A_r(omega)) = k_r / n_r^d.
    pub fn bad_set_measure(&self) -> f64 {
        self.k as f64 / self.sites as f64
    }

    /// n_r^(-d/2) k_r beta_r, the guaranteed value of the normalized
    /// partial sum on W_r.
    pub fn guaranteed_level(&self) -> f64 {
        self.k as f64 * self.beta as f64 / (self.sites as f64).sqrt()
    }
}

pub fn counterexample_params(p: u32, d: u32, r: u32) -> Result<CounterexampleParams> {
    CounterexampleParams::new(p, d, r)
}

/// A_r(omega): the union of the cells of the first k_r sites (lexicographic
/// order) with X_i >= beta_r, or `None` when fewer than k_r sites exceed.
pub fn adaptive_region<T: Scalar>(
    field: &FieldSample<T>,
    params: &CounterexampleParams,
) -> Result<Option<Region<T>>> {
    if field.dim() != params.d as usize {
        return Err(Error::DimensionMismatch {
            expected: params.d as usize,
            got: field.dim(),
        });
    }
    if field.side() as u64 != params.n {
        return Err(Error::InvalidArgument(format!(
            "field side {} differs from n_r = {}",
            field.side(),
            params.n
        )));
    }
    let beta = T::from_u64(params.beta).expect("beta fits the scalar");
    let k = params.k as usize;
    let hits: Vec<usize> = field
        .values
        .iter()
        .enumerate()
        .filter(|(_, &x)| x >= beta)
        .map(|(i, _)| i)
        .take(k)
        .collect();
    if hits.len() < k {
        return Ok(None);
    }
    let cells = hits.into_iter().map(|i| field.lattice.coords(i)).collect();
    Ok(Some(Region::cells(field.dim(), field.side(), cells)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassSpec {
    /// All quadrants with corners on the grid {0, 1/m, ..., 1}^d.
    QuadrantGrid { m: usize, d: usize },
    /// All unions of exactly k distinct cells at resolution m.
    CellUnions { m: usize, k: usize, d: usize },
}

impl ClassSpec {
    /// Exact class size as a float (may exceed any integer type).
    pub fn count(&self) -> f64 {
        match *self {
            ClassSpec::QuadrantGrid { m, d } => ((m + 1) as f64).powi(d as i32),
            ClassSpec::CellUnions { m, k, d } => {
                let total = (m as f64).powi(d as i32);
                binomial_f64(total, k as f64)
            }
        }
    }
}

fn binomial_f64(n: f64, k: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    let mut i = 0.0;
    while i < k {
        acc = acc * (n - i) / (i + 1.0);
        i += 1.0;
    }
    acc.round()
}

pub const DEFAULT_CLASS_CAP: usize = 100_000;

/// Enumerates a finite class in a deterministic (lexicographic) order.
pub fn class_enumerate<T: Scalar>(spec: ClassSpec, cap: usize) -> Result<Vec<Region<T>>> {
    let count = spec.count();
    if count > cap as f64 {
        return Err(Error::CombinatorialExplosion { count, cap });
    }
    match spec {
        ClassSpec::QuadrantGrid { m, d } => {
            if m == 0 || d == 0 {
                return Err(Error::InvalidArgument(
                    "quadrant grid needs m, d >= 1".into(),
                ));
            }
            let lat = Lattice::new(d, m + 1)?;
            let mf = T::from_usize_exact(m);
            (0..lat.len())
                .map(|l| {
                    Region::quadrant(
                        lat.coords(l)
                            .into_iter()
                            .map(|c| T::from_usize_exact(c - 1) / mf)
                            .collect(),
                    )
                })
                .collect()
        }
        ClassSpec::CellUnions { m, k, d } => {
            let lat = Lattice::new(d, m)?;
            let total = lat.len();
            if k == 0 || k > total {
                return Err(Error::InvalidArgument(format!(
                    "need 1 <= k <= m^d = {total}"
                )));
            }
            let mut out = Vec::with_capacity(count as usize);
            let mut pick: Vec<usize> = (0..k).collect();
            loop {
                let cells = pick.iter().map(|&l| lat.coords(l)).collect();
                out.push(Region::cells(d, m, cells)?);
                // next k-combination in lexicographic order
                let mut pos = k;
                loop {
                    if pos == 0 {
                        return Ok(out);
                    }
                    pos -= 1;
                    if pick[pos] < total - k + pos {
                        pick[pos] += 1;
                        for j in pos + 1..k {
                            pick[j] = pick[j - 1] + 1;
                        }
                        break;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Law;
    use proptest::prelude::*;

    fn q(t: &[f64]) -> Region<f64> {
        Region::quadrant(t.to_vec()).unwrap()
    }

    #[test]
    fn lebesgue_examples() {
        assert_eq!(q(&[1.0, 1.0, 1.0]).lebesgue(), 1.0);
        let c = Region::<f64>::cells(1, 4, vec![vec![1], vec![2], vec![4]]).unwrap();
        assert_eq!(c.lebesgue(), 0.75);
        let b: Region<f64> = Region::rect(vec![0.2, 0.2], vec![0.7, 0.9]).unwrap();
        assert!((b.lebesgue() - 0.35).abs() < 1e-15);
        assert_eq!(Region::<f64>::Empty.lebesgue(), 0.0);
    }

    #[test]
    fn weight_examples() {
        for n in [1, 3, 8] {
            let g = weight_grid(&q(&[1.0, 1.0]), 2, n).unwrap();
            assert!(g.weights.iter().all(|&w| w == 1.0));
        }
        let g = weight_grid(&q(&[0.6]), 1, 4).unwrap();
        let expect = [1.0, 1.0, 0.4, 0.0];
        for (w, e) in g.weights.iter().zip(expect) {
            assert!((w - e).abs() < 1e-12, "{:?}", g.weights);
        }
    }

    #[test]
    fn cell_union_at_native_resolution_is_an_indicator() {
        let cells = vec![vec![1, 2], vec![3, 3], vec![16, 1]];
        let a = Region::<f64>::cells(2, 16, cells.clone()).unwrap();
        let g = weight_grid(&a, 2, 16).unwrap();
        for (l, &w) in g.weights.iter().enumerate() {
            let inside = cells.contains(&g.lattice.coords(l));
            assert_eq!(w, if inside { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn cell_union_at_finer_lattice() {
        // one cell at m=2 covers 2x2 sites of an n=4 lattice
        let a = Region::<f64>::cells(2, 2, vec![vec![2, 1]]).unwrap();
        let g = weight_grid(&a, 2, 4).unwrap();
        let ones: Vec<Vec<usize>> = (0..16)
            .filter(|&l| g.weights[l] == 1.0)
            .map(|l| g.lattice.coords(l))
            .collect();
        assert_eq!(ones, vec![vec![3, 1], vec![3, 2], vec![4, 1], vec![4, 2]]);
        assert_eq!(g.total(), 4.0);
    }

    #[test]
    fn rho_examples() {
        let a = q(&[0.3, 0.8]);
        assert_eq!(rho(&a, &a).unwrap(), 0.0);
        assert!((rho(&q(&[0.25]), &q(&[0.5])).unwrap() - 0.5).abs() < 1e-15);
        assert!((rho(&q(&[0.5, 1.0]), &q(&[1.0, 1.0])).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(rho(&q(&[0.5]), &q(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn mixed_shapes_intersect_exactly() {
        let cells = Region::<f64>::cells(1, 4, vec![vec![2], vec![3]]).unwrap();
        // [0.25, 0.75] ∩ [0, 0.6] = 0.35
        assert!((cells.intersection_measure(&q(&[0.6])).unwrap() - 0.35).abs() < 1e-15);
        // different resolutions: [1/4,3/4] ∩ ]1/2,1] = 1/4
        let other = Region::<f64>::cells(1, 2, vec![vec![2]]).unwrap();
        assert!((cells.intersection_measure(&other).unwrap() - 0.25).abs() < 1e-15);
        let b: Region<f64> = Region::rect(vec![0.1], vec![0.3]).unwrap();
        assert!((b.intersection_measure(&q(&[0.2])).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn quadrant_weights_match_numerical_integration() {
        // midpoint rule with 10^3 points per axis on each unit cube, d=1 and d=2
        let n = 7;
        let t = [0.437, 0.81];
        let g = weight_grid(&q(&t), 2, n).unwrap();
        let pts = 1000;
        for l in 0..g.lattice.len() {
            let c = g.lattice.coords(l);
            let mut axis = [0.0; 2];
            for k in 0..2 {
                let lo = (c[k] - 1) as f64;
                let inside = (0..pts)
                    .filter(|&j| lo + (j as f64 + 0.5) / pts as f64 <= n as f64 * t[k])
                    .count();
                axis[k] = inside as f64 / pts as f64;
            }
            assert!((g.weights[l] - axis[0] * axis[1]).abs() < 1e-3);
        }
    }

    #[test]
    fn class_enumeration_examples() {
        let quads: Vec<Region<f64>> =
            class_enumerate(ClassSpec::QuadrantGrid { m: 4, d: 1 }, DEFAULT_CLASS_CAP).unwrap();
        assert_eq!(quads.len(), 5);
        for (j, r) in quads.iter().enumerate() {
            assert_eq!(*r, q(&[j as f64 / 4.0]));
        }
        let cu: Vec<Region<f64>> = class_enumerate(
            ClassSpec::CellUnions { m: 2, k: 1, d: 1 },
            DEFAULT_CLASS_CAP,
        )
        .unwrap();
        assert_eq!(cu.len(), 2);
        let spec = ClassSpec::CellUnions { m: 16, k: 2, d: 2 };
        assert_eq!(spec.count(), 32640.0);
        let big: Vec<Region<f64>> = class_enumerate(spec, DEFAULT_CLASS_CAP).unwrap();
        assert_eq!(big.len(), 32640);
        let distinct: BTreeSet<String> = big.iter().map(|r| r.to_string()).collect();
        assert_eq!(distinct.len(), 32640);
        let err =
            class_enumerate::<f64>(ClassSpec::CellUnions { m: 64, k: 3, d: 1 }, 1000).unwrap_err();
        assert_eq!(
            err,
            Error::CombinatorialExplosion {
                count: 41664.0,
                cap: 1000
            }
        );
    }

    #[test]
    fn counterexample_parameter_examples() {
        let a = counterexample_params(1, 1, 3).unwrap();
        assert_eq!((a.n, a.beta, a.k), (64, 8, 1));
        assert_eq!(a.eps, 0.125);
        let b = counterexample_params(2, 1, 1).unwrap();
        assert_eq!((b.n, b.beta, b.k), (16, 2, 1));
        assert!((b.eps - 2f64.powf(-1.5)).abs() < 1e-15);
        let c = counterexample_params(1, 2, 2).unwrap();
        assert_eq!((c.n, c.beta, c.k), (16, 16, 1));
        assert_eq!(c.eps, 1.0 / 16.0);
        assert!(matches!(
            counterexample_params(2, 2, 8),
            Err(Error::ParameterOverflow(_))
        ));
        // k_r = ceil(n^d beta^{-p-1} / 2) for a case where the ceiling is inactive
        let e = counterexample_params(3, 1, 2).unwrap();
        assert_eq!(
            e.k as f64,
            (e.sites as f64) * (e.beta as f64).powi(-4) / 2.0
        );
    }

    #[test]
    fn guaranteed_level_is_at_least_half() {
        for p in 1..=3 {
            for d in 1..=2 {
                for r in 1..=4 {
                    if let Ok(c) = counterexample_params(p, d, r) {
                        assert!(c.guaranteed_level() >= 0.5, "{c:?}");
                        // eps_r^2 = 2 k_r / n_r^d unless the ceiling kicked in
                        assert!(c.bad_set_measure() <= c.eps * c.eps);
                    }
                }
            }
        }
    }

    #[test]
    fn adaptive_region_examples() {
        let params = counterexample_params(1, 1, 2).unwrap();
        let lat = Lattice::new(1, 16).unwrap();
        let zeros = FieldSample::from_values(
            lat,
            vec![1.0f64; 16],
            Law::CounterexampleInteger { p: 1 },
            0,
        )
        .unwrap();
        assert_eq!(adaptive_region(&zeros, &params).unwrap(), None);
        let mut vals = vec![1.0f64; 16];
        vals[5] = 4.0;
        vals[9] = 7.0;
        let f =
            FieldSample::from_values(lat, vals, Law::CounterexampleInteger { p: 1 }, 0).unwrap();
        let a = adaptive_region(&f, &params).unwrap().unwrap();
        assert_eq!(a, Region::cells(1, 16, vec![vec![6]]).unwrap());
        assert_eq!(a.lebesgue(), params.bad_set_measure());
        let wrong = FieldSample::from_values(
            Lattice::new(1, 8).unwrap(),
            vec![1.0f64; 8],
            Law::Rademacher,
            0,
        )
        .unwrap();
        assert!(adaptive_region(&wrong, &params).is_err());
    }

    #[test]
    fn text_roundtrip_examples() {
        for s in [
            "empty",
            "quadrant:0.5,1",
            "box:0.2,0.2:0.7,0.9",
            "cells:m=16:d=2:[(1,2),(3,3)]",
            "cells:m=4:d=1:[]",
        ] {
            let r: Region<f64> = s.parse().unwrap();
            assert_eq!(r.to_string(), s);
        }
        let short: Region<f64> = "cells:m=16:[(1,2),(3,3)]".parse().unwrap();
        assert_eq!(
            short,
            Region::cells(2, 16, vec![vec![1, 2], vec![3, 3]]).unwrap()
        );
        assert!("quadrant:1.5".parse::<Region<f64>>().is_err());
        assert!("blob:1".parse::<Region<f64>>().is_err());
        assert!("cells:m=2:[(1),(1)]".parse::<Region<f64>>().is_err());
    }

    fn arb_region(d: usize) -> impl Strategy<Value = Region<f64>> {
        let quad =
            proptest::collection::vec(0.0f64..=1.0, d).prop_map(|t| Region::quadrant(t).unwrap());
        let rect = proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), d).prop_map(|v| {
            let (lo, hi): (Vec<f64>, Vec<f64>) =
                v.into_iter().map(|(a, b)| (a.min(b), a.max(b))).unzip();
            Region::rect(lo, hi).unwrap()
        });
        let cells = (1usize..6).prop_flat_map(move |m| {
            proptest::collection::btree_set(proptest::collection::vec(1..=m, d), 0..6)
                .prop_map(move |set| Region::cells(d, m, set.into_iter().collect()).unwrap())
        });
        prop_oneof![Just(Region::Empty), quad, rect, cells]
    }

    proptest! {
        #[test]
        fn weights_sum_to_scaled_measure(a in arb_region(2), n in 1usize..=64) {
            let g = weight_grid(&a, 2, n).unwrap();
            let target = (n * n) as f64 * a.lebesgue();
            prop_assert!((g.total() - target).abs() <= 1e-12 * target.max(1.0));
            prop_assert!(g.weights.iter().all(|&w| (0.0..=1.0 + 1e-12).contains(&w)));
        }

        #[test]
        fn weights_sum_in_d1_and_d3(a in arb_region(1), b in arb_region(3), n in 1usize..=20) {
            for (r, d) in [(&a, 1usize), (&b, 3usize)] {
                let g = weight_grid(r, d, n).unwrap();
                let target = (n.pow(d as u32)) as f64 * r.lebesgue();
                prop_assert!((g.total() - target).abs() <= 1e-12 * target.max(1.0));
            }
        }

        #[test]
        fn rho_is_a_pseudometric(a in arb_region(2), b in arb_region(2), c in arb_region(2)) {
            let ab = rho(&a, &b).unwrap();
            prop_assert_eq!(rho(&a, &a).unwrap(), 0.0);
            prop_assert!((ab - rho(&b, &a).unwrap()).abs() < 1e-15);
            prop_assert!(ab <= rho(&a, &c).unwrap() + rho(&c, &b).unwrap() + 1e-12);
        }

        #[test]
        fn text_form_roundtrips(a in arb_region(2)) {
            let back: Region<f64> = a.to_string().parse().unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
