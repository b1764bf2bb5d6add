//! Random field generation on the lattice {1..n}^d.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::rng::{open_unit, stream, StreamRng};
use crate::scalar::{compensated_sum, Scalar};

/// Marginal law of a field.
///
/// Text form (used by configs and CSV artifacts): `gaussian:<variance>`,
/// `rademacher`, `pareto:<alpha>`, `counterexample:<p>` and
/// `md:<amplitude>:<window>:<base>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Law {
    Gaussian {
        variance: f64,
    },
    Rademacher,
    /// Symmetric with P(|X| > x) = min(1, x^-alpha).
    ParetoTail {
        alpha: f64,
    },
    /// Symmetric integer law with P(X = 0) = 0 and P(|X| >= k) = k^-(p+1).
    CounterexampleInteger {
        p: u32,
    },
    /// Martingale-difference field X_i = sigma_i * eps_i, see [`sample_md_field`].
    MdBounded {
        base: Box<Law>,
        amplitude: f64,
        window: usize,
    },
}

impl Law {
    pub fn validate(&self) -> Result<()> {
        match self {
            Law::Gaussian { variance } if !(variance.is_finite() && *variance > 0.0) => {
                Err(Error::InvalidLaw(format!(
                    "gaussian variance must be positive, got {variance}"
                )))
            }
            Law::ParetoTail { alpha } if !(alpha.is_finite() && *alpha > 0.0) => Err(
                Error::InvalidLaw(format!("pareto tail index must be positive, got {alpha}")),
            ),
            Law::CounterexampleInteger { p } if *p < 1 => Err(Error::InvalidLaw(
                "counterexample law needs integer p >= 1".into(),
            )),
            Law::MdBounded {
                base,
                amplitude,
                window,
            } => {
                if !(0.0..1.0).contains(amplitude) {
                    return Err(Error::InvalidLaw(format!(
                        "md amplitude must lie in [0, 1), got {amplitude}"
                    )));
                }
                if *window < 1 {
                    return Err(Error::InvalidLaw(
                        "md window radius must be at least 1".into(),
                    ));
                }
                match base.as_ref() {
                    Law::Rademacher => Ok(()),
                    Law::Gaussian { variance } if *variance == 1.0 => Ok(()),
                    other => Err(Error::InvalidLaw(format!(
                        "md innovations must be zero-mean unit-variance (gaussian:1 or rademacher), got {other}"
                    ))),
                }
            }
            _ => Ok(()),
        }
    }

    pub fn is_iid(&self) -> bool {
        !matches!(self, Law::MdBounded { .. })
    }

    /// E X^2, `None` when infinite.
    pub fn variance(&self) -> Option<f64> {
        match self {
            Law::Gaussian { variance } => Some(*variance),
            Law::Rademacher => Some(1.0),
            Law::ParetoTail { alpha } if *alpha > 2.0 => Some(alpha / (alpha - 2.0)),
            Law::ParetoTail { .. } => None,
            // sum_k (2k - 1) k^-(p+1)
            Law::CounterexampleInteger { p } if *p >= 2 => {
                let s = f64::from(*p);
                Some(2.0 * zeta(s) - zeta(s + 1.0))
            }
            Law::CounterexampleInteger { .. } => None,
            // unit-variance innovations; the stationary variance has no closed form
            Law::MdBounded { .. } => None,
        }
    }

    /// E[X 1{lo <= |X| < hi}]. Every supported marginal is symmetric, so
    /// all band means vanish.
    pub fn band_mean(&self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo <= hi);
        0.0
    }

    /// Draws one value.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Law::Gaussian { variance } => variance.sqrt() * rng.sample::<f64, _>(StandardNormal),
            Law::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Law::ParetoTail { alpha } => {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                sign * open_unit(rng).powf(-1.0 / alpha)
            }
            Law::CounterexampleInteger { p } => {
                // floor(U^(-1/(p+1))) >= k  iff  U <= k^-(p+1)
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                sign * open_unit(rng).powf(-1.0 / f64::from(p + 1)).floor()
            }
            Law::MdBounded { base, .. } => base.draw(rng),
        }
    }

    /// P(|X| >= k) for the integer counter-example law.
    pub fn integer_tail(p: u32, k: u64) -> f64 {
        if k <= 1 {
            1.0
        } else {
            (k as f64).powf(-f64::from(p + 1))
        }
    }
}

fn zeta(s: f64) -> f64 {
    // direct sum plus Euler-Maclaurin tail
    const N: u32 = 64;
    let head: f64 = compensated_sum((1..N).map(|k| f64::from(k).powf(-s)));
    let n = f64::from(N);
    head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Law::Gaussian { variance } => write!(f, "gaussian:{variance}"),
            Law::Rademacher => write!(f, "rademacher"),
            Law::ParetoTail { alpha } => write!(f, "pareto:{alpha}"),
            Law::CounterexampleInteger { p } => write!(f, "counterexample:{p}"),
            Law::MdBounded {
                base,
                amplitude,
                window,
            } => write!(f, "md:{amplitude}:{window}:{base}"),
        }
    }
}

impl FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidLaw(format!("`{s}`: {why}"));
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let num = |r: Option<&str>| -> Result<f64> {
            r.ok_or_else(|| bad("missing parameter"))?
                .trim()
                .parse::<f64>()
                .map_err(|_| bad("parameter is not a number"))
        };
        let law = match head {
            "gaussian" => Law::Gaussian {
                variance: num(rest)?,
            },
            "rademacher" if rest.is_none() => Law::Rademacher,
            "pareto" => Law::ParetoTail { alpha: num(rest)? },
            "counterexample" => Law::CounterexampleInteger {
                p: rest
                    .ok_or_else(|| bad("missing p"))?
                    .trim()
                    .parse()
                    .map_err(|_| bad("p must be a positive integer"))?,
            },
            "md" => {
                let rest = rest.ok_or_else(|| bad("expected md:<amplitude>:<window>:<base>"))?;
                let mut parts = rest.splitn(3, ':');
                let amplitude = num(parts.next())?;
                let window = parts
                    .next()
                    .ok_or_else(|| bad("missing window"))?
                    .trim()
                    .parse()
                    .map_err(|_| bad("window must be a positive integer"))?;
                let base: Law = parts
                    .next()
                    .ok_or_else(|| bad("missing base law"))?
                    .parse()?;
                Law::MdBounded {
                    base: Box::new(base),
                    amplitude,
                    window,
                }
            }
            _ => return Err(bad("unknown law")),
        };
        law.validate()?;
        Ok(law)
    }
}

impl TryFrom<String> for Law {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Law> for String {
    fn from(l: Law) -> String {
        l.to_string()
    }
}

/// Realized field values on {1..n}^d in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample<T> {
    pub lattice: Lattice,
    pub values: Vec<T>,
    pub seed: u64,
    pub law: Law,
    /// Conditional standard deviations sigma_i for martingale-difference fields.
    pub scales: Option<Vec<T>>,
}

impl<T: Scalar> FieldSample<T> {
    /// Wraps externally supplied values (tests, replays).
    pub fn from_values(lattice: Lattice, values: Vec<T>, law: Law, seed: u64) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a lattice of {} sites",
                values.len(),
                lattice.len()
            )));
        }
        Ok(Self {
            lattice,
            values,
            seed,
            law,
            scales: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn side(&self) -> usize {
        self.lattice.side()
    }

    /// Same field with every value multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            values: self.values.iter().map(|&x| x * s).collect(),
            scales: self
                .scales
                .as_ref()
                .map(|v| v.iter().map(|&x| x * s.abs()).collect()),
            ..self.clone()
        }
    }
}

/// i.i.d. field: site `i` draws from the stream keyed by `(seed, i)`.
pub fn sample_iid_field<T: Scalar>(
    law: &Law,
    d: usize,
    n: usize,
    seed: u64,
) -> Result<FieldSample<T>> {
    law.validate()?;
    if !law.is_iid() {
        return Err(Error::InvalidLaw(
            "md_bounded fields are generated by sample_md_field".into(),
        ));
    }
    let lattice = Lattice::new(d, n)?;
    let values = draw_sites(law, lattice.len(), seed);
    Ok(FieldSample {
        lattice,
        values,
        seed,
        law: law.clone(),
        scales: None,
    })
}

fn draw_sites<T: Scalar>(law: &Law, len: usize, seed: u64) -> Vec<T> {
    (0..len)
        .into_par_iter()
        .with_min_len(4096)
        .map(|site| {
            let mut rng: StreamRng = stream(seed, site as u64);
            T::from_f64_lossy(law.draw(&mut rng))
        })
        .collect()
}

/// Lexicographically negative offsets in the cube [-w, w]^d.
fn past_offsets(d: usize, w: usize) -> Vec<Vec<isize>> {
    let side = 2 * w + 1;
    let total = side.pow(d as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut off = vec![0isize; d];
        for slot in off.iter_mut().rev() {
            *slot = (c % side) as isize - w as isize;
            c /= side;
        }
        if let Some(first) = off.iter().find(|&&x| x != 0) {
            if *first < 0 {
                out.push(off);
            }
        }
    }
    out
}

/// Martingale-difference field.
///
/// Sites are visited in lexicographic order; X_i = sigma_i * eps_i where
/// eps_i is a fresh innovation from the base law (drawn from the same
/// per-site stream an i.i.d. field would use) and
/// sigma_i = 1 + a * tanh(mean of the already generated values at window
/// sites j <_lex i with |j - i|_inf <= w). Then E(X_i | past) = 0 and
/// sigma_i^2 lies in [(1-a)^2, (1+a)^2].
pub fn sample_md_field<T: Scalar>(
    law: &Law,
    d: usize,
    n: usize,
    seed: u64,
) -> Result<FieldSample<T>> {
    law.validate()?;
    let Law::MdBounded {
        base,
        amplitude,
        window,
    } = law
    else {
        return Err(Error::InvalidLaw(format!(
            "sample_md_field needs an md law, got {law}"
        )));
    };
    let lattice = Lattice::new(d, n)?;
    let innovations: Vec<f64> = draw_sites(base, lattice.len(), seed);
    let offsets = past_offsets(d, *window);

    let mut values = vec![0.0f64; lattice.len()];
    let mut scales = vec![1.0f64; lattice.len()];
    let mut here = vec![0usize; d];
    let mut there = vec![0usize; d];
    for site in 0..lattice.len() {
        lattice.coords_into(site, &mut here);
        let mut acc = 0.0;
        let mut count = 0usize;
        'offsets: for off in &offsets {
            for k in 0..d {
                let c = here[k] as isize + off[k];
                if c < 1 || c > n as isize {
                    continue 'offsets;
                }
                there[k] = c as usize;
            }
            acc += values[lattice.linear(&there)];
            count += 1;
        }
        let mean = if count == 0 { 0.0 } else { acc / count as f64 };
        let sigma = 1.0 + amplitude * mean.tanh();
        scales[site] = sigma;
        values[site] = sigma * innovations[site];
    }
    Ok(FieldSample {
        lattice,
        values: values.into_iter().map(T::from_f64_lossy).collect(),
        seed,
        law: law.clone(),
        scales: Some(scales.into_iter().map(T::from_f64_lossy).collect()),
    })
}

/// Dispatches to the i.i.d. or martingale-difference generator.
pub fn sample_field<T: Scalar>(law: &Law, d: usize, n: usize, seed: u64) -> Result<FieldSample<T>> {
    if law.is_iid() {
        sample_iid_field(law, d, n, seed)
    } else {
        sample_md_field(law, d, n, seed)
    }
}

/// E[X^2 1{|X| < threshold}] in closed form.
pub fn truncated_second_moment(law: &Law, threshold: f64) -> Result<f64> {
    law.validate()?;
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "threshold must be nonnegative, got {threshold}"
        )));
    }
    Ok(match law {
        Law::Gaussian { variance } => {
            if threshold.is_infinite() {
                return Ok(*variance);
            }
            let t = threshold / variance.sqrt();
            let density = (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
            (variance * (erf(t / std::f64::consts::SQRT_2) - 2.0 * t * density)).max(0.0)
        }
        Law::Rademacher => {
            if threshold > 1.0 {
                1.0
            } else {
                0.0
            }
        }
        Law::ParetoTail { alpha } => {
            if threshold <= 1.0 {
                0.0
            } else if (alpha - 2.0).abs() < 1e-15 {
                2.0 * threshold.ln()
            } else {
                alpha * (threshold.powf(2.0 - alpha) - 1.0) / (2.0 - alpha)
            }
        }
        Law::CounterexampleInteger { p } => {
            // integers k with k < threshold
            let kmax = if threshold.is_infinite() {
                return law
                    .variance()
                    .ok_or_else(|| Error::InvalidArgument("infinite second moment".into()));
            } else {
                (threshold.ceil() as u64).saturating_sub(1)
            };
            let s = f64::from(p + 1);
            compensated_sum((1..=kmax).map(|k| {
                let kf = k as f64;
                kf * kf * (kf.powf(-s) - (kf + 1.0).powf(-s))
            }))
        }
        Law::MdBounded { .. } => {
            return Err(Error::InvalidLaw(
                "truncated moments need an i.i.d. law".into(),
            ));
        }
    })
}

/// Band-limited truncation X 1{alpha tau c <= |X| < beta tau c}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPiece {
    pub tau: f64,
    pub norming: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl TruncationPiece {
    pub fn new(tau: f64, norming: f64, alpha: f64, beta: f64) -> Result<Self> {
        if alpha > beta {
            return Err(Error::InvalidBand { alpha, beta });
        }
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidPiece(format!(
                "tau must lie in (0, 1], got {tau}"
            )));
        }
        if !(norming > 0.0 && norming.is_finite()) {
            return Err(Error::InvalidPiece(format!(
                "norming constant must be positive, got {norming}"
            )));
        }
        if !(alpha >= 0.0 && beta <= 1.0) {
            return Err(Error::InvalidPiece(format!(
                "band [{alpha}, {beta}) must lie in [0, 1]"
            )));
        }
        Ok(Self {
            tau,
            norming,
            alpha,
            beta,
        })
    }

    /// The plain truncation X 1{|X| < tau c}.
    pub fn plain(tau: f64, norming: f64) -> Result<Self> {
        Self::new(tau, norming, 0.0, 1.0)
    }

    pub fn lower(&self) -> f64 {
        self.alpha * self.tau * self.norming
    }

    pub fn upper(&self) -> f64 {
        self.beta * self.tau * self.norming
    }

    pub fn select<T: Scalar>(&self, x: T) -> T {
        let a = x.abs().to_f64_lossy();
        if a >= self.lower() && a < self.upper() {
            x
        } else {
            T::zero()
        }
    }
}

pub fn apply_truncation<T: Scalar>(field: &FieldSample<T>, piece: &TruncationPiece) -> Vec<T> {
    field.values.iter().map(|&x| piece.select(x)).collect()
}
