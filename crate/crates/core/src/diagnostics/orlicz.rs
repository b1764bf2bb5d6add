use serde::{Deserialize, Serialize};

use crate::scalar::compensated_sum;

/// Young functions psi_1(x) = e^x - 1 and psi_2(x) = e^(x^2) - 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Young {
    Psi1,
    Psi2,
}

impl Young {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Young::Psi1 => x.exp_m1(),
            Young::Psi2 => (x * x).exp_m1(),
        }
    }

    pub fn inverse(self, y: f64) -> f64 {
        match self {
            Young::Psi1 => y.ln_1p(),
            Young::Psi2 => y.ln_1p().sqrt(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Young::Psi1 => "psi1",
            Young::Psi2 => "psi2",
        }
    }
}

const REL_TOL: f64 = 1e-8;

/// Empirical Luxemburg norm inf{c > 0 : mean psi(|z|/c) <= 1}, by
/// bisection on a bracket found by doubling. 0 for all-zero samples.
pub fn orlicz_norm(samples: &[f64], psi: Young) -> f64 {
    let abs: Vec<f64> = samples.iter().map(|z| z.abs()).collect();
    let top = abs.iter().copied().fold(0.0f64, f64::max);
    if abs.is_empty() || top == 0.0 {
        return 0.0;
    }
    let n = abs.len() as f64;
    let excess = |c: f64| compensated_sum(abs.iter().map(|&z| psi.eval(z / c))) / n > 1.0;
    let (mut lo, mut hi) = (top, top);
    while excess(hi) {
        hi *= 2.0;
    }
    while !excess(lo) {
        lo /= 2.0;
    }
    while hi - lo > REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if excess(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn constants() {
        for a in [0.3, 1.0, 7.5] {
            let z = vec![a; 10];
            let p1 = orlicz_norm(&z, Young::Psi1);
            assert!((p1 / (a / 2f64.ln()) - 1.0).abs() < 1e-7);
            let p2 = orlicz_norm(&z, Young::Psi2);
            assert!((p2 / (a / 2f64.ln().sqrt()) - 1.0).abs() < 1e-7);
        }
        assert_eq!(orlicz_norm(&[0.0, 0.0], Young::Psi1), 0.0);
        assert_eq!(orlicz_norm(&[], Young::Psi2), 0.0);
    }

    #[test]
    fn gaussian_psi2() {
        // E exp(Z^2/c^2) = (1 - 2/c^2)^(-1/2) = 2 at c^2 = 8/3
        let mut rng = stream(5, 1);
        let z: Vec<f64> = (0..200_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let v = orlicz_norm(&z, Young::Psi2);
        assert!((v - (8.0f64 / 3.0).sqrt()).abs() < 0.03, "{v}");
    }

    #[test]
    fn inverses() {
        for y in [0.5, 1.0, 81.0] {
            for psi in [Young::Psi1, Young::Psi2] {
                assert!((psi.eval(psi.inverse(y)) - y).abs() < 1e-12 * y.max(1.0));
            }
        }
    }

    proptest! {
        #[test]
        fn homogeneous(z in prop::collection::vec(-50.0f64..50.0, 1..40), s in 0.01f64..100.0) {
            prop_assume!(z.iter().any(|x| *x != 0.0));
            for psi in [Young::Psi1, Young::Psi2] {
                let base = orlicz_norm(&z, psi);
                let scaled: Vec<f64> = z.iter().map(|x| s * x).collect();
                prop_assert!((orlicz_norm(&scaled, psi) / (s * base) - 1.0).abs() < 1e-7);
            }
        }
    }
}
