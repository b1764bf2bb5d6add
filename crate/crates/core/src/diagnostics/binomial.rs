//! Binomial probabilities for lattices far beyond direct summation, via
//! Loader's saddle-point form of the probability mass function.

use statrs::function::gamma::ln_gamma;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// ln Gamma(x + 1) - (x + 1/2) ln x + x - ln sqrt(2 pi).
fn stirlerr(x: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if x <= 15.0 {
        return ln_gamma(x + 1.0) - (x + 0.5) * x.ln() + x - LN_SQRT_2PI;
    }
    let xx = x * x;
    if x > 500.0 {
        (S0 - S1 / xx) / x
    } else if x > 80.0 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if x > 35.0 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// x ln(x / m) + m - x without cancellation near x = m.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// ln P(Bin(n, q) = x).
pub fn ln_binomial_pmf(x: u64, n: u64, q: f64) -> f64 {
    if x > n {
        return f64::NEG_INFINITY;
    }
    if q <= 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q >= 1.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let (xf, nf) = (x as f64, n as f64);
    if x == 0 {
        return nf * (-q).ln_1p();
    }
    if x == n {
        return nf * q.ln();
    }
    let lc = stirlerr(nf)
        - stirlerr(xf)
        - stirlerr(nf - xf)
        - bd0(xf, nf * q)
        - bd0(nf - xf, nf * (1.0 - q));
    lc - 0.5 * ((2.0 * std::f64::consts::PI).ln() + xf.ln() + (-xf / nf).ln_1p())
}

/// P(Bin(n, q) >= k). Sums outward from k in log space and stops once terms
/// no longer change the sum; when k is below the mean the complement is
/// summed instead.
pub fn binomial_upper_tail(n: u64, q: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n || q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let odds = q / (1.0 - q);
    let mean = n as f64 * q;
    if k as f64 > mean {
        let anchor = ln_binomial_pmf(k, n, q);
        let (mut term, mut sum) = (1.0f64, 0.0f64);
        let mut i = k;
        loop {
            sum += term;
            if i == n {
                break;
            }
            term *= (n - i) as f64 / (i + 1) as f64 * odds;
            i += 1;
            if term < sum * 1e-18 {
                break;
            }
        }
        (anchor + sum.ln()).exp().min(1.0)
    } else {
        let anchor = ln_binomial_pmf(k - 1, n, q);
        let (mut term, mut sum) = (1.0f64, 0.0f64);
        let mut i = k - 1;
        loop {
            sum += term;
            if i == 0 {
                break;
            }
            term *= i as f64 / (n - i + 1) as f64 / odds;
            i -= 1;
            if term < sum * 1e-18 {
                break;
            }
        }
        (1.0 - (anchor + sum.ln()).exp()).max(0.0)
    }
}
