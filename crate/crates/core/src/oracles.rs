//! Slow reference implementations used to cross-check the fast paths.

use crate::scalar::Scalar;

/// Largest class handled by [`exact_min_cover`].
pub const EXACT_COVER_LIMIT: usize = 150;

type Bits = [u64; 3];

fn bits_or(a: &Bits, b: &Bits) -> Bits {
    [a[0] | b[0], a[1] | b[1], a[2] | b[2]]
}

fn bits_andnot_count(a: &Bits, covered: &Bits) -> u32 {
    (0..3).map(|w| (a[w] & !covered[w]).count_ones()).sum()
}

fn has(b: &Bits, i: usize) -> bool {
    b[i / 64] >> (i % 64) & 1 == 1
}

/// Minimum number of open rho-balls (centres in the class) covering the
/// class, by exhaustive branch and bound.
pub fn exact_min_cover<T: Scalar>(rho: &[T], k: usize, eps: T) -> usize {
    assert!(
        k <= EXACT_COVER_LIMIT,
        "exact cover limited to {EXACT_COVER_LIMIT} sets"
    );
    assert_eq!(rho.len(), k * k);
    if k == 0 {
        return 0;
    }
    let mut balls = vec![[0u64; 3]; k];
    for c in 0..k {
        for j in 0..k {
            if rho[c * k + j] < eps {
                balls[c][j / 64] |= 1 << (j % 64);
            }
        }
    }
    let mut full = [0u64; 3];
    for j in 0..k {
        full[j / 64] |= 1 << (j % 64);
    }
    let mut best = k;
    search(&balls, &full, [0; 3], 0, &mut best, k);
    best
}

fn search(balls: &[Bits], full: &Bits, covered: Bits, used: usize, best: &mut usize, k: usize) {
    if covered == *full {
        *best = (*best).min(used);
        return;
    }
    if used + 1 >= *best {
        return;
    }
    let uncovered = k as u32 - (0..3).map(|w| covered[w].count_ones()).sum::<u32>();
    let widest = balls
        .iter()
        .map(|b| bits_andnot_count(b, &covered))
        .max()
        .unwrap_or(1)
        .max(1);
    if used + uncovered.div_ceil(widest) as usize >= *best {
        return;
    }
    // branch on the uncovered member with the fewest covering balls
    let mut pivot = None;
    let mut fewest = usize::MAX;
    for j in (0..k).filter(|&j| !has(&covered, j)) {
        let n = balls.iter().filter(|b| has(b, j)).count();
        if n < fewest {
            fewest = n;
            pivot = Some(j);
        }
    }
    let pivot = pivot.expect("an uncovered member exists");
    let mut options: Vec<usize> = (0..k).filter(|&c| has(&balls[c], pivot)).collect();
    options.sort_by_key(|&c| std::cmp::Reverse(bits_andnot_count(&balls[c], &covered)));
    for c in options {
        search(balls, full, bits_or(&covered, &balls[c]), used + 1, best, k);
    }
}

/// P(Bin(n, q) >= k) by direct summation of the probability mass function.
pub fn binomial_upper_tail(n: u64, q: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    // pmf(0) = (1-q)^n, then the ratio recursion
    let mut pmf = (n as f64 * (-q).ln_1p()).exp();
    let mut below = 0.0;
    for i in 0..k {
        below += pmf;
        pmf *= (n - i) as f64 / (i + 1) as f64 * q / (1.0 - q);
    }
    (1.0 - below).max(0.0)
}

/// sup_x |F_n(x) - Phi(x)| evaluated at every sample point from both sides.
pub fn ks_brute(sample: &[f64]) -> f64 {
    let n = sample.len() as f64;
    let mut worst = 0.0f64;
    for &x in sample {
        let below = sample.iter().filter(|&&y| y < x).count() as f64 / n;
        let upto = sample.iter().filter(|&&y| y <= x).count() as f64 / n;
        let phi = 0.5 * (1.0 + statrs::function::erf::erf(x / std::f64::consts::SQRT_2));
        worst = worst.max((phi - below).abs()).max((upto - phi).abs());
    }
    worst
}
