use crate::error::{Error, Result};

/// The index box {1..n}^d, linearized in lexicographic order (first
/// coordinate most significant), so linear order and `<_lex` coincide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    d: usize,
    n: usize,
    len: usize,
}

impl Lattice {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidLattice { d, n });
        }
        let len = u32::try_from(d)
            .ok()
            .and_then(|e| n.checked_pow(e))
            .filter(|&l| l <= (isize::MAX as usize) / 16)
            .ok_or(Error::LatticeTooLarge { d, n })?;
        Ok(Self { d, n, len })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Linear position of the 1-based multi-index `i`.
    pub fn linear(&self, i: &[usize]) -> usize {
        debug_assert_eq!(i.len(), self.d);
        i.iter().fold(0, |acc, &c| {
            debug_assert!(c >= 1 && c <= self.n);
            acc * self.n + (c - 1)
        })
    }

    /// Writes the 1-based multi-index of `linear` into `out`.
    pub fn coords_into(&self, mut linear: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = linear % self.n + 1;
            linear /= self.n;
        }
    }

    pub fn coords(&self, linear: usize) -> Vec<usize> {
        let mut out = vec![0; self.d];
        self.coords_into(linear, &mut out);
        out
    }

    /// Calls `f` with every linear index of the product of 1-based inclusive
    /// ranges, in lexicographic order.
    pub fn for_each_in_ranges(
        &self,
        ranges: &[(usize, usize)],
        mut f: impl FnMut(usize, &[usize]),
    ) {
        debug_assert_eq!(ranges.len(), self.d);
        if ranges
            .iter()
            .any(|&(lo, hi)| lo > hi || lo == 0 || hi > self.n)
        {
            return;
        }
        let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            f(self.linear(&cur), &cur);
            let mut axis = self.d;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                if cur[axis] < ranges[axis].1 {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = ranges[axis].0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_roundtrip_and_lex_order() {
        let lat = Lattice::new(3, 4).unwrap();
        assert_eq!(lat.len(), 64);
        let mut prev: Option<Vec<usize>> = None;
        for l in 0..lat.len() {
            let c = lat.coords(l);
            assert_eq!(lat.linear(&c), l);
            if let Some(p) = prev {
                assert!(p < c, "linear order must match lexicographic order");
            }
            prev = Some(c);
        }
    }

    #[test]
    fn rejects_degenerate_and_huge() {
        assert!(Lattice::new(0, 3).is_err());
        assert!(Lattice::new(2, 0).is_err());
        assert!(matches!(
            Lattice::new(8, 1 << 20),
            Err(Error::LatticeTooLarge { .. })
        ));
    }

    #[test]
    fn range_iteration() {
        let lat = Lattice::new(2, 5).unwrap();
        let mut seen = Vec::new();
        lat.for_each_in_ranges(&[(2, 3), (4, 5)], |l, _| seen.push(l));
        assert_eq!(
            seen,
            vec![
                lat.linear(&[2, 4]),
                lat.linear(&[2, 5]),
                lat.linear(&[3, 4]),
                lat.linear(&[3, 5])
            ]
        );
    }
}
