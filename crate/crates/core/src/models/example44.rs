//! The deterministic non-stationary lattice construction.
//!
//! Block lengths `a(k)` start at `a(1) = 4`; an even-indexed block repeats
//! its predecessor and an odd-indexed block is as long as all earlier blocks
//! together. With `b(k) = a(1) + ... + a(k)`, the label `x_i` is 1 on the
//! indices `b(k)+1 ..= b(k+1)` for even `k` and 0 for odd `k`. The running
//! means `m_n = (x_1 + ... + x_n) / n` alternate between 1/2 at `n = b(2k)`
//! and 3/4 at `n = b(2k+1)`, so they have no limit.

use num_rational::Ratio;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example44 {
    /// `a[k-1] = a(k)`.
    a: Vec<u64>,
    /// `b[k] = b(k)`, with `b[0] = 0`.
    b: Vec<u64>,
}

impl Example44 {
    /// Computes enough blocks to label every index up to `n`.
    pub fn covering(n: u64) -> Self {
        let mut a: Vec<u64> = vec![4];
        let mut b: Vec<u64> = vec![0, 4];
        while *b.last().expect("nonempty") < n.max(1) || b.len() < 8 {
            let k = a.len() as u64 + 1;
            let next = if k.is_multiple_of(2) {
                *a.last().expect("nonempty")
            } else {
                *b.last().expect("nonempty")
            };
            a.push(next);
            b.push(b.last().expect("nonempty") + next);
        }
        Self { a, b }
    }

    /// `a(k)` for `k >= 1`, when computed.
    pub fn a(&self, k: usize) -> Option<u64> {
        k.checked_sub(1).and_then(|i| self.a.get(i)).copied()
    }

    /// `b(k)` for `k >= 0`, when computed.
    pub fn b(&self, k: usize) -> Option<u64> {
        self.b.get(k).copied()
    }

    /// Every computed `b(k)` with `k >= 1`.
    pub fn block_ends(&self) -> &[u64] {
        &self.b[1..]
    }

    /// Largest index whose label is known.
    pub fn covered(&self) -> u64 {
        *self.b.last().expect("nonempty")
    }

    /// `x_i` for `1 <= i <= covered()`.
    pub fn label(&self, i: u64) -> Option<bool> {
        if i == 0 || i > self.covered() {
            return None;
        }
        // Block k holds indices b(k)+1 ..= b(k+1).
        let k = self.b.partition_point(|&end| end < i) - 1;
        Some(k % 2 == 0)
    }

    /// `x_1, ..., x_n`.
    pub fn labels(&self, n: u64) -> Option<Vec<bool>> {
        (1..=n).map(|i| self.label(i)).collect()
    }

    /// `T_n` of the lattice realization for `n >= 1`: `T_1 = 1` and gap
    /// `alpha_i` is 1 when `x_i = 1`, else 2.
    pub fn time_of(&self, n: u64) -> u64 {
        let gaps = n.saturating_sub(1);
        let ones = (1..=gaps).filter(|&i| self.label(i) == Some(true)).count() as u64;
        1 + ones + 2 * (gaps - ones)
    }

    /// Exact running mean `m_n`.
    pub fn running_mean(&self, n: u64) -> Option<Ratio<u64>> {
        if n == 0 {
            return None;
        }
        let ones = self.labels(n)?.iter().filter(|&&x| x).count() as u64;
        Some(Ratio::new(ones, n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_lengths_follow_the_recursion() {
        let e = Example44::covering(200);
        let a: Vec<u64> = (1..=7).map(|k| e.a(k).unwrap()).collect();
        assert_eq!(a, [4, 4, 8, 8, 24, 24, 72]);
        let b: Vec<u64> = (1..=6).map(|k| e.b(k).unwrap()).collect();
        assert_eq!(b, [4, 8, 16, 24, 48, 72]);
        assert_eq!(e.b(0), Some(0));
    }

    #[test]
    fn running_means_alternate_exactly() {
        let e = Example44::covering(1000);
        let half = Ratio::new(1, 2);
        let three_quarters = Ratio::new(3, 4);
        for k in 1..=4 {
            assert_eq!(e.running_mean(e.b(2 * k).unwrap()), Some(half), "k={k}");
            assert_eq!(
                e.running_mean(e.b(2 * k + 1).unwrap()),
                Some(three_quarters),
                "k={k}"
            );
        }
    }

    #[test]
    fn labels_by_block() {
        let e = Example44::covering(16);
        let x = e.labels(16).unwrap();
        let expected: Vec<bool> = [[true; 4], [false; 4]]
            .concat()
            .into_iter()
            .chain([true; 8])
            .collect();
        assert_eq!(x, expected);
        assert_eq!(e.label(0), None);
        assert_eq!(e.time_of(1), 1);
        assert_eq!(e.time_of(9), 13);
        assert_eq!(e.time_of(17), 21);
    }
}
