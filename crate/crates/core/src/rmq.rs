//! Range-minimum structures.
//!
//! [`SparseTable`] answers arbitrary range-minimum queries in O(1) after
//! O(n log n) preprocessing. [`min_extents`] is the monotone-stack companion
//! used to sum minima over all subranges at once: for every position it returns
//! the maximal window in which that position is the leftmost minimum.

/// O(1) range minimum with leftmost argmin, O(n log n) words of space.
#[derive(Clone, Debug)]
pub struct SparseTable {
    len: usize,
    /// `levels[k][i]` is the argmin of `data[i..i + 2^k]`.
    levels: Vec<Vec<u32>>,
    data: Vec<f64>,
}

impl SparseTable {
    pub fn new(data: &[f64]) -> Self {
        let len = data.len();
        assert!(len > 0, "empty range-minimum table");
        assert!(len <= u32::MAX as usize);
        let mut levels = vec![(0..len as u32).collect::<Vec<_>>()];
        let mut width = 1;
        while 2 * width <= len {
            let prev = levels.last().unwrap();
            let next: Vec<u32> = (0..=len - 2 * width)
                .map(|i| {
                    let a = prev[i];
                    let b = prev[i + width];
                    // ties go left
                    if data[b as usize] < data[a as usize] {
                        b
                    } else {
                        a
                    }
                })
                .collect();
            levels.push(next);
            width *= 2;
        }
        Self {
            len,
            levels,
            data: data.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Leftmost argmin of `data[lo..=hi]`.
    pub fn argmin(&self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi && hi < self.len, "bad range {lo}..={hi}");
        let k = (hi - lo + 1).ilog2() as usize;
        let a = self.levels[k][lo];
        let b = self.levels[k][hi + 1 - (1 << k)];
        if self.data[b as usize] < self.data[a as usize] {
            b as usize
        } else {
            a as usize
        }
    }

    /// Minimum of `data[lo..=hi]`.
    pub fn min(&self, lo: usize, hi: usize) -> f64 {
        self.data[self.argmin(lo, hi)]
    }
}

/// For each position `q`, the inclusive window `(left, right)` of subranges in
/// which `a[q]` is the leftmost minimum: every `a[l..q]` is strictly larger and
/// every `a[q+1..=r]` is no smaller.
///
/// Each subrange `[l, r]` of `a` is attributed to exactly one position.
pub fn min_extents(a: &[f64]) -> Vec<(usize, usize)> {
    let m = a.len();
    let mut out = vec![(0usize, 0usize); m];
    let mut stack: Vec<usize> = Vec::with_capacity(m);

    // left: previous position with a value <= a[q]
    for q in 0..m {
        while let Some(&top) = stack.last() {
            if a[top] > a[q] {
                stack.pop();
            } else {
                break;
            }
        }
        out[q].0 = stack.last().map_or(0, |&p| p + 1);
        stack.push(q);
    }

    // right: next position with a value < a[q]
    stack.clear();
    for q in (0..m).rev() {
        while let Some(&top) = stack.last() {
            if a[top] >= a[q] {
                stack.pop();
            } else {
                break;
            }
        }
        out[q].1 = stack.last().map_or(m - 1, |&p| p - 1);
        stack.push(q);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_argmin(a: &[f64], lo: usize, hi: usize) -> usize {
        let mut best = lo;
        for i in lo..=hi {
            if a[i] < a[best] {
                best = i;
            }
        }
        best
    }

    #[test]
    fn small_table() {
        let a = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let t = SparseTable::new(&a);
        assert_eq!(t.argmin(0, 7), 1);
        assert_eq!(t.argmin(2, 5), 3);
        assert_eq!(t.min(4, 5), 5.0);
        assert_eq!(t.argmin(6, 6), 6);
    }

    #[test]
    fn extents_cover_each_range_once() {
        let a = [2.0, 1.0, 1.0, 3.0, 0.5, 2.0];
        let ext = min_extents(&a);
        let m = a.len();
        let mut counted = 0;
        for (q, &(l, r)) in ext.iter().enumerate() {
            counted += (q - l + 1) * (r - q + 1);
        }
        assert_eq!(counted, m * (m + 1) / 2);
    }

    proptest! {
        #[test]
        fn table_matches_scan(a in prop::collection::vec(0u8..6, 1..60), lo in 0usize..60, len in 0usize..60) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let lo = lo % a.len();
            let hi = (lo + len).min(a.len() - 1);
            let t = SparseTable::new(&a);
            prop_assert_eq!(t.argmin(lo, hi), naive_argmin(&a, lo, hi));
        }

        #[test]
        fn extents_attribute_leftmost_min(a in prop::collection::vec(0u8..5, 1..40)) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let ext = min_extents(&a);
            for l in 0..a.len() {
                for r in l..a.len() {
                    let q = naive_argmin(&a, l, r);
                    let (lo, hi) = ext[q];
                    prop_assert!(lo <= l && r <= hi);
                }
            }
        }
    }
}
