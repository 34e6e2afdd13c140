use crate::error::{LabError, Result};

use super::Permutation;

/// Inversion table of a permutation: `codes[j-1] = #{i < j : π_i > π_j}`,
/// so `codes[j-1] ∈ {0, …, j-1}` and the codes sum to the inversion count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LehmerCode {
    codes: Vec<u32>,
}

impl LehmerCode {
    pub fn new(codes: Vec<u32>) -> Result<Self> {
        for (j, &c) in codes.iter().enumerate() {
            if c as usize > j {
                return Err(LabError::invalid(format!(
                    "code {c} at position {} exceeds {j}",
                    j + 1
                )));
            }
        }
        Ok(Self { codes })
    }

    pub(crate) fn from_codes_unchecked(codes: Vec<u32>) -> Self {
        Self { codes }
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.codes.iter().map(|&c| c as u64).sum()
    }

    pub fn from_permutation(p: &Permutation) -> Self {
        let n = p.len();
        let mut seen = Fenwick::new(n);
        let codes = p
            .image()
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let smaller_before = seen.prefix(v as usize);
                seen.add(v as usize, 1);
                (j - smaller_before as usize) as u32
            })
            .collect();
        Self { codes }
    }

    /// Decodes from the last position: `π_j` is the `(j - c_j)`-th smallest
    /// of the values not yet used by positions `j+1, …, n`.
    pub fn to_permutation(&self) -> Permutation {
        let n = self.codes.len();
        let mut free = Fenwick::full(n);
        let mut image = vec![0u32; n];
        for j in (1..=n).rev() {
            let rank = j - self.codes[j - 1] as usize;
            let v = free.select(rank as i64);
            free.add(v, -1);
            image[j - 1] = v as u32;
        }
        Permutation::from_image_unchecked(image)
    }
}

/// Fenwick tree over `1..=n` with order-statistic select.
struct Fenwick {
    tree: Vec<i64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self { tree: vec![0; n + 1] }
    }

    /// Every slot holds 1.
    fn full(n: usize) -> Self {
        let mut tree = vec![0i64; n + 1];
        for i in 1..=n {
            tree[i] += 1;
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        Self { tree }
    }

    fn add(&mut self, mut i: usize, delta: i64) {
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    fn prefix(&self, mut i: usize) -> i64 {
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    /// Smallest `i` with `prefix(i) >= k`.
    fn select(&self, mut k: i64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = if n == 0 { 0 } else { 1usize << (usize::BITS - 1 - n.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] < k {
                pos = next;
                k -= self.tree[next];
            }
            step >>= 1;
        }
        pos + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_codes() {
        let p = Permutation::new(vec![3, 1, 2]).unwrap();
        let c = LehmerCode::from_permutation(&p);
        assert_eq!(c.codes(), &[0, 1, 1]);
        assert_eq!(c.to_permutation(), p);
        let r = LehmerCode::from_permutation(&Permutation::reversal(4));
        assert_eq!(r.codes(), &[0, 1, 2, 3]);
        assert!(LehmerCode::new(vec![0, 2]).is_err());
        assert_eq!(LehmerCode::new(vec![]).unwrap().to_permutation().len(), 0);
    }

    fn arb_codes() -> impl Strategy<Value = Vec<u32>> {
        (1usize..=64).prop_flat_map(|n| {
            (0..n).map(|j| 0..=j as u32).collect::<Vec<_>>()
        })
    }

    proptest! {
        #[test]
        fn round_trip_and_sum(codes in arb_codes()) {
            let code = LehmerCode::new(codes).unwrap();
            let p = code.to_permutation();
            prop_assert_eq!(p.inversions(), code.total());
            prop_assert_eq!(LehmerCode::from_permutation(&p), code);
        }
    }
}
