use std::fmt;

use crate::error::{LabError, Result};

/// A permutation of `{1, …, n}` in one-line notation `(π_1, …, π_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<u32>,
}

impl Permutation {
    /// Validates that `image` is a bijection of `{1, …, n}`.
    pub fn new(image: Vec<u32>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &v in &image {
            let v = v as usize;
            if v < 1 || v > n {
                return Err(LabError::invalid(format!("value {v} outside 1..={n}")));
            }
            if std::mem::replace(&mut seen[v - 1], true) {
                return Err(LabError::invalid(format!("value {v} repeated")));
            }
        }
        Ok(Self { image })
    }

    pub(crate) fn from_image_unchecked(image: Vec<u32>) -> Self {
        debug_assert!(Permutation::new(image.clone()).is_ok());
        Self { image }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            image: (1..=n as u32).collect(),
        }
    }

    pub fn reversal(n: usize) -> Self {
        Self {
            image: (1..=n as u32).rev().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[u32] {
        &self.image
    }

    /// `π_i` for the 1-based position `i`.
    pub fn at(&self, i: usize) -> u32 {
        self.image[i - 1]
    }

    /// `(n+1-π_1, …, n+1-π_n)`.
    pub fn complement(&self) -> Self {
        let n = self.image.len() as u32;
        Self {
            image: self.image.iter().map(|&v| n + 1 - v).collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u32; self.image.len()];
        for (i, &v) in self.image.iter().enumerate() {
            inv[v as usize - 1] = i as u32 + 1;
        }
        Self { image: inv }
    }

    /// Number of inversions `|{(i, j): i < j, π_i > π_j}|`, by merge sort.
    pub fn inversions(&self) -> u64 {
        let mut buf = self.image.clone();
        let mut scratch = vec![0u32; buf.len()];
        merge_count(&mut buf, &mut scratch)
    }

    /// Rank in lexicographic order, `0 ≤ rank < n!`. Only meaningful for
    /// `n ≤ 20`.
    pub fn lex_rank(&self) -> usize {
        let n = self.image.len();
        let mut rank = 0usize;
        for i in 0..n {
            let smaller_after = self.image[i + 1..].iter().filter(|&&v| v < self.image[i]).count();
            rank = rank * (n - i) + smaller_after;
        }
        rank
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, v) in self.image.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Sorts `a` and returns its inversion count.
fn merge_count(a: &mut [u32], scratch: &mut [u32]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (l, r) = a.split_at_mut(mid);
        let (sl, sr) = scratch.split_at_mut(mid);
        merge_count(l, sl) + merge_count(r, sr)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if a[i] <= a[j] {
            scratch[k] = a[i];
            i += 1;
        } else {
            scratch[k] = a[j];
            // every remaining element of the left half exceeds a[j]
            count += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - i].copy_from_slice(&a[i..mid]);
    k += mid - i;
    scratch[k..k + n - j].copy_from_slice(&a[j..n]);
    a.copy_from_slice(&scratch[..n]);
    count
}

/// Lexicographic successor in place; `false` once the last permutation is
/// reached.
pub(crate) fn next_lex(a: &mut [u32]) -> bool {
    let n = a.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inversions_quadratic(p: &Permutation) -> u64 {
        let a = p.image();
        let mut c = 0;
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                if a[i] > a[j] {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn validation() {
        assert!(Permutation::new(vec![2, 3, 1]).is_ok());
        assert!(Permutation::new(vec![2, 2, 1]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![1, 3]).is_err());
        assert!(Permutation::new(vec![]).is_ok());
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(Permutation::identity(7).inversions(), 0);
        assert_eq!(Permutation::reversal(5).inversions(), 10);
        assert_eq!(Permutation::new(vec![3, 1, 2]).unwrap().inversions(), 2);
    }

    #[test]
    fn merge_count_matches_quadratic_on_all_of_s6() {
        let mut a: Vec<u32> = (1..=6).collect();
        loop {
            let p = Permutation::new(a.clone()).unwrap();
            assert_eq!(p.inversions(), inversions_quadratic(&p));
            assert_eq!(p.inverse().inversions(), p.inversions());
            if !next_lex(&mut a) {
                break;
            }
        }
    }

    #[test]
    fn lex_rank_enumerates_in_order() {
        let mut a: Vec<u32> = (1..=5).collect();
        let mut r = 0;
        loop {
            assert_eq!(Permutation::new(a.clone()).unwrap().lex_rank(), r);
            r += 1;
            if !next_lex(&mut a) {
                break;
            }
        }
        assert_eq!(r, 120);
    }

    #[test]
    fn complement_reflects_inversions() {
        let p = Permutation::new(vec![4, 1, 3, 2, 5]).unwrap();
        assert_eq!(p.inversions() + p.complement().inversions(), 10);
        assert_eq!(p.to_string(), "(4,1,3,2,5)");
    }
}
