use crate::error::{LabError, Result};

use super::permutation::next_lex;
use super::Permutation;

/// Largest `n` accepted by [`ExactDistribution::new`].
pub const MAX_ENUMERATION_N: usize = 10;

/// The Mallows law on `S_n` by brute-force enumeration, stored in
/// lexicographic order of the permutations.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    n: usize,
    q: f64,
    probabilities: Vec<f64>,
    inversions: Vec<u8>,
    normalization: f64,
}

impl ExactDistribution {
    pub fn new(n: usize, q: f64) -> Result<Self> {
        if n > MAX_ENUMERATION_N {
            return Err(LabError::invalid(format!(
                "enumeration is limited to n <= {MAX_ENUMERATION_N}, got {n}"
            )));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(LabError::invalid(format!("q must be positive, got {q}")));
        }
        let max_inv = n * n.saturating_sub(1) / 2;
        let powers: Vec<f64> = (0..=max_inv).map(|d| q.powi(d as i32)).collect();
        let mut a: Vec<u32> = (1..=n as u32).collect();
        let mut weights = Vec::new();
        let mut inversions = Vec::new();
        loop {
            let d = Permutation::from_image_unchecked(a.clone()).inversions() as usize;
            inversions.push(d as u8);
            weights.push(powers[d]);
            if !next_lex(&mut a) {
                break;
            }
        }
        let normalization: f64 = weights.iter().sum();
        let probabilities = weights.into_iter().map(|w| w / normalization).collect();
        Ok(Self {
            n,
            q,
            probabilities,
            inversions,
            normalization,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `Σ_π q^{inv(π)}` as summed during enumeration.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Probabilities indexed by lexicographic rank.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, p: &Permutation) -> f64 {
        if p.len() != self.n {
            return 0.0;
        }
        self.probabilities[p.lex_rank()]
    }

    /// `(permutation, probability)` pairs in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (Permutation, f64)> + '_ {
        let mut a: Vec<u32> = (1..=self.n as u32).collect();
        let mut first = true;
        self.probabilities.iter().map(move |&pr| {
            if !first {
                next_lex(&mut a);
            }
            first = false;
            (Permutation::from_image_unchecked(a.clone()), pr)
        })
    }

    /// `P(inv = m)` for `m = 0..=n(n-1)/2`.
    pub fn inversion_law(&self) -> Vec<f64> {
        let max_inv = self.n * self.n.saturating_sub(1) / 2;
        let mut law = vec![0.0; max_inv + 1];
        for (&d, &p) in self.inversions.iter().zip(&self.probabilities) {
            law[d as usize] += p;
        }
        law
    }

    /// Total-variation distance to the empirical law of `samples`.
    pub fn tv_distance(&self, samples: &[Permutation]) -> Result<f64> {
        let counts = self.counts(samples)?;
        let m = samples.len() as f64;
        Ok(0.5
            * counts
                .iter()
                .zip(&self.probabilities)
                .map(|(&c, &p)| (c as f64 / m - p).abs())
                .sum::<f64>())
    }

    /// Occurrence count of each permutation (lexicographic order).
    pub fn counts(&self, samples: &[Permutation]) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; self.probabilities.len()];
        for s in samples {
            if s.len() != self.n {
                return Err(LabError::invalid("sample size differs from the enumerated n"));
            }
            counts[s.lex_rank()] += 1;
        }
        Ok(counts)
    }

    /// Pearson chi-squared statistic of `samples` against this law.
    pub fn chi_squared(&self, samples: &[Permutation]) -> Result<f64> {
        let counts = self.counts(samples)?;
        let m = samples.len() as f64;
        Ok(counts
            .iter()
            .zip(&self.probabilities)
            .map(|(&c, &p)| {
                let e = m * p;
                (c as f64 - e).powi(2) / e
            })
            .sum())
    }

    /// `E[g(π)]` under the law.
    pub fn expectation<F: Fn(&Permutation) -> f64>(&self, g: F) -> f64 {
        self.iter().map(|(p, pr)| pr * g(&p)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstats::log_q_factorial;

    #[test]
    fn two_elements() {
        let d = ExactDistribution::new(2, 0.5).unwrap();
        let id = Permutation::identity(2);
        let sw = Permutation::reversal(2);
        assert!((d.probability(&id) - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.probability(&sw) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_three() {
        let d = ExactDistribution::new(3, 1.0).unwrap();
        assert!(d.probabilities().iter().all(|&p| (p - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn q_two_on_s3() {
        let d = ExactDistribution::new(3, 2.0).unwrap();
        assert_eq!(d.normalization(), 21.0);
        // lex order 123,132,213,231,312,321 has inversions 0,1,1,2,2,3
        let w: Vec<f64> = d.probabilities().iter().map(|p| p * 21.0).collect();
        for (a, b) in w.iter().zip([1.0, 2.0, 2.0, 4.0, 4.0, 8.0]) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn normalization_matches_q_factorial() {
        for n in 1..=8 {
            for &q in &[0.3, 1.0, 1.7] {
                let d = ExactDistribution::new(n, q).unwrap();
                let lq = log_q_factorial(n, q).unwrap();
                assert!((d.normalization().ln() - lq).abs() <= 1e-10 * lq.abs().max(1.0));
                assert!((d.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_large_n() {
        assert!(ExactDistribution::new(11, 0.5).is_err());
    }

    #[test]
    fn iter_matches_rank_lookup() {
        let d = ExactDistribution::new(4, 0.7).unwrap();
        for (p, pr) in d.iter() {
            assert_eq!(d.probability(&p), pr);
        }
        assert_eq!(d.iter().count(), 24);
    }
}
