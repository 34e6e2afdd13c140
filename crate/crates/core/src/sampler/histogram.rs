use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::quad;

use super::{MallowsSampler, Permutation};
use crate::rng;

/// Running sum of binned empirical measures `(1/n) Σ_i δ_{(i/n, π_i/n)}`.
///
/// Cell `(a, b)` covers `((a)/K, (a+1)/K] × ((b)/K, (b+1)/K]`; the points
/// `i/n` lie in `(0, 1]`, so every point falls in exactly one cell.
/// Accumulators combine with [`merge`](Self::merge), which is associative and
/// commutative, so partial histograms can be built in parallel.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramAccumulator {
    bins: usize,
    n: Option<usize>,
    counts: Vec<u64>,
    samples: u64,
}

impl HistogramAccumulator {
    pub fn new(bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(LabError::invalid("need at least one bin"));
        }
        Ok(Self {
            bins,
            n: None,
            counts: vec![0; bins * bins],
            samples: 0,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    fn check_n(&mut self, n: usize) -> Result<()> {
        match self.n {
            None => {
                self.n = Some(n);
                Ok(())
            }
            Some(m) if m == n => Ok(()),
            Some(m) => Err(LabError::invalid(format!(
                "mixed permutation sizes {m} and {n} in one histogram"
            ))),
        }
    }

    pub fn add(&mut self, p: &Permutation) -> Result<()> {
        let n = p.len();
        if n == 0 {
            return Err(LabError::invalid("empty permutation"));
        }
        self.check_n(n)?;
        let k = self.bins;
        for (i, &v) in p.image().iter().enumerate() {
            // ceil(m K / n) - 1 for the 1-based coordinate m
            let a = ((i + 1) * k - 1) / n;
            let b = (v as usize * k - 1) / n;
            self.counts[a * k + b] += 1;
        }
        self.samples += 1;
        Ok(())
    }

    pub fn merge(mut self, other: &Self) -> Result<Self> {
        if self.bins != other.bins {
            return Err(LabError::invalid("cannot merge histograms with different bin counts"));
        }
        if let Some(n) = other.n {
            self.check_n(n)?;
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.samples += other.samples;
        Ok(self)
    }

    /// Average cell masses. All zeros when no sample was added.
    pub fn finish(&self) -> CellMasses {
        let norm = match self.n {
            Some(n) if self.samples > 0 => 1.0 / (n as f64 * self.samples as f64),
            _ => 0.0,
        };
        CellMasses {
            bins: self.bins,
            masses: self.counts.iter().map(|&c| c as f64 * norm).collect(),
        }
    }
}

/// `K × K` matrix of cell masses on the unit square, row index along x.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMasses {
    bins: usize,
    masses: Vec<f64>,
}

impl CellMasses {
    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.masses[a * self.bins + b]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Cell masses of an absolutely continuous density, by a 15×15 tensor
    /// Kronrod rule per cell.
    pub fn from_density<F: Fn(f64, f64) -> f64 + Sync>(bins: usize, density: F) -> Self {
        let h = 1.0 / bins as f64;
        let masses = (0..bins * bins)
            .into_par_iter()
            .map(|c| {
                let (a, b) = (c / bins, c % bins);
                let (x0, y0) = (a as f64 * h, b as f64 * h);
                quad::tensor_rule_rect(&density, (x0, x0 + h), (y0, y0 + h))
            })
            .collect();
        Self { bins, masses }
    }

    /// `max_{cells} |self - other|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.bins, other.bins, "bin count mismatch");
        self.masses
            .iter()
            .zip(&other.masses)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Averaged binned empirical measure of `samples`.
pub fn empirical_histogram(samples: &[Permutation], bins: usize) -> Result<CellMasses> {
    let mut acc = HistogramAccumulator::new(bins)?;
    for p in samples {
        acc.add(p)?;
    }
    Ok(acc.finish())
}

impl MallowsSampler {
    /// Histogram of `count` samples drawn in parallel; the result depends
    /// only on `(seed, count)`, not on the thread schedule.
    pub fn sample_histogram(&self, count: usize, bins: usize, seed: u64) -> Result<CellMasses> {
        let empty = HistogramAccumulator::new(bins)?;
        let acc = (0..count)
            .into_par_iter()
            .try_fold(
                || empty.clone(),
                |mut acc, i| {
                    acc.add(&self.sample(&mut rng::stream(seed, i as u64)))?;
                    Ok::<_, LabError>(acc)
                },
            )
            .try_reduce(|| empty.clone(), |a, b| a.merge(&b))?;
        Ok(acc.finish())
    }
}
