//! Exclusion process on `{1, …, N}` and its stationary blocking measures.
//!
//! A Mallows permutation `π` with `q = (1-p)/p` is mapped to a particle
//! configuration by putting a particle at site `i` iff `π_i ≤ k`. The law of
//! the result is the reversible stationary law, with `k` particles, of the
//! nearest-neighbour exclusion process that hops left at rate `p` and right
//! at rate `1-p`. For `p > 1/2` particles pile up on the left, matching the
//! monotonicity of `ρ(x; y; β)` in `x` for `β > 0`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::limits::blocking_profile;
use crate::rng;
use crate::sampler::{MallowsSampler, Permutation};

/// Occupation vector `η ∈ {0, 1}^N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParticleConfig {
    occupation: Vec<u8>,
}

impl ParticleConfig {
    pub fn new(occupation: Vec<u8>) -> Result<Self> {
        if let Some(v) = occupation.iter().find(|&&v| v > 1) {
            return Err(LabError::invalid(format!("occupation must be 0 or 1, found {v}")));
        }
        Ok(Self { occupation })
    }

    /// `k` particles packed on the left.
    pub fn step(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(LabError::invalid(format!("k = {k} exceeds N = {n}")));
        }
        Ok(Self {
            occupation: (0..n).map(|i| u8::from(i < k)).collect(),
        })
    }

    pub fn occupation(&self) -> &[u8] {
        &self.occupation
    }

    pub fn len(&self) -> usize {
        self.occupation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupation.is_empty()
    }

    /// Number of particles.
    pub fn k(&self) -> usize {
        self.occupation.iter().map(|&v| v as usize).sum()
    }
}

impl fmt::Display for ParticleConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.occupation {
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// `η_i = 1` iff `π_i ≤ k`.
pub fn pushforward(pi: &Permutation, k: usize) -> Result<ParticleConfig> {
    if k > pi.len() {
        return Err(LabError::invalid(format!("k = {k} exceeds N = {}", pi.len())));
    }
    Ok(ParticleConfig {
        occupation: pi.image().iter().map(|&v| u8::from(v as usize <= k)).collect(),
    })
}

/// System size, particle number and the weak asymmetry
/// `p_left = 1/2 + β/(4N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsepParams {
    n: usize,
    k: usize,
    beta: f64,
}

impl AsepParams {
    pub fn new(n: usize, k: usize, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(LabError::invalid("need at least one site"));
        }
        if k > n {
            return Err(LabError::invalid(format!("k = {k} exceeds N = {n}")));
        }
        let p = 0.5 + beta / (4.0 * n as f64);
        if !(p > 0.0 && p < 1.0) {
            return Err(LabError::invalid(format!(
                "p_left = {p} must lie in (0, 1); need |beta| < 2N"
            )));
        }
        Ok(Self { n, k, beta })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn p_left(&self) -> f64 {
        0.5 + self.beta / (4.0 * self.n as f64)
    }
    pub fn q(&self) -> f64 {
        let p = self.p_left();
        (1.0 - p) / p
    }

    /// `ρ(i/N; k/N; β)` for `i = 1..=N`.
    pub fn rho_limit(&self) -> Vec<f64> {
        let y = self.k as f64 / self.n as f64;
        (1..=self.n)
            .map(|i| blocking_profile(i as f64 / self.n as f64, y, self.beta))
            .collect()
    }
}

/// Per-site occupation estimate with standard errors and the limit profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileEstimate {
    pub frequency: Vec<f64>,
    pub stderr: Vec<f64>,
    pub rho_limit: Vec<f64>,
}

impl ProfileEstimate {
    /// `max_i |frequency_i - other_i|`.
    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.frequency
            .iter()
            .zip(other)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_error_vs_limit(&self) -> f64 {
        self.max_abs_diff(&self.rho_limit)
    }
}

/// Occupation frequencies of `samples` push-forwards of independent Mallows
/// permutations. Sample `s` uses stream `s` of `seed`.
pub fn profile_monte_carlo(params: &AsepParams, samples: usize, seed: u64) -> Result<ProfileEstimate> {
    if samples == 0 {
        return Err(LabError::invalid("need at least one sample"));
    }
    let sampler = MallowsSampler::new(params.n, params.q())?;
    let k = params.k;
    let n = params.n;
    let counts = (0..samples)
        .into_par_iter()
        .fold(
            || vec![0u64; n],
            |mut acc, s| {
                let pi = sampler.sample(&mut rng::stream(seed, s as u64));
                for (c, &v) in acc.iter_mut().zip(pi.image()) {
                    *c += u64::from(v as usize <= k);
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let m = samples as f64;
    let frequency: Vec<f64> = counts.iter().map(|&c| c as f64 / m).collect();
    let stderr = frequency
        .iter()
        .map(|&f| (f * (1.0 - f) / m).sqrt())
        .collect();
    Ok(ProfileEstimate {
        frequency,
        stderr,
        rho_limit: params.rho_limit(),
    })
}

/// Exact `E η_i` under the push-forward of the Mallows law, by enumeration
/// (`N ≤ 10`).
pub fn exact_occupation(n: usize, q: f64, k: usize) -> Result<Vec<f64>> {
    let law = crate::sampler::ExactDistribution::new(n, q)?;
    let mut occ = vec![0.0; n];
    for (pi, pr) in law.iter() {
        for (o, &v) in occ.iter_mut().zip(pi.image()) {
            if v as usize <= k {
                *o += pr;
            }
        }
    }
    Ok(occ)
}

/// Options for [`simulate_dynamics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsOptions {
    /// Fraction of `[0, t_end]` discarded before averaging.
    pub burn_in_fraction: f64,
    /// Number of equal batches of the averaging window, for batch-means
    /// standard errors.
    pub batches: usize,
    /// Start from `k` particles packed on the left instead of a
    /// push-forward sample.
    pub step_initial: bool,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self {
            burn_in_fraction: 0.5,
            batches: 20,
            step_initial: true,
        }
    }
}

/// Outcome of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsSummary {
    pub profile: ProfileEstimate,
    pub events: u64,
    pub t_end: f64,
    pub averaging_start: f64,
    /// Configuration at `t_end`.
    #[serde(skip)]
    pub final_config: ParticleConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    bond: usize,
    stamp: u64,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.bond.cmp(&other.bond))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct Simulator<'a, R: Rng> {
    eta: Vec<u8>,
    stamps: Vec<u64>,
    queue: BinaryHeap<Reverse<Event>>,
    right_rate: f64,
    left_rate: f64,
    rng: &'a mut R,
}

impl<R: Rng> Simulator<'_, R> {
    fn bond_rate(&self, b: usize) -> f64 {
        match (self.eta[b], self.eta[b + 1]) {
            (1, 0) => self.right_rate,
            (0, 1) => self.left_rate,
            _ => 0.0,
        }
    }

    /// Invalidates the pending event of bond `b` and draws a fresh clock.
    fn reschedule(&mut self, b: usize, now: f64) {
        self.stamps[b] += 1;
        let rate = self.bond_rate(b);
        if rate > 0.0 {
            let u: f64 = self.rng.gen();
            let time = now - (1.0 - u).ln() / rate;
            self.queue.push(Reverse(Event {
                time,
                bond: b,
                stamp: self.stamps[b],
            }));
        }
    }
}

/// Continuous-time exclusion dynamics up to `t_end`, with an exponential
/// clock on every bond that can fire. Returns the time-averaged occupation
/// over `[burn_in_fraction · t_end, t_end]` with batch-means standard
/// errors.
pub fn simulate_dynamics(
    params: &AsepParams,
    t_end: f64,
    seed: u64,
    options: DynamicsOptions,
) -> Result<DynamicsSummary> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(LabError::invalid(format!("t_end must be positive, got {t_end}")));
    }
    if !(0.0..1.0).contains(&options.burn_in_fraction) {
        return Err(LabError::invalid("burn-in fraction must lie in [0, 1)"));
    }
    if options.batches < 2 {
        return Err(LabError::invalid("need at least two batches"));
    }
    let n = params.n;
    let mut rng = rng::stream(seed, 0);
    let initial = if options.step_initial {
        ParticleConfig::step(n, params.k)?
    } else {
        let pi = MallowsSampler::new(n, params.q())?.sample(&mut rng);
        pushforward(&pi, params.k)?
    };
    let k = initial.k();
    let p = params.p_left();
    let mut sim = Simulator {
        eta: initial.occupation,
        stamps: vec![0; n.saturating_sub(1)],
        queue: BinaryHeap::new(),
        right_rate: 1.0 - p,
        left_rate: p,
        rng: &mut rng,
    };
    for b in 0..n.saturating_sub(1) {
        sim.reschedule(b, 0.0);
    }

    let start = options.burn_in_fraction * t_end;
    let batch_len = (t_end - start) / options.batches as f64;
    let mut batch_sums = vec![vec![0.0; n]; options.batches];
    let mut last_change = vec![start; n];
    let mut batch = 0usize;
    let mut batch_end = start + batch_len;
    let mut events = 0u64;

    // closes every open occupation interval at time `t` into the current batch
    let flush = |eta: &[u8], last: &mut [f64], sums: &mut [f64], t: f64| {
        for i in 0..eta.len() {
            if eta[i] == 1 {
                sums[i] += t - last[i];
            }
            last[i] = t;
        }
    };

    while let Some(Reverse(ev)) = sim.queue.pop() {
        if ev.stamp != sim.stamps[ev.bond] {
            continue;
        }
        let t = ev.time.min(t_end);
        while t >= start && batch < options.batches && t >= batch_end {
            flush(&sim.eta, &mut last_change, &mut batch_sums[batch], batch_end);
            batch += 1;
            batch_end = start + (batch + 1) as f64 * batch_len;
        }
        if ev.time >= t_end {
            break;
        }
        let b = ev.bond;
        if t > start {
            for i in [b, b + 1] {
                if sim.eta[i] == 1 {
                    batch_sums[batch][i] += t - last_change[i];
                }
                last_change[i] = t;
            }
        }
        sim.eta.swap(b, b + 1);
        events += 1;
        for nb in [b.wrapping_sub(1), b, b + 1] {
            if nb < n - 1 {
                sim.reschedule(nb, t);
            }
        }
    }
    while batch < options.batches {
        flush(&sim.eta, &mut last_change, &mut batch_sums[batch], batch_end);
        batch += 1;
        batch_end = start + (batch + 1) as f64 * batch_len;
    }

    let nb = options.batches as f64;
    let means: Vec<Vec<f64>> = batch_sums
        .iter()
        .map(|s| s.iter().map(|v| v / batch_len).collect())
        .collect();
    let frequency: Vec<f64> = (0..n)
        .map(|i| means.iter().map(|m| m[i]).sum::<f64>() / nb)
        .collect();
    let stderr = (0..n)
        .map(|i| {
            let var = means.iter().map(|m| (m[i] - frequency[i]).powi(2)).sum::<f64>() / (nb - 1.0);
            (var / nb).sqrt()
        })
        .collect();
    let final_config = ParticleConfig { occupation: sim.eta };
    assert_eq!(final_config.k(), k, "particle number changed");
    Ok(DynamicsSummary {
        profile: ProfileEstimate {
            frequency,
            stderr,
            rho_limit: params.rho_limit(),
        },
        events,
        t_end,
        averaging_start: start,
        final_config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pushforward_examples() {
        let id = pushforward(&Permutation::identity(5), 3).unwrap();
        assert_eq!(id.occupation(), &[1, 1, 1, 0, 0]);
        let rev = pushforward(&Permutation::reversal(5), 2).unwrap();
        assert_eq!(rev.occupation(), &[0, 0, 0, 1, 1]);
        assert!(pushforward(&Permutation::identity(5), 6).is_err());
        assert_eq!(rev.to_string(), "00011");
    }

    #[test]
    fn params() {
        let p = AsepParams::new(10, 3, 4.0).unwrap();
        assert!((p.p_left() - 0.6).abs() < 1e-15);
        assert!((p.q() - 0.4 / 0.6).abs() < 1e-15);
        assert!(AsepParams::new(10, 11, 0.0).is_err());
        assert!(AsepParams::new(10, 3, 20.0).is_err());
    }

    #[test]
    fn exact_occupation_decreases_for_positive_beta() {
        for n in 2..=5 {
            let p = AsepParams::new(n, n / 2, 1.5).unwrap();
            let occ = exact_occupation(n, p.q(), p.k()).unwrap();
            assert!(occ.windows(2).all(|w| w[0] >= w[1]), "{occ:?}");
            assert!((occ.iter().sum::<f64>() - p.k() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn full_lattice_and_flat_profile() {
        let full = AsepParams::new(50, 50, 4.0).unwrap();
        let pr = profile_monte_carlo(&full, 20, 1).unwrap();
        assert!(pr.frequency.iter().all(|&f| f == 1.0));
        let flat = AsepParams::new(30, 10, 0.0).unwrap();
        let pr = profile_monte_carlo(&flat, 4000, 2).unwrap();
        assert!((pr.frequency.iter().sum::<f64>() - 10.0).abs() < 1e-9);
        for (f, s) in pr.frequency.iter().zip(&pr.stderr) {
            assert!((f - 1.0 / 3.0).abs() < 5.0 * s.max(1e-3));
        }
    }

    #[test]
    fn dynamics_conserves_particles() {
        let p = AsepParams::new(12, 5, 3.0).unwrap();
        let s = simulate_dynamics(&p, 2000.0, 4, DynamicsOptions::default()).unwrap();
        assert_eq!(s.final_config.k(), 5);
        assert!(s.events > 0);
        assert!((s.profile.frequency.iter().sum::<f64>() - 5.0).abs() < 1e-9);
    }
}
