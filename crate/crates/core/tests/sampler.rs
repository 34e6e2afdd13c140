use mallows_lab::qstats;
use mallows_lab::rng;
use mallows_lab::sampler::{ExactDistribution, LehmerCode, MallowsSampler, Permutation};
use mallows_lab::validate::sampled_inversion_stats;
use rand::seq::SliceRandom;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn lehmer_round_trip_and_code_sums() {
    for n in 1..=64usize {
        let mut r = rng::stream(42, n as u64);
        let mut image: Vec<u32> = (1..=n as u32).collect();
        for _ in 0..10_000 {
            image.shuffle(&mut r);
            let p = Permutation::new(image.clone()).unwrap();
            let code = LehmerCode::from_permutation(&p);
            assert_eq!(code.to_permutation(), p);
            assert_eq!(code.total(), p.inversions());
        }
    }
}

#[test]
fn sampled_moments_within_four_standard_errors() {
    let draws = 100_000;
    for (k, &(n, q)) in [(20usize, 0.9), (50, 1.1), (100, 0.98)].iter().enumerate() {
        let (mean, var) = sampled_inversion_stats(n, q, draws, 900 + k as u64);
        let (m_exact, v_exact) = qstats::inversion_moments_q(n, q).unwrap();
        let se_mean = (v_exact / draws as f64).sqrt();
        assert!((mean - m_exact).abs() < 4.0 * se_mean, "mean n={n} q={q}: {mean} vs {m_exact}");
        // sd of the sample variance, using a normal-kurtosis approximation
        // inflated by 2 for the light tails of sums of bounded codes
        let se_var = 2.0 * v_exact * (2.0 / (draws as f64 - 1.0)).sqrt();
        assert!((var - v_exact).abs() < 4.0 * se_var, "var n={n} q={q}: {var} vs {v_exact}");
    }
}

#[test]
fn chi_squared_goodness_of_fit() {
    const DRAWS: usize = 1_000_000;
    for n in 3..=5usize {
        for &q in &[0.5, 1.0, 2.0] {
            let law = ExactDistribution::new(n, q).unwrap();
            let s = MallowsSampler::new(n, q).unwrap();
            let mut counts = vec![0u64; law.len()];
            let seed = 1000 + n as u64 * 10 + (q * 2.0) as u64;
            for i in 0..DRAWS {
                counts[s.sample(&mut rng::stream(seed, i as u64)).lex_rank()] += 1;
            }
            let stat: f64 = counts
                .iter()
                .zip(law.probabilities())
                .map(|(&c, &p)| {
                    let e = p * DRAWS as f64;
                    (c as f64 - e).powi(2) / e
                })
                .sum();
            let crit = ChiSquared::new((law.len() - 1) as f64).unwrap().inverse_cdf(1.0 - 1e-3);
            assert!(stat < crit, "n={n} q={q}: chi2 {stat} >= {crit}");
        }
    }
}

#[test]
fn reversal_maps_q_to_inverse_q() {
    for n in 1..=5usize {
        for &q in &[0.3, 0.7, 1.0, 1.6] {
            let a = ExactDistribution::new(n, q).unwrap();
            let b = ExactDistribution::new(n, 1.0 / q).unwrap();
            let mut tv = 0.0;
            for (p, pr) in a.iter() {
                tv += (pr - b.probability(&p.complement())).abs();
            }
            assert!(0.5 * tv < 1e-12, "n={n} q={q}: tv {tv}");
        }
    }
}

#[test]
fn exact_inversion_law_matches_moments() {
    for n in 1..=8usize {
        for &q in &[0.4, 1.0, 1.7] {
            let law = ExactDistribution::new(n, q).unwrap().inversion_law();
            let mean: f64 = law.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
            let var: f64 = law.iter().enumerate().map(|(k, p)| (k as f64 - mean).powi(2) * p).sum();
            let (m, v) = qstats::inversion_moments_q(n, q).unwrap();
            assert!((mean - m).abs() < 1e-10 && (var - v).abs() < 1e-10, "n={n} q={q}");
        }
    }
}
