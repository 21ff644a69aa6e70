use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use qsoftcover::entropic::{aep_rate, info_variance, relative_entropy, renyi_divergence, RenyiVariant};
use qsoftcover::linalg::{derive_seed, random_density, rng_from_seed, DensityOperator};

/// Two-sided Kolmogorov–Smirnov statistic of `xs` against `cdf`.
fn ks_statistic(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn qubit_spectrum_follows_induced_measure() {
    // Full-rank qubit states: the larger eigenvalue λ has density ∝ (2λ − 1)², so x = 2λ − 1 has CDF x³.
    let n = 10_000;
    let mut xs: Vec<f64> = (0..n)
        .map(|k| {
            let rho = random_density(2, 2, derive_seed(17, k)).unwrap();
            2.0 * rho.max_eigenvalue() - 1.0
        })
        .collect();
    let d = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0).powi(3));
    // asymptotic 1% critical value
    assert!(d < 1.628 / (n as f64).sqrt(), "KS statistic {d}");
}

#[test]
fn ks_rejects_wrong_law() {
    let n = 10_000;
    let mut xs: Vec<f64> = (0..n)
        .map(|k| 2.0 * random_density(2, 2, derive_seed(17, k)).unwrap().max_eigenvalue() - 1.0)
        .collect();
    let d = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0));
    assert!(d > 1.628 / (n as f64).sqrt());
}

#[test]
fn aep_rate_matches_empirical_quantile() {
    let p = [0.6, 0.3, 0.1];
    let q = [0.3, 0.3, 0.4];
    let sigma = DensityOperator::diagonal(&p).unwrap();
    let rho = DensityOperator::diagonal(&q).unwrap();
    let llr: Vec<f64> = p.iter().zip(&q).map(|(a, b)| (a / b).log2()).collect();
    let law = WeightedIndex::new(p).unwrap();

    let n = 10_000usize;
    let reps = 2_000u64;
    let eps_sq = 0.1;
    let mut means: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(99, r));
            let s: f64 = (0..n).map(|_| llr[law.sample(&mut rng)]).sum();
            s / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    // D^ε_max ~ the (1 − ε²) quantile of the per-symbol log-likelihood ratio
    let empirical = means[((1.0 - eps_sq) * reps as f64) as usize];
    let predicted = aep_rate(&sigma, &rho, n as u64, eps_sq.sqrt()).unwrap();
    assert!((empirical - predicted).abs() < 0.02, "{empirical} vs {predicted}");

    let mean_llr: f64 = p.iter().zip(&llr).map(|(a, l)| a * l).sum();
    let var: f64 = p.iter().zip(&llr).map(|(a, l)| a * (l - mean_llr).powi(2)).sum();
    assert!((info_variance(&sigma, &rho).unwrap() - var).abs() < 1e-12);
    assert!((relative_entropy(&sigma, &rho).unwrap().as_f64() - mean_llr).abs() < 1e-12);
}

#[test]
fn aep_rate_at_half_is_relative_entropy() {
    let sigma = random_density(3, 3, 1).unwrap();
    let rho = random_density(3, 3, 2).unwrap();
    let d = relative_entropy(&sigma, &rho).unwrap().as_f64();
    for n in [1, 7, 1_000_000] {
        assert_eq!(aep_rate(&sigma, &rho, n, 0.5f64.sqrt()).unwrap(), d);
    }
}

#[test]
fn sandwiched_order_one_below_order_two() {
    for k in 0..500 {
        let d = 2 + (k % 5) as usize;
        let sigma = random_density(d, 1 + (k as usize) % d, derive_seed(5, k)).unwrap();
        let rho = random_density(d, d, derive_seed(6, k)).unwrap();
        let d1 = relative_entropy(&sigma, &rho).unwrap().as_f64();
        let d2 = renyi_divergence(&sigma, &rho, 2.0, RenyiVariant::Sandwiched).unwrap().as_f64();
        assert!(d1 <= d2 + 1e-9, "pair {k}: {d1} > {d2}");
    }
}
