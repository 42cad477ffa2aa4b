use std::time::Instant;

use procmat::causality::random_robustness;
use procmat::sampler::{ks_two_sample, run_chain, Chain, ChainConfig, ChainVariant};
use procmat::linalg;

fn config(seed: u64) -> ChainConfig {
    ChainConfig { seed, warmup_steps: 5_000, thinning: 100, ..ChainConfig::default() }
}

#[test]
fn samples_are_valid_and_normalized() {
    let samples = run_chain(&config(1), 100).unwrap();
    assert_eq!(samples.len(), 100);
    for w in &samples {
        assert!(w.is_valid());
        assert!((w.op().trace() - 4.0).abs() < 1e-10);
        assert!(w.validity().min_eigenvalue > 0.0);
    }
}

#[test]
fn independent_chains_agree_on_projections() {
    let decorrelated = |seed| ChainConfig { thinning: 870, ..config(seed) };
    let a = run_chain(&decorrelated(11), 300).unwrap();
    let b = run_chain(&decorrelated(12), 300).unwrap();
    let chain = Chain::new(config(0)).unwrap();
    let dirs = chain.directions();
    for k in [3usize, 17, 40, 61, 86] {
        let proj = |s: &[procmat::process::ProcessMatrix]| -> Vec<f64> {
            s.iter().map(|w| linalg::hs_inner(w.matrix(), &dirs[k])).collect()
        };
        let (d, p) = ks_two_sample(&proj(&a), &proj(&b));
        assert!(p > 0.01, "direction {k}: D = {d}, p = {p}");
    }
}

#[test]
fn restarted_chain_has_the_same_spectrum_distribution() {
    let first = run_chain(&config(21), 300).unwrap();
    let mut restarted = Chain::start_at(config(22), &first[150]).unwrap();
    let second: Vec<_> = (0..300).map(|_| restarted.next_sample().unwrap()).collect();
    let lam = |s: &[procmat::process::ProcessMatrix]| -> Vec<f64> { s.iter().map(|w| w.validity().min_eigenvalue).collect() };
    let (d, p) = ks_two_sample(&lam(&first), &lam(&second));
    assert!(p > 0.01, "D = {d}, p = {p}");
}

#[test]
fn uniform_samples_are_mostly_nonseparable() {
    let samples = run_chain(&config(5), 40).unwrap();
    let nonsep = samples.iter().filter(|w| random_robustness(w).unwrap().lambda_opt > 1e-9).count();
    assert!(nonsep >= 36, "{nonsep}/40");
}

#[test]
fn chord_throughput() {
    let mut chain = Chain::new(config(3)).unwrap();
    let start = Instant::now();
    chain.advance(2_000).unwrap();
    let rate = 2_000.0 / start.elapsed().as_secs_f64();
    assert!(rate >= 500.0, "{rate:.0} steps/s");
}

#[test]
fn variants_parse() {
    assert_eq!("one-sided".parse::<ChainVariant>().unwrap(), ChainVariant::OneSided);
    assert!("sideways".parse::<ChainVariant>().is_err());
}
