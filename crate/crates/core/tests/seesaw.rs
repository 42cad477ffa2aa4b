use procmat::causality::{causal_lp, gyni_score};
use procmat::process::{make_named, FamilyParams, NamedProcess, ProcessMatrix};
use procmat::seesaw::{prob_table, seesaw, GameFunctional, SeesawOptions};

fn named(n: NamedProcess, alpha: f64) -> ProcessMatrix {
    make_named(n, &FamilyParams { alpha, ..FamilyParams::default() }).unwrap()
}

fn opts(restarts: usize) -> SeesawOptions {
    SeesawOptions { restarts, seed: 3, ..SeesawOptions::default() }
}

#[test]
fn violations_come_with_noncausal_tables() {
    let w = named(NamedProcess::Wocb, 0.0);
    let r = seesaw(&w, &GameFunctional::gyni(), &opts(6)).unwrap();
    assert!(r.violation_found && r.best_score > 0.54);
    let (a, b) = r.strategy.unwrap();
    a.validate(1e-8).unwrap();
    b.validate(1e-8).unwrap();
    let table = prob_table(&w, &a, &b).unwrap();
    assert!((gyni_score(&table).unwrap() - r.best_score).abs() < 1e-9);
    assert!(!causal_lp(&table).unwrap().causal);
}

#[test]
fn transposition_does_not_change_the_optimum_when_positive() {
    let w = named(NamedProcess::Wopt, 0.0);
    let wt = w.transpose_bob().unwrap();
    assert!(wt.is_valid());
    let game = GameFunctional::gyni();
    let r = seesaw(&w, &game, &opts(4)).unwrap();
    let rt = seesaw(&wt, &game, &opts(4)).unwrap();
    assert!((r.best_score - 0.5).abs() < 1e-7, "{}", r.best_score);
    assert!((rt.best_score - 0.5).abs() < 1e-7, "{}", rt.best_score);
    assert!(!r.violation_found && r.evidence.contains("evidence"));
}

#[test]
fn restarts_are_reproducible() {
    let w = named(NamedProcess::Wmix, 0.3);
    let game = GameFunctional::gyni();
    let a = seesaw(&w, &game, &opts(3)).unwrap();
    let b = seesaw(&w, &game, &opts(3)).unwrap();
    assert_eq!(a.best_score.to_bits(), b.best_score.to_bits());
    assert!(a.restarts.iter().all(|o| o.history.windows(2).all(|p| p[1] >= p[0] - 1e-12)));
}
