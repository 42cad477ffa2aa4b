use procmat::causality::random_robustness;
use procmat::process::{
    eps_causal, eps_validity, extended_optimal, family_coeffs, is_causally_ordered, make_named, op_from_coeffs,
    project_valid, q_opt, CausalOrder, FamilyParams, NamedProcess, PartyStructure, ProcessMatrix,
};

fn named(n: NamedProcess) -> ProcessMatrix {
    make_named(n, &FamilyParams::default()).unwrap()
}

#[test]
fn every_named_process_is_valid() {
    for n in NamedProcess::ALL {
        let w = named(n);
        assert!(w.is_valid(), "{n}");
        assert!((w.op().trace() - 4.0).abs() < 1e-12, "{n}");
        let again: NamedProcess = n.name().parse().unwrap();
        assert_eq!(again, n);
    }
}

#[test]
fn ordered_processes_have_the_expected_order() {
    assert!(is_causally_ordered(&named(NamedProcess::Wab), CausalOrder::AliceFirst));
    assert!(!is_causally_ordered(&named(NamedProcess::Wab), CausalOrder::BobFirst));
    assert!(is_causally_ordered(&named(NamedProcess::Wba), CausalOrder::BobFirst));
    assert!(is_causally_ordered(&named(NamedProcess::Iab), CausalOrder::AliceFirst));
    let white = named(NamedProcess::WhiteNoise);
    assert!(is_causally_ordered(&white, CausalOrder::AliceFirst) && is_causally_ordered(&white, CausalOrder::BobFirst));
}

#[test]
fn region_thresholds_are_ordered() {
    for i in 0..=1000 {
        let q = i as f64 / 1000.0;
        assert!(eps_validity(q) <= eps_causal(q) + 1e-15, "q = {q}");
    }
    let q = q_opt();
    assert!((eps_validity(q) - 4.0 / 3f64.sqrt() + 2.0).abs() < 1e-12);
}

#[test]
fn family_beyond_validity_is_rejected() {
    let q = 0.6;
    let op = op_from_coeffs(&family_coeffs(q, eps_validity(q) + 1e-3)).unwrap();
    assert!(ProcessMatrix::new(PartyStructure::qubits(), op).is_err());
    let params = FamilyParams { q, eps: 0.3, ..FamilyParams::default() };
    assert!(make_named(NamedProcess::Wqe, &params).is_err());
}

#[test]
fn projection_is_idempotent_and_fixes_valid_processes() {
    let w = named(NamedProcess::Wocb);
    let p = project_valid(w.op()).unwrap();
    assert!(p.distance(w.op()).unwrap() < 1e-12);
    let mut m = w.matrix().clone();
    m[(0, 5)] += procmat::linalg::C64::new(0.01, 0.0);
    m[(5, 0)] += procmat::linalg::C64::new(0.01, 0.0);
    let junk = procmat::HermitianOp::new(w.op().subsystems().to_vec(), m).unwrap();
    let once = project_valid(&junk).unwrap();
    let twice = project_valid(&once).unwrap();
    assert!(once.distance(&twice).unwrap() < 1e-12);
}

#[test]
fn werner_noise_reduces_robustness() {
    let r = |gamma: f64| {
        let p = FamilyParams { alpha: 0.5, gamma, ..FamilyParams::default() };
        random_robustness(&make_named(NamedProcess::Wwer, &p).unwrap()).unwrap().lambda_opt
    };
    let (r0, r1, r2) = (r(0.0), r(0.1), r(0.3));
    assert!(r0 > r1 && r1 > r2);
    // (1−γ)W + γ1° has robustness (1−γ)R − γ
    assert!((r1 - (0.9 * r0 - 0.1)).abs() < 1e-6);
    assert!((r2 - (0.7 * r0 - 0.3)).abs() < 1e-6);
}

#[test]
fn extended_process_is_valid() {
    let w = extended_optimal(2).unwrap();
    assert!(w.is_valid());
    assert_eq!(w.structure().side(), 64);
}
