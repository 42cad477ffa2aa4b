use proptest::prelude::*;

use procmat::causality::{causal_lp, random_robustness, witness_sw, ProbabilityTable};
use procmat::io::{MatrixFormat, ProcessFile};
use procmat::process::{allowed_basis, make_named, FamilyParams, NamedProcess, PartyStructure, ProcessMatrix};
use procmat::sampler::{Chain, ChainConfig};
use procmat::seesaw::{prob_table, random_instrument, Party};
use procmat::{HermitianOp, PauliString};

fn sample(seed: u64, steps: usize) -> ProcessMatrix {
    let mut chain = Chain::new(ChainConfig { seed, ..ChainConfig::default() }).unwrap();
    chain.advance(steps).unwrap();
    chain.current().unwrap()
}

fn named(n: NamedProcess) -> ProcessMatrix {
    make_named(n, &FamilyParams::default()).unwrap()
}

fn deterministic_one_way(x_to_a: [usize; 2], ab_to_b: [[usize; 2]; 2]) -> ProbabilityTable {
    ProbabilityTable::from_fn(2, 2, 2, 2, move |a, b, x, y| {
        let a0 = x_to_a[x];
        f64::from(a == a0 && b == ab_to_b[y][a0 ^ x])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn born_rule_is_normalized(seed in 0u64..1000, steps in 50usize..400, settings in 1usize..4, outcomes in 1usize..4) {
        let w = sample(seed, steps);
        let s = w.structure();
        let a = random_instrument(Party::Alice, settings, outcomes, &Party::Alice.spaces(s), seed).unwrap();
        let b = random_instrument(Party::Bob, 2, outcomes, &Party::Bob.spaces(s), seed + 7).unwrap();
        let p = prob_table(&w, &a, &b).unwrap();
        prop_assert!(p.validate(1e-10).is_ok());
        prop_assert!(p.p.iter().all(|v| *v >= -1e-12));
    }

    #[test]
    fn transpose_preserves_correlations(seed in 0u64..1000, steps in 50usize..400) {
        let w = sample(seed, steps);
        let s = w.structure();
        let a = random_instrument(Party::Alice, 2, 2, &Party::Alice.spaces(s), seed).unwrap();
        let b = random_instrument(Party::Bob, 2, 2, &Party::Bob.spaces(s), seed + 1).unwrap();
        let p = prob_table(&w, &a, &b).unwrap();
        let q = prob_table(&w.transpose_bob().unwrap(), &a, &b.transpose()).unwrap();
        for (u, v) in p.p.iter().zip(&q.p) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn robustness_is_convex(seed in 0u64..1000, mu in 0.0f64..1.0) {
        let w1 = sample(seed, 300);
        let w2 = named(NamedProcess::Wocb);
        let r1 = random_robustness(&w1).unwrap().lambda_opt;
        let r2 = random_robustness(&w2).unwrap().lambda_opt;
        let rm = random_robustness(&w1.mix(&w2, mu).unwrap()).unwrap().lambda_opt;
        prop_assert!(rm <= mu * r1 + (1.0 - mu) * r2 + 1e-6);
    }

    #[test]
    fn one_way_mixtures_are_causal(
        xa in prop::array::uniform2(0usize..2),
        bb in prop::array::uniform2(prop::array::uniform2(0usize..2)),
        xb in prop::array::uniform2(0usize..2),
        q in 0.0f64..1.0,
    ) {
        let ab = deterministic_one_way(xa, bb);
        let ba = deterministic_one_way(xb, [[0, 1], [1, 0]]);
        // `ba` read with parties exchanged
        let ba = ProbabilityTable::from_fn(2, 2, 2, 2, |a, b, x, y| ba.get(b, a, y, x));
        let mixed = ProbabilityTable::from_fn(2, 2, 2, 2, |a, b, x, y| q * ab.get(a, b, x, y) + (1.0 - q) * ba.get(a, b, x, y));
        let r = causal_lp(&mixed).unwrap();
        prop_assert!(r.causal);
    }

    #[test]
    fn pauli_files_round_trip(coeffs in prop::collection::vec(-1e-3f64..1e-3, 87)) {
        let basis = allowed_basis(&PartyStructure::qubits()).unwrap();
        let mut terms: Vec<PauliString> = basis.terms.iter().zip(&coeffs).map(|(t, c)| PauliString::new(t.letters.clone(), *c)).collect();
        terms.push("IIII".parse::<PauliString>().map(|p| PauliString::new(p.letters, 0.25)).unwrap());
        let op = HermitianOp::pauli_compose(PartyStructure::qubits().subsystems(), &terms).unwrap();
        let w = ProcessMatrix::new(PartyStructure::qubits(), op).unwrap();
        let text = ProcessFile::from_process(&w, MatrixFormat::Pauli).unwrap().to_json().unwrap();
        let back = ProcessFile::parse(&text).unwrap().to_process(false).unwrap();
        let (c0, c1) = (w.pauli_coefficients().unwrap(), back.pauli_coefficients().unwrap());
        for (u, v) in c0.iter().zip(&c1) {
            prop_assert!((u - v).abs() <= 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn witness_is_nonnegative_on_separable_processes(seed in 0u64..1000) {
        let w = sample(seed, 500);
        let r = random_robustness(&w).unwrap().lambda_opt.max(0.0) + 1e-7;
        let sep = w.with_white_noise(r / (1.0 + r)).unwrap();
        prop_assert!(random_robustness(&sep).unwrap().lambda_opt <= 1e-6);
        prop_assert!(witness_sw().value(&sep).unwrap() >= -1e-6);
    }
}

#[test]
fn guessing_the_neighbour_is_not_causal() {
    let swap = ProbabilityTable::from_fn(2, 2, 2, 2, |a, b, x, y| f64::from(a == y && b == x));
    let r = causal_lp(&swap).unwrap();
    assert!(!r.causal);
    let c = r.certificate.unwrap();
    assert!(c.value > c.bound + 1e-9);
}
