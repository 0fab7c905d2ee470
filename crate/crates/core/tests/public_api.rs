use qsep_core::attacks::{owsg_attack_experiment, SearchMode, ToyOwsg};
use qsep_core::constructions::{chrsm_from_swap, verify_binom_lemma};
use qsep_core::games::{verify_key_lemma, KeyLemmaParams};
use qsep_core::hilbert::{block_ones, rng_for, trace_norm};
use qsep_core::{OracleKind, OracleModel, StateDistribution};

#[test]
fn one_swap_query_gives_phi_minus() {
    let mut rng = rng_for(1, 0);
    let dist = StateDistribution::haar(2);
    for _ in 0..10 {
        let mut oracle = OracleModel::sample(OracleKind::Swap, &dist, &mut rng);
        let out = chrsm_from_swap(&mut oracle).unwrap();
        assert!(out.fidelity(&oracle.hidden().minus()) > 1.0 - 1e-12);
        assert_eq!(oracle.queries(), 1);
    }
}

#[test]
fn binomial_identity_needs_balance() {
    let phase = StateDistribution::discrete_phase(1, 1, 4).unwrap();
    assert!(verify_binom_lemma(&phase, 2, 1).unwrap() <= 1e-9);
    let fixed = StateDistribution::fixed_basis(1, 1).unwrap();
    assert!(verify_binom_lemma(&fixed, 2, 0).unwrap() > 0.01);
}

#[test]
fn block_ones_trace_norm() {
    for (m, n) in [(1, 1), (2, 3), (5, 4)] {
        assert!((trace_norm(&block_ones(m, n, 2)) - ((m * n) as f64).sqrt()).abs() < 1e-10);
    }
}

#[test]
fn key_lemma_small_case_within_bound() {
    let rep = verify_key_lemma(&KeyLemmaParams::new(0, 0, 1, 1, 9)).unwrap();
    assert!(rep.precondition_met);
    assert!(rep.lhs <= rep.bound);
    assert!(rep.global_trace_distance >= 0.5 * rep.lhs - 1e-12);
}

#[test]
fn exact_attack_recovers_an_accepted_key() {
    let n = 2;
    let owsg = ToyOwsg::new(3, 2, 3, 1.0 / (10 * n * n) as f64, 4).unwrap();
    let rep = owsg_attack_experiment(&owsg, &StateDistribution::haar(1), n, SearchMode::ExactOracle, 20, 9).unwrap();
    assert!(rep.min_acceptance >= 1.0 - 1.0 / n as f64);
}
