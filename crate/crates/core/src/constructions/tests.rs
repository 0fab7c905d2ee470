use super::*;
use crate::hilbert::Rng;
use crate::hilbert::{partial_trace, rng_for, sample_haar_dim, sym_projector, trace_distance};
use proptest::prelude::*;

fn phase_dist(n: usize, levels: usize) -> StateDistribution {
    StateDistribution::discrete_phase(n, 1, levels).unwrap()
}

fn haar_embedded(n: usize, seed: u64) -> EmbeddedState {
    let mut rng = rng_for(seed, 0);
    embed(&StateDistribution::haar(n).sample(&mut rng))
}

fn sparse_fid(a: &SparseVec, b: &SparseVec) -> f64 {
    a.inner(b).norm_sqr() / (a.norm().powi(2) * b.norm().powi(2))
}

#[test]
fn set_state_examples() {
    let phi = haar_embedded(1, 1);
    let f = phi.flag();
    assert!(set_state(3, &[], &phi).unwrap().fidelity(&f.tensor_power(3)) > 1.0 - 1e-12);
    let full = set_state(3, &[0, 1, 2], &phi).unwrap();
    // Amplitude equality, not just fidelity: the sign is (−1)^t.
    let expected = phi.state().tensor_power(3).amps() * c(-1.0);
    assert!((full.amps() - expected).norm() < 1e-12);
    let a = set_state(3, &[0], &phi).unwrap();
    let b = set_state(3, &[1], &phi).unwrap();
    assert!(a.inner(&b).norm() < 1e-12);
    assert!(set_state(2, &[2], &phi).is_err());
    assert!(set_state(2, &[0, 0], &phi).is_err());
}

#[test]
fn rep_state_examples() {
    let phi = haar_embedded(1, 2);
    assert!(rep_state(4, 0, &phi).unwrap().fidelity(&phi.flag().tensor_power(4)) > 1.0 - 1e-12);
    for t in 1..=4 {
        let mut recon = CVec::zeros(phi.dim().pow(t as u32));
        for c_ in 0..=t {
            let r = rep_state(t, c_, &phi).unwrap();
            recon += r.amps() * c((comb::binom(t as i64, c_ as i64) / 2f64.powi(t as i32)).sqrt());
            for c2 in 0..=t {
                let ip = r.inner(&rep_state(t, c2, &phi).unwrap()).norm();
                assert!((ip - if c_ == c2 { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!((recon - phi.minus().tensor_power(t).amps()).norm() < 1e-12);
    }
    assert!(rep_state(2, 3, &phi).is_err());
}

#[test]
fn postselection_outputs_phi() {
    let dist = StateDistribution::haar(2);
    let mut rng = rng_for(3, 0);
    let mut oracle = OracleModel::sample(OracleKind::ChrsMinus, &dist, &mut rng);
    let mut successes = 0;
    for _ in 0..50 {
        if let Some(out) = chrs_from_chrsm(&mut oracle, 4, &mut rng).unwrap() {
            assert!((out.state().fidelity(oracle.hidden().state()) - 1.0).abs() < 1e-12);
            successes += 1;
        }
    }
    assert!(successes > 0);
    assert!(chrs_from_chrsm(&mut oracle, 0, &mut rng).unwrap().is_none());
    let mut wrong = oracle.sibling(OracleKind::Chrs);
    assert!(chrs_from_chrsm(&mut wrong, 1, &mut rng).is_err());
}

#[test]
fn postselection_attempt_probability_is_half() {
    let phi = haar_embedded(2, 4);
    let mut sv = StateVector::empty();
    let reg = sv.append(&phi.minus());
    let p0 = phi.flag().projector();
    let probs = sv.probabilities(&[reg], &[p0.clone(), CMat::identity(phi.dim(), phi.dim()) - p0]).unwrap();
    assert!((probs[0] - 0.5).abs() < 1e-12 && (probs[1] - 0.5).abs() < 1e-12);
}

#[test]
fn postselection_failure_rate_m3() {
    let dist = StateDistribution::haar(1);
    let trials = 10_000u64;
    let fails = crate::stats::run_trials(11, 0, trials, |_, rng| {
        let mut o = OracleModel::sample(OracleKind::ChrsMinus, &dist, rng);
        chrs_from_chrsm(&mut o, 3, rng).unwrap().is_none()
    });
    let rate = crate::stats::Rate::from_outcomes(&fails);
    assert!((rate.mean() - 0.125).abs() <= 3.0 * (0.125f64 * 0.875 / trials as f64).sqrt(), "rate {}", rate.mean());
}

fn circuit_matches(t_sim: usize, c_: usize, phi: &EmbeddedState) {
    let mut oracle = OracleModel::with_embedded(OracleKind::Chrs, phi.clone());
    let sim = SimChrsState::init_with_count(t_sim, c_, &mut oracle).unwrap();
    assert_eq!(oracle.queries(), c_);
    let expected = SimChrsState::expected_internal_state(t_sim, c_, phi).unwrap();
    assert_eq!(sim.internal_state().layout(), expected.layout());
    let f = sparse_fid(sim.internal_state().vec(), expected.vec());
    assert!((f - 1.0).abs() < 1e-12, "T={t_sim} c={c_} fidelity {f}");
    let a = sim.a_registers().unwrap();
    let rep = rep_state_sparse(t_sim, c_, phi).unwrap();
    assert!((sparse_fid(a.vec(), &rep) - 1.0).abs() < 1e-12);
}

#[test]
fn sim_circuit_equals_rep_state() {
    let mut rng = rng_for(5, 0);
    let phase = phase_dist(1, 4);
    for t_sim in 0..=6 {
        for c_ in 0..=t_sim {
            circuit_matches(t_sim, c_, &haar_embedded(1, 100 + (t_sim * 7 + c_) as u64));
            circuit_matches(t_sim, c_, &embed(&phase.sample(&mut rng)));
        }
    }
    for c_ in 0..=3 {
        circuit_matches(3, c_, &haar_embedded(2, 77));
    }
}

#[test]
fn sim_trivial_and_query_order() {
    let phi = haar_embedded(1, 6);
    let mut oracle = OracleModel::with_embedded(OracleKind::Chrs, phi.clone());
    let sim = SimChrsState::init_with_count(1, 0, &mut oracle).unwrap();
    let a = sim.a_registers().unwrap();
    assert!((sparse_fid(a.vec(), &SparseVec::basis(phi.dim(), 0)) - 1.0).abs() < 1e-12);

    let mut rng = rng_for(6, 1);
    let mut sim = SimChrsState::init(3, &mut oracle, &mut rng).unwrap();
    assert!(sim.count() <= 3);
    assert!(sim.query(2).is_err());
    assert_eq!(sim.query(1).unwrap(), 0);
    assert_eq!(sim.query(2).unwrap(), 1);
    assert_eq!(sim.query(3).unwrap(), 2);
    assert!(matches!(sim.query(4), Err(Error::QueryIndex { index: 4, budget: 3 })));
    let mut wrong = oracle.sibling(OracleKind::ChrsMinus);
    assert!(SimChrsState::init_with_count(2, 1, &mut wrong).is_err());
}

#[test]
fn sim_joint_density_matches_chrsm_world() {
    // Average over φ (exact, finite support) and c ~ B(T,1/2) of
    // |A₁..A_T⟩⟨·| ⊗ |φ⟩⟨φ|^{⊗2}, against E|φ−⟩⟨φ−|^{⊗T} ⊗ |φ⟩⟨φ|^{⊗2}.
    let t_sim = 3;
    let dist = phase_dist(1, t_sim + 3);
    let support = dist.finite_support().unwrap();
    let d = dist.dim() + 1;
    let dim = d.pow((t_sim + 2) as u32);
    let mut lhs = SparseOperator::new(dim);
    let mut rhs = SparseOperator::new(dim);
    for (w, phi) in &support {
        let e = embed(phi);
        let ev = SparseVec::from_dense(e.state().amps());
        let extra = ev.tensor(&ev);
        for c_ in 0..=t_sim {
            let mut oracle = OracleModel::with_embedded(OracleKind::Chrs, e.clone());
            let sim = SimChrsState::init_with_count(t_sim, c_, &mut oracle).unwrap();
            let a = sim.a_registers().unwrap().into_vec();
            lhs.add_outer(w * comb::binomial_pmf(t_sim, c_), &a.tensor(&extra));
        }
        let mv = SparseVec::from_dense(e.minus().amps());
        let mut v = SparseVec::basis(1, 0);
        for _ in 0..t_sim {
            v = v.tensor(&mv);
        }
        rhs.add_outer(*w, &v.tensor(&extra));
    }
    assert!(lhs.max_abs_diff(&rhs) < 1e-9);
    assert!(lhs.trace_distance(&rhs) < 1e-9);
}

#[test]
fn binom_lemma_discrete_phase() {
    for n in 1..=2 {
        for t1 in 0..=3 {
            for t2 in 0..=2 {
                let dist = phase_dist(n, t1 + t2 + 1);
                let td = verify_binom_lemma(&dist, t1, t2).unwrap();
                assert!(td <= 1e-9, "n={n} t1={t1} t2={t2}: {td}");
            }
        }
    }
}

#[test]
fn binom_lemma_haar() {
    for t1 in 0..=3 {
        for t2 in 0..=2 {
            let td = verify_binom_lemma(&StateDistribution::haar(1), t1, t2).unwrap();
            assert!(td <= 1e-9, "t1={t1} t2={t2}: {td}");
        }
    }
    assert!(verify_binom_lemma(&StateDistribution::haar(2), 2, 1).unwrap() <= 1e-9);
}

#[test]
fn binom_lemma_unbalanced_witness() {
    let fixed = StateDistribution::fixed_basis(1, 1).unwrap();
    assert!(verify_binom_lemma(&fixed, 2, 0).unwrap() > 0.01);
    assert!(verify_binom_lemma(&fixed, 3, 1).unwrap() > 0.01);
    assert_eq!(verify_binom_lemma(&fixed, 0, 2).unwrap(), 0.0);
    assert_eq!(verify_binom_lemma(&StateDistribution::haar(1), 0, 2).unwrap(), 0.0);
}

#[test]
fn haar_moment_matches_symmetric_projector() {
    // t₁ = 0: the moment is Π_sym/C(N+k−1,k) on the non-flag block.
    let n_dim = 2;
    for k in 1..=3 {
        let (rho, _) = binom_lemma_states(&StateDistribution::haar(1), 0, k).unwrap();
        let sym = sym_projector(n_dim, k) / c(comb::binom((n_dim + k - 1) as i64, k as i64));
        let kd = vec![n_dim; k];
        let full = vec![n_dim + 1; k];
        let lift = |i: usize| comb::undigits(&comb::digits(i, &kd).iter().map(|x| x + 1).collect::<Vec<_>>(), &full);
        let dense = rho.to_dense();
        let mut lifted = CMat::zeros(dense.nrows(), dense.ncols());
        for i in 0..sym.nrows() {
            for j in 0..sym.ncols() {
                lifted[(lift(i), lift(j))] = sym[(i, j)];
            }
        }
        assert!((dense - lifted).camax() < 1e-12);
    }
}

#[test]
fn haar_moment_matches_monte_carlo() {
    let (rho, _) = binom_lemma_states(&StateDistribution::haar(1), 1, 1).unwrap();
    let samples = 20_000;
    let mut rng = rng_for(9, 0);
    let mut acc = CMat::zeros(9, 9);
    for _ in 0..samples {
        let e = embed(&sample_haar_dim(2, &mut rng));
        acc += e.minus().tensor(e.state()).projector();
    }
    acc /= c(samples as f64);
    assert!((acc - rho.to_dense()).camax() < 0.02);
}

fn brute_reflection(rho: &CMat, psi: &PureState, t: usize) -> CMat {
    let d = psi.dim();
    let joint = crate::hilbert::kron(rho, &psi.tensor_power(t).projector());
    let r = CMat::identity(joint.nrows(), joint.nrows()) - sym_projector(d, t + 1) * c(2.0);
    let out = &r * joint * r.adjoint();
    partial_trace(&out, &RegisterLayout::uniform(d, t + 1), &[0]).unwrap()
}

fn closed_form_reflection(rho: &CMat, psi: &PureState, t: usize) -> CMat {
    let d = psi.dim();
    let p = psi.projector();
    let q = CMat::identity(d, d) - &p;
    let tf = t as f64;
    let k0 = -&p + &q * c((tf - 1.0) / (tf + 1.0));
    let leak = (&q * rho).trace().re * 4.0 * tf / ((tf + 1.0) * (tf + 1.0));
    &k0 * rho * k0.adjoint() + p * c(leak)
}

fn random_density(d: usize, rank: usize, rng: &mut Rng) -> CMat {
    let mut m = CMat::zeros(d, d);
    let mut w = Vec::new();
    for _ in 0..rank {
        w.push(rand::Rng::random::<f64>(rng));
    }
    let total: f64 = w.iter().sum();
    for wi in w {
        m += sample_haar_dim(d, rng).projector() * c(wi / total);
    }
    m
}

#[test]
fn reflection_matches_brute_force() {
    let mut rng = rng_for(12, 0);
    for t in 1..=3 {
        let psi = sample_haar_dim(3, &mut rng);
        let ch = ReflectionChannel::new(&psi, t).unwrap();
        assert!(ch.kraus().len() <= 9);
        let tp = ch.kraus().iter().map(|k| k.adjoint() * k).fold(CMat::zeros(3, 3), |a, b| a + b);
        assert!((tp - CMat::identity(3, 3)).camax() < 1e-12);
        for _ in 0..5 {
            let rho = random_density(3, 2, &mut rng);
            let fast = ch.apply(&rho).unwrap();
            assert!((&fast - brute_reflection(&rho, &psi, t)).camax() < 1e-10);
            assert!((fast - closed_form_reflection(&rho, &psi, t)).camax() < 1e-10);
        }
    }
}

#[test]
fn reflection_examples() {
    let mut rng = rng_for(13, 0);
    let psi = sample_haar_dim(4, &mut rng);
    let copies = vec![psi.clone(); 5];
    let out = reflect_about_state_sim(&psi.density(), &copies).unwrap();
    assert!((out.matrix() - psi.projector()).camax() < 1e-12);

    // Orthogonal input at t = 1: R(v⊗ψ) = −ψ⊗v, so the first register ends in ψ.
    let v = PureState::basis(2, 0);
    let psi2 = PureState::basis(2, 1);
    let out = reflect_about_state_sim(&v.density(), std::slice::from_ref(&psi2)).unwrap();
    assert!((out.matrix() - psi2.projector()).camax() < 1e-12);

    assert!(reflect_about_state_sim(&PureState::basis(3, 0).density(), &copies).is_err());
    assert!(reflect_about_state_sim(&psi.density(), &[]).is_err());
}

#[test]
fn reflection_error_envelope_d4() {
    // Trace distance ½‖Q(ρ) − RρR‖₁ against 2/√(t+1).
    let mut rng = rng_for(14, 0);
    let psi = sample_haar_dim(4, &mut rng);
    let r = CMat::identity(4, 4) - psi.projector() * c(2.0);
    let mut prev_mean = f64::INFINITY;
    for t in [1usize, 3, 7, 15] {
        let ch = ReflectionChannel::new(&psi, t).unwrap();
        let mut worst = 0.0f64;
        let mut total = 0.0;
        for k in 0..100 {
            let rho = random_density(4, 1 + k % 4, &mut rng);
            let err = trace_distance(&ch.apply(&rho).unwrap(), &(&r * &rho * r.adjoint()));
            worst = worst.max(err);
            total += err;
        }
        assert!(worst <= 2.0 / ((t + 1) as f64).sqrt(), "t={t}: {worst}");
        assert!(total / 100.0 <= prev_mean);
        prev_mean = total / 100.0;
        let rho = random_density(4, 2, &mut rng);
        assert!((ch.apply(&rho).unwrap() - closed_form_reflection(&rho, &psi, t)).camax() < 1e-10);
    }
}

#[test]
fn reflection_trace_norm_error_on_orthogonal_input() {
    // For v ⟂ ψ the error operator is (4t/(t+1)²)(|v⟩⟨v| − |ψ⟩⟨ψ|), so
    // ‖Q(ρ) − RρR‖₁ = 8t/(t+1)², which exceeds 2/√(t+1) for t ≤ 12.
    let psi = PureState::basis(4, 0);
    let v = PureState::basis(4, 2);
    let r = CMat::identity(4, 4) - psi.projector() * c(2.0);
    for t in 1..=20usize {
        let out = ReflectionChannel::new(&psi, t).unwrap().apply(&v.projector()).unwrap();
        let err = crate::hilbert::trace_norm(&(out - &r * v.projector() * r.adjoint()));
        let tf = t as f64;
        assert!((err - 8.0 * tf / ((tf + 1.0) * (tf + 1.0))).abs() < 1e-10);
        assert_eq!(err <= 2.0 / (tf + 1.0).sqrt(), t >= 13, "t={t}");
    }
}

#[test]
fn approx_swap_examples() {
    let dist = StateDistribution::haar(1);
    let mut rng = rng_for(15, 0);
    let mut oracle = OracleModel::sample(OracleKind::ChrsMinus, &dist, &mut rng);
    let phi = oracle.hidden().clone();
    let layout = RegisterLayout::uniform(3, 1);

    let mut sw = swap_from_chrsm(&mut oracle, 99, 2).unwrap();
    assert_eq!(oracle.queries(), 198);
    let out = approx_swap_apply(&mut sw, &phi.flag().projector(), &layout, 0).unwrap();
    assert!(trace_distance(&out, &phi.state().projector()) <= 0.2);

    // A vector orthogonal to both the flag and φ.
    let a = phi.state().amps();
    let perp = PureState::normalized(CVec::from_vec(vec![c(0.0), -a[2].conj(), a[1].conj()])).unwrap();
    let out = approx_swap_apply(&mut sw, &perp.projector(), &layout, 0).unwrap();
    assert!(trace_distance(&out, &perp.projector()) <= 2.0 / 10.0);
    assert!(matches!(approx_swap_apply(&mut sw, &perp.projector(), &layout, 0), Err(Error::PoolExhausted { .. })));
    assert_eq!(sw.queries(), 2);
}

#[test]
fn approx_swap_error_decreases_with_t() {
    let mut rng = rng_for(16, 0);
    let mut oracle = OracleModel::sample(OracleKind::ChrsMinus, &StateDistribution::haar(1), &mut rng);
    let swap = oracle.hidden().swap_matrix();
    let layout = RegisterLayout::uniform(3, 1);
    let inputs: Vec<CMat> = (0..10).map(|k| random_density(3, 1 + k % 3, &mut rng)).collect();
    let mut prev = f64::INFINITY;
    for t in [1usize, 2, 4, 8, 16, 32] {
        let mut sw = swap_from_chrsm(&mut oracle, t, inputs.len()).unwrap();
        let mut total = 0.0;
        for rho in &inputs {
            let out = sw.apply(rho, &layout, 0).unwrap();
            let err = trace_distance(&out, &(&swap * rho * swap.adjoint()));
            assert!(err <= 2.0 / ((t + 1) as f64).sqrt());
            total += err;
        }
        assert!(total < prev, "t={t}");
        prev = total;
    }
}

#[test]
fn approx_swap_on_one_register_of_two() {
    let mut rng = rng_for(17, 0);
    let mut oracle = OracleModel::sample(OracleKind::ChrsMinus, &StateDistribution::haar(1), &mut rng);
    let mut exact = oracle.sibling(OracleKind::Swap);
    let layout = RegisterLayout::uniform(3, 2);
    let rho = random_density(9, 3, &mut rng);
    let t = 24;
    let mut sw = swap_from_chrsm(&mut oracle, t, 1).unwrap();
    let approx = sw.apply(&rho, &layout, 1).unwrap();
    let ideal = exact.apply_swap_density(&rho, &layout, 1).unwrap();
    assert!(trace_distance(&approx, &ideal) <= 2.0 / ((t + 1) as f64).sqrt());
}

#[test]
fn chrsm_from_swap_examples() {
    let mut rng = rng_for(18, 0);
    let mut oracle = OracleModel::sample(OracleKind::Swap, &StateDistribution::haar(2), &mut rng);
    let out = chrsm_from_swap(&mut oracle).unwrap();
    assert_eq!(oracle.queries(), 1);
    assert!((out.fidelity(&oracle.hidden().minus()) - 1.0).abs() < 1e-12);

    let mut fixed = OracleModel::sample(OracleKind::Swap, &StateDistribution::fixed_basis(1, 1).unwrap(), &mut rng);
    let out = chrsm_from_swap(&mut fixed).unwrap();
    let s = 0.5f64.sqrt();
    let expected = PureState::new(CVec::from_vec(vec![c(s), c(0.0), c(-s)])).unwrap();
    assert!((out.fidelity(&expected) - 1.0).abs() < 1e-12);

    let mut wrong = oracle.sibling(OracleKind::Chrs);
    assert!(chrsm_from_swap(&mut wrong).is_err());
}

#[test]
fn composition_failure_rate() {
    // Postselection fed by the Swap-based CHRS− sampler.
    let dist = StateDistribution::haar(1);
    let m = 3;
    let trials = 10_000u64;
    let fails = crate::stats::run_trials(19, 0, trials, |_, rng| {
        let mut o = OracleModel::sample(OracleKind::Swap, &dist, rng);
        let phi = o.hidden().clone();
        let mut sv = StateVector::empty();
        let out = chrs_from_source_into(|sv| chrsm_from_swap_into(&mut o, sv), 3, &mut sv, m, rng).unwrap();
        if let Some(reg) = out {
            let rho = sv.reduced(&[reg]).unwrap();
            let fid = (phi.state().amps().adjoint() * &rho * phi.state().amps())[(0, 0)].re;
            assert!((fid - 1.0).abs() < 1e-12);
        }
        out.is_none()
    });
    let rate = crate::stats::Rate::from_outcomes(&fails);
    assert!((rate.mean() - 0.125).abs() <= 3.0 * (0.125f64 * 0.875 / trials as f64).sqrt(), "rate {}", rate.mean());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prop_sim_circuit_agrees(seed in any::<u64>(), t_sim in 0usize..=5, frac in 0.0f64..=1.0) {
        let c_ = ((t_sim as f64) * frac).round() as usize;
        circuit_matches(t_sim, c_, &haar_embedded(1, seed));
    }

    #[test]
    fn prop_chrsm_from_swap_exact(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = rng_for(seed, 0);
        let mut o = OracleModel::sample(OracleKind::Swap, &StateDistribution::haar(n), &mut rng);
        let mut chrsm = o.sibling(OracleKind::ChrsMinus);
        let out = chrsm_from_swap(&mut o).unwrap();
        prop_assert!((out.fidelity(&chrsm.query_chrsm().unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prop_reflection_envelope(seed in any::<u64>(), t in 1usize..=12) {
        let mut rng = rng_for(seed, 1);
        let psi = sample_haar_dim(3, &mut rng);
        let rho = random_density(3, 3, &mut rng);
        let r = CMat::identity(3, 3) - psi.projector() * c(2.0);
        let out = ReflectionChannel::new(&psi, t).unwrap().apply(&rho).unwrap();
        prop_assert!(trace_distance(&out, &(&r * &rho * r.adjoint())) <= 2.0 / ((t + 1) as f64).sqrt() + 1e-12);
    }
}
