use super::postselection_suite::{CrossSwap, FlagCount, ReferenceSwap};
use super::*;
use crate::hilbert::Rng;
use crate::constructions::rep_state_sparse;
use crate::hilbert::{c, comb, kron, rng_for, sample_haar_dim, sym_projector, SparseOperator, SparseVec};
use crate::oracles::embed;
use proptest::prelude::*;

fn haar(n: usize) -> StateDistribution {
    StateDistribution::haar(n)
}

/// Queries slot 1 `times` times while declaring a budget of `budget`.
struct Greedy {
    budget: usize,
    times: usize,
}

impl Distinguisher for Greedy {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn budgets(&self) -> (usize, usize) {
        (self.budget, 0)
    }

    fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
        for _ in 0..self.times {
            net.query(0, 1, rng)?;
        }
        Ok(1.0)
    }
}

#[test]
fn budget_overrun_is_refused() {
    let w = World::primitives(haar(1), OracleKind::ChrsMinus, OracleKind::ChrsMinus);
    let err = run_world(&w, &Greedy { budget: 2, times: 3 }, 4, 1, 0).unwrap_err();
    assert!(matches!(err, Error::BudgetExceeded { oracle: 1, budget: 2 }));
    assert!(run_world(&w, &Greedy { budget: 3, times: 3 }, 4, 1, 0).is_ok());
}

#[test]
fn advantage_is_symmetric_in_the_worlds() {
    let real = World::postselection_real(haar(2), 2);
    let ideal = World::rep_sim_ideal(haar(2), 2);
    let d = FlagCount { t2: 2 };
    let a = indiff_advantage(&real, &ideal, &d, 2000, 9).unwrap();
    let b = indiff_advantage(&ideal, &real, &d, 2000, 9).unwrap();
    assert_eq!(a.advantage(), b.advantage());
    assert_eq!(a.stderr(), b.stderr());
}

#[test]
fn coin_has_no_advantage() {
    let real = World::postselection_real(haar(2), 2);
    let ideal = World::rep_sim_ideal(haar(2), 2);
    let a = indiff_advantage(&real, &ideal, &postselection_suite::Coin, 4000, 3).unwrap();
    assert!(a.advantage() <= 3.0 * a.stderr() + 1e-12, "{a:?}");
}

#[test]
fn postselection_worlds_flag_count_matches_failure_rate() {
    // Real answers are ⊥ w.p. 2^{-m} each; the simulated ones never are.
    let (m, t2) = (2, 2);
    let real = run_world(&World::postselection_real(haar(2), m), &FlagCount { t2 }, 4000, 5, 0).unwrap();
    let ideal = run_world(&World::rep_sim_ideal(haar(2), 1), &FlagCount { t2 }, 4000, 5, 0).unwrap();
    let expect = 1.0 - (1.0 - 0.25f64).powi(t2 as i32);
    // Failures are sampled mid-run, so the real mean is a Monte Carlo estimate.
    assert!((real.mean_probability - expect).abs() < 4.0 * (0.25f64 / 4000.0).sqrt(), "{}", real.mean_probability);
    assert!(ideal.mean_probability.abs() < 1e-12);
}

#[test]
fn cross_swap_accepts_three_quarters_in_both_worlds() {
    let trials = 4000;
    let real = run_world(&World::postselection_real(haar(2), 8), &CrossSwap, trials, 2, 0).unwrap();
    let ideal = run_world(&World::rep_sim_ideal(haar(2), 1), &CrossSwap, trials, 2, 0).unwrap();
    // Per-trial acceptance is 1/2 or 1 depending on sampled counts and ⊥
    // outcomes, so the spread is at most 1/4 per trial.
    let tol = 4.0 * 0.25 / (trials as f64).sqrt() + 2f64.powi(-8);
    assert!((real.mean_probability - 0.75).abs() < tol, "{}", real.mean_probability);
    assert!((ideal.mean_probability - 0.75).abs() < tol, "{}", ideal.mean_probability);
}

#[test]
fn unbalanced_fixed_state_is_distinguished() {
    let dist = StateDistribution::fixed_basis(1, 0).unwrap();
    let reference = dist.sample(&mut rng_for(0, 0));
    let d = ReferenceSwap { reference };
    let real = run_world(&World::postselection_real(dist.clone(), 4), &d, 200, 1, 0).unwrap();
    let ideal = run_world(&World::rep_sim_ideal(dist, 1), &d, 200, 1, 0).unwrap();
    assert!((real.mean_probability - 1.0).abs() < 1e-12);
    assert!((ideal.mean_probability - 0.75).abs() < 1e-12);
}

#[test]
fn composing_with_the_exact_swap_simulator_preserves_behavior() {
    let reference = sample_haar_dim(4, &mut rng_for(77, 0));
    let adv: Arc<dyn Distinguisher> = Arc::new(ReferenceSwap { reference });
    let direct = run_world(&World::primitives(haar(2), OracleKind::ChrsMinus, OracleKind::ChrsMinus), adv.as_ref(), 300, 4, 0).unwrap();
    let composed = compose_adversary(Arc::clone(&adv), Arc::new(SwapToMinus)).unwrap();
    let via = run_world(&World::primitives(haar(2), OracleKind::Swap, OracleKind::ChrsMinus), &composed, 300, 4, 0).unwrap();
    assert!((direct.mean_probability - via.mean_probability).abs() < 1e-12);
    assert!(direct.mean_probability > 0.5 && direct.mean_probability < 1.0);

    let same = compose_adversary(Arc::clone(&adv), Arc::new(Passthrough(OracleKind::ChrsMinus))).unwrap();
    let w = World::primitives(haar(2), OracleKind::ChrsMinus, OracleKind::ChrsMinus);
    assert_eq!(run_world(&w, &same, 300, 4, 0).unwrap().mean_probability, direct.mean_probability);
}

#[test]
fn composition_rejects_interface_mismatch() {
    struct WantsChrs;
    impl Distinguisher for WantsChrs {
        fn name(&self) -> String {
            "wants-chrs".into()
        }
        fn budgets(&self) -> (usize, usize) {
            (1, 0)
        }
        fn expects(&self) -> [Option<OracleKind>; 2] {
            [Some(OracleKind::Chrs), None]
        }
        fn run(&self, _: &mut Network, _: &mut Rng) -> Result<f64> {
            Ok(0.0)
        }
    }
    assert!(matches!(compose_adversary(Arc::new(WantsChrs), Arc::new(SwapToMinus)), Err(Error::WrongOracle { .. })));
    // A composed adversary run against the wrong primitive is refused too.
    let comp = compose_adversary(Arc::new(Greedy { budget: 1, times: 1 }), Arc::new(SwapToMinus)).unwrap();
    let w = World::primitives(haar(1), OracleKind::ChrsMinus, OracleKind::ChrsMinus);
    assert!(matches!(run_world(&w, &comp, 1, 0, 0), Err(Error::WrongOracle { .. })));
}

/// Spends two underlying queries per answer.
struct Doubler;

impl Simulator for Doubler {
    fn requires(&self) -> OracleKind {
        OracleKind::ChrsMinus
    }
    fn provides(&self) -> OracleKind {
        OracleKind::ChrsMinus
    }
    fn cost(&self) -> usize {
        2
    }
    fn answer(&self, under: &mut dyn Oracle, ws: &mut StateVector, rng: &mut Rng) -> Result<usize> {
        under.query(ws, rng)?;
        under.query(ws, rng)
    }
}

/// Declares one query per answer but spends two.
struct Cheater;

impl Simulator for Cheater {
    fn requires(&self) -> OracleKind {
        OracleKind::ChrsMinus
    }
    fn provides(&self) -> OracleKind {
        OracleKind::ChrsMinus
    }
    fn cost(&self) -> usize {
        1
    }
    fn answer(&self, under: &mut dyn Oracle, ws: &mut StateVector, rng: &mut Rng) -> Result<usize> {
        Doubler.answer(under, ws, rng)
    }
}

/// Queries slot 1 `t` times and reports how many primitive queries that took
/// as the output probability numerator over 100.
struct Counter {
    t: usize,
}

impl Distinguisher for Counter {
    fn name(&self) -> String {
        "counter".into()
    }
    fn budgets(&self) -> (usize, usize) {
        (self.t, 0)
    }
    fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
        for _ in 0..self.t {
            net.query(0, 1, rng)?;
        }
        Ok(net.primitive_queries(1) as f64 / 100.0)
    }
}

#[test]
fn composed_budget_is_the_product() {
    let comp = compose_adversary(Arc::new(Counter { t: 3 }), Arc::new(Doubler)).unwrap();
    assert_eq!(comp.budgets(), (6, 0));
    let w = World::primitives(haar(1), OracleKind::ChrsMinus, OracleKind::ChrsMinus);
    let r = run_world(&w, &comp, 2, 0, 0).unwrap();
    assert!((r.mean_probability - 0.06).abs() < 1e-12);

    let cheat = compose_adversary(Arc::new(Counter { t: 1 }), Arc::new(Cheater)).unwrap();
    assert!(matches!(run_world(&w, &cheat, 1, 0, 0), Err(Error::BudgetExceeded { .. })));
}

/// Each party swap-tests two local |φ−⟩ copies; party 1 reports to party 0.
struct LocalSwapReport;

impl Distinguisher for LocalSwapReport {
    fn name(&self) -> String {
        "local-swap-report".into()
    }
    fn parties(&self) -> usize {
        2
    }
    fn budgets(&self) -> (usize, usize) {
        (4, 0)
    }
    fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
        let d = net.register_dim(0, 1)?;
        let sym = (CMat::identity(d * d, d * d) + crate::hilbert::swap_operator(d)) * c(0.5);
        let anti = CMat::identity(d * d, d * d) - &sym;
        let mut bits = [0usize; 2];
        for (p, b) in bits.iter_mut().enumerate() {
            let r = [net.query(p, 1, rng)?, net.query(p, 1, rng)?];
            *b = net.measure(p, &r, &[anti.clone(), sym.clone()], rng)?;
        }
        net.send(1, 0, Payload::Classical(vec![bits[1] as u64]))?;
        let other = net.receive(0)?[0] as usize;
        Ok(if other == bits[0] { 1.0 } else { 0.0 })
    }
}

#[test]
fn locc_run_single_party_and_transcript() {
    let w = World::primitives(haar(1), OracleKind::ChrsMinus, OracleKind::ChrsMinus);
    let (bit, t) = locc_run(&w, &Greedy { budget: 2, times: 2 }, 5).unwrap();
    assert!(bit);
    assert_eq!(t.queries.len(), 1);
    assert_eq!(t.queries[0].len(), 2);
    assert!(t.messages.is_empty());

    let (bit, t) = locc_run(&w, &LocalSwapReport, 6).unwrap();
    assert!(bit, "copies of one pure state always pass");
    assert_eq!(t.messages, vec![Message { from: 1, to: 0, payload: vec![1] }]);
    assert_eq!(t.queries.iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 2]);
    // Registers are disjoint across parties.
    let regs: std::collections::BTreeSet<usize> = t.queries.iter().flatten().map(|q| q.register).collect();
    assert_eq!(regs.len(), 4);
}

#[test]
fn quantum_payloads_and_foreign_registers_are_refused() {
    struct Leaky;
    impl Distinguisher for Leaky {
        fn name(&self) -> String {
            "leaky".into()
        }
        fn parties(&self) -> usize {
            2
        }
        fn budgets(&self) -> (usize, usize) {
            (1, 0)
        }
        fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
            let r = net.query(1, 1, rng)?;
            net.send(1, 0, Payload::Quantum(r))?;
            Ok(0.0)
        }
    }
    struct Peek;
    impl Distinguisher for Peek {
        fn name(&self) -> String {
            "peek".into()
        }
        fn parties(&self) -> usize {
            2
        }
        fn budgets(&self) -> (usize, usize) {
            (1, 0)
        }
        fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
            let r = net.query(1, 1, rng)?;
            let d = net.register_dim(0, 1)?;
            Ok(net.expectation(0, &[r], &CMat::identity(d, d))?.re)
        }
    }
    let w = World::primitives(haar(1), OracleKind::ChrsMinus, OracleKind::ChrsMinus);
    assert!(matches!(locc_run(&w, &Leaky, 0), Err(Error::QuantumMessage)));
    assert!(matches!(locc_run(&w, &Peek, 0), Err(Error::InvalidArgument(_))));
}

#[test]
fn ppt_bound_of_equal_states_is_zero_and_layouts_must_match() {
    let p = KeyLemmaParams::new(0, 0, 1, 1, 4);
    let (r, _) = key_lemma_states(&p).unwrap();
    assert!(ppt_bound(&r, &r, &p.layout(), &p.second_party()).unwrap() < 1e-12);
    let small = SparseOperator::new(5);
    assert!(matches!(ppt_bound(&r, &small, &p.layout(), &p.second_party()), Err(Error::LayoutMismatch(_))));
}

#[test]
fn key_lemma_smallest_case() {
    let p = KeyLemmaParams::new(0, 0, 1, 1, 9);
    let rep = verify_key_lemma(&p).unwrap();
    assert!(rep.precondition_met);
    assert!((rep.bound - std::f64::consts::E * 32.0 / 3.0).abs() < 1e-12);
    assert!(rep.lhs <= rep.bound && rep.holds());
    let (r, s) = key_lemma_states(&p).unwrap();
    let dense = ppt_bound_dense(&r.to_dense(), &s.to_dense(), &p.layout(), &p.second_party()).unwrap();
    assert!((2.0 * dense - rep.lhs).abs() < 1e-10);
}

#[test]
fn key_lemma_precondition_gate() {
    let rep = verify_key_lemma(&KeyLemmaParams::new(0, 0, 1, 1, 4)).unwrap();
    assert!(!rep.precondition_met);
    assert!(rep.lhs.is_finite() && rep.holds());
}

#[test]
fn key_lemma_states_are_normalized_and_degenerate_without_a_second_block() {
    for p in [KeyLemmaParams::new(1, 0, 1, 1, 4), KeyLemmaParams::new(0, 1, 2, 0, 4), KeyLemmaParams::new(1, 1, 0, 1, 3)] {
        let (r, s) = key_lemma_states(&p).unwrap();
        assert!((r.trace().re - 1.0).abs() < 1e-10);
        assert!((s.trace().re - 1.0).abs() < 1e-10);
        if p.b1 == 0 || p.b2 == 0 {
            assert!(r.max_abs_diff(&s) < 1e-12);
        }
    }
}

#[test]
fn collision_free_conditioning_within_birthday_bound() {
    for p in [KeyLemmaParams::new(0, 0, 1, 1, 4), KeyLemmaParams::new(1, 0, 1, 1, 4), KeyLemmaParams::new(1, 1, 1, 0, 5)] {
        let (r, s) = mainthm_states(&p).unwrap();
        let (rt, st) = key_lemma_states(&p).unwrap();
        let t = p.total() as f64;
        let n = p.n_dim as f64;
        assert!(r.trace_distance(&rt) <= t * t / n + 1e-12);
        assert!(s.trace_distance(&st) <= t * t / n + 1e-12);
    }
}

/// Embeds C^N into C^{N+1} above the flag.
fn embedding(n: usize) -> CMat {
    CMat::from_fn(n + 1, n, |i, j| if i == j + 1 { c(1.0) } else { c(0.0) })
}

/// The isometry sending φ^{⊗c} to Rep_{b,c}(φ).
fn rep_isometry(n: usize, b: usize, k: usize) -> CMat {
    let d = n + 1;
    let mut v = CMat::zeros(d.pow(b as u32), n.pow(k as u32));
    let scale = comb::binom(b as i64, k as i64).powf(-0.5) * if k % 2 == 1 { -1.0 } else { 1.0 };
    for s in comb::subsets(b, k) {
        for col in 0..n.pow(k as u32) {
            let xs = comb::digits(col, &vec![n; k]);
            let mut digs = vec![0; b];
            for (pos, x) in s.iter().zip(&xs) {
                digs[*pos] = x + 1;
            }
            v[(comb::undigits(&digs, &vec![d; b]), col)] += c(scale);
        }
    }
    v
}

/// E_φ[|φ⟩⟨φ|^{⊗k}] = Π_sym / dim Sym.
fn haar_moment(n: usize, k: usize) -> CMat {
    let p = sym_projector(n, k);
    let tr = p.trace().re;
    p / c(tr)
}

fn power(m: &CMat, k: usize) -> CMat {
    (0..k).fold(CMat::identity(1, 1), |acc, _| kron(&acc, m))
}

#[test]
fn main_theorem_states_match_symmetric_subspace_oracle() {
    // Layout (A₁, B₁, B₂) with a₂ = 0 so both mixtures are block products.
    let (n, a, b1, b2) = (2, 1, 1, 1);
    let p = KeyLemmaParams::new(a, 0, b1, b2, n);
    let (rho, sigma) = mainthm_states(&p).unwrap();
    let e = power(&embedding(n), a);
    let mut want_rho = CMat::zeros(rho.dim(), rho.dim());
    for k in 0..=b1 + b2 {
        let w = kron(&e, &rep_isometry(n, b1 + b2, k));
        want_rho += &w * haar_moment(n, a + k) * w.adjoint() * c(comb::binomial_pmf(b1 + b2, k));
    }
    let mut want_sigma = CMat::zeros(rho.dim(), rho.dim());
    for k1 in 0..=b1 {
        for k2 in 0..=b2 {
            let w = kron(&kron(&e, &rep_isometry(n, b1, k1)), &rep_isometry(n, b2, k2));
            want_sigma += &w * haar_moment(n, a + k1 + k2) * w.adjoint() * c(comb::binomial_pmf(b1, k1) * comb::binomial_pmf(b2, k2));
        }
    }
    assert!((rho.to_dense() - want_rho).camax() < 1e-12);
    assert!((sigma.to_dense() - want_sigma).camax() < 1e-12);
}

#[test]
fn sampled_main_theorem_worlds_average_to_the_exact_states() {
    let p = KeyLemmaParams::new(0, 0, 1, 1, 2);
    let (rho, sigma) = mainthm_states(&p).unwrap();
    for (blocks, exact) in [(RepBlocks::Joint, rho), (RepBlocks::Split, sigma)] {
        let w = mainthm_world(p, blocks);
        let samples = 20_000;
        let acc = run_trials(3, 0, samples, |_, rng| {
            let inst = w.instantiate(2, rng).unwrap();
            let v = inst.ws.amps().clone();
            &v * v.adjoint()
        });
        let mean = acc.into_iter().fold(CMat::zeros(exact.dim(), exact.dim()), |a, m| a + m) / c(samples as f64);
        // Entries are averages of bounded terms; 0.02 is many standard errors.
        assert!((mean - exact.to_dense()).camax() < 0.02);
    }
}

#[test]
fn counting_projectors_resolve_the_identity() {
    let (d, t) = (3, 3);
    let ps: Vec<CMat> = (0..=t).map(|k| counting_projector(d, t, k)).collect();
    let sum = ps.iter().fold(CMat::zeros(27, 27), |a, p| a + p);
    assert!((sum - CMat::identity(27, 27)).camax() < 1e-12);
    for p in &ps {
        assert!((p * p - p).camax() < 1e-12);
    }
}

#[test]
fn counting_measurement_examples() {
    let mut rng = rng_for(4, 0);
    let d = 4;
    let layout = RegisterLayout::uniform(d, 3);
    let mut flags = SparseOperator::new(64);
    flags.add(0, 0, c(1.0));
    let out = counting_measurement(&flags, &layout, &[0, 1, 2], &mut rng).unwrap();
    assert_eq!((out.count, out.probability), (0, 1.0));

    let phi = embed(&sample_haar_dim(3, &mut rng));
    for k in 0..=3 {
        let mut op = SparseOperator::new(64);
        op.add_outer(1.0, &rep_state_sparse(3, k, &phi).unwrap());
        let out = counting_measurement(&op, &layout, &[0, 1, 2], &mut rng).unwrap();
        assert_eq!(out.count, k);
        assert!((out.probability - 1.0).abs() < 1e-12);
        assert!(out.post.max_abs_diff(&op) < 1e-12);
        let dist = counting_distribution(&op, &layout, &[0, 1, 2]).unwrap();
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn counting_the_first_block_reproduces_the_next_hybrid() {
    let phi = embed(&sample_haar_dim(3, &mut rng_for(8, 0)));
    for (a, bs) in [(1, vec![1, 1]), (0, vec![2, 1]), (1, vec![1, 1, 1])] {
        for i in 1..=bs.len() {
            let (res, member) = verify_hyb_lemma(&phi, a, &bs, i).unwrap();
            assert!(res < 1e-10, "a={a} bs={bs:?} i={i}: {res}");
            assert!((member - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn hybrid_chain_two_parties_single_rep_register() {
    let rep = hybrid_chain_check(&[0, 0], &[1, 1], 9).unwrap();
    assert!(rep.endpoint_residual <= 1e-10);
    assert!(rep.counting_residual <= 1e-10);
    let sum: f64 = rep.steps.iter().map(|s| s.ppt_last_cut).sum();
    assert!(sum + 1e-12 >= rep.endpoint_ppt_last_cut);
    assert!(rep.precondition_met);
    for s in &rep.steps {
        assert!(2.0 * s.ppt_step_cut <= rep.key_lemma_bound);
    }
    // Hyb_1 already separates both blocks.
    assert!(rep.steps[1].trace_distance < 1e-12);
}

#[test]
fn hybrid_chain_single_party_matches_the_two_block_degenerate_case() {
    let rep = hybrid_chain_check(&[1], &[2], 4).unwrap();
    assert_eq!(rep.steps.len(), 1);
    let kl = verify_key_lemma(&KeyLemmaParams::new(1, 0, 2, 0, 4)).unwrap();
    assert!((2.0 * rep.steps[0].ppt_step_cut - kl.lhs).abs() < 1e-12);
    assert!(rep.steps[0].trace_distance < 1e-12);
}

#[test]
fn hybrid_chain_three_parties_triangle() {
    let rep = hybrid_chain_check(&[0, 0, 0], &[1, 1, 1], 4).unwrap();
    assert!(rep.endpoint_residual <= 1e-10 && rep.counting_residual <= 1e-10);
    let sum: f64 = rep.steps.iter().map(|s| s.ppt_last_cut).sum();
    assert!(sum + 1e-12 >= rep.endpoint_ppt_last_cut);
    let td: f64 = rep.steps.iter().map(|s| s.trace_distance).sum();
    assert!(td + 1e-12 >= rep.endpoint_trace_distance);
}

#[test]
fn echo_protocol_is_correct_and_insecure() {
    let w = World::primitives(haar(1), OracleKind::ChrsMinus, OracleKind::ChrsMinus);
    for bit in [false, true] {
        let p = EchoKe { bit };
        let fail = ke_game_run(&p, KeGame::Correctness, None, &w, 200, 1).unwrap();
        assert_eq!(fail.successes, 0);
        let win = ke_game_run(&p, KeGame::Security, Some(&MajorityGuess), &w, 200, 1).unwrap();
        assert_eq!(win.successes, 200);
    }
    assert_eq!(KeGame::Security.offset(), 0.5);
    assert!(ke_game_run(&EchoKe { bit: true }, KeGame::Security, None, &w, 1, 0).is_err());
}

#[test]
fn ke_protocols_cannot_send_registers_or_overrun_rounds() {
    struct Sends(bool);
    impl KeProtocol for Sends {
        fn name(&self) -> String {
            "sends".into()
        }
        fn budgets(&self) -> (usize, usize) {
            (1, 0)
        }
        fn max_rounds(&self) -> usize {
            1
        }
        fn execute(&self, net: &mut Network, rng: &mut Rng) -> Result<(bool, bool)> {
            if self.0 {
                let r = net.query(0, 1, rng)?;
                net.send(0, 1, Payload::Quantum(r))?;
            } else {
                net.send(0, 1, Payload::Classical(vec![0]))?;
                net.send(1, 0, Payload::Classical(vec![0]))?;
            }
            Ok((false, false))
        }
    }
    let w = World::primitives(haar(1), OracleKind::ChrsMinus, OracleKind::ChrsMinus);
    assert!(matches!(ke_game_run(&Sends(true), KeGame::Correctness, None, &w, 1, 0), Err(Error::QuantumMessage)));
    assert!(ke_game_run(&Sends(false), KeGame::Correctness, None, &w, 1, 0).is_err());
}

#[test]
fn clifford_generators_are_unitary() {
    for d in [2, 5, 9] {
        for g in clifford_generators(d) {
            assert!((&g * g.adjoint() - CMat::identity(d, d)).camax() < 1e-12);
        }
    }
}

#[test]
fn locc_suite_stays_under_the_ppt_bound_on_small_states() {
    let p = KeyLemmaParams::new(0, 0, 1, 1, 8);
    let (r, s) = mainthm_states(&p).unwrap();
    let bound = ppt_bound(&r, &s, &p.layout(), &p.second_party()).unwrap();
    let (rw, sw) = (mainthm_world(p, RepBlocks::Joint), mainthm_world(p, RepBlocks::Split));
    for d in locc_suite(2, [1, 0], 9, 3, 11).unwrap() {
        let a = indiff_advantage(&rw, &sw, d.as_ref(), 2000, 12).unwrap();
        assert!(a.advantage() <= bound + 4.0 * a.stderr(), "{}: {a:?} vs {bound}", d.name());
    }
}

#[test]
fn fused_swap_test_separates_small_states() {
    let p = KeyLemmaParams::new(0, 0, 1, 1, 4);
    let (rw, sw) = (mainthm_world(p, RepBlocks::Joint), mainthm_world(p, RepBlocks::Split));
    let f = fused_swap_test(2, [1, 0]);
    let trials = 4000;
    let r = run_world(&rw, &f, trials, 3, 0).unwrap();
    let s = run_world(&sw, &f, trials, 3, 0).unwrap();
    // Every joint Rep state is symmetric, so it always passes; the split one
    // fails when exactly one block holds φ.
    let tol = 4.0 * 0.5 / (trials as f64).sqrt();
    assert!((r.mean_probability - 1.0).abs() < 1e-10, "{}", r.mean_probability);
    assert!((s.mean_probability - 0.75).abs() < tol, "{}", s.mean_probability);
}

#[test]
fn locc_indiff_small_run() {
    let rows = locc_indiff_experiment(2, 2, 0, 1, 1500, 21).unwrap();
    for r in &rows {
        if r.locc {
            assert!(r.within(4.0), "{r:?}");
        } else {
            assert!(r.advantage > r.envelope, "{r:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counting_channel_preserves_trace_and_distribution(seed in any::<u64>(), k in 0usize..3) {
        let mut rng = rng_for(seed, 0);
        let d = 3;
        let layout = RegisterLayout::uniform(d, 2);
        let mut op = SparseOperator::new(9);
        for _ in 0..3 {
            let v = SparseVec::from_dense(sample_haar_dim(9, &mut rng).amps());
            op.add_outer(1.0 / 3.0, &v);
        }
        let regs: Vec<usize> = (0..k.min(2)).collect();
        let ch = counting_channel(&op, &layout, &regs).unwrap();
        prop_assert!((ch.trace() - op.trace()).norm() < 1e-12);
        let a = counting_distribution(&op, &layout, &regs).unwrap();
        let b = counting_distribution(&ch, &layout, &regs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn ppt_bound_is_symmetric_and_nonnegative(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 1);
        let layout = RegisterLayout::uniform(3, 2);
        let mk = |rng: &mut Rng| {
            let mut op = SparseOperator::new(9);
            op.add_outer(1.0, &SparseVec::from_dense(sample_haar_dim(9, rng).amps()));
            op
        };
        let (a, b) = (mk(&mut rng), mk(&mut rng));
        let x = ppt_bound(&a, &b, &layout, &[1]).unwrap();
        let y = ppt_bound(&b, &a, &layout, &[1]).unwrap();
        prop_assert!(x >= 0.0 && (x - y).abs() < 1e-10);
    }
}
