//! Verification routines shared by `verify`, `experiment`, `sweep` and the
//! acceptance suite. Each returns report rows; none of them exits.

use anyhow::{ensure, Result};
use serde_json::json;

use qsep_core::attacks::{
    amplified_honest_acceptance, barrier_cloning_experiment, barrier_phase_agreement, owsg_attack_experiment, theta_independence_residual,
    threshold_chain, CheatCloner, Cloner, MeasurePrepareCloner, SearchMode, ToyOwsg, TrivialCloner, PROMISE, TARGET,
};
use qsep_core::constructions::{chrsm_from_swap, verify_binom_lemma, ReflectionChannel};
use qsep_core::games::postselection_suite;
use qsep_core::games::{
    fused_swap_test, indiff_advantage, locc_indiff_experiment, locc_suite, mainthm_states, mainthm_world, ppt_bound, verify_hyb_lemma,
    verify_key_lemma, KeyLemmaParams, RepBlocks, World,
};
use qsep_core::hilbert::{block_ones, c, rng_for, sample_haar_dim, trace_norm, Rng};
use qsep_core::oracles::embed;
use qsep_core::typestates::{
    collision_free_conditioning_distance, haar_type_identity_check, verify_zerosplit, verify_zerosplit2, zerosplit_grid, TypeMultiset,
};
use qsep_core::{CMat, OracleKind, OracleModel, StateDistribution};

use crate::report::{Check, Row};

/// Standard errors allowed on Monte Carlo comparisons against a bound.
pub const SIGMAS: f64 = 4.0;

/// Per-cell or per-check seed derived from a master seed (SplitMix64).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn dist_label(dist: &StateDistribution) -> String {
    format!("{:?}", dist.kind())
}

/// ρ vs ρ′ of the binomial identity.
pub fn binom(dist: &StateDistribution, t1: usize, t2: usize) -> Result<Row> {
    let td = verify_binom_lemma(dist, t1, t2)?;
    Ok(Row::new("binom", Some(dist.n()), json!({"dist": dist_label(dist), "t1": t1, "t2": t2}), td, Some(1e-9), 0.0, 0.0, Check::AtMost))
}

/// The identity fails for the unbalanced Fixed(|1⟩) distribution.
pub fn binom_witness(t1: usize) -> Result<Row> {
    let dist = StateDistribution::fixed_basis(1, 1)?;
    let td = verify_binom_lemma(&dist, t1, 0)?;
    Ok(Row::new("binom-witness", Some(1), json!({"dist": "fixed |1>", "t1": t1, "t2": 0}), td, Some(0.01), 0.0, 0.0, Check::Exceeds))
}

/// ‖V‖₁ for the M×N block of ones against √(MN).
pub fn tracenorm(m: usize, n: usize) -> Row {
    let v = trace_norm(&block_ones(m, n, 1));
    Row::new("tracenorm", None, json!({"M": m, "N": n}), v, Some(((m * n) as f64).sqrt()), 0.0, 1e-10, Check::Equals)
}

fn random_density(d: usize, rank: usize, rng: &mut Rng) -> CMat {
    let w: Vec<f64> = (0..rank).map(|_| rand::Rng::random::<f64>(rng)).collect();
    let total: f64 = w.iter().sum();
    let mut m = CMat::zeros(d, d);
    for wi in w {
        m += sample_haar_dim(d, rng).projector() * c(wi / total);
    }
    m
}

/// ‖Q(ρ) − RρR‖₁ over `inputs` random mixed inputs per t (the same inputs
/// for every t), its mean, and whether the mean is nonincreasing in t.
pub fn reflect_sweep(d: usize, ts: &[usize], inputs: usize, seed: u64) -> Result<Vec<Row>> {
    ensure!(inputs > 0, "at least one input state");
    let mut rng = rng_for(seed, 0);
    let psi = sample_haar_dim(d, &mut rng);
    let r = CMat::identity(d, d) - psi.projector() * c(2.0);
    let rhos: Vec<CMat> = (0..inputs).map(|k| random_density(d, 1 + k % d, &mut rng)).collect();
    let mut rows = Vec::new();
    let mut means = Vec::new();
    for &t in ts {
        let ch = ReflectionChannel::new(&psi, t)?;
        let errs: Vec<f64> = rhos.iter().map(|rho| Ok(trace_norm(&(ch.apply(rho)? - &r * rho * r.adjoint())))).collect::<Result<_>>()?;
        let worst = errs.iter().cloned().fold(0.0, f64::max);
        let mean = errs.iter().sum::<f64>() / inputs as f64;
        means.push(mean);
        let p = json!({"d": d, "t": t, "inputs": inputs, "mean": mean, "max_trace_distance": worst / 2.0});
        rows.push(Row::new("reflect", None, p, worst, Some(2.0 / ((t + 1) as f64).sqrt()), 0.0, 0.0, Check::AtMost));
    }
    let rise = means.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    rows.push(Row::new("reflect-monotone", None, json!({"d": d, "ts": ts, "means": means}), rise, Some(0.0), 0.0, 0.0, Check::AtMost));
    Ok(rows)
}

/// One Swap query yields |φ−⟩, and Swap = I − 2|φ−⟩⟨φ−|. The query row
/// counts calls that did not use exactly one query.
pub fn chrsm_swap(dist: &StateDistribution, samples: usize, seed: u64) -> Result<Vec<Row>> {
    let mut rng = rng_for(seed, 0);
    let (mut fid, mut off_budget, mut identity) = (1.0f64, 0usize, 0.0f64);
    for _ in 0..samples {
        let mut oracle = OracleModel::sample(OracleKind::Swap, dist, &mut rng);
        let out = chrsm_from_swap(&mut oracle)?;
        let e = oracle.hidden();
        fid = fid.min(out.fidelity(&e.minus()));
        off_budget += (oracle.queries() != 1) as usize;
        let d = e.dim();
        let reflection = CMat::identity(d, d) - e.minus().projector() * c(2.0);
        identity = identity.max((e.swap_matrix() - reflection).camax());
    }
    let p = json!({"dist": dist_label(dist), "samples": samples});
    Ok(vec![
        Row::new("chrsm-swap", Some(dist.n()), p.clone(), fid, Some(1.0 - 1e-12), 0.0, 0.0, Check::AtLeast),
        Row::new("chrsm-swap-queries", Some(dist.n()), p.clone(), off_budget as f64, Some(0.0), 0.0, 0.0, Check::Equals),
        Row::new("swap-identity", Some(dist.n()), p, identity, Some(1e-12), 0.0, 0.0, Check::AtMost),
    ])
}

/// CHRS from CHRS− by postselection: each fixed distinguisher's advantage
/// against T₂/2^m, with T₂ its own slot-2 budget.
pub fn postselection_indiff(n: usize, m: usize, t1: usize, t2: usize, trials: u64, seed: u64) -> Result<Vec<Row>> {
    let dist = StateDistribution::haar(n);
    let real = World::postselection_real(dist.clone(), m);
    let ideal = World::rep_sim_ideal(dist, t1);
    postselection_suite::suite(t1, t2)
        .into_iter()
        .map(|d| {
            let est = indiff_advantage(&real, &ideal, d.as_ref(), trials, seed)?;
            let budget = d.budgets().1;
            let p = json!({"m": m, "t1": t1, "t2": t2, "distinguisher": d.name(), "trials": trials,
                           "p_real": est.real.mean(), "p_ideal": est.ideal.mean()});
            let bound = budget as f64 / (1u64 << m) as f64;
            Ok(Row::new("postselection-indiff", Some(n), p, est.advantage(), Some(bound), est.stderr(), SIGMAS * est.stderr(), Check::AtMost))
        })
        .collect()
}

/// Both splitting identities over every collision-free type of size ≤
/// `max_t` on `n_dim` symbols and every feasible register split with at most
/// `max_regs` registers. Returns the largest residual of each.
pub fn zerosplit(n_dim: usize, max_t: usize, max_regs: usize) -> Result<Vec<Row>> {
    let (mut r1, mut r2, mut cases1, mut cases2) = (0.0f64, 0.0f64, 0usize, 0usize);
    for (t, a1, a2, b1, b2) in zerosplit_grid(max_regs, max_t) {
        if t > n_dim {
            continue;
        }
        for ty in TypeMultiset::collision_free(t, n_dim) {
            r1 = r1.max(verify_zerosplit(&ty, n_dim, a1, a2, b1, b2)?);
            cases1 += 1;
            for b1f in 0..=b1 {
                if a1 + a2 + b1f <= t && t - a1 - a2 - b1f <= b2 {
                    r2 = r2.max(verify_zerosplit2(&ty, n_dim, a1, a2, b1, b2, b1f, t - a1 - a2 - b1f)?);
                    cases2 += 1;
                }
            }
        }
    }
    let p = |k: usize| json!({"N": n_dim, "max_t": max_t, "max_regs": max_regs, "cases": k});
    Ok(vec![
        Row::new("zerosplit", None, p(cases1), r1, Some(1e-10), 0.0, 0.0, Check::AtMost),
        Row::new("zerosplit2", None, p(cases2), r2, Some(1e-10), 0.0, 0.0, Check::AtMost),
    ])
}

/// Haar moment = uniform type mixture, and the collision-free conditioning
/// distance against t²/N.
pub fn types(n: usize, t: usize) -> Result<Vec<Row>> {
    let id = haar_type_identity_check(n, t)?;
    let cf = collision_free_conditioning_distance(n, t)?;
    let p = json!({"t": t});
    Ok(vec![
        Row::new("type-identity", Some(n), p.clone(), id, Some(1e-12), 0.0, 0.0, Check::AtMost),
        Row::new("type-conditioning", Some(n), p, cf, Some((t * t) as f64 / (1u64 << n) as f64), 0.0, 1e-12, Check::AtMost),
    ])
}

/// The counting measurement on blocks B₁..B_i of Hyb_0 against Hyb_i for a
/// Haar φ of dimension `n_dim`, plus the count-outcome membership of Rep
/// states.
pub fn hyb(n_dim: usize, a: usize, b1: usize, b2: usize, seed: u64) -> Result<Vec<Row>> {
    let phi = embed(&sample_haar_dim(n_dim, &mut rng_for(seed, 0)));
    let (mut res, mut member) = (0.0f64, 1.0f64);
    for i in 0..=2 {
        let (r, m) = verify_hyb_lemma(&phi, a, &[b1, b2], i)?;
        res = res.max(r);
        member = member.min(m);
    }
    let p = json!({"N": n_dim, "a": a, "b1": b1, "b2": b2});
    Ok(vec![
        Row::new("hyb", None, p.clone(), res, Some(1e-10), 0.0, 0.0, Check::AtMost),
        Row::new("hyb-membership", None, p, member, Some(1.0), 0.0, 1e-12, Check::Equals),
    ])
}

fn key_params_json(p: &KeyLemmaParams) -> serde_json::Value {
    json!({"a1": p.a1, "a2": p.a2, "b1": p.b1, "b2": p.b2, "N": p.n_dim})
}

/// ‖ρ̃^Γ − σ̃^Γ‖₁ against e·(total)⁵/√N; reported only when the
/// precondition fails.
pub fn key_lemma(p: KeyLemmaParams) -> Result<Row> {
    let rep = verify_key_lemma(&p)?;
    let mut params = key_params_json(&p);
    params["precondition_met"] = json!(rep.precondition_met);
    let check = if rep.precondition_met { Check::AtMost } else { Check::Report };
    Ok(Row::new("key-lemma", None, params, rep.lhs, Some(rep.bound), 0.0, 0.0, check))
}

/// ½‖ρ̃ − σ̃‖₁ − ½‖ρ̃^Γ − σ̃^Γ‖₁, which must be strictly positive.
pub fn key_lemma_gap(p: KeyLemmaParams) -> Result<Row> {
    let rep = verify_key_lemma(&p)?;
    let ppt = 0.5 * rep.lhs;
    let mut params = key_params_json(&p);
    params["global"] = json!(rep.global_trace_distance);
    params["ppt"] = json!(ppt);
    Ok(Row::new("key-lemma-gap", None, params, rep.global_trace_distance - ppt, Some(0.0), 0.0, 0.0, Check::Exceeds))
}

/// The LOCC suite plus `one_way` random one-way strategies on the joint vs
/// split Rep states with `a` Haar copies per party and one Rep register per
/// party, against the PPT bound.
pub fn locc_bound(n: usize, a: usize, one_way: usize, trials: u64, seed: u64) -> Result<Vec<Row>> {
    let n_dim = 1usize << n;
    let p = KeyLemmaParams::new(a, a, 1, 1, n_dim);
    let (rho, sigma) = mainthm_states(&p)?;
    let bound = ppt_bound(&rho, &sigma, &p.layout(), &p.second_party())?;
    let (rw, sw) = (mainthm_world(p, RepBlocks::Joint), mainthm_world(p, RepBlocks::Split));
    locc_suite(2, [a + 1, 0], n_dim + 1, one_way, seed)?
        .into_iter()
        .map(|d| {
            let est = indiff_advantage(&rw, &sw, d.as_ref(), trials, seed)?;
            let params = json!({"a": a, "b": 1, "distinguisher": d.name(), "trials": trials,
                                "p_real": est.real.mean(), "p_ideal": est.ideal.mean()});
            Ok(Row::new("locc-bound", Some(n), params, est.advantage(), Some(bound), est.stderr(), SIGMAS * est.stderr(), Check::AtMost))
        })
        .collect()
}

/// The swap test across both Rep registers run by one party: advantage above
/// `threshold`.
pub fn locc_separation(n: usize, threshold: f64, trials: u64, seed: u64) -> Result<Row> {
    let p = KeyLemmaParams::new(0, 0, 1, 1, 1 << n);
    let (rw, sw) = (mainthm_world(p, RepBlocks::Joint), mainthm_world(p, RepBlocks::Split));
    let d = fused_swap_test(2, [1, 0]);
    let est = indiff_advantage(&rw, &sw, &d, trials, seed)?;
    let params = json!({"distinguisher": "fused-swap-test", "trials": trials, "p_real": est.real.mean(), "p_ideal": est.ideal.mean()});
    Ok(Row::new("locc-separation", Some(n), params, est.advantage(), Some(threshold), est.stderr(), SIGMAS * est.stderr(), Check::Exceeds))
}

/// LOCC indifferentiability: suite rows against the envelope, the fused
/// swap test above it.
pub fn locc_indiff(parties: usize, n: usize, t1: usize, t2: usize, trials: u64, seed: u64) -> Result<Vec<Row>> {
    Ok(locc_indiff_experiment(parties, n, t1, t2, trials, seed)?
        .into_iter()
        .map(|r| {
            let params = json!({"parties": parties, "t1": t1, "t2": t2, "distinguisher": r.distinguisher, "locc": r.locc,
                                "trials": trials, "p_real": r.real_rate, "p_ideal": r.ideal_rate});
            let check = if r.locc { Check::AtMost } else { Check::Exceeds };
            Row::new("locc-indiff", Some(n), params, r.advantage, Some(r.envelope), r.stderr, SIGMAS * r.stderr, check)
        })
        .collect())
}

/// The key-recovery attack on a toy OWSG with honest error 1/(10n²).
#[allow(clippy::too_many_arguments)]
pub fn owsg(key_bits: usize, n: usize, state_qubits: usize, tag_dim: usize, mode: SearchMode, trials: u64, seed: u64) -> Result<Vec<Row>> {
    ensure!(n > 0, "n must be positive");
    let delta = 1.0 / (10 * n * n) as f64;
    let o = ToyOwsg::new(key_bits, 1 << state_qubits, tag_dim, delta, seed)?;
    let dist = StateDistribution::haar(state_qubits);
    let rep = owsg_attack_experiment(&o, &dist, n, mode, trials, derive_seed(seed, 1))?;
    let params = json!({"key_bits": key_bits, "state_qubits": state_qubits, "tag_dim": tag_dim, "mode": mode,
                        "trials": trials, "copies_used": rep.copies_used, "success_rate": rep.success_rate});
    let mut rows = Vec::new();
    match mode {
        SearchMode::ExactOracle => {
            rows.push(Row::new("owsg-exact", Some(n), params.clone(), rep.min_acceptance, Some(1.0 - 1.0 / n as f64), 0.0, 0.0, Check::AtLeast));
        }
        SearchMode::Measured => {
            rows.push(Row::new("owsg-measured", Some(n), params.clone(), rep.success_rate, Some(TARGET), rep.stderr, 0.0, Check::AtLeast));
        }
    }
    rows.push(Row::new("owsg-vs-security", Some(n), params, rep.success_rate, Some(delta), rep.stderr, SIGMAS * rep.stderr, Check::Exceeds));
    Ok(rows)
}

/// 3^{−1/(10n)} ≥ 1 − ln3/(10n) ≥ 1 − 1/n for every n in the range: the
/// smallest slack of either step.
pub fn threshold_chain_rows(max_n: usize) -> Vec<Row> {
    let slack = (1..=max_n)
        .map(|n| {
            let (a, b, c) = threshold_chain(n);
            (a - b).min(b - c)
        })
        .fold(f64::INFINITY, f64::min);
    // The honest amplified acceptance reaches the 3/4 promise once 1 − 1/n does.
    let honest = (4..=max_n)
        .map(|n| amplified_honest_acceptance(1.0 / (10 * n * n) as f64, n).0)
        .fold(f64::INFINITY, f64::min);
    vec![
        Row::new("threshold-chain", None, json!({"n_range": [1, max_n]}), slack, Some(0.0), 0.0, 0.0, Check::AtLeast),
        Row::new("honest-amplified", None, json!({"n_range": [4, max_n]}), honest, Some(PROMISE), 0.0, 0.0, Check::AtLeast),
    ]
}

pub fn theta(t: usize, levels: usize) -> Result<Row> {
    let r = theta_independence_residual(t, levels)?;
    Ok(Row::new("theta-independence", Some(1), json!({"t": t, "levels": levels}), r, Some(1e-12), 0.0, 0.0, Check::AtMost))
}

/// Two-party phase agreement: at least `target` with |φ−⟩, 1/2 ± 3σ with
/// |φ⟩.
pub fn phase_agreement(t: usize, grid: usize, levels: usize, target: f64, trials: u64, seed: u64) -> Result<Vec<Row>> {
    let rep = barrier_phase_agreement(t, grid, levels, trials, seed)?;
    let p = json!({"t": t, "grid": grid, "levels": levels, "trials": trials});
    let plain = rep.agreement_plain;
    Ok(vec![
        Row::new("phase-agreement", Some(1), p.clone(), rep.agreement_minus.mean(), Some(target), rep.agreement_minus.stderr(), 0.0, Check::AtLeast),
        Row::new("phase-agreement-plain", Some(1), p, plain.mean(), Some(0.5), plain.stderr(), 3.0 * plain.stderr(), Check::Equals),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ClonerKind {
    Trivial,
    Cheat,
    MeasurePrepare,
}

/// The swap-test distinguisher fed by a cloner's candidate. The cheat
/// cloner must exceed `cheat_threshold`; the others stay at 0 ± 3σ.
pub fn cloning(kind: ClonerKind, t: usize, n: usize, cheat_threshold: f64, trials: u64, seed: u64) -> Result<Vec<Row>> {
    let cloner: &dyn Cloner = match kind {
        ClonerKind::Trivial => &TrivialCloner,
        ClonerKind::Cheat => &CheatCloner,
        ClonerKind::MeasurePrepare => &MeasurePrepareCloner,
    };
    let rep = barrier_cloning_experiment(cloner, t, n, trials, seed)?;
    let adv = rep.advantage;
    let p = json!({"cloner": kind, "t": t, "trials": trials, "p_rep": adv.real.mean(), "p_minus": adv.ideal.mean(),
                   "candidate_fidelity": rep.candidate_fidelity});
    let row = match kind {
        ClonerKind::Cheat => Row::new("cloning", Some(n), p, adv.advantage(), Some(cheat_threshold), adv.stderr(), 0.0, Check::Exceeds),
        _ => Row::new("cloning", Some(n), p, adv.advantage(), Some(0.0), adv.stderr(), 3.0 * adv.stderr(), Check::Equals),
    };
    let mut rows = vec![row];
    if kind == ClonerKind::MeasurePrepare {
        rows.push(Row::new("cloning-fidelity", Some(n), json!({"cloner": kind, "t": t}), rep.candidate_fidelity, Some(1.0), 0.0, 0.0, Check::AtMost));
    }
    Ok(rows)
}
