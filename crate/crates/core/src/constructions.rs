//! Set and Rep states, CHRS from CHRS− by postselection, the binomial
//! Rep-state simulator for CHRS, the symmetric-subspace reflection channel,
//! approximate Swap from CHRS− and exact CHRS− from Swap.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::hilbert::{
    c, comb, sample_binomial, CMat, CVec, DensityOperator, PureState, RegisterLayout, Rng, SparseOperator,
    SparseState, SparseVec, StateVector, C64,
};
use crate::oracles::{embed, flag, DistKind, EmbeddedState, OracleKind, OracleModel, StateDistribution};

/// Parameters of a Rep state.
#[derive(Debug, Clone, PartialEq)]
pub struct RepStateSpec {
    pub t: usize,
    pub c: usize,
    pub phi: EmbeddedState,
}

impl RepStateSpec {
    pub fn new(t: usize, c: usize, phi: EmbeddedState) -> Result<Self> {
        if c > t {
            return Err(Error::InvalidArgument(format!("c = {c} exceeds t = {t}")));
        }
        Ok(Self { t, c, phi })
    }

    pub fn sparse(&self) -> SparseVec {
        rep_state_sparse(self.t, self.c, &self.phi).expect("validated")
    }
}

fn check_subset(t: usize, s: &[usize]) -> Result<()> {
    let mut seen = vec![false; t];
    for &i in s {
        if i >= t || seen[i] {
            return Err(Error::InvalidArgument(format!("{s:?} is not a subset of [0, {t})")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// `⊗ᵢ (𝟙[i∉S]|0⟩ − 𝟙[i∈S]|φ⟩)` as a sparse vector.
pub fn set_state_sparse(t: usize, s: &[usize], phi: &EmbeddedState) -> Result<SparseVec> {
    check_subset(t, s)?;
    let d = phi.dim();
    let f = SparseVec::basis(d, 0);
    let mut minus_phi = SparseVec::from_dense(phi.state().amps());
    minus_phi.scale(c(-1.0));
    let mut v = SparseVec::basis(1, 0);
    for i in 0..t {
        v = v.tensor(if s.contains(&i) { &minus_phi } else { &f });
    }
    Ok(v)
}

/// Dense Set state on `t` registers of dim N+1.
pub fn set_state(t: usize, s: &[usize], phi: &EmbeddedState) -> Result<PureState> {
    PureState::new(set_state_sparse(t, s, phi)?.to_dense())
}

/// `C(t,c)^{-1/2} Σ_{|S|=c} |Set(S)⟩` as a sparse vector.
pub fn rep_state_sparse(t: usize, c_: usize, phi: &EmbeddedState) -> Result<SparseVec> {
    if c_ > t {
        return Err(Error::InvalidArgument(format!("c = {c_} exceeds t = {t}")));
    }
    let d = phi.dim();
    let mut v = SparseVec::new(d.pow(t as u32));
    for s in comb::subsets(t, c_) {
        v.axpy(c(1.0), &set_state_sparse(t, &s, phi)?);
    }
    v.scale(c(comb::binom(t as i64, c_ as i64).powf(-0.5)));
    Ok(v)
}

pub fn rep_state(t: usize, c_: usize, phi: &EmbeddedState) -> Result<PureState> {
    PureState::new(rep_state_sparse(t, c_, phi)?.to_dense())
}

/// Runs the postselection construction into fresh registers of `sv`: obtain
/// a CHRS− sample from `source`, measure {|0⟩⟨0|, I − |0⟩⟨0|}, keep the
/// residual state on the second outcome, retry up to `m` times. Returns the
/// register index or `None` (⊥).
pub fn chrs_from_source_into(
    mut source: impl FnMut(&mut StateVector) -> Result<usize>,
    d: usize,
    sv: &mut StateVector,
    m: usize,
    rng: &mut Rng,
) -> Result<Option<usize>> {
    let f = flag(d - 1);
    let p0 = f.projector();
    let projectors = [p0.clone(), CMat::identity(d, d) - p0];
    for _ in 0..m {
        let reg = source(sv)?;
        let (k, _) = sv.measure(&[reg], &projectors, rng)?;
        if k == 1 {
            return Ok(Some(reg));
        }
        sv.remove_product(reg, &f)?;
    }
    Ok(None)
}

pub fn chrs_from_chrsm_into(oracle: &mut OracleModel, sv: &mut StateVector, m: usize, rng: &mut Rng) -> Result<Option<usize>> {
    if oracle.kind() != OracleKind::ChrsMinus {
        return Err(Error::WrongOracle { expected: "CHRS-".into(), got: oracle.kind().to_string() });
    }
    let d = oracle.register_dim();
    chrs_from_source_into(|sv| oracle.query_into(sv), d, sv, m, rng)
}

/// Standalone postselection construction; `None` is ⊥.
pub fn chrs_from_chrsm(oracle: &mut OracleModel, m: usize, rng: &mut Rng) -> Result<Option<EmbeddedState>> {
    let mut sv = StateVector::empty();
    Ok(chrs_from_chrsm_into(oracle, &mut sv, m, rng)?.map(|_| {
        let amps = sv.amps();
        let inner = CVec::from_iterator(amps.len() - 1, amps.iter().skip(1).copied());
        embed(&PureState::normalized(inner).expect("nonzero residual"))
    }))
}

/// The binomial Rep-state simulator for CHRS.
///
/// Registers: `A_1..A_T` (dim N+1), marker qubits `M_1..M_T`, consumed-copy
/// registers `B_1..B_c` (dim N+1) and the counter `D` (dim T+2).
#[derive(Debug, Clone)]
pub struct SimChrsState {
    t_sim: usize,
    c: usize,
    d: usize,
    state: SparseState,
    next: usize,
}

impl SimChrsState {
    /// Samples `c ~ B(T_sim, 1/2)` and runs the circuit.
    pub fn init(t_sim: usize, oracle: &mut OracleModel, rng: &mut Rng) -> Result<Self> {
        let c_ = sample_binomial(t_sim, rng).c;
        Self::init_with_count(t_sim, c_, oracle)
    }

    /// Runs the circuit for a given `c`.
    pub fn init_with_count(t_sim: usize, c_: usize, oracle: &mut OracleModel) -> Result<Self> {
        if c_ > t_sim {
            return Err(Error::InvalidArgument(format!("c = {c_} exceeds T_sim = {t_sim}")));
        }
        if oracle.kind() != OracleKind::Chrs {
            return Err(Error::WrongOracle { expected: "CHRS".into(), got: oracle.kind().to_string() });
        }
        let d = oracle.register_dim();
        let copies: Vec<PureState> = (0..c_).map(|_| oracle.query_chrs()).collect::<Result<_>>()?;

        // Markers in a Rep state over qubits, with the Set-state sign (−1)^c.
        let mut markers = SparseVec::new(1 << t_sim);
        let amp = comb::binom(t_sim as i64, c_ as i64).powf(-0.5) * if c_.is_multiple_of(2) { 1.0 } else { -1.0 };
        for s in comb::subsets(t_sim, c_) {
            let idx: usize = s.iter().map(|&i| 1 << (t_sim - 1 - i)).sum();
            markers.add(idx, c(amp));
        }

        let mut v = SparseVec::basis(1, 0);
        for _ in 0..t_sim {
            v = v.tensor(&SparseVec::basis(d, 0));
        }
        v = v.tensor(&markers);
        for s in &copies {
            v = v.tensor(&SparseVec::from_dense(s.amps()));
        }
        v = v.tensor(&SparseVec::basis(t_sim + 2, 1));
        let state = SparseState::new(Self::layout(t_sim, c_, d), v)?;

        let mut sim = Self { t_sim, c: c_, d, state, next: 1 };
        sim.sweep()?;
        Ok(sim)
    }

    fn layout(t_sim: usize, c_: usize, d: usize) -> RegisterLayout {
        let mut dims = vec![d; t_sim];
        dims.extend(std::iter::repeat_n(2, t_sim));
        dims.extend(std::iter::repeat_n(d, c_));
        dims.push(t_sim + 2);
        RegisterLayout::new(dims).expect("nonzero dims")
    }

    fn a(&self, i: usize) -> usize {
        i
    }

    fn marker(&self, i: usize) -> usize {
        self.t_sim + i
    }

    fn b(&self, j: usize) -> usize {
        2 * self.t_sim + j
    }

    fn counter(&self) -> usize {
        2 * self.t_sim + self.c
    }

    fn sweep(&mut self) -> Result<()> {
        let modulus = self.t_sim + 2;
        let c_ = self.c;
        for i in 0..self.t_sim {
            // Controlled on marker i: SWAP(A_i, B_D), D += 1.
            let mut regs = vec![self.marker(i), self.a(i)];
            regs.extend((0..c_).map(|j| self.b(j)));
            regs.push(self.counter());
            self.state.permute_basis(&regs, |v| {
                let mut out = v.to_vec();
                let dd = v[c_ + 2];
                if v[0] == 1 {
                    if (1..=c_).contains(&dd) {
                        out.swap(1, 1 + dd);
                    }
                    out[c_ + 2] = (dd + 1) % modulus;
                }
                out
            })?;
            // Uncompute the marker: flip it when A_i no longer holds the flag.
            self.state.permute_basis(&[self.a(i), self.marker(i)], |v| vec![v[0], v[1] ^ usize::from(v[0] != 0)])?;
        }
        Ok(())
    }

    /// The internal state the circuit must produce:
    /// `|Rep_{T,c,φ}⟩ ⊗ |0…0⟩_M ⊗ |0⟩^{⊗c}_B ⊗ |c+1⟩_D`.
    pub fn expected_internal_state(t_sim: usize, c_: usize, phi: &EmbeddedState) -> Result<SparseState> {
        let d = phi.dim();
        let mut v = rep_state_sparse(t_sim, c_, phi)?;
        v = v.tensor(&SparseVec::basis(1 << t_sim, 0));
        for _ in 0..c_ {
            v = v.tensor(&SparseVec::basis(d, 0));
        }
        v = v.tensor(&SparseVec::basis(t_sim + 2, c_ + 1));
        SparseState::new(Self::layout(t_sim, c_, d), v)
    }

    pub fn t_sim(&self) -> usize {
        self.t_sim
    }

    pub fn count(&self) -> usize {
        self.c
    }

    pub fn next_query(&self) -> usize {
        self.next
    }

    pub fn internal_state(&self) -> &SparseState {
        &self.state
    }

    /// Releases register `A_i` (1-based); queries must come in order.
    pub fn query(&mut self, i: usize) -> Result<usize> {
        if i == 0 || i > self.t_sim || i != self.next {
            return Err(Error::QueryIndex { index: i, budget: self.t_sim });
        }
        self.next += 1;
        Ok(self.a(i - 1))
    }

    /// Factors out the markers, consumed copies and counter, leaving the joint
    /// state of `A_1..A_T`.
    pub fn a_registers(&self) -> Result<SparseState> {
        let mut s = self.state.clone();
        let counter = self.counter();
        s.remove_product(counter, &SparseVec::basis(self.t_sim + 2, self.c + 1))?;
        for j in (0..self.c).rev() {
            s.remove_product(self.b(j), &SparseVec::basis(self.d, 0))?;
        }
        for i in (0..self.t_sim).rev() {
            s.remove_product(self.marker(i), &SparseVec::basis(2, 0))?;
        }
        Ok(s)
    }
}

/// Places `syms` (0-based symbols of ℂᴺ, embedded as index+1) at the sorted
/// positions `pos` of a `t`-register string over ℂ^{N+1}; other slots hold the
/// flag.
fn place(t: usize, d: usize, pos: &[usize], syms: &[usize]) -> usize {
    let mut digs = vec![0usize; t];
    for (&p, &s) in pos.iter().zip(syms) {
        digs[p] = s + 1;
    }
    digs.iter().fold(0, |acc, &x| acc * d + x)
}

fn finite_states(
    support: &[(f64, PureState)],
    t1: usize,
    t2: usize,
) -> Result<(SparseOperator, SparseOperator)> {
    let d = support[0].1.dim() + 1;
    let dim = d.pow((t1 + t2) as u32);
    let mut rho = SparseOperator::new(dim);
    let mut rho_p = SparseOperator::new(dim);
    for (w, phi) in support {
        let e = embed(phi);
        let ev = SparseVec::from_dense(e.state().amps());
        let mut tail = SparseVec::basis(1, 0);
        for _ in 0..t2 {
            tail = tail.tensor(&ev);
        }
        let mv = SparseVec::from_dense(e.minus().amps());
        let mut v = SparseVec::basis(1, 0);
        for _ in 0..t1 {
            v = v.tensor(&mv);
        }
        rho.add_outer(*w, &v.tensor(&tail));
        for c_ in 0..=t1 {
            let r = rep_state_sparse(t1, c_, &e)?.tensor(&tail);
            rho_p.add_outer(w * comb::binomial_pmf(t1, c_), &r);
        }
    }
    Ok((rho, rho_p))
}

/// `E|φ−⟩⟨φ−|^{⊗t₁} ⊗ |φ⟩⟨φ|^{⊗t₂}` for Haar φ: expand into Set-state cross
/// terms; each surviving term is a symmetric moment whose entries follow from
/// type counting.
fn haar_rho(n_dim: usize, t1: usize, t2: usize) -> SparseOperator {
    let d = n_dim + 1;
    let t = t1 + t2;
    let mut rho = SparseOperator::new(d.pow(t as u32));
    let tail: Vec<usize> = (t1..t).collect();
    for cc in 0..=t1 {
        let k = cc + t2;
        let moment = comb::factorial(k) * comb::binom((n_dim + k - 1) as i64, k as i64);
        let subsets: Vec<Vec<usize>> = comb::subsets(t1, cc)
            .into_iter()
            .map(|mut s| {
                s.extend(&tail);
                s
            })
            .collect();
        // The sign (−1)^{|S|+|S′|} is +1 once |S| = |S′|.
        let coef = 0.5f64.powi(t1 as i32);
        for ty in comb::multisets(0, n_dim - 1, k) {
            let mut counts = vec![0usize; n_dim];
            for &x in &ty {
                counts[x] += 1;
            }
            let w: f64 = counts.iter().map(|&m| comb::factorial(m)).product::<f64>() / moment;
            let arr = comb::distinct_arrangements(&ty);
            for s in &arr {
                for sp in &arr {
                    for ks in &subsets {
                        let i = place(t, d, ks, s);
                        for kp in &subsets {
                            rho.add(i, place(t, d, kp, sp), c(coef * w));
                        }
                    }
                }
            }
        }
    }
    rho
}

/// `Σ_c B(t₁,c) E|Rep_c⟩⟨Rep_c| ⊗ |φ⟩⟨φ|^{⊗t₂}` for Haar φ: push the
/// permutation-averaged symmetric projector through the isometry
/// `φ^{⊗(c+t₂)} ↦ |Rep_{t₁,c,φ}⟩ ⊗ φ^{⊗t₂}`.
fn haar_rho_prime(n_dim: usize, t1: usize, t2: usize) -> SparseOperator {
    let d = n_dim + 1;
    let t = t1 + t2;
    let mut out = SparseOperator::new(d.pow(t as u32));
    let tail: Vec<usize> = (t1..t).collect();
    for cc in 0..=t1 {
        let k = cc + t2;
        let perms = comb::permutations(k);
        let norm = comb::binom((n_dim + k - 1) as i64, k as i64);
        let mut sym = SparseOperator::new(n_dim.pow(k as u32));
        let kdims = vec![n_dim; k];
        for s in 0..n_dim.pow(k as u32) {
            let digs = comb::digits(s, &kdims);
            for p in &perms {
                let img: Vec<usize> = p.iter().map(|&j| digs[j]).collect();
                sym.add(comb::undigits(&img, &kdims), s, c(1.0 / perms.len() as f64));
            }
        }
        let positions: Vec<Vec<usize>> = comb::subsets(t1, cc)
            .into_iter()
            .map(|mut s| {
                s.extend(&tail);
                s
            })
            .collect();
        let iso = comb::binom(t1 as i64, cc as i64).recip();
        let w = comb::binomial_pmf(t1, cc) * iso / norm;
        for ((i, j), v) in sym.sorted_entries() {
            let si = comb::digits(i, &kdims);
            let sj = comb::digits(j, &kdims);
            for pi in &positions {
                let a = place(t, d, pi, &si);
                for pj in &positions {
                    out.add(a, place(t, d, pj, &sj), v * w);
                }
            }
        }
    }
    out
}

/// Trace distance between `E|φ−⟩⟨φ−|^{⊗t₁} ⊗ |φ⟩⟨φ|^{⊗t₂}` and
/// `Σ_c B(t₁,c) E|Rep_{t₁,c,φ}⟩⟨·| ⊗ |φ⟩⟨φ|^{⊗t₂}`, both computed exactly.
pub fn verify_binom_lemma(dist: &StateDistribution, t1: usize, t2: usize) -> Result<f64> {
    let (rho, rho_p) = binom_lemma_states(dist, t1, t2)?;
    Ok(rho.trace_distance(&rho_p))
}

/// The two sides of the binomial identity as sparse operators.
pub fn binom_lemma_states(dist: &StateDistribution, t1: usize, t2: usize) -> Result<(SparseOperator, SparseOperator)> {
    match dist.kind() {
        DistKind::Haar => Ok((haar_rho(dist.dim(), t1, t2), haar_rho_prime(dist.dim(), t1, t2))),
        _ => {
            let support = dist.finite_support().ok_or_else(|| Error::InvalidArgument("no finite support".into()))?;
            finite_states(&support, t1, t2)
        }
    }
}

/// The channel `ρ ↦ Tr_{2..}[R (ρ ⊗ ψ^{⊗t}) R†]` with `R = I − 2Π_sym`,
/// computed in the basis `ℂ^d ⊗ Sym^t(ℂ^d)` and stored as at most d² Kraus
/// operators.
#[derive(Debug, Clone)]
pub struct ReflectionChannel {
    d: usize,
    t: usize,
    kraus: Vec<CMat>,
}

impl ReflectionChannel {
    pub fn new(psi: &PureState, t: usize) -> Result<Self> {
        let d = psi.dim();
        let types_t = type_index(d, t);
        let nt = types_t.len();
        let amp_t = sym_power(psi, &types_t, t);

        // Columns R(|i⟩ ⊗ ψ^{⊗t}) in the basis |a⟩|T⟩, index a·nt + T.
        let mut cols: Vec<CVec> = Vec::with_capacity(d);
        let tp1 = (t + 1) as f64;
        for i in 0..d {
            let mut w = CVec::zeros(d * nt);
            for &ti in types_t.values() {
                w[i * nt + ti] = amp_t[ti];
            }
            // Π_sym w = Σ_{T'} |T'⟩⟨T'|w⟩ with ⟨T'|w⟩ = √(m_i(T')/(t+1)) ψ^t_{T'−i}.
            for (ty, &ti) in &types_t {
                let mut tp = ty.clone();
                tp[i] += 1;
                let overlap = (tp[i] as f64 / tp1).sqrt() * amp_t[ti];
                if overlap == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    if tp[j] == 0 {
                        continue;
                    }
                    let mut rest = tp.clone();
                    rest[j] -= 1;
                    let r = types_t[&rest];
                    w[j * nt + r] -= c(2.0 * (tp[j] as f64 / tp1).sqrt()) * overlap;
                }
            }
            cols.push(w);
        }

        // Choi matrix Σ_T vec(K_T) vec(K_T)† with K_T[a, i] = cols[i][a·nt + T].
        let mut choi = CMat::zeros(d * d, d * d);
        let mut v = CVec::zeros(d * d);
        for ti in 0..nt {
            for i in 0..d {
                for a in 0..d {
                    v[i * d + a] = cols[i][a * nt + ti];
                }
            }
            choi += &v * v.adjoint();
        }
        let eig = choi.symmetric_eigen();
        let mut kraus = Vec::new();
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > 1e-14 {
                let col = eig.eigenvectors.column(k) * c(lam.sqrt());
                kraus.push(CMat::from_column_slice(d, d, col.as_slice()));
            }
        }
        Ok(Self { d, t, kraus })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn copies(&self) -> usize {
        self.t
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        if rho.nrows() != self.d || rho.ncols() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: rho.nrows() });
        }
        Ok(self.kraus.iter().map(|k| k * rho * k.adjoint()).fold(CMat::zeros(self.d, self.d), |a, b| a + b))
    }

    /// Applies the channel to register `reg` of a multi-register operator.
    pub fn apply_on_register(&self, rho: &CMat, layout: &RegisterLayout, reg: usize) -> Result<CMat> {
        if layout.dims().get(reg) != Some(&self.d) {
            return Err(Error::DimensionMismatch { expected: self.d, got: layout.dims().get(reg).copied().unwrap_or(0) });
        }
        layout.check_dim(rho.nrows())?;
        let mut out = CMat::zeros(rho.nrows(), rho.ncols());
        for k in &self.kraus {
            let u = crate::oracles::embed_operator(k, layout, reg)?;
            out += &u * rho * u.adjoint();
        }
        Ok(out)
    }
}

/// Count vectors of all multisets of size `t` over `d` symbols, indexed.
fn type_index(d: usize, t: usize) -> HashMap<Vec<usize>, usize> {
    comb::multisets(0, d - 1, t)
        .into_iter()
        .enumerate()
        .map(|(i, ms)| {
            let mut counts = vec![0usize; d];
            for x in ms {
                counts[x] += 1;
            }
            (counts, i)
        })
        .collect()
}

/// Coordinates of ψ^{⊗t} in the normalized type basis:
/// `√(t!/Πm!) Π ψ_x^{m_x}`.
fn sym_power(psi: &PureState, types: &HashMap<Vec<usize>, usize>, t: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); types.len()];
    for (counts, &i) in types {
        let mut left = t as i64;
        let mut multinomial = 1.0;
        let mut prod = c(1.0);
        for (x, &m) in counts.iter().enumerate() {
            multinomial *= comb::binom(left, m as i64);
            left -= m as i64;
            prod *= psi.amps()[x].powu(m as u32);
        }
        out[i] = prod * multinomial.sqrt();
    }
    out
}

/// Applies the reflection channel about the state held by `copies` (t copies
/// of one pure state) to `input`.
pub fn reflect_about_state_sim(input: &DensityOperator, copies: &[PureState]) -> Result<DensityOperator> {
    let psi = copies.first().ok_or_else(|| Error::InvalidArgument("no copies".into()))?;
    if copies.iter().any(|p| p.dim() != psi.dim() || (p.fidelity(psi) - 1.0).abs() > 1e-12) {
        return Err(Error::InvalidArgument("copies are not of one state".into()));
    }
    if input.dim() != psi.dim() {
        return Err(Error::DimensionMismatch { expected: psi.dim(), got: input.dim() });
    }
    let ch = ReflectionChannel::new(psi, copies.len())?;
    Ok(DensityOperator::from_matrix_unchecked(ch.apply(input.matrix())?))
}

/// Approximate Swap built from a pool of CHRS− samples. Each application
/// consumes a fresh slice of `t` copies.
#[derive(Debug, Clone)]
pub struct ApproxSwapOracle {
    pool: Vec<PureState>,
    channel: ReflectionChannel,
    queries: usize,
}

/// Draws `t · max_queries` copies from CHRS− and prepares the channel.
pub fn swap_from_chrsm(oracle: &mut OracleModel, t: usize, max_queries: usize) -> Result<ApproxSwapOracle> {
    if t == 0 {
        return Err(Error::InvalidArgument("t must be at least 1".into()));
    }
    let pool: Vec<PureState> = (0..t * max_queries).map(|_| oracle.query_chrsm()).collect::<Result<_>>()?;
    let probe = match pool.first() {
        Some(p) => p.clone(),
        None => oracle.hidden().minus(),
    };
    let channel = ReflectionChannel::new(&probe, t)?;
    Ok(ApproxSwapOracle { pool, channel, queries: 0 })
}

impl ApproxSwapOracle {
    pub fn pool_left(&self) -> usize {
        self.pool.len()
    }

    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn copies_per_query(&self) -> usize {
        self.channel.copies()
    }

    fn take_slice(&mut self) -> Result<Vec<PureState>> {
        let t = self.channel.copies();
        if self.pool.len() < t {
            return Err(Error::PoolExhausted { needed: t, left: self.pool.len() });
        }
        let at = self.pool.len() - t;
        Ok(self.pool.split_off(at))
    }

    /// Applies the simulated Swap to register `reg` of `rho`.
    pub fn apply(&mut self, rho: &CMat, layout: &RegisterLayout, reg: usize) -> Result<CMat> {
        let slice = self.take_slice()?;
        debug_assert!(slice.iter().all(|p| (p.fidelity(&slice[0]) - 1.0).abs() < 1e-12));
        self.queries += 1;
        self.channel.apply_on_register(rho, layout, reg)
    }
}

pub fn approx_swap_apply(oracle: &mut ApproxSwapOracle, rho: &CMat, layout: &RegisterLayout, reg: usize) -> Result<CMat> {
    oracle.apply(rho, layout, reg)
}

/// Exact CHRS− from one Swap query, written into fresh registers of `sv`:
/// prepare |−⟩|0⟩, Swap the second register controlled on the qubit, flip the
/// qubit controlled on the second register holding the flag, then release the
/// second register. Returns its index.
pub fn chrsm_from_swap_into(oracle: &mut OracleModel, sv: &mut StateVector) -> Result<usize> {
    let d = oracle.register_dim();
    chrsm_from_controlled_swap(|sv, q, r| oracle.apply_controlled_swap(sv, q, 1, r), d, sv)
}

/// The same circuit with the controlled Swap supplied by the caller as
/// `swap(sv, control_qubit, target)`, acting on the branch where the control
/// is 1.
pub fn chrsm_from_controlled_swap(
    mut swap: impl FnMut(&mut StateVector, usize, usize) -> Result<()>,
    d: usize,
    sv: &mut StateVector,
) -> Result<usize> {
    let s = 0.5f64.sqrt();
    let minus = PureState::new(CVec::from_vec(vec![c(s), c(-s)]))?;
    let q = sv.append(&minus);
    let r = sv.append(&flag(d - 1));
    swap(sv, q, r)?;
    sv.permute_basis(&[q, r], |v| vec![v[0] ^ usize::from(v[1] == 0), v[1]])?;
    sv.remove_product(q, &PureState::basis(2, 1))?;
    Ok(r - 1)
}

pub fn chrsm_from_swap(oracle: &mut OracleModel) -> Result<PureState> {
    let mut sv = StateVector::empty();
    chrsm_from_swap_into(oracle, &mut sv)?;
    Ok(sv.to_pure())
}

#[cfg(test)]
mod tests;
