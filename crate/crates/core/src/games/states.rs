//! Exact Key Lemma, main-theorem and hybrid states as sparse operators, the
//! PPT bound and the counting measurement.

use rand::Rng as _;
use serde::Serialize;

use crate::constructions::rep_state_sparse;
use crate::error::{Error, Result};
use crate::hilbert::{c, comb, partial_transpose, trace_norm, CMat, RegisterLayout, Rng, SparseOperator, SparseVec};
use crate::oracles::EmbeddedState;
use crate::typestates::{zero_state_sparse, Slot, TypeMultiset, ZeroPaddedSpec};

/// Largest register space the sparse builders accept.
pub const SPARSE_DIM_LIMIT: usize = 1 << 20;

fn check_sparse_dim(d: usize, regs: usize) -> Result<usize> {
    let mut dim = 1usize;
    for _ in 0..regs {
        dim = dim.checked_mul(d).filter(|&x| x <= SPARSE_DIM_LIMIT).ok_or(Error::DimensionOverflow {
            dim: d.saturating_pow(regs as u32),
            limit: SPARSE_DIM_LIMIT,
        })?;
    }
    Ok(dim)
}

/// Register counts of the two parties and the alphabet size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KeyLemmaParams {
    pub a1: usize,
    pub a2: usize,
    pub b1: usize,
    pub b2: usize,
    pub n_dim: usize,
}

impl KeyLemmaParams {
    pub fn new(a1: usize, a2: usize, b1: usize, b2: usize, n_dim: usize) -> Self {
        Self { a1, a2, b1, b2, n_dim }
    }

    pub fn total(&self) -> usize {
        self.a1 + self.a2 + self.b1 + self.b2
    }

    /// N ≥ (a₁+a₂+b₁+b₂+1)².
    pub fn precondition_met(&self) -> bool {
        self.n_dim >= (self.total() + 1).pow(2)
    }

    /// e·(a₁+a₂+b₁+b₂)⁵/√N.
    pub fn bound(&self) -> f64 {
        std::f64::consts::E * (self.total() as f64).powi(5) / (self.n_dim as f64).sqrt()
    }

    /// Layout (A₁, B₁, A₂, B₂), every register of dimension N+1.
    pub fn layout(&self) -> RegisterLayout {
        RegisterLayout::uniform(self.n_dim + 1, self.total())
    }

    /// Registers A₂B₂ in the layout.
    pub fn second_party(&self) -> Vec<usize> {
        (self.a1 + self.b1..self.total()).collect()
    }

    fn check(&self) -> Result<()> {
        if self.n_dim == 0 {
            return Err(Error::InvalidArgument("N must be positive".into()));
        }
        check_sparse_dim(self.n_dim + 1, self.total()).map(|_| ())
    }
}

/// Adds `w · mean_T |𝔷(spec(T))⟩⟨·|` over `types`.
fn add_family(
    op: &mut SparseOperator,
    w: f64,
    types: &[TypeMultiset],
    spec: impl Fn(TypeMultiset) -> ZeroPaddedSpec,
) -> Result<()> {
    if w == 0.0 {
        return Ok(());
    }
    if types.is_empty() {
        return Err(Error::Infeasible("no type of the required size".into()));
    }
    let wt = w / types.len() as f64;
    for ty in types {
        op.add_outer(wt, &zero_state_sparse(&spec(ty.clone()))?);
    }
    Ok(())
}

fn two_party_states(p: &KeyLemmaParams, family: impl Fn(usize, usize) -> Vec<TypeMultiset>) -> Result<(SparseOperator, SparseOperator)> {
    p.check()?;
    let KeyLemmaParams { a1, a2, b1, b2, n_dim } = *p;
    let a = a1 + a2;
    let dim = p.layout().total_dim();
    let mut rho = SparseOperator::new(dim);
    for k in 0..=b1 + b2 {
        add_family(&mut rho, comb::binomial_pmf(b1 + b2, k), &family(a + k, n_dim), |t| {
            ZeroPaddedSpec::z_split(t, n_dim, a1, b1, a2, b2)
        })?;
    }
    let mut sigma = SparseOperator::new(dim);
    for k1 in 0..=b1 {
        for k2 in 0..=b2 {
            let w = comb::binomial_pmf(b1, k1) * comb::binomial_pmf(b2, k2);
            add_family(&mut sigma, w, &family(a + k1 + k2, n_dim), |t| {
                ZeroPaddedSpec::z2(t, n_dim, a1, b1, a2, b2, k1, k2)
            })?;
        }
    }
    Ok((rho, sigma))
}

/// `(ρ̃, σ̃)`: binomially weighted uniform mixtures over collision-free types
/// of 𝔷(T,(B₁,B₂)) and 𝔷²(T,B₁,B₂)^{c₁,c₂}, on layout (A₁, B₁, A₂, B₂).
pub fn key_lemma_states(p: &KeyLemmaParams) -> Result<(SparseOperator, SparseOperator)> {
    two_party_states(p, TypeMultiset::collision_free)
}

/// `(ρ, σ)` of the main theorem: Haar copies on A₁, A₂ with one joint Rep
/// state on B₁B₂ (ρ) or independent Rep states per block (σ). The Haar
/// average is taken through the type-vector expansion over all types.
pub fn mainthm_states(p: &KeyLemmaParams) -> Result<(SparseOperator, SparseOperator)> {
    two_party_states(p, TypeMultiset::all)
}

/// ½‖ρ^Γ − σ^Γ‖₁ with Γ the partial transpose on `second`.
pub fn ppt_bound(rho: &SparseOperator, sigma: &SparseOperator, layout: &RegisterLayout, second: &[usize]) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::LayoutMismatch(format!("operators of dimension {} and {}", rho.dim(), sigma.dim())));
    }
    layout.check_dim(rho.dim())?;
    Ok(0.5 * rho.sub(sigma).partial_transpose(layout, second)?.trace_norm())
}

/// Dense counterpart of [`ppt_bound`].
pub fn ppt_bound_dense(rho: &CMat, sigma: &CMat, layout: &RegisterLayout, second: &[usize]) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::LayoutMismatch(format!("operators of shape {:?} and {:?}", rho.shape(), sigma.shape())));
    }
    Ok(0.5 * trace_norm(&partial_transpose(&(rho - sigma), layout, second)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyLemmaReport {
    pub params: KeyLemmaParams,
    /// ‖ρ̃^Γ − σ̃^Γ‖₁.
    pub lhs: f64,
    pub bound: f64,
    pub precondition_met: bool,
    /// ½‖ρ̃ − σ̃‖₁.
    pub global_trace_distance: f64,
}

impl KeyLemmaReport {
    /// `lhs ≤ bound`, required only when the precondition holds.
    pub fn holds(&self) -> bool {
        !self.precondition_met || self.lhs <= self.bound
    }
}

pub fn verify_key_lemma(p: &KeyLemmaParams) -> Result<KeyLemmaReport> {
    let (rho, sigma) = key_lemma_states(p)?;
    let lhs = 2.0 * ppt_bound(&rho, &sigma, &p.layout(), &p.second_party())?;
    Ok(KeyLemmaReport {
        params: *p,
        lhs,
        bound: p.bound(),
        precondition_met: p.precondition_met(),
        global_trace_distance: rho.trace_distance(&sigma),
    })
}

/// Π_c^t on t registers of dimension d, summed over size-c subsets of
/// non-flag positions.
pub fn counting_projector(d: usize, t: usize, count: usize) -> CMat {
    let f = super::flag_projector(d);
    let nf = CMat::identity(d, d) - &f;
    let mut out = CMat::zeros(d.pow(t as u32), d.pow(t as u32));
    for s in comb::subsets(t, count) {
        let mut term = CMat::identity(1, 1);
        for i in 0..t {
            term = term.kronecker(if s.contains(&i) { &nf } else { &f });
        }
        out += term;
    }
    out
}

fn nonflag_count(idx: usize, strides: &[usize], dims: &[usize], regs: &[usize]) -> usize {
    regs.iter().filter(|&&r| !(idx / strides[r]).is_multiple_of(dims[r])).count()
}

/// Probability of each count 0..=|regs| of non-flag registers.
pub fn counting_distribution(rho: &SparseOperator, layout: &RegisterLayout, regs: &[usize]) -> Result<Vec<f64>> {
    layout.check_dim(rho.dim())?;
    layout.check_subset(regs)?;
    let (strides, dims) = (layout.strides(), layout.dims());
    let mut p = vec![0.0; regs.len() + 1];
    for ((i, j), x) in rho.sorted_entries() {
        if i == j {
            p[nonflag_count(i, &strides, dims, regs)] += x.re;
        }
    }
    Ok(p)
}

/// Σ_c Π_c ρ Π_c on `regs`: the counting measurement with the outcome
/// forgotten. The projectors are diagonal, so entries survive iff both
/// indices carry the same count.
pub fn counting_channel(rho: &SparseOperator, layout: &RegisterLayout, regs: &[usize]) -> Result<SparseOperator> {
    layout.check_dim(rho.dim())?;
    layout.check_subset(regs)?;
    let (strides, dims) = (layout.strides(), layout.dims());
    let mut out = SparseOperator::new(rho.dim());
    for ((i, j), x) in rho.sorted_entries() {
        if nonflag_count(i, &strides, dims, regs) == nonflag_count(j, &strides, dims, regs) {
            out.add(i, j, x);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct CountingOutcome {
    pub count: usize,
    pub probability: f64,
    pub post: SparseOperator,
}

/// Samples the counting measurement on `regs` and returns the renormalized
/// post-measurement state.
pub fn counting_measurement(rho: &SparseOperator, layout: &RegisterLayout, regs: &[usize], rng: &mut Rng) -> Result<CountingOutcome> {
    let probs = counting_distribution(rho, layout, regs)?;
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut count = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for (k, &p) in probs.iter().enumerate() {
        if u < p {
            count = k;
            break;
        }
        u -= p;
    }
    let (strides, dims) = (layout.strides(), layout.dims());
    let mut post = SparseOperator::new(rho.dim());
    for ((i, j), x) in rho.sorted_entries() {
        if nonflag_count(i, &strides, dims, regs) == count && nonflag_count(j, &strides, dims, regs) == count {
            post.add(i, j, x / c(probs[count]));
        }
    }
    Ok(CountingOutcome { count, probability: probs[count], post })
}

/// All count vectors with `c_j ≤ sizes[j]`, with their product binomial
/// weights.
fn count_vectors(sizes: &[usize]) -> Vec<(Vec<usize>, f64)> {
    let mut acc: Vec<(Vec<usize>, f64)> = vec![(vec![], 1.0)];
    for &s in sizes {
        let mut next = Vec::new();
        for (v, w) in &acc {
            for k in 0..=s {
                let mut v2 = v.clone();
                v2.push(k);
                next.push((v2, w * comb::binomial_pmf(s, k)));
            }
        }
        acc = next;
    }
    acc
}

/// Block sizes after grouping: the first `i` blocks alone, the rest joined.
fn grouped(bs: &[usize], i: usize) -> Vec<usize> {
    let mut g = bs[..i].to_vec();
    if i < bs.len() {
        g.push(bs[i..].iter().sum());
    }
    g
}

/// For a fixed φ: `E[φ^{⊗a} ⊗ Rep_{b₁,c₁} ⊗ … ⊗ Rep_{b_i,c_i} ⊗ Rep_{b_{i+1}+…+b_ℓ,c}]`
/// with independent `c_j ~ B(b_j, 1/2)` and `c ~ B(b_{i+1}+…+b_ℓ, 1/2)`, on
/// layout (A, B₁, …, B_ℓ).
pub fn hyb_lemma_state(phi: &EmbeddedState, a: usize, bs: &[usize], i: usize) -> Result<SparseOperator> {
    if i > bs.len() {
        return Err(Error::InvalidArgument(format!("step {i} beyond {} blocks", bs.len())));
    }
    let d = phi.dim();
    let regs = a + bs.iter().sum::<usize>();
    let dim = check_sparse_dim(d, regs)?;
    let p = SparseVec::from_dense(phi.state().amps());
    let mut head = SparseVec::basis(1, 0);
    for _ in 0..a {
        head = head.tensor(&p);
    }
    let sizes = grouped(bs, i);
    let mut out = SparseOperator::new(dim);
    for (counts, w) in count_vectors(&sizes) {
        let mut v = head.clone();
        for (&s, &k) in sizes.iter().zip(&counts) {
            v = v.tensor(&rep_state_sparse(s, k, phi)?);
        }
        out.add_outer(w, &v);
    }
    Ok(out)
}

/// Measures the count on blocks B₁..B_i of the step-0 state and compares with
/// the step-`i` state. Returns the max-entry residual and the smallest
/// probability that a Rep state `Rep_{b,c}` (for every block size b and c ≤ b)
/// yields count c.
pub fn verify_hyb_lemma(phi: &EmbeddedState, a: usize, bs: &[usize], i: usize) -> Result<(f64, f64)> {
    let d = phi.dim();
    let regs = a + bs.iter().sum::<usize>();
    let layout = RegisterLayout::uniform(d, regs);
    let mut rho = hyb_lemma_state(phi, a, bs, 0)?;
    let mut start = a;
    for &b in &bs[..i] {
        let block: Vec<usize> = (start..start + b).collect();
        rho = counting_channel(&rho, &layout, &block)?;
        start += b;
    }
    let residual = rho.max_abs_diff(&hyb_lemma_state(phi, a, bs, i)?);

    let mut membership = 1.0f64;
    for &b in bs {
        let lay = RegisterLayout::uniform(d, b);
        let all: Vec<usize> = (0..b).collect();
        for k in 0..=b {
            let mut op = SparseOperator::new(d.pow(b as u32));
            op.add_outer(1.0, &rep_state_sparse(b, k, phi)?);
            membership = membership.min(counting_distribution(&op, &lay, &all)?[k]);
        }
    }
    Ok((residual, membership))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HybridStep {
    /// Compares Hyb_step with Hyb_{step+1}.
    pub step: usize,
    /// ½‖·^Γ − ·^Γ‖₁ with Γ on the parties after `step + 1`, the cut the
    /// reduction to the two-party bound uses.
    pub ppt_step_cut: f64,
    /// ½‖·^Γ − ·^Γ‖₁ with Γ on the last party.
    pub ppt_last_cut: f64,
    /// ½‖Hyb_step − Hyb_{step+1}‖₁.
    pub trace_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HybridChainReport {
    pub steps: Vec<HybridStep>,
    /// max(‖Hyb_0 − ρ‖_max, ‖Hyb_ℓ − σ‖_max) against the direct definitions.
    pub endpoint_residual: f64,
    /// max_i ‖M(ρ on B₁..B_i) − Hyb_i‖_max: every hybrid is the counting
    /// measurement applied to ρ.
    pub counting_residual: f64,
    /// ½‖ρ^Γ − σ^Γ‖₁ with Γ on the last party.
    pub endpoint_ppt_last_cut: f64,
    /// ½‖ρ − σ‖₁.
    pub endpoint_trace_distance: f64,
    /// e·(a+b)⁵/√N.
    pub key_lemma_bound: f64,
    pub precondition_met: bool,
}

/// Haar-averaged states on the per-party layout (A₁, B₁, …, A_ℓ, B_ℓ), built
/// from types: `groups[p]` names the B block of party p and `fills` ranges
/// over the count vectors of the blocks; `None` leaves the zeros free in one
/// joint block.
fn haar_party_state(a_s: &[usize], b_s: &[usize], n_dim: usize, i: Option<usize>) -> Result<SparseOperator> {
    let total: usize = a_s.iter().sum::<usize>() + b_s.iter().sum::<usize>();
    let dim = check_sparse_dim(n_dim + 1, total)?;
    let a: usize = a_s.iter().sum();
    let mut slots = Vec::with_capacity(total);
    for (p, (&ap, &bp)) in a_s.iter().zip(b_s).enumerate() {
        slots.extend(std::iter::repeat_n(Slot::A, ap));
        let block = match i {
            Some(i) => p.min(i),
            None => 0,
        };
        slots.extend(std::iter::repeat_n(Slot::B(block), bp));
    }
    let mut out = SparseOperator::new(dim);
    match i {
        None => {
            let b: usize = b_s.iter().sum();
            for k in 0..=b {
                add_family(&mut out, comb::binomial_pmf(b, k), &TypeMultiset::all(a + k, n_dim), |t| ZeroPaddedSpec {
                    ty: t,
                    n_dim,
                    slots: slots.clone(),
                    fills: None,
                })?;
            }
        }
        Some(i) => {
            for (counts, w) in count_vectors(&grouped(b_s, i)) {
                let k: usize = counts.iter().sum();
                add_family(&mut out, w, &TypeMultiset::all(a + k, n_dim), |t| ZeroPaddedSpec {
                    ty: t,
                    n_dim,
                    slots: slots.clone(),
                    fills: Some(counts.clone()),
                })?;
            }
        }
    }
    Ok(out)
}

/// Builds every hybrid between the joint-Rep state ρ and the per-party-Rep
/// state σ for ℓ parties holding `a_s[p]` Haar copies and `b_s[p]` Rep
/// registers, checks the endpoints and the counting-measurement route, and
/// reports per-step distances.
pub fn hybrid_chain_check(a_s: &[usize], b_s: &[usize], n_dim: usize) -> Result<HybridChainReport> {
    let l = b_s.len();
    if l == 0 || a_s.len() != l {
        return Err(Error::InvalidArgument("one a and one b per party, at least one party".into()));
    }
    let total: usize = a_s.iter().sum::<usize>() + b_s.iter().sum::<usize>();
    let layout = RegisterLayout::uniform(n_dim + 1, total);
    let mut starts = Vec::with_capacity(l + 1);
    let mut acc = 0;
    for p in 0..l {
        starts.push(acc);
        acc += a_s[p] + b_s[p];
    }
    starts.push(acc);
    let party_regs = |from: usize| -> Vec<usize> { (starts[from.min(l)]..total).collect() };
    let last = party_regs(l - 1);

    let hyb: Vec<SparseOperator> = (0..=l).map(|i| haar_party_state(a_s, b_s, n_dim, Some(i))).collect::<Result<_>>()?;
    let rho = haar_party_state(a_s, b_s, n_dim, None)?;
    let sigma = hyb[l].clone();
    let mut endpoint_residual = hyb[0].max_abs_diff(&rho);
    if l == 2 {
        // Two parties share the (A₁, B₁, A₂, B₂) layout of the main theorem.
        let p = KeyLemmaParams::new(a_s[0], a_s[1], b_s[0], b_s[1], n_dim);
        let (r2, s2) = mainthm_states(&p)?;
        endpoint_residual = endpoint_residual.max(rho.max_abs_diff(&r2)).max(sigma.max_abs_diff(&s2));
    }

    let mut counting_residual = 0.0f64;
    let mut measured = rho.clone();
    for i in 1..=l {
        let p = i - 1;
        let block: Vec<usize> = (starts[p] + a_s[p]..starts[p + 1]).collect();
        measured = counting_channel(&measured, &layout, &block)?;
        counting_residual = counting_residual.max(measured.max_abs_diff(&hyb[i]));
    }

    let mut steps = Vec::with_capacity(l);
    for i in 0..l {
        steps.push(HybridStep {
            step: i,
            ppt_step_cut: ppt_bound(&hyb[i], &hyb[i + 1], &layout, &party_regs(i + 1))?,
            ppt_last_cut: ppt_bound(&hyb[i], &hyb[i + 1], &layout, &last)?,
            trace_distance: hyb[i].trace_distance(&hyb[i + 1]),
        });
    }
    let kp = KeyLemmaParams::new(a_s.iter().sum(), 0, b_s.iter().sum(), 0, n_dim);
    Ok(HybridChainReport {
        steps,
        endpoint_residual,
        counting_residual,
        endpoint_ppt_last_cut: ppt_bound(&rho, &sigma, &layout, &last)?,
        endpoint_trace_distance: rho.trace_distance(&sigma),
        key_lemma_bound: kp.bound(),
        precondition_met: kp.precondition_met(),
    })
}
