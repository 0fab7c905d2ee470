//! Type vectors and zero-padded type states.
//!
//! Symbols of ℂᴺ are written 1..=N so that digit 0 of a dim-(N+1) register
//! is the flag, matching [`crate::oracles::embed`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hilbert::{c, comb, sym_projector, trace_distance, CMat, PureState, SparseVec};

/// Dense operators built here stay at or below this dimension.
pub const DENSE_LIMIT: usize = 4096;

/// A multiset over [N] = {1, …, N}, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeMultiset {
    elems: Vec<usize>,
}

impl TypeMultiset {
    pub fn new(mut elems: Vec<usize>, n_dim: usize) -> Result<Self> {
        if let Some(&x) = elems.iter().find(|&&x| x == 0 || x > n_dim) {
            return Err(Error::InvalidArgument(format!("symbol {x} outside [1, {n_dim}]")));
        }
        elems.sort_unstable();
        Ok(Self { elems })
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elems(&self) -> &[usize] {
        &self.elems
    }

    pub fn multiplicities(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for &x in &self.elems {
            *m.entry(x).or_insert(0) += 1;
        }
        m
    }

    pub fn is_collision_free(&self) -> bool {
        self.elems.windows(2).all(|w| w[0] != w[1])
    }

    /// All distinct orderings.
    pub fn arrangements(&self) -> Vec<Vec<usize>> {
        comb::distinct_arrangements(&self.elems)
    }

    /// Multiset difference; `other` must be contained in `self`.
    pub fn minus(&self, other: &TypeMultiset) -> Result<TypeMultiset> {
        let mut rest = self.elems.clone();
        for x in &other.elems {
            let pos = rest.iter().position(|y| y == x).ok_or_else(|| Error::InvalidArgument(format!("{x} not in type")))?;
            rest.remove(pos);
        }
        Ok(TypeMultiset { elems: rest })
    }

    /// Sub-multisets obtained by picking the given positions of the sorted
    /// element list.
    pub fn pick(&self, positions: &[usize]) -> TypeMultiset {
        TypeMultiset { elems: positions.iter().map(|&i| self.elems[i]).collect() }
    }

    /// Ty(t, [N]).
    pub fn all(t: usize, n_dim: usize) -> Vec<TypeMultiset> {
        comb::multisets(1, n_dim, t).into_iter().map(|elems| TypeMultiset { elems }).collect()
    }

    /// The collision-free types of size t, i.e. t-subsets of [N].
    pub fn collision_free(t: usize, n_dim: usize) -> Vec<TypeMultiset> {
        comb::subsets(n_dim, t)
            .into_iter()
            .map(|s| TypeMultiset { elems: s.into_iter().map(|x| x + 1).collect() })
            .collect()
    }
}

fn check_dense(dim: usize) -> Result<()> {
    if dim > DENSE_LIMIT {
        return Err(Error::DimensionOverflow { dim, limit: DENSE_LIMIT });
    }
    Ok(())
}

/// |T⟩ over (ℂᴺ)^{⊗t}: uniform superposition over all arrangements.
pub fn type_vector(ty: &TypeMultiset, n_dim: usize) -> Result<PureState> {
    if ty.is_empty() {
        return Err(Error::InvalidArgument("type vectors need t ≥ 1".into()));
    }
    if ty.elems.iter().any(|&x| x > n_dim) {
        return Err(Error::InvalidArgument(format!("type exceeds [1, {n_dim}]")));
    }
    let t = ty.len();
    let dims = vec![n_dim; t];
    check_dense(n_dim.pow(t as u32))?;
    let mut v = SparseVec::new(n_dim.pow(t as u32));
    for arr in ty.arrangements() {
        let digs: Vec<usize> = arr.iter().map(|x| x - 1).collect();
        v.add(comb::undigits(&digs, &dims), c(1.0));
    }
    v.normalize()?;
    PureState::new(v.to_dense())
}

/// |Ty(t, [N])| by enumeration.
pub fn type_count(t: usize, n_dim: usize) -> usize {
    TypeMultiset::all(t, n_dim).len()
}

/// Uniform mixture of |T⟩⟨T| over the given types.
fn type_mixture(types: &[TypeMultiset], n_dim: usize, t: usize) -> Result<CMat> {
    if types.is_empty() {
        return Err(Error::InvalidArgument("empty type family".into()));
    }
    let dim = n_dim.pow(t as u32);
    let mut m = CMat::zeros(dim, dim);
    for ty in types {
        m += type_vector(ty, n_dim)?.projector();
    }
    Ok(m / c(types.len() as f64))
}

/// Trace distance between the Haar moment Π_sym/C(N+t−1,t) and the uniform
/// mixture of type vectors.
pub fn haar_type_identity_check(n: usize, t: usize) -> Result<f64> {
    let n_dim = 1usize << n;
    check_dense(n_dim.pow(t as u32))?;
    let moment = sym_projector(n_dim, t) / c(comb::binom((n_dim + t - 1) as i64, t as i64));
    let mix = type_mixture(&TypeMultiset::all(t, n_dim), n_dim, t)?;
    Ok(trace_distance(&moment, &mix))
}

/// Trace distance between the uniform type mixture and the same mixture
/// conditioned on the type being collision-free. When t > N no type is
/// collision-free and the distance is reported as 1.
pub fn collision_free_conditioning_distance(n: usize, t: usize) -> Result<f64> {
    let n_dim = 1usize << n;
    if t > n_dim {
        return Ok(1.0);
    }
    let all = type_mixture(&TypeMultiset::all(t, n_dim), n_dim, t)?;
    let cf = type_mixture(&TypeMultiset::collision_free(t, n_dim), n_dim, t)?;
    Ok(trace_distance(&all, &cf))
}

/// Role of one register in a zero-padded type state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Must hold a symbol of the type.
    A,
    /// May hold the flag; the index names the block for per-block fill counts.
    B(usize),
}

/// The type T spread over registers, with flags (digit 0) confined to B
/// slots and, optionally, a fixed number of non-flag entries per B block.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroPaddedSpec {
    pub ty: TypeMultiset,
    pub n_dim: usize,
    pub slots: Vec<Slot>,
    pub fills: Option<Vec<usize>>,
}

impl ZeroPaddedSpec {
    /// 𝔷(T, B) on layout (A, B).
    pub fn z(ty: TypeMultiset, n_dim: usize, a: usize, b: usize) -> Self {
        let mut slots = vec![Slot::A; a];
        slots.extend(std::iter::repeat_n(Slot::B(0), b));
        Self { ty, n_dim, slots, fills: None }
    }

    /// 𝔷(T, (B₁, B₂)) on layout (A₁, B₁, A₂, B₂); the zeros may sit anywhere
    /// in B₁ ∪ B₂.
    pub fn z_split(ty: TypeMultiset, n_dim: usize, a1: usize, b1: usize, a2: usize, b2: usize) -> Self {
        let mut slots = vec![Slot::A; a1];
        slots.extend(std::iter::repeat_n(Slot::B(0), b1));
        slots.extend(std::iter::repeat_n(Slot::A, a2));
        slots.extend(std::iter::repeat_n(Slot::B(0), b2));
        Self { ty, n_dim, slots, fills: None }
    }

    /// 𝔷²(T, B₁, B₂)^{b₁ᶠ,b₂ᶠ} on layout (A₁, B₁, A₂, B₂).
    #[allow(clippy::too_many_arguments)]
    pub fn z2(ty: TypeMultiset, n_dim: usize, a1: usize, b1: usize, a2: usize, b2: usize, b1f: usize, b2f: usize) -> Self {
        let mut slots = vec![Slot::A; a1];
        slots.extend(std::iter::repeat_n(Slot::B(0), b1));
        slots.extend(std::iter::repeat_n(Slot::A, a2));
        slots.extend(std::iter::repeat_n(Slot::B(1), b2));
        Self { ty, n_dim, slots, fills: Some(vec![b1f, b2f]) }
    }

    pub fn num_a(&self) -> usize {
        self.slots.iter().filter(|s| **s == Slot::A).count()
    }

    pub fn num_b(&self) -> usize {
        self.slots.len() - self.num_a()
    }

    fn blocks(&self) -> Vec<Vec<usize>> {
        let used = self.slots.iter().filter_map(|s| if let Slot::B(j) = s { Some(j + 1) } else { None }).max().unwrap_or(0);
        let nb = used.max(self.fills.as_ref().map_or(0, Vec::len));
        let mut out = vec![Vec::new(); nb];
        for (i, s) in self.slots.iter().enumerate() {
            if let Slot::B(j) = s {
                out[*j].push(i);
            }
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        let (a, b, t) = (self.num_a(), self.num_b(), self.ty.len());
        if t < a || t > a + b {
            return Err(Error::Infeasible(format!("|T| = {t} outside [{a}, {}]", a + b)));
        }
        if self.ty.elems.iter().any(|&x| x > self.n_dim) {
            return Err(Error::InvalidArgument(format!("type exceeds [1, {}]", self.n_dim)));
        }
        if let Some(f) = &self.fills {
            let blocks = self.blocks();
            if f.len() != blocks.len() || f.iter().zip(&blocks).any(|(&x, bl)| x > bl.len()) {
                return Err(Error::Infeasible(format!("fill counts {f:?} do not fit the blocks")));
            }
            if a + f.iter().sum::<usize>() != t {
                return Err(Error::Infeasible(format!("|A| + fills ≠ |T| = {t}")));
            }
        }
        Ok(())
    }

    /// Dimension of the register space, (N+1)^{#slots}.
    pub fn dim(&self) -> usize {
        (self.n_dim + 1).pow(self.slots.len() as u32)
    }

    /// Support size predicted for a collision-free type:
    /// `|T|!·C(|B|, |T|−|A|)`, or `|T|!·Π_j C(|B_j|, f_j)` with fills.
    pub fn closed_form_support(&self) -> f64 {
        let t = self.ty.len();
        match &self.fills {
            None => comb::factorial(t) * comb::binom(self.num_b() as i64, (t - self.num_a()) as i64),
            Some(f) => {
                comb::factorial(t)
                    * self.blocks().iter().zip(f).map(|(bl, &x)| comb::binom(bl.len() as i64, x as i64)).product::<f64>()
            }
        }
    }

    /// Basis indices of the support.
    pub fn support(&self) -> Result<Vec<usize>> {
        self.check()?;
        let a_pos: Vec<usize> = (0..self.slots.len()).filter(|&i| self.slots[i] == Slot::A).collect();
        let extra = self.ty.len() - a_pos.len();
        let mut choices: Vec<Vec<usize>> = Vec::new();
        match &self.fills {
            None => {
                let b_pos: Vec<usize> = (0..self.slots.len()).filter(|&i| self.slots[i] != Slot::A).collect();
                for s in comb::subsets(b_pos.len(), extra) {
                    choices.push(s.iter().map(|&k| b_pos[k]).collect());
                }
            }
            Some(f) => {
                let mut acc: Vec<Vec<usize>> = vec![Vec::new()];
                for (bl, &x) in self.blocks().iter().zip(f) {
                    let mut next = Vec::new();
                    for pre in &acc {
                        for s in comb::subsets(bl.len(), x) {
                            let mut v = pre.clone();
                            v.extend(s.iter().map(|&k| bl[k]));
                            next.push(v);
                        }
                    }
                    acc = next;
                }
                choices = acc;
            }
        }
        let d = self.n_dim + 1;
        let arrs = self.ty.arrangements();
        let mut out = Vec::with_capacity(choices.len() * arrs.len());
        for ch in choices {
            let mut pos: Vec<usize> = a_pos.iter().chain(&ch).copied().collect();
            pos.sort_unstable();
            for arr in &arrs {
                let mut digs = vec![0usize; self.slots.len()];
                for (&p, &x) in pos.iter().zip(arr) {
                    digs[p] = x;
                }
                out.push(digs.iter().fold(0, |acc, &x| acc * d + x));
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

/// The zero-padded type state as a sparse unit vector.
pub fn zero_state_sparse(spec: &ZeroPaddedSpec) -> Result<SparseVec> {
    let support = spec.support()?;
    let mut v = SparseVec::new(spec.dim());
    let amp = c((support.len() as f64).sqrt().recip());
    for i in support {
        v.add(i, amp);
    }
    Ok(v)
}

/// Dense 𝔷(T, B); `spec.fills` must be `None`.
pub fn zero_state(spec: &ZeroPaddedSpec) -> Result<PureState> {
    if spec.fills.is_some() {
        return Err(Error::InvalidArgument("use zero_state2 for per-block fill counts".into()));
    }
    check_dense(spec.dim())?;
    PureState::new(zero_state_sparse(spec)?.to_dense())
}

/// Dense 𝔷²(T, B₁, B₂)^{b₁ᶠ,b₂ᶠ}; `spec.fills` must be set.
pub fn zero_state2(spec: &ZeroPaddedSpec) -> Result<PureState> {
    if spec.fills.is_none() {
        return Err(Error::InvalidArgument("zero_state2 needs fill counts".into()));
    }
    check_dense(spec.dim())?;
    PureState::new(zero_state_sparse(spec)?.to_dense())
}

/// `α_i = C(b₁, i−a₁) C(b₂, |T|−i−a₂) / (C(b₁+b₂, |T|−a₁−a₂) C(|T|, i))`.
pub fn zerosplit_alpha(t: usize, a1: usize, a2: usize, b1: usize, b2: usize, i: usize) -> f64 {
    let (t, a1, a2, b1, b2, i) = (t as i64, a1 as i64, a2 as i64, b1 as i64, b2 as i64, i as i64);
    comb::binom(b1, i - a1) * comb::binom(b2, t - i - a2) / (comb::binom(b1 + b2, t - a1 - a2) * comb::binom(t, i))
}

fn require_collision_free(ty: &TypeMultiset) -> Result<()> {
    if !ty.is_collision_free() {
        return Err(Error::InvalidArgument("type must be collision-free".into()));
    }
    Ok(())
}

/// `‖𝔷(T,(B₁,B₂)) − Σ_X √α_{|X|} 𝔷(X,B₁) ⊗ 𝔷(T∖X,B₂)‖` on layout
/// (A₁, B₁, A₂, B₂).
pub fn verify_zerosplit(ty: &TypeMultiset, n_dim: usize, a1: usize, a2: usize, b1: usize, b2: usize) -> Result<f64> {
    require_collision_free(ty)?;
    let lhs = zero_state_sparse(&ZeroPaddedSpec::z_split(ty.clone(), n_dim, a1, b1, a2, b2))?;
    let t = ty.len();
    let mut rhs = SparseVec::new(lhs.dim());
    for i in a1..=(a1 + b1).min(t) {
        if t < i + a2 || t - i > a2 + b2 {
            continue;
        }
        let w = zerosplit_alpha(t, a1, a2, b1, b2, i).sqrt();
        for pos in comb::subsets(t, i) {
            let x = ty.pick(&pos);
            let rest = ty.minus(&x)?;
            let left = zero_state_sparse(&ZeroPaddedSpec::z(x, n_dim, a1, b1))?;
            let right = zero_state_sparse(&ZeroPaddedSpec::z(rest, n_dim, a2, b2))?;
            rhs.axpy(c(w), &left.tensor(&right));
        }
    }
    rhs.axpy(c(-1.0), &lhs);
    Ok(rhs.norm())
}

/// `‖𝔷²(T,B₁,B₂)^{b₁ᶠ,b₂ᶠ} − C(|T|, a₁+b₁ᶠ)^{-1/2} Σ_{|X|=a₁+b₁ᶠ} 𝔷(X,B₁) ⊗ 𝔷(T∖X,B₂)‖`
/// on layout (A₁, B₁, A₂, B₂).
#[allow(clippy::too_many_arguments)]
pub fn verify_zerosplit2(
    ty: &TypeMultiset,
    n_dim: usize,
    a1: usize,
    a2: usize,
    b1: usize,
    b2: usize,
    b1f: usize,
    b2f: usize,
) -> Result<f64> {
    require_collision_free(ty)?;
    let lhs = zero_state_sparse(&ZeroPaddedSpec::z2(ty.clone(), n_dim, a1, b1, a2, b2, b1f, b2f))?;
    let t = ty.len();
    let k = a1 + b1f;
    let w = comb::binom(t as i64, k as i64).powf(-0.5);
    let mut rhs = SparseVec::new(lhs.dim());
    for pos in comb::subsets(t, k) {
        let x = ty.pick(&pos);
        let rest = ty.minus(&x)?;
        let left = zero_state_sparse(&ZeroPaddedSpec::z(x, n_dim, a1, b1))?;
        let right = zero_state_sparse(&ZeroPaddedSpec::z(rest, n_dim, a2, b2))?;
        rhs.axpy(c(w), &left.tensor(&right));
    }
    rhs.axpy(c(-1.0), &lhs);
    Ok(rhs.norm())
}

/// Every feasible parameter tuple for the splitting identities with
/// `a₁+a₂+b₁+b₂ ≤ max_regs` and `|T| ≤ max_t`: `(t, a1, a2, b1, b2)`.
pub fn zerosplit_grid(max_regs: usize, max_t: usize) -> Vec<(usize, usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for a1 in 0..=max_regs {
        for a2 in 0..=max_regs - a1 {
            for b1 in 0..=max_regs - a1 - a2 {
                for b2 in 0..=max_regs - a1 - a2 - b1 {
                    for t in (a1 + a2)..=(a1 + a2 + b1 + b2).min(max_t) {
                        out.push((t, a1, a2, b1, b2));
                    }
                }
            }
        }
    }
    out
}
