//! Dense complex linear algebra over multi-register Hilbert spaces.
//!
//! Registers are ordered most-significant first: basis index
//! `i = ((x₁·d₂ + x₂)·d₃ + x₃)…`. Everything here is a pure function of its
//! inputs plus an explicit RNG.

pub mod comb;
mod sample;
mod sparse;
mod statevec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use sample::{rng_for, sample_binomial, sample_haar, sample_haar_dim, sample_unitary, Rng};
pub use sparse::{SparseOperator, SparseState, SparseVec};
pub use statevec::StateVector;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const NORM_TOL: f64 = 1e-12;
pub const DENSITY_TOL: f64 = 1e-10;
pub const MEASUREMENT_TOL: f64 = 1e-8;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegisterLayout {
    dims: Vec<usize>,
}

impl RegisterLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::LayoutMismatch("register of dimension 0".into()));
        }
        Ok(Self { dims })
    }

    pub fn uniform(d: usize, count: usize) -> Self {
        Self::new(vec![d; count]).expect("d ≥ 1")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    pub fn concat(&self, other: &RegisterLayout) -> RegisterLayout {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        RegisterLayout { dims }
    }

    pub fn push(&mut self, d: usize) {
        assert!(d > 0);
        self.dims.push(d);
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.total_dim() != dim {
            return Err(Error::DimensionMismatch { expected: self.total_dim(), got: dim });
        }
        Ok(())
    }

    pub fn check_subset(&self, regs: &[usize]) -> Result<()> {
        for (i, &r) in regs.iter().enumerate() {
            if r >= self.len() {
                return Err(Error::BadRegister { index: r, len: self.len() });
            }
            if regs[..i].contains(&r) {
                return Err(Error::LayoutMismatch(format!("register {r} listed twice")));
            }
        }
        Ok(())
    }

    pub fn complement(&self, regs: &[usize]) -> Vec<usize> {
        (0..self.len()).filter(|r| !regs.contains(r)).collect()
    }

    /// Flat-index offsets of every digit tuple over `regs` (first listed
    /// register most significant), with all other digits zero.
    pub fn offsets(&self, regs: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &r in regs {
            let mut next = Vec::with_capacity(out.len() * self.dims[r]);
            for &o in &out {
                for x in 0..self.dims[r] {
                    next.push(o + x * strides[r]);
                }
            }
            out = next;
        }
        out
    }

    pub fn sub_dim(&self, regs: &[usize]) -> usize {
        regs.iter().map(|&r| self.dims[r]).product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: CVec,
}

impl PureState {
    pub fn new(amps: CVec) -> Result<Self> {
        let n2 = amps.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { amps })
    }

    /// Normalizes `amps`; fails on the zero vector.
    pub fn normalized(amps: CVec) -> Result<Self> {
        let n = amps.norm();
        if n < 1e-300 {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(Self { amps: amps / c(n) })
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = CVec::zeros(dim);
        v[i] = c(1.0);
        Self { amps: v }
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::new(CVec::from_column_slice(amps))
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &CVec {
        &self.amps
    }

    pub fn into_amps(self) -> CVec {
        self.amps
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// |⟨a|b⟩|².
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState { amps: kron_vec(&self.amps, &other.amps) }
    }

    pub fn tensor_power(&self, k: usize) -> PureState {
        let mut out = PureState { amps: CVec::from_element(1, c(1.0)) };
        for _ in 0..k {
            out = out.tensor(self);
        }
        out
    }

    pub fn projector(&self) -> CMat {
        &self.amps * self.amps.adjoint()
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator { mat: self.projector() }
    }

    pub fn scaled(&self, phase: C64) -> PureState {
        PureState { amps: &self.amps * phase }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    mat: CMat,
}

impl DensityOperator {
    /// Validates Hermiticity, positivity and unit trace.
    pub fn new(mat: CMat) -> Result<Self> {
        validate_density(&mat)?;
        Ok(Self { mat })
    }

    /// Skips validation; for operators that are density operators by construction.
    pub fn from_matrix_unchecked(mat: CMat) -> Self {
        Self { mat }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { mat: CMat::identity(d, d) / c(d as f64) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator { mat: kron(&self.mat, &other.mat) }
    }

    pub fn partial_trace(&self, layout: &RegisterLayout, keep: &[usize]) -> Result<DensityOperator> {
        Ok(DensityOperator { mat: partial_trace(&self.mat, layout, keep)? })
    }
}

pub fn validate_density(m: &CMat) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidDensity("not square".into()));
    }
    let herm = (m - m.adjoint()).camax();
    if herm > DENSITY_TOL {
        return Err(Error::InvalidDensity(format!("not Hermitian ({herm:e})")));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
        return Err(Error::InvalidDensity(format!("trace {tr}")));
    }
    let h = (m + m.adjoint()) * c(0.5);
    let min = h.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -DENSITY_TOL {
        return Err(Error::InvalidDensity(format!("eigenvalue {min:e}")));
    }
    Ok(())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    a.kronecker(b)
}

/// `U ρ U†`.
pub fn conjugate(u: &CMat, rho: &CMat) -> CMat {
    u * rho * u.adjoint()
}

/// Reduced operator on `keep` (output register order follows `keep`).
pub fn partial_trace(m: &CMat, layout: &RegisterLayout, keep: &[usize]) -> Result<CMat> {
    layout.check_dim(m.nrows())?;
    layout.check_dim(m.ncols())?;
    layout.check_subset(keep)?;
    let rest = layout.complement(keep);
    let ok = layout.offsets(keep);
    let or = layout.offsets(&rest);
    let dk = ok.len();
    let mut out = CMat::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut s = C64::new(0.0, 0.0);
            for &r in &or {
                s += m[(ok[i] + r, ok[j] + r)];
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

/// Transpose on the registers in `subset`, identity on the rest.
pub fn partial_transpose(m: &CMat, layout: &RegisterLayout, subset: &[usize]) -> Result<CMat> {
    layout.check_dim(m.nrows())?;
    layout.check_dim(m.ncols())?;
    layout.check_subset(subset)?;
    let rest = layout.complement(subset);
    let os = layout.offsets(subset);
    let or = layout.offsets(&rest);
    let mut out = CMat::zeros(m.nrows(), m.ncols());
    for &s1 in &os {
        for &r1 in &or {
            for &s2 in &os {
                for &r2 in &or {
                    out[(s2 + r1, s1 + r2)] = m[(s1 + r1, s2 + r2)];
                }
            }
        }
    }
    Ok(out)
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.sum()
}

/// Square matrix of dimension `m + n + pad` that is zero except for an
/// `m × n` block of ones in the top-right corner.
pub fn block_ones(m: usize, n: usize, pad: usize) -> CMat {
    let d = m + n + pad;
    CMat::from_fn(d, d, |i, j| if i < m && j >= d - n { c(1.0) } else { c(0.0) })
}

/// ½‖ρ − σ‖₁.
pub fn trace_distance(rho: &CMat, sigma: &CMat) -> f64 {
    0.5 * trace_norm(&(rho - sigma))
}

/// Operator permuting `k` registers of dimension `d`: register `i` moves to
/// position `perm[i]`.
pub fn permutation_operator(d: usize, perm: &[usize]) -> CMat {
    let k = perm.len();
    let dims = vec![d; k];
    let dim = d.pow(k as u32);
    let mut m = CMat::zeros(dim, dim);
    let mut out = vec![0; k];
    for i in 0..dim {
        let x = comb::digits(i, &dims);
        for (src, &dst) in perm.iter().enumerate() {
            out[dst] = x[src];
        }
        m[(comb::undigits(&out, &dims), i)] = c(1.0);
    }
    m
}

pub fn swap_operator(d: usize) -> CMat {
    permutation_operator(d, &[1, 0])
}

/// Projector onto the symmetric subspace of (ℂᵈ)^{⊗k}, as the average of all
/// register permutations.
pub fn sym_projector(d: usize, k: usize) -> CMat {
    let dims = vec![d; k];
    let dim = d.pow(k as u32);
    let perms = comb::permutations(k);
    let w = 1.0 / perms.len() as f64;
    let mut m = CMat::zeros(dim, dim);
    let mut out = vec![0; k];
    for i in 0..dim {
        let x = comb::digits(i, &dims);
        for p in &perms {
            for (src, &dst) in p.iter().enumerate() {
                out[dst] = x[src];
            }
            m[(comb::undigits(&out, &dims), i)] += c(w);
        }
    }
    m
}

/// Acceptance probability `(1 + Tr(SWAP·ρ))/2` of the swap test on two
/// equal-dimension registers.
pub fn swap_test(joint: &CMat, layout: &RegisterLayout) -> Result<f64> {
    if layout.len() != 2 || layout.dims()[0] != layout.dims()[1] {
        return Err(Error::LayoutMismatch("swap test needs two equal registers".into()));
    }
    layout.check_dim(joint.nrows())?;
    let d = layout.dims()[0];
    let mut tr = C64::new(0.0, 0.0);
    for a in 0..d {
        for b in 0..d {
            tr += joint[(b * d + a, a * d + b)];
        }
    }
    Ok(0.5 * (1.0 + tr.re))
}

pub fn check_complete(projectors: &[CMat]) -> Result<()> {
    let Some(first) = projectors.first() else {
        return Err(Error::IncompleteMeasurement(1.0));
    };
    let d = first.nrows();
    let mut sum = CMat::zeros(d, d);
    for p in projectors {
        if p.nrows() != d || p.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.nrows() });
        }
        sum += p;
    }
    let dev = (sum - CMat::identity(d, d)).camax();
    if dev > MEASUREMENT_TOL {
        return Err(Error::IncompleteMeasurement(dev));
    }
    Ok(())
}

/// Born probabilities `Tr(Pᵢ ρ)`, clamped at zero.
pub fn measurement_probabilities(rho: &CMat, projectors: &[CMat]) -> Result<Vec<f64>> {
    check_complete(projectors)?;
    if projectors[0].nrows() != rho.nrows() {
        return Err(Error::DimensionMismatch { expected: rho.nrows(), got: projectors[0].nrows() });
    }
    Ok(projectors.iter().map(|p| (p * rho).trace().re.max(0.0)).collect())
}

#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub index: usize,
    pub probability: f64,
    pub post_state: DensityOperator,
}

/// Samples an outcome by the Born rule and returns the renormalized post-state.
pub fn apply_measurement(
    rho: &DensityOperator,
    projectors: &[CMat],
    rng: &mut Rng,
) -> Result<MeasurementOutcome> {
    let probs = measurement_probabilities(rho.matrix(), projectors)?;
    let index = sample::sample_index(&probs, rng);
    let p = &projectors[index];
    let post = p * rho.matrix() * p.adjoint() / c(probs[index]);
    Ok(MeasurementOutcome {
        index,
        probability: probs[index],
        post_state: DensityOperator::from_matrix_unchecked(post),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinomialSample {
    pub t: usize,
    pub c: usize,
}
