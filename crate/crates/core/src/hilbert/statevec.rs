//! A pure joint state over a growing list of registers. Oracle answers are
//! appended as fresh tensor factors; gates and measurements act in place.

use super::{c, comb, sample, CMat, CVec, PureState, RegisterLayout, Rng, C64, NORM_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: RegisterLayout,
    amps: CVec,
}

impl StateVector {
    /// The empty (dimension-1) state.
    pub fn empty() -> Self {
        Self { layout: RegisterLayout::new(vec![]).unwrap(), amps: CVec::from_element(1, c(1.0)) }
    }

    pub fn new(layout: RegisterLayout, amps: CVec) -> Result<Self> {
        layout.check_dim(amps.len())?;
        let n2 = amps.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { layout, amps })
    }

    pub fn from_registers(states: &[PureState]) -> Self {
        let mut sv = Self::empty();
        for s in states {
            sv.append(s);
        }
        sv
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amps(&self) -> &CVec {
        &self.amps
    }

    pub fn num_registers(&self) -> usize {
        self.layout.len()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn to_pure(&self) -> PureState {
        PureState::normalized(self.amps.clone()).expect("state vectors stay normalized")
    }

    /// Appends a fresh register in state `s`; returns its index.
    pub fn append(&mut self, s: &PureState) -> usize {
        self.amps = self.amps.kronecker(s.amps());
        self.layout.push(s.dim());
        self.layout.len() - 1
    }

    /// Appends a joint state over several fresh registers with the given
    /// dims; returns their indices.
    pub fn append_registers(&mut self, s: &PureState, dims: &[usize]) -> Result<Vec<usize>> {
        let d: usize = dims.iter().product();
        if d != s.dim() {
            return Err(Error::DimensionMismatch { expected: d, got: s.dim() });
        }
        self.amps = self.amps.kronecker(s.amps());
        let first = self.layout.len();
        for &x in dims {
            self.layout.push(x);
        }
        Ok((first..self.layout.len()).collect())
    }

    /// Applies `op` (dimension = product of the listed register dims, first
    /// listed most significant) to registers `regs`.
    pub fn apply(&mut self, regs: &[usize], op: &CMat) -> Result<()> {
        self.layout.check_subset(regs)?;
        let sub = self.layout.offsets(regs);
        if op.nrows() != sub.len() || op.ncols() != sub.len() {
            return Err(Error::DimensionMismatch { expected: sub.len(), got: op.nrows() });
        }
        let rest = self.layout.offsets(&self.layout.complement(regs));
        let mut buf = CVec::zeros(sub.len());
        for &base in &rest {
            for (k, &o) in sub.iter().enumerate() {
                buf[k] = self.amps[base + o];
            }
            let out = op * &buf;
            for (k, &o) in sub.iter().enumerate() {
                self.amps[base + o] = out[k];
            }
        }
        Ok(())
    }

    /// Applies `op` to `targets` on the branch where register `control` has
    /// digit `value`.
    pub fn apply_controlled(&mut self, control: usize, value: usize, targets: &[usize], op: &CMat) -> Result<()> {
        let mut regs = vec![control];
        regs.extend_from_slice(targets);
        let dc = self.layout.dims()[control];
        let dt = self.layout.sub_dim(targets);
        let mut full = CMat::identity(dc * dt, dc * dt);
        full.view_mut((value * dt, value * dt), (dt, dt)).copy_from(op);
        self.apply(&regs, &full)
    }

    /// Applies a basis permutation given on digit tuples of `regs`.
    pub fn permute_basis(&mut self, regs: &[usize], f: impl Fn(&[usize]) -> Vec<usize>) -> Result<()> {
        self.layout.check_subset(regs)?;
        let dims: Vec<usize> = regs.iter().map(|&r| self.layout.dims()[r]).collect();
        let dsub: usize = dims.iter().product();
        let mut perm = vec![usize::MAX; dsub];
        for (i, slot) in perm.iter_mut().enumerate() {
            let img = f(&comb::digits(i, &dims));
            *slot = comb::undigits(&img, &dims);
        }
        let mut seen = vec![false; dsub];
        for &p in &perm {
            if p >= dsub || seen[p] {
                return Err(Error::InvalidArgument("basis map is not a permutation".into()));
            }
            seen[p] = true;
        }
        let sub = self.layout.offsets(regs);
        let rest = self.layout.offsets(&self.layout.complement(regs));
        let mut out = CVec::zeros(self.amps.len());
        for &base in &rest {
            for (i, &p) in perm.iter().enumerate() {
                out[base + sub[p]] = self.amps[base + sub[i]];
            }
        }
        self.amps = out;
        Ok(())
    }

    /// ⟨ψ| P_regs |ψ⟩ for an operator on `regs`.
    pub fn expectation(&self, regs: &[usize], op: &CMat) -> Result<C64> {
        let mut t = self.clone();
        t.apply(regs, op)?;
        Ok(self.amps.dotc(&t.amps))
    }

    /// Born probabilities of a projector family on `regs`.
    pub fn probabilities(&self, regs: &[usize], projectors: &[CMat]) -> Result<Vec<f64>> {
        super::check_complete(projectors)?;
        projectors.iter().map(|p| Ok(self.expectation(regs, p)?.re.max(0.0))).collect()
    }

    /// Samples a projective measurement on `regs`, collapses and renormalizes.
    pub fn measure(&mut self, regs: &[usize], projectors: &[CMat], rng: &mut Rng) -> Result<(usize, f64)> {
        let probs = self.probabilities(regs, projectors)?;
        let k = sample::sample_index(&probs, rng);
        self.apply(regs, &projectors[k])?;
        let n = self.amps.norm();
        self.amps /= c(n);
        Ok((k, probs[k]))
    }

    /// Reduced density operator on `keep` (in the order given).
    pub fn reduced(&self, keep: &[usize]) -> Result<CMat> {
        self.layout.check_subset(keep)?;
        let ok = self.layout.offsets(keep);
        let or = self.layout.offsets(&self.layout.complement(keep));
        let m = CMat::from_fn(ok.len(), or.len(), |i, j| self.amps[ok[i] + or[j]]);
        Ok(&m * m.adjoint())
    }

    /// Removes register `reg`, which must be in product with the rest in state
    /// `s` (overlap checked to 1e-10).
    pub fn remove_product(&mut self, reg: usize, s: &PureState) -> Result<()> {
        self.layout.check_subset(&[reg])?;
        let d = self.layout.dims()[reg];
        if s.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: s.dim() });
        }
        let rest_regs = self.layout.complement(&[reg]);
        let or = self.layout.offsets(&rest_regs);
        let stride = self.layout.strides()[reg];
        let mut out = CVec::zeros(or.len());
        for (k, &base) in or.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for x in 0..d {
                acc += s.amps()[x].conj() * self.amps[base + x * stride];
            }
            out[k] = acc;
        }
        let kept = out.norm_squared();
        if (kept - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "register {reg} is not in the expected product state (overlap {kept})"
            )));
        }
        let dims: Vec<usize> = rest_regs.iter().map(|&r| self.layout.dims()[r]).collect();
        self.layout = RegisterLayout::new(dims)?;
        self.amps = out / c(kept.sqrt());
        Ok(())
    }

    /// Moves the listed registers to the front, in order.
    pub fn reorder(&self, front: &[usize]) -> Result<StateVector> {
        self.layout.check_subset(front)?;
        let mut order = front.to_vec();
        order.extend(self.layout.complement(front));
        let dims: Vec<usize> = order.iter().map(|&r| self.layout.dims()[r]).collect();
        let offs = self.layout.offsets(&order);
        let amps = CVec::from_fn(offs.len(), |i, _| self.amps[offs[i]]);
        Ok(StateVector { layout: RegisterLayout::new(dims)?, amps })
    }
}
