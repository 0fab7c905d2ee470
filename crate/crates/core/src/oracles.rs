//! The three oracle models (CHRS, CHRS−, Swap) over a hidden state drawn
//! from a [`StateDistribution`], in the dimension-(N+1) embedding where
//! index 0 is the flag vector |0⟩ and indices 1..=N carry ℂᴺ.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hilbert::{c, sample_haar, CMat, CVec, PureState, Rng, StateVector, C64};

#[derive(Debug, Clone, PartialEq)]
pub enum DistKind {
    Haar,
    /// `e^{2πij/M}|x⟩` for uniform `j ∈ [M]`; `base` is x ∈ [N], 1-based.
    DiscretePhase { base: usize, levels: usize },
    Fixed(PureState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    n: usize,
    kind: DistKind,
}

impl StateDistribution {
    pub fn haar(n: usize) -> Self {
        Self { n, kind: DistKind::Haar }
    }

    pub fn discrete_phase(n: usize, base: usize, levels: usize) -> Result<Self> {
        if base == 0 || base > 1 << n {
            return Err(Error::InvalidArgument(format!("base index {base} outside [1, {}]", 1 << n)));
        }
        if levels == 0 {
            return Err(Error::InvalidArgument("at least one phase level".into()));
        }
        Ok(Self { n, kind: DistKind::DiscretePhase { base, levels } })
    }

    pub fn fixed(phi: PureState) -> Result<Self> {
        let d = phi.dim();
        if !d.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("state dimension {d} is not 2ⁿ")));
        }
        Ok(Self { n: d.trailing_zeros() as usize, kind: DistKind::Fixed(phi) })
    }

    /// The basis ket |x⟩ of ℂᴺ (0-based) as a fixed distribution.
    pub fn fixed_basis(n: usize, x: usize) -> Result<Self> {
        if x >= 1 << n {
            return Err(Error::InvalidArgument(format!("basis index {x} outside [0, {})", 1 << n)));
        }
        Self::fixed(PureState::basis(1 << n, x))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// N = 2ⁿ.
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn kind(&self) -> &DistKind {
        &self.kind
    }

    pub fn sample(&self, rng: &mut Rng) -> PureState {
        match &self.kind {
            DistKind::Haar => sample_haar(self.n, rng),
            DistKind::DiscretePhase { levels, .. } => {
                let j = rand::Rng::random_range(rng, 0..*levels);
                self.phase_sample(j)
            }
            DistKind::Fixed(phi) => phi.clone(),
        }
    }

    fn phase_sample(&self, j: usize) -> PureState {
        let DistKind::DiscretePhase { base, levels } = self.kind else { unreachable!() };
        let theta = 2.0 * PI * j as f64 / levels as f64;
        PureState::basis(self.dim(), base - 1).scaled(C64::from_polar(1.0, theta))
    }

    /// Exact finite support with weights, when the distribution has one.
    pub fn finite_support(&self) -> Option<Vec<(f64, PureState)>> {
        match &self.kind {
            DistKind::Haar => None,
            DistKind::DiscretePhase { levels, .. } => {
                let w = 1.0 / *levels as f64;
                Some((0..*levels).map(|j| (w, self.phase_sample(j))).collect())
            }
            DistKind::Fixed(phi) => Some(vec![(1.0, phi.clone())]),
        }
    }

    /// Largest entry of any moment tensor `E[φ^{⊗p} ⊗ φ̄^{⊗q}]` with `p ≠ q`,
    /// `p, q ≤ t`. Zero exactly when phase twirling kills all unbalanced
    /// moments up to order `t`.
    pub fn unbalanced_moment(&self, t: usize) -> f64 {
        match &self.kind {
            // Haar measure is invariant under φ ↦ e^{iθ}φ, so every moment
            // with unequal ket/bra counts averages to zero.
            DistKind::Haar => 0.0,
            // Each sample is e^{iθ}|x⟩; the unbalanced tensor is
            // E[e^{i(p−q)θ}]·|x…x⟩ with |x…x⟩ of unit norm.
            DistKind::DiscretePhase { levels, .. } => (1..=t)
                .map(|k| {
                    let s: C64 = (0..*levels)
                        .map(|j| C64::from_polar(1.0, 2.0 * PI * (j * k) as f64 / *levels as f64))
                        .sum();
                    s.norm() / *levels as f64
                })
                .fold(0.0, f64::max),
            DistKind::Fixed(phi) => {
                let mut worst = 0.0f64;
                for p in 0..=t {
                    for q in 0..=t {
                        if p == q {
                            continue;
                        }
                        let conj = PureState::new(phi.amps().map(|x| x.conj())).expect("unit");
                        let tensor = phi.tensor_power(p).tensor(&conj.tensor_power(q));
                        worst = worst.max(tensor.amps().camax());
                    }
                }
                worst
            }
        }
    }
}

/// True iff all moments with unequal ket/bra counts up to order `t` vanish
/// under phase twirling (to within `tol`).
pub fn is_balanced(dist: &StateDistribution, t: usize, tol: f64) -> bool {
    dist.unbalanced_moment(t) <= tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescriptorKind {
    Haar,
    Phase,
    Fixed,
}

/// Text record `kind=<haar|phase|fixed> n=<n> M=<levels> base=<x> seed=<s>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionDescriptor {
    pub kind: DescriptorKind,
    pub n: usize,
    pub levels: usize,
    pub base: usize,
    pub seed: u64,
}

impl DistributionDescriptor {
    pub fn build(&self) -> Result<StateDistribution> {
        match self.kind {
            DescriptorKind::Haar => Ok(StateDistribution::haar(self.n)),
            DescriptorKind::Phase => StateDistribution::discrete_phase(self.n, self.base, self.levels),
            DescriptorKind::Fixed => StateDistribution::fixed_basis(self.n, self.base),
        }
    }
}

impl fmt::Display for DistributionDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DescriptorKind::Haar => "haar",
            DescriptorKind::Phase => "phase",
            DescriptorKind::Fixed => "fixed",
        };
        write!(f, "kind={kind} n={} M={} base={} seed={}", self.n, self.levels, self.base, self.seed)
    }
}

impl FromStr for DistributionDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut d = DistributionDescriptor { kind: DescriptorKind::Haar, n: 1, levels: 1, base: 1, seed: 0 };
        let mut saw_kind = false;
        for tok in s.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("malformed field `{tok}`")))?;
            let num = |v: &str| v.parse::<u64>().map_err(|_| Error::InvalidArgument(format!("bad number `{v}`")));
            match k {
                "kind" => {
                    saw_kind = true;
                    d.kind = match v {
                        "haar" => DescriptorKind::Haar,
                        "phase" => DescriptorKind::Phase,
                        "fixed" => DescriptorKind::Fixed,
                        _ => return Err(Error::InvalidArgument(format!("unknown kind `{v}`"))),
                    }
                }
                "n" => d.n = num(v)? as usize,
                "M" => d.levels = num(v)? as usize,
                "base" => d.base = num(v)? as usize,
                "seed" => d.seed = num(v)?,
                _ => return Err(Error::InvalidArgument(format!("unknown field `{k}`"))),
            }
        }
        if !saw_kind {
            return Err(Error::InvalidArgument("missing kind".into()));
        }
        Ok(d)
    }
}

/// A unit vector in ℂ^{N+1}; index 0 is the flag |0⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedState(PureState);

impl EmbeddedState {
    pub fn state(&self) -> &PureState {
        &self.0
    }

    pub fn into_state(self) -> PureState {
        self.0
    }

    /// N + 1.
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn flag(&self) -> PureState {
        flag(self.dim() - 1)
    }

    /// |φ−⟩ = (|0⟩ − |φ⟩)/√2.
    pub fn minus(&self) -> PureState {
        let s = 0.5f64.sqrt();
        let v = (self.flag().amps() - self.0.amps()) * c(s);
        PureState::normalized(v).expect("flag ⟂ φ")
    }

    /// I − |0⟩⟨0| − |φ⟩⟨φ| + |0⟩⟨φ| + |φ⟩⟨0|.
    pub fn swap_matrix(&self) -> CMat {
        let d = self.dim();
        let f = self.flag();
        let (fa, pa) = (f.amps(), self.0.amps());
        CMat::identity(d, d) - fa * fa.adjoint() - pa * pa.adjoint() + fa * pa.adjoint() + pa * fa.adjoint()
    }
}

/// The flag vector of ℂ^{N+1}.
pub fn flag(n_dim: usize) -> PureState {
    PureState::basis(n_dim + 1, 0)
}

/// Places φ ∈ ℂᴺ into coordinates 1..=N of ℂ^{N+1}.
pub fn embed(phi: &PureState) -> EmbeddedState {
    let mut v = CVec::zeros(phi.dim() + 1);
    v.rows_mut(1, phi.dim()).copy_from(phi.amps());
    EmbeddedState(PureState::new(v).expect("embedding preserves the norm"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleKind {
    Chrs,
    ChrsMinus,
    Swap,
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleKind::Chrs => "CHRS",
            OracleKind::ChrsMinus => "CHRS-",
            OracleKind::Swap => "Swap",
        })
    }
}

/// A stateful oracle hiding an embedded state fixed at initialization.
#[derive(Debug, Clone)]
pub struct OracleModel {
    kind: OracleKind,
    phi: EmbeddedState,
    minus: PureState,
    queries: usize,
}

impl OracleModel {
    pub fn sample(kind: OracleKind, dist: &StateDistribution, rng: &mut Rng) -> Self {
        Self::with_state(kind, &dist.sample(rng))
    }

    pub fn with_state(kind: OracleKind, phi: &PureState) -> Self {
        Self::with_embedded(kind, embed(phi))
    }

    pub fn with_embedded(kind: OracleKind, phi: EmbeddedState) -> Self {
        let minus = phi.minus();
        Self { kind, phi, minus, queries: 0 }
    }

    /// A second view of the same hidden state under another interface.
    pub fn sibling(&self, kind: OracleKind) -> Self {
        Self::with_embedded(kind, self.phi.clone())
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn queries(&self) -> usize {
        self.queries
    }

    /// N + 1.
    pub fn register_dim(&self) -> usize {
        self.phi.dim()
    }

    /// Referee access to the hidden state; never used by algorithms under test.
    pub fn hidden(&self) -> &EmbeddedState {
        &self.phi
    }

    fn expect(&self, kind: OracleKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::WrongOracle { expected: kind.to_string(), got: self.kind.to_string() });
        }
        Ok(())
    }

    pub fn query_chrs(&mut self) -> Result<PureState> {
        self.expect(OracleKind::Chrs)?;
        self.queries += 1;
        Ok(self.phi.state().clone())
    }

    pub fn query_chrsm(&mut self) -> Result<PureState> {
        self.expect(OracleKind::ChrsMinus)?;
        self.queries += 1;
        Ok(self.minus.clone())
    }

    /// Answers a state query (CHRS or CHRS−) into a fresh register of `sv`.
    pub fn query_into(&mut self, sv: &mut StateVector) -> Result<usize> {
        let s = match self.kind {
            OracleKind::Chrs => self.query_chrs()?,
            OracleKind::ChrsMinus => self.query_chrsm()?,
            OracleKind::Swap => return Err(Error::WrongOracle { expected: "CHRS or CHRS-".into(), got: "Swap".into() }),
        };
        Ok(sv.append(&s))
    }

    pub fn apply_swap(&mut self, sv: &mut StateVector, reg: usize) -> Result<()> {
        self.expect(OracleKind::Swap)?;
        self.check_reg(sv, reg)?;
        self.queries += 1;
        sv.apply(&[reg], &self.phi.swap_matrix())
    }

    /// Swap on `reg` on the branch where `control` holds digit `value`.
    pub fn apply_controlled_swap(&mut self, sv: &mut StateVector, control: usize, value: usize, reg: usize) -> Result<()> {
        self.expect(OracleKind::Swap)?;
        self.check_reg(sv, reg)?;
        self.queries += 1;
        sv.apply_controlled(control, value, &[reg], &self.phi.swap_matrix())
    }

    /// Swap conjugation `S ρ S†` on one register of a density operator.
    pub fn apply_swap_density(&mut self, rho: &CMat, layout: &crate::RegisterLayout, reg: usize) -> Result<CMat> {
        self.expect(OracleKind::Swap)?;
        if layout.dims().get(reg) != Some(&self.register_dim()) {
            return Err(Error::DimensionMismatch { expected: self.register_dim(), got: layout.dims().get(reg).copied().unwrap_or(0) });
        }
        self.queries += 1;
        let u = embed_operator(&self.phi.swap_matrix(), layout, reg)?;
        Ok(&u * rho * u.adjoint())
    }

    fn check_reg(&self, sv: &StateVector, reg: usize) -> Result<()> {
        match sv.layout().dims().get(reg) {
            Some(&d) if d == self.register_dim() => Ok(()),
            Some(&d) => Err(Error::DimensionMismatch { expected: self.register_dim(), got: d }),
            None => Err(Error::BadRegister { index: reg, len: sv.num_registers() }),
        }
    }
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` on register `reg`.
pub fn embed_operator(op: &CMat, layout: &crate::RegisterLayout, reg: usize) -> Result<CMat> {
    layout.check_subset(&[reg])?;
    let mut out = CMat::identity(1, 1);
    for (i, &d) in layout.dims().iter().enumerate() {
        let f = if i == reg { op.clone() } else { CMat::identity(d, d) };
        out = out.kronecker(&f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{rng_for, sample_haar_dim};
    use proptest::prelude::*;

    #[test]
    fn balancedness() {
        assert!(is_balanced(&StateDistribution::haar(1), 3, 1e-12));
        assert!(!is_balanced(&StateDistribution::fixed_basis(1, 1).unwrap(), 1, 1e-12));
        assert!(is_balanced(&StateDistribution::discrete_phase(2, 1, 5).unwrap(), 4, 1e-12));
        assert!(!is_balanced(&StateDistribution::discrete_phase(2, 1, 5).unwrap(), 5, 1e-12));
        for m in 2..8 {
            let d = StateDistribution::discrete_phase(1, 2, m).unwrap();
            for t in 1..m {
                assert!(is_balanced(&d, t, 1e-12));
            }
        }
    }

    #[test]
    fn discrete_phase_samples() {
        let d = StateDistribution::discrete_phase(2, 3, 4).unwrap();
        let mut rng = rng_for(1, 0);
        for _ in 0..20 {
            let s = d.sample(&mut rng);
            assert!((s.amps()[2].norm() - 1.0).abs() < 1e-15);
            let ph = s.amps()[2].arg() / (2.0 * PI / 4.0);
            assert!((ph - ph.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn embedding() {
        let e = embed(&PureState::basis(2, 1));
        assert_eq!(e.state().amps().as_slice(), &[c(0.0), c(0.0), c(1.0)]);
        let mut rng = rng_for(2, 0);
        let phi = sample_haar_dim(4, &mut rng);
        let e = embed(&phi);
        assert_eq!(e.state().amps()[0], c(0.0));
        assert!((e.state().amps().norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn chrs_queries() {
        let phi = PureState::basis(2, 1);
        let mut o = OracleModel::with_state(OracleKind::Chrs, &phi);
        let mut sv = StateVector::empty();
        o.query_into(&mut sv).unwrap();
        o.query_into(&mut sv).unwrap();
        assert_eq!(o.queries(), 2);
        let e = embed(&phi);
        assert!((sv.amps() - e.state().tensor(e.state()).amps()).camax() < 1e-15);
        assert!(o.query_chrsm().is_err());
    }

    #[test]
    fn chrsm_queries() {
        let mut o = OracleModel::with_state(OracleKind::ChrsMinus, &PureState::basis(2, 1));
        let out = o.query_chrsm().unwrap();
        let s = 0.5f64.sqrt();
        assert!((out.amps() - CVec::from_column_slice(&[c(s), c(0.0), c(-s)])).camax() < 1e-15);
        assert!((out.inner(&flag(2)).norm_sqr() - 0.5).abs() < 1e-15);
        assert!((out.fidelity(&o.query_chrsm().unwrap()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn swap_oracle() {
        let mut rng = rng_for(3, 0);
        let phi = sample_haar_dim(4, &mut rng);
        let mut o = OracleModel::with_state(OracleKind::Swap, &phi);
        let mut sv = StateVector::from_registers(&[flag(4)]);
        o.apply_swap(&mut sv, 0).unwrap();
        assert!((sv.amps() - o.hidden().state().amps()).camax() < 1e-14);
        o.apply_swap(&mut sv, 0).unwrap();
        assert!((sv.amps() - flag(4).amps()).camax() < 1e-14);
        assert_eq!(o.queries(), 2);
        let bad = StateVector::from_registers(&[flag(2)]);
        assert!(o.apply_swap(&mut bad.clone(), 0).is_err());
    }

    #[test]
    fn descriptor_roundtrip() {
        let d: DistributionDescriptor = "kind=phase n=2 M=5 base=3 seed=9".parse().unwrap();
        assert_eq!(d.to_string(), "kind=phase n=2 M=5 base=3 seed=9");
        assert!(d.build().is_ok());
        assert!("kind=phase n=2 bogus=1".parse::<DistributionDescriptor>().is_err());
        assert!("n=2".parse::<DistributionDescriptor>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_swap_is_reflection(seed in any::<u64>(), n in 0usize..4) {
            let mut rng = rng_for(seed, 0);
            let e = embed(&sample_haar_dim(1 << n, &mut rng));
            let s = e.swap_matrix();
            let d = e.dim();
            let m = e.minus();
            let refl = CMat::identity(d, d) - m.projector() * c(2.0);
            prop_assert!((&s - &refl).camax() < 1e-12);
            prop_assert!((&s * s.adjoint() - CMat::identity(d, d)).camax() < 1e-12);
            prop_assert!((&s - s.adjoint()).camax() < 1e-15);
            // identity on the complement of span{flag, φ}
            let w = sample_haar_dim(d, &mut rng).into_amps();
            let f = e.flag();
            let w = &w - f.amps() * f.amps().dotc(&w) - e.state().amps() * e.state().amps().dotc(&w);
            prop_assert!((&s * &w - &w).camax() < 1e-12);
        }

        #[test]
        fn prop_hidden_state_is_stable(seed in any::<u64>()) {
            let mut rng = rng_for(seed, 1);
            let mut o = OracleModel::sample(OracleKind::Chrs, &StateDistribution::haar(2), &mut rng);
            let first = o.query_chrs().unwrap();
            for _ in 0..5 {
                prop_assert_eq!(o.query_chrs().unwrap(), first.clone());
            }
        }

        #[test]
        fn prop_state_oracles_are_isometries(seed in any::<u64>()) {
            // Query maps |x⟩ ↦ |x⟩ ⊗ |answer⟩ preserve inner products.
            let mut rng = rng_for(seed, 2);
            let a = sample_haar_dim(3, &mut rng);
            let b = sample_haar_dim(3, &mut rng);
            for kind in [OracleKind::Chrs, OracleKind::ChrsMinus] {
                let mut o = OracleModel::sample(kind, &StateDistribution::haar(1), &mut rng);
                let mut sa = StateVector::from_registers(std::slice::from_ref(&a));
                let mut sb = StateVector::from_registers(std::slice::from_ref(&b));
                o.query_into(&mut sa).unwrap();
                o.query_into(&mut sb).unwrap();
                prop_assert!((sa.amps().dotc(sb.amps()) - a.inner(&b)).norm() < 1e-12);
            }
        }
    }
}
