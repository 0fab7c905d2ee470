//! Sparse vectors and operators for states whose support is a small slice of
//! a large register space. Trace norms are computed exactly by splitting the
//! operator into the connected components of its nonzero pattern.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::BuildHasherDefault;

use super::{c, trace_norm, CMat, CVec, RegisterLayout, C64};
use crate::error::{Error, Result};

type DetMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    dim: usize,
    entries: BTreeMap<usize, C64>,
}

impl SparseVec {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: BTreeMap::new() }
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::new(dim);
        v.add(i, c(1.0));
        v
    }

    pub fn from_dense(v: &CVec) -> Self {
        let mut out = Self::new(v.len());
        for (i, &x) in v.iter().enumerate() {
            if x != C64::new(0.0, 0.0) {
                out.entries.insert(i, x);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn add(&mut self, i: usize, x: C64) {
        assert!(i < self.dim, "index {i} out of range {}", self.dim);
        *self.entries.entry(i).or_insert(C64::new(0.0, 0.0)) += x;
    }

    pub fn get(&self, i: usize) -> C64 {
        self.entries.get(&i).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.entries.iter().map(|(&i, &x)| (i, x))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn norm(&self) -> f64 {
        self.entries.values().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: C64) {
        for x in self.entries.values_mut() {
            *x *= s;
        }
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::NotNormalized(0.0));
        }
        self.scale(c(1.0 / n));
        Ok(())
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &SparseVec) -> C64 {
        let (small, large, conj_small) = if self.nnz() <= other.nnz() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut s = C64::new(0.0, 0.0);
        for (i, x) in small.iter() {
            let y = large.get(i);
            s += if conj_small { x.conj() * y } else { y.conj() * x };
        }
        s
    }

    pub fn axpy(&mut self, a: C64, other: &SparseVec) {
        assert_eq!(self.dim, other.dim);
        for (i, x) in other.iter() {
            self.add(i, a * x);
        }
    }

    pub fn tensor(&self, other: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new(self.dim * other.dim);
        for (i, x) in self.iter() {
            for (j, y) in other.iter() {
                out.entries.insert(i * other.dim + j, x * y);
            }
        }
        out
    }

    pub fn to_dense(&self) -> CVec {
        let mut v = CVec::zeros(self.dim);
        for (i, x) in self.iter() {
            v[i] = x;
        }
        v
    }

    /// Drops entries with |x| ≤ tol.
    pub fn prune(&mut self, tol: f64) {
        self.entries.retain(|_, x| x.norm() > tol);
    }
}

#[derive(Debug, Clone, Default)]
pub struct SparseOperator {
    dim: usize,
    entries: DetMap<(usize, usize), C64>,
}

impl SparseOperator {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: DetMap::default() }
    }

    pub fn from_dense(m: &CMat) -> Self {
        let mut out = Self::new(m.nrows());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let x = m[(i, j)];
                if x != C64::new(0.0, 0.0) {
                    out.entries.insert((i, j), x);
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries.get(&(i, j)).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn add(&mut self, i: usize, j: usize, x: C64) {
        assert!(i < self.dim && j < self.dim);
        *self.entries.entry((i, j)).or_insert(C64::new(0.0, 0.0)) += x;
    }

    /// Adds `w·|a⟩⟨b|`.
    pub fn add_outer_pair(&mut self, w: C64, a: &SparseVec, b: &SparseVec) {
        for (i, x) in a.iter() {
            for (j, y) in b.iter() {
                self.add(i, j, w * x * y.conj());
            }
        }
    }

    /// Adds `w·|v⟩⟨v|`.
    pub fn add_outer(&mut self, w: f64, v: &SparseVec) {
        self.add_outer_pair(c(w), v, v);
    }

    pub fn add_scaled(&mut self, w: C64, other: &SparseOperator) {
        assert_eq!(self.dim, other.dim);
        for ((i, j), x) in other.sorted_entries() {
            self.add(i, j, w * x);
        }
    }

    pub fn scale(&mut self, w: C64) {
        for x in self.entries.values_mut() {
            *x *= w;
        }
    }

    pub fn sub(&self, other: &SparseOperator) -> SparseOperator {
        let mut out = self.clone();
        out.add_scaled(c(-1.0), other);
        out
    }

    pub fn sorted_entries(&self) -> Vec<((usize, usize), C64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(&k, &x)| (k, x)).collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }

    pub fn trace(&self) -> C64 {
        self.sorted_entries()
            .into_iter()
            .filter(|((i, j), _)| i == j)
            .map(|(_, x)| x)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &SparseOperator) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.entries
            .iter()
            .map(|(&(i, j), &x)| (x - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (&(i, j), &x) in &self.entries {
            m[(i, j)] = x;
        }
        m
    }

    /// Diagonal block on the given (sorted) index set.
    pub fn block(&self, idx: &[usize]) -> CMat {
        let pos: DetMap<usize, usize> = idx.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let mut m = CMat::zeros(idx.len(), idx.len());
        for (&(i, j), &x) in &self.entries {
            if let (Some(&a), Some(&b)) = (pos.get(&i), pos.get(&j)) {
                m[(a, b)] = x;
            }
        }
        m
    }

    pub fn partial_transpose(&self, layout: &RegisterLayout, subset: &[usize]) -> Result<SparseOperator> {
        layout.check_dim(self.dim)?;
        layout.check_subset(subset)?;
        let strides = layout.strides();
        let dims = layout.dims();
        let mut out = SparseOperator::new(self.dim);
        for ((mut r, mut col), x) in self.sorted_entries() {
            for &s in subset {
                let (st, d) = (strides[s], dims[s]);
                let dr = (r / st) % d;
                let dc = (col / st) % d;
                r = r - dr * st + dc * st;
                col = col - dc * st + dr * st;
            }
            out.add(r, col, x);
        }
        Ok(out)
    }

    /// Index sets of the connected components of the nonzero pattern
    /// (treating the pattern as an undirected graph on basis indices).
    pub fn components(&self) -> Vec<Vec<usize>> {
        let entries = self.sorted_entries();
        let mut idx: Vec<usize> = entries.iter().flat_map(|((i, j), _)| [*i, *j]).collect();
        idx.sort_unstable();
        idx.dedup();
        let pos: DetMap<usize, usize> = idx.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let mut parent: Vec<usize> = (0..idx.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for ((i, j), _) in &entries {
            let (a, b) = (find(&mut parent, pos[i]), find(&mut parent, pos[j]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (p, &i) in idx.iter().enumerate() {
            let root = find(&mut parent, p);
            groups.entry(root).or_default().push(i);
        }
        groups.into_values().collect()
    }

    /// Exact trace norm: sum of the trace norms of the component blocks.
    pub fn trace_norm(&self) -> f64 {
        self.components().iter().map(|comp| trace_norm(&self.block(comp))).sum()
    }

    /// Largest component size, for cost checks.
    pub fn largest_component(&self) -> usize {
        self.components().iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn trace_distance(&self, other: &SparseOperator) -> f64 {
        0.5 * self.sub(other).trace_norm()
    }
}

/// A pure joint state over registers with sparse amplitudes; used for
/// circuits made of basis permutations on large register spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    layout: RegisterLayout,
    vec: SparseVec,
}

impl SparseState {
    pub fn product(factors: &[SparseVec]) -> Self {
        let mut vec = SparseVec::basis(1, 0);
        let mut dims = Vec::with_capacity(factors.len());
        for f in factors {
            vec = vec.tensor(f);
            dims.push(f.dim());
        }
        Self { layout: RegisterLayout::new(dims).expect("nonzero dims"), vec }
    }

    pub fn new(layout: RegisterLayout, vec: SparseVec) -> Result<Self> {
        layout.check_dim(vec.dim())?;
        Ok(Self { layout, vec })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn vec(&self) -> &SparseVec {
        &self.vec
    }

    pub fn into_vec(self) -> SparseVec {
        self.vec
    }

    /// Applies a basis permutation given on digit tuples of `regs`. The map
    /// must be injective on the support; this is checked.
    pub fn permute_basis(&mut self, regs: &[usize], f: impl Fn(&[usize]) -> Vec<usize>) -> Result<()> {
        self.layout.check_subset(regs)?;
        let strides = self.layout.strides();
        let dims = self.layout.dims().to_vec();
        let mut out = SparseVec::new(self.vec.dim());
        for (idx, x) in self.vec.iter() {
            let local: Vec<usize> = regs.iter().map(|&r| (idx / strides[r]) % dims[r]).collect();
            let img = f(&local);
            let mut j = idx;
            for ((&r, &a), &b) in regs.iter().zip(&local).zip(&img) {
                if b >= dims[r] {
                    return Err(Error::InvalidArgument(format!("digit {b} out of range for register {r}")));
                }
                j = j - a * strides[r] + b * strides[r];
            }
            if out.get(j) != C64::new(0.0, 0.0) {
                return Err(Error::InvalidArgument("basis map is not injective".into()));
            }
            out.add(j, x);
        }
        self.vec = out;
        Ok(())
    }

    /// Removes register `reg`, which must be in product with the rest in state
    /// `s` (overlap checked to 1e-10).
    pub fn remove_product(&mut self, reg: usize, s: &SparseVec) -> Result<()> {
        self.layout.check_subset(&[reg])?;
        let d = self.layout.dims()[reg];
        if s.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: s.dim() });
        }
        let stride = self.layout.strides()[reg];
        let rest_dim = self.vec.dim() / d;
        let mut out = SparseVec::new(rest_dim);
        for (idx, x) in self.vec.iter() {
            let digit = (idx / stride) % d;
            let rest = (idx / (stride * d)) * stride + idx % stride;
            out.add(rest, s.get(digit).conj() * x);
        }
        let kept = out.norm().powi(2);
        if (kept - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "register {reg} is not in the expected product state (overlap {kept})"
            )));
        }
        out.prune(0.0);
        let dims: Vec<usize> = self.layout.complement(&[reg]).iter().map(|&r| self.layout.dims()[r]).collect();
        self.layout = RegisterLayout::new(dims)?;
        out.scale(c(1.0 / kept.sqrt()));
        self.vec = out;
        Ok(())
    }
}
