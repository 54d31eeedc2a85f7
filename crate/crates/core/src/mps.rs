//! Open-boundary matrix product states over spin-1/2 sites.
//!
//! Each site tensor is stored as a pair of `left × right` matrices, one per
//! physical index, so the amplitude of a configuration `s` is the 1×1 product
//! `A[0][s0] · A[1][s1] ⋯ A[n-1][s_{n-1}]`.
//!
//! The state tracks an orthogonality center when one is known: every site left
//! of it is left-isometric and every site right of it is right-isometric. Gate
//! application moves the center onto the bond first, so truncation acts on a
//! properly conditioned two-site block.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::linalg::QR;

use crate::error::{Error, Result};
use crate::tensor_core::{
    c, hermitian_deviation, is_finite, pauli_x, pauli_y, pauli_z, svd_truncate, unitarity_deviation,
    ComplexMatrix, C64, HERMITIAN_TOL,
};

/// Largest chain for which [`MpsState::to_dense`] will build a state vector.
pub const MAX_DENSE_SITES: usize = 24;

const GATE_UNITARY_TOL: f64 = 1e-10;

/// One site tensor: `mats[s]` is the `left × right` matrix for physical index `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    pub mats: [ComplexMatrix; 2],
}

impl SiteTensor {
    pub fn left_dim(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn right_dim(&self) -> usize {
        self.mats[0].ncols()
    }

    /// `[A0; A1]`, shape `(2·left) × right`.
    fn stacked_rows(&self) -> ComplexMatrix {
        let (l, r) = (self.left_dim(), self.right_dim());
        let mut m = ComplexMatrix::zeros(2 * l, r);
        for s in 0..2 {
            m.view_mut((s * l, 0), (l, r)).copy_from(&self.mats[s]);
        }
        m
    }

    /// `[A0 | A1]`, shape `left × (2·right)`.
    fn stacked_cols(&self) -> ComplexMatrix {
        let (l, r) = (self.left_dim(), self.right_dim());
        let mut m = ComplexMatrix::zeros(l, 2 * r);
        for s in 0..2 {
            m.view_mut((0, s * r), (l, r)).copy_from(&self.mats[s]);
        }
        m
    }

    fn from_stacked_rows(m: &ComplexMatrix) -> Self {
        let l = m.nrows() / 2;
        let r = m.ncols();
        SiteTensor { mats: [m.view((0, 0), (l, r)).into_owned(), m.view((l, 0), (l, r)).into_owned()] }
    }

    fn from_stacked_cols(m: &ComplexMatrix) -> Self {
        let l = m.nrows();
        let r = m.ncols() / 2;
        SiteTensor { mats: [m.view((0, 0), (l, r)).into_owned(), m.view((0, r), (l, r)).into_owned()] }
    }
}

/// Single-site Hermitian observable.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    pub name: String,
    pub matrix: ComplexMatrix,
}

impl LocalOperator {
    pub fn new(name: impl Into<String>, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.shape() != (2, 2) {
            return Err(Error::invalid("local operator must be 2x2"));
        }
        if !is_finite(&matrix) || hermitian_deviation(&matrix) > HERMITIAN_TOL {
            return Err(Error::invalid("local operator must be finite and Hermitian"));
        }
        Ok(LocalOperator { name: name.into(), matrix })
    }

    pub fn sz() -> Self {
        LocalOperator { name: "sz".into(), matrix: pauli_z() }
    }

    pub fn sx() -> Self {
        LocalOperator { name: "sx".into(), matrix: pauli_x() }
    }

    pub fn sy() -> Self {
        LocalOperator { name: "sy".into(), matrix: pauli_y() }
    }

    /// Looks up one of the Pauli observables by label.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "sz" => Ok(Self::sz()),
            "sx" => Ok(Self::sx()),
            "sy" => Ok(Self::sy()),
            other => Err(Error::invalid(format!("unknown observable '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsState {
    tensors: Vec<SiteTensor>,
    center: Option<usize>,
}

impl MpsState {
    /// Product state with site `i` in basis state `local_state[i]` (0 = up, 1 = down).
    pub fn product_state(local_state: &[usize]) -> Result<Self> {
        let n = local_state.len();
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 sites, got {n}")));
        }
        let mut tensors = Vec::with_capacity(n);
        for (site, &s) in local_state.iter().enumerate() {
            if s > 1 {
                return Err(Error::invalid(format!("site {site}: physical index {s} is not 0 or 1")));
            }
            let mut mats = [ComplexMatrix::zeros(1, 1), ComplexMatrix::zeros(1, 1)];
            mats[s][(0, 0)] = c(1.0, 0.0);
            tensors.push(SiteTensor { mats });
        }
        Ok(MpsState { tensors, center: Some(0) })
    }

    /// The fully polarized `|↑↑…↑⟩` state.
    pub fn all_up(n_sites: usize) -> Result<Self> {
        Self::product_state(&vec![0; n_sites])
    }

    /// Builds a state from arbitrary site tensors, checking bond consistency.
    pub fn from_tensors(tensors: Vec<SiteTensor>) -> Result<Self> {
        let n = tensors.len();
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 sites, got {n}")));
        }
        for (i, t) in tensors.iter().enumerate() {
            if t.mats[0].shape() != t.mats[1].shape() {
                return Err(Error::invalid(format!("site {i}: physical slices differ in shape")));
            }
            if t.left_dim() == 0 || t.right_dim() == 0 {
                return Err(Error::invalid(format!("site {i}: zero bond dimension")));
            }
            if !is_finite(&t.mats[0]) || !is_finite(&t.mats[1]) {
                return Err(Error::invalid(format!("site {i}: non-finite entries")));
            }
        }
        if tensors[0].left_dim() != 1 || tensors[n - 1].right_dim() != 1 {
            return Err(Error::invalid("boundary bonds must have dimension 1"));
        }
        for i in 0..n - 1 {
            if tensors[i].right_dim() != tensors[i + 1].left_dim() {
                return Err(Error::invalid(format!("bond {i}: dimensions {} and {} disagree", tensors[i].right_dim(), tensors[i + 1].left_dim())));
            }
        }
        Ok(MpsState { tensors, center: None })
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensors(&self) -> &[SiteTensor] {
        &self.tensors
    }

    /// Dimensions of the `n - 1` internal bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.n_sites() - 1].iter().map(SiteTensor::right_dim).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Multiplies one site tensor by a scalar. Invalidates the canonical center.
    pub fn scale_site(&mut self, site: usize, factor: C64) -> Result<()> {
        self.check_site(site)?;
        for m in self.tensors[site].mats.iter_mut() {
            *m *= factor;
        }
        self.center = None;
        Ok(())
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites() {
            return Err(Error::invalid(format!("site {site} out of range for {} sites", self.n_sites())));
        }
        Ok(())
    }

    /// Amplitudes with site 0 as the most significant bit.
    pub fn to_dense(&self) -> Result<Vec<C64>> {
        let n = self.n_sites();
        if n > MAX_DENSE_SITES {
            return Err(Error::Resource(format!("{n} sites is too many for a dense vector")));
        }
        // rows: configurations of the sites seen so far, cols: open right bond
        let mut acc = ComplexMatrix::from_element(1, 1, c(1.0, 0.0));
        for t in &self.tensors {
            let mut next = ComplexMatrix::zeros(acc.nrows() * 2, t.right_dim());
            for row in 0..acc.nrows() {
                for s in 0..2 {
                    let prod = acc.row(row) * &t.mats[s];
                    next.row_mut(2 * row + s).copy_from(&prod);
                }
            }
            acc = next;
        }
        Ok(acc.column(0).iter().copied().collect())
    }

    /// Left environments `L[k] = Σ_s A[k-1][s]† L[k-1] A[k-1][s]`, `L[0] = 1`.
    fn left_environments(&self) -> Vec<ComplexMatrix> {
        let mut envs = Vec::with_capacity(self.n_sites() + 1);
        envs.push(ComplexMatrix::from_element(1, 1, c(1.0, 0.0)));
        for t in &self.tensors {
            let prev = envs.last().unwrap();
            let next = t.mats[0].ad_mul(&(prev * &t.mats[0])) + t.mats[1].ad_mul(&(prev * &t.mats[1]));
            envs.push(next);
        }
        envs
    }

    /// Right environments `R[k] = Σ_s A[k][s] R[k+1] A[k][s]†`, `R[n] = 1`.
    fn right_environments(&self) -> Vec<ComplexMatrix> {
        let n = self.n_sites();
        let mut envs = vec![ComplexMatrix::from_element(1, 1, c(1.0, 0.0)); n + 1];
        for k in (0..n).rev() {
            let t = &self.tensors[k];
            let r = &envs[k + 1];
            envs[k] = &t.mats[0] * r * t.mats[0].adjoint() + &t.mats[1] * r * t.mats[1].adjoint();
        }
        envs
    }

    /// `√⟨Ψ|Ψ⟩` by full contraction.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt_nonneg()
    }

    fn norm_sqr(&self) -> f64 {
        self.left_environments().last().unwrap()[(0, 0)].re
    }

    fn local_value(t: &SiteTensor, op: &ComplexMatrix, left: &ComplexMatrix, right: &ComplexMatrix) -> C64 {
        let kets = [left * &t.mats[0], left * &t.mats[1]];
        let mut mid = ComplexMatrix::zeros(t.right_dim(), t.right_dim());
        for s in 0..2 {
            for sp in 0..2 {
                let o = op[(s, sp)];
                if o.re != 0.0 || o.im != 0.0 {
                    // ⟨s|O|s'⟩ pairs the conjugated slice s with the ket slice s'
                    mid += t.mats[s].ad_mul(&kets[sp]) * o;
                }
            }
        }
        (mid * right).trace()
    }

    /// `⟨Ψ|O_site|Ψ⟩ / ⟨Ψ|Ψ⟩`.
    pub fn site_expectation(&self, op: &LocalOperator, site: usize) -> Result<f64> {
        self.check_site(site)?;
        Ok(self.expectations(op)?[site])
    }

    /// Normalized expectation of `op` on every site.
    pub fn expectations(&self, op: &LocalOperator) -> Result<Vec<f64>> {
        let left = self.left_environments();
        let right = self.right_environments();
        let norm_sqr = left[self.n_sites()][(0, 0)].re;
        if !(norm_sqr > 0.0) {
            return Err(Error::Numeric("state has zero norm".into()));
        }
        Ok((0..self.n_sites())
            .map(|k| {
                let raw = Self::local_value(&self.tensors[k], &op.matrix, &left[k], &right[k + 1]);
                debug_assert!(raw.im.abs() <= 1e-10 * norm_sqr.max(1.0));
                raw.re / norm_sqr
            })
            .collect())
    }

    /// Mean of [`Self::site_expectation`] over all sites.
    pub fn averaged_expectation(&self, op: &LocalOperator) -> Result<f64> {
        let values = self.expectations(op)?;
        Ok(values.iter().sum::<f64>() / values.len() as f64)
    }

    /// Moves the orthogonality center to `target`, canonicalizing first if the
    /// center is unknown.
    fn move_center(&mut self, target: usize) {
        let mut center = match self.center {
            Some(k) => k,
            None => {
                for k in (1..self.n_sites()).rev() {
                    self.shift_center_left(k);
                }
                0
            }
        };
        while center < target {
            self.shift_center_right(center);
            center += 1;
        }
        while center > target {
            self.shift_center_left(center);
            center -= 1;
        }
        self.center = Some(target);
    }

    /// QR of site `k`; the triangular factor is pushed into site `k + 1`.
    fn shift_center_right(&mut self, k: usize) {
        let qr = QR::new(self.tensors[k].stacked_rows());
        let q = qr.q();
        let r = qr.r();
        self.tensors[k] = SiteTensor::from_stacked_rows(&q);
        let next = &mut self.tensors[k + 1];
        next.mats = [&r * &next.mats[0], &r * &next.mats[1]];
    }

    /// LQ of site `k` (via QR of the adjoint); the factor is pushed into site `k - 1`.
    fn shift_center_left(&mut self, k: usize) {
        let qr = QR::new(self.tensors[k].stacked_cols().adjoint());
        let q = qr.q();
        let r = qr.r();
        self.tensors[k] = SiteTensor::from_stacked_cols(&q.adjoint());
        let l = r.adjoint();
        let prev = &mut self.tensors[k - 1];
        prev.mats = [&prev.mats[0] * &l, &prev.mats[1] * &l];
    }

    /// Applies a 4×4 unitary to sites `(left_site, left_site + 1)` and splits
    /// the result with a truncated SVD. Singular values end up in the right
    /// tensor, which becomes the new orthogonality center.
    ///
    /// The gate's basis index is `2·s_left + s_right`. Returns the truncation
    /// weight of the split.
    pub fn apply_two_site_gate(&mut self, gate: &ComplexMatrix, left_site: usize, max_bond: usize, cutoff: f64) -> Result<f64> {
        Ok(self.apply_two_site_gate_inner(gate, left_site, max_bond, cutoff)?.0)
    }

    /// Same as [`Self::apply_two_site_gate`] but also returns the new bond dimension.
    pub(crate) fn apply_two_site_gate_inner(
        &mut self,
        gate: &ComplexMatrix,
        left_site: usize,
        max_bond: usize,
        cutoff: f64,
    ) -> Result<(f64, usize)> {
        let n = self.n_sites();
        if left_site + 1 >= n {
            return Err(Error::invalid(format!("bond {left_site} out of range for {n} sites")));
        }
        if gate.shape() != (4, 4) {
            return Err(Error::invalid("two-site gate must be 4x4"));
        }
        let dev = unitarity_deviation(gate);
        if !(dev <= GATE_UNITARY_TOL) {
            return Err(Error::invalid(format!("gate is not unitary (deviation {dev:e})")));
        }
        self.move_center(left_site);

        let a = &self.tensors[left_site];
        let b = &self.tensors[left_site + 1];
        let (dl, dr) = (a.left_dim(), b.right_dim());
        let mut theta: [[ComplexMatrix; 2]; 2] = Default::default();
        for s1 in 0..2 {
            for s2 in 0..2 {
                theta[s1][s2] = &a.mats[s1] * &b.mats[s2];
            }
        }

        // rows (s1, left), cols (s2, right)
        let mut block = ComplexMatrix::zeros(2 * dl, 2 * dr);
        for t1 in 0..2 {
            for t2 in 0..2 {
                let mut acc = ComplexMatrix::zeros(dl, dr);
                for s1 in 0..2 {
                    for s2 in 0..2 {
                        let g = gate[(2 * t1 + t2, 2 * s1 + s2)];
                        if g.re != 0.0 || g.im != 0.0 {
                            acc += &theta[s1][s2] * g;
                        }
                    }
                }
                block.view_mut((t1 * dl, t2 * dr), (dl, dr)).copy_from(&acc);
            }
        }

        let svd = svd_truncate(&block, max_bond, cutoff)?;
        let k = svd.rank();
        let mut sv = svd.v_dag;
        for (row, &s) in svd.s.iter().enumerate() {
            sv.row_mut(row).scale_mut(s);
        }
        self.tensors[left_site] = SiteTensor::from_stacked_rows(&svd.u);
        self.tensors[left_site + 1] = SiteTensor::from_stacked_cols(&sv);
        self.center = Some(left_site + 1);
        Ok((svd.truncation_weight, k))
    }
}

trait SqrtNonneg {
    fn sqrt_nonneg(self) -> f64;
}

impl SqrtNonneg for f64 {
    fn sqrt_nonneg(self) -> f64 {
        libm::sqrt(self.max(0.0))
    }
}
