//! Dense state-vector reference for short chains.
//!
//! Basis index bit `n - 1 - k` holds the spin of site `k`, so site 0 is the
//! most significant bit, matching the `2·s_left + s_right` gate convention.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hamiltonians::{build_bond_terms, ModelSpec};
use crate::mps::LocalOperator;
use crate::series::TimeSeries;
use crate::tebd::TrotterSchedule;
use crate::tensor_core::{c, hermitian_eigen, ComplexMatrix, C64};

pub const MAX_EXACT_SITES: usize = 14;

fn check_size(n_sites: usize) -> Result<()> {
    if n_sites > MAX_EXACT_SITES {
        return Err(Error::Resource(format!("dense evolution is limited to {MAX_EXACT_SITES} sites, got {n_sites}")));
    }
    if n_sites < 2 {
        return Err(Error::invalid(format!("need at least 2 sites, got {n_sites}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n_sites: usize,
    amplitudes: Vec<C64>,
}

impl DenseState {
    pub fn product_state(local_state: &[usize]) -> Result<Self> {
        let n = local_state.len();
        check_size(n)?;
        let mut index = 0usize;
        for (site, &s) in local_state.iter().enumerate() {
            if s > 1 {
                return Err(Error::invalid(format!("site {site}: physical index {s} is not 0 or 1")));
            }
            index = (index << 1) | s;
        }
        let mut amplitudes = vec![c(0.0, 0.0); 1 << n];
        amplitudes[index] = c(1.0, 0.0);
        Ok(DenseState { n_sites: n, amplitudes })
    }

    pub fn all_up(n_sites: usize) -> Result<Self> {
        Self::product_state(&vec![0; n_sites])
    }

    pub fn from_amplitudes(n_sites: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_size(n_sites)?;
        if amplitudes.len() != 1 << n_sites {
            return Err(Error::invalid(format!("expected {} amplitudes, got {}", 1usize << n_sites, amplitudes.len())));
        }
        Ok(DenseState { n_sites, amplitudes })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.amplitudes.iter().map(|a| a.norm_sqr()).sum())
    }

    fn shift(&self, site: usize) -> usize {
        self.n_sites - 1 - site
    }

    /// Normalized `⟨O_site⟩`.
    pub fn site_expectation(&self, op: &LocalOperator, site: usize) -> Result<f64> {
        if site >= self.n_sites {
            return Err(Error::invalid(format!("site {site} out of range for {} sites", self.n_sites)));
        }
        let bit = 1usize << self.shift(site);
        let m = &op.matrix;
        let mut acc = c(0.0, 0.0);
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            if idx & bit != 0 {
                continue;
            }
            let (a0, a1) = (*amp, self.amplitudes[idx | bit]);
            let o0 = m[(0, 0)] * a0 + m[(0, 1)] * a1;
            let o1 = m[(1, 0)] * a0 + m[(1, 1)] * a1;
            acc += a0.conj() * o0 + a1.conj() * o1;
        }
        let norm_sqr: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        Ok(acc.re / norm_sqr)
    }

    pub fn averaged_expectation(&self, op: &LocalOperator) -> Result<f64> {
        let mut total = 0.0;
        for k in 0..self.n_sites {
            total += self.site_expectation(op, k)?;
        }
        Ok(total / self.n_sites as f64)
    }

    /// `⟨Ψ|M|Ψ⟩` for a full-space matrix.
    pub fn matrix_expectation(&self, m: &ComplexMatrix) -> Result<C64> {
        let dim = self.amplitudes.len();
        if m.shape() != (dim, dim) {
            return Err(Error::invalid("operator dimension does not match the state"));
        }
        let psi = DVector::from_column_slice(&self.amplitudes);
        Ok(psi.dotc(&(m * &psi)))
    }

    /// Applies a 4×4 gate to sites `(left_site, left_site + 1)`.
    pub fn apply_two_site_gate(&mut self, gate: &ComplexMatrix, left_site: usize) -> Result<()> {
        if left_site + 1 >= self.n_sites {
            return Err(Error::invalid(format!("bond {left_site} out of range for {} sites", self.n_sites)));
        }
        if gate.shape() != (4, 4) {
            return Err(Error::invalid("two-site gate must be 4x4"));
        }
        let shift = self.shift(left_site + 1);
        let mask = 3usize << shift;
        for idx in 0..self.amplitudes.len() {
            if idx & mask != 0 {
                continue;
            }
            let old = [0, 1, 2, 3].map(|b| self.amplitudes[idx | (b << shift)]);
            for a in 0..4 {
                self.amplitudes[idx | (a << shift)] = (0..4).map(|b| gate[(a, b)] * old[b]).sum();
            }
        }
        Ok(())
    }

    /// Applies exactly the gate sequence TEBD uses for one step.
    pub fn apply_trotter_step(&mut self, sched: &TrotterSchedule) -> Result<()> {
        if sched.n_sites != self.n_sites {
            return Err(Error::invalid("schedule does not match the state size"));
        }
        for (left, gate) in sched.step_sequence() {
            self.apply_two_site_gate(gate, *left)?;
        }
        Ok(())
    }
}

/// Full `2^n × 2^n` Hamiltonian assembled from the embedded bond terms.
pub fn dense_hamiltonian(spec: &ModelSpec) -> Result<ComplexMatrix> {
    check_size(spec.n_sites)?;
    let terms = build_bond_terms(spec)?;
    let n = spec.n_sites;
    let dim = 1usize << n;
    let mut h = ComplexMatrix::zeros(dim, dim);
    for (bond, term) in terms.terms.iter().enumerate() {
        let shift = n - 2 - bond;
        let mask = 3usize << shift;
        for col in 0..dim {
            let b = (col >> shift) & 3;
            let rest = col & !mask;
            for a in 0..4 {
                let t = term[(a, b)];
                if t.re != 0.0 || t.im != 0.0 {
                    h[(rest | (a << shift), col)] += t;
                }
            }
        }
    }
    Ok(h)
}

enum Eigenbasis {
    Real(DMatrix<f64>),
    Complex(ComplexMatrix),
}

/// Eigen-decomposition of `H`, reused to evaluate `exp(-i t H)` at any time.
pub struct ExactPropagator {
    n_sites: usize,
    eigenvalues: DVector<f64>,
    basis: Eigenbasis,
}

impl ExactPropagator {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let h = dense_hamiltonian(spec)?;
        let dim = h.nrows();
        // Both supported models have real matrix elements; the real solver is
        // several times cheaper.
        let (eigenvalues, basis) = if h.iter().all(|z| z.im == 0.0) {
            let real = h.map(|z| z.re);
            let eig = SymmetricEigen::try_new(real, f64::EPSILON, 1000 + 100 * dim)
                .ok_or_else(|| Error::Numeric(format!("eigensolver did not converge for dimension {dim}")))?;
            (eig.eigenvalues, Eigenbasis::Real(eig.eigenvectors))
        } else {
            let (vals, vecs) = hermitian_eigen(&h)?;
            (vals, Eigenbasis::Complex(vecs))
        };
        Ok(ExactPropagator { n_sites: spec.n_sites, eigenvalues, basis })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    fn to_eigenbasis(&self, psi: &[C64]) -> DVector<C64> {
        let v = DVector::from_column_slice(psi);
        match &self.basis {
            Eigenbasis::Complex(u) => u.ad_mul(&v),
            Eigenbasis::Real(u) => {
                let re = u.tr_mul(&v.map(|z| z.re));
                let im = u.tr_mul(&v.map(|z| z.im));
                DVector::from_fn(re.len(), |i, _| c(re[i], im[i]))
            }
        }
    }

    fn to_site_basis(&self, coeffs: &DVector<C64>) -> Vec<C64> {
        match &self.basis {
            Eigenbasis::Complex(u) => (u * coeffs).iter().copied().collect(),
            Eigenbasis::Real(u) => {
                let re = u * coeffs.map(|z| z.re);
                let im = u * coeffs.map(|z| z.im);
                re.iter().zip(im.iter()).map(|(&r, &i)| c(r, i)).collect()
            }
        }
    }

    /// `exp(-i t H) |initial⟩`.
    pub fn evolve(&self, initial: &DenseState, t: f64) -> Result<DenseState> {
        if initial.n_sites != self.n_sites {
            return Err(Error::invalid("state does not match the propagator size"));
        }
        let mut coeffs = self.to_eigenbasis(&initial.amplitudes);
        for (z, &lambda) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            let phase = -t * lambda;
            *z *= c(libm::cos(phase), libm::sin(phase));
        }
        Ok(DenseState { n_sites: self.n_sites, amplitudes: self.to_site_basis(&coeffs) })
    }

    /// Calls `on_sample(k, state)` at `t = k·delta` for `k = 0..=n_steps`.
    pub fn for_each_sample<F>(&self, initial: &DenseState, delta: f64, n_steps: usize, mut on_sample: F) -> Result<()>
    where
        F: FnMut(usize, &DenseState) -> Result<()>,
    {
        if initial.n_sites != self.n_sites {
            return Err(Error::invalid("state does not match the propagator size"));
        }
        let coeffs0 = self.to_eigenbasis(&initial.amplitudes);
        for k in 0..=n_steps {
            let t = k as f64 * delta;
            let coeffs = DVector::from_fn(coeffs0.len(), |i, _| {
                let phase = -t * self.eigenvalues[i];
                coeffs0[i] * c(libm::cos(phase), libm::sin(phase))
            });
            on_sample(k, &DenseState { n_sites: self.n_sites, amplitudes: self.to_site_basis(&coeffs) })?;
        }
        Ok(())
    }
}

/// Site-averaged `observable` under exact evolution, sampled every `delta`.
pub fn exact_evolve_record(
    spec: &ModelSpec,
    initial: &DenseState,
    delta: f64,
    n_steps: usize,
    observable: &LocalOperator,
) -> Result<TimeSeries> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!("time step must be positive, got {delta}")));
    }
    let prop = ExactPropagator::new(spec)?;
    let mut values = Vec::with_capacity(n_steps + 1);
    prop.for_each_sample(initial, delta, n_steps, |_, psi| {
        values.push(psi.averaged_expectation(observable)?);
        Ok(())
    })?;
    Ok(TimeSeries::uniform(0.0, delta, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_core::{hermitian_deviation, identity, kron, max_abs_diff, pauli_x, real_matrix};

    #[test]
    fn two_site_ising_matrices() {
        let h = dense_hamiltonian(&ModelSpec::ising(2, 1.0, 0.0)).unwrap();
        let want = real_matrix(4, 4, &[-1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., -1.]);
        assert_eq!(max_abs_diff(&h, &want), 0.0);

        let h = dense_hamiltonian(&ModelSpec::ising(2, 0.0, 1.0)).unwrap();
        let want = (kron(&pauli_x(), &identity(2)) + kron(&identity(2), &pauli_x())).scale(-1.0);
        assert_eq!(max_abs_diff(&h, &want), 0.0);
        let mut evals: Vec<f64> = hermitian_eigen(&h).unwrap().0.iter().copied().collect();
        evals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in evals.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn size_limits() {
        assert!(matches!(dense_hamiltonian(&ModelSpec::ising(15, 1.0, 1.0)), Err(Error::Resource(_))));
        assert!(DenseState::all_up(1).is_err());
    }

    #[test]
    fn free_spin_precession() {
        // -h σˣ on each spin rotates ⟨σᶻ⟩ as cos(2 h t)
        let spec = ModelSpec::ising(2, 0.0, 1.0);
        let s = exact_evolve_record(&spec, &DenseState::all_up(2).unwrap(), 0.1, 40, &LocalOperator::sz()).unwrap();
        for (t, v) in s.times.iter().zip(&s.values) {
            assert!((v - libm::cos(2.0 * t)).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn ising_without_field_is_static() {
        let spec = ModelSpec::ising(6, 1.0, 0.0);
        let s = exact_evolve_record(&spec, &DenseState::all_up(6).unwrap(), 0.05, 20, &LocalOperator::sz()).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn norm_and_energy_conserved() {
        let spec = ModelSpec::xxz(6, 1.0, 0.5, 0.5);
        let h = dense_hamiltonian(&spec).unwrap();
        assert!(hermitian_deviation(&h) == 0.0);
        let prop = ExactPropagator::new(&spec).unwrap();
        let psi0 = DenseState::all_up(6).unwrap();
        let e0 = psi0.matrix_expectation(&h).unwrap().re;
        prop.for_each_sample(&psi0, 0.1, 50, |_, psi| {
            assert!((psi.norm() - 1.0).abs() <= 1e-10);
            assert!((psi.matrix_expectation(&h).unwrap().re - e0).abs() <= 1e-9);
            Ok(())
        })
        .unwrap();
    }
}
