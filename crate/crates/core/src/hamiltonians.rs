//! Bond decompositions `H = Σ_i H_{i,i+1}` of the transverse-field Ising and
//! XXZ chains, with Pauli spin operators.
//!
//! Single-site field terms are folded into the bonds: a boundary site puts its
//! whole field on its only bond, an interior site splits it evenly between its
//! two bonds.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor_core::{identity, kron, pauli_x, pauli_y, pauli_z, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// `-J Σ σᶻσᶻ - h Σ σˣ`
    Ising,
    /// `-J Σ (σˣσˣ + σʸσʸ + Δ σᶻσᶻ) - h Σ σˣ`
    Xxz,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Ising => "ising",
            Model::Xxz => "xxz",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ising" => Ok(Model::Ising),
            "xxz" => Ok(Model::Xxz),
            other => Err(Error::invalid(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub model: Model,
    pub n_sites: usize,
    pub j: f64,
    pub h: f64,
    /// Uniaxial anisotropy Δ; unused by the Ising model.
    pub delta_aniso: f64,
}

impl ModelSpec {
    pub fn ising(n_sites: usize, j: f64, h: f64) -> Self {
        ModelSpec { model: Model::Ising, n_sites, j, h, delta_aniso: 0.0 }
    }

    pub fn xxz(n_sites: usize, j: f64, delta_aniso: f64, h: f64) -> Self {
        ModelSpec { model: Model::Xxz, n_sites, j, h, delta_aniso }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::invalid(format!("need at least 2 sites, got {}", self.n_sites)));
        }
        if !(self.j.is_finite() && self.h.is_finite() && self.delta_aniso.is_finite()) {
            return Err(Error::invalid("model parameters must be finite"));
        }
        Ok(())
    }

    /// Two-body part of every bond term, without fields.
    pub fn coupling_term(&self) -> ComplexMatrix {
        let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
        match self.model {
            Model::Ising => kron(&z, &z).scale(-self.j),
            Model::Xxz => (kron(&x, &x) + kron(&y, &y) + kron(&z, &z).scale(self.delta_aniso)).scale(-self.j),
        }
    }

    /// Field on a single site.
    pub fn field_term(&self) -> ComplexMatrix {
        pauli_x().scale(-self.h)
    }

    /// Share of site `site`'s field carried by one adjacent bond.
    fn field_share(&self, site: usize) -> f64 {
        if site == 0 || site == self.n_sites - 1 {
            1.0
        } else {
            0.5
        }
    }
}

/// One 4×4 Hermitian term per bond `(i, i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BondTermList {
    pub terms: Vec<ComplexMatrix>,
}

impl BondTermList {
    pub fn n_sites(&self) -> usize {
        self.terms.len() + 1
    }
}

pub fn build_bond_terms(spec: &ModelSpec) -> Result<BondTermList> {
    spec.validate()?;
    let coupling = spec.coupling_term();
    let field = spec.field_term();
    let id = identity(2);
    let terms = (0..spec.n_sites - 1)
        .map(|i| {
            let left = kron(&field, &id).scale(spec.field_share(i));
            let right = kron(&id, &field).scale(spec.field_share(i + 1));
            &coupling + left + right
        })
        .collect();
    Ok(BondTermList { terms })
}
