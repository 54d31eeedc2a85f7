//! Second-order Suzuki-Trotter evolution of an [`MpsState`].
//!
//! One step is `U_odd(δ/2) · U_even(δ) · U_odd(δ/2)` where the odd layer holds
//! the bonds with even left index `0, 2, 4, …` and the even layer the bonds
//! `1, 3, 5, …`. Gates within a layer commute and are applied left to right.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hamiltonians::BondTermList;
use crate::mps::{LocalOperator, MpsState};
use crate::series::TimeSeries;
use crate::tensor_core::{gate_from_bond_term, ComplexMatrix};

/// Bond-dimension limits applied at every SVD split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub max_bond: usize,
    /// Relative squared weight below which singular values are dropped.
    pub cutoff: f64,
    /// Any split that would keep more than this many singular values is refused.
    pub hard_cap: usize,
}

impl Truncation {
    pub const DEFAULT_HARD_CAP: usize = 4096;

    pub fn with_max_bond(max_bond: usize) -> Self {
        Truncation { max_bond, ..Self::default() }
    }

    /// Never truncates; only the hard cap limits the bond.
    pub fn unbounded() -> Self {
        Truncation { max_bond: usize::MAX, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_bond == 0 {
            return Err(Error::invalid("max_bond must be at least 1"));
        }
        if !(self.cutoff >= 0.0 && self.cutoff.is_finite()) {
            return Err(Error::invalid(format!("cutoff must be finite and non-negative, got {}", self.cutoff)));
        }
        Ok(())
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { max_bond: 200, cutoff: 0.0, hard_cap: Self::DEFAULT_HARD_CAP }
    }
}

#[derive(Debug, Clone)]
pub struct TrotterSchedule {
    /// `(left_site, exp(-i δ/2 H))` for bonds 0, 2, 4, …
    pub half_odd_gates: Vec<(usize, ComplexMatrix)>,
    /// `(left_site, exp(-i δ H))` for bonds 1, 3, 5, …
    pub full_even_gates: Vec<(usize, ComplexMatrix)>,
    pub delta: f64,
    pub n_sites: usize,
}

impl TrotterSchedule {
    /// The gate sequence of one step, in application order.
    pub fn step_sequence(&self) -> impl Iterator<Item = &(usize, ComplexMatrix)> {
        self.half_odd_gates.iter().chain(&self.full_even_gates).chain(&self.half_odd_gates)
    }
}

/// Gates for one second-order step of length `delta`. A negative `delta`
/// runs the evolution backwards.
pub fn build_trotter_schedule(terms: &BondTermList, delta: f64) -> Result<TrotterSchedule> {
    if !(delta.is_finite() && delta != 0.0) {
        return Err(Error::invalid(format!("time step must be finite and nonzero, got {delta}")));
    }
    let mut half_odd_gates = Vec::new();
    let mut full_even_gates = Vec::new();
    for (bond, term) in terms.terms.iter().enumerate() {
        if bond % 2 == 0 {
            half_odd_gates.push((bond, gate_from_bond_term(term, delta, true)?));
        } else {
            full_even_gates.push((bond, gate_from_bond_term(term, delta, false)?));
        }
    }
    Ok(TrotterSchedule { half_odd_gates, full_even_gates, delta, n_sites: terms.n_sites() })
}

/// Applies one second-order step; returns the summed truncation weight.
pub fn step_second_order(state: &mut MpsState, sched: &TrotterSchedule, trunc: &Truncation) -> Result<f64> {
    if state.n_sites() != sched.n_sites {
        return Err(Error::invalid(format!("state has {} sites, schedule expects {}", state.n_sites(), sched.n_sites)));
    }
    let mut weight = 0.0;
    for (left, gate) in sched.step_sequence() {
        let t = state.tensors();
        let full_rank = (2 * t[*left].left_dim()).min(2 * t[*left + 1].right_dim());
        let kept = full_rank.min(trunc.max_bond);
        if kept > trunc.hard_cap {
            return Err(Error::BondOverflow { bond: *left, dim: kept, cap: trunc.hard_cap });
        }
        weight += state.apply_two_site_gate(gate, *left, trunc.max_bond, trunc.cutoff)?;
    }
    Ok(weight)
}

/// Bookkeeping gathered while evolving.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvolveStats {
    pub steps: usize,
    pub cumulative_truncation_weight: f64,
    pub max_step_truncation_weight: f64,
    pub max_bond_dim: usize,
}

/// Runs `n_steps` steps and hands the state to `on_step` after every one.
pub fn evolve_with<F>(state: &mut MpsState, sched: &TrotterSchedule, n_steps: usize, trunc: &Truncation, mut on_step: F) -> Result<EvolveStats>
where
    F: FnMut(usize, &MpsState) -> Result<()>,
{
    trunc.validate()?;
    let mut stats = EvolveStats { max_bond_dim: state.max_bond_dim(), ..EvolveStats::default() };
    for step in 1..=n_steps {
        let w = step_second_order(state, sched, trunc)?;
        stats.steps = step;
        stats.cumulative_truncation_weight += w;
        stats.max_step_truncation_weight = stats.max_step_truncation_weight.max(w);
        stats.max_bond_dim = stats.max_bond_dim.max(state.max_bond_dim());
        on_step(step, state)?;
    }
    Ok(stats)
}

/// Site-averaged `observable` at `t = 0` and after each of `n_steps` steps.
pub fn evolve_record(
    state: &mut MpsState,
    sched: &TrotterSchedule,
    n_steps: usize,
    observable: &LocalOperator,
    trunc: &Truncation,
) -> Result<(TimeSeries, EvolveStats)> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps must be at least 1"));
    }
    let mut values = Vec::with_capacity(n_steps + 1);
    values.push(state.averaged_expectation(observable)?);
    let stats = evolve_with(state, sched, n_steps, trunc, |_, s| {
        values.push(s.averaged_expectation(observable)?);
        Ok(())
    })?;
    Ok((TimeSeries::uniform(0.0, sched.delta, values), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_bond_terms, ModelSpec};
    use crate::tensor_core::unitarity_deviation;

    #[test]
    fn layer_partition() {
        let two = build_trotter_schedule(&build_bond_terms(&ModelSpec::ising(2, 1.0, 1.0)).unwrap(), 0.05).unwrap();
        assert_eq!(two.half_odd_gates.len(), 1);
        assert!(two.full_even_gates.is_empty());
        let five = build_trotter_schedule(&build_bond_terms(&ModelSpec::ising(5, 1.0, 1.0)).unwrap(), 0.05).unwrap();
        let half: Vec<usize> = five.half_odd_gates.iter().map(|g| g.0).collect();
        let full: Vec<usize> = five.full_even_gates.iter().map(|g| g.0).collect();
        assert_eq!(half, [0, 2]);
        assert_eq!(full, [1, 3]);
        for (_, g) in five.step_sequence() {
            assert!(unitarity_deviation(g) <= 1e-12);
        }
        assert!(build_trotter_schedule(&build_bond_terms(&ModelSpec::ising(5, 1.0, 1.0)).unwrap(), 0.0).is_err());
    }

    #[test]
    fn ising_without_field_keeps_polarization() {
        let terms = build_bond_terms(&ModelSpec::ising(6, 1.0, 0.0)).unwrap();
        let sched = build_trotter_schedule(&terms, 0.3).unwrap();
        let mut s = MpsState::all_up(6).unwrap();
        let (series, stats) = evolve_record(&mut s, &sched, 1, &LocalOperator::sz(), &Truncation::default()).unwrap();
        assert_eq!(series.len(), 2);
        assert!((series.values[0] - 1.0).abs() < 1e-15 && (series.values[1] - 1.0).abs() < 1e-12);
        assert_eq!(stats.cumulative_truncation_weight, 0.0);
    }

    #[test]
    fn xxz_without_field_fixes_polarized_state() {
        let terms = build_bond_terms(&ModelSpec::xxz(6, 1.0, 0.5, 0.0)).unwrap();
        let sched = build_trotter_schedule(&terms, 0.01).unwrap();
        let mut s = MpsState::all_up(6).unwrap();
        let (series, _) = evolve_record(&mut s, &sched, 50, &LocalOperator::sz(), &Truncation::default()).unwrap();
        assert!(series.values.iter().all(|v| (v - 1.0).abs() <= 1e-10));
    }

    #[test]
    fn hard_cap_names_the_bond() {
        let terms = build_bond_terms(&ModelSpec::ising(8, 1.0, 1.0)).unwrap();
        let sched = build_trotter_schedule(&terms, 0.1).unwrap();
        let mut s = MpsState::all_up(8).unwrap();
        let trunc = Truncation { max_bond: usize::MAX, cutoff: 0.0, hard_cap: 3 };
        let err = evolve_with(&mut s, &sched, 5, &trunc, |_, _| Ok(())).unwrap_err();
        assert!(matches!(err, Error::BondOverflow { cap: 3, .. }), "{err:?}");
    }

    #[test]
    fn mismatched_schedule_rejected() {
        let terms = build_bond_terms(&ModelSpec::ising(4, 1.0, 1.0)).unwrap();
        let sched = build_trotter_schedule(&terms, 0.1).unwrap();
        let mut s = MpsState::all_up(5).unwrap();
        assert!(step_second_order(&mut s, &sched, &Truncation::default()).is_err());
    }
}
