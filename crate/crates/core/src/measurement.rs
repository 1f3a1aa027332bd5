//! Projective measurement of the spin carried by one register.
//!
//! Only external degrees of freedom are measurable here. Charge is read out
//! at the level of the whole state ([`charge_readout`]); a single register's
//! charge is never projected on its own.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::charge::SpeciesRegistry;
use crate::error::{Error, Result};
use crate::fock::{RegisterLabel, SectorIndex};
use crate::scalar::Real;
use crate::state::{validate_superselection, StateVector};

/// Orthonormal spin basis per species at one register. Outcome `m` projects
/// each species onto its own `m`-th basis vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinObservable<T> {
    pub register: usize,
    bases: BTreeMap<String, Vec<Vec<Complex<T>>>>,
}

impl<T: Real> SpinObservable<T> {
    /// The computational (z) basis for every species of the registry.
    pub fn spin_z(registry: &SpeciesRegistry, register: usize) -> Self {
        let bases = registry
            .species()
            .iter()
            .map(|s| {
                let m = s.spin_multiplicity as usize;
                let basis = (0..m)
                    .map(|i| (0..m).map(|j| if i == j { Complex::one() } else { Complex::zero() }).collect())
                    .collect();
                (s.id.clone(), basis)
            })
            .collect();
        Self { register, bases }
    }

    /// `(|0> ± |1>)/√2` for two-level species; z basis otherwise.
    pub fn spin_x(registry: &SpeciesRegistry, register: usize) -> Self {
        let mut obs = Self::spin_z(registry, register);
        let h = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
        for s in registry.species().iter().filter(|s| s.spin_multiplicity == 2) {
            obs.bases.insert(s.id.clone(), vec![vec![h, h], vec![h, -h]]);
        }
        obs
    }

    /// Replaces the basis used for one species.
    pub fn with_basis(
        mut self,
        registry: &SpeciesRegistry,
        species: &str,
        basis: Vec<Vec<Complex<T>>>,
    ) -> Result<Self> {
        let m = registry.get(species)?.spin_multiplicity as usize;
        if basis.len() != m || basis.iter().any(|v| v.len() != m) {
            return Err(Error::Config(format!("`{species}` needs a {m}x{m} spin basis")));
        }
        let tol = T::lit(T::MATRIX_TOL);
        for (i, u) in basis.iter().enumerate() {
            for (j, v) in basis.iter().enumerate() {
                let g = u.iter().zip(v).fold(Complex::<T>::zero(), |acc, (a, b)| acc + a.conj() * b);
                let target = if i == j { T::one() } else { T::zero() };
                if (g - Complex::new(target, T::zero())).norm() > tol {
                    return Err(Error::Config(format!("spin basis for `{species}` is not orthonormal")));
                }
            }
        }
        self.bases.insert(species.to_string(), basis);
        Ok(self)
    }

    fn basis_for(&self, species: &str) -> Result<&[Vec<Complex<T>>]> {
        self.bases
            .get(species)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Config(format!("observable has no spin basis for `{species}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real + Serialize")]
pub struct MeasurementRecord<T> {
    pub outcome: usize,
    pub probability: T,
    pub post_state: StateVector<T>,
}

/// Unnormalized `P_m |s>` for outcome `m` at the observable's register.
fn project<T: Real>(s: &StateVector<T>, obs: &SpinObservable<T>, outcome: usize) -> Result<StateVector<T>> {
    let r = obs.register;
    let mut terms = Vec::new();
    for (b, a) in s.iter() {
        let label = b.label(r);
        let basis = obs.basis_for(&label.species)?;
        let Some(v) = basis.get(outcome) else { continue };
        let weight = *a * v[label.spin as usize].conj();
        for (spin, c) in v.iter().enumerate() {
            let relabeled = b.with_label(r, RegisterLabel { species: label.species.clone(), spin: spin as u32 });
            terms.push((relabeled, weight * c));
        }
    }
    StateVector::from_terms(s.registers(), terms)
}

/// Born-rule distribution and collapsed states for a spin measurement.
/// Outcomes with zero probability are omitted.
pub fn measure_spin<T: Real>(
    registry: &SpeciesRegistry,
    s: &StateVector<T>,
    obs: &SpinObservable<T>,
) -> Result<Vec<MeasurementRecord<T>>> {
    s.require_normalized()?;
    validate_superselection(registry, s)?;
    if obs.register >= s.registers() {
        return Err(Error::Domain(format!("register {} out of range for {} registers", obs.register, s.registers())));
    }
    s.check_labels(registry)?;
    let outcomes = s
        .iter()
        .map(|(b, _)| registry.get(&b.label(obs.register).species).map(|sp| sp.spin_multiplicity as usize))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    let mut records = Vec::new();
    for outcome in 0..outcomes {
        let projected = project(s, obs, outcome)?;
        let probability = projected.norm_sqr();
        if projected.is_zero() || probability <= T::lit(T::PRUNE_TOL) {
            continue;
        }
        records.push(MeasurementRecord { outcome, probability, post_state: projected.normalized()? });
    }
    Ok(records)
}

/// Draws one outcome of [`measure_spin`] with a generator seeded by `seed`.
pub fn sample_measurement<T: Real>(
    registry: &SpeciesRegistry,
    s: &StateVector<T>,
    obs: &SpinObservable<T>,
    seed: u64,
) -> Result<MeasurementRecord<T>> {
    let mut records = measure_spin(registry, s, obs)?;
    let total = records.iter().fold(T::zero(), |acc, r| acc + r.probability);
    let u = T::lit(ChaCha8Rng::seed_from_u64(seed).gen::<f64>()) * total;
    let mut acc = T::zero();
    let pick = records
        .iter()
        .position(|r| {
            acc += r.probability;
            u < acc
        })
        .unwrap_or(records.len() - 1);
    Ok(records.swap_remove(pick))
}

/// Net gauged charge of the whole state.
pub fn charge_readout<T: Real>(registry: &SpeciesRegistry, s: &StateVector<T>) -> Result<SectorIndex> {
    validate_superselection(registry, s)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use super::*;
    use crate::charge::registries::*;
    use crate::entanglement::entanglement_report;
    use crate::fock::{sector_of, BasisState};

    type S = StateVector<f64>;

    const UP: u32 = 0;
    const DOWN: u32 = 1;

    fn hybrid(alpha: f64, beta: f64) -> S {
        S::from_real(&[
            (alpha, BasisState::of(&[("e-", UP), ("e+", DOWN)])),
            (beta, BasisState::of(&[("e+", DOWN), ("e-", UP)])),
        ])
        .unwrap()
    }

    #[test]
    fn hybrid_pair_collapses_to_products() {
        let reg = electron_positron(2);
        let (a, b) = ((1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt());
        let s = hybrid(a, b);
        let records = measure_spin(&reg, &s, &SpinObservable::spin_z(&reg, 0)).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].outcome, 0);
        assert!((records[0].probability - 1.0 / 3.0).abs() < 1e-12);
        let first = S::basis(BasisState::of(&[("e-", UP), ("e+", DOWN)]));
        assert!(records[0].post_state.max_deviation(&first) < 1e-12);
        assert_eq!(records[1].outcome, 1);
        assert!((records[1].probability - 2.0 / 3.0).abs() < 1e-12);
        let second = S::basis(BasisState::of(&[("e+", DOWN), ("e-", UP)]));
        assert!(records[1].post_state.max_deviation(&second) < 1e-12);
        for r in &records {
            let report = entanglement_report(&r.post_state).unwrap();
            assert!(report.cuts.iter().all(|c| c.rank == 1));
            assert_eq!(charge_readout(&reg, &r.post_state).unwrap(), SectorIndex::new(vec![0]));
        }
    }

    #[test]
    fn eigenstate_and_spinless_cases() {
        let reg = electron_positron(2);
        let eigen = S::basis(BasisState::of(&[("e-", DOWN), ("e+", UP)]));
        let records = measure_spin(&reg, &eigen, &SpinObservable::spin_z(&reg, 1)).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!((records[0].outcome, records[0].probability), (0, 1.0));
        assert_eq!(records[0].post_state, eigen);

        let spinless = electron_positron(1);
        let plus = S::from_real(&[
            (FRAC_1_SQRT_2, BasisState::of_species(&["e-", "e+"])),
            (FRAC_1_SQRT_2, BasisState::of_species(&["e+", "e-"])),
        ])
        .unwrap();
        let records = measure_spin(&spinless, &plus, &SpinObservable::spin_z(&spinless, 0)).unwrap();
        assert_eq!(records.len(), 1);
        assert!((records[0].probability - 1.0).abs() < 1e-15);
        assert!(records[0].post_state.max_deviation(&plus) < 1e-15);
        assert!(entanglement_report(&records[0].post_state).unwrap().packaged_entangled);
    }

    #[test]
    fn errors() {
        let reg = electron_positron(2);
        let s = hybrid(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        assert!(matches!(measure_spin(&reg, &s, &SpinObservable::spin_z(&reg, 2)), Err(Error::Domain(_))));
        let forbidden = S::from_real(&[
            (FRAC_1_SQRT_2, BasisState::of(&[("e-", 0), ("e-", 0)])),
            (FRAC_1_SQRT_2, BasisState::of(&[("e+", 0), ("e+", 0)])),
        ])
        .unwrap();
        assert!(matches!(
            measure_spin(&reg, &forbidden, &SpinObservable::spin_z(&reg, 0)),
            Err(Error::Superselection(_))
        ));
        let doubled = s.scaled(Complex::new(2.0, 0.0));
        assert!(matches!(measure_spin(&reg, &doubled, &SpinObservable::spin_z(&reg, 0)), Err(Error::Domain(_))));
        let skew = vec![vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)], vec![Complex::new(1.0, 0.0); 2]];
        assert!(matches!(SpinObservable::spin_z(&reg, 0).with_basis(&reg, "e-", skew), Err(Error::Config(_))));
    }

    #[test]
    fn x_basis_measurement_is_complete_and_repeatable() {
        let reg = electron_positron(2);
        let s = hybrid(0.6, 0.8);
        let obs = SpinObservable::spin_x(&reg, 1);
        let records = measure_spin(&reg, &s, &obs).unwrap();
        let total: f64 = records.iter().map(|r| r.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for r in &records {
            for (b, _) in r.post_state.iter() {
                assert_eq!(sector_of(&reg, b).unwrap(), SectorIndex::new(vec![0]));
            }
            let again = measure_spin(&reg, &r.post_state, &obs).unwrap();
            assert_eq!(again.len(), 1);
            assert_eq!(again[0].outcome, r.outcome);
            assert!((again[0].probability - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let reg = electron_positron(2);
        let s = hybrid((1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt());
        let obs = SpinObservable::spin_z(&reg, 0);
        assert_eq!(sample_measurement(&reg, &s, &obs, 42).unwrap(), sample_measurement(&reg, &s, &obs, 42).unwrap());
        let eigen = S::basis(BasisState::of(&[("e-", DOWN), ("e+", UP)]));
        for seed in 0..20 {
            assert_eq!(sample_measurement(&reg, &eigen, &obs, seed).unwrap().outcome, 1);
        }
    }
}
