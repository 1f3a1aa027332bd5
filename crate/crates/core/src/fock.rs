//! Fixed-register product basis states and their charge sectors.
//!
//! Registers are distinguishable slots (one per momentum label) each holding
//! exactly one excitation. Basis order is register-major, then species id
//! (lexicographic), then spin index (ascending); `BasisState`'s derived `Ord`
//! is that order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::charge::{add_charges, write_tuple, ChargeVector, SpeciesRegistry};
use crate::error::{Error, Result};

/// One excitation: a packaged species together with its spin index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegisterLabel {
    pub species: String,
    pub spin: u32,
}

impl RegisterLabel {
    pub fn new(species: &str, spin: u32) -> Self {
        Self { species: species.into(), spin }
    }

    /// Checks that the species exists and the spin index is in range.
    pub fn check(&self, registry: &SpeciesRegistry) -> Result<()> {
        let s = registry.get(&self.species)?;
        if self.spin >= s.spin_multiplicity {
            return Err(Error::Domain(format!(
                "spin index {} out of range for `{}` (multiplicity {})",
                self.spin, self.species, s.spin_multiplicity
            )));
        }
        Ok(())
    }
}

impl fmt::Display for RegisterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.species, self.spin)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    labels: Vec<RegisterLabel>,
}

impl BasisState {
    /// Panics on an empty label list.
    pub fn new(labels: Vec<RegisterLabel>) -> Self {
        assert!(!labels.is_empty(), "a basis state needs at least one register");
        Self { labels }
    }

    /// Spin-0 labels for the given species, one per register.
    pub fn of_species(ids: &[&str]) -> Self {
        Self::new(ids.iter().map(|id| RegisterLabel::new(id, 0)).collect())
    }

    /// `(species, spin)` pairs, one per register.
    pub fn of(pairs: &[(&str, u32)]) -> Self {
        Self::new(pairs.iter().map(|&(id, s)| RegisterLabel::new(id, s)).collect())
    }

    pub fn registers(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[RegisterLabel] {
        &self.labels
    }

    pub fn label(&self, register: usize) -> &RegisterLabel {
        &self.labels[register]
    }

    pub fn with_label(&self, register: usize, label: RegisterLabel) -> Self {
        let mut labels = self.labels.clone();
        labels[register] = label;
        Self { labels }
    }

    pub fn check(&self, registry: &SpeciesRegistry) -> Result<()> {
        self.labels.iter().try_for_each(|l| l.check(registry))
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, l) in self.labels.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ">")
    }
}

/// Gauged part of a total charge: the label of a superselection sector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SectorIndex(Vec<i64>);

impl SectorIndex {
    pub fn new(gauged_charges: Vec<i64>) -> Self {
        Self(gauged_charges)
    }

    pub fn charges(&self) -> &[i64] {
        &self.0
    }

    /// Restricts a full charge vector to the registry's gauged components.
    pub fn of_charge(registry: &SpeciesRegistry, q: &ChargeVector) -> Self {
        Self(q.select(&registry.gauged_components()))
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|q| -q).collect())
    }

    pub fn check_arity(&self, registry: &SpeciesRegistry) -> Result<()> {
        let expected = registry.gauged_components().len();
        if self.0.len() != expected {
            return Err(Error::Config(format!(
                "sector index has {} charges, registry has {expected} gauged components",
                self.0.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SectorIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.0)
    }
}

/// The ordered single-register label space over the allowed species.
pub fn label_space(registry: &SpeciesRegistry, allowed: Option<&[&str]>) -> Result<Vec<RegisterLabel>> {
    let mut ids: Vec<&str> = match allowed {
        None => registry.sorted_ids(),
        Some([]) => return Err(Error::Config("allowed species set is empty".into())),
        Some(list) => {
            for id in list {
                registry.get(id)?;
            }
            list.to_vec()
        }
    };
    ids.sort_unstable();
    ids.dedup();
    let mut labels = Vec::new();
    for id in ids {
        let s = registry.get(id)?;
        labels.extend((0..s.spin_multiplicity).map(|spin| RegisterLabel::new(id, spin)));
    }
    if labels.is_empty() {
        return Err(Error::Config("registry has no species".into()));
    }
    Ok(labels)
}

/// All product basis states over `n` registers, in canonical order.
pub fn enumerate_basis(registry: &SpeciesRegistry, n: usize, allowed: Option<&[&str]>) -> Result<Vec<BasisState>> {
    if n == 0 {
        return Err(Error::Config("register count must be at least 1".into()));
    }
    let space = label_space(registry, allowed)?;
    let total = space
        .len()
        .checked_pow(n as u32)
        .ok_or_else(|| Error::Config(format!("{}^{n} basis states overflow", space.len())))?;
    let mut out = Vec::with_capacity(total);
    // Odometer over label indices; register 0 is the most significant digit.
    let mut digits = vec![0usize; n];
    loop {
        out.push(BasisState::new(digits.iter().map(|&d| space[d].clone()).collect()));
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < space.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Componentwise sum of the species charges over all registers.
pub fn total_charge(registry: &SpeciesRegistry, b: &BasisState) -> Result<ChargeVector> {
    b.labels
        .iter()
        .try_fold(ChargeVector::zero(registry.arity()), |acc, l| add_charges(&acc, &registry.get(&l.species)?.charges))
}

pub fn sector_of(registry: &SpeciesRegistry, b: &BasisState) -> Result<SectorIndex> {
    Ok(SectorIndex::of_charge(registry, &total_charge(registry, b)?))
}

/// The canonical-order product basis of sector `q`.
pub fn sector_basis(
    registry: &SpeciesRegistry,
    n: usize,
    q: &SectorIndex,
    allowed: Option<&[&str]>,
) -> Result<Vec<BasisState>> {
    q.check_arity(registry)?;
    let mut out = Vec::new();
    for b in enumerate_basis(registry, n, allowed)? {
        if &sector_of(registry, &b)? == q {
            out.push(b);
        }
    }
    Ok(out)
}
