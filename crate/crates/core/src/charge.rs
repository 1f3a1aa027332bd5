//! Charge vectors, the species registry, and species-level charge conjugation.
//!
//! A [`Species`] is one indivisible block of internal quantum numbers: its
//! charges are fixed by its id and can never be split off or superposed
//! independently. Registers in a basis state refer to species, never to
//! individual charge components.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChargeKind {
    /// Conserved and gauged: defines superselection sectors.
    Gauged,
    /// Conserved bookkeeping label (flavor, color-like tags); superposable.
    Global,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChargeComponentSpec {
    pub name: String,
    pub kind: ChargeKind,
    #[serde(default)]
    pub unit: String,
}

impl ChargeComponentSpec {
    pub fn gauged(name: &str, unit: &str) -> Self {
        Self { name: name.into(), kind: ChargeKind::Gauged, unit: unit.into() }
    }

    pub fn global(name: &str) -> Self {
        Self { name: name.into(), kind: ChargeKind::Global, unit: String::new() }
    }
}

/// Integer charges, one entry per component of the owning registry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChargeVector(Vec<i64>);

impl ChargeVector {
    pub fn new(components: Vec<i64>) -> Self {
        Self(components)
    }

    pub fn zero(arity: usize) -> Self {
        Self(vec![0; arity])
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&q| q == 0)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        add_charges(self, other)
    }

    /// Restriction to the given component indices.
    pub fn select(&self, indices: &[usize]) -> Vec<i64> {
        indices.iter().map(|&i| self.0[i]).collect()
    }
}

impl From<Vec<i64>> for ChargeVector {
    fn from(v: Vec<i64>) -> Self {
        Self(v)
    }
}

impl Neg for &ChargeVector {
    type Output = ChargeVector;

    fn neg(self) -> ChargeVector {
        ChargeVector(self.0.iter().map(|q| -q).collect())
    }
}

impl Neg for ChargeVector {
    type Output = ChargeVector;

    fn neg(self) -> ChargeVector {
        -&self
    }
}

impl Add for &ChargeVector {
    type Output = ChargeVector;

    /// Panics on arity mismatch; use [`add_charges`] for fallible addition.
    fn add(self, rhs: &ChargeVector) -> ChargeVector {
        add_charges(self, rhs).expect("charge vectors of equal arity")
    }
}

impl fmt::Display for ChargeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.0)
    }
}

pub(crate) fn write_tuple(f: &mut fmt::Formatter<'_>, values: &[i64]) -> fmt::Result {
    write!(f, "(")?;
    for (i, q) in values.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{q}")?;
    }
    write!(f, ")")
}

/// Componentwise sum of two charge vectors.
pub fn add_charges(a: &ChargeVector, b: &ChargeVector) -> Result<ChargeVector> {
    if a.arity() != b.arity() {
        return Err(Error::Config(format!("charge arity mismatch: {} vs {}", a.arity(), b.arity())));
    }
    Ok(ChargeVector(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Species {
    pub id: String,
    pub charges: ChargeVector,
    /// Number of spin / helicity labels carried by one excitation.
    pub spin_multiplicity: u32,
    pub conjugate_id: String,
}

impl Species {
    pub fn new(id: &str, charges: Vec<i64>, spin_multiplicity: u32, conjugate_id: &str) -> Self {
        Self { id: id.into(), charges: ChargeVector(charges), spin_multiplicity, conjugate_id: conjugate_id.into() }
    }
}

/// A broken registry invariant, naming the species or component involved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum RegistryViolation {
    DuplicateComponent { name: String },
    DuplicateSpecies { id: String },
    ChargeArity { species: String, expected: usize, found: usize },
    ZeroMultiplicity { species: String },
    DanglingConjugate { species: String, conjugate_id: String },
    NotInvolution { species: String, conjugate_id: String },
    ChargesNotNegated { species: String, conjugate_id: String },
    MultiplicityMismatch { species: String, conjugate_id: String },
}

impl fmt::Display for RegistryViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DuplicateComponent { name } => write!(f, "charge component `{name}` declared twice"),
            Self::DuplicateSpecies { id } => write!(f, "species `{id}` declared twice"),
            Self::ChargeArity { species, expected, found } => {
                write!(f, "species `{species}` has {found} charges, registry declares {expected}")
            }
            Self::ZeroMultiplicity { species } => write!(f, "species `{species}` has zero spin multiplicity"),
            Self::DanglingConjugate { species, conjugate_id } => {
                write!(f, "species `{species}` names missing conjugate `{conjugate_id}`")
            }
            Self::NotInvolution { species, conjugate_id } => {
                write!(f, "conjugate of `{conjugate_id}` is not `{species}`")
            }
            Self::ChargesNotNegated { species, conjugate_id } => {
                write!(f, "charges of `{species}` and `{conjugate_id}` are not opposite")
            }
            Self::MultiplicityMismatch { species, conjugate_id } => {
                write!(f, "spin multiplicities of `{species}` and `{conjugate_id}` differ")
            }
        }
    }
}

/// Charge components plus the species built from them.
///
/// Construction does not enforce the invariants so that broken registries
/// can be inspected with [`validate_registry`]; use
/// [`SpeciesRegistry::validated`] for a checked registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RegistryFile", into = "RegistryFile")]
pub struct SpeciesRegistry {
    charge_specs: Vec<ChargeComponentSpec>,
    species: Vec<Species>,
    index: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct RegistryFile {
    charge_specs: Vec<ChargeComponentSpec>,
    species: Vec<Species>,
}

impl From<RegistryFile> for SpeciesRegistry {
    fn from(file: RegistryFile) -> Self {
        SpeciesRegistry::new(file.charge_specs, file.species)
    }
}

impl From<SpeciesRegistry> for RegistryFile {
    fn from(reg: SpeciesRegistry) -> Self {
        RegistryFile { charge_specs: reg.charge_specs, species: reg.species }
    }
}

impl SpeciesRegistry {
    pub fn new(charge_specs: Vec<ChargeComponentSpec>, species: Vec<Species>) -> Self {
        let mut index = BTreeMap::new();
        for (i, s) in species.iter().enumerate() {
            index.entry(s.id.clone()).or_insert(i);
        }
        Self { charge_specs, species, index }
    }

    /// Builds the registry and rejects it unless every invariant holds.
    pub fn validated(charge_specs: Vec<ChargeComponentSpec>, species: Vec<Species>) -> Result<Self> {
        Self::new(charge_specs, species).into_validated()
    }

    pub fn into_validated(self) -> Result<Self> {
        let violations = validate_registry(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidRegistry(violations))
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let reg: SpeciesRegistry = serde_json::from_str(text)?;
        reg.into_validated()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry serializes")
    }

    pub fn charge_specs(&self) -> &[ChargeComponentSpec] {
        &self.charge_specs
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn arity(&self) -> usize {
        self.charge_specs.len()
    }

    pub fn get(&self, id: &str) -> Result<&Species> {
        self.index.get(id).map(|&i| &self.species[i]).ok_or_else(|| Error::UnknownSpecies(id.to_string()))
    }

    pub fn component_index(&self, name: &str) -> Result<usize> {
        self.charge_specs.iter().position(|c| c.name == name).ok_or_else(|| Error::UnknownComponent(name.to_string()))
    }

    /// Indices of the gauged components, in declaration order.
    pub fn gauged_components(&self) -> Vec<usize> {
        self.charge_specs.iter().enumerate().filter(|(_, c)| c.kind == ChargeKind::Gauged).map(|(i, _)| i).collect()
    }

    /// Species ids in lexicographic order.
    pub fn sorted_ids(&self) -> Vec<&str> {
        self.index.keys().map(String::as_str).collect()
    }
}

/// The charge-conjugate partner of species `id`.
pub fn conjugate_species<'r>(registry: &'r SpeciesRegistry, id: &str) -> Result<&'r Species> {
    let species = registry.get(id)?;
    registry.get(&species.conjugate_id)
}

/// Every broken registry invariant; empty iff the registry is well formed.
pub fn validate_registry(registry: &SpeciesRegistry) -> Vec<RegistryViolation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for c in &registry.charge_specs {
        if !seen.insert(c.name.as_str()) {
            out.push(RegistryViolation::DuplicateComponent { name: c.name.clone() });
        }
    }
    let mut seen = BTreeSet::new();
    for s in &registry.species {
        if !seen.insert(s.id.as_str()) {
            out.push(RegistryViolation::DuplicateSpecies { id: s.id.clone() });
        }
        if s.charges.arity() != registry.arity() {
            out.push(RegistryViolation::ChargeArity {
                species: s.id.clone(),
                expected: registry.arity(),
                found: s.charges.arity(),
            });
        }
        if s.spin_multiplicity == 0 {
            out.push(RegistryViolation::ZeroMultiplicity { species: s.id.clone() });
        }
    }
    for s in &registry.species {
        let Ok(partner) = registry.get(&s.conjugate_id) else {
            out.push(RegistryViolation::DanglingConjugate {
                species: s.id.clone(),
                conjugate_id: s.conjugate_id.clone(),
            });
            continue;
        };
        if partner.conjugate_id != s.id {
            out.push(RegistryViolation::NotInvolution { species: s.id.clone(), conjugate_id: s.conjugate_id.clone() });
            continue;
        }
        // Pairwise checks are reported once per pair.
        if s.id > partner.id {
            continue;
        }
        let opposite = s.charges.arity() == partner.charges.arity()
            && s.charges.0.iter().zip(&partner.charges.0).all(|(a, b)| a + b == 0);
        if !opposite {
            out.push(RegistryViolation::ChargesNotNegated { species: s.id.clone(), conjugate_id: partner.id.clone() });
        }
        if s.spin_multiplicity != partner.spin_multiplicity {
            out.push(RegistryViolation::MultiplicityMismatch {
                species: s.id.clone(),
                conjugate_id: partner.id.clone(),
            });
        }
    }
    out
}

/// Ready-made registries used by the scenarios, tests and docs.
pub mod registries {
    use super::*;

    /// Electron / positron with a gauged electric charge in units of `e`.
    pub fn electron_positron(spin_multiplicity: u32) -> SpeciesRegistry {
        SpeciesRegistry::validated(
            vec![ChargeComponentSpec::gauged("electric", "e")],
            vec![
                Species::new("e-", vec![-1], spin_multiplicity, "e+"),
                Species::new("e+", vec![1], spin_multiplicity, "e-"),
            ],
        )
        .expect("electron/positron registry is valid")
    }

    /// Electron, positron and a self-conjugate photon.
    pub fn qed(spin_multiplicity: u32) -> SpeciesRegistry {
        SpeciesRegistry::validated(
            vec![ChargeComponentSpec::gauged("electric", "e")],
            vec![
                Species::new("e-", vec![-1], spin_multiplicity, "e+"),
                Species::new("e+", vec![1], spin_multiplicity, "e-"),
                Species::new("gamma", vec![0], spin_multiplicity, "gamma"),
            ],
        )
        .expect("qed registry is valid")
    }

    /// Neutral kaons: electrically neutral, opposite global strangeness.
    pub fn neutral_kaons() -> SpeciesRegistry {
        SpeciesRegistry::validated(
            vec![ChargeComponentSpec::gauged("electric", "e"), ChargeComponentSpec::global("strangeness")],
            vec![Species::new("K0", vec![0, 1], 1, "K0bar"), Species::new("K0bar", vec![0, -1], 1, "K0")],
        )
        .expect("kaon registry is valid")
    }

    /// Toy quark/antiquark pair with a two-valued global color-like tag.
    ///
    /// Electric charge is counted in units of `e/3`. Color is two additive
    /// global labels, not an SU(3) representation.
    pub fn color_toy() -> SpeciesRegistry {
        SpeciesRegistry::validated(
            vec![
                ChargeComponentSpec::gauged("electric", "e/3"),
                ChargeComponentSpec::global("color_1"),
                ChargeComponentSpec::global("color_2"),
            ],
            vec![
                Species::new("u_c1", vec![2, 1, 0], 1, "ubar_c1"),
                Species::new("u_c2", vec![2, 0, 1], 1, "ubar_c2"),
                Species::new("ubar_c1", vec![-2, -1, 0], 1, "u_c1"),
                Species::new("ubar_c2", vec![-2, 0, -1], 1, "u_c2"),
            ],
        )
        .expect("color toy registry is valid")
    }
}
