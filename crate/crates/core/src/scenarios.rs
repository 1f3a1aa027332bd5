//! Canned states: the Bell-like particle/antiparticle pair, the hybrid
//! spin-charge pair, a forbidden cross-sector mixture, the neutral-kaon
//! superposition and a toy color singlet.
//!
//! Each scenario carries an expectation block. [`check_expectations`]
//! recomputes every expected property with the state and entanglement
//! modules instead of trusting the constructor.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::Serialize;

use crate::charge::{registries, SpeciesRegistry};
use crate::entanglement::{entanglement_report, Bipartition};
use crate::error::{Error, Result};
use crate::fock::{BasisState, SectorIndex};
use crate::scalar::Real;
use crate::state::{validate_superselection, StateVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioId {
    BellPlus,
    BellMinus,
    /// `α|e-↑, e+↓> + β|e+↓, e-↑>`.
    HybridPair {
        alpha: Complex<f64>,
        beta: Complex<f64>,
    },
    ForbiddenPm2e,
    /// `α|K0> + β|K0bar>` on one register.
    MesonSuperposition {
        alpha: Complex<f64>,
        beta: Complex<f64>,
    },
    ColorSingletToy,
}

impl ScenarioId {
    pub const NAMES: [&'static str; 6] =
        ["bell_plus", "bell_minus", "hybrid_pair", "forbidden_pm2e", "meson_superposition", "color_singlet_toy"];

    pub fn name(&self) -> &'static str {
        match self {
            Self::BellPlus => "bell_plus",
            Self::BellMinus => "bell_minus",
            Self::HybridPair { .. } => "hybrid_pair",
            Self::ForbiddenPm2e => "forbidden_pm2e",
            Self::MesonSuperposition { .. } => "meson_superposition",
            Self::ColorSingletToy => "color_singlet_toy",
        }
    }

    /// Builds a scenario id from its CLI name; parameterized scenarios use
    /// the given amplitudes.
    pub fn parse_with(name: &str, alpha: Complex<f64>, beta: Complex<f64>) -> Result<Self> {
        Ok(match name {
            "bell_plus" => Self::BellPlus,
            "bell_minus" => Self::BellMinus,
            "hybrid_pair" => Self::HybridPair { alpha, beta },
            "forbidden_pm2e" => Self::ForbiddenPm2e,
            "meson_superposition" => Self::MesonSuperposition { alpha, beta },
            "color_singlet_toy" => Self::ColorSingletToy,
            other => {
                return Err(Error::Config(format!(
                    "unknown scenario `{other}` (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    /// Parameterized scenarios get equal `1/√2` amplitudes.
    fn from_str(s: &str) -> Result<Self> {
        let h = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::parse_with(s, h, h)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What the independent modules should find for a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    /// The unique sector, when the state is superselection-compatible.
    pub sector: Option<SectorIndex>,
    /// Sectors of a rejected cross-sector state.
    pub violation_sectors: Vec<SectorIndex>,
    /// `None` when entanglement is undefined (one register) or the state is
    /// rejected.
    pub entangled: Option<bool>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub id: ScenarioId,
    pub registry: SpeciesRegistry,
    pub state: StateVector<T>,
    pub expected: Expectation,
}

fn amp<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::lit(z.re), T::lit(z.im))
}

fn check_pair(alpha: Complex<f64>, beta: Complex<f64>) -> Result<()> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("|alpha|^2 + |beta|^2 = {norm}, expected 1")));
    }
    Ok(())
}

pub fn build_scenario<T: Real>(id: ScenarioId) -> Result<Scenario<T>> {
    let h = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let zero = || Some(SectorIndex::new(vec![0]));
    let (registry, terms, expected) = match id {
        ScenarioId::BellPlus | ScenarioId::BellMinus => {
            let sign = if id == ScenarioId::BellPlus { 1.0 } else { -1.0 };
            (
                registries::electron_positron(1),
                vec![(h, BasisState::of_species(&["e-", "e+"])), (h * sign, BasisState::of_species(&["e+", "e-"]))],
                Expectation { sector: zero(), violation_sectors: vec![], entangled: Some(true), flags: vec![] },
            )
        }
        ScenarioId::HybridPair { alpha, beta } => {
            check_pair(alpha, beta)?;
            let product = alpha.norm_sqr() < 1e-24 || beta.norm_sqr() < 1e-24;
            (
                registries::electron_positron(2),
                vec![(alpha, BasisState::of(&[("e-", 0), ("e+", 1)])), (beta, BasisState::of(&[("e+", 1), ("e-", 0)]))],
                Expectation {
                    sector: zero(),
                    violation_sectors: vec![],
                    entangled: Some(!product),
                    flags: vec!["hybrid".into(), "spin index 0 = up, 1 = down".into()],
                },
            )
        }
        ScenarioId::ForbiddenPm2e => (
            registries::electron_positron(1),
            vec![(h, BasisState::of_species(&["e-", "e-"])), (h, BasisState::of_species(&["e+", "e+"]))],
            Expectation {
                sector: None,
                violation_sectors: vec![SectorIndex::new(vec![-2]), SectorIndex::new(vec![2])],
                entangled: None,
                flags: vec!["superselection-violating".into()],
            },
        ),
        ScenarioId::MesonSuperposition { alpha, beta } => {
            check_pair(alpha, beta)?;
            (
                registries::neutral_kaons(),
                vec![(alpha, BasisState::of_species(&["K0"])), (beta, BasisState::of_species(&["K0bar"]))],
                Expectation {
                    sector: zero(),
                    violation_sectors: vec![],
                    entangled: None,
                    flags: vec!["single register: entanglement undefined".into()],
                },
            )
        }
        ScenarioId::ColorSingletToy => (
            registries::color_toy(),
            vec![(h, BasisState::of_species(&["u_c1", "ubar_c1"])), (h, BasisState::of_species(&["u_c2", "ubar_c2"]))],
            Expectation {
                sector: zero(),
                violation_sectors: vec![],
                entangled: Some(true),
                flags: vec!["color modeled as global additive labels, not SU(3)".into()],
            },
        ),
    };
    let n = terms[0].1.registers();
    let state = StateVector::from_terms(n, terms.into_iter().map(|(a, b)| (b, amp(a))))?;
    Ok(Scenario { id, registry, state, expected })
}

/// Properties recomputed from the state, independent of the expectation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observed {
    pub sector: Option<SectorIndex>,
    pub violation_sectors: Vec<(SectorIndex, f64)>,
    pub entangled: Option<bool>,
    /// Entropy across `{0}|{rest}` for multi-register accepted states.
    pub entropy: Option<f64>,
    pub schmidt_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioCheck {
    pub scenario: String,
    pub expected: Expectation,
    pub observed: Observed,
    pub mismatches: Vec<String>,
}

impl ScenarioCheck {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub fn check_expectations<T: Real>(scenario: &Scenario<T>) -> Result<ScenarioCheck> {
    let mut observed =
        Observed { sector: None, violation_sectors: vec![], entangled: None, entropy: None, schmidt_values: None };
    match validate_superselection(&scenario.registry, &scenario.state) {
        Ok(q) => observed.sector = Some(q),
        Err(Error::Superselection(v)) => observed.violation_sectors = v.sectors,
        Err(e) => return Err(e),
    }
    if observed.sector.is_some() && scenario.state.registers() > 1 {
        let report = entanglement_report(&scenario.state)?;
        observed.entangled = Some(report.packaged_entangled);
        let first = Bipartition::new(scenario.state.registers(), [0])?;
        if let Some(c) = report.cuts.iter().find(|c| c.cut == first) {
            observed.entropy = Some(c.entropy.as_f64());
            observed.schmidt_values = Some(c.singular_values.iter().map(|v| v.as_f64()).collect());
        }
    }
    let mut mismatches = Vec::new();
    let e = &scenario.expected;
    if e.sector != observed.sector {
        mismatches.push(format!("sector: expected {:?}, observed {:?}", e.sector, observed.sector));
    }
    let seen: Vec<SectorIndex> = observed.violation_sectors.iter().map(|(q, _)| q.clone()).collect();
    if e.violation_sectors != seen {
        mismatches.push(format!("violation sectors: expected {:?}, observed {:?}", e.violation_sectors, seen));
    }
    if e.entangled != observed.entangled {
        mismatches.push(format!("entangled: expected {:?}, observed {:?}", e.entangled, observed.entangled));
    }
    Ok(ScenarioCheck { scenario: scenario.id.name().into(), expected: e.clone(), observed, mismatches })
}
