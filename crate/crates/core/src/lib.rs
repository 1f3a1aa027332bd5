//! Simulation of multi-particle excitations that carry packaged internal
//! quantum numbers.
//!
//! The crate enforces superselection by gauged charge, decides whether a
//! single-sector state is entangled across its excitations, builds
//! orthonormal bases of a charge sector made only of entangled states, and
//! measures external (spin) degrees of freedom.
//!
//! Numerics are generic over the real scalar ([`Real`], implemented for
//! `f32` and `f64`); the `*F64` / `*F32` aliases below fix the scalar.
//! Charges are exact integers throughout.

pub mod builder;
pub mod charge;
pub mod entanglement;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod measurement;
pub mod scalar;
pub mod scenarios;
pub mod state;

pub use builder::{
    build_packaged_entangled_basis, verify_basis, BasisFinding, BasisVerification, BuilderConfig, EntangledBasis,
    RepairLog, RepairStep,
};
pub use charge::{
    add_charges, conjugate_species, registries, validate_registry, ChargeComponentSpec, ChargeKind, ChargeVector,
    RegistryViolation, Species, SpeciesRegistry,
};
pub use entanglement::{
    amplitude_matrix, entanglement_entropy, entanglement_report, internal_charge_marginal, is_entangled_somewhere,
    is_packaged_entangled, ppt_check, schmidt, Bipartition, CutReport, DensityMatrix, EntanglementReport, PptResult,
    PptVerdict, SchmidtResult,
};
pub use error::{Error, Result, SuperselectionViolation};
pub use fock::{
    enumerate_basis, label_space, sector_basis, sector_of, total_charge, BasisState, RegisterLabel, SectorIndex,
};
pub use linalg::CMatrix;
pub use measurement::{charge_readout, measure_spin, sample_measurement, MeasurementRecord, SpinObservable};
pub use num_complex::Complex;
pub use scalar::Real;
pub use scenarios::{build_scenario, check_expectations, Expectation, Scenario, ScenarioCheck, ScenarioId};
pub use state::{
    apply_u1_gauge, charge_conjugate, inner_product, sector_decompose, superpose, validate_superselection,
    SectorDecomposition, SectorPart, StateFile, StateVector, TermFile,
};

pub type StateVectorF64 = StateVector<f64>;
pub type StateVectorF32 = StateVector<f32>;
pub type SectorDecompositionF64 = SectorDecomposition<f64>;
pub type SchmidtResultF64 = SchmidtResult<f64>;
pub type EntanglementReportF64 = EntanglementReport<f64>;
pub type DensityMatrixF64 = DensityMatrix<f64>;
pub type DensityMatrixF32 = DensityMatrix<f32>;
pub type BuilderConfigF64 = BuilderConfig<f64>;
pub type EntangledBasisF64 = EntangledBasis<f64>;
pub type EntangledBasisF32 = EntangledBasis<f32>;
pub type SpinObservableF64 = SpinObservable<f64>;
pub type MeasurementRecordF64 = MeasurementRecord<f64>;
pub type ScenarioF64 = Scenario<f64>;
pub type CMatrixF64 = CMatrix<f64>;
