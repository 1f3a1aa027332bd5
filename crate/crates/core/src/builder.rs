//! Orthonormal bases of a charge sector made entirely of packaged entangled
//! states.
//!
//! The product basis of the sector is paired into `(a ± b)/√2` seeds,
//! Gram–Schmidt orthonormalized, and then every vector that still factorizes
//! across some cut is repaired by a unitary plane rotation with another
//! vector of the set. Rotations inside an orthonormal set keep both the span
//! and orthonormality, so only the entanglement predicate needs rechecking.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::charge::SpeciesRegistry;
use crate::entanglement::rank_above_one_everywhere;
use crate::error::{Error, Result};
use crate::fock::{sector_basis, BasisState, SectorIndex};
use crate::linalg::CMatrix;
use crate::scalar::{unit_phase, Real};
use crate::state::{inner_product, superpose, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub struct BuilderConfig<T> {
    pub ortho_tolerance: T,
    /// Random-angle rotations tried per vector after the deterministic
    /// `π/4` mixes fail.
    pub max_repair_attempts: usize,
    pub rng_seed: u64,
    /// Fail with [`Error::Builder`] instead of flagging the sector degenerate
    /// when a vector cannot be repaired.
    pub strict: bool,
}

impl<T: Real> Default for BuilderConfig<T> {
    fn default() -> Self {
        Self { ortho_tolerance: T::lit(T::NORM_TOL), max_repair_attempts: 64, rng_seed: 0, strict: false }
    }
}

impl<T: Real> BuilderConfig<T> {
    pub fn with_seed(seed: u64) -> Self {
        Self { rng_seed: seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ortho_tolerance.is_nan() || self.ortho_tolerance <= T::zero() {
            return Err(Error::Config("ortho_tolerance must be positive".into()));
        }
        if self.max_repair_attempts == 0 {
            return Err(Error::Config("max_repair_attempts must be at least 1".into()));
        }
        Ok(())
    }
}

/// One accepted rotation `(v_k, v_j) -> (c v_k + s e^{iφ} v_j, -s e^{-iφ} v_k + c v_j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairStep<T> {
    pub partner: usize,
    pub angle: T,
    pub phase: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairLog<T> {
    pub index: usize,
    /// Verdict on the Gram–Schmidt output before any repair.
    pub seeded_entangled: bool,
    pub rotations: Vec<RepairStep<T>>,
    pub attempts: usize,
    pub entangled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntangledBasis<T> {
    pub vectors: Vec<StateVector<T>>,
    pub sector: SectorIndex,
    pub registers: usize,
    pub allowed: Option<Vec<String>>,
    pub ortho_tolerance: T,
    /// Set when some vector could not be made entangled (always for
    /// one-dimensional sectors and single-register states).
    pub degenerate: bool,
    pub separable: Vec<usize>,
    pub diagnostics: Vec<RepairLog<T>>,
}

fn real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

fn rotate<T: Real>(
    a: &StateVector<T>,
    b: &StateVector<T>,
    angle: T,
    phase: T,
) -> Result<(StateVector<T>, StateVector<T>)> {
    let (c, s) = (angle.cos(), angle.sin());
    let e = unit_phase(phase);
    let new_a = superpose(&[(real(c), a), (e * s, b)])?;
    let new_b = superpose(&[(-e.conj() * s, a), (real(c), b)])?;
    Ok((new_a, new_b))
}

/// Modified Gram–Schmidt with one reorthogonalization pass.
fn gram_schmidt<T: Real>(seeds: Vec<StateVector<T>>) -> Result<Vec<StateVector<T>>> {
    let mut out: Vec<StateVector<T>> = Vec::with_capacity(seeds.len());
    for (k, mut v) in seeds.into_iter().enumerate() {
        for _ in 0..2 {
            for u in &out {
                let overlap = inner_product(u, &v)?;
                if overlap.norm() > T::zero() {
                    v = superpose(&[(real(T::one()), &v), (-overlap, u)])?;
                }
            }
        }
        if v.norm() <= T::lit(T::NORM_TOL) {
            return Err(Error::Builder { index: k, reason: "seed vectors are linearly dependent".into() });
        }
        out.push(v.normalized()?);
    }
    Ok(out)
}

/// Builds an orthonormal basis of sector `q` over `n` registers whose every
/// vector is entangled across all bipartitions, or flags the sector
/// degenerate when that is impossible.
pub fn build_packaged_entangled_basis<T: Real>(
    registry: &SpeciesRegistry,
    n: usize,
    q: &SectorIndex,
    allowed: Option<&[&str]>,
    cfg: &BuilderConfig<T>,
) -> Result<EntangledBasis<T>> {
    cfg.validate()?;
    let products = sector_basis(registry, n, q, allowed)?;
    if products.is_empty() {
        return Err(Error::Domain(format!("sector Q={q} is empty for {n} registers")));
    }
    let d = products.len();
    let mut basis = EntangledBasis {
        vectors: Vec::with_capacity(d),
        sector: q.clone(),
        registers: n,
        allowed: allowed.map(|a| a.iter().map(|s| s.to_string()).collect()),
        ortho_tolerance: cfg.ortho_tolerance,
        degenerate: false,
        separable: Vec::new(),
        diagnostics: Vec::with_capacity(d),
    };

    if d == 1 || n == 1 {
        // No entangled unit vector exists in a one-dimensional sector spanned
        // by a product state, and a single register admits no cut.
        basis.vectors = products.into_iter().map(StateVector::basis).collect();
        basis.degenerate = true;
        basis.separable = (0..d).collect();
        basis.diagnostics = (0..d)
            .map(|index| RepairLog { index, seeded_entangled: false, rotations: vec![], attempts: 0, entangled: false })
            .collect();
        return Ok(basis);
    }

    let half = T::FRAC_1_SQRT_2();
    let mut seeds = Vec::with_capacity(d);
    for pair in products.chunks(2) {
        match pair {
            [a, b] => {
                let (a, b) = (StateVector::basis(a.clone()), StateVector::basis(b.clone()));
                seeds.push(superpose(&[(real(half), &a), (real(half), &b)])?);
                seeds.push(superpose(&[(real(half), &a), (real(-half), &b)])?);
            }
            [a] => seeds.push(StateVector::basis(a.clone())),
            _ => unreachable!("chunks of two"),
        }
    }
    let mut work = gram_schmidt(seeds)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let two_pi = T::PI() + T::PI();
    for k in 0..d {
        let seeded_entangled = rank_above_one_everywhere(&work[k]);
        let mut log =
            RepairLog { index: k, seeded_entangled, rotations: vec![], attempts: 0, entangled: seeded_entangled };
        if !seeded_entangled {
            let partners: Vec<usize> = (0..d).filter(|&j| j != k).collect();
            let try_rotation = |j: usize, angle: T, phase: T, work: &mut Vec<StateVector<T>>| -> Result<bool> {
                let (new_k, new_j) = rotate(&work[k], &work[j], angle, phase)?;
                // Predecessors were already accepted and must stay entangled.
                if rank_above_one_everywhere(&new_k) && (j > k || rank_above_one_everywhere(&new_j)) {
                    work[k] = new_k;
                    work[j] = new_j;
                    return Ok(true);
                }
                Ok(false)
            };
            let quarter = T::lit(FRAC_PI_4);
            for &j in &partners {
                log.attempts += 1;
                if try_rotation(j, quarter, T::zero(), &mut work)? {
                    log.rotations.push(RepairStep { partner: j, angle: quarter, phase: T::zero() });
                    log.entangled = true;
                    break;
                }
            }
            // Rotations with vectors not yet processed are unconstrained;
            // applying them in turn spreads support until the vector no
            // longer factorizes.
            if !log.entangled {
                for j in (k + 1)..d {
                    log.attempts += 1;
                    let (new_k, new_j) = rotate(&work[k], &work[j], quarter, T::zero())?;
                    work[k] = new_k;
                    work[j] = new_j;
                    log.rotations.push(RepairStep { partner: j, angle: quarter, phase: T::zero() });
                    if rank_above_one_everywhere(&work[k]) {
                        log.entangled = true;
                        break;
                    }
                }
            }
            let mut remaining = cfg.max_repair_attempts;
            while !log.entangled && remaining > 0 {
                remaining -= 1;
                log.attempts += 1;
                let j = partners[rng.gen_range(0..partners.len())];
                let angle = T::lit(rng.gen_range(0.05..0.95)) * T::FRAC_PI_2();
                let phase = T::lit(rng.gen::<f64>()) * two_pi;
                if try_rotation(j, angle, phase, &mut work)? {
                    log.rotations.push(RepairStep { partner: j, angle, phase });
                    log.entangled = true;
                }
            }
            if !log.entangled {
                if cfg.strict {
                    return Err(Error::Builder {
                        index: k,
                        reason: format!("no entangling rotation found in {} attempts", log.attempts),
                    });
                }
                basis.degenerate = true;
                basis.separable.push(k);
            }
        }
        basis.diagnostics.push(log);
    }
    let defect = gram_defect(&work)?;
    if defect > cfg.ortho_tolerance {
        return Err(Error::Builder { index: d - 1, reason: format!("orthonormality drifted to {defect}") });
    }
    basis.vectors = work;
    Ok(basis)
}

/// Largest entry of `|G - I|` for the Gram matrix of `vectors`.
fn gram_defect<T: Real>(vectors: &[StateVector<T>]) -> Result<T> {
    let mut worst = T::zero();
    for (i, a) in vectors.iter().enumerate() {
        for b in &vectors[i..] {
            let g = inner_product(a, b)?;
            let target = if std::ptr::eq(a, b) { real(T::one()) } else { real(T::zero()) };
            worst = worst.max((g - target).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "finding", rename_all = "snake_case")]
pub enum BasisFinding {
    DimensionMismatch { expected: usize, found: usize },
    NormDeviation { index: usize, norm: f64 },
    NonOrthogonal { i: usize, j: usize, overlap: f64 },
    OutsideSector { index: usize },
    SpanDeficiency { rank: usize, expected: usize, frobenius: f64 },
    NotEntangled { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisVerification {
    pub sector_dimension: usize,
    pub max_gram_deviation: f64,
    /// Frobenius distance between the span projector and the sector projector.
    pub span_deviation: f64,
    pub span_rank: usize,
    pub entangled: Vec<bool>,
    pub findings: Vec<BasisFinding>,
}

impl BasisVerification {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Frobenius tolerance on the span projector.
/// Span tolerance in double precision; single precision uses `10 * NORM_TOL`.
pub const SPAN_TOLERANCE: f64 = 1e-8;

fn span_tolerance<T: Real>() -> f64 {
    SPAN_TOLERANCE.max(10.0 * T::NORM_TOL)
}

/// Recomputes the Gram matrix, span projector and entanglement verdicts.
pub fn verify_basis<T: Real>(basis: &EntangledBasis<T>, registry: &SpeciesRegistry) -> Result<BasisVerification> {
    let allowed: Option<Vec<&str>> = basis.allowed.as_ref().map(|a| a.iter().map(String::as_str).collect());
    let products = sector_basis(registry, basis.registers, &basis.sector, allowed.as_deref())?;
    let d = products.len();
    let tol = basis.ortho_tolerance;
    let mut findings = Vec::new();
    if basis.vectors.len() != d {
        findings.push(BasisFinding::DimensionMismatch { expected: d, found: basis.vectors.len() });
    }

    let mut max_gram = T::zero();
    for (i, a) in basis.vectors.iter().enumerate() {
        let norm = a.norm();
        max_gram = max_gram.max((norm * norm - T::one()).abs());
        if (norm - T::one()).abs() > tol {
            findings.push(BasisFinding::NormDeviation { index: i, norm: norm.as_f64() });
        }
        for (j, b) in basis.vectors.iter().enumerate().skip(i + 1) {
            let overlap = inner_product(a, b)?.norm();
            max_gram = max_gram.max(overlap);
            if overlap > tol {
                findings.push(BasisFinding::NonOrthogonal { i, j, overlap: overlap.as_f64() });
            }
        }
    }

    let position = |b: &BasisState| products.binary_search(b).ok();
    for (i, v) in basis.vectors.iter().enumerate() {
        if v.iter().any(|(b, _)| position(b).is_none()) {
            findings.push(BasisFinding::OutsideSector { index: i });
        }
    }
    // Columns are the vectors in sector coordinates.
    let m = basis.vectors.len();
    let mut coords = CMatrix::zeros(d, m.max(1));
    for (j, v) in basis.vectors.iter().enumerate() {
        for (b, a) in v.iter() {
            if let Some(i) = position(b) {
                coords[(i, j)] = *a;
            }
        }
    }
    let projector = coords.matmul(&coords.adjoint());
    let span_deviation = projector.sub(&CMatrix::identity(d)).frobenius_norm().as_f64();
    let sv = coords.singular_values();
    let top = sv.first().copied().unwrap_or_else(T::zero);
    let span_rank = sv.iter().filter(|&&s| s > T::lit(T::RANK_TOL) * top).count();
    if span_deviation > span_tolerance::<T>() || span_rank != d {
        findings.push(BasisFinding::SpanDeficiency { rank: span_rank, expected: d, frobenius: span_deviation });
    }

    let entangled: Vec<bool> = basis.vectors.iter().map(rank_above_one_everywhere).collect();
    for (i, &e) in entangled.iter().enumerate() {
        if !e && !(basis.degenerate && basis.separable.contains(&i)) {
            findings.push(BasisFinding::NotEntangled { index: i });
        }
    }
    Ok(BasisVerification {
        sector_dimension: d,
        max_gram_deviation: max_gram.as_f64(),
        span_deviation,
        span_rank,
        entangled,
        findings,
    })
}


#[cfg(test)]
mod sweep {
    use super::*;
    use crate::charge::registries::electron_positron;

    #[test]
    fn every_multi_dimensional_sector_up_to_six_registers() {
        let reg = electron_positron(1);
        for n in 2..=6usize {
            for electrons in 0..=n {
                let charge = (n - electrons) as i64 - electrons as i64;
                let q = SectorIndex::new(vec![charge]);
                let basis =
                    build_packaged_entangled_basis(&reg, n, &q, None, &BuilderConfig::<f64>::default()).unwrap();
                let report = verify_basis(&basis, &reg).unwrap();
                let d = basis.vectors.len();
                assert!(report.is_clean(), "{report:?}");
                assert_eq!(basis.degenerate, d == 1);
            }
        }
    }
}
