//! Schmidt decomposition across register bipartitions, the packaged
//! entanglement predicates, entanglement entropy, and the internal-charge
//! marginal with its partial-transpose test.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::charge::SpeciesRegistry;
use crate::error::{Error, Result};
use crate::fock::{RegisterLabel, SectorIndex};
use crate::linalg::CMatrix;
use crate::scalar::Real;
use crate::state::{validate_superselection, StateVector};

/// A cut of `n` registers (or density-matrix factors) into two nonempty sides.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bipartition {
    n: usize,
    left: BTreeSet<usize>,
}

impl Bipartition {
    pub fn new(n: usize, left: impl IntoIterator<Item = usize>) -> Result<Self> {
        let left: BTreeSet<usize> = left.into_iter().collect();
        if let Some(&bad) = left.iter().find(|&&r| r >= n) {
            return Err(Error::Domain(format!("register {bad} out of range for {n} registers")));
        }
        if left.is_empty() || left.len() == n {
            return Err(Error::Domain(format!("trivial cut of {n} registers")));
        }
        Ok(Self { n, left })
    }

    /// Every distinct cut of `n` registers, each listed once with register 0
    /// on the left. Empty for `n < 2`.
    pub fn all(n: usize) -> Vec<Self> {
        if n < 2 {
            return Vec::new();
        }
        let full = 1u64 << n;
        (1..full)
            .filter(|mask| mask & 1 == 1 && *mask != full - 1)
            .map(|mask| Self { n, left: (0..n).filter(|r| mask >> r & 1 == 1).collect() })
            .collect()
    }

    pub fn registers(&self) -> usize {
        self.n
    }

    pub fn left(&self) -> Vec<usize> {
        self.left.iter().copied().collect()
    }

    pub fn right(&self) -> Vec<usize> {
        (0..self.n).filter(|r| !self.left.contains(r)).collect()
    }

    pub fn contains_left(&self, register: usize) -> bool {
        self.left.contains(&register)
    }

    fn check_registers(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::Domain(format!("cut over {} registers applied to {n}", self.n)));
        }
        Ok(())
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |v: Vec<usize>| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        write!(f, "{{{}}}|{{{}}}", side(self.left()), side(self.right()))
    }
}

impl Serialize for Bipartition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Bipartition", 2)?;
        st.serialize_field("left", &self.left())?;
        st.serialize_field("right", &self.right())?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtResult<T> {
    /// Descending, nonnegative.
    pub singular_values: Vec<T>,
    /// Number of values above `T::RANK_TOL` times the largest.
    pub rank: usize,
}

/// Reshapes `s` into a matrix with rows indexed by the left registers'
/// sub-configuration and columns by the right's. Only configurations that
/// occur in the support get a row or column, which leaves the singular
/// values unchanged.
pub fn amplitude_matrix<T: Real>(s: &StateVector<T>, cut: &Bipartition) -> Result<CMatrix<T>> {
    cut.check_registers(s.registers())?;
    let (left, right) = (cut.left(), cut.right());
    let project = |labels: &[RegisterLabel], side: &[usize]| -> Vec<RegisterLabel> {
        side.iter().map(|&r| labels[r].clone()).collect()
    };
    let mut rows = BTreeMap::new();
    let mut cols = BTreeMap::new();
    for (b, _) in s.iter() {
        let len = rows.len();
        rows.entry(project(b.labels(), &left)).or_insert(len);
        let len = cols.len();
        cols.entry(project(b.labels(), &right)).or_insert(len);
    }
    let mut m = CMatrix::zeros(rows.len().max(1), cols.len().max(1));
    for (b, a) in s.iter() {
        let r = rows[&project(b.labels(), &left)];
        let c = cols[&project(b.labels(), &right)];
        m[(r, c)] = *a;
    }
    Ok(m)
}

fn schmidt_values<T: Real>(s: &StateVector<T>, cut: &Bipartition) -> Result<SchmidtResult<T>> {
    let singular_values = amplitude_matrix(s, cut)?.singular_values();
    let top = singular_values.first().copied().unwrap_or_else(T::zero);
    let floor = T::lit(T::RANK_TOL) * top;
    let rank = singular_values.iter().filter(|&&v| v > floor).count();
    Ok(SchmidtResult { singular_values, rank })
}

/// Schmidt coefficients of a normalized state across `cut`.
pub fn schmidt<T: Real>(s: &StateVector<T>, cut: &Bipartition) -> Result<SchmidtResult<T>> {
    s.require_normalized()?;
    schmidt_values(s, cut)
}

fn entropy_of<T: Real>(values: &[T]) -> T {
    let total = values.iter().fold(T::zero(), |acc, v| acc + *v * *v);
    if total.is_zero() {
        return T::zero();
    }
    let h = values.iter().fold(T::zero(), |acc, v| {
        let p = *v * *v / total;
        if p > T::zero() {
            acc - p * p.ln()
        } else {
            acc
        }
    });
    h.max(T::zero())
}

/// Von Neumann entropy (nats) of either side of `cut`.
pub fn entanglement_entropy<T: Real>(s: &StateVector<T>, cut: &Bipartition) -> Result<T> {
    Ok(entropy_of(&schmidt(s, cut)?.singular_values))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutReport<T> {
    pub cut: Bipartition,
    pub singular_values: Vec<T>,
    pub rank: usize,
    pub entropy: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementReport<T> {
    pub registers: usize,
    pub sector: Option<SectorIndex>,
    pub cuts: Vec<CutReport<T>>,
    /// Rank above one across every cut (the default predicate).
    pub packaged_entangled: bool,
    /// Rank above one across at least one cut.
    pub entangled_somewhere: bool,
    /// False for a single register, where no cut exists.
    pub defined: bool,
    pub predicate: &'static str,
}

/// Per-cut Schmidt data without the superselection check.
pub fn entanglement_report<T: Real>(s: &StateVector<T>) -> Result<EntanglementReport<T>> {
    s.require_normalized()?;
    let cuts = Bipartition::all(s.registers())
        .into_iter()
        .map(|cut| {
            let r = schmidt_values(s, &cut)?;
            let entropy = entropy_of(&r.singular_values);
            Ok(CutReport { cut, singular_values: r.singular_values, rank: r.rank, entropy })
        })
        .collect::<Result<Vec<_>>>()?;
    let defined = !cuts.is_empty();
    Ok(EntanglementReport {
        registers: s.registers(),
        sector: None,
        packaged_entangled: defined && cuts.iter().all(|c| c.rank > 1),
        entangled_somewhere: cuts.iter().any(|c| c.rank > 1),
        cuts,
        defined,
        predicate: "all-cuts",
    })
}

/// The strong predicate without normalization or sector checks; used on
/// vectors already known to be unit length and single-sector.
pub(crate) fn rank_above_one_everywhere<T: Real>(s: &StateVector<T>) -> bool {
    let cuts = Bipartition::all(s.registers());
    !cuts.is_empty() && cuts.iter().all(|cut| schmidt_values(s, cut).map(|r| r.rank > 1).unwrap_or(false))
}

/// Decides packaged entanglement: the state must lie in one sector and have
/// Schmidt rank above one across every bipartition. The report also carries
/// the weaker some-cut verdict.
pub fn is_packaged_entangled<T: Real>(registry: &SpeciesRegistry, s: &StateVector<T>) -> Result<EntanglementReport<T>> {
    s.require_normalized()?;
    let sector = validate_superselection(registry, s)?;
    let mut report = entanglement_report(s)?;
    report.sector = Some(sector);
    Ok(report)
}

pub fn is_entangled_somewhere<T: Real>(registry: &SpeciesRegistry, s: &StateVector<T>) -> Result<bool> {
    Ok(is_packaged_entangled(registry, s)?.entangled_somewhere)
}

/// A density matrix over a product of labeled factors.
///
/// Row/column index `i` enumerates the product basis in mixed radix with
/// factor 0 most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    factors: Vec<Vec<String>>,
    entries: CMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Checks Hermiticity, positivity and unit trace.
    pub fn new(factors: Vec<Vec<String>>, entries: CMatrix<T>) -> Result<Self> {
        let rho = Self::unchecked(factors, entries)?;
        rho.validate()?;
        Ok(rho)
    }

    fn unchecked(factors: Vec<Vec<String>>, entries: CMatrix<T>) -> Result<Self> {
        let dim: usize = factors.iter().map(Vec::len).product();
        if factors.is_empty() || !entries.is_square() || entries.rows() != dim {
            return Err(Error::Domain(format!(
                "density matrix of size {}x{} does not match factor dimension {dim}",
                entries.rows(),
                entries.cols()
            )));
        }
        Ok(Self { factors, entries })
    }

    /// `|v><v|` for a vector in the product basis.
    pub fn projector(factors: Vec<Vec<String>>, v: &[Complex<T>]) -> Result<Self> {
        let m = CMatrix::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj());
        Self::new(factors, m)
    }

    pub fn validate(&self) -> Result<()> {
        let tol = T::lit(T::MATRIX_TOL);
        let defect = self.entries.hermiticity_defect();
        if defect > tol {
            return Err(Error::Domain(format!("density matrix not Hermitian (defect {defect})")));
        }
        let tr = self.entries.trace();
        if (tr.re - T::one()).abs() > T::lit(T::NORM_TOL) || tr.im.abs() > T::lit(T::NORM_TOL) {
            return Err(Error::Domain(format!("density matrix trace {tr} is not 1")));
        }
        let min = self.min_eigenvalue();
        if min < -tol {
            return Err(Error::Domain(format!("density matrix has negative eigenvalue {min}")));
        }
        Ok(())
    }

    pub fn factors(&self) -> &[Vec<String>] {
        &self.factors
    }

    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    /// Product-basis labels in row order.
    pub fn basis_labels(&self) -> Vec<Vec<String>> {
        (0..self.dim())
            .map(|i| self.digits(i).iter().zip(&self.factors).map(|(&d, f)| f[d].clone()).collect())
            .collect()
    }

    fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (k, f) in self.factors.iter().enumerate().rev() {
            out[k] = index % f.len();
            index /= f.len();
        }
        out
    }

    fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.factors).fold(0, |acc, (&d, f)| acc * f.len() + d)
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.entries.hermitian_eigenvalues()
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues().first().copied().unwrap_or_else(T::zero)
    }

    /// `tr(rho^2)`; one for pure states.
    pub fn purity(&self) -> T {
        self.entries.matmul(&self.entries).trace().re
    }

    pub fn rank(&self) -> usize {
        let ev = self.eigenvalues();
        let top = ev.last().copied().unwrap_or_else(T::zero);
        ev.iter().filter(|&&v| v > T::lit(T::RANK_TOL) * top).count()
    }

    /// Transposes the factors on the right of `cut`.
    pub fn partial_transpose(&self, cut: &Bipartition) -> Result<CMatrix<T>> {
        cut.check_registers(self.factors.len())?;
        let right = cut.right();
        let dim = self.dim();
        let mut out = CMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                let (mut dr, mut dc) = (self.digits(r), self.digits(c));
                for &k in &right {
                    std::mem::swap(&mut dr[k], &mut dc[k]);
                }
                out[(r, c)] = self.entries[(self.index_of(&dr), self.index_of(&dc))];
            }
        }
        Ok(out)
    }
}

impl<T: Real> Serialize for DensityMatrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|r| {
                (0..self.dim())
                    .map(|c| {
                        let z = self.entries[(r, c)];
                        [z.re.as_f64(), z.im.as_f64()]
                    })
                    .collect()
            })
            .collect();
        let mut st = serializer.serialize_struct("DensityMatrix", 3)?;
        st.serialize_field("factors", &self.factors)?;
        st.serialize_field("basis_labels", &self.basis_labels())?;
        st.serialize_field("entries", &rows)?;
        st.end()
    }
}

/// Reduced density matrix on the species labels of every register, with all
/// spin indices traced out.
///
/// Factor `k` lists the species that occur at register `k` in the support,
/// in lexicographic order.
pub fn internal_charge_marginal<T: Real>(registry: &SpeciesRegistry, s: &StateVector<T>) -> Result<DensityMatrix<T>> {
    s.require_normalized()?;
    s.check_labels(registry)?;
    let factors: Vec<Vec<String>> = s
        .local_supports()
        .into_iter()
        .map(|labels| {
            let ids: BTreeSet<String> = labels.into_iter().map(|l| l.species).collect();
            ids.into_iter().collect()
        })
        .collect();
    let dim: usize = factors.iter().map(Vec::len).product();
    let position = |k: usize, id: &str| factors[k].iter().position(|f| f == id).expect("species in support");

    // Terms sharing a spin configuration stay coherent; different spin
    // configurations are orthogonal and add incoherently.
    let mut by_spin: BTreeMap<Vec<u32>, Vec<(usize, Complex<T>)>> = BTreeMap::new();
    for (b, a) in s.iter() {
        let spins = b.labels().iter().map(|l| l.spin).collect();
        let index =
            b.labels().iter().enumerate().fold(0, |acc, (k, l)| acc * factors[k].len() + position(k, &l.species));
        by_spin.entry(spins).or_default().push((index, *a));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for branch in by_spin.values() {
        for &(i, ai) in branch {
            for &(j, aj) in branch {
                m[(i, j)] += ai * aj.conj();
            }
        }
    }
    DensityMatrix::new(factors, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PptVerdict {
    SeparableConsistent,
    Entangled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PptResult<T> {
    pub verdict: PptVerdict,
    pub min_eigenvalue: T,
    pub dim_left: usize,
    pub dim_right: usize,
    /// Whether a positive partial transpose proves separability (product
    /// dimension at most 6, i.e. 2x2 or 2x3). Negative verdicts are always
    /// conclusive.
    pub conclusive: bool,
}

/// Peres-Horodecki test: transpose the right side of `cut` and inspect the
/// smallest eigenvalue.
pub fn ppt_check<T: Real>(rho: &DensityMatrix<T>, cut: &Bipartition) -> Result<PptResult<T>> {
    rho.validate()?;
    let pt = rho.partial_transpose(cut)?;
    let min_eigenvalue = pt.hermitian_eigenvalues().first().copied().unwrap_or_else(T::zero);
    let side_dim = |side: Vec<usize>| side.iter().map(|&k| rho.factors[k].len()).product::<usize>();
    let (dim_left, dim_right) = (side_dim(cut.left()), side_dim(cut.right()));
    let verdict =
        if min_eigenvalue < -T::lit(T::MATRIX_TOL) { PptVerdict::Entangled } else { PptVerdict::SeparableConsistent };
    Ok(PptResult {
        verdict,
        min_eigenvalue,
        dim_left,
        dim_right,
        conclusive: verdict == PptVerdict::Entangled || dim_left * dim_right <= 6,
    })
}

impl<T: Real> SchmidtResult<T> {
    pub fn squared_sum(&self) -> T {
        self.singular_values.iter().fold(T::zero(), |acc, v| acc + *v * *v)
    }

    pub fn largest(&self) -> T {
        self.singular_values.first().copied().unwrap_or_else(T::zero)
    }
}
