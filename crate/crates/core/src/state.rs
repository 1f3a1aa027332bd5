//! Sparse superpositions of fixed-register basis states and the operations
//! that respect (or expose violations of) superselection.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::charge::{ChargeKind, SpeciesRegistry};
use crate::error::{Error, Result, SuperselectionViolation};
use crate::fock::{sector_of, total_charge, BasisState, RegisterLabel, SectorIndex};
use crate::scalar::{unit_phase, Real};

/// A finite superposition over basis states that all have `n` registers.
///
/// Amplitudes smaller than `T::PRUNE_TOL` are never stored, so an empty term
/// map is exactly the zero vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "StateFile", into = "StateFile")]
pub struct StateVector<T> {
    n: usize,
    terms: BTreeMap<BasisState, Complex<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn basis(b: BasisState) -> Self {
        let n = b.registers();
        let mut terms = BTreeMap::new();
        terms.insert(b, Complex::new(T::one(), T::zero()));
        Self { n, terms }
    }

    /// Sums the given terms (repeated keys accumulate) and prunes.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (BasisState, Complex<T>)>) -> Result<Self> {
        let mut out = Self::zero(n);
        for (b, amp) in terms {
            if b.registers() != n {
                return Err(Error::Shape(format!("basis state {b} has {} registers, expected {n}", b.registers())));
            }
            *out.terms.entry(b).or_insert_with(Complex::zero) += amp;
        }
        out.prune();
        Ok(out)
    }

    /// Real-amplitude convenience constructor.
    pub fn from_real(terms: &[(f64, BasisState)]) -> Result<Self> {
        let n = terms.first().map(|(_, b)| b.registers()).unwrap_or(1);
        Self::from_terms(n, terms.iter().map(|(a, b)| (b.clone(), Complex::new(T::lit(*a), T::zero()))))
    }

    fn prune(&mut self) {
        let tol = T::lit(T::PRUNE_TOL);
        self.terms.retain(|_, a| a.norm() >= tol);
    }

    pub fn registers(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn amplitude(&self, b: &BasisState) -> Complex<T> {
        self.terms.get(b).copied().unwrap_or_else(Complex::zero)
    }

    /// Terms in canonical basis order.
    pub fn iter(&self) -> impl Iterator<Item = (&BasisState, &Complex<T>)> {
        self.terms.iter()
    }

    pub fn norm_sqr(&self) -> T {
        self.terms.values().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - T::one()).abs() <= T::lit(T::NORM_TOL)
    }

    pub fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::Domain(format!("state is not normalized (norm {})", self.norm())))
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Domain("cannot normalize the zero state".into()));
        }
        Ok(self.scaled(Complex::new(T::one() / self.norm(), T::zero())))
    }

    pub fn scaled(&self, factor: Complex<T>) -> Self {
        let mut out = Self { n: self.n, terms: self.terms.iter().map(|(b, a)| (b.clone(), *a * factor)).collect() };
        out.prune();
        out
    }

    /// Applies `f` to each amplitude (with its basis state) and prunes.
    pub fn map_amplitudes(&self, mut f: impl FnMut(&BasisState, Complex<T>) -> Complex<T>) -> Self {
        let mut out = Self { n: self.n, terms: self.terms.iter().map(|(b, a)| (b.clone(), f(b, *a))).collect() };
        out.prune();
        out
    }

    /// Largest termwise amplitude difference between two states.
    pub fn max_deviation(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for (b, a) in &self.terms {
            worst = worst.max((*a - other.amplitude(b)).norm());
        }
        for (b, a) in &other.terms {
            if !self.terms.contains_key(b) {
                worst = worst.max(a.norm());
            }
        }
        worst
    }

    /// Checks every label against the registry (species known, spin in range).
    pub fn check_labels(&self, registry: &SpeciesRegistry) -> Result<()> {
        self.terms.keys().try_for_each(|b| b.check(registry))
    }

    /// Per-register sorted list of labels that occur in the support.
    pub fn local_supports(&self) -> Vec<Vec<RegisterLabel>> {
        let mut out: Vec<std::collections::BTreeSet<RegisterLabel>> = vec![Default::default(); self.n];
        for b in self.terms.keys() {
            for (r, l) in b.labels().iter().enumerate() {
                out[r].insert(l.clone());
            }
        }
        out.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }

    /// Parses the state file format; renormalizes only when asked.
    pub fn from_json(text: &str, normalize: bool) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        if normalize {
            s.normalized()
        } else {
            Ok(s)
        }
    }
}

/// Linear combination `sum_k c_k |s_k>`.
pub fn superpose<T: Real>(pairs: &[(Complex<T>, &StateVector<T>)]) -> Result<StateVector<T>> {
    let Some((_, first)) = pairs.first() else {
        return Err(Error::Shape("superpose needs at least one state".into()));
    };
    let n = first.n;
    if let Some((_, bad)) = pairs.iter().find(|(_, s)| s.n != n) {
        return Err(Error::Shape(format!("mixed register counts {n} and {}", bad.n)));
    }
    StateVector::from_terms(n, pairs.iter().flat_map(|(c, s)| s.terms.iter().map(move |(b, a)| (b.clone(), *c * *a))))
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner_product<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> Result<Complex<T>> {
    if a.n != b.n {
        return Err(Error::Shape(format!("inner product of {}- and {}-register states", a.n, b.n)));
    }
    let (small, large, flip) = if a.len() <= b.len() { (a, b, false) } else { (b, a, true) };
    let mut acc = Complex::zero();
    for (basis, x) in &small.terms {
        if let Some(y) = large.terms.get(basis) {
            acc += if flip { y.conj() * x } else { x.conj() * y };
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorPart<T> {
    pub state: StateVector<T>,
    /// Squared norm of `state`.
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorDecomposition<T> {
    pub parts: BTreeMap<SectorIndex, SectorPart<T>>,
}

impl<T: Real> SectorDecomposition<T> {
    pub fn sectors(&self) -> Vec<SectorIndex> {
        self.parts.keys().cloned().collect()
    }

    pub fn total_weight(&self) -> T {
        self.parts.values().fold(T::zero(), |acc, p| acc + p.weight)
    }

    /// Sum of all parts; reproduces the decomposed state exactly.
    pub fn reassemble(&self, n: usize) -> StateVector<T> {
        let mut terms = BTreeMap::new();
        for part in self.parts.values() {
            terms.extend(part.state.terms.iter().map(|(b, a)| (b.clone(), *a)));
        }
        StateVector { n, terms }
    }
}

/// Groups the terms of `s` by gauged total charge.
pub fn sector_decompose<T: Real>(registry: &SpeciesRegistry, s: &StateVector<T>) -> Result<SectorDecomposition<T>> {
    let mut grouped: BTreeMap<SectorIndex, BTreeMap<BasisState, Complex<T>>> = BTreeMap::new();
    for (b, a) in &s.terms {
        grouped.entry(sector_of(registry, b)?).or_default().insert(b.clone(), *a);
    }
    let parts = grouped
        .into_iter()
        .map(|(q, terms)| {
            let state = StateVector { n: s.n, terms };
            let weight = state.norm_sqr();
            (q, SectorPart { state, weight })
        })
        .collect();
    Ok(SectorDecomposition { parts })
}

/// The unique sector of `s`, or a report of every sector it touches.
pub fn validate_superselection<T: Real>(registry: &SpeciesRegistry, s: &StateVector<T>) -> Result<SectorIndex> {
    if s.is_zero() {
        return Err(Error::Domain("the zero state belongs to no sector".into()));
    }
    let dec = sector_decompose(registry, s)?;
    if dec.parts.len() == 1 {
        return Ok(dec.parts.into_keys().next().expect("one part"));
    }
    Err(Error::Superselection(SuperselectionViolation {
        sectors: dec.parts.into_iter().map(|(q, p)| (q, p.weight.as_f64())).collect(),
    }))
}

/// Abelian gauge action: each term picks up `exp(i * q * theta)`, where `q`
/// is the term's total charge in the named gauged component.
pub fn apply_u1_gauge<T: Real>(
    registry: &SpeciesRegistry,
    s: &StateVector<T>,
    component: &str,
    theta: T,
) -> Result<StateVector<T>> {
    let idx = registry.component_index(component)?;
    if registry.charge_specs()[idx].kind != ChargeKind::Gauged {
        return Err(Error::Config(format!("component `{component}` is global, not gauged")));
    }
    let mut terms = BTreeMap::new();
    for (b, a) in &s.terms {
        let q = total_charge(registry, b)?.components()[idx];
        terms.insert(b.clone(), *a * unit_phase(T::from_i64(q).expect("charge fits scalar") * theta));
    }
    Ok(StateVector { n: s.n, terms })
}

/// Species-level charge conjugation; spins and amplitudes are untouched.
pub fn charge_conjugate<T: Real>(registry: &SpeciesRegistry, s: &StateVector<T>) -> Result<StateVector<T>> {
    let mut terms = BTreeMap::new();
    for (b, a) in &s.terms {
        let labels = b
            .labels()
            .iter()
            .map(|l| Ok(RegisterLabel { species: registry.get(&l.species)?.conjugate_id.clone(), spin: l.spin }))
            .collect::<Result<Vec<_>>>()?;
        terms.insert(BasisState::new(labels), *a);
    }
    Ok(StateVector { n: s.n, terms })
}

/// On-disk form of a state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub n: usize,
    pub terms: Vec<TermFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermFile {
    pub labels: Vec<RegisterLabel>,
    pub re: f64,
    pub im: f64,
}

impl<T: Real> From<StateVector<T>> for StateFile {
    fn from(s: StateVector<T>) -> Self {
        StateFile {
            n: s.n,
            terms: s
                .terms
                .into_iter()
                .map(|(b, a)| TermFile { labels: b.labels().to_vec(), re: a.re.as_f64(), im: a.im.as_f64() })
                .collect(),
        }
    }
}

impl<T: Real> TryFrom<StateFile> for StateVector<T> {
    type Error = Error;

    fn try_from(file: StateFile) -> Result<Self> {
        if file.n == 0 {
            return Err(Error::Shape("state file declares n = 0".into()));
        }
        let mut terms = Vec::with_capacity(file.terms.len());
        for t in file.terms {
            if t.labels.len() != file.n {
                return Err(Error::Shape(format!("term has {} labels, expected n = {}", t.labels.len(), file.n)));
            }
            if !t.re.is_finite() || !t.im.is_finite() {
                return Err(Error::Domain("non-finite amplitude".into()));
            }
            terms.push((BasisState::new(t.labels), Complex::new(T::lit(t.re), T::lit(t.im))));
        }
        StateVector::from_terms(file.n, terms)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    use super::*;
    use crate::charge::registries::*;

    type S = StateVector<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn ket(ids: &[&str]) -> S {
        S::basis(BasisState::of_species(ids))
    }

    fn bell(sign: f64) -> S {
        S::from_real(&[
            (FRAC_1_SQRT_2, BasisState::of_species(&["e-", "e+"])),
            (sign * FRAC_1_SQRT_2, BasisState::of_species(&["e+", "e-"])),
        ])
        .unwrap()
    }

    fn forbidden() -> S {
        S::from_real(&[
            (FRAC_1_SQRT_2, BasisState::of_species(&["e-", "e-"])),
            (FRAC_1_SQRT_2, BasisState::of_species(&["e+", "e+"])),
        ])
        .unwrap()
    }

    #[test]
    fn superpose_examples() {
        let a = ket(&["e-", "e+"]);
        let b = ket(&["e+", "e-"]);
        assert_eq!(superpose(&[(c(1.0, 0.0), &a), (c(0.0, 0.0), &b)]).unwrap(), a);
        let plus = superpose(&[(c(FRAC_1_SQRT_2, 0.0), &a), (c(FRAC_1_SQRT_2, 0.0), &b)]).unwrap();
        assert_eq!(plus, bell(1.0));
        let gone = superpose(&[(c(FRAC_1_SQRT_2, 0.0), &a), (c(-FRAC_1_SQRT_2, 0.0), &a)]).unwrap();
        assert!(gone.is_zero());
        assert!(matches!(superpose(&[(c(1.0, 0.0), &a), (c(1.0, 0.0), &ket(&["e-"]))]), Err(Error::Shape(_))));
    }

    #[test]
    fn inner_product_examples() {
        let (p, m) = (bell(1.0), bell(-1.0));
        assert!(inner_product(&p, &m).unwrap().norm() < 1e-15);
        assert!((inner_product(&p, &p).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(inner_product(&ket(&["e-", "e+"]), &ket(&["e+", "e-"])).unwrap(), c(0.0, 0.0));
        let x = ket(&["e-", "e+"]).scaled(c(0.0, 2.0));
        assert_eq!(inner_product(&x, &ket(&["e-", "e+"])).unwrap(), c(0.0, -2.0));
        assert!(matches!(inner_product(&p, &ket(&["e-"])), Err(Error::Shape(_))));
    }

    #[test]
    fn sector_decompose_examples() {
        let reg = electron_positron(1);
        let d = sector_decompose(&reg, &bell(1.0)).unwrap();
        assert_eq!(d.sectors(), vec![SectorIndex::new(vec![0])]);
        assert!((d.total_weight() - 1.0).abs() < 1e-15);

        let d = sector_decompose(&reg, &forbidden()).unwrap();
        assert_eq!(d.sectors(), vec![SectorIndex::new(vec![-2]), SectorIndex::new(vec![2])]);
        for part in d.parts.values() {
            assert!((part.weight - 0.5).abs() < 1e-15);
        }
        assert_eq!(d.reassemble(2), forbidden());
        assert!(sector_decompose(&reg, &S::zero(2)).unwrap().parts.is_empty());
    }

    #[test]
    fn validate_superselection_examples() {
        let reg = electron_positron(1);
        assert_eq!(validate_superselection(&reg, &bell(1.0)).unwrap(), SectorIndex::new(vec![0]));
        match validate_superselection(&reg, &forbidden()) {
            Err(Error::Superselection(v)) => {
                let sectors: Vec<_> = v.sectors.iter().map(|(q, _)| q.charges()[0]).collect();
                assert_eq!(sectors, vec![-2, 2]);
                assert!(v.sectors.iter().all(|(_, w)| (w - 0.5).abs() < 1e-15));
            }
            other => panic!("expected violation, got {other:?}"),
        }
        let kaons = neutral_kaons();
        let meson = S::from_terms(
            1,
            [(BasisState::of_species(&["K0"]), c(0.6, 0.0)), (BasisState::of_species(&["K0bar"]), c(0.0, 0.8))],
        )
        .unwrap();
        assert_eq!(validate_superselection(&kaons, &meson).unwrap(), SectorIndex::new(vec![0]));
        assert!(matches!(validate_superselection(&reg, &S::zero(2)), Err(Error::Domain(_))));
    }

    #[test]
    fn gauge_examples() {
        let reg = electron_positron(1);
        for theta in [0.0, 0.3, PI, -2.0] {
            let p = bell(1.0);
            assert_eq!(apply_u1_gauge(&reg, &p, "electric", theta).unwrap(), p);
            let mm = ket(&["e-", "e-"]);
            let g = apply_u1_gauge(&reg, &mm, "electric", theta).unwrap();
            let expected = c((-2.0 * theta).cos(), (-2.0 * theta).sin());
            assert!((g.amplitude(&BasisState::of_species(&["e-", "e-"])) - expected).norm() < 1e-15);
        }
        let g = apply_u1_gauge(&reg, &forbidden(), "electric", PI / 2.0).unwrap();
        let minus = g.amplitude(&BasisState::of_species(&["e-", "e-"]));
        let plus = g.amplitude(&BasisState::of_species(&["e+", "e+"]));
        assert!((minus - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((plus - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        // At a generic angle the two sectors dephase relative to each other.
        let g = apply_u1_gauge(&reg, &forbidden(), "electric", 0.4).unwrap();
        let rel = inner_product(&forbidden(), &g).unwrap();
        assert!((rel.norm() - 1.0).abs() > 1e-3);
        assert!((g.norm() - 1.0).abs() < 1e-12);

        let kaons = neutral_kaons();
        assert!(matches!(apply_u1_gauge(&kaons, &ket(&["K0"]), "strangeness", 1.0), Err(Error::Config(_))));
        assert!(matches!(apply_u1_gauge(&kaons, &ket(&["K0"]), "color", 1.0), Err(Error::UnknownComponent(_))));
    }

    #[test]
    fn conjugation_examples() {
        let reg = qed(1);
        assert!(charge_conjugate(&reg, &bell(1.0)).unwrap().max_deviation(&bell(1.0)) <= 1e-12);
        assert!(charge_conjugate(&reg, &bell(-1.0)).unwrap().max_deviation(&bell(-1.0).scaled(c(-1.0, 0.0))) <= 1e-12);
        assert_eq!(charge_conjugate(&reg, &ket(&["gamma"])).unwrap(), ket(&["gamma"]));
        let c_forbidden = charge_conjugate(&reg, &ket(&["e-", "e-"])).unwrap();
        assert_eq!(validate_superselection(&reg, &c_forbidden).unwrap(), SectorIndex::new(vec![2]));
    }

    #[test]
    fn state_file_roundtrip_and_validation() {
        let s = S::from_terms(
            2,
            [
                (BasisState::of(&[("e-", 0), ("e+", 1)]), c(0.1 + 0.2, -1.0 / 3.0)),
                (BasisState::of(&[("e+", 1), ("e-", 0)]), c(std::f64::consts::E / 7.0, 1e-11)),
            ],
        )
        .unwrap();
        let back = S::from_json(&s.to_json(), false).unwrap();
        assert_eq!(back, s);
        for (b, a) in s.iter() {
            let r = back.amplitude(b);
            assert_eq!(a.re.to_bits(), r.re.to_bits());
            assert_eq!(a.im.to_bits(), r.im.to_bits());
        }

        let text =
            r#"{"n":2,"terms":[{"labels":[{"species":"e-","spin":0},{"species":"e+","spin":1}],"re":3.0,"im":4.0}]}"#;
        let raw = S::from_json(text, false).unwrap();
        assert_eq!(raw.norm(), 5.0);
        assert!((S::from_json(text, true).unwrap().norm() - 1.0).abs() < 1e-15);

        let short = r#"{"n":2,"terms":[{"labels":[{"species":"e-","spin":0}],"re":1.0,"im":0.0}]}"#;
        assert!(matches!(S::from_json(short, false), Err(Error::Json(_))));
    }

    #[test]
    fn f32_states_work_too() {
        let p = StateVector::<f32>::from_real(&[
            (FRAC_1_SQRT_2, BasisState::of_species(&["e-", "e+"])),
            (FRAC_1_SQRT_2, BasisState::of_species(&["e+", "e-"])),
        ])
        .unwrap();
        assert!(p.is_normalized());
        let reg = electron_positron(1);
        let g = apply_u1_gauge(&reg, &p, "electric", 1.0f32).unwrap();
        assert!(g.max_deviation(&p) < 1e-6);
    }
}
