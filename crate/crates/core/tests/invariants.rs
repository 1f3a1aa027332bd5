use std::collections::BTreeMap;

use proptest::prelude::*;
use superselect_core::registries::{electron_positron, qed};
use superselect_core::*;

type S = StateVector<f64>;

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

/// Random superposition over the given product states; `picks` selects
/// basis states by index and supplies their amplitudes.
fn state_from(basis: &[BasisState], picks: &[(usize, f64, f64)]) -> Option<S> {
    let n = basis[0].registers();
    let terms = picks.iter().map(|&(i, re, im)| (basis[i % basis.len()].clone(), c(re, im)));
    let s = S::from_terms(n, terms).ok()?;
    if s.norm() < 1e-3 {
        return None;
    }
    s.normalized().ok()
}

fn picks() -> impl Strategy<Value = Vec<(usize, f64, f64)>> {
    prop::collection::vec((0usize..10_000, -1.0f64..1.0, -1.0f64..1.0), 1..12)
}

/// Single-sector random state of the spin-1/2 QED registry.
fn sector_state() -> impl Strategy<Value = (usize, i64, Vec<(usize, f64, f64)>)> {
    (1usize..=3, -1i64..=1, picks())
}

fn build_sector_state(reg: &SpeciesRegistry, n: usize, q: i64, p: &[(usize, f64, f64)]) -> Option<S> {
    let basis = sector_basis(reg, n, &SectorIndex::new(vec![q]), None).ok()?;
    if basis.is_empty() {
        return None;
    }
    state_from(&basis, p)
}

/// Applies a unitary to the label space of one register.
fn local_unitary(s: &S, register: usize, space: &[RegisterLabel], u: &CMatrix<f64>) -> S {
    let mut terms = Vec::new();
    for (b, a) in s.iter() {
        let col = space.iter().position(|l| l == b.label(register)).unwrap();
        for (row, label) in space.iter().enumerate() {
            terms.push((b.with_label(register, label.clone()), *a * u[(row, col)]));
        }
    }
    S::from_terms(s.registers(), terms).unwrap()
}

/// Unitary from a product of plane rotations with phases.
fn random_unitary(dim: usize, params: &[(f64, f64)]) -> CMatrix<f64> {
    let mut u = CMatrix::identity(dim);
    let mut k = 0;
    for p in 0..dim {
        for q in (p + 1)..dim {
            let (theta, phi) = params[k % params.len()];
            k += 1;
            let mut g = CMatrix::identity(dim);
            let e = c(phi.cos(), phi.sin());
            g[(p, p)] = c(theta.cos(), 0.0);
            g[(p, q)] = e * theta.sin();
            g[(q, p)] = -e.conj() * theta.sin();
            g[(q, q)] = c(theta.cos(), 0.0);
            u = g.matmul(&u);
        }
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn gauge_action_is_a_global_phase_in_one_sector((n, q, p) in sector_state(), theta in -10.0f64..10.0) {
        let reg = qed(2);
        let Some(s) = build_sector_state(&reg, n, q, &p) else { return Ok(()) };
        let g = apply_u1_gauge(&reg, &s, "electric", theta).unwrap();
        let phase = c((q as f64 * theta).cos(), (q as f64 * theta).sin());
        prop_assert!(g.max_deviation(&s.scaled(phase)) <= 1e-12);
        let before = sector_decompose(&reg, &s).unwrap();
        let after = sector_decompose(&reg, &g).unwrap();
        prop_assert_eq!(before.sectors(), after.sectors());
        for (k, part) in &before.parts {
            prop_assert!((part.weight - after.parts[k].weight).abs() <= 1e-12);
        }
    }

    #[test]
    fn gauge_preserves_sector_weights_of_mixtures(p in picks(), n in 1usize..=3, theta in -4.0f64..4.0) {
        let reg = qed(1);
        let basis = enumerate_basis(&reg, n, None).unwrap();
        let Some(s) = state_from(&basis, &p) else { return Ok(()) };
        let g = apply_u1_gauge(&reg, &s, "electric", theta).unwrap();
        prop_assert!((g.norm() - s.norm()).abs() <= 1e-12);
        let before = sector_decompose(&reg, &s).unwrap();
        let after = sector_decompose(&reg, &g).unwrap();
        for (k, part) in &before.parts {
            prop_assert!((part.weight - after.parts[k].weight).abs() <= 1e-12);
        }
        prop_assert!((before.total_weight() - s.norm_sqr()).abs() <= 1e-9);
        prop_assert_eq!(before.reassemble(n), s);
    }

    #[test]
    fn conjugation_is_an_involution_flipping_sectors((n, q, p) in sector_state()) {
        let reg = qed(2);
        let Some(s) = build_sector_state(&reg, n, q, &p) else { return Ok(()) };
        let cs = charge_conjugate(&reg, &s).unwrap();
        prop_assert_eq!(charge_conjugate(&reg, &cs).unwrap(), s.clone());
        let sector = validate_superselection(&reg, &s).unwrap();
        prop_assert_eq!(validate_superselection(&reg, &cs).unwrap(), sector.negated());
    }

    #[test]
    fn superpose_is_linear(pa in picks(), pb in picks(), x in (-2.0f64..2.0, -2.0f64..2.0), y in (-2.0f64..2.0, -2.0f64..2.0)) {
        let reg = electron_positron(2);
        let basis = enumerate_basis(&reg, 2, None).unwrap();
        let (Some(a), Some(b)) = (state_from(&basis, &pa), state_from(&basis, &pb)) else { return Ok(()) };
        let (x, y) = (c(x.0, x.1), c(y.0, y.1));
        let combined = superpose(&[(x, &a), (y, &b)]).unwrap();
        for basis_state in &basis {
            let expected = x * a.amplitude(basis_state) + y * b.amplitude(basis_state);
            prop_assert!((combined.amplitude(basis_state) - expected).norm() <= 1e-12);
        }
        let distributed = superpose(&[(x, &a), (x, &b)]).unwrap();
        let summed = superpose(&[(c(1.0, 0.0), &a), (c(1.0, 0.0), &b)]).unwrap().scaled(x);
        prop_assert!(distributed.max_deviation(&summed) <= 1e-12);
        let ip = inner_product(&combined, &a).unwrap();
        let manual = x.conj() * inner_product(&a, &a).unwrap() + y.conj() * inner_product(&b, &a).unwrap();
        prop_assert!((ip - manual).norm() <= 1e-12);
    }

    #[test]
    fn entropy_bounds_and_schmidt_norm(p in picks(), n in 2usize..=3) {
        let reg = electron_positron(2);
        let basis = enumerate_basis(&reg, n, None).unwrap();
        let Some(s) = state_from(&basis, &p) else { return Ok(()) };
        for cut in Bipartition::all(n) {
            let r = schmidt(&s, &cut).unwrap();
            prop_assert!((r.squared_sum() - 1.0).abs() <= 1e-9);
            prop_assert!(r.singular_values.windows(2).all(|w| w[0] >= w[1]));
            let h = entanglement_entropy(&s, &cut).unwrap();
            let dim = |side: Vec<usize>| 4usize.pow(side.len() as u32);
            let bound = (dim(cut.left()).min(dim(cut.right())) as f64).ln();
            prop_assert!(h >= 0.0 && h <= bound + 1e-12);
        }
    }

    #[test]
    fn local_unitaries_leave_schmidt_values_unchanged(
        p in picks(),
        register in 0usize..3,
        params in prop::collection::vec((0.0f64..6.3, 0.0f64..6.3), 6),
    ) {
        let reg = electron_positron(2);
        let basis = enumerate_basis(&reg, 3, None).unwrap();
        let Some(s) = state_from(&basis, &p) else { return Ok(()) };
        let space = label_space(&reg, None).unwrap();
        let u = random_unitary(space.len(), &params);
        let t = local_unitary(&s, register, &space, &u);
        for cut in Bipartition::all(3) {
            let a = schmidt(&s, &cut).unwrap().singular_values;
            let b = schmidt(&t, &cut).unwrap().singular_values;
            for k in 0..a.len().max(b.len()) {
                let x = a.get(k).copied().unwrap_or(0.0);
                let y = b.get(k).copied().unwrap_or(0.0);
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn marginal_is_a_unit_trace_density_matrix(p in picks()) {
        let reg = electron_positron(2);
        let basis = sector_basis(&reg, 2, &SectorIndex::new(vec![0]), None).unwrap();
        let Some(s) = state_from(&basis, &p) else { return Ok(()) };
        let rho = internal_charge_marginal(&reg, &s).unwrap();
        prop_assert!((rho.entries().trace().re - 1.0).abs() <= 1e-9);
        prop_assert!(rho.entries().hermiticity_defect() <= 1e-10);
        prop_assert!(rho.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn measurement_conserves_charge_and_probability((n, q, p) in sector_state(), register in 0usize..3) {
        let reg = qed(2);
        let Some(s) = build_sector_state(&reg, n, q, &p) else { return Ok(()) };
        let register = register % n;
        for obs in [SpinObservable::spin_z(&reg, register), SpinObservable::spin_x(&reg, register)] {
            let records = measure_spin(&reg, &s, &obs).unwrap();
            let total: f64 = records.iter().map(|r| r.probability).sum();
            prop_assert!((total - 1.0).abs() <= 1e-9);
            for r in &records {
                prop_assert!(r.post_state.is_normalized());
                prop_assert_eq!(charge_readout(&reg, &r.post_state).unwrap(), SectorIndex::new(vec![q]));
                let again = measure_spin(&reg, &r.post_state, &obs).unwrap();
                prop_assert_eq!(again.len(), 1);
                prop_assert_eq!(again[0].outcome, r.outcome);
            }
        }
    }

    #[test]
    fn state_files_roundtrip_bit_exactly(p in picks(), n in 1usize..=3) {
        let reg = electron_positron(2);
        let basis = enumerate_basis(&reg, n, None).unwrap();
        let Some(s) = state_from(&basis, &p) else { return Ok(()) };
        let back = S::from_json(&s.to_json(), false).unwrap();
        for (b, a) in s.iter() {
            let r = back.amplitude(b);
            prop_assert_eq!(a.re.to_bits(), r.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), r.im.to_bits());
        }
        prop_assert_eq!(back.len(), s.len());
    }
}

#[test]
fn total_charge_matches_folded_additions() {
    let reg = qed(1);
    for b in enumerate_basis(&reg, 3, None).unwrap() {
        let folded = b
            .labels()
            .iter()
            .map(|l| reg.get(&l.species).unwrap().charges.clone())
            .reduce(|acc, q| add_charges(&acc, &q).unwrap())
            .unwrap();
        assert_eq!(total_charge(&reg, &b).unwrap(), folded);
    }
}

#[test]
fn sector_bases_partition_every_enumeration() {
    let reg = qed(2);
    for n in 1..=3 {
        let all = enumerate_basis(&reg, n, None).unwrap();
        let mut seen: BTreeMap<BasisState, usize> = BTreeMap::new();
        for q in -(n as i64)..=(n as i64) {
            for b in sector_basis(&reg, n, &SectorIndex::new(vec![q]), None).unwrap() {
                *seen.entry(b).or_default() += 1;
            }
        }
        assert_eq!(seen.len(), all.len());
        assert!(seen.values().all(|&k| k == 1));
    }
}

#[test]
fn builder_outputs_stay_orthonormal_and_spanning_for_spinful_sectors() {
    let reg = electron_positron(2);
    for n in 2..=3 {
        for q in [-1i64, 0, 1] {
            let sector = SectorIndex::new(vec![q]);
            if sector_basis(&reg, n, &sector, None).unwrap().is_empty() {
                continue;
            }
            let basis =
                build_packaged_entangled_basis(&reg, n, &sector, None, &BuilderConfigF64::with_seed(3)).unwrap();
            let report = verify_basis(&basis, &reg).unwrap();
            assert!(report.is_clean(), "n={n} q={q}: {:?}", report.findings);
            assert!(report.max_gram_deviation <= 1e-9);
            assert!(report.span_deviation <= 1e-8);
        }
    }
}

#[test]
fn f32_pipeline_agrees_with_f64() {
    let reg = electron_positron(1);
    let q = SectorIndex::new(vec![0]);
    let b64 = build_packaged_entangled_basis(&reg, 4, &q, None, &BuilderConfig::<f64>::default()).unwrap();
    let b32 = build_packaged_entangled_basis(&reg, 4, &q, None, &BuilderConfig::<f32>::default()).unwrap();
    assert!(!b32.degenerate);
    assert!(verify_basis(&b32, &reg).unwrap().is_clean());
    assert_eq!(b64.vectors.len(), b32.vectors.len());
}
