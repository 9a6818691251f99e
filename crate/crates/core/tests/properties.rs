use std::collections::BTreeSet;

use proptest::prelude::*;

use molspec::assembly::{assemble_hamiltonian, SigmaAssignment, SigmaProfile};
use molspec::eigensolve::{count_below, solve_lowest, Method, SolveOptions};
use molspec::experiments::ground_state::strip_forms;
use molspec::experiments::stats::{wilson_interval, Z95};
use molspec::experiments::{classify_discrete, threshold_energy, Classification};
use molspec::geometry::{build_strip_mesh, snap_atoms, EdgeTag, StripSpec};
use molspec::randomness::{derive_stream, AtomConfiguration};
use molspec::separable_robin::robin_root;

fn class_rank(c: Classification) -> u8 {
    match c {
        Classification::Nonempty => 0,
        Classification::Undecided => 1,
        Classification::Empty => 2,
    }
}

proptest! {
    #[test]
    fn classification_is_monotone_in_e0(
        d in 0.2f64..3.0,
        e1 in 0.0f64..10.0,
        step in 0.0f64..5.0,
        err in 0.0f64..1.0,
        tau_frac in 0.0f64..0.2,
    ) {
        let t = threshold_energy(d);
        let (e1, e2) = (e1 * t / 4.9, (e1 + step) * t / 4.9);
        let tau = tau_frac * t;
        let (c1, c2) = (classify_discrete(e1, err, d, tau), classify_discrete(e2, err, d, tau));
        prop_assert!(class_rank(c1) <= class_rank(c2));
        if e1 + err >= t {
            prop_assert_ne!(c1, Classification::Nonempty);
        }
    }

    #[test]
    fn wilson_interval_brackets_estimate(n in 1usize..500, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).round() as usize;
        let w = wilson_interval(k, n, Z95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= w.lo && w.lo <= p + 1e-15);
        prop_assert!(p - 1e-15 <= w.hi && w.hi <= 1.0);
        prop_assert_eq!(w.lo > 0.0, k > 0);
    }

    #[test]
    fn snapping_stays_within_half_pitch(
        raw in proptest::collection::vec(0.0f64..20.0, 1..12),
        m in 2usize..40,
    ) {
        let h = 1.0 / m as f64;
        let mut atoms: Vec<f64> = raw.into_iter().map(|a| a + h / 2.0).collect();
        atoms.sort_by(f64::total_cmp);
        atoms.dedup();
        let s = snap_atoms(&atoms, h).unwrap();
        prop_assert!(s.max_error <= h / 2.0 + 1e-12);
        prop_assert!(s.positions.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(s.source.len(), atoms.len());
        for (a, &k) in atoms.iter().zip(&s.source) {
            prop_assert!((s.positions[k] - a).abs() <= h / 2.0 + 1e-12);
        }
    }

    #[test]
    fn strip_mesh_area_and_chain_lengths(
        d in prop::sample::select(vec![0.5f64, 1.0, 2.0]),
        m in 2usize..12,
        extra in 1usize..5,
        atom_cells in proptest::collection::btree_set(1usize..60, 0..4),
    ) {
        let l = d * (1 + extra) as f64;
        let spec = StripSpec::new(d, l, m).unwrap();
        let h = spec.h();
        let atoms: Vec<f64> = atom_cells.iter().map(|&k| k as f64 * h).collect();
        let mesh = build_strip_mesh(&spec, &atoms).unwrap();
        prop_assert!((mesh.area() - spec.area()).abs() <= 1e-12 * spec.area());
        let incidence = mesh.edge_incidence();
        for (k, &a) in atoms.iter().enumerate() {
            // clipped length of {x = a} ∪ {y = a} inside the truncated strip
            let one = (l.min(a + d) - (a - d).max(0.0)).max(0.0);
            let want = if a < l { 2.0 * one } else { 0.0 };
            let got = mesh.tagged_length(EdgeTag::Gamma(k));
            prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "a={} got {} want {}", a, got, want);
            for chain in mesh.chains(EdgeTag::Gamma(k)) {
                for e in chain {
                    let key = [e[0].min(e[1]), e[0].max(e[1])];
                    prop_assert_eq!(incidence.get(&key).copied(), Some(2));
                }
            }
        }
    }

    #[test]
    fn refinement_nests_nodes(m in 2usize..10, extra in 1usize..4) {
        let coarse = build_strip_mesh(&StripSpec::new(1.0, (1 + extra) as f64, m).unwrap(), &[]).unwrap();
        let fine = build_strip_mesh(&StripSpec::new(1.0, (1 + extra) as f64, 2 * m).unwrap(), &[]).unwrap();
        let fine_lattice: BTreeSet<[i64; 2]> = fine.lattice.iter().copied().collect();
        for p in &coarse.lattice {
            prop_assert!(fine_lattice.contains(&[2 * p[0], 2 * p[1]]));
        }
    }

    #[test]
    fn robin_root_monotone(l in 0.05f64..5.0, g in 0.0f64..1e3, dl in 0.01f64..1.0, dg in 0.01f64..100.0) {
        let base = robin_root(l, g);
        prop_assert!(robin_root(l, g + dg) > base);
        if g > 0.0 {
            prop_assert!(robin_root(l + dl, g) < base);
        }
        prop_assert!(base < (std::f64::consts::PI / (2.0 * l)).powi(2));
    }

    #[test]
    fn streams_are_pure(master in any::<u64>(), index in any::<u64>()) {
        prop_assert_eq!(derive_stream(master, index), derive_stream(master, index));
        let a = AtomConfiguration::sample(2.0, 3.0, master, index % 1000);
        let b = AtomConfiguration::sample(2.0, 3.0, master, index % 1000);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sigma_spelling_roundtrips(v0 in 0.0f64..1e6, b in 0.1f64..5.0, v1 in 0.0f64..1e6) {
        for p in [SigmaProfile::constant(v0), SigmaProfile::Piecewise { breakpoints: vec![b], values: vec![v0, v1] }, SigmaProfile::Infinite] {
            let back: SigmaProfile<f64> = p.to_string().parse().unwrap();
            prop_assert_eq!(back, p);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forms_and_counts_monotone_in_sigma(
        cells in proptest::collection::btree_set(1usize..20, 1..3),
        s_lo in 0.0f64..50.0,
        ds in 0.0f64..50.0,
        which in 0usize..3,
        coeffs in proptest::collection::vec(-1.0f64..1.0, 512),
    ) {
        let spec = StripSpec::new(1.0, 3.0, 4).unwrap();
        let atoms: Vec<f64> = cells.iter().map(|&k| k as f64 * 0.25).collect();
        let mesh = build_strip_mesh(&spec, &atoms).unwrap();
        let raise = |k: usize| if k == which % atoms.len() { s_lo + ds } else { s_lo };
        let lo = SigmaAssignment::PerAtom(vec![SigmaProfile::constant(s_lo); atoms.len()]);
        let hi = SigmaAssignment::PerAtom((0..atoms.len()).map(|k| SigmaProfile::constant(raise(k))).collect());
        let f_lo = assemble_hamiltonian(&mesh, &lo).unwrap();
        let f_hi = assemble_hamiltonian(&mesh, &hi).unwrap();
        let u: Vec<f64> = coeffs[..f_lo.n_dof()].to_vec();
        prop_assert!(f_hi.operator().quadratic_form(&u) >= f_lo.operator().quadratic_form(&u) - 1e-12);
        let level = threshold_energy(1.0) - 0.1;
        let n_lo = count_below(&f_lo.operator(), &f_lo.mass, level).unwrap();
        let n_hi = count_below(&f_hi.operator(), &f_hi.mass, level).unwrap();
        prop_assert!(n_hi <= n_lo);
    }

    #[test]
    fn reflection_leaves_spectrum_unchanged(cells in proptest::collection::btree_set(1usize..16, 0..3), s in 0.0f64..30.0) {
        let spec = StripSpec::new(1.0, 3.0, 4).unwrap();
        let atoms: Vec<f64> = cells.iter().map(|&k| k as f64 * 0.25).collect();
        let mesh = build_strip_mesh(&spec, &atoms).unwrap();
        let perm = mesh.reflection_permutation().expect("strip is symmetric");
        let forms = assemble_hamiltonian(&mesh, &SigmaAssignment::Uniform(SigmaProfile::constant(s))).unwrap();
        let a = forms.operator();
        // the permuted operator must equal the original entrywise
        for (i, j, v) in a.triplets() {
            let (pi, pj) = (perm[forms.free_nodes[i]], perm[forms.free_nodes[j]]);
            let (ri, rj) = (forms.dof_map[pi].unwrap(), forms.dof_map[pj].unwrap());
            prop_assert!((a.get(ri, rj) - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn inertia_matches_dense_oracle(s in 1.0f64..30.0, cells in proptest::collection::btree_set(1usize..12, 0..3)) {
        let spec = StripSpec::new(1.0, 2.0, 4).unwrap();
        let atoms: Vec<f64> = cells.iter().map(|&k| k as f64 * 0.25).collect();
        let sigma = SigmaAssignment::Uniform(SigmaProfile::constant(2.0));
        let (_, forms, _, _) = strip_forms(&spec, &atoms, &sigma).unwrap();
        let n = forms.n_dof();
        let all = solve_lowest(&forms.operator(), &forms.mass, &SolveOptions::lowest(n).with_method(Method::Dense)).unwrap();
        let gap_ok = all.eigenvalues.iter().all(|l| (l - s).abs() > 1e-6);
        prop_assume!(gap_ok);
        let want = all.eigenvalues.iter().filter(|&&l| l < s).count();
        prop_assert_eq!(count_below(&forms.operator(), &forms.mass, s).unwrap(), want);
    }
}
