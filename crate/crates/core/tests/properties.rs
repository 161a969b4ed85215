use std::f64::consts::PI;

use proptest::prelude::*;
use segflow_core::grid::{dirichlet_energy, laplacian, line_mass};
use segflow_core::relax::{energy, relax_to_equilibrium, rescale_solution, step_imex, RelaxOptions};
use segflow_core::almgren::{compute_series, coupling_accumulation_excess};
use segflow_core::snapshot::{read_state, write_state};
use segflow_core::spectra::{circle_energy, circle_mass, minimize_l, CircleProblem};
use segflow_core::symmetry::symmetrize;
use segflow_core::*;

fn field_from(g: CylinderGrid, kind: XbcKind, vals: &[f64]) -> Field {
    Field::new(g, kind, vals.to_vec()).unwrap()
}

fn trig(p: u32, cos: bool) -> impl Fn(f64, f64) -> f64 {
    move |_x, y| if cos { (p as f64 * y).cos() } else { (p as f64 * y).sin() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn line_mass_is_exact_on_fourier_products(p in 0u32..15, q in 0u32..15, cp: bool, cq: bool) {
        // ny = 64 on the 2 pi circle: exact while p + q < 32.
        let g = CylinderGrid::new(0.0, 1.0, 2, 8, 64).unwrap();
        let f = Field::from_fn(g, XbcKind::Dirichlet, trig(p, cp)).unwrap();
        let h = Field::from_fn(g, XbcKind::Dirichlet, trig(q, cq)).unwrap();
        let want = match (p == q, cp, cq) {
            (true, true, true) if p == 0 => 2.0 * PI,
            (true, true, true) => PI,
            (true, false, false) if p != 0 => PI,
            _ => 0.0,
        };
        let got = line_mass(&f, &h, 3).unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * (2.0 * PI), "p={p} q={q} got {got} want {want}");
    }

    #[test]
    fn symmetrize_is_idempotent_and_keeps_mass(vals in prop::collection::vec(0.0f64..5.0, 2 * 17 * 16)) {
        let g = CylinderGrid::new(0.0, 1.0, 2, 16, 16).unwrap();
        let n = g.len();
        let mut u = vals[..n].to_vec();
        let mut v = vals[n..].to_vec();
        // Traces must already be invariant: use a symmetric right column.
        for m in 0..g.ny {
            u[g.idx(g.nx, m)] = 1.0;
            v[g.idx(g.nx, m)] = 1.0;
        }
        let s = StateK::new(vec![field_from(g, XbcKind::NeumannLeft, &u), field_from(g, XbcKind::NeumannLeft, &v)], 0.0).unwrap();
        let grp = SymmetryGroup::shift_reflect(&g);
        let once = symmetrize(&s, &grp).unwrap();
        let twice = symmetrize(&once, &grp).unwrap();
        prop_assert_eq!(&once, &twice);
        let total = |st: &StateK| st.components.iter().flat_map(|c| c.values()).sum::<f64>();
        prop_assert!((total(&once) - total(&s)).abs() <= 1e-12 * total(&s));
    }

    #[test]
    fn dirichlet_energy_is_monotone_and_additive(vals in prop::collection::vec(-2.0f64..2.0, 2 * 13 * 8), cut in 1usize..5) {
        let g = CylinderGrid::new(0.0, 1.5, 2, 12, 8).unwrap();
        let n = g.len();
        let s = StateK::new(vec![field_from(g, XbcKind::Dirichlet, &vals[..n]), field_from(g, XbcKind::Dirichlet, &vals[n..])], 0.0).unwrap();
        let e: Vec<f64> = (0..=g.nx).map(|j| dirichlet_energy(&s, j, 2.0).unwrap()).collect();
        prop_assert!(e.windows(2).all(|w| w[1] >= w[0]));
        // The piece right of `cut`, as a state of its own, carries the rest.
        let sub_grid = CylinderGrid::new(g.x(cut), g.b, 2, g.nx - cut, g.ny).unwrap();
        let sub = StateK::new(
            s.components.iter().map(|c| field_from(sub_grid, XbcKind::Dirichlet, &c.values()[cut * g.ny..])).collect(),
            0.0,
        ).unwrap();
        let right = dirichlet_energy(&sub, sub_grid.nx, 2.0).unwrap();
        prop_assert!((e[cut] + right - e[g.nx]).abs() <= 1e-12 * e[g.nx].max(1e-300));
    }

    #[test]
    fn scaled_gamma_samples_and_frequency(lambda in prop::sample::select(vec![0.5, 1.0, 2.0, 4.0]), r in -1.0f64..1.0) {
        let m = HarmonicModel::scaled(HarmonicModel::Gamma, lambda);
        for (x, y) in [(0.3, 0.7), (-0.4, 2.0), (r, 1.1)] {
            let want = lambda * (lambda * x).exp() * (lambda * y).sin();
            prop_assert!((m.eval(x, y) - want).abs() <= 1e-14 * want.abs().max(1.0));
        }
        let d = m.analytic_diagnostics(r, AlmgrenVariant::Unb { a_surrogate: -10.0 }).unwrap();
        prop_assert!((d.n - lambda).abs() <= 1e-12 * lambda);
    }

    #[test]
    fn split_pairs_are_nonnegative_and_disjoint(which in 0usize..4, nx in 8usize..24) {
        let (model, a, b) = match which {
            0 => (HarmonicModel::Phi, -1.0, 1.0),
            1 => (HarmonicModel::Gamma, -1.0, 1.0),
            2 => (HarmonicModel::PhiR { r: 2.0 }, -2.0, 2.0),
            _ => (HarmonicModel::Psi { d: 2, c1: 0.3, c2: -1.0 }, -1.0, 0.5),
        };
        let g = CylinderGrid::new(a, b, 2, nx, 32).unwrap();
        let s = model.sample_split(&g, XbcKind::Dirichlet).unwrap();
        let (u, v) = (s.components[0].values(), s.components[1].values());
        prop_assert!(u.iter().chain(v).all(|&x| x >= 0.0));
        prop_assert!(u.iter().zip(v).all(|(p, q)| p * q == 0.0));
    }

    #[test]
    fn imex_step_keeps_positivity_and_lowers_energy(vals in prop::collection::vec(0.0f64..3.0, 2 * 17 * 16), dt in 1e-3f64..1.0) {
        let g = CylinderGrid::new(0.0, 1.0, 2, 16, 16).unwrap();
        let n = g.len();
        let s = StateK::new(vec![field_from(g, XbcKind::Dirichlet, &vals[..n]), field_from(g, XbcKind::Dirichlet, &vals[n..])], 0.0).unwrap();
        let next = step_imex(&s, dt, 1.0).unwrap();
        prop_assert!(next.components.iter().flat_map(|c| c.values()).all(|&x| x >= 0.0));
        prop_assert!(energy(&next, 1.0) <= energy(&s, 1.0) * (1.0 + 1e-12));
    }

    #[test]
    fn rescaling_composes(lambda in prop::sample::select(vec![0.5, 2.0, 4.0])) {
        let g = CylinderGrid::new(0.0, 2.0, 2, 16, 16).unwrap();
        let s = HarmonicModel::Phi.sample_split(&g, XbcKind::NeumannLeft).unwrap();
        let back = rescale_solution(&rescale_solution(&s, lambda).unwrap(), 1.0 / lambda).unwrap();
        prop_assert_eq!(back.components, s.components);
    }
}

#[test]
fn phi_split_is_invariant_under_the_class_group() {
    let g = CylinderGrid::new(0.0, 2.0, 2, 32, 32).unwrap();
    let s = HarmonicModel::Phi.sample_split(&g, XbcKind::NeumannLeft).unwrap();
    assert_eq!(symmetrize(&s, &SymmetryGroup::shift_reflect(&g)).unwrap(), s);
    let full = CylinderGrid::new(-2.0, 2.0, 2, 64, 32).unwrap();
    let sf = HarmonicModel::Phi.sample_split(&full, XbcKind::Dirichlet).unwrap();
    let mut gens = SymmetryGroup::shift_reflect(&full).generators;
    gens.push(Generator::EvenInX { x0: 0.0 });
    assert_eq!(symmetrize(&sf, &SymmetryGroup::new(gens)).unwrap(), sf);
    let sg = HarmonicModel::Gamma.sample_split(&full, XbcKind::Dirichlet).unwrap();
    assert_eq!(symmetrize(&sg, &SymmetryGroup::shift_reflect(&full)).unwrap(), sg);
}

#[test]
fn laplacian_of_models_converges_at_second_order() {
    let err = |n: usize| {
        let g = CylinderGrid::new(-1.0, 1.0, 2, n, 2 * n).unwrap();
        let f = Field::from_fn(g, XbcKind::Dirichlet, |x, y| HarmonicModel::PhiR { r: 1.0 }.eval(x, y)).unwrap();
        let l = laplacian(&f).unwrap();
        (1..g.nx).flat_map(|j| (0..g.ny).map(move |m| (j, m))).fold(0.0_f64, |a, (j, m)| a.max(l[g.idx(j, m)].abs()))
    };
    let (e1, e2) = (err(16), err(32));
    assert!(e1 / e2 >= 3.5, "ratio {}", e1 / e2);
}

#[test]
fn equilibria_agree_under_refinement() {
    let solve = |nx: usize, ny: usize| {
        let g = CylinderGrid::new(0.0, 2.0, 2, nx, ny).unwrap();
        let s0 = HarmonicModel::Phi.sample_split(&g, XbcKind::NeumannLeft).unwrap();
        let cfg = FlowConfig { residual_tol: 1e-12 * s0.max_trace(), ..Default::default() };
        let (s, rep) = relax_to_equilibrium(&s0, &SymmetryGroup::shift_reflect(&g), &cfg, &RelaxOptions::default()).unwrap();
        assert!(rep.converged);
        s
    };
    let (a, b, c) = (solve(32, 32), solve(64, 64), solve(128, 128));
    let dist = |coarse: &StateK, fine: &StateK| {
        let gc = coarse.grid();
        let mut d = 0.0_f64;
        // Kinked traces cost an order next to x = R; compare on the left half.
        for (u, w) in coarse.components.iter().zip(&fine.components) {
            for j in 0..=gc.nx / 2 {
                for m in 0..gc.ny {
                    d = d.max((u.at(j, m) - w.at(2 * j, 2 * m)).abs());
                }
            }
        }
        d
    };
    let (d1, d2) = (dist(&a, &b), dist(&b, &c));
    assert!(d1 / d2 >= 3.0, "coarse {d1:e}, fine {d2:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn circle_minimizer_is_normalized_even_and_nonnegative(k in 2usize..5, lambda in prop::sample::select(vec![10.0, 100.0, 1000.0])) {
        let p = CircleProblem::new(k, lambda, 240);
        let r = minimize_l(&p).unwrap();
        let f = &r.generator;
        prop_assert!(f.iter().all(|&v| v >= 0.0));
        prop_assert!((circle_mass(k, f) - 1.0).abs() <= 1e-12);
        let m = f.len();
        prop_assert!((1..m / 2).all(|j| f[j] == f[m - j]));
        prop_assert!((circle_energy(k, lambda, f) - r.value).abs() <= 1e-9 * r.value);
        prop_assert!(r.value <= (k as f64 / 2.0).powi(2) + 2e-3);
    }

    #[test]
    fn fld_roundtrip_is_bitwise(vals in prop::collection::vec(-1e6f64..1e6, 2 * 9 * 8), t in 0.0f64..10.0) {
        let g = CylinderGrid::new(-1.0, 0.5, 2, 8, 8).unwrap();
        let n = g.len();
        let s = StateK::new(vec![field_from(g, XbcKind::Dirichlet, &vals[..n]), field_from(g, XbcKind::Dirichlet, &vals[n..])], t).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_state(dir.path(), &s).unwrap();
        let back = read_state(dir.path()).unwrap();
        prop_assert_eq!(back.components, s.components);
    }
}

#[test]
fn circle_minimum_is_stable_under_refinement() {
    let coarse = minimize_l(&CircleProblem::new(2, 100.0, 600)).unwrap().value;
    let fine = minimize_l(&CircleProblem::new(2, 100.0, 2400)).unwrap().value;
    assert!((coarse - fine).abs() <= 1e-3 * fine, "{coarse} vs {fine}");
}

#[test]
fn coupling_accumulates_below_the_frequency() {
    let g = CylinderGrid::new(0.0, 3.0, 2, 96, 64).unwrap();
    let s0 = HarmonicModel::Phi.sample_split(&g, XbcKind::NeumannLeft).unwrap();
    let cfg = FlowConfig { residual_tol: 1e-11 * s0.max_trace(), ..Default::default() };
    let (s, _) = relax_to_equilibrium(&s0, &SymmetryGroup::shift_reflect(&g), &cfg, &RelaxOptions::default()).unwrap();
    let series = compute_series(&s, AlmgrenVariant::Sym { a: 0.0 }, 1.0).unwrap();
    assert!(coupling_accumulation_excess(&series) <= 1e-3);
}
