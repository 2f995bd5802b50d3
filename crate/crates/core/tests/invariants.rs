//! Property tests for the structural invariants of meshes, coefficients and
//! assembled forms.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robinlab_core::assembly::{boundary_inclusion_slack, check_continuity};
use robinlab_core::verify::contractivity::truncate;
use robinlab_core::{assemble_system, build_boundary_operator, build_box_mesh, BoundaryRepr, CoefficientField, Mesh};

fn box_mesh(dim: usize, div: usize, ext: f64) -> Mesh {
    build_box_mesh(&vec![ext; dim], &vec![div; dim]).unwrap()
}

/// Symmetric positive definite part plus a skew part.
fn random_matrix(dim: usize, seed: u64, skew: f64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    let s = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    &g * g.transpose() + DMatrix::identity(dim, dim) * 0.5 + (&s - s.transpose()) * skew
}

fn random_boundary(kind: u8, nb: usize, seed: u64) -> BoundaryRepr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind % 4 {
        0 => BoundaryRepr::Zero,
        1 => BoundaryRepr::Multiplication(DVector::from_fn(nb, |_, _| rng.gen_range(-1.0..1.0))),
        2 => BoundaryRepr::Kernel(DMatrix::from_fn(nb, nb, |_, _| rng.gen_range(-1.0..1.0))),
        _ => BoundaryRepr::Dense(DMatrix::from_fn(nb, nb, |_, _| rng.gen_range(-0.5..0.5))),
    }
}

fn signed(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_preserves_measures(dim in 1usize..=3, div in 1usize..=3, ext in 0.3f64..2.5) {
        let coarse = box_mesh(dim, div, ext);
        let fine = box_mesh(dim, 2 * div, ext);
        prop_assert_eq!(fine.num_cells(), coarse.num_cells() << dim);
        prop_assert!((fine.volume() - coarse.volume()).abs() <= 1e-12 * coarse.volume());
        prop_assert!((fine.boundary_measure() - coarse.boundary_measure()).abs() <= 1e-12 * coarse.boundary_measure());
    }

    #[test]
    fn facets_lie_in_their_cells(dim in 1usize..=3, div in 1usize..=3) {
        let mesh = box_mesh(dim, div, 1.0);
        for f in mesh.boundary_facets() {
            let cell = mesh.cell(f.cell);
            prop_assert!(f.vertices.iter().all(|v| cell.contains(v)));
        }
    }

    #[test]
    fn alpha_scales_linearly(dim in 1usize..=3, seed in any::<u64>(), s in 0.01f64..50.0) {
        let mesh = box_mesh(dim, 1, 1.0);
        let field = CoefficientField::uniform(&mesh, random_matrix(dim, seed, 0.3)).unwrap();
        let scaled = field.scaled(s).unwrap();
        prop_assert!((scaled.alpha() - s * field.alpha()).abs() <= 1e-12 * s * field.alpha());
    }

    #[test]
    fn bar_dominates_entrywise(kind in 0u8..4, seed in any::<u64>()) {
        let mesh = box_mesh(2, 2, 1.0);
        let nb = mesh.boundary_vertices().len();
        let spec = build_boundary_operator(random_boundary(kind, nb, seed), &mesh).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..100 {
            let w = signed(nb, &mut rng);
            prop_assert!(spec.domination_defect(&w) <= 1e-12);
        }
    }

    #[test]
    fn stored_norms_bound_direct_ratios(kind in 1u8..4, seed in any::<u64>()) {
        let mesh = box_mesh(2, 2, 1.0);
        let nb = mesh.boundary_vertices().len();
        let spec = build_boundary_operator(random_boundary(kind, nb, seed), &mesh).unwrap();
        let m = spec.measures().clone();
        let l2 = |w: &DVector<f64>| w.component_mul(w).dot(&m).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let w = signed(nb, &mut rng);
            let bw = spec.apply(&w);
            prop_assert!(l2(&bw) <= spec.norm2 * l2(&w) * (1.0 + 1e-10));
            prop_assert!(bw.amax() <= spec.norm_inf * w.amax() * (1.0 + 1e-10));
            let bar = spec.apply_bar(&w);
            prop_assert!(l2(&bar) <= spec.norm2_bar * l2(&w) * (1.0 + 1e-10));
            prop_assert!(bar.amax() <= spec.norm_inf_bar * w.amax() * (1.0 + 1e-10));
        }
    }

    #[test]
    fn stiffness_is_exact_on_affine_functions(dim in 1usize..=3, div in 1usize..=2, seed in any::<u64>()) {
        let mesh = box_mesh(dim, div, 1.3);
        let a = random_matrix(dim, seed, 0.4);
        let field = CoefficientField::uniform(&mesh, a.clone()).unwrap();
        let zero = build_boundary_operator(BoundaryRepr::Zero, &mesh).unwrap();
        let sys = assemble_system(&mesh, &field, &zero, field.alpha()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = signed(dim, &mut rng);
        let q = signed(dim, &mut rng);
        let interp = |g: &DVector<f64>| DVector::from_fn(mesh.num_vertices(), |i, _| {
            mesh.vertex(i).iter().zip(g.iter()).map(|(x, c)| x * c).sum::<f64>() + 0.25
        });
        let (u, v) = (interp(&p), interp(&q));
        // ∫ (A ∇u) · ∇v with ∇u = p, ∇v = q constant.
        let exact = mesh.volume() * (&a * &p).dot(&q);
        let got = (&sys.k * &u).dot(&v);
        prop_assert!((got - exact).abs() <= 1e-12 * (1.0 + exact.abs()), "{got} vs {exact}");
    }

    #[test]
    fn adjoint_form_pairs_with_primal(kind in 0u8..4, seed in any::<u64>()) {
        let mesh = box_mesh(2, 2, 1.0);
        let nb = mesh.boundary_vertices().len();
        let field = CoefficientField::uniform(&mesh, random_matrix(2, seed, 0.6)).unwrap();
        let spec = build_boundary_operator(random_boundary(kind, nb, seed), &mesh).unwrap();
        let sys = assemble_system(&mesh, &field, &spec, field.alpha()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let u = signed(mesh.num_vertices(), &mut rng);
            let v = signed(mesh.num_vertices(), &mut rng);
            let lhs = (&sys.form_a_adj * &v).dot(&u);
            let rhs = (&sys.form_a * &u).dot(&v);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));
        }
    }

    #[test]
    fn mass_partitions_volume(dim in 1usize..=3, div in 1usize..=3, ext in 0.5f64..2.0) {
        let mesh = box_mesh(dim, div, ext);
        let field = CoefficientField::isotropic(&mesh, 1.0).unwrap();
        let zero = build_boundary_operator(BoundaryRepr::Zero, &mesh).unwrap();
        let sys = assemble_system(&mesh, &field, &zero, 1.0).unwrap();
        let cells: f64 = mesh.cell_volumes().iter().sum();
        prop_assert!((sys.m.sum() - cells).abs() <= 1e-12 * cells);
    }

    #[test]
    fn boundary_inclusion_and_continuity(kind in 0u8..4, seed in any::<u64>(), diff in 1.0f64..4.0) {
        let mesh = box_mesh(2, 3, 1.0);
        let nb = mesh.boundary_vertices().len();
        let field = CoefficientField::isotropic(&mesh, diff).unwrap();
        let spec = build_boundary_operator(random_boundary(kind, nb, seed), &mesh).unwrap();
        let sys = assemble_system(&mesh, &field, &spec, field.alpha()).unwrap();
        prop_assert!(boundary_inclusion_slack(&sys, &spec, 100, seed) >= -1e-10);
        let cont = check_continuity(&sys, &field, &spec, 50, seed);
        prop_assert!(cont.max_ratio <= 1.0 + 1e-12, "{}", cont.max_ratio);
    }

    #[test]
    fn truncation_reassembles(seed in any::<u64>(), amp in 0.1f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = signed(40, &mut rng) * amp;
        let (w, z) = truncate(&u);
        prop_assert_eq!(&w + &z, u.clone());
        prop_assert!(w.amax() <= 1.0);
        // w and z share signs and z vanishes where |u| ≤ 1.
        for i in 0..u.len() {
            prop_assert!(w[i] * z[i] >= 0.0);
            if u[i].abs() <= 1.0 {
                prop_assert_eq!(z[i], 0.0);
            }
        }
    }
}
