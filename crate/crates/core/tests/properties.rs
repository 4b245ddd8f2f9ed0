use num_complex::Complex64;
use proptest::prelude::*;

use wavetriple::assembly::{
    assemble_constrained_pencil, boundary_mass, green_identity_residual, green_identity_scale, mass_matrix,
    stiffness_matrix, trace_b1, trace_b2, surjectivity_witness, DofMap, DomainElement, State,
};
use wavetriple::coefficients::{sample_coefficients, validate_model, CoefficientFields, Tensor};
use wavetriple::linalg::{determinant, eig_nonsymmetric, generalized_to_standard, Cholesky, DenseMatrix};
use wavetriple::mesh::{build_interval_mesh, build_rect_mesh, BoundaryLabel, PartitionSpec, Side};
use wavetriple::semigroup::CayleyStepper;

fn label() -> impl Strategy<Value = BoundaryLabel> {
    (0usize..5).prop_map(|k| BoundaryLabel::ALL[k])
}

fn square(n: usize) -> impl Strategy<Value = DenseMatrix> {
    proptest::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| DenseMatrix::from_row_slice(n, n, &v))
}

fn spd(n: usize) -> impl Strategy<Value = DenseMatrix> {
    square(n).prop_map(move |a| a.matmul(&a.transpose()).add(&DenseMatrix::identity(n).scaled(0.5)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenvalues_reproduce_trace_and_determinant(a in (2usize..9).prop_flat_map(square)) {
        let set = eig_nonsymmetric(&a, false).unwrap();
        let sum: Complex64 = set.eigenvalues.iter().sum();
        let prod: Complex64 = set.eigenvalues.iter().product();
        let scale = a.max_abs().max(1.0);
        prop_assert!((sum.re - a.trace()).abs() <= 1e-9 * scale * a.rows() as f64);
        prop_assert!(sum.im.abs() <= 1e-9 * scale * a.rows() as f64);
        let det = determinant(&a).unwrap();
        let tol = 1e-8 * scale.powi(a.rows() as i32) * a.rows() as f64;
        prop_assert!((prod.re - det).abs() <= tol, "{} vs {}", prod.re, det);
    }

    #[test]
    fn determinant_is_multiplicative(a in square(4), b in square(4)) {
        let lhs = determinant(&a.matmul(&b)).unwrap();
        let rhs = determinant(&a).unwrap() * determinant(&b).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()) * 64.0);
    }

    #[test]
    fn eigenvectors_satisfy_the_equation(a in (2usize..8).prop_flat_map(square)) {
        let set = eig_nonsymmetric(&a, true).unwrap();
        prop_assert!(set.max_residual() <= 1e-8 * a.max_abs().max(1.0));
    }

    #[test]
    fn two_by_two_pencil_matches_quadratic_formula(e in spd(2), c in square(2)) {
        // det(C − λE) = det(E)λ² − (c00 e11 + c11 e00 − c01 e10 − c10 e01)λ + det(C)
        let qa = e[(0, 0)] * e[(1, 1)] - e[(0, 1)] * e[(1, 0)];
        let qb = -(c[(0, 0)] * e[(1, 1)] + c[(1, 1)] * e[(0, 0)] - c[(0, 1)] * e[(1, 0)] - c[(1, 0)] * e[(0, 1)]);
        let qc = c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)];
        let disc = Complex64::new(qb * qb - 4.0 * qa * qc, 0.0).sqrt();
        let roots = [(-qb + disc) / (2.0 * qa), (-qb - disc) / (2.0 * qa)];
        let b = generalized_to_standard(&e, &c).unwrap();
        let got = eig_nonsymmetric(&b, false).unwrap().eigenvalues;
        for r in roots {
            let d = got.iter().map(|g| (g - r).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= 1e-7 * (1.0 + r.norm()), "{r} not in {got:?}");
        }
    }

    #[test]
    fn three_by_three_pencil_invariants(e in spd(3), c in square(3)) {
        // symmetric functions of the pencil roots equal those of E⁻¹C
        let b = generalized_to_standard(&e, &c).unwrap();
        let l = eig_nonsymmetric(&b, false).unwrap().eigenvalues;
        let einv_c = {
            let f = Cholesky::factor(&e).unwrap();
            let mut m = DenseMatrix::zeros(3, 3);
            for j in 0..3 {
                let col = f.solve(&c.column(j));
                for i in 0..3 { m[(i, j)] = col[i]; }
            }
            m
        };
        let sum: Complex64 = l.iter().sum();
        let prod: Complex64 = l.iter().product();
        let pairs = l[0] * l[1] + l[0] * l[2] + l[1] * l[2];
        let minors = (0..3).map(|k| {
            let (i, j) = [(1, 2), (0, 2), (0, 1)][k];
            einv_c[(i, i)] * einv_c[(j, j)] - einv_c[(i, j)] * einv_c[(j, i)]
        }).sum::<f64>();
        let det_ratio = determinant(&c).unwrap() / determinant(&e).unwrap();
        let s = einv_c.max_abs().max(1.0);
        prop_assert!((sum.re - einv_c.trace()).abs() <= 1e-8 * s);
        prop_assert!((pairs.re - minors).abs() <= 1e-8 * s * s);
        prop_assert!((prod.re - det_ratio).abs() <= 1e-8 * s * s * s);
    }

    #[test]
    fn model_validity_iff_energy_gram_is_definite(
        left in label(), right in label(), k1 in prop_oneof![Just(0.0), 0.1f64..3.0], n in 1usize..12
    ) {
        let mesh = build_interval_mesh(n, left, right).unwrap();
        let fields = CoefficientFields::constant(1, 1.0, 1.0).with_k1(move |_, _| k1);
        let coeffs = sample_coefficients(&mesh, &fields).unwrap();
        let valid = validate_model(&mesh, &coeffs).is_ok();
        let dofs = DofMap::new(&mesh);
        let s = dofs.reduce(&stiffness_matrix(&mesh, &coeffs.modulus))
            .add(&dofs.reduce(&boundary_mass(&mesh, &coeffs.k1).unwrap()));
        let m = dofs.reduce(&mass_matrix(&mesh, &coeffs.rho));
        let zero = DenseMatrix::zeros(dofs.n_free(), dofs.n_free());
        let e = DenseMatrix::block2x2(&s, &zero, &zero, &m);
        let definite = dofs.n_free() == 0 || Cholesky::factor(&e).is_ok();
        prop_assert_eq!(valid, definite);
    }
}

fn partition() -> impl Strategy<Value = PartitionSpec> {
    (label(), label(), label(), label(), label()).prop_map(|(b, r, t, l, extra)| {
        let cut = 0.5;
        let mut spec = PartitionSpec::uniform(BoundaryLabel::Gamma0)
            .with_side(Side::Bottom, b)
            .with_side(Side::Right, r)
            .with_side(Side::Top, t)
            .with_side(Side::Left, l);
        // split the top side in two at a node (nx is even)
        *spec.side_mut(Side::Top) = vec![
            wavetriple::mesh::SideAssignment { label: t, start: 0.0, end: cut },
            wavetriple::mesh::SideAssignment { label: extra, start: cut, end: 1.0 },
        ];
        spec
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn green_identity_on_random_square_models(
        spec in partition(),
        nx in (1usize..4).prop_map(|k| 2 * k),
        ny in 2usize..6,
        k in (0.0f64..2.0, 0.0f64..2.0, 0.0f64..2.0),
        seed in proptest::collection::vec(-1.0f64..1.0, 400),
    ) {
        let mesh = build_rect_mesh(nx, ny, &spec).unwrap();
        let fields = CoefficientFields::constant(2, 1.0, 1.0)
            .with_modulus(|p| Tensor::from_2x2(1.0 + p[0], 0.3, 0.3, 2.0 - p[1]))
            .with_k1(move |_, p| k.0 + k.1 * p[0])
            .with_k2(move |_, p| k.2 * (1.0 + p[1]));
        let coeffs = sample_coefficients(&mesh, &fields).unwrap();
        let Ok(p) = assemble_constrained_pencil(&mesh, &coeffs) else {
            // degenerate energy norm: no Dirichlet side and no active k1
            prop_assert!(!mesh.has_dirichlet());
            return Ok(());
        };
        let (n, m) = (p.n_free(), p.dofs.n_trace());
        let take = |off: usize, len: usize| -> Vec<f64> { (0..len).map(|i| seed[(off + i) % seed.len()]).collect() };
        let x = DomainElement { u: take(0, n), v: take(7, n), g: take(13, m) };
        let y = DomainElement { u: take(29, n), v: take(31, n), g: take(37, m) };
        let rel = green_identity_residual(&x, &y, &p) / green_identity_scale(&x, &y, &p);
        prop_assert!(rel <= 1e-12, "{rel}");

        let w = surjectivity_witness(&x.g, &y.g, &p);
        prop_assert_eq!(trace_b1(&w, &p), x.g.clone());
        prop_assert_eq!(trace_b2(&w, &p), y.g.clone());

        let stepper = CayleyStepper::new(&p, 0.05).unwrap();
        let mut s = State { u: x.u.clone(), v: x.v.clone() };
        for _ in 0..20 {
            let next = stepper.step(&s);
            prop_assert!(p.norm(&next) <= p.norm(&s) * (1.0 + 1e-10));
            s = next;
        }
    }
}
