//! Randomized invariants over the sampling annulus 0.5 ≤ |x⁻| ≤ 2.

use num_complex::Complex64;
use proptest::prelude::*;
use qab_core::coalgebra::{coproduct, graded_permutation, graded_tensor, opposite_coproduct};
use qab_core::kinematics::{reflect_kinematics, solve_shortening, Kinematics, ModelParams, RawParams};
use qab_core::kmatrix::{ck_symmetry_residual, pole_distance, unitarity_residual, POLE_TOL};
use qab_core::matrix::rel_residual;
use qab_core::representation::{build_basis, build_generators, Generator, GradedOperator};

fn params() -> ModelParams<f64> {
    ModelParams::from_raw(&RawParams {
        q: Complex64::new(1.15, 0.08),
        g: Complex64::new(0.5, -0.1),
        alpha: Complex64::new(0.4, 0.7),
        alpha_tilde: Complex64::new(0.9, -0.2),
        gamma: Complex64::new(1.1, 0.3),
        gamma_bar: Complex64::new(0.7, -0.5),
    })
    .unwrap()
}

fn x_minus() -> impl Strategy<Value = Complex64> {
    (0.5f64..2.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn kin(m: usize, xm: Complex64, p: &ModelParams<f64>) -> Option<Kinematics<f64>> {
    let k = Kinematics::from_x_minus(m, xm, p).ok()?;
    (pole_distance(&k, p) > 1e3 * POLE_TOL).then_some(k)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn shortening_roots_have_unit_product(xm in x_minus(), m in 1usize..=4) {
        let p = params();
        let r = solve_shortening(&xm, m, &p).unwrap();
        prop_assert!((r.roots[0] * r.roots[1] - 1.0).norm() < 1e-10);
        prop_assert!(r.roots[0].norm() >= r.roots[1].norm());
        let k = Kinematics::new(m, r.roots[0], xm, &p).unwrap();
        prop_assert!(k.shortening_residual(&p) < 1e-12);
    }

    #[test]
    fn reflection_is_an_involution_and_inverts_z(xm in x_minus(), m in 1usize..=3) {
        let p = params();
        let Some(k) = kin(m, xm, &p) else { return Ok(()) };
        let r = reflect_kinematics(&k, &p).unwrap();
        prop_assert!((r.z * k.z - 1.0).norm() < 1e-9 * (1.0 + k.z.norm() * r.z.norm()));
        let rr = reflect_kinematics(&r, &p).unwrap();
        prop_assert!((rr.x_plus - k.x_plus).norm() < 1e-9 * (1.0 + k.x_plus.norm()));
        prop_assert!((rr.x_minus - k.x_minus).norm() < 1e-9 * (1.0 + k.x_minus.norm()));
        prop_assert!((rr.u - k.u).norm() < 1e-12 * k.u.norm());
    }

    #[test]
    fn koszul_tensor_is_multiplicative(xa in x_minus(), xb in x_minus(), i in 0usize..12, j in 0usize..12) {
        let p = params();
        let (Some(ka), Some(kb)) = (kin(1, xa, &p), kin(2, xb, &p)) else { return Ok(()) };
        let (sa, sb) = (build_basis(1).unwrap(), build_basis(2).unwrap());
        let (ga, gb) = (build_generators(&ka, &p, &sa), build_generators(&kb, &p, &sb));
        let (x, y) = (Generator::ALL[i], Generator::ALL[j]);
        // (A⊗B)(C⊗D) = (−1)^{|B||C|} AC⊗BD
        let lhs = &graded_tensor(ga.get(x), gb.get(y)).unwrap() * &graded_tensor(ga.get(y), gb.get(x)).unwrap();
        let sign = if y.parity() * y.parity() == 1 { -1.0 } else { 1.0 };
        let rhs = graded_tensor(&(ga.get(x) * ga.get(y)), &(gb.get(y) * gb.get(x))).unwrap();
        prop_assert!(rel_residual(&lhs.mat, &rhs.mat.scale(&Complex64::new(sign, 0.0))) < 1e-12);
    }

    #[test]
    fn opposite_coproduct_is_conjugated_by_flip(xa in x_minus(), xb in x_minus(), i in 0usize..12) {
        let p = params();
        let (Some(ka), Some(kb)) = (kin(2, xa, &p), kin(1, xb, &p)) else { return Ok(()) };
        let (sa, sb) = (build_basis(2).unwrap(), build_basis(1).unwrap());
        let (ga, gb) = (build_generators(&ka, &p, &sa), build_generators(&kb, &p, &sb));
        let g = Generator::ALL[i];
        let p12 = graded_permutation::<f64>(&sa.grading, &sb.grading);
        let p21 = graded_permutation::<f64>(&sb.grading, &sa.grading);
        let id = GradedOperator::identity(p12.dom.clone());
        prop_assert!(rel_residual(&(&p21 * &p12).mat, &id.mat) < 1e-15);
        let flipped = &(&p21 * &coproduct(g, &gb, &ga)) * &p12;
        prop_assert!(rel_residual(&flipped.mat, &opposite_coproduct(g, &ga, &gb).mat) < 1e-13);
    }

    #[test]
    fn closed_form_k_is_unitary(xm in x_minus(), m in 1usize..=3) {
        let p = params();
        let Some(k) = kin(m, xm, &p) else { return Ok(()) };
        let Some(r) = reflect_kinematics(&k, &p).ok() else { return Ok(()) };
        prop_assume!(pole_distance(&r, &p.swapped_normalization()) > 1e3 * POLE_TOL);
        prop_assert!(unitarity_residual(&k, &p).unwrap() < 1e-8);
    }

    #[test]
    fn ck_have_definite_symmetry(xm in x_minus(), m in 2usize..=4) {
        let p = params();
        let Some(k) = kin(m, xm, &p) else { return Ok(()) };
        prop_assert!(ck_symmetry_residual(&k, &p).unwrap().expected < 1e-9);
    }
}
