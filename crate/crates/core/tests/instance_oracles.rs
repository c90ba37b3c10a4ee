mod common;

use common::*;
use lifted_core::submanifold::meshes::unit_square;
use lifted_core::{curve, mapping, measure, submanifold};
use lifted_core::cylinder::Cylinder;
use lifted_core::smooth::{make_bump, FormOnX, SmoothScalarField, SmoothVectorField};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-3;

fn agree(formula: f64, fd: f64) -> bool {
    (formula - fd).abs() <= 1e-5 * (1.0 + formula.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn measure_derivative_matches_pushforward_flow(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, mu, m) = measure_instance(&mut rng);
        let v = liftable_field(m, &mut rng);
        let formula = measure::lifted_derivative(&v, &f).unwrap().eval(&mu).unwrap();
        let fd = measure::flow_fd_derivative(&f, &v, &mu, H).unwrap();
        prop_assert!(agree(formula, fd), "{} vs {}", formula, fd);
        let w = liftable_field(m, &mut rng);
        let (res, scale) = measure::lie_compat_residual(&v, &w, &f, &mu).unwrap();
        prop_assert!(res <= 1e-8 * scale.max(1.0));
    }

    #[test]
    fn mapping_derivative_matches_composed_flow(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, p, m) = mapping_instance(&mut rng);
        let v = liftable_field(m, &mut rng);
        let formula = mapping::lifted_derivative(&v, &f).unwrap().eval(&p).unwrap();
        let fd = mapping::flow_fd_derivative(&f, &v, &p, H).unwrap();
        prop_assert!(agree(formula, fd), "{} vs {}", formula, fd);
        let w = liftable_field(m, &mut rng);
        let (res, scale) = mapping::lie_compat_residual(&v, &w, &f, &p).unwrap();
        prop_assert!(res <= 1e-8 * scale.max(1.0));
    }

    #[test]
    fn curve_derivative_matches_transported_flow(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, c, k) = curve_instance(&mut rng);
        let v = liftable_field(k, &mut rng);
        let formula = curve::lifted_derivative(&v, &f).unwrap().eval(&c).unwrap();
        let fd = curve::flow_fd_derivative(&f, &v, &c, H).unwrap();
        prop_assert!(agree(formula, fd), "{} vs {}", formula, fd);
        let w = liftable_field(k, &mut rng);
        let (res, scale) = curve::lie_compat_residual(&v, &w, &f, &c).unwrap();
        prop_assert!(res <= 1e-8 * scale.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn submanifold_derivative_matches_vertex_flow(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sq = unit_square(32).unwrap();
        let b = make_bump(&point(2, 0.3, &mut rng), 2.5).unwrap();
        let omega = FormOnX::new(2, 1, vec![(vec![0], smooth_expr(2, &mut rng) * b.expr()), (vec![1], smooth_expr(2, &mut rng) * b.expr())], b.support().cloned()).unwrap();
        let psi = SmoothScalarField::from_expr(1, smooth_expr(1, &mut rng));
        let f = Cylinder::new(psi, vec![omega]).unwrap();
        let bump = make_bump(&[0.5, 0.5], 4.0).unwrap();
        let a = point(4, 1.0, &mut rng);
        let v = SmoothVectorField::masked(&bump, vec![common::x(0) * a[0] + common::x(1) * a[1], common::x(1) * a[2] + a[3]]).unwrap();
        let e = sq.boundary().unwrap();
        let formula = submanifold::lifted_derivative(&v, &f).unwrap().eval(&e).unwrap();
        let fd = submanifold::flow_fd_derivative(&f, &v, &e, H).unwrap();
        prop_assert!((formula - fd).abs() <= 1e-4 * (1.0 + formula.abs()), "{} vs {}", formula, fd);
    }
}
