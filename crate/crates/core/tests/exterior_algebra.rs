mod common;

use common::*;
use lifted_core::geometry::{
    cartan_check, degeneracy_residual, eval_form_scaled, exterior_d, wedge, DerivationHandle, Form, Geometry, Probe,
};
use lifted_core::measure::MeasureGeometry;
use lifted_core::smooth::{make_bump, SmoothScalarField};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type G = MeasureGeometry;

fn element(m: usize, rng: &mut ChaCha8Rng) -> <G as Geometry>::Element {
    let gens = (0..2)
        .map(|_| make_bump(&point(m, 0.5, rng), 2.5).unwrap().mul(&SmoothScalarField::from_expr(m, smooth_expr(m, rng))).unwrap())
        .collect();
    lifted_core::cylinder::Cylinder::new(SmoothScalarField::from_expr(2, smooth_expr(2, rng)), gens).unwrap()
}

fn one_form(m: usize, rng: &mut ChaCha8Rng) -> Form<<G as Geometry>::Element> {
    Form::monomial(element(m, rng), vec![element(m, rng)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exterior_identities_on_measures(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 2;
        let geom = MeasureGeometry::new(m, 3, 1.0);
        let omega = one_form(m, &mut rng);
        let eta = one_form(m, &mut rng);
        let args: Vec<DerivationHandle<G>> = (0..3).map(|_| DerivationHandle::Basic(liftable_field(m, &mut rng))).collect();
        let p = geom.sample_point(&mut rng);

        let dd = exterior_d(&geom, &exterior_d(&geom, &omega));
        let (v, s) = eval_form_scaled(&geom, &dd, &p, &args[..3]).unwrap();
        prop_assert!(v.abs() <= 1e-8 * s.max(1.0));

        let ab = wedge(&geom, &omega, &eta).unwrap();
        let ba = wedge(&geom, &eta, &omega).unwrap();
        let (x1, s1) = eval_form_scaled(&geom, &ab, &p, &args[..2]).unwrap();
        let (x2, s2) = eval_form_scaled(&geom, &ba, &p, &args[..2]).unwrap();
        prop_assert!((x1 + x2).abs() <= 1e-8 * s1.max(s2).max(1.0));

        // d(ω∧η) = dω∧η − ω∧dη for 1-forms
        let lhs = exterior_d(&geom, &ab);
        let rhs = wedge(&geom, &exterior_d(&geom, &omega), &eta).unwrap()
            .add(&wedge(&geom, &omega, &exterior_d(&geom, &eta)).unwrap().scale(&geom, -1.0)).unwrap();
        let (l, ls) = eval_form_scaled(&geom, &lhs, &p, &args[..3]).unwrap();
        let (r, rs) = eval_form_scaled(&geom, &rhs, &p, &args[..3]).unwrap();
        prop_assert!((l - r).abs() <= 1e-8 * ls.max(rs).max(1.0));

        let probes = vec![Probe { point: p.clone(), args: args.clone() }];
        let rep = cartan_check(&geom, &args[0], &args[1], &omega, &probes).unwrap();
        prop_assert!(rep.relative() <= 1e-8, "{:?}", rep);

        let elems: Vec<_> = (0..3).map(|_| element(m, &mut rng)).collect();
        let gens: Vec<_> = (0..2).map(|_| liftable_field(m, &mut rng)).collect();
        let coeffs: Vec<Vec<f64>> = (0..3).map(|_| point(2, 1.0, &mut rng)).collect();
        let (v, s) = degeneracy_residual(&geom, &elems, &gens, &coeffs, &p).unwrap();
        prop_assert!(v.abs() <= 1e-12 * s.max(1.0));
    }
}
