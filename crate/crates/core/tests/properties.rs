use inertial_tseng::linalg::{Matrix, Metric, RngStream, Vector};
use inertial_tseng::operators::{
    hyperplane_projector, orthant_projector, pointwise_max_zero, projector_as_resolvent, soft_threshold_resolvent,
    weighted_hyperplane_projector, Resolvent,
};
use inertial_tseng::problems::{gen_affine_vi, gen_lasso, gen_oracle_strong, trapezoid_weights, QMode};
use proptest::prelude::*;

fn vec_strategy(dim: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-10.0f64..10.0, dim).prop_map(|v| Vector::new(v).unwrap())
}

fn firmly_nonexpansive(j: &Resolvent, x: &Vector, y: &Vector, lambda: f64, metric: &Metric) {
    let jx = j.eval(x, lambda).unwrap();
    let jy = j.eval(y, lambda).unwrap();
    let d = jx.sub(&jy).unwrap();
    let lhs = metric.inner(&d, &d).unwrap();
    let rhs = metric.inner(&d, &x.sub(y).unwrap()).unwrap();
    assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()), "{lhs} > {rhs}");
}

proptest! {
    #[test]
    fn cauchy_schwarz(a in vec_strategy(6), b in vec_strategy(6)) {
        prop_assert!(a.inner(&b).unwrap().abs() <= a.norm() * b.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn convex_combination_identity(a in vec_strategy(5), b in vec_strategy(5), t in 0.0f64..1.0) {
        let lhs = Vector::axpby(t, &a, 1.0 - t, &b).unwrap().norm_squared();
        let rhs = t * a.norm_squared() + (1.0 - t) * b.norm_squared()
            - t * (1.0 - t) * a.distance(&b).unwrap().powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn soft_threshold_firm(x in vec_strategy(8), y in vec_strategy(8), rho in 0.01f64..3.0, lambda in 0.01f64..2.0) {
        firmly_nonexpansive(&soft_threshold_resolvent(rho).unwrap(), &x, &y, lambda, &Metric::Euclidean);
    }

    #[test]
    fn orthant_projection_firm_and_idempotent(x in vec_strategy(8), y in vec_strategy(8)) {
        let p = orthant_projector(8);
        firmly_nonexpansive(&projector_as_resolvent(p.clone()), &x, &y, 1.0, &Metric::Euclidean);
        let px = p.project(&x).unwrap();
        prop_assert_eq!(p.project(&px).unwrap(), px.clone());
        prop_assert_eq!(p.membership_residual(&px).unwrap(), 0.0);
    }

    #[test]
    fn weighted_hyperplane_projection(x in vec_strategy(12), y in vec_strategy(12), b in -5.0f64..5.0) {
        let grid = Vector::from_fn(12, |i| i as f64 / 11.0).unwrap();
        let metric = Metric::Weighted(trapezoid_weights(12));
        let p = hyperplane_projector(grid.clone(), b, metric.clone()).unwrap();
        firmly_nonexpansive(&projector_as_resolvent(p.clone()), &x, &y, 0.5, &metric);
        let px = p.project(&x).unwrap();
        prop_assert!(p.membership_residual(&px).unwrap() <= 1e-9);
        prop_assert!(px.distance(&p.project(&px).unwrap()).unwrap() <= 1e-9);
    }

    #[test]
    fn euclidean_hyperplane_projection(x in vec_strategy(4), b in -5.0f64..5.0) {
        let normal = Vector::new(vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let p = weighted_hyperplane_projector(normal.clone(), b).unwrap();
        let px = p.project(&x).unwrap();
        prop_assert!((normal.inner(&px).unwrap() - b).abs() <= 1e-9 * (1.0 + b.abs()));
        // x − Px is parallel to the normal.
        let r = x.sub(&px).unwrap();
        let cos = r.inner(&normal).unwrap().abs() / (r.norm() * normal.norm()).max(1e-300);
        prop_assert!(r.norm() < 1e-12 || (cos - 1.0).abs() < 1e-9);
    }

    #[test]
    fn max_zero_is_weighted_lipschitz(x in vec_strategy(12), y in vec_strategy(12)) {
        let metric = Metric::Weighted(trapezoid_weights(12));
        let a = pointwise_max_zero();
        let lhs = metric.distance(&a.eval(&x).unwrap(), &a.eval(&y).unwrap()).unwrap();
        prop_assert!(lhs <= metric.distance(&x, &y).unwrap() + 1e-12);
    }
}

#[test]
fn lasso_gradient_matches_finite_differences() {
    for seed in 0..5u64 {
        let mut rng = RngStream::new(seed);
        let (inst, problem) = gen_lasso(&mut rng, 3, 12, 24, 1e-4).unwrap();
        for _ in 0..5 {
            let x = rng.uniform_vector(24, -1.0, 1.0).unwrap();
            let g = problem.forward.eval(&x).unwrap();
            for i in 0..24 {
                let h = 1e-6;
                let mut e = vec![0.0; 24];
                e[i] = h;
                let e = Vector::new(e).unwrap();
                let fd = (inst.data_fit(&x.add(&e).unwrap()).unwrap() - inst.data_fit(&x.sub(&e).unwrap()).unwrap())
                    / (2.0 * h);
                let gi = g.as_slice()[i];
                assert!((fd - gi).abs() <= 1e-4 * (1.0 + gi.abs()), "seed {seed} coord {i}: {fd} vs {gi}");
            }
        }
    }
}

#[test]
fn affine_vi_operator_is_monotone() {
    for seed in 0..3u64 {
        let (_, problem) = gen_affine_vi(&mut RngStream::new(seed), 20, QMode::Zero).unwrap();
        let mut rng = RngStream::new(100 + seed);
        for _ in 0..1000 {
            let x = rng.uniform_vector(20, -1.0, 1.0).unwrap();
            let y = rng.uniform_vector(20, -1.0, 1.0).unwrap();
            let d = x.sub(&y).unwrap();
            let ad = problem.forward.eval(&x).unwrap().sub(&problem.forward.eval(&y).unwrap()).unwrap();
            assert!(ad.inner(&d).unwrap() >= -1e-8 * d.norm_squared());
        }
    }
}

#[test]
fn strong_oracle_modulus_and_lipschitz_bound() {
    let problem = gen_oracle_strong(&mut RngStream::new(4), 10, 0.7).unwrap();
    let l = problem.forward.lipschitz().unwrap().value;
    let mut rng = RngStream::new(5);
    for _ in 0..500 {
        let x = rng.uniform_vector(10, -1.0, 1.0).unwrap();
        let y = rng.uniform_vector(10, -1.0, 1.0).unwrap();
        let d = x.sub(&y).unwrap();
        let ad = problem.forward.eval(&x).unwrap().sub(&problem.forward.eval(&y).unwrap()).unwrap();
        assert!((ad.inner(&d).unwrap() - 0.7 * d.norm_squared()).abs() <= 1e-12 * (1.0 + d.norm_squared()));
        assert!(ad.norm() <= l * d.norm() * (1.0 + 1e-9));
    }
}

#[test]
fn affine_lipschitz_estimate_is_attained_from_below() {
    let m = Matrix::diagonal(&[3.0, -7.0, 1.0]).unwrap();
    let est = m.spectral_norm_estimate(200);
    assert!(est <= 7.0 * (1.0 + 1e-12) && est > 7.0 * (1.0 - 1e-9));
}
