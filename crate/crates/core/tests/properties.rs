use proptest::prelude::*;
use sobolev_lab::domain::{DiscreteDomain, Field, Stencil};
use sobolev_lab::functionals::{self, evaluate, Params};
use sobolev_lab::sampling::{random_cosine_field, random_positive_field};

fn grid(n: usize) -> DiscreteDomain {
    DiscreteDomain::build_box_grid(5, &[1.0; 5], n).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quotients_are_degree_zero(seed in any::<u64>(), lambda in 1e-3f64..1e3, neg in any::<bool>(),
                                 a in 0.1f64..10.0, alpha in 0.0f64..50.0) {
        let d = grid(5);
        let p = Params::new(5, a, alpha).unwrap();
        let u = random_cosine_field(&d, seed);
        let v = u.scaled(if neg { -lambda } else { lambda });
        let (r, s) = (evaluate(&d, &u, &p).unwrap(), evaluate(&d, &v, &p).unwrap());
        prop_assert!(rel(r.delta, s.delta) < 1e-12);
        prop_assert!(rel(r.beta, s.beta) < 1e-12);
        prop_assert!(rel(r.gamma, s.gamma) < 1e-12);
        prop_assert!(rel(r.psi, s.psi) < 1e-12);
    }

    #[test]
    fn holder_and_product_identity(seed in any::<u64>(), a in 0.1f64..10.0) {
        let d = grid(5);
        let p = Params::new(5, a, 1.0).unwrap();
        let r = evaluate(&d, &random_cosine_field(&d, seed), &p).unwrap();
        prop_assert!(r.delta <= r.l2 / r.h1_norm_sq.sqrt() + 1e-12);
        prop_assert!(rel(r.beta * r.delta, r.gamma * r.beta.sqrt()) < 1e-12);
    }

    #[test]
    fn absolute_value_never_raises_psi(seed in any::<u64>(), alpha in 0.0f64..20.0) {
        // edge differences of |u| are no longer than those of u
        let d = grid(5);
        let p = Params::new(5, 1.0, alpha).unwrap();
        let u = random_cosine_field(&d, seed);
        let psi = functionals::psi_alpha(&d, &u, &p).unwrap();
        let psi_abs = functionals::psi_alpha(&d, &u.map(f64::abs), &p).unwrap();
        prop_assert!(psi_abs <= psi * (1.0 + 1e-12));
    }
}

#[test]
fn integrate_matches_reference_sum() {
    let d = grid(5);
    let u = random_cosine_field(&d, 3);
    let reference: f64 = d
        .quad_weights()
        .iter()
        .zip(u.values())
        .map(|(w, x)| w * x)
        .sum();
    assert!(rel(d.integrate(&u).unwrap(), reference) < 1e-13);
}

fn shifted(u: &Field, phi: &Field, t: f64) -> Field {
    let mut v = u.clone();
    for (x, p) in v.values_mut().iter_mut().zip(phi.values()) {
        *x += t * p;
    }
    v
}

/// Central difference of `f(u + t phi)` at `t = 0`.
fn central_diff(f: impl Fn(&Field) -> f64, u: &Field, phi: &Field, t: f64) -> f64 {
    (f(&shifted(u, phi, t)) - f(&shifted(u, phi, -t))) / (2.0 * t)
}

#[test]
fn derivatives_match_finite_differences() {
    // errors are measured against |grad|_W |phi|_W, the largest value the
    // directional derivative can take
    for stencil in [Stencil::Compact, Stencil::CentralOneSided] {
        let d = grid(5).with_stencil(stencil);
        for k in 0..20u64 {
            let p = Params::new(5, 0.5 + k as f64 * 0.3, k as f64 * 0.7).unwrap();
            let u = random_positive_field(&d, 100 + k);
            let phi = random_cosine_field(&d, 200 + k);
            let t = 1e-5;

            let fd = central_diff(|v| functionals::delta(&d, v, &p).unwrap(), &u, &phi, t);
            let an = functionals::delta_prime(&d, &u, &phi, &p).unwrap();
            let scale = d.lp_norm(&phi, 2.0).unwrap() * functionals::delta(&d, &u, &p).unwrap();
            assert!(
                (fd - an).abs() <= 1e-5 * scale,
                "{stencil:?} delta' {k}: {fd} vs {an}"
            );

            let g = functionals::psi_gradient(&d, &u, &p).unwrap();
            let an = d.inner(&g, &phi).unwrap();
            let fd = central_diff(|v| functionals::psi_alpha(&d, v, &p).unwrap(), &u, &phi, t);
            let scale = d.lp_norm(&g, 2.0).unwrap() * d.lp_norm(&phi, 2.0).unwrap();
            assert!(
                (fd - an).abs() <= 1e-5 * scale,
                "{stencil:?} psi' {k}: {fd} vs {an}"
            );
        }
    }
}

#[test]
fn gradient_vanishes_at_constants() {
    let d = grid(5);
    let p = Params::new(5, 2.0, 3.0).unwrap();
    let g = functionals::psi_gradient(&d, &Field::constant(&d, 0.7), &p).unwrap();
    assert!(g.max_abs() < 1e-12, "{}", g.max_abs());
}

#[test]
fn radial_derivatives_match_finite_differences() {
    let d = DiscreteDomain::build_radial_ball_grid(6, 1.0, 80).unwrap();
    let p = Params::new(6, 1.0, 2.0).unwrap();
    let u = Field::from_fn(&d, |x| 1.0 + (3.0 * x[0]).cos() * 0.5);
    let phi = Field::from_fn(&d, |x| (2.0 * x[0]).sin() + 0.3);
    let g = functionals::psi_gradient(&d, &u, &p).unwrap();
    let an = d.inner(&g, &phi).unwrap();
    let fd = central_diff(
        |v| functionals::psi_alpha(&d, v, &p).unwrap(),
        &u,
        &phi,
        1e-5,
    );
    let scale = d.lp_norm(&g, 2.0).unwrap() * d.lp_norm(&phi, 2.0).unwrap();
    assert!((fd - an).abs() <= 1e-5 * scale, "{fd} vs {an}");
}
