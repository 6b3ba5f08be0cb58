use sobolev_lab::domain::{unit_sphere_area, DiscreteDomain};
use sobolev_lab::functionals::{psi_alpha, Params};
use sobolev_lab::instanton::*;

fn simpson(f: impl Fn(f64) -> f64, hi: f64, steps: usize) -> f64 {
    let h = hi / steps as f64;
    let mut s = f(0.0) + f(hi);
    for i in 1..steps {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn closed_form_constant_matches() {
    for n in 5..=8 {
        let nf = n as f64;
        let exact = std::f64::consts::PI
            * nf
            * (nf - 2.0)
            * (libm::tgamma(nf / 2.0) / libm::tgamma(nf)).powf(2.0 / nf);
        let s = sobolev_constant(n).unwrap();
        assert!((s - exact).abs() / exact < 1e-9, "N = {n}: {s} vs {exact}");
    }
}

#[test]
fn instanton_solves_the_critical_equation() {
    // -U'' - (N-1)/r U' = U^{2*-1}, by central differences in r
    let n = 5;
    let h = 1e-4;
    for r in [0.3, 1.0, 2.5, 7.0] {
        let u = |r: f64| instanton_radial(n, r);
        let upp = (u(r + h) - 2.0 * u(r) + u(r - h)) / (h * h);
        let up = (u(r + h) - u(r - h)) / (2.0 * h);
        let lhs = -upp - (n as f64 - 1.0) / r * up;
        let rhs = u(r).powf(7.0 / 3.0);
        assert!(
            (lhs - rhs).abs() < 1e-6 * rhs.max(1e-3),
            "r = {r}: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn radial_gradient_integral_converges_at_second_order() {
    let n = 5;
    let radius = 1.5;
    let eps = 0.5;
    let c2 = (n * (n - 2)) as f64;
    let du = |r: f64| {
        // d/dr of (c^2 e^2 / (c^2 e^2 + r^2))^{(N-2)/2} up to the e^{-(N-2)/2} factor
        let q = c2 * eps * eps;
        let base = q / (q + r * r);
        -(n as f64 - 2.0) * base.powf((n as f64 - 2.0) / 2.0) * r / (q + r * r)
    };
    let amp = eps.powf(-(n as f64 - 2.0) / 2.0);
    let exact = unit_sphere_area(n)
        * amp
        * amp
        * simpson(|r| du(r).powi(2) * r.powi(n as i32 - 1), radius, 200_000);
    let mut errs = Vec::new();
    for pts in [32, 64, 128, 256] {
        let d = DiscreteDomain::build_radial_ball_grid(n, radius, pts).unwrap();
        let u = sample_instanton(&d, &InstantonSpec::new(eps, vec![0.0; n], None)).unwrap();
        errs.push((d.gradient_sq_integral(&u).unwrap() - exact).abs() / exact);
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.8, "observed order {order} from {errs:?}");
    }
}

#[test]
fn s_is_stable_across_resolutions() {
    let a = compute_s(5, MIN_S_QUAD_POINTS, MIN_S_TRUNCATION).unwrap();
    let b = compute_s(5, DEFAULT_S_QUAD_POINTS, DEFAULT_S_TRUNCATION).unwrap();
    assert!((a - b).abs() / b < 1e-6);
}

#[test]
fn quotient_is_scale_invariant() {
    let base = instanton_quotient(5, 1.0, DEFAULT_S_QUAD_POINTS, DEFAULT_S_TRUNCATION).unwrap();
    for eps in [0.1, 10.0] {
        let q = instanton_quotient(5, eps, DEFAULT_S_QUAD_POINTS, DEFAULT_S_TRUNCATION).unwrap();
        assert!((q - base).abs() / base < 1e-8, "eps = {eps}");
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let d = DiscreteDomain::build_box_grid(5, &[1.0; 5], 5).unwrap();
    let bad = [
        InstantonSpec::new(0.0, d.center(), None),
        InstantonSpec::new(0.1, d.center(), Some(0.3)),
        InstantonSpec::new(0.1, vec![0.5; 4], None),
        InstantonSpec::new(0.1, vec![1.5; 5], None),
    ];
    for s in bad {
        assert!(sample_instanton(&d, &s).is_err(), "{s:?}");
    }
    assert!(sobolev_constant(4).is_err());
}

#[test]
fn boundary_instantons_sit_below_interior_ones() {
    let d = DiscreteDomain::build_box_grid(5, &[1.0; 5], 9).unwrap();
    let p = Params::new(5, 1.0, 0.0).unwrap();
    for eps in [0.1, 0.2] {
        let b = sample_instanton(
            &d,
            &InstantonSpec::new(eps, d.face_center(0).unwrap(), None),
        );
        let i = sample_instanton(&d, &InstantonSpec::new(eps, d.center(), None));
        let (b, i) = (
            psi_alpha(&d, &b.unwrap(), &p).unwrap(),
            psi_alpha(&d, &i.unwrap(), &p).unwrap(),
        );
        assert!(b < i, "eps = {eps}: {b} vs {i}");
    }
}
