use sobolev_lab::domain::{DiscreteDomain, Field};
use sobolev_lab::functionals::{self, Params};
use sobolev_lab::instanton::{half_space_threshold, sample_instanton, InstantonSpec};
use sobolev_lab::minimize::*;

fn small_box() -> DiscreteDomain {
    DiscreteDomain::build_box_grid(5, &[1.0; 5], 5).unwrap()
}

#[test]
fn large_a_leaves_the_constant_behind() {
    let d = small_box();
    let p = Params::new(5, 20.0, 0.0).unwrap();
    let tol = discretization_tolerance(&d, &p).unwrap();
    let res = minimize_psi(&d, &p, &MinimizeConfig::default()).unwrap();
    let t = half_space_threshold(5).unwrap();
    assert!(res.s_alpha_estimate < 20.0, "{}", res.s_alpha_estimate);
    assert!(res.s_alpha_estimate <= t * (1.0 + tol));
    for (v, s) in res.per_start_values().iter().zip(&res.starts) {
        assert!(res.s_alpha_estimate <= *v);
        assert!(*v <= s.initial_psi);
    }
}

#[test]
fn small_a_stays_at_or_below_the_constant() {
    let d = small_box();
    for alpha in [0.0, 2.0] {
        let p = Params::new(5, 1.0, alpha).unwrap();
        let res = minimize_psi(&d, &p, &MinimizeConfig::default()).unwrap();
        assert!(res.s_alpha_estimate <= 1.0 + alpha + 1e-10);
        assert!(res.s_alpha_estimate > 0.0);
    }
}

#[test]
fn estimates_do_not_decrease_in_alpha() {
    let d = small_box();
    let cfg = MinimizeConfig::default();
    let tol = cfg.grad_tol;
    let mut last = 0.0;
    for alpha in [0.0, 1.0, 5.0] {
        let s = minimize_psi(&d, &Params::new(5, 1.0, alpha).unwrap(), &cfg)
            .unwrap()
            .s_alpha_estimate;
        assert!(last <= s * (1.0 + tol), "alpha = {alpha}: {last} > {s}");
        last = s;
    }
}

#[test]
fn descent_is_monotone_per_start() {
    let d = small_box();
    let res = minimize_psi(
        &d,
        &Params::new(5, 1.0, 3.0).unwrap(),
        &MinimizeConfig::default(),
    )
    .unwrap();
    for s in &res.starts {
        for w in s.trace.windows(2) {
            assert!(
                w[1].psi <= w[0].psi * (1.0 + 1e-10),
                "{}: {} -> {}",
                s.start.label(),
                w[0].psi,
                w[1].psi
            );
        }
        if s.status == StartStatus::Converged {
            assert!(s.trace.last().unwrap().grad_norm <= MinimizeConfig::default().grad_tol);
        }
    }
}

#[test]
fn converged_minimizer_nearly_solves_the_euler_lagrange_equation() {
    let d = small_box();
    let p = Params::new(5, 1.0, 3.0).unwrap();
    let cfg = MinimizeConfig {
        grad_tol: 1e-6,
        max_iters: 4000,
        starts: vec![Start::Random(4)],
        ..MinimizeConfig::default()
    };
    let res = minimize_psi(&d, &p, &cfg).unwrap();
    assert!(res.converged);
    let u = res.best_field.map(|x| x.abs() + 1e-14);
    let u = u.scaled(functionals::nehari_t(&d, &u, &p).unwrap());
    let r = functionals::el_residual(&d, &u, &p).unwrap();
    let au = d.neg_laplacian(&u).unwrap();
    let scale = d.lp_norm(&au, 2.0).unwrap() + d.lp_norm(&u, 2.0).unwrap();
    let rel = d.lp_norm(&r, 2.0).unwrap() / scale;
    assert!(rel < 1e-4, "relative residual {rel}");
}

#[test]
fn boundary_instanton_diagnostics() {
    let d = DiscreteDomain::build_box_grid(5, &[1.0; 5], 9).unwrap();
    let h = d.min_spacing();
    let u = sample_instanton(&d, &InstantonSpec::new(h, d.face_center(0).unwrap(), None)).unwrap();
    let c = concentration_diagnostics(&d, &u).unwrap();
    assert!(c.boundary_distance <= 2.0 * h);
    assert_eq!(c.eps_scale, c.max_value.powf(-2.0 / 3.0));
    assert!(c.mass_in_eps_ball_fraction > 0.0 && c.mass_in_eps_ball_fraction <= 1.0);
}

#[test]
fn constant_field_mass_fraction_is_a_volume_ratio() {
    // M = 1 puts a unit ball at the corner: |B(0, 1) cap [0,1]^5| / 1 = vol(B^5) / 32
    let d = DiscreteDomain::build_box_grid(5, &[1.0; 5], 9).unwrap();
    let c = concentration_diagnostics(&d, &Field::constant(&d, 1.0)).unwrap();
    let exact = 8.0 * std::f64::consts::PI.powi(2) / 15.0 / 32.0;
    assert_eq!(c.argmax_node, 0);
    // masked trapezoid quadrature on a 9^5 grid
    assert!(
        (c.mass_in_eps_ball_fraction - exact).abs() < 0.05,
        "{}",
        c.mass_in_eps_ball_fraction
    );
}

#[test]
fn invalid_configs_are_rejected() {
    let d = small_box();
    let p = Params::new(5, 1.0, 0.0).unwrap();
    for cfg in [
        MinimizeConfig {
            max_iters: 0,
            ..Default::default()
        },
        MinimizeConfig {
            grad_tol: 0.0,
            ..Default::default()
        },
        MinimizeConfig {
            armijo_c: 1.0,
            ..Default::default()
        },
        MinimizeConfig {
            starts: vec![],
            ..Default::default()
        },
    ] {
        assert!(minimize_psi(&d, &p, &cfg).is_err());
    }
    let all_bad = MinimizeConfig {
        starts: vec![Start::InteriorInstanton(Some(-1.0))],
        ..Default::default()
    };
    assert!(matches!(
        minimize_psi(&d, &p, &all_bad),
        Err(sobolev_lab::LabError::SolverFailure(_))
    ));
}
