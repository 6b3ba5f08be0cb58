//! Multi-start projected gradient descent for `S_alpha = inf psi_alpha`.
//!
//! `psi_alpha` is homogeneous of degree zero and depends on `|u|` only, so
//! the iterate is kept on the sphere `|u|_{2*} = 1` and periodically replaced
//! by `|u|` plus a tiny positive floor. Both moves leave the objective
//! unchanged (normalization) or do not increase it (absolute value, for the
//! compact stencil).

use rayon::prelude::*;

use crate::domain::{DiscreteDomain, DomainKind, Field};
use crate::error::{LabError, Result};
use crate::functionals::{self, psi_value_and_gradient, Params};
use crate::instanton::{sample_instanton, InstantonSpec};
use crate::sampling::random_cosine_field;

/// Relative positivity floor added after taking `|u|`.
pub const POSITIVITY_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    #[default]
    ArmijoBacktracking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    Constant,
    /// Instanton centered at the midpoint of the face `x_1 = 0`; `None`
    /// picks `epsilon = 4h`.
    BoundaryInstanton(Option<f64>),
    /// Instanton centered at the domain center.
    InteriorInstanton(Option<f64>),
    Random(u64),
}

impl Start {
    pub fn label(&self) -> String {
        match self {
            Start::Constant => "constant".into(),
            Start::BoundaryInstanton(e) => format!("boundary_instanton({})", fmt_eps(*e)),
            Start::InteriorInstanton(e) => format!("interior_instanton({})", fmt_eps(*e)),
            Start::Random(s) => format!("random({s})"),
        }
    }

    pub fn default_set() -> Vec<Start> {
        vec![
            Start::Constant,
            Start::BoundaryInstanton(None),
            Start::InteriorInstanton(None),
            Start::Random(1),
        ]
    }

    pub fn field(&self, d: &DiscreteDomain) -> Result<Field> {
        let default_eps = 4.0 * d.min_spacing();
        match *self {
            Start::Constant => Ok(Field::constant(d, 1.0)),
            Start::BoundaryInstanton(eps) => {
                let center = d.face_center(0)?;
                sample_instanton(
                    d,
                    &InstantonSpec::new(eps.unwrap_or(default_eps), center, None),
                )
            }
            Start::InteriorInstanton(eps) => sample_instanton(
                d,
                &InstantonSpec::new(eps.unwrap_or(default_eps), d.center(), None),
            ),
            Start::Random(seed) => Ok(random_cosine_field(d, seed)),
        }
    }
}

fn fmt_eps(e: Option<f64>) -> String {
    e.map_or_else(|| "4h".to_string(), |v| format!("{v}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeConfig {
    pub max_iters: usize,
    /// Stop when `|grad psi|_W <= grad_tol * psi`.
    pub grad_tol: f64,
    pub step_rule: StepRule,
    pub armijo_c: f64,
    pub initial_step: f64,
    pub max_backtracks: usize,
    pub starts: Vec<Start>,
    /// Iterations between `u <- |u| + floor` projections.
    pub normalize_every: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            max_iters: 400,
            grad_tol: 1e-3,
            step_rule: StepRule::ArmijoBacktracking,
            armijo_c: 1e-4,
            initial_step: 1e-3,
            max_backtracks: 60,
            starts: Start::default_set(),
            normalize_every: 10,
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(LabError::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(LabError::InvalidParameter("grad_tol must be > 0".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(LabError::InvalidParameter(
                "armijo_c must lie in (0, 1)".into(),
            ));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(LabError::InvalidParameter(
                "initial_step must be > 0".into(),
            ));
        }
        if self.normalize_every < 1 {
            return Err(LabError::InvalidParameter(
                "normalize_every must be >= 1".into(),
            ));
        }
        if self.starts.is_empty() {
            return Err(LabError::InvalidParameter(
                "at least one start is required".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the descent trace; `grad_norm` is the relative stationarity
/// measure `|grad psi|_W / psi`, and the concentration columns refer to the
/// Nehari-scaled iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub start_id: usize,
    pub psi: f64,
    pub beta: f64,
    pub delta: f64,
    pub grad_norm: f64,
    pub max_value: f64,
    pub eps_scale: f64,
    pub boundary_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartStatus {
    Converged,
    MaxIters,
    /// Line search could not decrease the objective.
    Stalled,
    Diverged(String),
}

impl StartStatus {
    pub fn as_str(&self) -> &str {
        match self {
            StartStatus::Converged => "converged",
            StartStatus::MaxIters => "max_iters",
            StartStatus::Stalled => "stalled",
            StartStatus::Diverged(_) => "diverged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct StartOutcome {
    pub start: Start,
    pub initial_psi: f64,
    pub final_psi: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: StartStatus,
    /// Final iterate, normalized to `|u|_{2*} = 1`.
    pub field: Option<Field>,
    pub trace: Vec<TraceRow>,
}

/// Blow-up diagnostics of a field: `M = max |u|` attained at `P` (lowest
/// node index on ties) and `eps = M^{-2/(N-2)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationDiag {
    pub max_value: f64,
    pub eps_scale: f64,
    pub argmax_node: usize,
    pub argmax_point: Vec<f64>,
    pub boundary_distance: f64,
    /// `int_{B(P, eps)} |u|^{2*} / int |u|^{2*}`.
    pub mass_in_eps_ball_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub s_alpha_estimate: f64,
    pub best_start: usize,
    /// Best iterate, normalized to `|u|_{2*} = 1`.
    pub best_field: Field,
    pub starts: Vec<StartOutcome>,
    /// Diagnostics of the Nehari-scaled best field.
    pub concentration: ConcentrationDiag,
    pub converged: bool,
}

impl MinimizeResult {
    pub fn per_start_values(&self) -> Vec<f64> {
        self.starts.iter().map(|s| s.final_psi).collect()
    }

    pub fn iterations_used(&self) -> Vec<usize> {
        self.starts.iter().map(|s| s.iterations).collect()
    }

    pub fn trace(&self) -> impl Iterator<Item = &TraceRow> {
        self.starts.iter().flat_map(|s| s.trace.iter())
    }
}

fn argmax_abs(v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best.1 {
            best = (i, x.abs());
        }
    }
    best
}

/// Fraction of the unit sphere `S^{N-1}` within polar angle `theta0` of a pole.
fn cap_fraction(n: usize, theta0: f64) -> f64 {
    let steps = 1024;
    let simpson = |hi: f64| {
        let h = hi / steps as f64;
        let f = |t: f64| t.sin().powi(n as i32 - 2);
        let mut s = f(0.0) + f(hi);
        for i in 1..steps {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0
    };
    simpson(theta0) / simpson(std::f64::consts::PI)
}

pub fn concentration_diagnostics(d: &DiscreteDomain, u: &Field) -> Result<ConcentrationDiag> {
    d.check(u)?;
    let (node, m) = argmax_abs(u.values());
    if !(m > 0.0) {
        return Err(LabError::ZeroField);
    }
    let n = d.dimension();
    let q = functionals::two_star(n);
    let eps = m.powf(-2.0 / (n as f64 - 2.0));
    let point = d.node_coords(node);
    let w = d.quad_weights();
    let total = d.lp_integral_values(u.values(), q);
    let mut inside = crate::domain::CompensatedSum::default();
    match d.kind() {
        DomainKind::Box => {
            let mut x = vec![0.0; n];
            for (i, (wi, ui)) in w.iter().zip(u.values()).enumerate() {
                d.write_node_coords(i, &mut x);
                let dist2: f64 = x.iter().zip(&point).map(|(a, b)| (a - b) * (a - b)).sum();
                if dist2 <= eps * eps {
                    inside.add(wi * ui.abs().powf(q));
                }
            }
        }
        DomainKind::RadialBall => {
            // P sits at radius rp on some ray; intersect each shell with B(P, eps)
            let rp = point[0];
            for (i, (wi, ui)) in w.iter().zip(u.values()).enumerate() {
                let r = d.node_coords(i)[0];
                let c0 = (r * r + rp * rp - eps * eps) / (2.0 * r * rp);
                let frac = if c0 <= -1.0 {
                    1.0
                } else if c0 >= 1.0 {
                    0.0
                } else {
                    cap_fraction(n, c0.acos())
                };
                if frac > 0.0 {
                    inside.add(frac * wi * ui.abs().powf(q));
                }
            }
        }
    }
    Ok(ConcentrationDiag {
        max_value: m,
        eps_scale: eps,
        argmax_node: node,
        boundary_distance: d.distance_to_boundary(&point_in_rn(d, &point)),
        argmax_point: point,
        mass_in_eps_ball_fraction: inside.value() / total,
    })
}

fn point_in_rn(d: &DiscreteDomain, coords: &[f64]) -> Vec<f64> {
    match d.kind() {
        DomainKind::Box => coords.to_vec(),
        DomainKind::RadialBall => {
            let mut p = vec![0.0; d.dimension()];
            p[0] = coords[0];
            p
        }
    }
}

fn normalize(d: &DiscreteDomain, u: &mut Field, p: &Params) -> Result<()> {
    let norm = d
        .lp_integral_values(u.values(), p.two_star())
        .powf(1.0 / p.two_star());
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(LabError::ZeroField);
    }
    for x in u.values_mut() {
        *x /= norm;
    }
    Ok(())
}

fn project_positive(u: &mut Field) {
    let floor = POSITIVITY_FLOOR * u.max_abs();
    for x in u.values_mut() {
        *x = x.abs() + floor;
    }
}

fn grad_norm(d: &DiscreteDomain, g: &Field) -> f64 {
    d.inner_values(g.values(), g.values()).sqrt()
}

fn run_start(
    d: &DiscreteDomain,
    p: &Params,
    cfg: &MinimizeConfig,
    start_id: usize,
    start: Start,
) -> StartOutcome {
    let mut outcome = StartOutcome {
        start,
        initial_psi: f64::NAN,
        final_psi: f64::NAN,
        grad_norm: f64::NAN,
        iterations: 0,
        status: StartStatus::MaxIters,
        field: None,
        trace: Vec::new(),
    };
    let mut u = match start.field(d) {
        Ok(f) => f,
        Err(e) => {
            outcome.status = StartStatus::Diverged(e.to_string());
            return outcome;
        }
    };
    project_positive(&mut u);
    if let Err(e) = normalize(d, &mut u, p) {
        outcome.status = StartStatus::Diverged(e.to_string());
        return outcome;
    }

    let mut step = cfg.initial_step;
    let mut iter = 0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    loop {
        let (rep, g) = match psi_value_and_gradient(d, &u, p) {
            Ok(v) if v.0.psi.is_finite() => v,
            Ok(_) => {
                outcome.status = StartStatus::Diverged("non-finite objective".into());
                return outcome;
            }
            Err(e) => {
                outcome.status = StartStatus::Diverged(e.to_string());
                return outcome;
            }
        };
        if iter == 0 {
            outcome.initial_psi = rep.psi;
        }
        let gn = grad_norm(d, &g);
        let rel = gn / rep.psi;
        let (node, m) = argmax_abs(u.values());
        let m_nehari = m * rep.nehari_t;
        let coords = d.node_coords(node);
        outcome.trace.push(TraceRow {
            iter,
            start_id,
            psi: rep.psi,
            beta: rep.beta,
            delta: rep.delta,
            grad_norm: rel,
            max_value: m_nehari,
            eps_scale: m_nehari.powf(-2.0 / (p.dimension() as f64 - 2.0)),
            boundary_distance: d.distance_to_boundary(&point_in_rn(d, &coords)),
        });
        outcome.final_psi = rep.psi;
        outcome.grad_norm = rel;
        outcome.iterations = iter;

        if rel <= cfg.grad_tol {
            outcome.status = StartStatus::Converged;
            break;
        }
        if iter >= cfg.max_iters {
            outcome.status = StartStatus::MaxIters;
            break;
        }

        // Barzilai-Borwein trial step, then Armijo backtracking along -g
        if let Some((pu, pg)) = prev.take() {
            let du: Vec<f64> = u.values().iter().zip(&pu).map(|(a, b)| a - b).collect();
            let dg: Vec<f64> = g.values().iter().zip(&pg).map(|(a, b)| a - b).collect();
            let sy = d.inner_values(&du, &dg);
            let ss = d.inner_values(&du, &du);
            if sy > 0.0 && ss > 0.0 {
                step = (ss / sy).clamp(1e-3 * step, 1e3 * step);
            }
        }
        let gg = gn * gn;
        let mut s = step;
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let trial = Field::from_raw(
                u.domain_id(),
                u.values()
                    .iter()
                    .zip(g.values())
                    .map(|(x, gi)| x - s * gi)
                    .collect(),
            );
            if let Ok(v) = functionals::psi_alpha(d, &trial, p) {
                if v.is_finite() && v <= rep.psi - cfg.armijo_c * s * gg {
                    accepted = Some(trial);
                    break;
                }
            }
            s *= 0.5;
        }
        let Some(next) = accepted else {
            outcome.status = StartStatus::Stalled;
            break;
        };
        prev = Some((u.into_values(), g.into_values()));
        u = next;
        step = 2.0 * s;
        iter += 1;
        if iter % cfg.normalize_every == 0 {
            project_positive(&mut u);
        }
        if let Err(e) = normalize(d, &mut u, p) {
            outcome.status = StartStatus::Diverged(e.to_string());
            return outcome;
        }
    }
    outcome.field = Some(u);
    outcome
}

/// Estimates `S_alpha` on the grid: runs every start, keeps the lowest final
/// value. Starts run in parallel; results are merged in start order.
pub fn minimize_psi(
    d: &DiscreteDomain,
    p: &Params,
    cfg: &MinimizeConfig,
) -> Result<MinimizeResult> {
    cfg.validate()?;
    if d.dimension() != p.dimension() {
        return Err(LabError::InvalidParameter(
            "domain and params disagree on N".into(),
        ));
    }
    let starts: Vec<StartOutcome> = cfg
        .starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| run_start(d, p, cfg, i, *s))
        .collect();

    let best = starts
        .iter()
        .enumerate()
        .filter(|(_, s)| s.field.is_some() && s.final_psi.is_finite())
        .min_by(|a, b| a.1.final_psi.total_cmp(&b.1.final_psi))
        .map(|(i, _)| i);
    let Some(best) = best else {
        let detail = starts
            .iter()
            .map(|s| format!("{}: {:?}", s.start.label(), s.status))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(LabError::SolverFailure(format!(
            "all starts failed ({detail})"
        )));
    };
    let best_field = starts[best].field.clone().expect("filtered above");
    let t = functionals::nehari_t(d, &best_field, p)?;
    let concentration = concentration_diagnostics(d, &best_field.scaled(t))?;
    Ok(MinimizeResult {
        s_alpha_estimate: starts[best].final_psi,
        best_start: best,
        best_field,
        converged: starts[best].status == StartStatus::Converged,
        starts,
        concentration,
    })
}

/// Declared relative discretization slack of a grid: the Richardson estimate
/// `(4/3) |psi_h - psi_{h/2}| / psi_{h/2}` for instantons of width `4h`
/// centered at the middle of a face and at the center (center only on radial
/// grids), maximized over the centers.
pub fn discretization_tolerance(d: &DiscreteDomain, p: &Params) -> Result<f64> {
    let eps = 4.0 * d.min_spacing();
    let fine = match d.kind() {
        DomainKind::Box => DiscreteDomain::build_box_grid_with(
            d.dimension(),
            d.extent(),
            2 * d.shape()[0] - 1,
            d.stencil(),
        )?,
        DomainKind::RadialBall => DiscreteDomain::build_radial_ball_grid_with(
            d.dimension(),
            d.extent()[0],
            2 * d.shape()[0],
            d.stencil(),
        )?,
    };
    let mut centers = vec![d.center()];
    if d.kind() == DomainKind::Box {
        centers.push(d.face_center(0)?);
    }
    let mut tol: f64 = 0.0;
    for c in centers {
        let spec = InstantonSpec::new(eps, c, None);
        let coarse = functionals::psi_alpha(d, &sample_instanton(d, &spec)?, p)?;
        let finer = functionals::psi_alpha(&fine, &sample_instanton(&fine, &spec)?, p)?;
        tol = tol.max(4.0 / 3.0 * (coarse - finer).abs() / finer);
    }
    Ok(tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_box() -> DiscreteDomain {
        DiscreteDomain::build_box_grid(5, &[1.0; 5], 5).unwrap()
    }

    #[test]
    fn eps_scale_formula() {
        let d = small_box();
        let mut u = Field::constant(&d, 1.0);
        u.values_mut()[100] = 16.0;
        let c = concentration_diagnostics(&d, &u).unwrap();
        assert_eq!(c.argmax_node, 100);
        assert_eq!(c.max_value, 16.0);
        assert!((c.eps_scale - 16f64.powf(-2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_field_diagnostics() {
        let d = small_box();
        let c = concentration_diagnostics(&d, &Field::constant(&d, 0.5)).unwrap();
        assert_eq!(c.argmax_node, 0);
        assert_eq!(c.boundary_distance, 0.0);
        // eps = 0.5^{-2/3} > 1: the ball around the corner reaches nodes with
        // |x| <= eps
        let mut expect = 0.0;
        for i in 0..d.num_nodes() {
            let x = d.node_coords(i);
            if x.iter().map(|v| v * v).sum::<f64>() <= c.eps_scale * c.eps_scale {
                expect += d.quad_weights()[i];
            }
        }
        assert!((c.mass_in_eps_ball_fraction - expect / d.measure()).abs() < 1e-12);
    }

    #[test]
    fn radial_cap_fraction_limits() {
        assert!((cap_fraction(5, std::f64::consts::PI) - 1.0).abs() < 1e-12);
        let half = cap_fraction(5, std::f64::consts::FRAC_PI_2);
        assert!((half - 0.5).abs() < 1e-10, "{half}");
        assert_eq!(cap_fraction(5, 0.0), 0.0);
    }

    #[test]
    fn radial_diagnostics_of_centered_bump() {
        let d = DiscreteDomain::build_radial_ball_grid(5, 1.0, 256).unwrap();
        let u = sample_instanton(&d, &InstantonSpec::new(0.05, vec![0.0; 5], None)).unwrap();
        let c = concentration_diagnostics(&d, &u).unwrap();
        assert_eq!(c.argmax_node, 0);
        assert!((c.boundary_distance - (1.0 - 0.5 / 256.0)).abs() < 1e-12);
        assert!(c.mass_in_eps_ball_fraction > 0.0 && c.mass_in_eps_ball_fraction < 1.0);
    }

    #[test]
    fn config_validation() {
        let bad = MinimizeConfig {
            armijo_c: 1.0,
            ..MinimizeConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = MinimizeConfig {
            starts: vec![],
            ..MinimizeConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(MinimizeConfig::default().validate().is_ok());
    }

    #[test]
    fn boundary_start_rejected_on_radial_grid() {
        let d = DiscreteDomain::build_radial_ball_grid(5, 1.0, 64).unwrap();
        assert!(Start::BoundaryInstanton(None).field(&d).is_err());
        let p = Params::new(5, 1.0, 0.0).unwrap();
        let cfg = MinimizeConfig {
            starts: vec![Start::BoundaryInstanton(None)],
            max_iters: 5,
            ..MinimizeConfig::default()
        };
        assert!(matches!(
            minimize_psi(&d, &p, &cfg),
            Err(LabError::SolverFailure(_))
        ));
    }

    #[test]
    fn descent_never_increases_and_beats_constant() {
        let d = small_box();
        let p = Params::new(5, 1.0, 0.0).unwrap();
        let cfg = MinimizeConfig {
            max_iters: 60,
            ..MinimizeConfig::default()
        };
        let res = minimize_psi(&d, &p, &cfg).unwrap();
        for s in &res.starts {
            for w in s.trace.windows(2) {
                assert!(
                    w[1].psi <= w[0].psi * (1.0 + 1e-10),
                    "{} -> {}",
                    w[0].psi,
                    w[1].psi
                );
            }
            assert!(s.final_psi <= s.initial_psi);
        }
        // constant start value is a |Omega|^{2/N} = 1
        assert!(res.s_alpha_estimate <= 1.0 + 1e-10);
        assert!(res
            .per_start_values()
            .iter()
            .all(|v| *v >= res.s_alpha_estimate));
    }
}
