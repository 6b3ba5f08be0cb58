//! Scalar functionals of a field and their first variations.
//!
//! With `E = ||u||^2 = |grad u|_2^2 + a |u|_2^2`, `J = int |u|^{2*}` and
//! `I = int |u|^{2#}`:
//!
//! * `delta = I / (sqrt(E) sqrt(J))`
//! * `beta  = E / J^{2/2*}`
//! * `gamma = I / J^{2#/2*}`
//! * `psi   = beta (1 + alpha delta)`
//! * `phi   = (E/2 - J/2*) (1 + alpha delta)^{N/2}`
//! * `t(u)  = (E / J)^{(N-2)/4}`, the scaling onto the Nehari manifold.
//!
//! Gradients are returned as fields `g` with `<g, phi>_W` equal to the
//! directional derivative, `W` being the quadrature weights of the domain.

use crate::domain::{CompensatedSum, DiscreteDomain, Field};
use crate::error::{LabError, Result};

/// Relative size below which `int |u|^{2*}` counts as zero.
const ZERO_GUARD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    a: f64,
    alpha: f64,
    dimension: usize,
}

impl Params {
    pub fn new(dimension: usize, a: f64, alpha: f64) -> Result<Self> {
        if dimension < crate::domain::MIN_DIMENSION {
            return Err(LabError::DimensionTooSmall(dimension));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(LabError::InvalidParameter(format!(
                "a must be > 0, got {a}"
            )));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(LabError::InvalidParameter(format!(
                "alpha must be >= 0, got {alpha}"
            )));
        }
        Ok(Self {
            a,
            alpha,
            dimension,
        })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.dimension, self.a, alpha)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Critical exponent `2N/(N-2)`.
    pub fn two_star(&self) -> f64 {
        two_star(self.dimension)
    }

    /// Intermediate exponent `2(N-1)/(N-2)`.
    pub fn two_sharp(&self) -> f64 {
        two_sharp(self.dimension)
    }
}

pub fn two_star(n: usize) -> f64 {
    let n = n as f64;
    2.0 * n / (n - 2.0)
}

pub fn two_sharp(n: usize) -> f64 {
    let n = n as f64;
    2.0 * (n - 1.0) / (n - 2.0)
}

/// Every scalar functional of one field at one `(a, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalReport {
    pub grad_sq: f64,
    pub h1_norm_sq: f64,
    pub l2: f64,
    pub l2star: f64,
    pub l2sharp_int: f64,
    pub delta: f64,
    pub beta: f64,
    pub gamma: f64,
    pub psi: f64,
    pub phi: f64,
    pub nehari_t: f64,
}

/// The raw integrals every functional is assembled from.
#[derive(Debug, Clone, Copy)]
struct Integrals {
    grad_sq: f64,
    l2_sq: f64,
    star: f64,
    sharp: f64,
}

impl Integrals {
    fn compute(d: &DiscreteDomain, u: &Field, p: &Params) -> Result<Self> {
        d.check(u)?;
        check_dimension(d, p)?;
        let v = u.values();
        let scale = u.max_abs();
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(LabError::ZeroField);
        }
        let n = p.dimension;
        let root = unit_root(n);
        let (mut l2, mut star, mut sharp) = (
            CompensatedSum::default(),
            CompensatedSum::default(),
            CompensatedSum::default(),
        );
        for (w, x) in d.quad_weights().iter().zip(v) {
            let r = root(x.abs());
            let sh = r.powi(2 * n as i32 - 2);
            l2.add(w * x * x);
            sharp.add(w * sh);
            star.add(w * sh * r * r);
        }
        let star = star.value();
        if !(star > ZERO_GUARD * scale.powf(p.two_star())) {
            return Err(LabError::ZeroField);
        }
        Ok(Self {
            grad_sq: d.gradient_inner_values(v, v),
            l2_sq: l2.value(),
            star,
            sharp: sharp.value(),
        })
    }

    fn h1(&self, p: &Params) -> f64 {
        self.grad_sq + p.a * self.l2_sq
    }

    fn delta(&self, p: &Params) -> f64 {
        self.sharp / (self.h1(p).sqrt() * self.star.sqrt())
    }

    fn beta(&self, p: &Params) -> f64 {
        self.h1(p) / self.star.powf(2.0 / p.two_star())
    }
}

fn check_dimension(d: &DiscreteDomain, p: &Params) -> Result<()> {
    if d.dimension() != p.dimension {
        return Err(LabError::InvalidParameter(format!(
            "domain has N = {} but params have N = {}",
            d.dimension(),
            p.dimension
        )));
    }
    Ok(())
}

pub fn evaluate(d: &DiscreteDomain, u: &Field, p: &Params) -> Result<FunctionalReport> {
    Ok(evaluate_from(&Integrals::compute(d, u, p)?, p))
}

/// `||u||^2 = |grad u|_2^2 + a |u|_2^2`.
pub fn h1_norm_sq(d: &DiscreteDomain, u: &Field, p: &Params) -> Result<f64> {
    Ok(Integrals::compute(d, u, p)?.h1(p))
}

pub fn delta(d: &DiscreteDomain, u: &Field, p: &Params) -> Result<f64> {
    Ok(Integrals::compute(d, u, p)?.delta(p))
}

pub fn beta(d: &DiscreteDomain, u: &Field, p: &Params) -> Result<f64> {
    Ok(Integrals::compute(d, u, p)?.beta(p))
}

pub fn gamma(d: &DiscreteDomain, u: &Field, p: &Params) -> Result<f64> {
    Ok(evaluate(d, u, p)?.gamma)
}

pub fn psi_alpha(d: &DiscreteDomain, u: &Field, p: &Params) -> Result<f64> {
    let ints = Integrals::compute(d, u, p)?;
    Ok(ints.beta(p) * (1.0 + p.alpha * ints.delta(p)))
}

pub fn phi_alpha(d: &DiscreteDomain, u: &Field, p: &Params) -> Result<f64> {
    Ok(evaluate(d, u, p)?.phi)
}

pub fn nehari_t(d: &DiscreteDomain, u: &Field, p: &Params) -> Result<f64> {
    Ok(evaluate(d, u, p)?.nehari_t)
}

/// `|x|^{1/(N-2)}`. Both exponents `2*` and `2#` are integer multiples of
/// `1/(N-2)`, so one root per node gives every power used here.
fn unit_root(n: usize) -> impl Fn(f64) -> f64 {
    let e = 1.0 / (n as f64 - 2.0);
    move |x: f64| match n {
        5 => x.cbrt(),
        6 => x.sqrt().sqrt(),
        _ => x.powf(e),
    }
}

/// `(|u|^{2*-2} u, |u|^{2#-2} u)` pointwise.
fn signed_powers(v: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let root = unit_root(n);
    v.iter()
        .map(|&x| {
            let r = root(x.abs());
            let sh = x.signum() * r.powi(n as i32);
            (sh * r * r, sh)
        })
        .unzip()
}

/// Pieces shared by the gradient fields.
struct Variation {
    ints: Integrals,
    /// `-Delta_h u + a u`
    a_u: Vec<f64>,
    /// `|u|^{2*-2} u`
    star_pow: Vec<f64>,
    /// `|u|^{2#-2} u`
    sharp_pow: Vec<f64>,
}

impl Variation {
    fn compute(d: &DiscreteDomain, u: &Field, p: &Params) -> Result<Self> {
        let ints = Integrals::compute(d, u, p)?;
        let v = u.values();
        let mut a_u = d.neg_laplacian_values(v);
        for (x, ui) in a_u.iter_mut().zip(v) {
            *x += p.a * ui;
        }
        let (star_pow, sharp_pow) = signed_powers(v, p.dimension);
        Ok(Self {
            ints,
            a_u,
            star_pow,
            sharp_pow,
        })
    }

    /// Gradient field of `delta`.
    fn delta_field(&self, p: &Params) -> Vec<f64> {
        let e = self.ints.h1(p);
        let dl = self.ints.delta(p);
        let c_h1 = -dl / e;
        let c_sharp = p.two_sharp() * dl / self.ints.sharp;
        let c_star = -0.5 * p.two_star() * dl / self.ints.star;
        self.a_u
            .iter()
            .zip(self.sharp_pow.iter().zip(&self.star_pow))
            .map(|(au, (sh, st))| c_h1 * au + c_sharp * sh + c_star * st)
            .collect()
    }
}

/// `delta'(u)(phi_dir)` from the three-term formula
/// `-(delta/E) int(grad u . grad phi + a u phi) + 2# (delta/I) int |u|^{2#-2} u phi
///  - (2*/2)(delta/J) int |u|^{2*-2} u phi`.
pub fn delta_prime(d: &DiscreteDomain, u: &Field, phi_dir: &Field, p: &Params) -> Result<f64> {
    let ints = Integrals::compute(d, u, p)?;
    d.check(phi_dir)?;
    let (uv, fv) = (u.values(), phi_dir.values());
    let e = ints.h1(p);
    let dl = ints.delta(p);
    let bilinear = d.gradient_inner_values(uv, fv) + p.a * d.inner_values(uv, fv);
    let (star_pow, sharp_pow) = signed_powers(uv, p.dimension);
    let sharp_term = d.inner_values(&sharp_pow, fv);
    let star_term = d.inner_values(&star_pow, fv);
    Ok(
        -dl / e * bilinear + p.two_sharp() * dl / ints.sharp * sharp_term
            - 0.5 * p.two_star() * dl / ints.star * star_term,
    )
}

/// Gradient field of `psi = beta (1 + alpha delta)` in the quadrature inner
/// product.
pub fn psi_gradient(d: &DiscreteDomain, u: &Field, p: &Params) -> Result<Field> {
    Ok(psi_value_and_gradient(d, u, p)?.1)
}

pub(crate) fn psi_value_and_gradient(
    d: &DiscreteDomain,
    u: &Field,
    p: &Params,
) -> Result<(FunctionalReport, Field)> {
    let var = Variation::compute(d, u, p)?;
    let report = evaluate_from(&var.ints, p);
    let (e, j) = (report.h1_norm_sq, var.ints.star);
    let beta = report.beta;
    let dl = report.delta;
    // d beta = beta (2 A u / E - 2 |u|^{2*-2} u / J)
    let c_bh = 2.0 * beta / e * (1.0 + p.alpha * dl);
    let c_bs = -2.0 * beta / j * (1.0 + p.alpha * dl);
    let g: Vec<f64> = if p.alpha == 0.0 {
        var.a_u
            .iter()
            .zip(&var.star_pow)
            .map(|(au, st)| c_bh * au + c_bs * st)
            .collect()
    } else {
        let dd = var.delta_field(p);
        var.a_u
            .iter()
            .zip(var.star_pow.iter().zip(&dd))
            .map(|(au, (st, dfi))| c_bh * au + c_bs * st + p.alpha * beta * dfi)
            .collect()
    };
    Ok((report, Field::from_raw(u.domain_id(), g)))
}

fn evaluate_from(ints: &Integrals, p: &Params) -> FunctionalReport {
    let e = ints.h1(p);
    let delta = ints.delta(p);
    let beta = ints.beta(p);
    let n = p.dimension as f64;
    FunctionalReport {
        grad_sq: ints.grad_sq,
        h1_norm_sq: e,
        l2: ints.l2_sq.sqrt(),
        l2star: ints.star.powf(1.0 / p.two_star()),
        l2sharp_int: ints.sharp,
        delta,
        beta,
        gamma: ints.sharp / ints.star.powf(p.two_sharp() / p.two_star()),
        psi: beta * (1.0 + p.alpha * delta),
        phi: (0.5 * e - ints.star / p.two_star()) * (1.0 + p.alpha * delta).powf(n / 2.0),
        nehari_t: (e / ints.star).powf((n - 2.0) / 4.0),
    }
}

fn require_positive(u: &Field) -> Result<()> {
    match u.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        Some((node, &value)) => Err(LabError::NonPositiveField { node, value }),
        None => Ok(()),
    }
}

/// Critical-point residual of `phi_alpha`, with the positive factor
/// `(1 + alpha delta)^{N/2 - 1}` divided out:
///
/// `(-Delta u + a u - u^{2*-1})(1 + alpha delta) + (N/2) phi_0 alpha delta'(u)`
///
/// where `delta'(u)` is the gradient field of `delta`. At `alpha = 0` this is
/// `-Delta u + a u - u^{2*-1}`.
pub fn el_residual(d: &DiscreteDomain, u: &Field, p: &Params) -> Result<Field> {
    d.check(u)?;
    require_positive(u)?;
    let var = Variation::compute(d, u, p)?;
    let rep = evaluate_from(&var.ints, p);
    let one_ad = 1.0 + p.alpha * rep.delta;
    let mut r: Vec<f64> = var
        .a_u
        .iter()
        .zip(&var.star_pow)
        .map(|(au, st)| (au - st) * one_ad)
        .collect();
    if p.alpha != 0.0 {
        let phi0 = 0.5 * rep.h1_norm_sq - var.ints.star / p.two_star();
        let c = 0.5 * p.dimension as f64 * phi0 * p.alpha;
        for (ri, dfi) in r.iter_mut().zip(var.delta_field(p)) {
            *ri += c * dfi;
        }
    }
    Ok(Field::from_raw(u.domain_id(), r))
}

/// Pointwise residual of the boundary-value system written with its
/// Nehari-reduced constants:
///
/// `(1 + alpha delta / 2)(-Delta u + a u) + (2#/2) alpha u^{2#-1}
///  - (1 + (2# + 1)/2 alpha delta) u^{2*-1}`.
///
/// On the Nehari manifold it coincides with [`el_residual`].
pub fn system_residual(d: &DiscreteDomain, u: &Field, p: &Params) -> Result<Field> {
    d.check(u)?;
    require_positive(u)?;
    let var = Variation::compute(d, u, p)?;
    let ad = p.alpha * var.ints.delta(p);
    let lhs = 1.0 + 0.5 * ad;
    let mid = 0.5 * p.two_sharp() * p.alpha;
    let rhs = 1.0 + 0.5 * (p.two_sharp() + 1.0) * ad;
    let r = var
        .a_u
        .iter()
        .zip(var.sharp_pow.iter().zip(&var.star_pow))
        .map(|(au, (sh, st))| lhs * au + mid * sh - rhs * st)
        .collect();
    Ok(Field::from_raw(u.domain_id(), r))
}

/// Tested against `u`, the system above gives
/// `(1 + alpha delta/2) x^2 + (2#/2) alpha delta x - (1 + (2#+1)/2 alpha delta) = 0`
/// in `x = ||u|| / |u|_{2*}^{2*/2}`. Returns its positive root, which is 1 for
/// every admissible `alpha delta`.
pub fn nehari_quadratic_root(alpha_delta: f64, n: usize) -> f64 {
    let s = two_sharp(n);
    let qa = 1.0 + 0.5 * alpha_delta;
    let qb = 0.5 * s * alpha_delta;
    let qc = -(1.0 + 0.5 * (s + 1.0) * alpha_delta);
    let disc = qb * qb - 4.0 * qa * qc;
    // stable form of (-b + sqrt(disc)) / 2a for b >= 0
    -2.0 * qc / (qb + disc.sqrt())
}

/// The trial profiles comparing a weak limit with a concentrating bubble:
///
/// `f(x) = beta x^{2/2*} + S_half (1-x)^{2/2*}
///         + alpha gamma x^{2#/2*} sqrt(beta x^{2/2*} + S_half (1-x)^{2/2*})`
///
/// `g(x) = beta x + S_half (1-x) + alpha gamma x sqrt(beta x + S_half (1-x))`
pub fn f_g_profile(
    n: usize,
    beta_v: f64,
    gamma_v: f64,
    alpha: f64,
    s_half: f64,
    x: f64,
) -> Result<(f64, f64)> {
    if n < crate::domain::MIN_DIMENSION {
        return Err(LabError::DimensionTooSmall(n));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(LabError::OutOfRange(format!("x = {x} outside [0, 1]")));
    }
    if !(beta_v > 0.0 && s_half > 0.0 && gamma_v >= 0.0 && alpha >= 0.0) {
        return Err(LabError::InvalidParameter(
            "need beta, S_half > 0 and gamma, alpha >= 0".into(),
        ));
    }
    let e2 = 2.0 / two_star(n);
    let es = two_sharp(n) / two_star(n);
    let base_f = beta_v * x.powf(e2) + s_half * (1.0 - x).powf(e2);
    let f = base_f + alpha * gamma_v * x.powf(es) * base_f.sqrt();
    let base_g = beta_v * x + s_half * (1.0 - x);
    let g = base_g + alpha * gamma_v * x * base_g.sqrt();
    Ok((f, g))
}
