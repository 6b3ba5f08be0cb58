//! The instanton family `U_{eps,y}(x) = eps^{-(N-2)/2} U((x - y)/eps)` with
//! `U(x) = (N(N-2) / (N(N-2) + |x|^2))^{(N-2)/2}`, and the Sobolev constant
//! `S` obtained as its gradient/`L^{2*}` quotient over R^N.

use crate::domain::{unit_sphere_area, DiscreteDomain, DomainKind, Field, MIN_DIMENSION};
use crate::error::{LabError, Result};

pub const MIN_S_QUAD_POINTS: usize = 4096;
pub const MIN_S_TRUNCATION: f64 = 1e3;

/// Resolution used by [`sobolev_constant`].
pub const DEFAULT_S_QUAD_POINTS: usize = 8192;
pub const DEFAULT_S_TRUNCATION: f64 = 1e4;

fn check_dimension(n: usize) -> Result<()> {
    if n < MIN_DIMENSION {
        return Err(LabError::DimensionTooSmall(n));
    }
    Ok(())
}

/// `U(r)` for `r = |x|`.
pub fn instanton_radial(n: usize, r: f64) -> f64 {
    let c2 = (n * (n - 2)) as f64;
    (c2 / (c2 + r * r)).powf(0.5 * (n as f64 - 2.0))
}

pub fn instanton_value(n: usize, x: &[f64]) -> Result<f64> {
    check_dimension(n)?;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok(instanton_radial(n, r2.sqrt()))
}

/// `int_0^R r^q K(r)^N dr` with `K = c^2/(c^2 + r^2)`, by composite Simpson
/// in `s = asinh(r/c)`.
fn core_integral(n: usize, c: f64, q: f64, radius: f64, intervals: usize) -> f64 {
    let s_max = (radius / c).asinh();
    let h = s_max / intervals as f64;
    let integrand = |s: f64| {
        let r = c * s.sinh();
        let k = c * c / (c * c + r * r);
        r.powf(q) * k.powi(n as i32) * c * s.cosh()
    };
    let mut acc = crate::domain::CompensatedSum::default();
    for i in 0..=intervals {
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc.add(w * integrand(i as f64 * h));
    }
    acc.value() * h / 3.0
}

/// `int_R^inf r^q K(r)^N dr` from the binomial series of
/// `(1 + c^2/r^2)^{-N}`, integrated term by term; needs `R > c`.
fn tail_integral(n: usize, c: f64, q: f64, radius: f64) -> f64 {
    let nf = n as f64;
    let ratio = (c / radius).powi(2);
    let lead = c.powf(2.0 * nf) * radius.powf(q - 2.0 * nf + 1.0);
    let mut coef = 1.0; // (-1)^k C(N+k-1, k)
    let mut geo = 1.0;
    let mut sum = 0.0;
    for k in 0..200 {
        let kf = k as f64;
        let term = coef * geo / (2.0 * nf + 2.0 * kf - q - 1.0);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        coef *= -(nf + kf) / (kf + 1.0);
        geo *= ratio;
    }
    lead * sum
}

/// Gradient/`L^{2*}` quotient of `U_{eps,0}` over R^N by radial quadrature on
/// `[0, truncation_radius]` plus the exact tail beyond it.
pub fn instanton_quotient(
    n: usize,
    epsilon: f64,
    quad_points: usize,
    truncation_radius: f64,
) -> Result<f64> {
    check_dimension(n)?;
    if quad_points < MIN_S_QUAD_POINTS {
        return Err(LabError::InsufficientResolution {
            what: "quad_points",
            got: quad_points,
            min: MIN_S_QUAD_POINTS,
        });
    }
    if !(truncation_radius >= MIN_S_TRUNCATION && truncation_radius.is_finite()) {
        return Err(LabError::InvalidParameter(format!(
            "truncation radius must be >= {MIN_S_TRUNCATION}, got {truncation_radius}"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(LabError::InvalidParameter(format!(
            "epsilon must be > 0, got {epsilon}"
        )));
    }
    let nf = n as f64;
    let c = epsilon * (nf * (nf - 2.0)).sqrt();
    if truncation_radius < 2.0 * c {
        return Err(LabError::InvalidParameter(format!(
            "truncation radius {truncation_radius} too small for epsilon {epsilon}"
        )));
    }
    let intervals = quad_points + quad_points % 2;
    let m = 0.5 * (nf - 2.0);
    let area = unit_sphere_area(n);
    let radial = |q: f64| {
        core_integral(n, c, q, truncation_radius, intervals)
            + tail_integral(n, c, q, truncation_radius)
    };
    // |U'|^2 r^{N-1} = eps^{-(N-2)} 4 m^2 c^{-4} r^{N+1} K^N
    let grad = area * epsilon.powf(-(nf - 2.0)) * 4.0 * m * m / c.powi(4) * radial(nf + 1.0);
    // |U|^{2*} r^{N-1} = eps^{-N} r^{N-1} K^N
    let star = area * epsilon.powf(-nf) * radial(nf - 1.0);
    Ok(grad / star.powf((nf - 2.0) / nf))
}

/// The sharp Sobolev constant `S` of R^N computed from the instanton.
pub fn compute_s(n: usize, quad_points: usize, truncation_radius: f64) -> Result<f64> {
    instanton_quotient(n, 1.0, quad_points, truncation_radius)
}

pub fn sobolev_constant(n: usize) -> Result<f64> {
    compute_s(n, DEFAULT_S_QUAD_POINTS, DEFAULT_S_TRUNCATION)
}

/// `S / 2^{2/N}`, the constant that boundary concentration achieves.
pub fn half_space_threshold(n: usize) -> Result<f64> {
    Ok(sobolev_constant(n)? * 2f64.powf(-2.0 / n as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstantonSpec {
    pub epsilon: f64,
    pub center: Vec<f64>,
    pub cutoff_radius: Option<f64>,
}

impl InstantonSpec {
    pub fn new(epsilon: f64, center: Vec<f64>, cutoff_radius: Option<f64>) -> Self {
        Self {
            epsilon,
            center,
            cutoff_radius,
        }
    }

    pub fn validate(&self, d: &DiscreteDomain) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "instanton epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if let Some(rc) = self.cutoff_radius {
            if !(rc > 4.0 * self.epsilon) || !rc.is_finite() {
                return Err(LabError::InvalidParameter(format!(
                    "cutoff radius {rc} must exceed 4 epsilon = {}",
                    4.0 * self.epsilon
                )));
            }
        }
        if self.center.len() != d.dimension() {
            return Err(LabError::InvalidParameter(format!(
                "instanton center has {} coordinates, domain has N = {}",
                self.center.len(),
                d.dimension()
            )));
        }
        match d.kind() {
            DomainKind::Box => {
                let tol = 1e-12;
                let inside = self
                    .center
                    .iter()
                    .zip(d.extent())
                    .all(|(y, l)| *y >= -tol * l && *y <= l * (1.0 + tol));
                if !inside {
                    return Err(LabError::InvalidParameter(
                        "instanton center outside the closed box".into(),
                    ));
                }
            }
            DomainKind::RadialBall => {
                if self.center.iter().any(|y| *y != 0.0) {
                    return Err(LabError::InvalidParameter(
                        "radial domains only hold instantons centered at the origin".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// C^1 cutoff: 1 on `[0, 1/2]`, 0 on `[1, inf)`, cubic in between.
pub fn cutoff(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let t = 2.0 * s - 1.0;
        1.0 - t * t * (3.0 - 2.0 * t)
    }
}

pub fn sample_instanton(d: &DiscreteDomain, spec: &InstantonSpec) -> Result<Field> {
    spec.validate(d)?;
    let n = d.dimension();
    let amp = spec.epsilon.powf(-0.5 * (n as f64 - 2.0));
    let field = Field::from_fn(d, |x| {
        let dist = match d.kind() {
            DomainKind::Box => x
                .iter()
                .zip(&spec.center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            DomainKind::RadialBall => x[0],
        };
        let chi = spec.cutoff_radius.map_or(1.0, |rc| cutoff(dist / rc));
        amp * instanton_radial(n, dist / spec.epsilon) * chi
    });
    if field.max_abs() == 0.0 {
        return Err(LabError::ZeroField);
    }
    Ok(field)
}
