//! Bracketing the critical parameter `alpha_0`, the first `alpha` at which
//! `S_alpha` reaches `S / 2^{2/N}`, plus the constant-function lower bound and
//! the cubic that fixes the Nehari scaling for the `u^{1/3}` / `u^{7/3}`
//! Dirichlet model problem in R^5.

use crate::domain::DiscreteDomain;
use crate::error::{LabError, Result};
use crate::functionals::Params;
use crate::instanton::sobolev_constant;
use crate::minimize::{discretization_tolerance, minimize_psi, MinimizeConfig};

/// Largest `alpha` probed while searching for an at/above sample.
pub const ALPHA_CAP: f64 = 1e3;

/// `max{ (S / (2|Omega|)^{2/N} - a) / sqrt(a), 0 }`: the value of `alpha` at
/// which the constant function reaches the threshold.
pub fn analytic_lower_bound(n: usize, a: f64, omega_measure: f64, s: f64) -> Result<f64> {
    if !(a > 0.0 && omega_measure > 0.0 && s > 0.0) {
        return Err(LabError::InvalidParameter(
            "analytic lower bound needs a, |Omega|, S > 0".into(),
        ));
    }
    let level = s / (2.0 * omega_measure).powf(2.0 / n as f64);
    Ok(((level - a) / a.sqrt()).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub alpha: f64,
    pub s_alpha: f64,
    /// `s_alpha < threshold - margin`.
    pub below: bool,
    /// Concentration scale of the minimizer is under two grid spacings.
    pub grid_limited: bool,
    pub eps_scale: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alpha0Estimate {
    pub lower: f64,
    pub upper: f64,
    /// `false` when no at/above sample was found up to [`ALPHA_CAP`].
    pub upper_resolved: bool,
    pub threshold: f64,
    pub margin: f64,
    pub tol_disc: f64,
    pub analytic_lower_bound: f64,
    pub evaluations: Vec<Evaluation>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alpha0Settings {
    pub bisect_tol: f64,
    /// Absolute classification margin; `None` uses twice the grid slack.
    pub margin: Option<f64>,
}

impl Default for Alpha0Settings {
    fn default() -> Self {
        Self {
            bisect_tol: 0.5,
            margin: None,
        }
    }
}

/// Default margin: `max(2 tol_disc, 1e-3) * threshold`.
pub fn default_margin(tol_disc: f64, threshold: f64) -> f64 {
    (2.0 * tol_disc).max(1e-3) * threshold
}

pub fn classify(
    d: &DiscreteDomain,
    p: &Params,
    cfg: &MinimizeConfig,
    threshold: f64,
    margin: f64,
) -> Result<Evaluation> {
    let res = minimize_psi(d, p, cfg)?;
    let eps = res.concentration.eps_scale;
    Ok(Evaluation {
        alpha: p.alpha(),
        s_alpha: res.s_alpha_estimate,
        below: res.s_alpha_estimate < threshold - margin,
        grid_limited: eps < 2.0 * d.min_spacing(),
        eps_scale: eps,
        converged: res.converged,
    })
}

fn check_inversions(evals: &[Evaluation]) -> Result<()> {
    for b in evals.iter().filter(|e| e.below) {
        if let Some(a) = evals.iter().find(|e| !e.below && e.alpha <= b.alpha) {
            return Err(LabError::ClassificationInversion {
                below_alpha: b.alpha,
                above_alpha: a.alpha,
            });
        }
    }
    Ok(())
}

/// Bisection on `alpha`. The bracket starts at
/// `[lb, lb + 10 (1 + sqrt a)]`, `lb` the analytic lower bound; the upper end
/// is pushed out by doubling the width until a sample is at/above the
/// threshold or [`ALPHA_CAP`] is reached. `alpha = 0` is always evaluated as
/// an anchor for the inversion check.
pub fn estimate_alpha0(
    d: &DiscreteDomain,
    p_base: &Params,
    cfg: &MinimizeConfig,
    settings: &Alpha0Settings,
) -> Result<Alpha0Estimate> {
    if !(settings.bisect_tol > 0.0) {
        return Err(LabError::InvalidParameter("bisect_tol must be > 0".into()));
    }
    let n = p_base.dimension();
    let s = sobolev_constant(n)?;
    let threshold = s * 2f64.powf(-2.0 / n as f64);
    let tol_disc = discretization_tolerance(d, &p_base.with_alpha(0.0)?)?;
    let margin = settings
        .margin
        .unwrap_or_else(|| default_margin(tol_disc, threshold));
    if !(margin > tol_disc * threshold) {
        return Err(LabError::InvalidParameter(format!(
            "margin {margin} must exceed the grid slack tol_disc * threshold = {}",
            tol_disc * threshold
        )));
    }
    let lb = analytic_lower_bound(n, p_base.a(), d.measure(), s)?;

    let mut evals = Vec::new();
    let eval_at = |alpha: f64, evals: &mut Vec<Evaluation>| -> Result<bool> {
        let e = classify(d, &p_base.with_alpha(alpha)?, cfg, threshold, margin)?;
        let below = e.below;
        evals.push(e);
        check_inversions(evals)?;
        Ok(below)
    };

    eval_at(0.0, &mut evals)?;

    let mut lower = lb;
    let mut width = 10.0 * (1.0 + p_base.a().sqrt());
    let mut upper = (lb + width).min(ALPHA_CAP);
    let mut upper_resolved = false;
    loop {
        if !eval_at(upper, &mut evals)? {
            upper_resolved = true;
            break;
        }
        lower = upper;
        if upper >= ALPHA_CAP {
            break;
        }
        width *= 2.0;
        upper = (lb + width).min(ALPHA_CAP);
    }

    if upper_resolved {
        while upper - lower > settings.bisect_tol {
            let mid = 0.5 * (lower + upper);
            if eval_at(mid, &mut evals)? {
                lower = mid;
            } else {
                upper = mid;
            }
        }
    } else {
        // every probe was below: the bracket is [cap, cap + bisect_tol]
        upper = lower + settings.bisect_tol;
    }

    Ok(Alpha0Estimate {
        lower,
        upper,
        upper_resolved,
        threshold,
        margin,
        tol_disc,
        analytic_lower_bound: lb,
        evaluations: evals,
    })
}

/// Positive root of `A s + B - C s^3 = 0` for `A > 0`, `B >= 0`, `C > 0`.
///
/// `h(s) = A s + B - C s^3` has `h(0) = B >= 0`, increases up to
/// `sqrt(A / 3C)` and then decreases to `-inf`, so the positive root is unique
/// and lies on the concave decreasing branch, where Newton iterates started to
/// the right of it decrease monotonically onto it.
pub fn solve_nehari_cubic(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(LabError::InvalidParameter(format!(
            "cubic needs A > 0, got {a}"
        )));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(LabError::InvalidParameter(format!(
            "cubic needs B >= 0, got {b}"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(LabError::InvalidParameter(format!(
            "cubic needs C > 0, got {c}"
        )));
    }
    let h = |s: f64| a * s + b - c * s * s * s;
    let dh = |s: f64| a - 3.0 * c * s * s;
    let k = (a + b) / c;
    // root <= max(sqrt(K), cbrt(K)); start right of it and right of the hump
    let mut s = (k.cbrt() + 1.0)
        .max(k.sqrt())
        .max((a / (3.0 * c)).sqrt() * 1.5);
    while h(s) > 0.0 {
        s *= 2.0;
    }
    let mut lo = (a / (3.0 * c)).sqrt();
    let mut hi = s;
    for _ in 0..200 {
        let hs = h(s);
        if hs == 0.0 {
            return Ok(s);
        }
        if hs > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let mut next = s - hs / dh(s);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 4.0 * f64::EPSILON * s {
            // settle on whichever neighbour has the smaller residual
            return Ok(if h(next).abs() < hs.abs() { next } else { s });
        }
        s = next;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_bound_clamps_and_vanishes() {
        let s = 14.0;
        let level = s / 2f64.powf(0.4);
        assert_eq!(analytic_lower_bound(5, level, 1.0, s).unwrap(), 0.0);
        assert_eq!(analytic_lower_bound(5, 2.0 * level, 1.0, s).unwrap(), 0.0);
        let v = analytic_lower_bound(5, 1.0, 1.0, s).unwrap();
        assert!((v - (level - 1.0)).abs() < 1e-14);
        assert!(analytic_lower_bound(5, 0.0, 1.0, s).is_err());
        assert!(analytic_lower_bound(5, 1.0, -1.0, s).is_err());
    }

    #[test]
    fn cubic_constructed_roots() {
        assert_eq!(solve_nehari_cubic(1.0, 0.0, 1.0).unwrap(), 1.0);
        let s = solve_nehari_cubic(1.0, 6.0, 1.0).unwrap();
        assert!((s - 2.0).abs() < 1e-14);
        assert!(solve_nehari_cubic(0.0, 6.0, 1.0).is_err());
        assert!(solve_nehari_cubic(1.0, -1.0, 1.0).is_err());
        assert!(solve_nehari_cubic(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn cubic_extreme_ratios() {
        for (a, b, c) in [
            (1e6, 0.0, 1.0),
            (1e-6, 1e6, 1.0),
            (1.0, 1.0, 1e8),
            (3.0, 1e-300, 2.0),
        ] {
            let s = solve_nehari_cubic(a, b, c).unwrap();
            let res = (a * s + b - c * s * s * s).abs();
            assert!(s > 0.0);
            assert!(
                res <= 1e-12 * (a * s + b + c * s * s * s),
                "{a} {b} {c}: {s} {res}"
            );
        }
    }

    #[test]
    fn inversion_detection() {
        let ev = |alpha: f64, below: bool| Evaluation {
            alpha,
            s_alpha: 1.0,
            below,
            grid_limited: false,
            eps_scale: 1.0,
            converged: true,
        };
        assert!(check_inversions(&[ev(0.0, true), ev(5.0, false), ev(2.0, true)]).is_ok());
        assert!(matches!(
            check_inversions(&[ev(0.0, true), ev(2.0, false), ev(5.0, true)]),
            Err(LabError::ClassificationInversion { .. })
        ));
    }
}
