//! Checks the sharp inequality and its consequences on families of fields.
//!
//! With `T = S / 2^{2/N}` and `alpha_hat` a proxy for `alpha_0`:
//!
//! * main:      `T <= psi_{alpha_hat}(u)`
//! * holder:    `delta(u) <= |u|_2 / ||u||`
//! * cor_h1:    `T |u|_{2*}^2 <= ||u||^2 + alpha_hat ||u|| |u|_2`
//! * cor_split: `T |u|_{2*}^2 <= (|grad u|_2 + c |u|_2)^2`,
//!   `c = max{alpha_hat / 2, sqrt(a + alpha_hat sqrt(a))}`
//! * cherrier:  `T |u|_{2*}^2 <= (1 + e) ||u||^2 + alpha_hat^2 / (4 e) |u|_2^2`
//!   for `e` in {0.1, 1, 10}
//!
//! Margins are relative, `(rhs - lhs) / rhs`. A grid-relative check fails when
//! its margin drops below `-tol_disc`; the Hölder check is exact and fails
//! below `-HOLDER_TOL`.

use crate::domain::{DiscreteDomain, DomainKind, Field};
use crate::error::Result;
use crate::functionals::{evaluate, Params};
use crate::instanton::{sample_instanton, InstantonSpec};
use crate::sampling::random_cosine_field;

pub const HOLDER_TOL: f64 = 1e-12;
pub const CHERRIER_EPSILONS: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Main,
    Holder,
    CorH1,
    CorSplit,
    Cherrier(usize),
}

impl Check {
    pub fn all() -> Vec<Check> {
        let mut v = vec![Check::Main, Check::Holder, Check::CorH1, Check::CorSplit];
        v.extend((0..CHERRIER_EPSILONS.len()).map(Check::Cherrier));
        v
    }

    pub fn name(&self) -> String {
        match self {
            Check::Main => "main".into(),
            Check::Holder => "holder".into(),
            Check::CorH1 => "cor_h1".into(),
            Check::CorSplit => "cor_split".into(),
            Check::Cherrier(i) => format!("cherrier_eps_{}", CHERRIER_EPSILONS[*i]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub check: Check,
    pub sample: String,
    pub margin: f64,
    pub field: Field,
}

#[derive(Debug, Clone)]
pub struct CheckSummary {
    pub check: Check,
    pub passed: usize,
    pub failed: usize,
    /// Smallest relative margin seen (`+inf` when nothing was checked).
    pub worst_margin: f64,
    pub worst_sample: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub alpha_hat: f64,
    pub threshold: f64,
    pub tol_disc: f64,
    pub c_split: f64,
    pub samples: usize,
    pub checks: Vec<CheckSummary>,
    pub counterexamples: Vec<Counterexample>,
}

/// `max{alpha/2, sqrt(a + alpha sqrt(a))}`.
pub fn split_constant(a: f64, alpha_hat: f64) -> f64 {
    (0.5 * alpha_hat).max((a + alpha_hat * a.sqrt()).sqrt())
}

/// Relative margins of every check for one field.
pub fn margins(
    d: &DiscreteDomain,
    u: &Field,
    a: f64,
    alpha_hat: f64,
    threshold: f64,
) -> Result<Vec<(Check, f64)>> {
    let p = Params::new(d.dimension(), a, alpha_hat)?;
    let r = evaluate(d, u, &p)?;
    let h1 = r.h1_norm_sq.sqrt();
    let lhs = threshold * r.l2star * r.l2star;
    let rel = |rhs: f64, lhs: f64| (rhs - lhs) / rhs;
    let mut out = vec![
        (Check::Main, rel(r.psi, threshold)),
        (Check::Holder, rel(r.l2 / h1, r.delta)),
        (Check::CorH1, rel(r.h1_norm_sq + alpha_hat * h1 * r.l2, lhs)),
        (
            Check::CorSplit,
            rel(
                (r.grad_sq.sqrt() + split_constant(a, alpha_hat) * r.l2).powi(2),
                lhs,
            ),
        ),
    ];
    for (i, e) in CHERRIER_EPSILONS.iter().enumerate() {
        let rhs = (1.0 + e) * r.h1_norm_sq + alpha_hat * alpha_hat / (4.0 * e) * r.l2 * r.l2;
        out.push((Check::Cherrier(i), rel(rhs, lhs)));
    }
    Ok(out)
}

/// The deterministic families checked besides the random ones: the unit
/// constant and instantons of width `2h, 4h, 8h` at the center and (boxes)
/// at a face midpoint.
pub fn structured_family(d: &DiscreteDomain) -> Result<Vec<(String, Field)>> {
    let mut out = vec![("constant".to_string(), Field::constant(d, 1.0))];
    let h = d.min_spacing();
    let mut centers = vec![("interior", d.center())];
    if d.kind() == DomainKind::Box {
        centers.push(("boundary", d.face_center(0)?));
    }
    for (name, c) in centers {
        for k in [2.0, 4.0, 8.0] {
            let spec = InstantonSpec::new(k * h, c.clone(), None);
            out.push((
                format!("{name}_instanton_{k}h"),
                sample_instanton(d, &spec)?,
            ));
        }
    }
    Ok(out)
}

/// Runs every check on `samples` seeded random cosine fields plus the
/// structured family. Sample `k` uses seed `seed + k`.
pub fn run_verification(
    d: &DiscreteDomain,
    a: f64,
    alpha_hat: f64,
    threshold: f64,
    tol_disc: f64,
    samples: usize,
    seed: u64,
) -> Result<VerifyReport> {
    let mut fields = Vec::new();
    if samples > 0 {
        fields.extend(structured_family(d)?);
        for k in 0..samples as u64 {
            let s = seed.wrapping_add(k);
            fields.push((format!("random_{s}"), random_cosine_field(d, s)));
        }
    }
    let mut checks: Vec<CheckSummary> = Check::all()
        .into_iter()
        .map(|check| CheckSummary {
            check,
            passed: 0,
            failed: 0,
            worst_margin: f64::INFINITY,
            worst_sample: String::new(),
        })
        .collect();
    let mut counterexamples = Vec::new();
    for (name, u) in &fields {
        for (check, m) in margins(d, u, a, alpha_hat, threshold)? {
            let summary = checks
                .iter_mut()
                .find(|c| c.check == check)
                .expect("all checks listed");
            let floor = if check == Check::Holder {
                -HOLDER_TOL
            } else {
                -tol_disc
            };
            if m < summary.worst_margin {
                summary.worst_margin = m;
                summary.worst_sample = name.clone();
            }
            if m >= floor {
                summary.passed += 1;
            } else {
                summary.failed += 1;
                counterexamples.push(Counterexample {
                    check,
                    sample: name.clone(),
                    margin: m,
                    field: u.clone(),
                });
            }
        }
    }
    Ok(VerifyReport {
        alpha_hat,
        threshold,
        tol_disc,
        c_split: split_constant(a, alpha_hat),
        samples: fields.len(),
        checks,
        counterexamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_main_margin_is_closed_form() {
        let d = DiscreteDomain::build_box_grid(5, &[1.0; 5], 5).unwrap();
        let (alpha_hat, t) = (12.0, 11.0);
        let m = margins(&d, &Field::constant(&d, 1.0), 1.0, alpha_hat, t).unwrap();
        // psi(1) = a |Omega|^{2/N} (1 + alpha/sqrt(a)) = 13
        assert!((m[0].1 - (13.0 - t) / 13.0).abs() < 1e-12);
    }

    #[test]
    fn zero_samples_is_vacuous() {
        let d = DiscreteDomain::build_box_grid(5, &[1.0; 5], 4).unwrap();
        let r = run_verification(&d, 1.0, 10.0, 11.0, 0.01, 0, 1).unwrap();
        assert_eq!(r.samples, 0);
        assert!(r.counterexamples.is_empty());
        assert!(r.checks.iter().all(|c| c.passed == 0 && c.failed == 0));
    }

    #[test]
    fn split_constant_branches() {
        assert_eq!(split_constant(1.0, 100.0), 50.0);
        assert!((split_constant(4.0, 1.0) - 6f64.sqrt()).abs() < 1e-15);
    }
}
