//! Seeded smooth test fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::domain::{DiscreteDomain, DomainKind, Field};

const MAX_MODE: u32 = 3;
const TERMS: usize = 8;

/// Truncated cosine series `c0 + sum_t a_t prod_i cos(k_ti x_i)` with
/// `k_ti = pi m / L_i`, `m` in `0..=3`.
///
/// Every term has zero normal derivative on the faces of a box (and at
/// `r = 0, R` on a radial grid).
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSeries {
    offset: f64,
    terms: Vec<(f64, Vec<f64>)>,
}

impl CosineSeries {
    pub fn random(d: &DiscreteDomain, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let axes = match d.kind() {
            DomainKind::Box => d.dimension(),
            DomainKind::RadialBall => 1,
        };
        let offset = rng.random_range(-0.5..1.5);
        let terms = (0..TERMS)
            .map(|_| {
                let amp = rng.random_range(-1.0..1.0);
                let freqs = d.extent()[..axes]
                    .iter()
                    .map(|l| PI * rng.random_range(0..=MAX_MODE) as f64 / l)
                    .collect();
                (amp, freqs)
            })
            .collect();
        Self { offset, terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.offset
            + self
                .terms
                .iter()
                .map(|(amp, k)| {
                    amp * x
                        .iter()
                        .zip(k)
                        .map(|(xi, ki)| (ki * xi).cos())
                        .product::<f64>()
                })
                .sum::<f64>()
    }

    pub fn sample(&self, d: &DiscreteDomain) -> Field {
        Field::from_fn(d, |x| self.eval(x))
    }
}

/// Seeded random cosine field; the same seed always gives the same field.
/// Falls back to the unit constant in the (measure-zero) all-zero case.
pub fn random_cosine_field(d: &DiscreteDomain, seed: u64) -> Field {
    let f = CosineSeries::random(d, seed).sample(d);
    if f.max_abs() > 0.0 {
        f
    } else {
        Field::constant(d, 1.0)
    }
}

/// A positive field with independent uniform values in `[0.5, 1.5)`.
pub fn random_positive_field(d: &DiscreteDomain, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..d.num_nodes())
        .map(|_| rng.random_range(0.5..1.5))
        .collect();
    Field::new(d, values).expect("length matches")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_fields_are_reproducible() {
        let d = DiscreteDomain::build_box_grid(5, &[1.0; 5], 4).unwrap();
        assert_eq!(random_cosine_field(&d, 7), random_cosine_field(&d, 7));
        assert_ne!(random_cosine_field(&d, 7), random_cosine_field(&d, 8));
        assert_eq!(random_positive_field(&d, 2), random_positive_field(&d, 2));
    }

    #[test]
    fn cosine_series_has_zero_normal_slope_on_faces() {
        let sides = [1.0, 2.0, 1.0, 0.5, 1.0];
        let d = DiscreteDomain::build_box_grid(5, &sides, 4).unwrap();
        for seed in 0..10 {
            let s = CosineSeries::random(&d, seed);
            for axis in 0..5 {
                for at in [0.0, sides[axis]] {
                    let mut x = vec![0.3, 0.7, 0.2, 0.1, 0.9];
                    let h = 1e-6;
                    x[axis] = at + h;
                    let up = s.eval(&x);
                    x[axis] = at - h;
                    let dn = s.eval(&x);
                    assert!(((up - dn) / (2.0 * h)).abs() < 1e-6);
                }
            }
        }
    }
}
