//! Discretized bounded domains: tensor-product boxes and radially reduced balls.
//!
//! Every domain carries positive quadrature weights (so `integrate` of a
//! nonnegative field is nonnegative), a boundary mask, and a discrete gradient
//! energy whose Euler-Lagrange operator is a Neumann Laplacian: no boundary
//! condition is imposed explicitly, the homogeneous Neumann condition is the
//! natural one for the quadratic form.
//!
//! Node indices on a box run in C order (last axis fastest). Radial domains
//! use cell-centered radii `r_k = (k + 1/2) R / n` and represent radially
//! symmetric functions `u(|x|)`.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const MIN_DIMENSION: usize = 5;
pub const MIN_BOX_POINTS: usize = 3;
pub const MIN_RADIAL_POINTS: usize = 16;

static NEXT_DOMAIN_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Box,
    RadialBall,
}

impl DomainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DomainKind::Box => "box",
            DomainKind::RadialBall => "radial_ball",
        }
    }
}

/// Discrete gradient used by the `|grad u|^2` quadrature.
///
/// `Compact` differences nearest neighbours along every grid edge (the
/// standard 2N+1 point Neumann Laplacian). `CentralOneSided` uses centered
/// differences at interior nodes and second-order one-sided differences at
/// boundary nodes; it is exact on linear fields too but its interior stencil
/// does not see odd/even oscillations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    #[default]
    Compact,
    CentralOneSided,
}

impl Stencil {
    pub fn as_str(self) -> &'static str {
        match self {
            Stencil::Compact => "compact",
            Stencil::CentralOneSided => "central_one_sided",
        }
    }
}

/// Surface area of the unit sphere S^{n-1} in R^n.
pub fn unit_sphere_area(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * PI.powf(half) / libm::tgamma(half)
}

/// Neumaier-compensated running sum; summation order is the call order.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteDomain {
    id: u64,
    dimension: usize,
    kind: DomainKind,
    stencil: Stencil,
    /// Points per axis (box) or `[n_points]` (radial).
    shape: Vec<usize>,
    /// Side lengths (box) or `[R]` (radial).
    extent: Vec<f64>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    /// 1-D trapezoid weights per axis (box only).
    axis_weights: Vec<Vec<f64>>,
    /// Cell-centered radii (radial only).
    radii: Vec<f64>,
    weights: Vec<f64>,
    boundary: Vec<bool>,
    measure: f64,
}

impl DiscreteDomain {
    /// Tensor grid on `[0, L_1] x ... x [0, L_N]` with `points_per_axis`
    /// nodes per axis (endpoints included) and trapezoid weights.
    pub fn build_box_grid(
        dimension: usize,
        side_lengths: &[f64],
        points_per_axis: usize,
    ) -> Result<Self> {
        Self::build_box_grid_with(dimension, side_lengths, points_per_axis, Stencil::default())
    }

    pub fn build_box_grid_with(
        dimension: usize,
        side_lengths: &[f64],
        points_per_axis: usize,
        stencil: Stencil,
    ) -> Result<Self> {
        if dimension < MIN_DIMENSION {
            return Err(LabError::DimensionTooSmall(dimension));
        }
        if side_lengths.len() != dimension {
            return Err(LabError::InvalidParameter(format!(
                "expected {dimension} side lengths, got {}",
                side_lengths.len()
            )));
        }
        if let Some(bad) = side_lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(LabError::InvalidParameter(format!(
                "side lengths must be positive and finite, got {bad}"
            )));
        }
        if points_per_axis < MIN_BOX_POINTS {
            return Err(LabError::InsufficientResolution {
                what: "points_per_axis",
                got: points_per_axis,
                min: MIN_BOX_POINTS,
            });
        }
        let n = points_per_axis;
        let total = n
            .checked_pow(dimension as u32)
            .filter(|t| *t <= 1 << 28)
            .ok_or_else(|| {
                LabError::InvalidParameter(format!("{n}^{dimension} nodes is too many"))
            })?;

        let shape = vec![n; dimension];
        let spacing: Vec<f64> = side_lengths.iter().map(|l| l / (n - 1) as f64).collect();
        let axis_weights: Vec<Vec<f64>> = spacing
            .iter()
            .map(|&h| {
                (0..n)
                    .map(|j| if j == 0 || j == n - 1 { 0.5 * h } else { h })
                    .collect()
            })
            .collect();

        let mut strides = vec![1usize; dimension];
        for i in (0..dimension - 1).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }

        let mut weights = vec![1.0f64];
        let mut boundary = vec![false];
        for aw in &axis_weights {
            let mut w_next = Vec::with_capacity(weights.len() * n);
            let mut b_next = Vec::with_capacity(weights.len() * n);
            for (w, b) in weights.iter().zip(&boundary) {
                for (j, a) in aw.iter().enumerate() {
                    w_next.push(w * a);
                    b_next.push(*b || j == 0 || j == n - 1);
                }
            }
            weights = w_next;
            boundary = b_next;
        }
        debug_assert_eq!(weights.len(), total);

        let measure = sum_in_order(weights.iter().copied());
        Ok(Self {
            id: NEXT_DOMAIN_ID.fetch_add(1, Ordering::Relaxed),
            dimension,
            kind: DomainKind::Box,
            stencil,
            shape,
            extent: side_lengths.to_vec(),
            spacing,
            strides,
            axis_weights,
            radii: Vec::new(),
            weights,
            boundary,
            measure,
        })
    }

    /// Radial grid for the ball `B_R` in R^N: `n_points` cell-centered radii
    /// with midpoint weights `|S^{N-1}| r^{N-1} dr`.
    pub fn build_radial_ball_grid(dimension: usize, radius: f64, n_points: usize) -> Result<Self> {
        Self::build_radial_ball_grid_with(dimension, radius, n_points, Stencil::default())
    }

    pub fn build_radial_ball_grid_with(
        dimension: usize,
        radius: f64,
        n_points: usize,
        stencil: Stencil,
    ) -> Result<Self> {
        if dimension < MIN_DIMENSION {
            return Err(LabError::DimensionTooSmall(dimension));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(LabError::InvalidParameter(format!(
                "radius must be positive and finite, got {radius}"
            )));
        }
        if n_points < MIN_RADIAL_POINTS {
            return Err(LabError::InsufficientResolution {
                what: "n_points",
                got: n_points,
                min: MIN_RADIAL_POINTS,
            });
        }
        let dr = radius / n_points as f64;
        let area = unit_sphere_area(dimension);
        let radii: Vec<f64> = (0..n_points).map(|k| (k as f64 + 0.5) * dr).collect();
        let weights: Vec<f64> = radii
            .iter()
            .map(|r| area * r.powi(dimension as i32 - 1) * dr)
            .collect();
        let mut boundary = vec![false; n_points];
        boundary[n_points - 1] = true;
        let measure = sum_in_order(weights.iter().copied());
        Ok(Self {
            id: NEXT_DOMAIN_ID.fetch_add(1, Ordering::Relaxed),
            dimension,
            kind: DomainKind::RadialBall,
            stencil,
            shape: vec![n_points],
            extent: vec![radius],
            spacing: vec![dr],
            strides: vec![1],
            axis_weights: Vec::new(),
            radii,
            weights,
            boundary,
            measure,
        })
    }

    /// Same geometry, different gradient stencil (shares the domain handle).
    pub fn with_stencil(&self, stencil: Stencil) -> Self {
        Self {
            stencil,
            ..self.clone()
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Side lengths for a box, `[R]` for a radial ball.
    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn grid_spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn boundary_node_mask(&self) -> &[bool] {
        &self.boundary
    }

    /// `|Omega|` as seen by the quadrature (sum of the weights).
    pub fn measure(&self) -> f64 {
        self.measure
    }

    /// Cartesian coordinates of a box node, or `[r]` for a radial node.
    pub fn node_coords(&self, node: usize) -> Vec<f64> {
        let mut out = vec![
            0.0;
            if self.kind == DomainKind::Box {
                self.dimension
            } else {
                1
            }
        ];
        self.write_node_coords(node, &mut out);
        out
    }

    pub(crate) fn write_node_coords(&self, node: usize, out: &mut [f64]) {
        match self.kind {
            DomainKind::Box => {
                for (axis, x) in out.iter_mut().enumerate() {
                    let j = (node / self.strides[axis]) % self.shape[axis];
                    *x = j as f64 * self.spacing[axis];
                }
            }
            DomainKind::RadialBall => out[0] = self.radii[node],
        }
    }

    /// Distance from a point of the closed domain to the boundary. Radial
    /// domains take the radius `|x|`.
    pub fn distance_to_boundary(&self, point: &[f64]) -> f64 {
        match self.kind {
            DomainKind::Box => point
                .iter()
                .zip(&self.extent)
                .map(|(x, l)| x.min(l - x))
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
            DomainKind::RadialBall => {
                let r = point.iter().map(|x| x * x).sum::<f64>().sqrt();
                (self.extent[0] - r).max(0.0)
            }
        }
    }

    /// Midpoint of the face `x_axis = 0` of a box.
    pub fn face_center(&self, axis: usize) -> Result<Vec<f64>> {
        if self.kind != DomainKind::Box {
            return Err(LabError::InvalidParameter(
                "face centers exist only on box domains".into(),
            ));
        }
        if axis >= self.dimension {
            return Err(LabError::OutOfRange(format!("axis {axis} >= N")));
        }
        let mut c: Vec<f64> = self.extent.iter().map(|l| 0.5 * l).collect();
        c[axis] = 0.0;
        Ok(c)
    }

    /// Center of the domain as a point of R^N.
    pub fn center(&self) -> Vec<f64> {
        match self.kind {
            DomainKind::Box => self.extent.iter().map(|l| 0.5 * l).collect(),
            DomainKind::RadialBall => vec![0.0; self.dimension],
        }
    }

    pub(crate) fn check(&self, f: &Field) -> Result<()> {
        if f.domain_id != self.id || f.values.len() != self.num_nodes() {
            return Err(LabError::DomainMismatch {
                expected: self.num_nodes(),
                found: f.values.len(),
            });
        }
        Ok(())
    }

    /// `sum_i w_i f_i` over the nodes in index order.
    pub fn integrate(&self, f: &Field) -> Result<f64> {
        self.check(f)?;
        Ok(self.integrate_values(&f.values))
    }

    pub(crate) fn integrate_values(&self, v: &[f64]) -> f64 {
        sum_in_order(self.weights.iter().zip(v).map(|(w, x)| w * x))
    }

    /// Quadrature inner product `sum_i w_i f_i g_i`.
    pub fn inner(&self, f: &Field, g: &Field) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        Ok(self.inner_values(&f.values, &g.values))
    }

    pub(crate) fn inner_values(&self, f: &[f64], g: &[f64]) -> f64 {
        sum_in_order(
            self.weights
                .iter()
                .zip(f.iter().zip(g))
                .map(|(w, (a, b))| w * a * b),
        )
    }

    /// `(int |u|^p)^{1/p}`.
    pub fn lp_norm(&self, u: &Field, p: f64) -> Result<f64> {
        self.check(u)?;
        if !(p >= 1.0 && p.is_finite()) {
            return Err(LabError::OutOfRange(format!(
                "lp_norm needs p >= 1, got {p}"
            )));
        }
        Ok(self.lp_integral_values(&u.values, p).powf(1.0 / p))
    }

    /// `int |u|^p` without the root.
    pub(crate) fn lp_integral_values(&self, u: &[f64], p: f64) -> f64 {
        if p == 2.0 {
            return self.inner_values(u, u);
        }
        sum_in_order(self.weights.iter().zip(u).map(|(w, x)| w * x.abs().powf(p)))
    }

    /// Quadrature of `|grad u|^2`.
    pub fn gradient_sq_integral(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        Ok(self.gradient_inner_values(&u.values, &u.values))
    }

    /// Symmetric bilinear form `int grad u . grad v` of the discrete gradient.
    pub fn gradient_inner(&self, u: &Field, v: &Field) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.gradient_inner_values(&u.values, &v.values))
    }

    pub(crate) fn gradient_inner_values(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = CompensatedSum::default();
        match self.stencil {
            Stencil::Compact => self.for_each_edge(|a, b, coef| {
                acc.add(coef * (u[b] - u[a]) * (v[b] - v[a]));
            }),
            Stencil::CentralOneSided => {
                for axis in 0..self.shape.len() {
                    let du = self.axis_derivative(u, axis);
                    let dv = if std::ptr::eq(u, v) {
                        None
                    } else {
                        Some(self.axis_derivative(v, axis))
                    };
                    let dv = dv.as_deref().unwrap_or(&du);
                    for ((w, x), y) in self.weights.iter().zip(&du).zip(dv) {
                        acc.add(w * x * y);
                    }
                }
            }
        }
        acc.value()
    }

    /// Stiffness matrix product `K u`, where `gradient_inner(u, v) = v . K u`.
    pub(crate) fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        match self.stencil {
            Stencil::Compact => self.for_each_edge(|a, b, coef| {
                let t = coef * (u[b] - u[a]);
                out[a] -= t;
                out[b] += t;
            }),
            Stencil::CentralOneSided => {
                for axis in 0..self.shape.len() {
                    let mut du = self.axis_derivative(u, axis);
                    for (x, w) in du.iter_mut().zip(&self.weights) {
                        *x *= w;
                    }
                    self.axis_derivative_transpose_add(&du, axis, &mut out);
                }
            }
        }
        out
    }

    /// Discrete Neumann operator `-Delta_h u = W^{-1} K u`; it satisfies
    /// `<-Delta_h u, v>_W = gradient_inner(u, v)` exactly.
    pub fn neg_laplacian(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        Ok(Field {
            values: self.neg_laplacian_values(&u.values),
            domain_id: self.id,
        })
    }

    pub(crate) fn neg_laplacian_values(&self, u: &[f64]) -> Vec<f64> {
        let mut k = self.stiffness_apply(u);
        for (x, w) in k.iter_mut().zip(&self.weights) {
            *x /= w;
        }
        k
    }

    /// Visits every grid edge `(a, b)` with `b` the successor of `a` along one
    /// axis; `coef` is the edge quadrature weight divided by the squared spacing.
    fn for_each_edge(&self, mut f: impl FnMut(usize, usize, f64)) {
        match self.kind {
            DomainKind::Box => {
                for axis in 0..self.dimension {
                    let stride = self.strides[axis];
                    let n = self.shape[axis];
                    let h = self.spacing[axis];
                    let aw = &self.axis_weights[axis];
                    for (a, w) in self.weights.iter().enumerate() {
                        let j = (a / stride) % n;
                        if j + 1 < n {
                            // weight of the other axes times h, over h^2
                            f(a, a + stride, w / (aw[j] * h));
                        }
                    }
                }
            }
            DomainKind::RadialBall => {
                let dr = self.spacing[0];
                let area = unit_sphere_area(self.dimension);
                let m = self.radii.len();
                let pw = self.dimension as i32 - 1;
                for a in 0..m - 1 {
                    let r_edge = (a + 1) as f64 * dr;
                    let mut len = r_edge.powi(pw) * dr;
                    if a + 2 == m {
                        // the half cell [R - dr/2, R] reuses the last difference
                        len += (self.extent[0] - 0.25 * dr).powi(pw) * 0.5 * dr;
                    }
                    f(a, a + 1, area * len / (dr * dr));
                }
            }
        }
    }

    /// Central differences inside, second-order one-sided at both ends.
    fn axis_derivative(&self, u: &[f64], axis: usize) -> Vec<f64> {
        let stride = self.strides[axis];
        let n = self.shape[axis];
        let c = 0.5 / self.spacing[axis];
        let mut out = vec![0.0; u.len()];
        for (i, o) in out.iter_mut().enumerate() {
            let j = (i / stride) % n;
            *o = if j == 0 {
                c * (-3.0 * u[i] + 4.0 * u[i + stride] - u[i + 2 * stride])
            } else if j == n - 1 {
                c * (3.0 * u[i] - 4.0 * u[i - stride] + u[i - 2 * stride])
            } else {
                c * (u[i + stride] - u[i - stride])
            };
        }
        out
    }

    fn axis_derivative_transpose_add(&self, v: &[f64], axis: usize, out: &mut [f64]) {
        let stride = self.strides[axis];
        let n = self.shape[axis];
        let c = 0.5 / self.spacing[axis];
        for (i, &vi) in v.iter().enumerate() {
            let j = (i / stride) % n;
            let t = c * vi;
            if j == 0 {
                out[i] -= 3.0 * t;
                out[i + stride] += 4.0 * t;
                out[i + 2 * stride] -= t;
            } else if j == n - 1 {
                out[i] += 3.0 * t;
                out[i - stride] -= 4.0 * t;
                out[i - 2 * stride] += t;
            } else {
                out[i + stride] += t;
                out[i - stride] -= t;
            }
        }
    }
}

pub(crate) fn sum_in_order(it: impl Iterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Real-valued function sampled at the nodes of one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    domain_id: u64,
}

impl Field {
    pub fn new(d: &DiscreteDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != d.num_nodes() {
            return Err(LabError::DomainMismatch {
                expected: d.num_nodes(),
                found: values.len(),
            });
        }
        Ok(Self {
            values,
            domain_id: d.id,
        })
    }

    pub fn constant(d: &DiscreteDomain, c: f64) -> Self {
        Self {
            values: vec![c; d.num_nodes()],
            domain_id: d.id,
        }
    }

    /// Samples `f` at every node; `f` receives the node coordinates (`[r]` on
    /// radial domains).
    pub fn from_fn(d: &DiscreteDomain, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut x = vec![
            0.0;
            if d.kind == DomainKind::Box {
                d.dimension
            } else {
                1
            }
        ];
        let values = (0..d.num_nodes())
            .map(|i| {
                d.write_node_coords(i, &mut x);
                f(&x)
            })
            .collect();
        Self {
            values,
            domain_id: d.id,
        }
    }

    pub(crate) fn from_raw(domain_id: u64, values: Vec<f64>) -> Self {
        Self { values, domain_id }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn domain_id(&self) -> u64 {
        self.domain_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        self.map(|x| lambda * x)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&x| f(x)).collect(),
            domain_id: self.domain_id,
        }
    }
}
