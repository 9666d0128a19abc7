//! Phase-space points, measure representations, and the metrics on them.
//!
//! Two phase spaces appear throughout the crate: the unit circle `S^1`
//! (coordinates in `[0, 1)` with arithmetic mod 1 and geodesic distance
//! `d(x, y) = min(|x - y|, 1 - |x - y|)`) and the filled torus
//! `S^1 x D^2` with the product metric
//! `d((x, u), (x', u')) = max(d_circle(x, x'), |u - u'|_2)`.
//!
//! Absolutely continuous measures on the circle are represented by
//! [`GridDensity`] (piecewise constant on a uniform partition, signed values
//! allowed); sampled measures by [`EmpiricalMeasure`] (weighted point cloud).
//!
//! The distance between circle measures is the bounded-Lipschitz one:
//! `W(mu, nu) = sup { |∫ g d(mu - nu)| : sup|g| <= 1 and Lip(g) <= 1 }`,
//! computed exactly on a configurable grid by [`w_distance`].

mod wdist;

pub use wdist::{w_distance, w_distance_with, WOptions};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("grid must have at least {min} nodes, got {got}")]
    GridTooSmall { got: usize, min: usize },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("negative weight {value}")]
    NegativeWeight { value: f64 },
    #[error("length mismatch: {left} points vs {right} weights")]
    LengthMismatch { left: usize, right: usize },
    #[error("fiber norm {norm} lies outside the unit disc")]
    FiberOutsideDisc { norm: f64 },
    #[error("grid size mismatch: {left} vs {right} cells")]
    GridMismatch { left: usize, right: usize },
}

/// Reduce a coordinate to `[0, 1)`.
pub(crate) fn wrap01(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// A point of a compact metric phase space.
pub trait Point: Copy + PartialEq + std::fmt::Debug + Send + Sync {
    /// Diameter of the space in this metric.
    const DIAMETER: f64;
    /// Number of real coordinates used by CSV/JSON snapshots.
    const N_COORDS: usize;
    fn dist(self, other: Self) -> f64;
    fn coords(self) -> Vec<f64>;
}

/// A point on the unit circle, stored as a coordinate in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirclePoint(f64);

impl CirclePoint {
    pub fn new(x: f64) -> Self {
        CirclePoint(wrap01(x))
    }

    pub fn coord(self) -> f64 {
        self.0
    }

    /// Geodesic circle distance, in `[0, 1/2]`.
    pub fn dist(self, other: CirclePoint) -> f64 {
        let d = (self.0 - other.0).abs();
        d.min(1.0 - d)
    }
}

impl Point for CirclePoint {
    const DIAMETER: f64 = 0.5;
    const N_COORDS: usize = 1;

    fn dist(self, other: Self) -> f64 {
        CirclePoint::dist(self, other)
    }

    fn coords(self) -> Vec<f64> {
        vec![self.0]
    }
}

/// A point of the filled torus `S^1 x D^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolenoidPoint {
    base: CirclePoint,
    fiber: [f64; 2],
}

impl SolenoidPoint {
    /// Build a point, requiring the fiber to lie in the closed unit disc
    /// (up to a small rounding allowance).
    pub fn new(base: CirclePoint, fiber: [f64; 2]) -> Result<Self, MeasureError> {
        let norm = (fiber[0] * fiber[0] + fiber[1] * fiber[1]).sqrt();
        if !norm.is_finite() {
            return Err(MeasureError::NonFinite { what: "fiber" });
        }
        if norm > 1.0 + 1e-12 {
            return Err(MeasureError::FiberOutsideDisc { norm });
        }
        Ok(SolenoidPoint { base, fiber })
    }

    pub fn base(self) -> CirclePoint {
        self.base
    }

    pub fn fiber(self) -> [f64; 2] {
        self.fiber
    }

    pub fn fiber_norm(self) -> f64 {
        (self.fiber[0] * self.fiber[0] + self.fiber[1] * self.fiber[1]).sqrt()
    }
}

impl Point for SolenoidPoint {
    // Product metric max(d_circle, |.|_2); the fiber disc dominates.
    const DIAMETER: f64 = 2.0;
    const N_COORDS: usize = 3;

    fn dist(self, other: Self) -> f64 {
        let db = self.base.dist(other.base);
        let du = ((self.fiber[0] - other.fiber[0]).powi(2)
            + (self.fiber[1] - other.fiber[1]).powi(2))
        .sqrt();
        db.max(du)
    }

    fn coords(self) -> Vec<f64> {
        vec![self.base.coord(), self.fiber[0], self.fiber[1]]
    }
}

/// Compensated (Neumaier) summation; keeps mass bookkeeping at rounding
/// accuracy even for 1e5-term sums.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// A piecewise-constant signed density on a uniform partition of the circle
/// into `n` cells of width `1/n`. `values[i]` is the density on cell
/// `[i/n, (i+1)/n)`, so the total mass is the mean of the values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(values: Vec<f64>) -> Result<Self, MeasureError> {
        if values.is_empty() {
            return Err(MeasureError::GridTooSmall { got: 0, min: 1 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MeasureError::NonFinite { what: "density values" });
        }
        Ok(GridDensity { values })
    }

    /// The uniform probability density (Lebesgue).
    pub fn uniform(n_cells: usize) -> Self {
        GridDensity {
            values: vec![1.0; n_cells.max(1)],
        }
    }

    /// Sample `f` at cell midpoints.
    pub fn from_fn(n_cells: usize, f: impl Fn(f64) -> f64) -> Result<Self, MeasureError> {
        let n = n_cells.max(1);
        let h = 1.0 / n as f64;
        GridDensity::new((0..n).map(|i| f((i as f64 + 0.5) * h)).collect())
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.values.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.cell_width()
    }

    /// Total mass `∫ f = (1/n) Σ f_i`.
    pub fn mass(&self) -> f64 {
        neumaier_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    /// True when the density is nonnegative with unit mass (within 1e-12).
    pub fn is_probability(&self) -> bool {
        self.values.iter().all(|&v| v >= -1e-12) && (self.mass() - 1.0).abs() <= 1e-12
    }

    /// Midpoint-rule integral of `g` against this density.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let h = self.cell_width();
        neumaier_sum(
            self.values
                .iter()
                .enumerate()
                .map(|(i, &v)| g((i as f64 + 0.5) * h) * v),
        ) * h
    }

    /// Cellwise difference; errors when the grids disagree.
    pub fn sub(&self, other: &GridDensity) -> Result<GridDensity, MeasureError> {
        if self.n_cells() != other.n_cells() {
            return Err(MeasureError::GridMismatch {
                left: self.n_cells(),
                right: other.n_cells(),
            });
        }
        GridDensity::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// L1 norm `∫ |f|`.
    pub fn l1_norm(&self) -> f64 {
        neumaier_sum(self.values.iter().map(|v| v.abs())) / self.values.len() as f64
    }

    /// Signed cell masses re-binned exactly onto an `n`-cell partition.
    /// Piecewise-constant mass is split proportionally over overlaps.
    pub(crate) fn cell_masses(&self, n: usize) -> Vec<f64> {
        let src = self.values.len();
        let h_src = 1.0 / src as f64;
        if n == src {
            return self.values.iter().map(|v| v * h_src).collect();
        }
        let mut out = vec![0.0; n];
        let h_dst = 1.0 / n as f64;
        for (i, &v) in self.values.iter().enumerate() {
            let a = i as f64 * h_src;
            let b = a + h_src;
            let mut j = (a / h_dst).floor() as usize;
            loop {
                let cell_a = j as f64 * h_dst;
                let cell_b = cell_a + h_dst;
                let lo = a.max(cell_a);
                let hi = b.min(cell_b);
                if hi > lo {
                    out[j.min(n - 1)] += v * (hi - lo);
                }
                if cell_b >= b {
                    break;
                }
                j += 1;
                if j >= n {
                    j = n - 1;
                }
            }
        }
        out
    }

    /// One row per cell: `cell,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("cell,value\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{i},{v}\n"));
        }
        s
    }

    /// JSON envelope `{space, n_cells, data}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "space": "circle",
            "n_cells": self.n_cells(),
            "data": self.values,
        })
    }
}

/// A weighted point cloud: nonnegative weights, finite everywhere.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure<P: Point> {
    points: Vec<P>,
    weights: Vec<f64>,
}

impl<P: Point> EmpiricalMeasure<P> {
    pub fn new(points: Vec<P>, weights: Vec<f64>) -> Result<Self, MeasureError> {
        if points.len() != weights.len() {
            return Err(MeasureError::LengthMismatch {
                left: points.len(),
                right: weights.len(),
            });
        }
        for &w in &weights {
            if !w.is_finite() {
                return Err(MeasureError::NonFinite { what: "weights" });
            }
            if w < 0.0 {
                return Err(MeasureError::NegativeWeight { value: w });
            }
        }
        Ok(EmpiricalMeasure { points, weights })
    }

    /// Equal weights `1/n`.
    pub fn uniform(points: Vec<P>) -> Self {
        let w = 1.0 / points.len().max(1) as f64;
        let weights = vec![w; points.len()];
        EmpiricalMeasure { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.weights.iter().copied())
    }

    /// Weighted sum `Σ w_i g(p_i)`.
    pub fn integrate(&self, g: impl Fn(&P) -> f64) -> f64 {
        neumaier_sum(
            self.points
                .iter()
                .zip(&self.weights)
                .map(|(p, &w)| w * g(p)),
        )
    }

    /// One row per point: coordinates then weight.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        match P::N_COORDS {
            1 => s.push_str("x,weight\n"),
            3 => s.push_str("x,y1,y2,weight\n"),
            _ => s.push_str("coords...,weight\n"),
        }
        for (p, w) in self.points.iter().zip(&self.weights) {
            for c in p.coords() {
                s.push_str(&format!("{c},"));
            }
            s.push_str(&format!("{w}\n"));
        }
        s
    }

    /// JSON envelope `{space, n_points, data}`; each datum is
    /// `[coords..., weight]`.
    pub fn to_json(&self) -> serde_json::Value {
        let space = match P::N_COORDS {
            1 => "circle",
            _ => "solenoid",
        };
        let data: Vec<Vec<f64>> = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| {
                let mut row = p.coords();
                row.push(w);
                row
            })
            .collect();
        serde_json::json!({
            "space": space,
            "n_points": self.len(),
            "data": data,
        })
    }
}

impl EmpiricalMeasure<CirclePoint> {
    /// Signed cell masses on an `n`-cell partition (each atom lands in the
    /// cell containing it).
    pub(crate) fn cell_masses(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (p, &w) in self.points.iter().zip(&self.weights) {
            let mut j = (p.coord() * n as f64).floor() as usize;
            if j >= n {
                j = n - 1;
            }
            out[j] += w;
        }
        out
    }
}

/// A circle measure that can be reduced to signed cell masses on a uniform
/// grid; this is the common currency of [`w_distance`].
pub trait CircleMeasure {
    fn masses(&self, n_cells: usize) -> Vec<f64>;
    fn mass(&self) -> f64;
}

impl CircleMeasure for GridDensity {
    fn masses(&self, n_cells: usize) -> Vec<f64> {
        self.cell_masses(n_cells)
    }

    fn mass(&self) -> f64 {
        GridDensity::mass(self)
    }
}

impl CircleMeasure for EmpiricalMeasure<CirclePoint> {
    fn masses(&self, n_cells: usize) -> Vec<f64> {
        self.cell_masses(n_cells)
    }

    fn mass(&self) -> f64 {
        self.total_mass()
    }
}

/// Lipschitz norm `max(Lip(g), sup |g|)` of a function sampled on `n`
/// equally spaced circle nodes. The discrete Lipschitz constant is the
/// largest difference quotient between adjacent nodes, wrap-around
/// included.
pub fn lip_norm(samples: &[f64]) -> Result<f64, MeasureError> {
    let n = samples.len();
    if n < 2 {
        return Err(MeasureError::GridTooSmall { got: n, min: 2 });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(MeasureError::NonFinite { what: "samples" });
    }
    let h = 1.0 / n as f64;
    let sup = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut lip = 0.0f64;
    for i in 0..n {
        let d = (samples[(i + 1) % n] - samples[i]).abs() / h;
        lip = lip.max(d);
    }
    Ok(lip.max(sup))
}

/// Discrete Sobolev norm `||f||_1 + ||f'||_1` of a grid density:
/// `(1/n) Σ |f_i| + Σ |f_{i+1} - f_i|` with wrap-around. The difference sum
/// is the total variation, which approximates `∫ |f'|` for smooth data.
pub fn w11_norm(f: &GridDensity) -> Result<f64, MeasureError> {
    let n = f.n_cells();
    if n < 2 {
        return Err(MeasureError::GridTooSmall { got: n, min: 2 });
    }
    let v = f.values();
    let l1 = f.l1_norm();
    let tv = neumaier_sum((0..n).map(|i| (v[(i + 1) % n] - v[i]).abs()));
    Ok(l1 + tv)
}

/// Summary row used by assumption and verdict reports.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CheckResult {
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl CheckResult {
    pub fn new(measured: f64, bound: f64) -> Self {
        CheckResult {
            measured,
            bound,
            pass: measured <= bound,
        }
    }
}
