//! Sequential map families, orbit generation, and hitting times.
//!
//! A sequential (nonautonomous) system is a time-indexed family of maps
//! `T_i`; the composition after `k` steps is `T^(k) = T_k ∘ ... ∘ T_1` and
//! the orbit of `x0` is `x0, T_1(x0), T_2(T_1(x0)), ...`. Families here:
//!
//! - [`ExpandingCircleMap`]: `T(x) = q x + eps sin(2 pi x) mod 1`, uniformly
//!   expanding for `2 pi eps < q - 1`; a constant family.
//! - [`AlternatingFamily`]: cycles through a list of expanding maps.
//! - [`SolenoidFamily`]: skew products `F_i(x, y) = (T(x), G_i(x, y))` on
//!   `S^1 x D^2` with uniformly contracted fibers and perturbations decaying
//!   like `c * rho^i`; the limit map `F_0` has a fractal attractor.
//! - [`SlowFamily`]: `F_i(x, y) = (2x mod 1, (i^{-1/2}, 0))` -- fibers
//!   converge so slowly that hitting times scale like `r^{-2}` although the
//!   limit measure has local dimension 1.

pub mod orbits;

use crate::measures::{CheckResult, CirclePoint, Point, SolenoidPoint};
use orbits::LinearShiftStream;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SystemsError {
    #[error("map index 0 is undefined for {family}")]
    IndexZero { family: String },
    #[error("degree must be >= 2, got {q}")]
    DegreeTooSmall { q: u64 },
    #[error("perturbation too strong: 2*pi*eps = {two_pi_eps} must stay below q - 1 = {margin}")]
    NotExpanding { two_pi_eps: f64, margin: f64 },
    #[error("invalid solenoid parameters: {reason}")]
    BadSolenoid { reason: String },
    #[error("radius must be positive, got {r}")]
    BadRadius { r: f64 },
    #[error("family list must not be empty")]
    EmptyFamily,
    #[error("unknown family kind {0:?}")]
    UnknownFamily(String),
    #[error("horizon must be >= 1")]
    BadHorizon,
}

/// Phase-space tag carried by every family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseSpace {
    Circle,
    Solenoid,
}

/// An indexed family of maps on a common phase space. `step(i, p)` applies
/// `T_i`; sequential indices start at 1, and index 0 denotes the limit map
/// where one exists.
pub trait MapFamily: Sync {
    type Point: Point;

    fn phase_space(&self) -> PhaseSpace;
    fn step(&self, i: u64, p: Self::Point) -> Result<Self::Point, SystemsError>;
    fn descriptor(&self) -> String;
}

/// Families that can sample full-precision orbits of Lebesgue-random
/// initial conditions. Streams yield `x0` first, then successive images;
/// the same seed always reproduces the same stream.
pub trait LebesgueOrbits: MapFamily {
    type Stream: Iterator<Item = Self::Point>;
    fn lebesgue_orbit(&self, seed: u64) -> Self::Stream;
}

/// `T(x) = q x + eps sin(2 pi x) mod 1`, strictly increasing with
/// `T' >= q - 2 pi eps > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpandingCircleMap {
    q: u64,
    epsilon: f64,
}

impl ExpandingCircleMap {
    pub fn new(q: u64, epsilon: f64) -> Result<Self, SystemsError> {
        if q < 2 {
            return Err(SystemsError::DegreeTooSmall { q });
        }
        if epsilon.is_nan() || epsilon < 0.0 || !epsilon.is_finite() {
            return Err(SystemsError::NotExpanding {
                two_pi_eps: f64::NAN,
                margin: (q - 1) as f64,
            });
        }
        let two_pi_eps = TAU * epsilon;
        if two_pi_eps >= (q - 1) as f64 {
            return Err(SystemsError::NotExpanding {
                two_pi_eps,
                margin: (q - 1) as f64,
            });
        }
        Ok(ExpandingCircleMap { q, epsilon })
    }

    /// The doubling map `x -> 2x mod 1`.
    pub fn doubling() -> Self {
        ExpandingCircleMap { q: 2, epsilon: 0.0 }
    }

    pub fn degree(&self) -> u64 {
        self.q
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_linear(&self) -> bool {
        self.epsilon == 0.0
    }

    /// Increasing lift to the real line; `lift(x + 1) = lift(x) + q`.
    pub fn lift(&self, x: f64) -> f64 {
        self.q as f64 * x + self.epsilon * (TAU * x).sin()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.q as f64 + self.epsilon * TAU * (TAU * x).cos()
    }

    pub fn apply(&self, p: CirclePoint) -> CirclePoint {
        CirclePoint::new(self.lift(p.coord()))
    }

    /// Minimum of `|T'|` over a fine grid; an expansion sanity check.
    pub fn min_derivative(&self, grid: usize) -> f64 {
        (0..grid)
            .map(|i| self.derivative(i as f64 / grid as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

impl MapFamily for ExpandingCircleMap {
    type Point = CirclePoint;

    fn phase_space(&self) -> PhaseSpace {
        PhaseSpace::Circle
    }

    fn step(&self, _i: u64, p: CirclePoint) -> Result<CirclePoint, SystemsError> {
        Ok(self.apply(p))
    }

    fn descriptor(&self) -> String {
        if self.epsilon == 0.0 {
            format!("x -> {}x mod 1", self.q)
        } else {
            format!("x -> {}x + {}*sin(2pi x) mod 1", self.q, self.epsilon)
        }
    }
}

/// Orbit stream for a single expanding map.
#[allow(clippy::large_enum_variant)]
pub enum ExpandingStream {
    Shift { inner: LinearShiftStream, q: u64 },
    Smooth { x: f64, map: ExpandingCircleMap },
}

impl Iterator for ExpandingStream {
    type Item = CirclePoint;

    fn next(&mut self) -> Option<CirclePoint> {
        match self {
            ExpandingStream::Shift { inner, q } => {
                let out = CirclePoint::new(inner.x());
                inner.step(*q);
                Some(out)
            }
            ExpandingStream::Smooth { x, map } => {
                let out = CirclePoint::new(*x);
                *x = map.apply(CirclePoint::new(*x)).coord();
                Some(out)
            }
        }
    }

    fn nth(&mut self, n: usize) -> Option<CirclePoint> {
        if let ExpandingStream::Shift { inner, q: 2 } = self {
            inner.skip_doubling(n as u64);
            return self.next();
        }
        for _ in 0..n {
            self.next()?;
        }
        self.next()
    }
}

impl LebesgueOrbits for ExpandingCircleMap {
    type Stream = ExpandingStream;

    fn lebesgue_orbit(&self, seed: u64) -> ExpandingStream {
        if self.is_linear() {
            ExpandingStream::Shift {
                inner: LinearShiftStream::new(seed),
                q: self.q,
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ExpandingStream::Smooth {
                x: rng.gen::<f64>(),
                map: *self,
            }
        }
    }
}

/// Cycles through a list of expanding maps: `T_i = maps[(i - 1) mod k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlternatingFamily {
    maps: Vec<ExpandingCircleMap>,
}

impl AlternatingFamily {
    pub fn new(maps: Vec<ExpandingCircleMap>) -> Result<Self, SystemsError> {
        if maps.is_empty() {
            return Err(SystemsError::EmptyFamily);
        }
        Ok(AlternatingFamily { maps })
    }

    pub fn map_at(&self, i: u64) -> ExpandingCircleMap {
        let k = self.maps.len() as u64;
        self.maps[((i.max(1) - 1) % k) as usize]
    }

    pub fn cycle_len(&self) -> usize {
        self.maps.len()
    }
}

impl MapFamily for AlternatingFamily {
    type Point = CirclePoint;

    fn phase_space(&self) -> PhaseSpace {
        PhaseSpace::Circle
    }

    fn step(&self, i: u64, p: CirclePoint) -> Result<CirclePoint, SystemsError> {
        Ok(self.map_at(i).apply(p))
    }

    fn descriptor(&self) -> String {
        let parts: Vec<String> = self.maps.iter().map(|m| m.descriptor()).collect();
        format!("alternating [{}]", parts.join("; "))
    }
}

/// Orbit stream for an alternating family. All-linear families run in
/// fixed point; a single nonlinear member forces `f64` stepping.
#[allow(clippy::large_enum_variant)]
pub enum AlternatingStream {
    Shift {
        inner: LinearShiftStream,
        family: AlternatingFamily,
        idx: u64,
    },
    Smooth {
        x: f64,
        family: AlternatingFamily,
        idx: u64,
    },
}

impl Iterator for AlternatingStream {
    type Item = CirclePoint;

    fn next(&mut self) -> Option<CirclePoint> {
        match self {
            AlternatingStream::Shift { inner, family, idx } => {
                let out = CirclePoint::new(inner.x());
                *idx += 1;
                inner.step(family.map_at(*idx).degree());
                Some(out)
            }
            AlternatingStream::Smooth { x, family, idx } => {
                let out = CirclePoint::new(*x);
                *idx += 1;
                *x = family.map_at(*idx).apply(out).coord();
                Some(out)
            }
        }
    }
}

impl LebesgueOrbits for AlternatingFamily {
    type Stream = AlternatingStream;

    fn lebesgue_orbit(&self, seed: u64) -> AlternatingStream {
        if self.maps.iter().all(|m| m.is_linear()) {
            AlternatingStream::Shift {
                inner: LinearShiftStream::new(seed),
                family: self.clone(),
                idx: 0,
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            AlternatingStream::Smooth {
                x: rng.gen::<f64>(),
                family: self.clone(),
                idx: 0,
            }
        }
    }
}

/// Solenoidal skew product on `S^1 x D^2`:
///
/// `F_i(x, y) = (T(x), G_i(x, y))` with
/// `G_0(x, y) = (lambda y_1 + gamma cos(2 pi x), lambda y_2 + gamma sin(2 pi x))`
/// and `G_i = G_0 + c rho^i (sin(2 pi x), cos(2 pi x))` for `i >= 1`.
/// Index 0 applies the limit map `F_0`.
///
/// `G_i` is affine in `y`, so the fiber contraction ratio is exactly
/// `lambda`; the perturbation has Euclidean size `c rho^i` and decays
/// superpolynomially. Images are radially clipped to the unit disc, which
/// never triggers for the defaults (`lambda + gamma + c <= 0.85`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolenoidFamily {
    base: ExpandingCircleMap,
    lambda: f64,
    gamma: f64,
    c: f64,
    decay: f64,
}

impl SolenoidFamily {
    pub fn new(
        base: ExpandingCircleMap,
        lambda: f64,
        gamma: f64,
        c: f64,
        decay: f64,
    ) -> Result<Self, SystemsError> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(SystemsError::BadSolenoid {
                reason: format!("lambda = {lambda} must lie in (0, 1)"),
            });
        }
        if gamma.is_nan() || gamma < 0.0 || lambda + gamma > 1.0 {
            return Err(SystemsError::BadSolenoid {
                reason: format!("need gamma >= 0 and lambda + gamma <= 1, got {gamma}"),
            });
        }
        if c.is_nan() || c < 0.0 || !c.is_finite() {
            return Err(SystemsError::BadSolenoid {
                reason: format!("perturbation amplitude c = {c} must be >= 0"),
            });
        }
        if !(decay > 0.0 && decay < 1.0) {
            return Err(SystemsError::BadSolenoid {
                reason: format!("decay = {decay} must lie in (0, 1)"),
            });
        }
        Ok(SolenoidFamily {
            base,
            lambda,
            gamma,
            c,
            decay,
        })
    }

    /// Doubling base, `lambda = 1/4`, `gamma = 1/2`, `c = 0.1`,
    /// `Phi(i) = 2^{-i}`.
    pub fn default_family() -> Self {
        SolenoidFamily {
            base: ExpandingCircleMap::doubling(),
            lambda: 0.25,
            gamma: 0.5,
            c: 0.1,
            decay: 0.5,
        }
    }

    pub fn base(&self) -> ExpandingCircleMap {
        self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn perturbation(&self) -> f64 {
        self.c
    }

    /// Decay schedule `Phi(i) = decay^i`.
    pub fn phi(&self, i: u64) -> f64 {
        self.decay.powi(i.min(i32::MAX as u64) as i32)
    }

    /// The autonomous limit family (`c = 0`).
    pub fn limit(&self) -> SolenoidFamily {
        SolenoidFamily { c: 0.0, ..*self }
    }

    /// Fiber map `G_i(x, y)`; `i = 0` gives the limit `G_0`.
    pub fn fiber_map(&self, i: u64, x: f64, y: [f64; 2]) -> [f64; 2] {
        let (s, c0) = (TAU * x).sin_cos();
        let mut g = [
            self.lambda * y[0] + self.gamma * c0,
            self.lambda * y[1] + self.gamma * s,
        ];
        if i >= 1 && self.c > 0.0 {
            let amp = self.c * self.phi(i);
            g[0] += amp * s;
            g[1] += amp * c0;
        }
        let norm2 = g[0] * g[0] + g[1] * g[1];
        if norm2 > 1.0 {
            // safety clip for user-supplied parameters
            let scale = (1.0 - 1e-9) / norm2.sqrt();
            g[0] *= scale;
            g[1] *= scale;
        }
        g
    }
}

impl MapFamily for SolenoidFamily {
    type Point = SolenoidPoint;

    fn phase_space(&self) -> PhaseSpace {
        PhaseSpace::Solenoid
    }

    fn step(&self, i: u64, p: SolenoidPoint) -> Result<SolenoidPoint, SystemsError> {
        let x = p.base().coord();
        let fiber = self.fiber_map(i, x, p.fiber());
        let base = self.base.apply(p.base());
        Ok(SolenoidPoint::new(base, fiber).expect("fiber clipped into disc"))
    }

    fn descriptor(&self) -> String {
        format!(
            "solenoid (base {}, lambda {}, gamma {}, c {}, decay {})",
            self.base.descriptor(),
            self.lambda,
            self.gamma,
            self.c,
            self.decay
        )
    }
}

/// Orbit stream for a solenoid family; the base runs at full precision and
/// the contracted fiber in `f64`.
pub struct SolenoidStream {
    family: SolenoidFamily,
    base: ExpandingStream,
    last_base: f64,
    fiber: [f64; 2],
    idx: u64,
    started: bool,
}

impl Iterator for SolenoidStream {
    type Item = SolenoidPoint;

    fn next(&mut self) -> Option<SolenoidPoint> {
        if self.started {
            self.idx += 1;
            self.fiber = self.family.fiber_map(self.idx, self.last_base, self.fiber);
        }
        self.started = true;
        let b = self.base.next()?;
        self.last_base = b.coord();
        Some(SolenoidPoint::new(b, self.fiber).expect("fiber stays in disc"))
    }
}

impl LebesgueOrbits for SolenoidFamily {
    type Stream = SolenoidStream;

    fn lebesgue_orbit(&self, seed: u64) -> SolenoidStream {
        let base = self.base.lebesgue_orbit(crate::seeding::split_seed(seed, 0));
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seeding::split_seed(seed, 1));
        // uniform on the unit disc by rejection
        let fiber = loop {
            let u = rng.gen::<f64>() * 2.0 - 1.0;
            let v = rng.gen::<f64>() * 2.0 - 1.0;
            if u * u + v * v <= 1.0 {
                break [u, v];
            }
        };
        SolenoidStream {
            family: *self,
            base,
            last_base: 0.0,
            fiber,
            idx: 0,
            started: false,
        }
    }
}

/// `F_i(x, y) = (2x mod 1, (i^{-1/2}, 0))` for `i >= 1`: the fibers converge
/// to the leaf `S^1 x {0}` so slowly that the logarithm law fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlowFamily;

impl SlowFamily {
    pub fn new() -> Self {
        SlowFamily
    }

    /// Fiber position after step `i`, exactly `(i^{-1/2}, 0)`.
    pub fn fiber_at(i: u64) -> [f64; 2] {
        [1.0 / (i as f64).sqrt(), 0.0]
    }
}

impl Default for SlowFamily {
    fn default() -> Self {
        SlowFamily
    }
}

impl MapFamily for SlowFamily {
    type Point = SolenoidPoint;

    fn phase_space(&self) -> PhaseSpace {
        PhaseSpace::Solenoid
    }

    fn step(&self, i: u64, p: SolenoidPoint) -> Result<SolenoidPoint, SystemsError> {
        if i == 0 {
            return Err(SystemsError::IndexZero {
                family: "slow family".into(),
            });
        }
        let base = CirclePoint::new(2.0 * p.base().coord());
        Ok(SolenoidPoint::new(base, SlowFamily::fiber_at(i)).expect("fiber in disc"))
    }

    fn descriptor(&self) -> String {
        "slow family (2x mod 1, (i^{-1/2}, 0))".into()
    }
}

/// Orbit stream for the slow family; the fiber schedule is closed-form, so
/// `nth` can skip the base in O(1).
pub struct SlowStream {
    base: LinearShiftStream,
    idx: u64,
    fiber0: [f64; 2],
}

impl Iterator for SlowStream {
    type Item = SolenoidPoint;

    fn next(&mut self) -> Option<SolenoidPoint> {
        let b = CirclePoint::new(self.base.x());
        let fiber = if self.idx == 0 {
            self.fiber0
        } else {
            SlowFamily::fiber_at(self.idx)
        };
        self.base.step(2);
        self.idx += 1;
        Some(SolenoidPoint::new(b, fiber).expect("fiber in disc"))
    }

    fn nth(&mut self, n: usize) -> Option<SolenoidPoint> {
        self.base.skip_doubling(n as u64);
        self.idx += n as u64;
        self.next()
    }
}

impl LebesgueOrbits for SlowFamily {
    type Stream = SlowStream;

    fn lebesgue_orbit(&self, seed: u64) -> SlowStream {
        let base = LinearShiftStream::new(crate::seeding::split_seed(seed, 0));
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seeding::split_seed(seed, 1));
        let fiber0 = loop {
            let u = rng.gen::<f64>() * 2.0 - 1.0;
            let v = rng.gen::<f64>() * 2.0 - 1.0;
            if u * u + v * v <= 1.0 {
                break [u, v];
            }
        };
        SlowStream {
            base,
            idx: 0,
            fiber0,
        }
    }
}

/// Lazily yields `x0, T^(1)(x0), ..., T^(n)(x0)` (exactly `n + 1` points)
/// by pointwise stepping.
pub fn orbit<F: MapFamily>(
    family: &F,
    x0: F::Point,
    n: u64,
) -> impl Iterator<Item = F::Point> + '_ {
    let mut current = Some(x0);
    let mut i = 0u64;
    std::iter::from_fn(move || {
        let out = current?;
        i += 1;
        current = if i <= n {
            Some(
                family
                    .step(i, out)
                    .expect("sequential indices start at 1"),
            )
        } else {
            None
        };
        Some(out)
    })
    .take((n + 1) as usize)
}

/// Hit-or-censored outcome of a hitting-time query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HitResult {
    pub status: HitStatus,
    /// hitting index, or the horizon when censored
    pub steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HitStatus {
    Hit,
    Censored,
}

impl HitResult {
    pub fn is_hit(&self) -> bool {
        self.status == HitStatus::Hit
    }
}

/// First index `n <= n_max` with `d(points[n], y) < r` over an orbit
/// stream; index 0 counts. Radii at or above the phase-space diameter give
/// an immediate degenerate hit, so radius schedules need no special-casing.
pub fn hitting_time_stream<P: Point>(
    stream: impl Iterator<Item = P>,
    y: P,
    r: f64,
    n_max: u64,
) -> Result<HitResult, SystemsError> {
    if r.is_nan() || r <= 0.0 {
        return Err(SystemsError::BadRadius { r });
    }
    if n_max < 1 {
        return Err(SystemsError::BadHorizon);
    }
    if r >= P::DIAMETER {
        return Ok(HitResult {
            status: HitStatus::Hit,
            steps: 0,
        });
    }
    for (n, p) in stream.take((n_max + 1) as usize).enumerate() {
        if p.dist(y) < r {
            return Ok(HitResult {
                status: HitStatus::Hit,
                steps: n as u64,
            });
        }
    }
    Ok(HitResult {
        status: HitStatus::Censored,
        steps: n_max,
    })
}

/// Hitting time of `B_r(y)` for the orbit of `x0` under pointwise stepping.
pub fn hitting_time<F: MapFamily>(
    family: &F,
    x0: F::Point,
    y: F::Point,
    r: f64,
    n_max: u64,
) -> Result<HitResult, SystemsError> {
    hitting_time_stream(orbit(family, x0, n_max), y, r, n_max)
}

/// Empirical verification of the standing solenoid assumptions.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    /// (a) fiber contraction ratio vs the declared lambda
    pub contraction: CheckResult,
    /// (b) sup |dG_i/dx| by central differences vs the analytic bound
    pub x_derivative: CheckResult,
    /// (c) sup |G_i - G_0| vs c*sqrt(2)*Phi(i), per sampled index
    pub decay: Vec<DecayCheck>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayCheck {
    pub index: u64,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Sample the fiber maps of a solenoid family and check the contraction,
/// bounded-derivative, and decay assumptions against the declared
/// constants. `n_samples` controls the sampling density; the RNG is seeded.
pub fn verify_assumptions(
    family: &SolenoidFamily,
    n_samples: usize,
    seed: u64,
) -> AssumptionReport {
    let n = n_samples.max(100);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices: Vec<u64> = (0..=20).chain([30, 40, 50]).collect();

    // (a) contraction in y: G_i is affine in y, ratio = lambda exactly
    let mut ratio = 0.0f64;
    for _ in 0..n {
        let x: f64 = rng.gen();
        let i = indices[rng.gen_range(0..indices.len())];
        let y1 = [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5];
        let y2 = [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5];
        let g1 = family.fiber_map(i, x, y1);
        let g2 = family.fiber_map(i, x, y2);
        let dy = ((y1[0] - y2[0]).powi(2) + (y1[1] - y2[1]).powi(2)).sqrt();
        if dy > 1e-12 {
            let dg = ((g1[0] - g2[0]).powi(2) + (g1[1] - g2[1]).powi(2)).sqrt();
            ratio = ratio.max(dg / dy);
        }
    }
    let contraction = CheckResult::new(ratio, family.lambda() + 1e-9);

    // (b) x-derivative by central differences on a dense grid
    let grid = n.max(1000);
    let dx = 1e-6;
    let mut dsup = 0.0f64;
    for k in 0..grid {
        let x = k as f64 / grid as f64;
        let i = indices[k % indices.len()];
        let y = [0.3, -0.2];
        let gp = family.fiber_map(i, x + dx, y);
        let gm = family.fiber_map(i, x - dx, y);
        let d = (((gp[0] - gm[0]) / (2.0 * dx)).powi(2) + ((gp[1] - gm[1]) / (2.0 * dx)).powi(2))
            .sqrt();
        dsup = dsup.max(d);
    }
    let deriv_bound = TAU * (family.gamma() + family.perturbation() * family.phi(1)) + 1e-6;
    let x_derivative = CheckResult::new(dsup, deriv_bound);

    // (c) decay of the perturbation, sampled densely in x
    let mut decay = Vec::new();
    for &i in &[1u64, 2, 5, 10, 20, 50] {
        let mut sup = 0.0f64;
        for k in 0..grid {
            let x = k as f64 / grid as f64;
            let y = [0.1, 0.1];
            let gi = family.fiber_map(i, x, y);
            let g0 = family.fiber_map(0, x, y);
            let d = ((gi[0] - g0[0]).powi(2) + (gi[1] - g0[1]).powi(2)).sqrt();
            sup = sup.max(d);
        }
        let bound = family.perturbation() * std::f64::consts::SQRT_2 * family.phi(i) + 1e-15;
        decay.push(DecayCheck {
            index: i,
            measured: sup,
            bound,
            pass: sup <= bound,
        });
    }

    let all_pass = contraction.pass && x_derivative.pass && decay.iter().all(|d| d.pass);
    AssumptionReport {
        contraction,
        x_derivative,
        decay,
        all_pass,
    }
}

/// Orbit export: one row per step, `step,x[,y1,y2]`.
pub fn orbit_to_csv<P: Point>(points: &[P]) -> String {
    let mut s = String::from(match P::N_COORDS {
        1 => "step,x\n",
        _ => "step,x,y1,y2\n",
    });
    for (k, p) in points.iter().enumerate() {
        s.push_str(&format!("{k}"));
        for c in p.coords() {
            s.push_str(&format!(",{c}"));
        }
        s.push('\n');
    }
    s
}

/// JSON family configuration with keys
/// `{family, q, epsilon, lambda, gamma, c, decay, qs}`.
#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    /// degrees for the alternating family
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qs: Option<Vec<u64>>,
}

/// A family parsed from configuration.
#[derive(Debug, Clone)]
pub enum Family {
    Expanding(ExpandingCircleMap),
    Alternating(AlternatingFamily),
    Solenoid(SolenoidFamily),
    Slow(SlowFamily),
}

impl FamilyConfig {
    pub fn doubling() -> Self {
        FamilyConfig {
            family: "doubling".into(),
            q: None,
            epsilon: None,
            lambda: None,
            gamma: None,
            c: None,
            decay: None,
            qs: None,
        }
    }

    pub fn build(&self) -> Result<Family, SystemsError> {
        match self.family.as_str() {
            "doubling" => Ok(Family::Expanding(ExpandingCircleMap::new(
                self.q.unwrap_or(2),
                0.0,
            )?)),
            "expanding" => Ok(Family::Expanding(ExpandingCircleMap::new(
                self.q.unwrap_or(2),
                self.epsilon.unwrap_or(0.0),
            )?)),
            "alternating" => {
                let qs = self.qs.clone().unwrap_or_else(|| vec![2, 3]);
                let eps = self.epsilon.unwrap_or(0.0);
                let maps = qs
                    .into_iter()
                    .map(|q| ExpandingCircleMap::new(q, eps))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Family::Alternating(AlternatingFamily::new(maps)?))
            }
            "solenoid" => Ok(Family::Solenoid(SolenoidFamily::new(
                ExpandingCircleMap::new(self.q.unwrap_or(2), self.epsilon.unwrap_or(0.0))?,
                self.lambda.unwrap_or(0.25),
                self.gamma.unwrap_or(0.5),
                self.c.unwrap_or(0.1),
                self.decay.unwrap_or(0.5),
            )?)),
            "slow" => Ok(Family::Slow(SlowFamily::new())),
            other => Err(SystemsError::UnknownFamily(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(x: f64, f: [f64; 2]) -> SolenoidPoint {
        SolenoidPoint::new(CirclePoint::new(x), f).unwrap()
    }

    #[test]
    fn doubling_step() {
        let t = ExpandingCircleMap::doubling();
        let out = t.step(1, CirclePoint::new(0.3)).unwrap();
        assert!((out.coord() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn expanding_map_rejects_strong_perturbation() {
        assert!(ExpandingCircleMap::new(2, 0.2).is_err()); // 2*pi*0.2 > 1
        assert!(ExpandingCircleMap::new(1, 0.0).is_err());
        let t = ExpandingCircleMap::new(2, 0.05).unwrap();
        assert!(t.min_derivative(10_000) > 1.0);
    }

    #[test]
    fn slow_family_step_and_index_zero() {
        let f = SlowFamily::new();
        let out = f.step(4, sp(0.1, [0.9, 0.2])).unwrap();
        assert!((out.base().coord() - 0.2).abs() < 1e-15);
        assert_eq!(out.fiber(), [0.5, 0.0]);
        assert!(matches!(
            f.step(0, sp(0.1, [0.0, 0.0])),
            Err(SystemsError::IndexZero { .. })
        ));
    }

    #[test]
    fn solenoid_limit_map_at_origin() {
        let f = SolenoidFamily::default_family();
        let out = f.limit().step(1, sp(0.0, [0.0, 0.0])).unwrap();
        assert!((out.base().coord()).abs() < 1e-15);
        assert!((out.fiber()[0] - 0.5).abs() < 1e-15);
        assert!(out.fiber()[1].abs() < 1e-15);
        // step(0) on the full family applies the same limit map
        let out0 = f.step(0, sp(0.0, [0.0, 0.0])).unwrap();
        assert_eq!(out0.fiber(), out.fiber());
    }

    #[test]
    fn orbit_of_one_seventh_has_period_three() {
        let t = ExpandingCircleMap::doubling();
        let pts: Vec<CirclePoint> = orbit(&t, CirclePoint::new(1.0 / 7.0), 3).collect();
        assert_eq!(pts.len(), 4);
        let expect = [1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0, 1.0 / 7.0];
        for (p, e) in pts.iter().zip(expect) {
            assert!((p.coord() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn orbit_length_zero_is_initial_point() {
        let t = ExpandingCircleMap::doubling();
        let pts: Vec<_> = orbit(&t, CirclePoint::new(0.42), 0).collect();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].coord(), 0.42);
    }

    #[test]
    fn slow_family_orbit_fibers() {
        let f = SlowFamily::new();
        let pts: Vec<_> = orbit(&f, sp(0.0, [1.0, 0.0]), 2).collect();
        let fibers: Vec<[f64; 2]> = pts.iter().map(|p| p.fiber()).collect();
        assert_eq!(fibers[0], [1.0, 0.0]);
        assert_eq!(fibers[1], [1.0, 0.0]); // 1^{-1/2} = 1
        assert!((fibers[2][0] - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn immediate_hit_at_index_zero() {
        let t = ExpandingCircleMap::doubling();
        let y = CirclePoint::new(0.31);
        let hit = hitting_time(&t, CirclePoint::new(0.3), y, 0.05, 100).unwrap();
        assert_eq!(hit, HitResult { status: HitStatus::Hit, steps: 0 });
    }

    #[test]
    fn hitting_time_matches_orbit_enumeration() {
        // exact orbit enumeration oracle: 1/7 -> 2/7 -> 4/7 hits y = 4/7
        let t = ExpandingCircleMap::doubling();
        let x0 = CirclePoint::new(1.0 / 7.0);
        let y = CirclePoint::new(4.0 / 7.0);
        let oracle = orbit(&t, x0, 10)
            .position(|p| p.dist(y) < 0.01)
            .unwrap() as u64;
        assert_eq!(oracle, 2);
        let hit = hitting_time(&t, x0, y, 0.01, 1000).unwrap();
        assert_eq!(hit, HitResult { status: HitStatus::Hit, steps: 2 });
    }

    #[test]
    fn slow_family_censors_within_horizon() {
        // fiber distance 1/sqrt(n) > 0.01 requires n > 1e4; with horizon
        // 1e3 every query is censored (closed-form fiber schedule oracle)
        let f = SlowFamily::new();
        let x0 = sp(0.37, [1.0, 0.0]);
        let y = sp(0.5, [0.0, 0.0]);
        for n in [1u64, 10, 1000] {
            assert!(SlowFamily::fiber_at(n)[0] > 0.01);
        }
        let hit = hitting_time(&f, x0, y, 0.01, 1000).unwrap();
        assert_eq!(
            hit,
            HitResult {
                status: HitStatus::Censored,
                steps: 1000
            }
        );
    }

    #[test]
    fn degenerate_radius_hits_at_zero() {
        let t = ExpandingCircleMap::doubling();
        let hit = hitting_time(&t, CirclePoint::new(0.0), CirclePoint::new(0.5), 0.75, 10)
            .unwrap();
        assert_eq!(hit.steps, 0);
    }

    #[test]
    fn hitting_monotone_in_radius() {
        let t = ExpandingCircleMap::doubling();
        let y = CirclePoint::new(0.618);
        for trial in 0..20 {
            let tau = |r: f64| {
                let s = t.lebesgue_orbit(crate::seeding::split_seed(5, trial));
                let h = hitting_time_stream(s, y, r, 100_000).unwrap();
                if h.is_hit() {
                    h.steps
                } else {
                    u64::MAX
                }
            };
            assert!(tau(0.01) >= tau(0.02));
            assert!(tau(0.02) >= tau(0.08));
        }
    }

    #[test]
    fn orbits_are_reproducible() {
        let t = ExpandingCircleMap::doubling();
        let a: Vec<f64> = t.lebesgue_orbit(99).take(500).map(|p| p.coord()).collect();
        let b: Vec<f64> = t.lebesgue_orbit(99).take(500).map(|p| p.coord()).collect();
        assert_eq!(a, b);
        let f = SolenoidFamily::default_family();
        let a: Vec<_> = f.lebesgue_orbit(7).take(100).map(|p| p.coords()).collect();
        let b: Vec<_> = f.lebesgue_orbit(7).take(100).map(|p| p.coords()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn stream_nth_matches_sequential() {
        let t = ExpandingCircleMap::doubling();
        let seq: Vec<f64> = t.lebesgue_orbit(3).take(201).map(|p| p.coord()).collect();
        let mut s = t.lebesgue_orbit(3);
        assert_eq!(s.nth(200).unwrap().coord(), seq[200]);
        let f = SlowFamily::new();
        let seq: Vec<_> = f.lebesgue_orbit(3).take(64).collect();
        let mut s = f.lebesgue_orbit(3);
        assert_eq!(s.nth(63).unwrap(), seq[63]);
    }

    #[test]
    fn solenoid_stays_in_disc_on_many_samples() {
        let f = SolenoidFamily::default_family();
        let mut count = 0usize;
        for seed in 0..100 {
            for p in f.lebesgue_orbit(seed).take(1000) {
                assert!(p.fiber_norm() <= 1.0 + 1e-12);
                count += 1;
            }
        }
        assert_eq!(count, 100_000);
    }

    #[test]
    fn slow_family_implication_distance_vs_steps() {
        // d(F^{(0,j)}(x0), target leaf) <= 1/i forces j >= i^2
        for i in [3u64, 10, 31, 100] {
            let bound = 1.0 / i as f64;
            // fiber_at(j)[0] <= bound iff j >= i^2
            let j_min = (1..).find(|&j| SlowFamily::fiber_at(j)[0] <= bound).unwrap();
            assert!(j_min >= i * i, "i={i} j_min={j_min}");
        }
    }

    #[test]
    fn assumptions_hold_for_default_family() {
        let f = SolenoidFamily::default_family();
        let report = verify_assumptions(&f, 2000, 1);
        assert!(report.all_pass);
        assert!(report.contraction.measured <= 0.25 + 1e-9);
        // closed-form perturbation bound at i = 10
        let d10 = report.decay.iter().find(|d| d.index == 10).unwrap();
        assert!(d10.measured <= 0.1 * std::f64::consts::SQRT_2 * 0.5f64.powi(10));
    }

    #[test]
    fn assumptions_decay_zero_when_unperturbed() {
        let f = SolenoidFamily::new(ExpandingCircleMap::doubling(), 0.25, 0.5, 0.0, 0.5).unwrap();
        let report = verify_assumptions(&f, 500, 2);
        assert!(report.all_pass);
        for d in &report.decay {
            assert_eq!(d.measured, 0.0);
        }
    }

    #[test]
    fn orbit_csv_has_step_and_coordinates() {
        let t = ExpandingCircleMap::doubling();
        let pts: Vec<CirclePoint> = orbit(&t, CirclePoint::new(0.25), 2).collect();
        let csv = orbit_to_csv(&pts);
        assert!(csv.starts_with("step,x\n0,0.25\n1,0.5\n"));
        let f = SlowFamily::new();
        let pts: Vec<SolenoidPoint> = orbit(&f, sp(0.1, [0.0, 0.0]), 1).collect();
        assert!(orbit_to_csv(&pts).starts_with("step,x,y1,y2\n"));
    }

    #[test]
    fn family_config_round_trip() {
        let cfg: FamilyConfig = serde_json::from_str(
            r#"{"family":"solenoid","lambda":0.25,"gamma":0.5,"c":0.1,"decay":0.5}"#,
        )
        .unwrap();
        assert!(matches!(cfg.build().unwrap(), Family::Solenoid(_)));
        let bad: Result<FamilyConfig, _> = serde_json::from_str(r#"{"family":"slow","wat":1}"#);
        assert!(bad.is_err());
        let unknown = FamilyConfig {
            family: "moon".into(),
            ..FamilyConfig::doubling()
        };
        assert!(unknown.build().is_err());
    }
}
