//! Mean-field coupled expanding maps.
//!
//! Infinitely many identical circle maps `T` interact through a coupling
//! kernel `h`: when the global state is the probability measure `mu`, every
//! coordinate moves by
//!
//! `Phi_{delta, mu}(x) = x + delta * ∫ h(x, y) dmu(y)  (mod 1)`
//!
//! after applying `T`. The measure evolves by the self-consistent transfer
//! operator `L_delta(mu) = L_{Phi_{delta, mu} ∘ T}(mu)`: push forward by
//! `T`, then by the state-dependent diffeomorphism `Phi`. For small enough
//! `delta` (`delta * sup|d_x h| <= 1/2` enforced here) `Phi` stays a
//! diffeomorphism with derivative at least 1/2 and the fixed-point
//! iteration converges exponentially.
//!
//! A single coordinate of the coupled system sees the nonautonomous family
//! `T_n = Phi_{delta, mu_n} ∘ T`; [`induced_family`] materializes it with
//! the state sequence computed once and cached. For the default coupling
//! `h(x, y) = sin(2 pi (y - x))` a state enters the maps only through the
//! pair `(∫ sin 2 pi y dmu, ∫ cos 2 pi y dmu)`, so the cache is two floats
//! per step and the per-particle mean field costs O(1).

use crate::measures::{
    w11_norm, wrap01, CirclePoint, EmpiricalMeasure, GridDensity, MeasureError,
};
use crate::systems::{
    ExpandingCircleMap, LebesgueOrbits, MapFamily, PhaseSpace, SystemsError,
};
use crate::systems::orbits::LinearShiftStream;
use crate::transfer::{first_mode, push, ulam_exact, CircleMap, TransferError, UlamMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::TAU;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeanFieldError {
    #[error("coupling too strong: delta = {delta} exceeds delta_max = {max} (= 1/(2 sup|d_x h|))")]
    CouplingTooStrong { delta: f64, max: f64 },
    #[error("fixed point did not converge within {steps} iterations; residual {residual}")]
    NoConvergence { steps: u64, residual: f64 },
    #[error("{op} requires the density representation")]
    DensityRequired { op: &'static str },
    #[error("diffeomorphism inversion failed at y = {y} (residual {residual})")]
    InversionFailure { y: f64, residual: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

/// Coupling kernel `h(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// `h(x, y) = sin(2 pi (y - x))`
    Sin,
}

impl Coupling {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Coupling::Sin => (TAU * (y - x)).sin(),
        }
    }

    /// `sup |d_x h|`, the constant governing admissible coupling strengths.
    pub fn sup_dx(&self) -> f64 {
        match self {
            Coupling::Sin => TAU,
        }
    }
}

/// Representation requested for global states built from a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Representation {
    Density { n_cells: usize },
    Particles { n: usize },
}

/// Validated parameters of a coupled system `(S^1, T, delta, h)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanFieldConfig {
    pub base: ExpandingCircleMap,
    pub coupling: Coupling,
    pub delta: f64,
    pub representation: Representation,
}

impl MeanFieldConfig {
    /// Requires `delta * sup|d_x h| <= 1/2`, which keeps `Phi' >= 1/2` and
    /// the inversion well conditioned.
    pub fn new(
        base: ExpandingCircleMap,
        coupling: Coupling,
        delta: f64,
        representation: Representation,
    ) -> Result<Self, MeanFieldError> {
        let max = Self::delta_max(coupling);
        if delta.is_nan() || delta < 0.0 || delta > max {
            return Err(MeanFieldError::CouplingTooStrong { delta, max });
        }
        Ok(MeanFieldConfig {
            base,
            coupling,
            delta,
            representation,
        })
    }

    pub fn delta_max(coupling: Coupling) -> f64 {
        0.5 / coupling.sup_dx()
    }
}

/// Global state of the coupled system at time `t`.
#[derive(Debug, Clone)]
pub struct GlobalState {
    pub measure: StateMeasure,
    pub t: u64,
}

#[derive(Debug, Clone)]
pub enum StateMeasure {
    Density(GridDensity),
    Particles(EmpiricalMeasure<CirclePoint>),
}

impl GlobalState {
    pub fn density(f: GridDensity) -> Self {
        GlobalState {
            measure: StateMeasure::Density(f),
            t: 0,
        }
    }

    pub fn particles(m: EmpiricalMeasure<CirclePoint>) -> Self {
        GlobalState {
            measure: StateMeasure::Particles(m),
            t: 0,
        }
    }

    pub fn as_density(&self) -> Option<&GridDensity> {
        match &self.measure {
            StateMeasure::Density(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_particles(&self) -> Option<&EmpiricalMeasure<CirclePoint>> {
        match &self.measure {
            StateMeasure::Particles(m) => Some(m),
            _ => None,
        }
    }

    /// `(∫ sin 2 pi y, ∫ cos 2 pi y)` of the state.
    pub fn mode(&self) -> (f64, f64) {
        match &self.measure {
            StateMeasure::Density(f) => first_mode(f),
            StateMeasure::Particles(m) => (
                m.integrate(|p| (TAU * p.coord()).sin()),
                m.integrate(|p| (TAU * p.coord()).cos()),
            ),
        }
    }
}

/// The raw coupling integral `∫ h(x, y) dmu(y)`, evaluated by quadrature
/// against the state.
pub fn coupling_integral(x: CirclePoint, state: &GlobalState, coupling: Coupling) -> f64 {
    let xv = x.coord();
    match &state.measure {
        StateMeasure::Density(f) => f.integrate(|y| coupling.eval(xv, y)),
        StateMeasure::Particles(m) => m.integrate(|p| coupling.eval(xv, p.coord())),
    }
}

/// Mean-field displacement `delta * ∫ h(x, y) dmu(y)` at a single point.
pub fn mean_displacement(x: CirclePoint, state: &GlobalState, config: &MeanFieldConfig) -> f64 {
    config.delta * coupling_integral(x, state, config.coupling)
}

/// The coupling diffeomorphism `Phi_{delta, mu}(x) = x + displacement mod 1`.
pub fn phi(x: CirclePoint, state: &GlobalState, config: &MeanFieldConfig) -> CirclePoint {
    CirclePoint::new(x.coord() + mean_displacement(x, state, config))
}

/// Displacement written through the first Fourier mode `(s, c)` of the
/// state; for the sine coupling this is exact:
/// `∫ sin(2 pi (y - x)) dmu(y) = s cos(2 pi x) - c sin(2 pi x)`.
#[inline]
fn mode_displacement(delta: f64, s: f64, c: f64, x: f64) -> f64 {
    let (sx, cx) = (TAU * x).sin_cos();
    delta * (s * cx - c * sx)
}

/// One application of `Phi_{delta, mu} ∘ T` as a circle map with an
/// increasing lift; `(s, c)` is the first mode of the driving state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposedMap {
    pub base: ExpandingCircleMap,
    pub delta: f64,
    pub s: f64,
    pub c: f64,
}

impl ComposedMap {
    pub fn displacement_amp(&self) -> f64 {
        self.delta * (self.s * self.s + self.c * self.c).sqrt()
    }

    pub fn apply_f64(&self, x: f64) -> f64 {
        wrap01(self.lift(x))
    }
}

impl CircleMap for ComposedMap {
    fn lift(&self, x: f64) -> f64 {
        let t = self.base.lift(x);
        t + mode_displacement(self.delta, self.s, self.c, t)
    }

    fn degree(&self) -> u64 {
        self.base.degree()
    }
}

/// Invert the lift of `u -> u + mode_displacement(u)` at `y` by bisection;
/// the displacement is bounded by `delta`, so `[y - delta, y + delta]`
/// brackets the solution.
fn invert_phi(delta: f64, s: f64, c: f64, y: f64) -> Result<f64, MeanFieldError> {
    let amp = delta * (s * s + c * c).sqrt();
    if amp == 0.0 {
        return Ok(y);
    }
    let mut lo = y - amp;
    let mut hi = y + amp;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid + mode_displacement(delta, s, c, mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    let residual = (u + mode_displacement(delta, s, c, u) - y).abs();
    if residual > 1e-9 {
        return Err(MeanFieldError::InversionFailure { y, residual });
    }
    Ok(u)
}

/// Pushforward of a grid density by `Phi`: cell masses are integrated over
/// exact preimage intervals `[Phi^{-1}(j h), Phi^{-1}((j+1) h)]`, so mass
/// is preserved to rounding and no derivative approximation enters.
fn push_by_phi(
    f: &GridDensity,
    delta: f64,
    s: f64,
    c: f64,
) -> Result<GridDensity, MeanFieldError> {
    let amp = delta * (s * s + c * c).sqrt();
    if amp < 1e-300 {
        return Ok(f.clone());
    }
    let n = f.n_cells();
    let h = 1.0 / n as f64;
    let mut boundaries = Vec::with_capacity(n + 1);
    for j in 0..n {
        boundaries.push(invert_phi(delta, s, c, j as f64 * h)?);
    }
    boundaries.push(boundaries[0] + 1.0);
    // integrate the periodic extension of f over each preimage span by
    // walking source cells; short spans keep the sums cancellation-free
    let source = |cell: i64| -> f64 { f.values()[cell.rem_euclid(n as i64) as usize] };
    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        let (a, b) = (boundaries[j], boundaries[j + 1]);
        let mut cell = (a * n as f64).floor() as i64;
        let mut mass = 0.0f64;
        loop {
            let cell_a = cell as f64 * h;
            let cell_b = cell_a + h;
            let lo = a.max(cell_a);
            let hi = b.min(cell_b);
            if hi > lo {
                mass += source(cell) * (hi - lo);
            }
            if cell_b >= b {
                break;
            }
            cell += 1;
        }
        values.push(mass * n as f64);
    }
    Ok(GridDensity::new(values)?)
}

/// Engine caching the Ulam matrix of the base map for a fixed grid.
pub struct SctEngine {
    config: MeanFieldConfig,
    matrix: UlamMatrix,
}

impl SctEngine {
    pub fn new(config: MeanFieldConfig, n_cells: usize) -> Self {
        SctEngine {
            config,
            matrix: ulam_exact(&config.base, n_cells),
        }
    }

    /// `L_delta(f) = push by T, then by Phi_{delta, f}`; the mode is taken
    /// from the pre-step state.
    pub fn step_density(&self, f: &GridDensity) -> Result<GridDensity, MeanFieldError> {
        let (s, c) = first_mode(f);
        let pushed = push(&self.matrix, f)?;
        push_by_phi(&pushed, self.config.delta, s, c)
    }
}

/// One step of the coupled dynamics on either representation. Particles
/// move by `x -> Phi_{delta, mu_t}(T(x))` with the mean field computed from
/// the current ensemble; densities move by the self-consistent operator.
pub fn sct_step(state: &GlobalState, config: &MeanFieldConfig) -> Result<GlobalState, MeanFieldError> {
    let t = state.t + 1;
    match &state.measure {
        StateMeasure::Density(f) => {
            let engine = SctEngine::new(*config, f.n_cells());
            Ok(GlobalState {
                measure: StateMeasure::Density(engine.step_density(f)?),
                t,
            })
        }
        StateMeasure::Particles(m) => {
            let (s, c) = GlobalState {
                measure: StateMeasure::Particles(m.clone()),
                t: state.t,
            }
            .mode();
            let points: Vec<CirclePoint> = m
                .points()
                .iter()
                .map(|p| {
                    let u = config.base.apply(*p).coord();
                    CirclePoint::new(u + mode_displacement(config.delta, s, c, u))
                })
                .collect();
            Ok(GlobalState {
                measure: StateMeasure::Particles(EmpiricalMeasure::new(
                    points,
                    m.weights().to_vec(),
                )?),
                t,
            })
        }
    }
}

/// Outcome of the self-consistent fixed-point iteration.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub density: GridDensity,
    pub residual: f64,
    pub iterations: u64,
    /// W^{1,1} residuals per iteration, for rate diagnostics
    pub residual_history: Vec<f64>,
}

const FIXED_POINT_CAP: u64 = 10_000;

/// Iterate `L_delta` from Lebesgue until the W^{1,1} distance between
/// successive densities drops below `tol`. Requires the density
/// representation; caps at 1e4 iterations.
pub fn fixed_point(config: &MeanFieldConfig, tol: f64) -> Result<FixedPoint, MeanFieldError> {
    let n_cells = match config.representation {
        Representation::Density { n_cells } => n_cells,
        Representation::Particles { .. } => {
            return Err(MeanFieldError::DensityRequired { op: "fixed_point" })
        }
    };
    let engine = SctEngine::new(*config, n_cells);
    let mut f = GridDensity::uniform(n_cells);
    let mut history = Vec::new();
    for k in 1..=FIXED_POINT_CAP {
        let next = engine.step_density(&f)?;
        let residual = w11_norm(&next.sub(&f)?)?;
        history.push(residual);
        f = next;
        if residual < tol {
            return Ok(FixedPoint {
                density: f,
                residual,
                iterations: k,
                residual_history: history,
            });
        }
    }
    Err(MeanFieldError::NoConvergence {
        steps: FIXED_POINT_CAP,
        residual: *history.last().unwrap_or(&f64::NAN),
    })
}

/// Below one ulp of a coordinate the displacement cannot be represented in
/// the smooth phase at all, so the dynamics has become the exact base map.
const PURE_SWITCH_EPS: f64 = 1.0 / (1u64 << 53) as f64;

/// The nonautonomous single-coordinate family `T_n = Phi_{delta, mu_{n-1}} ∘ T`
/// induced by a coupled system started from a given global density.
/// The state sequence is computed once; map index `i >= 1` uses the state
/// after `i - 1` steps and index 0 the limiting map.
#[derive(Debug, Clone)]
pub struct InducedFamily {
    base: ExpandingCircleMap,
    delta: f64,
    /// first-mode pairs (s_k, c_k) of the cached states
    states: Arc<Vec<(f64, f64)>>,
    /// map index from which every map is numerically the bare base map
    /// (linear base only)
    pure_from: Option<u64>,
}

const INDUCED_STATE_CAP: u64 = 4_000;

/// Materialize the induced family. The state sequence is advanced until
/// the first-mode pair settles (below 1e-15) or a cap is reached; maps
/// beyond the cache reuse the final state.
pub fn induced_family(
    config: &MeanFieldConfig,
    initial: &GridDensity,
) -> Result<InducedFamily, MeanFieldError> {
    let engine = SctEngine::new(*config, initial.n_cells());
    let mut states = Vec::new();
    let mut f = initial.clone();
    let mut mode = first_mode(&f);
    states.push(mode);
    for _ in 0..INDUCED_STATE_CAP {
        f = engine.step_density(&f)?;
        let next = first_mode(&f);
        let moved = (next.0 - mode.0).abs() + (next.1 - mode.1).abs();
        states.push(next);
        mode = next;
        if moved < 1e-15 {
            break;
        }
    }
    let pure_from = if config.base.is_linear() {
        let last_active = states
            .iter()
            .rposition(|&(s, c)| config.delta * (s * s + c * c).sqrt() >= PURE_SWITCH_EPS);
        Some(match last_active {
            // map i uses state i-1, so maps beyond k+1 are clean
            Some(k) => k as u64 + 2,
            None => 1,
        })
    } else {
        None
    };
    Ok(InducedFamily {
        base: config.base,
        delta: config.delta,
        states: Arc::new(states),
        pure_from,
    })
}

impl InducedFamily {
    pub fn base(&self) -> ExpandingCircleMap {
        self.base
    }

    pub fn cached_len(&self) -> usize {
        self.states.len()
    }

    /// Index into the cached state sequence used by map `i`.
    pub fn state_index(&self, i: u64) -> u64 {
        if i == 0 {
            return self.states.len() as u64 - 1;
        }
        (i - 1).min(self.states.len() as u64 - 1)
    }

    /// The time-`i` map as a circle map (index 0: limiting map).
    pub fn composed_map(&self, i: u64) -> ComposedMap {
        let (s, c) = self.states[self.state_index(i) as usize];
        ComposedMap {
            base: self.base,
            delta: self.delta,
            s,
            c,
        }
    }

    fn is_pure_at(&self, i: u64) -> bool {
        self.pure_from.is_some_and(|p| i >= p)
    }
}

impl MapFamily for InducedFamily {
    type Point = CirclePoint;

    fn phase_space(&self) -> PhaseSpace {
        PhaseSpace::Circle
    }

    fn step(&self, i: u64, p: CirclePoint) -> Result<CirclePoint, SystemsError> {
        Ok(CirclePoint::new(self.composed_map(i).apply_f64(p.coord())))
    }

    fn descriptor(&self) -> String {
        format!(
            "mean-field induced (base {}, delta {}, {} cached states)",
            self.base.descriptor(),
            self.delta,
            self.states.len()
        )
    }
}

/// Orbit stream of the induced family: `f64` stepping through the coupled
/// transient, then an exact shift continuation once every remaining map is
/// numerically the bare linear base. The fresh tape bits below double
/// precision stand in for the unresolved digits of the initial condition.
pub struct InducedStream {
    family: InducedFamily,
    tape_seed: u64,
    phase: InducedPhase,
}

#[allow(clippy::large_enum_variant)]
enum InducedPhase {
    Smooth { x: f64, idx: u64 },
    Shift(LinearShiftStream),
}

impl Iterator for InducedStream {
    type Item = CirclePoint;

    fn next(&mut self) -> Option<CirclePoint> {
        match &mut self.phase {
            InducedPhase::Shift(s) => {
                let out = CirclePoint::new(s.x());
                s.step(self.family.base.degree());
                Some(out)
            }
            InducedPhase::Smooth { x, idx } => {
                let out = CirclePoint::new(*x);
                *idx += 1;
                if self.family.is_pure_at(*idx) {
                    let mut s = LinearShiftStream::continuing_from(*x, self.tape_seed);
                    s.step(self.family.base.degree());
                    self.phase = InducedPhase::Shift(s);
                } else {
                    *x = self.family.composed_map(*idx).apply_f64(*x);
                }
                Some(out)
            }
        }
    }
}

impl LebesgueOrbits for InducedFamily {
    type Stream = InducedStream;

    fn lebesgue_orbit(&self, seed: u64) -> InducedStream {
        let phase = if self.is_pure_at(1) {
            // bitwise identical to the uncoupled base stream
            InducedPhase::Shift(LinearShiftStream::new(seed))
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            InducedPhase::Smooth {
                x: rng.gen::<f64>(),
                idx: 0,
            }
        };
        InducedStream {
            family: self.clone(),
            tape_seed: crate::seeding::split_seed(seed, 1),
            phase,
        }
    }
}
