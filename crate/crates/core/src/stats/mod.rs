//! Scaling estimators: hitting-time exponents, local dimensions, their
//! comparison, and a Borel-Cantelli ratio diagnostic.
//!
//! The headline quantity is the hitting-time scaling exponent
//! `lim log tau_r / (-log r)`: for each radius of a geometric schedule a
//! batch of seeded orbits produces hitting times of `B_r(y)`, the mean of
//! `log tau` is regressed against `-log r`, and the slope estimates the
//! exponent. The matching quantity on the measure side is the local
//! dimension `lim log mu(B_r(y)) / log r`, estimated from an equilibrium
//! point cloud. [`compare`] gates the two fits on their `r^2` and passes
//! when the slopes agree within a tolerance.
//!
//! Censoring: hitting times that exceed the horizon are excluded from the
//! per-radius mean but counted; a radius enters the regression only when at
//! least 95% of its samples are uncensored, since censoring biases
//! `log tau` downward without bound. Hits at index 0 enter as `tau = 1` so
//! the logarithm stays finite.

use crate::fitting::fit_line;
use crate::measures::{EmpiricalMeasure, Point};
use crate::seeding::split_seed;
use crate::systems::{hitting_time_stream, LebesgueOrbits, SystemsError};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("invalid radius schedule: {0}")]
    BadSchedule(String),
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("no radius had >= 95% uncensored samples within the horizon")]
    InsufficientHorizon { diagnostics: Vec<RadiusCensoring> },
    #[error("fewer than {needed} radii contain >= {min_points} cloud points")]
    InsufficientData { needed: usize, min_points: usize },
    #[error("cloud must have >= {min} points, got {got}")]
    CloudTooSmall { got: usize, min: usize },
    #[error("expected visit count is zero over the whole range")]
    DegenerateTarget,
    #[error("burn-in must be >= 1")]
    BadBurnIn,
    #[error("regression needs >= 2 usable radii")]
    FitFailed,
    #[error(transparent)]
    Systems(#[from] SystemsError),
}

/// Censoring diagnostics attached to the insufficient-horizon error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RadiusCensoring {
    pub radius: f64,
    pub n_samples: usize,
    pub n_censored: usize,
}

/// Geometric radius schedule `r_k = r0 * ratio^k`, `k = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiiSchedule {
    pub r0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl RadiiSchedule {
    pub fn new(r0: f64, ratio: f64, count: usize) -> Result<Self, StatsError> {
        if r0.is_nan() || r0 <= 0.0 || !r0.is_finite() {
            return Err(StatsError::BadSchedule(format!("r0 = {r0} must be > 0")));
        }
        if ratio.is_nan() || ratio <= 0.0 || ratio >= 1.0 {
            return Err(StatsError::BadSchedule(format!(
                "ratio = {ratio} must lie in (0, 1)"
            )));
        }
        if count < 2 {
            return Err(StatsError::BadSchedule(format!(
                "count = {count} must be >= 2"
            )));
        }
        Ok(RadiiSchedule { r0, ratio, count })
    }

    /// Defaults for circle systems: `r0 = 2^-5`, halving, 8 radii.
    pub fn circle_default() -> Self {
        RadiiSchedule {
            r0: 0.03125,
            ratio: 0.5,
            count: 8,
        }
    }

    /// Defaults for solenoid targets: 6 radii (sample-count limits).
    pub fn solenoid_default() -> Self {
        RadiiSchedule {
            r0: 0.03125,
            ratio: 0.5,
            count: 6,
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.r0 * self.ratio.powi(k as i32))
            .collect()
    }
}

/// One radius of a log-log regression.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitPoint {
    pub radius: f64,
    /// `-log r` for hitting fits, `log r` for dimension fits
    pub log_abscissa: f64,
    /// mean `log tau`, or `log` ball mass
    pub log_ordinate: f64,
    pub n_samples: usize,
    pub n_censored: usize,
    pub used_in_fit: bool,
}

/// Log-log regression result; `slope` is the exponent estimate and the fit
/// is reproducible from the recorded points.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<FitPoint>,
}

impl ScalingFit {
    fn from_points(points: Vec<FitPoint>) -> Result<Self, StatsError> {
        let xs: Vec<f64> = points
            .iter()
            .filter(|p| p.used_in_fit)
            .map(|p| p.log_abscissa)
            .collect();
        let ys: Vec<f64> = points
            .iter()
            .filter(|p| p.used_in_fit)
            .map(|p| p.log_ordinate)
            .collect();
        let fit = fit_line(&xs, &ys).ok_or(StatsError::FitFailed)?;
        Ok(ScalingFit {
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            points,
        })
    }

    /// CSV export: `radius,log_abscissa,log_ordinate,n,censored,used`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("radius,log_abscissa,log_ordinate,n,censored,used\n");
        for p in &self.points {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.radius, p.log_abscissa, p.log_ordinate, p.n_samples, p.n_censored, p.used_in_fit
            ));
        }
        s
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r_squared,
        })
    }
}

/// Convenience sampler: Lebesgue-random orbits of a family, one per trial
/// index, split from a master seed.
pub fn lebesgue_sampler<F: LebesgueOrbits + Sync>(
    family: &F,
    master_seed: u64,
) -> impl Fn(u64) -> F::Stream + Sync + '_ {
    move |trial| family.lebesgue_orbit(split_seed(master_seed, trial))
}

/// Hitting-time scaling exponent at target `y`.
///
/// For each radius `r_k`, `n_samples` fresh orbits from `sampler` produce
/// hitting times up to `n_max`; the mean of `log max(tau, 1)` over the
/// uncensored ones is regressed against `-log r_k` over radii with at
/// least 95% uncensored samples.
pub fn loglaw_exponent<P, S, F>(
    sampler: F,
    y: P,
    schedule: &RadiiSchedule,
    n_samples: usize,
    n_max: u64,
) -> Result<ScalingFit, StatsError>
where
    P: Point,
    S: Iterator<Item = P>,
    F: Fn(u64) -> S + Sync,
{
    if n_samples < 30 {
        return Err(StatsError::TooFewSamples {
            got: n_samples,
            min: 30,
        });
    }
    let radii = schedule.radii();
    let results: Vec<(bool, u64)> = (0..radii.len() * n_samples)
        .into_par_iter()
        .map(|t| {
            let k = t / n_samples;
            let stream = sampler(t as u64);
            let hit = hitting_time_stream(stream, y, radii[k], n_max)
                .expect("radius and horizon validated");
            (hit.is_hit(), hit.steps)
        })
        .collect();

    let mut points = Vec::with_capacity(radii.len());
    let mut diagnostics = Vec::new();
    for (k, &r) in radii.iter().enumerate() {
        let batch = &results[k * n_samples..(k + 1) * n_samples];
        let n_censored = batch.iter().filter(|(hit, _)| !hit).count();
        let uncensored: Vec<u64> = batch
            .iter()
            .filter(|(hit, _)| *hit)
            .map(|&(_, steps)| steps)
            .collect();
        let used = (n_samples - n_censored) as f64 >= 0.95 * n_samples as f64
            && !uncensored.is_empty();
        let mean_log_tau = if uncensored.is_empty() {
            f64::NAN
        } else {
            uncensored
                .iter()
                .map(|&t| (t.max(1) as f64).ln())
                .sum::<f64>()
                / uncensored.len() as f64
        };
        diagnostics.push(RadiusCensoring {
            radius: r,
            n_samples,
            n_censored,
        });
        points.push(FitPoint {
            radius: r,
            log_abscissa: -r.ln(),
            log_ordinate: mean_log_tau,
            n_samples,
            n_censored,
            used_in_fit: used,
        });
    }
    if points.iter().filter(|p| p.used_in_fit).count() < 2 {
        return Err(StatsError::InsufficientHorizon { diagnostics });
    }
    ScalingFit::from_points(points)
}

const MIN_CLOUD_POINTS: usize = 10_000;
const MIN_BALL_POINTS: usize = 50;
const MIN_DIMENSION_RADII: usize = 3;

/// Local dimension of an empirical measure at `y`: regression of
/// `log mu(B_r(y))` against `log r` over radii whose ball contains at
/// least 50 cloud points.
pub fn local_dimension<P: Point>(
    cloud: &EmpiricalMeasure<P>,
    y: P,
    schedule: &RadiiSchedule,
) -> Result<ScalingFit, StatsError> {
    if cloud.len() < MIN_CLOUD_POINTS {
        return Err(StatsError::CloudTooSmall {
            got: cloud.len(),
            min: MIN_CLOUD_POINTS,
        });
    }
    let radii = schedule.radii();
    let total = cloud.total_mass();
    let mut counts = vec![0usize; radii.len()];
    let mut masses = vec![0.0f64; radii.len()];
    for (p, &w) in cloud.points().iter().zip(cloud.weights()) {
        let d = p.dist(y);
        for (k, &r) in radii.iter().enumerate() {
            if d < r {
                counts[k] += 1;
                masses[k] += w;
            } else {
                break; // radii decrease
            }
        }
    }
    let mut points = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        let used = counts[k] >= MIN_BALL_POINTS;
        let frac = masses[k] / total;
        points.push(FitPoint {
            radius: r,
            log_abscissa: r.ln(),
            log_ordinate: if frac > 0.0 { frac.ln() } else { f64::NAN },
            n_samples: counts[k],
            n_censored: 0,
            used_in_fit: used && frac > 0.0,
        });
    }
    if points.iter().filter(|p| p.used_in_fit).count() < MIN_DIMENSION_RADII {
        return Err(StatsError::InsufficientData {
            needed: MIN_DIMENSION_RADII,
            min_points: MIN_BALL_POINTS,
        });
    }
    ScalingFit::from_points(points)
}

/// Terminal points of `n_points` Lebesgue-random orbits after `burn_in`
/// sequential steps, with uniform weights.
pub fn equilibrium_cloud<F>(
    family: &F,
    n_points: usize,
    burn_in: u64,
    seed: u64,
) -> Result<EmpiricalMeasure<F::Point>, StatsError>
where
    F: LebesgueOrbits + Sync,
{
    if burn_in < 1 {
        return Err(StatsError::BadBurnIn);
    }
    let points: Vec<F::Point> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            family
                .lebesgue_orbit(split_seed(seed, i as u64))
                .nth(burn_in as usize)
                .expect("streams are unbounded")
        })
        .collect();
    Ok(EmpiricalMeasure::uniform(points))
}

/// Radius rule for the Borel-Cantelli diagnostic: a geometric schedule
/// (which must cover every step) or the power law `r_k = k^-beta`. The
/// outer taper radius `r_0` is 1 in both cases.
#[derive(Debug, Clone, Serialize)]
pub enum RadiusRule {
    Geometric(RadiiSchedule),
    PowerLaw { beta: f64 },
}

impl RadiusRule {
    /// Radii `r_0..=r_n`; `r_0 = 1` anchors the taper of the first bump.
    fn radii(&self, n_steps: usize) -> Result<Vec<f64>, StatsError> {
        let mut out = Vec::with_capacity(n_steps + 1);
        out.push(1.0);
        match self {
            RadiusRule::Geometric(s) => {
                if s.count < n_steps {
                    return Err(StatsError::BadSchedule(format!(
                        "schedule has {} radii but {n_steps} steps requested",
                        s.count
                    )));
                }
                out.extend(s.radii().into_iter().take(n_steps));
            }
            RadiusRule::PowerLaw { beta } => {
                if beta.is_nan() || *beta <= 0.0 {
                    return Err(StatsError::BadSchedule(format!(
                        "beta = {beta} must be > 0"
                    )));
                }
                out.extend((1..=n_steps).map(|k| (k as f64).powf(-beta)));
            }
        }
        Ok(out)
    }
}

/// Bump value: 1 inside `B(y, r_k)`, 0 outside `B(y, r_{k-1})`, linear in
/// between.
fn bump(d: f64, r_inner: f64, r_outer: f64) -> f64 {
    if d <= r_inner {
        1.0
    } else if d >= r_outer || r_outer <= r_inner {
        0.0
    } else {
        (r_outer - d) / (r_outer - r_inner)
    }
}

/// Ratio curve `Z_n / E(Z_n)` of one held-out orbit, with the expectation
/// estimated over `n_samples` fresh orbits.
#[derive(Debug, Clone)]
pub struct BcCurve {
    /// `(n, Z_n / E(Z_n))` for every step with `E(Z_n) > 0`
    pub points: Vec<(u64, f64)>,
    pub final_ratio: f64,
    pub expected_final: f64,
}

impl BcCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,ratio\n");
        for (n, v) in &self.points {
            s.push_str(&format!("{n},{v}\n"));
        }
        s
    }
}

fn bc_visit_prefix<P, S>(mut stream: S, y: P, radii: &[f64], n_steps: usize) -> Vec<f64>
where
    P: Point,
    S: Iterator<Item = P>,
{
    // Z contributions: phi_j evaluated at orbit index j, j = 1..=n_steps
    let mut out = Vec::with_capacity(n_steps);
    let mut acc = 0.0f64;
    let _ = stream.next(); // index 0 is x0 itself
    for j in 1..=n_steps {
        let p = stream.next().expect("streams are unbounded");
        acc += bump(p.dist(y), radii[j], radii[j - 1]);
        out.push(acc);
    }
    out
}

/// Single held-out orbit (trial 0) against an expectation estimated from
/// trials `1..=n_samples`.
pub fn borel_cantelli_ratio<P, S, F>(
    sampler: F,
    y: P,
    rule: &RadiusRule,
    n_samples: usize,
    n_steps: usize,
) -> Result<BcCurve, StatsError>
where
    P: Point,
    S: Iterator<Item = P>,
    F: Fn(u64) -> S + Sync,
{
    let (expected, mut holdouts) = bc_ensemble(&sampler, y, rule, n_samples, 1, n_steps)?;
    let z = holdouts.pop().expect("one holdout requested");
    let mut points = Vec::with_capacity(n_steps);
    for (i, (&e, &zn)) in expected.iter().zip(&z).enumerate() {
        if e > 0.0 {
            points.push(((i + 1) as u64, zn / e));
        }
    }
    let expected_final = *expected.last().unwrap();
    let final_ratio = points.last().map(|&(_, v)| v).unwrap_or(f64::NAN);
    Ok(BcCurve {
        points,
        final_ratio,
        expected_final,
    })
}

/// Final ratios `Z_n / E(Z_n)` of many held-out orbits sharing one
/// expectation estimate; used by ensemble-level diagnostics.
pub fn borel_cantelli_final_ratios<P, S, F>(
    sampler: F,
    y: P,
    rule: &RadiusRule,
    n_samples: usize,
    n_holdout: usize,
    n_steps: usize,
) -> Result<Vec<f64>, StatsError>
where
    P: Point,
    S: Iterator<Item = P>,
    F: Fn(u64) -> S + Sync,
{
    let (expected, holdouts) = bc_ensemble(&sampler, y, rule, n_samples, n_holdout, n_steps)?;
    let e = *expected.last().unwrap();
    Ok(holdouts.iter().map(|z| z.last().unwrap() / e).collect())
}

/// Shared machinery: holdout orbits are trials `0..n_holdout`, the
/// expectation is the mean visit prefix over the next `n_samples` trials.
/// Errors out when the expectation is zero over the whole range.
fn bc_ensemble<P, S, F>(
    sampler: &F,
    y: P,
    rule: &RadiusRule,
    n_samples: usize,
    n_holdout: usize,
    n_steps: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), StatsError>
where
    P: Point,
    S: Iterator<Item = P>,
    F: Fn(u64) -> S + Sync,
{
    if n_steps < 1 {
        return Err(StatsError::BadSchedule("n_steps must be >= 1".into()));
    }
    let radii = rule.radii(n_steps)?;
    let prefixes: Vec<Vec<f64>> = (0..n_holdout + n_samples)
        .into_par_iter()
        .map(|t| bc_visit_prefix(sampler(t as u64), y, &radii, n_steps))
        .collect();
    let mut expected = vec![0.0f64; n_steps];
    for z in &prefixes[n_holdout..] {
        for (e, &v) in expected.iter_mut().zip(z) {
            *e += v;
        }
    }
    for e in expected.iter_mut() {
        *e /= n_samples as f64;
    }
    if *expected.last().unwrap() <= 0.0 {
        return Err(StatsError::DegenerateTarget);
    }
    Ok((expected, prefixes[..n_holdout].to_vec()))
}

/// Verdict of the exponent-vs-dimension comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Comparison of a hitting-exponent fit against a dimension fit.
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub verdict: Verdict,
    pub slope_difference: f64,
    pub tol: f64,
    pub reason: String,
    pub loglaw: ScalingFit,
    pub dimension: ScalingFit,
}

const R2_GATE: f64 = 0.9;

/// Pass iff both fits have `r^2 >= 0.9` and the slopes agree within `tol`;
/// low-quality fits yield `Inconclusive` rather than `Fail`.
pub fn compare(loglaw: &ScalingFit, dimension: &ScalingFit, tol: f64) -> CompareReport {
    let diff = (loglaw.slope - dimension.slope).abs();
    let (verdict, reason) = if loglaw.r_squared < R2_GATE || dimension.r_squared < R2_GATE {
        (
            Verdict::Inconclusive,
            format!(
                "fit quality below gate: r2 = {:.3} / {:.3} (need >= {R2_GATE})",
                loglaw.r_squared, dimension.r_squared
            ),
        )
    } else if diff <= tol {
        (
            Verdict::Pass,
            format!("|{:.4} - {:.4}| = {diff:.4} <= {tol}", loglaw.slope, dimension.slope),
        )
    } else {
        (
            Verdict::Fail,
            format!("|{:.4} - {:.4}| = {diff:.4} > {tol}", loglaw.slope, dimension.slope),
        )
    };
    CompareReport {
        verdict,
        slope_difference: diff,
        tol,
        reason,
        loglaw: loglaw.clone(),
        dimension: dimension.clone(),
    }
}
