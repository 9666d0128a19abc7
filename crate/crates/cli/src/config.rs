//! Experiment configuration: JSON schema, exhaustive validation, typed
//! structs.
//!
//! Validation runs over the raw JSON first and collects *every* violation
//! (unknown keys, missing keys, out-of-range values) before the typed
//! deserialization, so a broken config reports all problems at once.

use loglaw_core::stats::RadiiSchedule;
use loglaw_core::systems::FamilyConfig;
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug)]
pub struct ValidationErrors(pub Vec<String>);

impl std::fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "config validation failed:")?;
        for v in &self.0 {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub r0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<RadiiSchedule, String> {
        RadiiSchedule::new(self.r0, self.ratio, self.count).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDensityConfig {
    pub kind: String,
    #[serde(default)]
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectConfig {
    #[serde(default)]
    pub slope_min: Option<f64>,
    #[serde(default)]
    pub slope_max: Option<f64>,
    #[serde(default)]
    pub min_r2: Option<f64>,
    #[serde(default)]
    pub verdict: Option<String>,
    #[serde(default)]
    pub max_ratio: Option<f64>,
    #[serde(default)]
    pub min_rate: Option<f64>,
    #[serde(default)]
    pub band: Option<[f64; 2]>,
    #[serde(default)]
    pub min_fraction: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionBlock {
    pub n_points: usize,
    pub burn_in: u64,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub compare_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseMapConfig {
    pub q: u64,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayProbeConfig {
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleConfig {
    #[serde(default)]
    pub power_beta: Option<f64>,
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
}

/// Typed experiment configuration; `experiment` selects the variant.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "experiment", deny_unknown_fields)]
pub enum ExperimentConfig {
    #[serde(rename = "loglaw")]
    Loglaw {
        family: FamilyConfig,
        #[serde(default)]
        target: Option<Vec<f64>>,
        #[serde(default)]
        targets_from_cloud: Option<usize>,
        schedule: ScheduleConfig,
        n_samples: usize,
        horizon: u64,
        seed: u64,
        #[serde(default)]
        dimension: Option<DimensionBlock>,
        #[serde(default)]
        expect: Option<ExpectConfig>,
        #[serde(default)]
        output: Option<String>,
    },
    #[serde(rename = "dimension")]
    Dimension {
        family: FamilyConfig,
        target: Vec<f64>,
        n_points: usize,
        burn_in: u64,
        schedule: ScheduleConfig,
        seed: u64,
        #[serde(default)]
        expect: Option<ExpectConfig>,
        #[serde(default)]
        output: Option<String>,
    },
    #[serde(rename = "converge")]
    Converge {
        family: FamilyConfig,
        n_cells: usize,
        steps: u64,
        initial: InitialDensityConfig,
        seed: u64,
        #[serde(default)]
        expect: Option<ExpectConfig>,
        #[serde(default)]
        output: Option<String>,
    },
    #[serde(rename = "lossmem")]
    LossMem {
        family: FamilyConfig,
        n_cells: usize,
        steps: u64,
        seed: u64,
        #[serde(default)]
        expect: Option<ExpectConfig>,
        #[serde(default)]
        output: Option<String>,
    },
    #[serde(rename = "meanfield-fixed-point")]
    MeanFieldFixedPoint {
        base: BaseMapConfig,
        coupling: String,
        deltas: Vec<f64>,
        n_cells: usize,
        tol: f64,
        max_iterations: u64,
        #[serde(default)]
        decay_probe: Option<DecayProbeConfig>,
        seed: u64,
        #[serde(default)]
        expect: Option<ExpectConfig>,
        #[serde(default)]
        output: Option<String>,
    },
    #[serde(rename = "meanfield-loglaw")]
    MeanFieldLoglaw {
        base: BaseMapConfig,
        coupling: String,
        delta: f64,
        n_cells: usize,
        initial: InitialDensityConfig,
        target: Vec<f64>,
        schedule: ScheduleConfig,
        n_samples: usize,
        horizon: u64,
        seed: u64,
        #[serde(default)]
        expect: Option<ExpectConfig>,
        #[serde(default)]
        output: Option<String>,
    },
    #[serde(rename = "borel-cantelli")]
    BorelCantelli {
        family: FamilyConfig,
        target: Vec<f64>,
        rule: RuleConfig,
        n_samples: usize,
        n_holdout: usize,
        n_steps: usize,
        seed: u64,
        #[serde(default)]
        expect: Option<ExpectConfig>,
        #[serde(default)]
        output: Option<String>,
    },
    #[serde(rename = "verify-assumptions")]
    VerifyAssumptions {
        family: FamilyConfig,
        n_samples: usize,
        seed: u64,
        #[serde(default)]
        output: Option<String>,
    },
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Loglaw { .. } => "loglaw",
            ExperimentConfig::Dimension { .. } => "dimension",
            ExperimentConfig::Converge { .. } => "converge",
            ExperimentConfig::LossMem { .. } => "lossmem",
            ExperimentConfig::MeanFieldFixedPoint { .. } => "meanfield-fixed-point",
            ExperimentConfig::MeanFieldLoglaw { .. } => "meanfield-loglaw",
            ExperimentConfig::BorelCantelli { .. } => "borel-cantelli",
            ExperimentConfig::VerifyAssumptions { .. } => "verify-assumptions",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::Loglaw { seed, .. }
            | ExperimentConfig::Dimension { seed, .. }
            | ExperimentConfig::Converge { seed, .. }
            | ExperimentConfig::LossMem { seed, .. }
            | ExperimentConfig::MeanFieldFixedPoint { seed, .. }
            | ExperimentConfig::MeanFieldLoglaw { seed, .. }
            | ExperimentConfig::BorelCantelli { seed, .. }
            | ExperimentConfig::VerifyAssumptions { seed, .. } => *seed,
        }
    }

    pub fn set_seed(&mut self, value: u64) {
        match self {
            ExperimentConfig::Loglaw { seed, .. }
            | ExperimentConfig::Dimension { seed, .. }
            | ExperimentConfig::Converge { seed, .. }
            | ExperimentConfig::LossMem { seed, .. }
            | ExperimentConfig::MeanFieldFixedPoint { seed, .. }
            | ExperimentConfig::MeanFieldLoglaw { seed, .. }
            | ExperimentConfig::BorelCantelli { seed, .. }
            | ExperimentConfig::VerifyAssumptions { seed, .. } => *seed = value,
        }
    }

    pub fn output(&self) -> Option<&str> {
        match self {
            ExperimentConfig::Loglaw { output, .. }
            | ExperimentConfig::Dimension { output, .. }
            | ExperimentConfig::Converge { output, .. }
            | ExperimentConfig::LossMem { output, .. }
            | ExperimentConfig::MeanFieldFixedPoint { output, .. }
            | ExperimentConfig::MeanFieldLoglaw { output, .. }
            | ExperimentConfig::BorelCantelli { output, .. }
            | ExperimentConfig::VerifyAssumptions { output, .. } => output.as_deref(),
        }
    }
}

const KINDS: &[&str] = &[
    "loglaw",
    "dimension",
    "converge",
    "lossmem",
    "meanfield-fixed-point",
    "meanfield-loglaw",
    "borel-cantelli",
    "verify-assumptions",
];

struct Schema {
    required: &'static [&'static str],
    optional: &'static [&'static str],
}

fn schema_for(kind: &str) -> Schema {
    match kind {
        "loglaw" => Schema {
            required: &["family", "schedule", "n_samples", "horizon", "seed"],
            optional: &["target", "targets_from_cloud", "dimension", "expect", "output"],
        },
        "dimension" => Schema {
            required: &["family", "target", "n_points", "burn_in", "schedule", "seed"],
            optional: &["expect", "output"],
        },
        "converge" => Schema {
            required: &["family", "n_cells", "steps", "initial", "seed"],
            optional: &["expect", "output"],
        },
        "lossmem" => Schema {
            required: &["family", "n_cells", "steps", "seed"],
            optional: &["expect", "output"],
        },
        "meanfield-fixed-point" => Schema {
            required: &["base", "coupling", "deltas", "n_cells", "tol", "max_iterations", "seed"],
            optional: &["decay_probe", "expect", "output"],
        },
        "meanfield-loglaw" => Schema {
            required: &[
                "base", "coupling", "delta", "n_cells", "initial", "target", "schedule",
                "n_samples", "horizon", "seed",
            ],
            optional: &["expect", "output"],
        },
        "borel-cantelli" => Schema {
            required: &["family", "target", "rule", "n_samples", "n_holdout", "n_steps", "seed"],
            optional: &["expect", "output"],
        },
        "verify-assumptions" => Schema {
            required: &["family", "n_samples", "seed"],
            optional: &["output"],
        },
        _ => Schema {
            required: &[],
            optional: &[],
        },
    }
}

fn check_positive(v: &Value, obj_key: &str, errors: &mut Vec<String>) {
    if let Some(x) = v.as_f64() {
        if x.is_nan() || x <= 0.0 {
            errors.push(format!("{obj_key}: must be > 0, got {x}"));
        }
    }
}

/// Validate the raw JSON, collecting every violated key, then produce the
/// typed configuration.
pub fn parse_and_validate(raw: &str) -> Result<ExperimentConfig, ValidationErrors> {
    let value: Value = match serde_json::from_str(raw) {
        Ok(v) => v,
        Err(e) => return Err(ValidationErrors(vec![format!("invalid JSON: {e}")])),
    };
    let mut errors = Vec::new();
    let Some(obj) = value.as_object() else {
        return Err(ValidationErrors(vec![
            "top level must be a JSON object".into()
        ]));
    };
    let kind = match obj.get("experiment").and_then(|v| v.as_str()) {
        Some(k) if KINDS.contains(&k) => k.to_string(),
        Some(k) => {
            return Err(ValidationErrors(vec![format!(
                "experiment: unknown kind {k:?}; expected one of {KINDS:?}"
            )]))
        }
        None => {
            return Err(ValidationErrors(vec![
                "experiment: missing or not a string".into()
            ]))
        }
    };
    let schema = schema_for(&kind);
    for key in obj.keys() {
        if key != "experiment"
            && !schema.required.contains(&key.as_str())
            && !schema.optional.contains(&key.as_str())
        {
            errors.push(format!("{key}: unknown key for experiment {kind:?}"));
        }
    }
    for key in schema.required {
        if !obj.contains_key(*key) {
            errors.push(format!("{key}: missing required key"));
        }
    }
    // range checks on commonly abused numerics
    for key in ["n_samples", "horizon", "n_cells", "steps", "n_points", "burn_in", "tol", "n_steps", "n_holdout", "max_iterations"] {
        if let Some(v) = obj.get(key) {
            check_positive(v, key, &mut errors);
        }
    }
    if let Some(s) = obj.get("schedule").and_then(|v| v.as_object()) {
        for k in ["r0", "ratio", "count"] {
            if let Some(v) = s.get(k) {
                check_positive(v, &format!("schedule.{k}"), &mut errors);
            }
        }
        if let Some(r) = s.get("ratio").and_then(|v| v.as_f64()) {
            if r >= 1.0 {
                errors.push(format!("schedule.ratio: must be < 1, got {r}"));
            }
        }
    }
    if let Some(t) = obj.get("target") {
        match t.as_array().map(|a| a.len()) {
            Some(1) | Some(3) => {}
            _ => errors.push("target: must be [x] or [x, y1, y2]".into()),
        }
    }
    if kind == "loglaw" {
        let has_target = obj.contains_key("target");
        let has_cloud = obj.contains_key("targets_from_cloud");
        if has_target == has_cloud {
            errors.push("target: provide exactly one of `target` or `targets_from_cloud`".into());
        }
        if has_cloud && !obj.contains_key("dimension") {
            errors.push(
                "targets_from_cloud: requires the `dimension` block (supplies the cloud)".into(),
            );
        }
    }
    if kind == "meanfield-loglaw" || kind == "meanfield-fixed-point" {
        if let Some(c) = obj.get("coupling").and_then(|v| v.as_str()) {
            if c != "sin" {
                errors.push(format!("coupling: unsupported kernel {c:?} (only \"sin\")"));
            }
        }
        // coupling strength admissibility: delta * sup|d_x h| <= 1/2
        let delta_max = 0.5 / std::f64::consts::TAU;
        let check_delta = |d: f64, errors: &mut Vec<String>| {
            if d < 0.0 || d > delta_max {
                errors.push(format!(
                    "delta: coupling too strong; {d} outside [0, {delta_max:.6}]"
                ));
            }
        };
        if let Some(d) = obj.get("delta").and_then(|v| v.as_f64()) {
            check_delta(d, &mut errors);
        }
        if let Some(ds) = obj.get("deltas").and_then(|v| v.as_array()) {
            for d in ds.iter().filter_map(|v| v.as_f64()) {
                check_delta(d, &mut errors);
            }
        }
        if let Some(p) = obj.get("decay_probe").and_then(|v| v.as_object()) {
            if let Some(d) = p.get("delta").and_then(|v| v.as_f64()) {
                check_delta(d, &mut errors);
            }
        }
    }
    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }
    // family construction surfaces parameter errors now
    if let Some(f) = obj.get("family") {
        match serde_json::from_value::<FamilyConfig>(f.clone()) {
            Ok(fc) => {
                if let Err(e) = fc.build() {
                    errors.push(format!("family: {e}"));
                }
            }
            Err(_) => errors.push("family: malformed block".into()),
        }
        if !errors.is_empty() {
            return Err(ValidationErrors(errors));
        }
    }
    // typed parse; deny_unknown_fields backs up the manual key audit
    match serde_json::from_value::<ExperimentConfig>(value) {
        Ok(cfg) => Ok(cfg),
        Err(e) => Err(ValidationErrors(vec![format!("config shape: {e}")])),
    }
}
