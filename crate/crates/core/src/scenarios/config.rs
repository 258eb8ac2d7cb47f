//! Declarative scenario configuration: a strict key-value tree (TOML).
//!
//! The schema rejects unknown keys so parameter typos (`rho` vs `r0`)
//! surface as load errors with a path to the offending key, not as
//! silently different dynamics. Expressions stay as strings in the config
//! and are parsed at compile time; a config therefore round-trips through
//! serialization unchanged.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::derivator::{ContinuousPiece, Derivator, JumpEvent, JumpRule};
use crate::error::{Error, Result};
use crate::exprdsl::{self, TwoBranchExpr};
use crate::gcalc::TwoBranchScalar;
use crate::lyapunov::{ClassKFn, GradMap, LyapunovCandidate, TimeStateMap};
use crate::solver::{DomainSpec, VectorField};

use super::builtins;

fn default_step() -> f64 {
    1e-3
}

fn default_blowup() -> f64 {
    1e8
}

fn default_out_dir() -> String {
    "out".to_string()
}

/// Top-level scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default = "default_step")]
    pub step: f64,
    pub derivator: DerivatorSpec,
    pub system: SystemSpec,
    pub domain: DomainConfig,
    pub initial: InitialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<CandidateSpec>,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub stability: StabilitySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivatorSpec {
    #[serde(default)]
    pub anchor: f64,
    /// Repeat the (finite) piece layout forever with period equal to its
    /// span.
    #[serde(default)]
    pub repeat: bool,
    pub pieces: Vec<PieceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jumps: Option<JumpSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PieceSpec {
    Linear { start: f64, end: f64, slope: f64 },
    Plateau { start: f64, end: f64 },
    Smooth {
        start: f64,
        end: f64,
        value: String,
        slope: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpSpec {
    /// Explicit `(time, gap)` events.
    List { events: Vec<(f64, f64)> },
    /// `(offset, gap)` trains `start + offset + k·period`, `k ≥ 0`.
    Periodic {
        period: f64,
        offsets: Vec<(f64, f64)>,
        #[serde(default)]
        start: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    /// Built-in system id (see `list_builtins`); mutually exclusive with
    /// `fields`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// Parameter overrides for the built-in.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    /// Expression-defined right-hand side, one two-branch entry per
    /// component.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<FieldSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub continuous: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub t0: f64,
    pub horizon: f64,
    pub center: Vec<f64>,
    pub r0: f64,
    pub r: f64,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSpec {
    /// Explicit initial states.
    pub points: Vec<Vec<f64>>,
    /// Radial grid: every `center + radius·ray` combination is added.
    pub radii: Vec<f64>,
    pub rays: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSpec {
    /// `V(t, x1..xn)`.
    pub v: String,
    /// State gradient, one expression per component; omitted means the
    /// central finite-difference fallback (flagged in reports).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad: Option<Vec<String>>,
    /// Partial `g`-derivative of `V` in `t`: continuous branch off `D_g`,
    /// jump-quotient branch on it. Omitted means the zero map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial_gt: Option<FieldSpec>,
    /// Lower class-K envelope `a(s)` over the radius variable `s`.
    pub a: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<FieldSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: String,
    /// Append `v` and `vdot_g` columns when a candidate is present.
    pub emit_candidate: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_out_dir(),
            emit_candidate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySpec {
    /// ε values for the empirical probe.
    pub eps: Vec<f64>,
    /// Starting times for certificates and probes (defaults to `[t0]`).
    pub t0_grid: Vec<f64>,
    /// First horizon of the condition-(d) doubling schedule.
    pub probe_initial_horizon: f64,
    /// Number of doublings in the schedule.
    pub probe_doublings: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence_target: Option<f64>,
    /// Solver step for certificate trajectories (defaults to `step`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cert_step: Option<f64>,
    /// Interior-sample thinning for certificate trajectories.
    pub record_every: usize,
}

impl Default for StabilitySpec {
    fn default() -> Self {
        StabilitySpec {
            eps: Vec::new(),
            t0_grid: Vec::new(),
            probe_initial_horizon: 1.0,
            probe_doublings: 12,
            divergence_target: None,
            cert_step: None,
            record_every: 1,
        }
    }
}

fn default_stability() -> StabilitySpec {
    StabilitySpec::default()
}

// keep clippy quiet about the unused helper when defaults change
const _: fn() -> StabilitySpec = default_stability;

/// A config with everything parsed, validated and compiled.
#[derive(Debug, Clone)]
pub struct CompiledScenario {
    pub config: ScenarioConfig,
    pub dimension: usize,
    pub derivator: Derivator,
    pub field: VectorField,
    pub domain: DomainSpec,
    pub initial_conditions: Vec<Vec<f64>>,
    pub candidate: Option<LyapunovCandidate>,
}

impl ScenarioConfig {
    /// Parse a strict TOML scenario file.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("scenario", e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config("scenario", e.to_string()))
    }

    /// Validate and compile every part.
    pub fn compile(&self) -> Result<CompiledScenario> {
        let derivator = compile_derivator(&self.derivator)?;
        let (field, dimension) = compile_system(&self.system)?;

        if self.config_dimension_mismatch(dimension) {
            return Err(Error::config(
                "domain.center",
                format!(
                    "dimension mismatch: system has dimension {dimension}, center has {}",
                    self.domain.center.len()
                ),
            ));
        }
        if !(self.step > 0.0) {
            return Err(Error::config("step", "step must be > 0"));
        }
        let domain = DomainSpec::new(
            self.domain.t0,
            self.domain.horizon,
            self.domain.center.clone(),
            self.domain.r0,
            self.domain.r,
        )
        .map_err(|e| Error::config("domain", e.to_string()))?
        .with_blowup_threshold(self.domain.blowup_threshold);

        let mut initial_conditions = Vec::new();
        for (i, p) in self.initial.points.iter().enumerate() {
            if p.len() != dimension {
                return Err(Error::config(
                    format!("initial.points[{i}]"),
                    format!("expected dimension {dimension}, got {}", p.len()),
                ));
            }
            initial_conditions.push(p.clone());
        }
        for (j, ray) in self.initial.rays.iter().enumerate() {
            if ray.len() != dimension {
                return Err(Error::config(
                    format!("initial.rays[{j}]"),
                    format!("expected dimension {dimension}, got {}", ray.len()),
                ));
            }
            for radius in &self.initial.radii {
                initial_conditions.push(
                    domain
                        .center
                        .iter()
                        .zip(ray)
                        .map(|(c, r)| c + radius * r)
                        .collect(),
                );
            }
        }
        if initial_conditions.is_empty() {
            return Err(Error::config(
                "initial",
                "no initial conditions: provide points or radii plus rays",
            ));
        }

        let candidate = match &self.candidate {
            Some(spec) => Some(compile_candidate(spec, dimension, &derivator)?),
            None => None,
        };

        Ok(CompiledScenario {
            config: self.clone(),
            dimension,
            derivator,
            field,
            domain,
            initial_conditions,
            candidate,
        })
    }

    fn config_dimension_mismatch(&self, dimension: usize) -> bool {
        self.domain.center.len() != dimension
    }
}

/// Load a scenario from a builtin id or a TOML file path.
pub fn load_scenario(id_or_path: &str) -> Result<ScenarioConfig> {
    if builtins::is_builtin(id_or_path) {
        return builtins::builtin_config(id_or_path);
    }
    let path = Path::new(id_or_path);
    if !path.exists() {
        return Err(Error::config(
            "scenario",
            format!("`{id_or_path}` is neither a builtin id nor an existing file"),
        ));
    }
    let text = std::fs::read_to_string(path)?;
    let mut cfg = ScenarioConfig::from_toml(&text)?;
    // a bare derivator file is also accepted by the integral subcommands;
    // here the full schema is required, so this is just a better message
    if cfg.name.is_empty() {
        cfg.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".to_string());
    }
    Ok(cfg)
}

/// Parse only a derivator from a TOML file that is either a full scenario
/// or a bare `[derivator]` table (used by the `integrate`/`gexp`
/// subcommands).
pub fn load_derivator(id_or_path: &str) -> Result<Derivator> {
    if builtins::is_builtin(id_or_path) {
        return compile_derivator(&builtins::builtin_config(id_or_path)?.derivator);
    }
    #[derive(Deserialize)]
    struct DerivatorOnly {
        derivator: DerivatorSpec,
    }
    let text = std::fs::read_to_string(id_or_path)?;
    if let Ok(cfg) = ScenarioConfig::from_toml(&text) {
        return compile_derivator(&cfg.derivator);
    }
    let only: DerivatorOnly =
        toml::from_str(&text).map_err(|e| Error::config("derivator", e.to_string()))?;
    compile_derivator(&only.derivator)
}

pub fn compile_derivator(spec: &DerivatorSpec) -> Result<Derivator> {
    let mut pieces = Vec::with_capacity(spec.pieces.len());
    for (i, p) in spec.pieces.iter().enumerate() {
        let piece = match p {
            PieceSpec::Linear { start, end, slope } => {
                ContinuousPiece::linear(*start, *end, *slope)
            }
            PieceSpec::Plateau { start, end } => ContinuousPiece::plateau(*start, *end),
            PieceSpec::Smooth {
                start,
                end,
                value,
                slope,
            } => {
                let value = exprdsl::parse_univariate(value, "t").map_err(|e| {
                    Error::config(format!("derivator.pieces[{i}].value"), e.to_string())
                })?;
                let slope = exprdsl::parse_univariate(slope, "t").map_err(|e| {
                    Error::config(format!("derivator.pieces[{i}].slope"), e.to_string())
                })?;
                ContinuousPiece::smooth(*start, *end, value, slope)
            }
        };
        pieces.push(piece);
    }
    let jumps = match &spec.jumps {
        None => JumpRule::none(),
        Some(JumpSpec::List { events }) => JumpRule::List(
            events
                .iter()
                .map(|(time, gap)| JumpEvent {
                    time: *time,
                    gap: *gap,
                })
                .collect(),
        ),
        Some(JumpSpec::Periodic {
            period,
            offsets,
            start,
        }) => JumpRule::Periodic {
            period: *period,
            offsets: offsets.clone(),
            start: *start,
        },
    };
    let build = if spec.repeat {
        Derivator::with_repeat(pieces, jumps, spec.anchor)
    } else {
        Derivator::new(pieces, jumps, spec.anchor)
    };
    build.map_err(|e| Error::config("derivator", e.to_string()))
}

fn compile_system(spec: &SystemSpec) -> Result<(VectorField, usize)> {
    match (&spec.builtin, &spec.fields) {
        (Some(_), Some(_)) => Err(Error::config(
            "system",
            "specify either `builtin` or `fields`, not both",
        )),
        (None, None) => Err(Error::config(
            "system",
            "specify a `builtin` id or expression `fields`",
        )),
        (Some(id), None) => {
            let field = builtins::compile_builtin_field(id, &spec.params)?;
            let dim = field.dimension();
            Ok((field, dim))
        }
        (None, Some(fields)) => {
            if !spec.params.is_empty() {
                return Err(Error::config(
                    "system.params",
                    "params apply only to builtin systems",
                ));
            }
            let dim = fields.len();
            let mut exprs = Vec::with_capacity(dim);
            for (i, f) in fields.iter().enumerate() {
                exprs.push(compile_field_spec(f, dim, &format!("system.fields[{i}]"))?);
            }
            let field = VectorField::from_exprs(&exprs)
                .map_err(|e| Error::config("system.fields", e.to_string()))?;
            Ok((field, dim))
        }
    }
}

pub fn compile_field_spec(spec: &FieldSpec, dim: usize, path: &str) -> Result<TwoBranchExpr> {
    let continuous = exprdsl::parse(&spec.continuous, dim)
        .map_err(|e| Error::config(format!("{path}.continuous"), e.to_string()))?;
    let jump = match &spec.jump {
        Some(j) => Some(
            exprdsl::parse(j, dim)
                .map_err(|e| Error::config(format!("{path}.jump"), e.to_string()))?,
        ),
        None => None,
    };
    Ok(TwoBranchExpr { continuous, jump })
}

fn compile_candidate(
    spec: &CandidateSpec,
    dim: usize,
    derivator: &Derivator,
) -> Result<LyapunovCandidate> {
    let v_expr = exprdsl::parse(&spec.v, dim)
        .map_err(|e| Error::config("candidate.v", e.to_string()))?;
    let v: TimeStateMap = {
        let v_expr = v_expr.clone();
        Arc::new(move |t, x: &[f64]| Ok(exprdsl::eval(&v_expr, t, x)?))
    };

    let grad = match &spec.grad {
        None => None,
        Some(entries) => {
            if entries.len() != dim {
                return Err(Error::config(
                    "candidate.grad",
                    format!("expected {dim} gradient components, got {}", entries.len()),
                ));
            }
            let mut parsed = Vec::with_capacity(dim);
            for (i, g) in entries.iter().enumerate() {
                parsed.push(
                    exprdsl::parse(g, dim)
                        .map_err(|e| Error::config(format!("candidate.grad[{i}]"), e.to_string()))?,
                );
            }
            let grad_fn: GradMap = Arc::new(move |t, x: &[f64], out: &mut [f64]| {
                for (o, e) in out.iter_mut().zip(&parsed) {
                    *o = exprdsl::eval(e, t, x)?;
                }
                Ok(())
            });
            Some(grad_fn)
        }
    };

    let partial_gt = match &spec.partial_gt {
        None => None,
        Some(p) => {
            let two = compile_field_spec(p, dim, "candidate.partial_gt")?;
            let d = derivator.clone();
            let cont = two.continuous.clone();
            let jump = two.jump_branch().clone();
            let f: TimeStateMap = Arc::new(move |t, x: &[f64]| {
                let e = if d.jump_at(t)? > 0.0 { &jump } else { &cont };
                Ok(exprdsl::eval(e, t, x)?)
            });
            Some(f)
        }
    };

    let a = exprdsl::parse_univariate(&spec.a, "s")
        .map_err(|e| Error::config("candidate.a", e.to_string()))?;
    let mut cand = LyapunovCandidate::from_parts(v, grad, partial_gt, ClassKFn::from_expr(&a));

    if let Some(b) = &spec.b {
        let b = exprdsl::parse_univariate(b, "s")
            .map_err(|e| Error::config("candidate.b", e.to_string()))?;
        cand = cand.with_upper_env(ClassKFn::from_expr(&b));
    }
    match (&spec.phi, &spec.w) {
        (Some(phi), Some(w)) => {
            let phi = exprdsl::parse_univariate(phi, "s")
                .map_err(|e| Error::config("candidate.phi", e.to_string()))?;
            let w_cont = exprdsl::parse(&w.continuous, 0)
                .map_err(|e| Error::config("candidate.w.continuous", e.to_string()))?;
            let w_jump = match &w.jump {
                Some(j) => Some(
                    exprdsl::parse(j, 0)
                        .map_err(|e| Error::config("candidate.w.jump", e.to_string()))?,
                ),
                None => None,
            };
            let weight = TwoBranchScalar::from_expr(&TwoBranchExpr {
                continuous: w_cont,
                jump: w_jump,
            });
            cand = cand.with_rate_weight(ClassKFn::from_expr(&phi), weight);
        }
        (None, None) => {}
        _ => {
            return Err(Error::config(
                "candidate",
                "phi and w must be supplied together",
            ));
        }
    }
    Ok(cand)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "demo"

[derivator]
[[derivator.pieces]]
kind = "linear"
start = 0.0
end = inf
slope = 1.0

[derivator.jumps]
kind = "periodic"
period = 1.0
offsets = [[0.0, 1.0]]
start = 1.0

[system]
fields = [{ continuous = "-0.4*x1", jump = "-0.5*x1" }]

[domain]
t0 = 0.0
horizon = 5.0
center = [0.0]
r0 = 10.0
r = 10.0

[initial]
points = [[1.0]]
"#;

    #[test]
    fn minimal_scenario_parses_and_compiles() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.step, 1e-3);
        let compiled = cfg.compile().unwrap();
        assert_eq!(compiled.dimension, 1);
        assert_eq!(compiled.initial_conditions, vec![vec![1.0]]);
        assert_eq!(compiled.derivator.eval(2.5).unwrap(), 4.5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("horizon = 5.0", "horizon = 5.0\nrho = 0.1");
        let err = ScenarioConfig::from_toml(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("rho"), "error should name the bad key: {msg}");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let bad = MINIMAL.replace("center = [0.0]", "center = [0.0, 0.0]");
        let cfg = ScenarioConfig::from_toml(&bad).unwrap();
        let err = cfg.compile().unwrap_err();
        assert!(err.to_string().contains("dimension"));
        assert!(err.is_config());
    }

    #[test]
    fn radial_initial_grid_expands() {
        let with_rays = MINIMAL.replace(
            "points = [[1.0]]",
            "points = [[1.0]]\nradii = [0.5, 0.25]\nrays = [[1.0], [-1.0]]",
        );
        let cfg = ScenarioConfig::from_toml(&with_rays).unwrap();
        let compiled = cfg.compile().unwrap();
        assert_eq!(compiled.initial_conditions.len(), 5);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        let text = cfg.to_toml().unwrap();
        let again = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, again);
    }
}
