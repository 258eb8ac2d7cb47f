//! Built-in scenarios with parameters defaulting to the figure setups.
//!
//! Each builtin produces a complete [`ScenarioConfig`]: derivator, a
//! compiled vector field selected by id, domain, initial states, and —
//! where the model admits one in the expression language — a Lyapunov
//! candidate with its rate/weight pair. The compiled field is the oracle
//! the expression-defined equivalents ([`dsl_equivalent`]) are tested
//! against.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::solver::VectorField;

use super::config::{
    CandidateSpec, DerivatorSpec, DomainConfig, FieldSpec, InitialSpec, JumpSpec, OutputSpec,
    PieceSpec, ScenarioConfig, StabilitySpec, SystemSpec,
};

pub const BUILTIN_IDS: [&str; 6] = [
    "linear_jumps",
    "arctan_impulse",
    "rational_decay",
    "allee_train",
    "cyanobacteria",
    "plateau_linear",
];

pub fn is_builtin(id: &str) -> bool {
    BUILTIN_IDS.contains(&id)
}

pub fn list_builtins() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "linear_jumps",
            "linear flow c*x with multiplicative impulses nu*x at integer times",
        ),
        (
            "arctan_impulse",
            "arctan contraction -t*atan(x) with impulse gains exp(2/k^2)-1",
        ),
        (
            "rational_decay",
            "rational decay -x*t/(1+t^2) with impulses nu*x at integer times",
        ),
        (
            "allee_train",
            "population with Allee threshold under hourly train culling",
        ),
        (
            "cyanobacteria",
            "biomass/ammonia culture under a day-night light derivator",
        ),
        (
            "plateau_linear",
            "linear flow c*x with g frozen for all t >= 1",
        ),
    ]
}

fn lit(v: f64) -> String {
    format!("{v:?}")
}

fn params_with_defaults(
    id: &str,
    defaults: &[(&str, f64)],
    overrides: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>> {
    let mut merged: BTreeMap<String, f64> =
        defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in overrides {
        if !merged.contains_key(k) {
            return Err(Error::config(
                format!("system.params.{k}"),
                format!(
                    "unknown parameter for builtin `{id}` (expected one of {:?})",
                    defaults.iter().map(|(k, _)| *k).collect::<Vec<_>>()
                ),
            ));
        }
        merged.insert(k.clone(), *v);
    }
    Ok(merged)
}

fn unit_jump_derivator() -> DerivatorSpec {
    DerivatorSpec {
        anchor: 0.0,
        repeat: false,
        pieces: vec![PieceSpec::Linear {
            start: 0.0,
            end: f64::INFINITY,
            slope: 1.0,
        }],
        jumps: Some(JumpSpec::Periodic {
            period: 1.0,
            offsets: vec![(0.0, 1.0)],
            start: 1.0,
        }),
    }
}

fn day_night_derivator() -> DerivatorSpec {
    let pi = std::f64::consts::PI;
    DerivatorSpec {
        anchor: 0.0,
        repeat: true,
        pieces: vec![
            PieceSpec::Smooth {
                start: 0.0,
                end: 1.0,
                value: format!("(sin({}*(t-0.5))+1)/2", lit(pi)),
                slope: format!("{}*cos({}*(t-0.5))", lit(pi / 2.0), lit(pi)),
            },
            PieceSpec::Plateau {
                start: 1.0,
                end: 2.0,
            },
        ],
        jumps: None,
    }
}

/// The full config of a builtin with default parameters.
pub fn builtin_config(id: &str) -> Result<ScenarioConfig> {
    builtin_config_with(id, &BTreeMap::new())
}

/// The full config of a builtin with overridden parameters; domain,
/// candidate and probe blocks are regenerated consistently.
pub fn builtin_config_with(
    id: &str,
    overrides: &BTreeMap<String, f64>,
) -> Result<ScenarioConfig> {
    match id {
        "linear_jumps" => {
            let p = params_with_defaults(id, &[("c", -0.4), ("nu", -0.5)], overrides)?;
            let c = p["c"];
            let nu = p["nu"];
            let candidate = CandidateSpec {
                v: "x1^2".into(),
                grad: Some(vec!["2*x1".into()]),
                partial_gt: None,
                a: "s^2".into(),
                b: Some("s^2".into()),
                // decay rate holds only for contracting parameters
                phi: (c < 0.0 && nu * (2.0 + nu) <= 0.0).then(|| "s^2".into()),
                w: (c < 0.0 && nu * (2.0 + nu) <= 0.0).then(|| FieldSpec {
                    continuous: lit(-2.0 * c),
                    jump: Some(lit(-nu * (2.0 + nu))),
                }),
            };
            Ok(ScenarioConfig {
                name: "linear_jumps".into(),
                step: 1e-3,
                derivator: unit_jump_derivator(),
                system: SystemSpec {
                    builtin: Some(id.into()),
                    params: p,
                    fields: None,
                },
                domain: DomainConfig {
                    t0: 0.0,
                    horizon: 20.0,
                    center: vec![0.0],
                    r0: 10.0,
                    r: 10.0,
                    blowup_threshold: 1e8,
                },
                initial: InitialSpec {
                    points: vec![vec![1.0], vec![-1.0], vec![0.5]],
                    ..Default::default()
                },
                candidate: Some(candidate),
                outputs: OutputSpec::default(),
                stability: StabilitySpec {
                    eps: vec![0.5],
                    t0_grid: vec![0.0, 2.0, 5.0],
                    probe_initial_horizon: 1.0,
                    probe_doublings: 10,
                    ..Default::default()
                },
            })
        }
        "arctan_impulse" => {
            let p = params_with_defaults(id, &[], overrides)?;
            Ok(ScenarioConfig {
                name: "arctan_impulse".into(),
                step: 1e-3,
                derivator: unit_jump_derivator(),
                system: SystemSpec {
                    builtin: Some(id.into()),
                    params: p,
                    fields: None,
                },
                domain: DomainConfig {
                    t0: 0.0,
                    horizon: 20.0,
                    center: vec![0.0],
                    r0: 20.0,
                    r: 10.0,
                    blowup_threshold: 1e8,
                },
                initial: InitialSpec {
                    points: vec![vec![0.5], vec![-0.5], vec![1.0], vec![-1.0]],
                    ..Default::default()
                },
                candidate: None,
                outputs: OutputSpec::default(),
                stability: StabilitySpec {
                    eps: vec![0.5],
                    t0_grid: vec![0.0],
                    ..Default::default()
                },
            })
        }
        "rational_decay" => {
            let p = params_with_defaults(id, &[("nu", -1.5)], overrides)?;
            let nu = p["nu"];
            let gain = 1.0 + nu;
            let candidate = if gain.abs() > 1e-9 {
                Some(CandidateSpec {
                    v: "x1^2".into(),
                    grad: Some(vec!["2*x1".into()]),
                    partial_gt: None,
                    a: "s^2".into(),
                    b: Some(format!("{}*s^2", lit((1.0 / (gain * gain)).max(1.0)))),
                    phi: (nu * (2.0 + nu) <= 0.0).then(|| "s^2".into()),
                    w: (nu * (2.0 + nu) <= 0.0).then(|| FieldSpec {
                        continuous: "2*t/(1+t^2)".into(),
                        jump: Some(lit(-nu * (2.0 + nu))),
                    }),
                })
            } else {
                None
            };
            Ok(ScenarioConfig {
                name: "rational_decay".into(),
                step: 1e-3,
                derivator: unit_jump_derivator(),
                system: SystemSpec {
                    builtin: Some(id.into()),
                    params: p,
                    fields: None,
                },
                domain: DomainConfig {
                    t0: 0.0,
                    horizon: 20.0,
                    center: vec![0.0],
                    r0: 2.0,
                    r: 1.5,
                    blowup_threshold: 1e8,
                },
                initial: InitialSpec {
                    points: vec![vec![1.0], vec![-1.0]],
                    ..Default::default()
                },
                candidate,
                outputs: OutputSpec::default(),
                stability: StabilitySpec {
                    eps: vec![0.25],
                    t0_grid: vec![0.0, 2.0, 5.0],
                    probe_initial_horizon: 1.0,
                    probe_doublings: 10,
                    ..Default::default()
                },
            })
        }
        "allee_train" => {
            let p = params_with_defaults(
                id,
                &[("rho", 0.001), ("k", 100.0), ("m", 50.0), ("d", 0.03)],
                overrides,
            )?;
            let (rho, k, m, d) = (p["rho"], p["k"], p["m"], p["d"]);
            let r0 = 0.96 * m.min(k);
            // weakest decay inside the r0 ball sits at x = +r0
            let w_cont = 2.0 * rho * (1.0 - r0 / k) * (1.0 - r0 / m);
            let w_jump = 2.0 * d - d * d;
            let candidate = (w_cont > 0.0 && w_jump > 0.0).then(|| CandidateSpec {
                v: "x1^2".into(),
                grad: Some(vec!["2*x1".into()]),
                partial_gt: None,
                a: "s^2".into(),
                b: Some("s^2".into()),
                phi: Some("s^2".into()),
                w: Some(FieldSpec {
                    continuous: lit(w_cont),
                    jump: Some(lit(w_jump)),
                }),
            });
            Ok(ScenarioConfig {
                name: "allee_train".into(),
                step: 1e-3,
                derivator: unit_jump_derivator(),
                system: SystemSpec {
                    builtin: Some(id.into()),
                    params: p,
                    fields: None,
                },
                domain: DomainConfig {
                    t0: 0.0,
                    horizon: 300.0,
                    center: vec![0.0],
                    r0,
                    r: r0,
                    blowup_threshold: 1e8,
                },
                initial: InitialSpec {
                    points: vec![vec![10.0], vec![30.0], vec![45.0]],
                    ..Default::default()
                },
                candidate,
                outputs: OutputSpec::default(),
                stability: StabilitySpec {
                    eps: vec![0.5],
                    t0_grid: vec![0.0, 0.5, 12.25],
                    probe_initial_horizon: 1.0,
                    probe_doublings: 13,
                    ..Default::default()
                },
            })
        }
        "cyanobacteria" => {
            let p = params_with_defaults(
                id,
                &[("rho", 1.0), ("k", 10.0), ("alpha", 0.001), ("beta", 0.01)],
                overrides,
            )?;
            let (k, alpha, beta) = (p["k"], p["alpha"], p["beta"]);
            let eq_ammonia = alpha / beta;
            let candidate = CandidateSpec {
                v: format!("(x1 - {})^2 + (x2 - {})^2", lit(k), lit(eq_ammonia)),
                grad: Some(vec![
                    format!("2*(x1 - {})", lit(k)),
                    format!("2*(x2 - {})", lit(eq_ammonia)),
                ]),
                partial_gt: None,
                a: "s^2".into(),
                b: Some("2*s^2".into()),
                phi: None,
                w: None,
            };
            Ok(ScenarioConfig {
                name: "cyanobacteria".into(),
                step: 1e-3,
                derivator: day_night_derivator(),
                system: SystemSpec {
                    builtin: Some(id.into()),
                    params: p,
                    fields: None,
                },
                domain: DomainConfig {
                    t0: 0.0,
                    horizon: 200.0,
                    center: vec![k, eq_ammonia],
                    r0: 2.0,
                    r: 2.0,
                    blowup_threshold: 1e8,
                },
                initial: InitialSpec {
                    points: vec![vec![9.5, 0.12], vec![10.5, 0.08]],
                    ..Default::default()
                },
                candidate: Some(candidate),
                outputs: OutputSpec::default(),
                stability: StabilitySpec {
                    eps: vec![0.25],
                    t0_grid: vec![0.0],
                    ..Default::default()
                },
            })
        }
        "plateau_linear" => {
            let p = params_with_defaults(id, &[("c", -2.0)], overrides)?;
            let c = p["c"];
            let candidate = CandidateSpec {
                v: "x1^2".into(),
                grad: Some(vec!["2*x1".into()]),
                partial_gt: None,
                a: "s^2".into(),
                b: Some("s^2".into()),
                phi: (c < 0.0).then(|| "s^2".into()),
                w: (c < 0.0).then(|| FieldSpec {
                    continuous: lit(-2.0 * c),
                    jump: None,
                }),
            };
            Ok(ScenarioConfig {
                name: "plateau_linear".into(),
                step: 1e-3,
                derivator: DerivatorSpec {
                    anchor: 0.0,
                    repeat: false,
                    pieces: vec![
                        PieceSpec::Linear {
                            start: 0.0,
                            end: 1.0,
                            slope: 1.0,
                        },
                        PieceSpec::Plateau {
                            start: 1.0,
                            end: f64::INFINITY,
                        },
                    ],
                    jumps: None,
                },
                system: SystemSpec {
                    builtin: Some(id.into()),
                    params: p,
                    fields: None,
                },
                domain: DomainConfig {
                    t0: 0.0,
                    horizon: 20.0,
                    center: vec![0.0],
                    r0: 2.0,
                    r: 1.0,
                    blowup_threshold: 1e8,
                },
                initial: InitialSpec {
                    points: vec![vec![0.5], vec![-0.5]],
                    ..Default::default()
                },
                candidate: Some(candidate),
                outputs: OutputSpec::default(),
                stability: StabilitySpec {
                    eps: vec![0.05],
                    t0_grid: vec![0.0],
                    probe_initial_horizon: 1.0,
                    probe_doublings: 8,
                    ..Default::default()
                },
            })
        }
        other => Err(Error::config(
            "system.builtin",
            format!("unknown builtin `{other}` (expected one of {BUILTIN_IDS:?})"),
        )),
    }
}

/// Native (closure-compiled) vector field of a builtin.
pub fn compile_builtin_field(id: &str, params: &BTreeMap<String, f64>) -> Result<VectorField> {
    match id {
        "linear_jumps" => {
            let p = params_with_defaults(id, &[("c", -0.4), ("nu", -0.5)], params)?;
            let (c, nu) = (p["c"], p["nu"]);
            Ok(VectorField::with_jump(
                1,
                move |_, x, out| out[0] = c * x[0],
                move |_, x, out| out[0] = nu * x[0],
            ))
        }
        "arctan_impulse" => {
            params_with_defaults(id, &[], params)?;
            Ok(VectorField::with_jump(
                1,
                |t, x, out| out[0] = -t * x[0].atan(),
                |t, x, out| out[0] = ((2.0 / (t * t)).exp() - 1.0) * x[0],
            ))
        }
        "rational_decay" => {
            let p = params_with_defaults(id, &[("nu", -1.5)], params)?;
            let nu = p["nu"];
            Ok(VectorField::with_jump(
                1,
                |t, x, out| out[0] = -x[0] * t / (1.0 + t * t),
                move |_, x, out| out[0] = nu * x[0],
            ))
        }
        "allee_train" => {
            let p = params_with_defaults(
                id,
                &[("rho", 0.001), ("k", 100.0), ("m", 50.0), ("d", 0.03)],
                params,
            )?;
            let (rho, k, m, d) = (p["rho"], p["k"], p["m"], p["d"]);
            Ok(VectorField::with_jump(
                1,
                move |_, x, out| out[0] = rho * x[0] * (1.0 - x[0] / k) * (x[0] / m - 1.0),
                move |_, x, out| out[0] = -d * x[0],
            ))
        }
        "cyanobacteria" => {
            let p = params_with_defaults(
                id,
                &[("rho", 1.0), ("k", 10.0), ("alpha", 0.001), ("beta", 0.01)],
                params,
            )?;
            let (rho, k, alpha, beta) = (p["rho"], p["k"], p["alpha"], p["beta"]);
            Ok(VectorField::new(2, move |_, x, out| {
                out[0] = rho * x[1] * x[0] * (1.0 - x[0] / k);
                out[1] = alpha * x[0] - beta * x[1] * x[0];
            }))
        }
        "plateau_linear" => {
            let p = params_with_defaults(id, &[("c", -2.0)], params)?;
            let c = p["c"];
            Ok(VectorField::new(1, move |_, x, out| out[0] = c * x[0]))
        }
        other => Err(Error::config(
            "system.builtin",
            format!("unknown builtin `{other}` (expected one of {BUILTIN_IDS:?})"),
        )),
    }
}

/// The expression-language restatement of a builtin field, used to test
/// the parser/evaluator against the compiled oracle.
pub fn dsl_equivalent(id: &str, params: &BTreeMap<String, f64>) -> Result<Vec<FieldSpec>> {
    match id {
        "linear_jumps" => {
            let p = params_with_defaults(id, &[("c", -0.4), ("nu", -0.5)], params)?;
            Ok(vec![FieldSpec {
                continuous: format!("{}*x1", lit(p["c"])),
                jump: Some(format!("{}*x1", lit(p["nu"]))),
            }])
        }
        "arctan_impulse" => {
            params_with_defaults(id, &[], params)?;
            Ok(vec![FieldSpec {
                continuous: "-t*atan(x1)".into(),
                jump: Some("(exp(2/(t^2)) - 1)*x1".into()),
            }])
        }
        "rational_decay" => {
            let p = params_with_defaults(id, &[("nu", -1.5)], params)?;
            Ok(vec![FieldSpec {
                continuous: "-x1*t/(1+t^2)".into(),
                jump: Some(format!("{}*x1", lit(p["nu"]))),
            }])
        }
        "allee_train" => {
            let p = params_with_defaults(
                id,
                &[("rho", 0.001), ("k", 100.0), ("m", 50.0), ("d", 0.03)],
                params,
            )?;
            Ok(vec![FieldSpec {
                continuous: format!(
                    "{}*x1*(1 - x1/{})*(x1/{} - 1)",
                    lit(p["rho"]),
                    lit(p["k"]),
                    lit(p["m"])
                ),
                jump: Some(format!("-{}*x1", lit(p["d"]))),
            }])
        }
        "cyanobacteria" => {
            let p = params_with_defaults(
                id,
                &[("rho", 1.0), ("k", 10.0), ("alpha", 0.001), ("beta", 0.01)],
                params,
            )?;
            Ok(vec![
                FieldSpec {
                    continuous: format!("{}*x2*x1*(1 - x1/{})", lit(p["rho"]), lit(p["k"])),
                    jump: None,
                },
                FieldSpec {
                    continuous: format!("{}*x1 - {}*x2*x1", lit(p["alpha"]), lit(p["beta"])),
                    jump: None,
                },
            ])
        }
        "plateau_linear" => {
            let p = params_with_defaults(id, &[("c", -2.0)], params)?;
            Ok(vec![FieldSpec {
                continuous: format!("{}*x1", lit(p["c"])),
                jump: None,
            }])
        }
        other => Err(Error::config(
            "system.builtin",
            format!("unknown builtin `{other}`"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_compiles() {
        for id in BUILTIN_IDS {
            let cfg = builtin_config(id).unwrap();
            let compiled = cfg.compile().unwrap_or_else(|e| panic!("{id}: {e}"));
            assert!(!compiled.initial_conditions.is_empty());
        }
    }

    #[test]
    fn allee_train_defaults_match_the_figure() {
        let cfg = builtin_config("allee_train").unwrap();
        let p = &cfg.system.params;
        assert_eq!(p["rho"], 0.001);
        assert_eq!(p["k"], 100.0);
        assert_eq!(p["m"], 50.0);
        assert_eq!(p["d"], 0.03);
        // hourly unit jumps
        match &cfg.derivator.jumps {
            Some(JumpSpec::Periodic {
                period,
                offsets,
                start,
            }) => {
                assert_eq!(*period, 1.0);
                assert_eq!(offsets, &vec![(0.0, 1.0)]);
                assert_eq!(*start, 1.0);
            }
            other => panic!("expected periodic jumps, got {other:?}"),
        }
    }

    #[test]
    fn cyanobacteria_defaults_match_the_figure() {
        let cfg = builtin_config("cyanobacteria").unwrap();
        let p = &cfg.system.params;
        assert_eq!(p["rho"], 1.0);
        assert_eq!(p["k"], 10.0);
        assert_eq!(p["alpha"], 0.001);
        assert_eq!(p["beta"], 0.01);
        assert_eq!(cfg.domain.center, vec![10.0, 0.1]);
    }

    #[test]
    fn rational_decay_jump_gain() {
        let cfg = builtin_config("rational_decay").unwrap();
        assert_eq!(cfg.system.params["nu"], -1.5);
        let compiled = cfg.compile().unwrap();
        // gain 1 + nu = -1/2 at each jump
        let x_plus = crate::solver::jump_map(
            &compiled.derivator,
            &compiled.field,
            1.0,
            &[1.0],
        )
        .unwrap();
        assert!((x_plus[0] - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn unknown_builtin_and_param_are_config_errors() {
        assert!(builtin_config("nope").is_err());
        let mut params = BTreeMap::new();
        params.insert("gamma".to_string(), 1.0);
        let err = builtin_config_with("allee_train", &params).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("gamma"));
    }
}
