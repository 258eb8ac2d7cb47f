//! Batch execution of a compiled scenario: one CSV per initial condition,
//! a key-value sidecar per trajectory, a run summary, and the certificate
//! report when a candidate is present.
//!
//! Trajectories run concurrently; a single collector then writes files in
//! initial-condition order, so identical configs produce byte-identical
//! artifacts. A failing trajectory is recorded in the summary and never
//! disturbs the others.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::batch;
use crate::derivator::PointClass;
use crate::error::{Error, Result};
use crate::lyapunov::{
    self, CertificateOptions, CertificateReport, ProbeOptions, ProbeTable,
};
use crate::solver::{self, SolveOptions, Termination, Trajectory};

use super::config::CompiledScenario;

/// Full-precision float formatting shared by every artifact (17
/// significant digits).
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone)]
pub enum TrajectoryOutcome {
    Completed {
        x0: Vec<f64>,
        termination: Termination,
        omega_estimate: f64,
        samples: usize,
        csv_path: PathBuf,
        meta_path: PathBuf,
    },
    Failed {
        x0: Vec<f64>,
        error: String,
    },
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub outcomes: Vec<TrajectoryOutcome>,
    pub summary_path: PathBuf,
    pub certificate: Option<CertificateReport>,
    pub certificate_error: Option<String>,
}

/// Render one trajectory as CSV. Candidate columns hold `V(t, x_left)` and
/// the total `g`-derivative; the latter is left empty at plateau-interior
/// samples where it is undefined.
pub fn render_csv(sc: &CompiledScenario, traj: &Trajectory) -> Result<String> {
    let n = sc.dimension;
    let with_candidate = sc.candidate.is_some() && sc.config.outputs.emit_candidate;
    let mut out = String::new();
    out.push('t');
    out.push_str(",g");
    for i in 1..=n {
        let _ = write!(out, ",x{i}");
    }
    for i in 1..=n {
        let _ = write!(out, ",x{i}_plus");
    }
    if with_candidate {
        out.push_str(",v,vdot_g");
    }
    out.push('\n');

    for s in &traj.samples {
        let _ = write!(out, "{},{}", fmt17(s.t), fmt17(s.g));
        for v in &s.x_left {
            let _ = write!(out, ",{}", fmt17(*v));
        }
        for v in &s.x_right {
            let _ = write!(out, ",{}", fmt17(*v));
        }
        if with_candidate {
            let cand = sc.candidate.as_ref().expect("checked above");
            let v = cand.v(s.t, &s.x_left)?;
            let _ = write!(out, ",{}", fmt17(v));
            if sc.derivator.classify(s.t)? == PointClass::PlateauInterior {
                out.push(',');
            } else {
                let vdot = lyapunov::vdot_along(&sc.derivator, &sc.field, cand, s.t, &s.x_left)?;
                let _ = write!(out, ",{}", fmt17(vdot));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn render_meta(x0: &[f64], traj: &Trajectory) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "termination = {}", traj.termination.as_str());
    let _ = writeln!(out, "omega_estimate = {}", fmt17(traj.omega_estimate));
    let _ = writeln!(out, "samples = {}", traj.samples.len());
    let x0s: Vec<String> = x0.iter().map(|v| fmt17(*v)).collect();
    let _ = writeln!(out, "x0 = {}", x0s.join(","));
    out
}

/// The `(t0, x0)` grid used by certificates: every configured starting
/// time crossed with every admissible initial condition.
pub fn certificate_grid(sc: &CompiledScenario) -> Vec<(f64, Vec<f64>)> {
    let t0s = if sc.config.stability.t0_grid.is_empty() {
        vec![sc.domain.t0]
    } else {
        sc.config.stability.t0_grid.clone()
    };
    let mut grid = Vec::new();
    for t0 in &t0s {
        if *t0 >= sc.domain.horizon {
            continue;
        }
        for x0 in &sc.initial_conditions {
            if solver::sup_dist(x0, &sc.domain.center) < sc.domain.r {
                grid.push((*t0, x0.clone()));
            }
        }
    }
    grid
}

/// Certificate options derived from the scenario's stability block.
pub fn certificate_options(sc: &CompiledScenario) -> CertificateOptions {
    CertificateOptions {
        step: sc.config.stability.cert_step.unwrap_or(sc.config.step),
        record_every: sc.config.stability.record_every.max(1),
        divergence_target: sc.config.stability.divergence_target,
        ..Default::default()
    }
}

/// Run the decay certificate — escalated to the asymptotic one when the
/// candidate carries a rate/weight pair — on the scenario's grid.
pub fn run_certificate(sc: &CompiledScenario) -> Result<Option<CertificateReport>> {
    let Some(cand) = &sc.candidate else {
        return Ok(None);
    };
    let grid = certificate_grid(sc);
    if grid.is_empty() {
        return Err(Error::config(
            "stability",
            "certificate grid is empty (check t0_grid and initial conditions)",
        ));
    }
    let opts = certificate_options(sc);
    let report = if cand.rate.is_some() && cand.weight.is_some() {
        let horizons = lyapunov::doubling_horizons(
            sc.config.stability.probe_initial_horizon,
            sc.config.stability.probe_doublings.max(2),
        );
        lyapunov::check_asymptotic_certificate(
            &sc.derivator,
            &sc.field,
            &sc.domain,
            cand,
            &grid,
            &horizons,
            &opts,
        )?
    } else {
        lyapunov::check_decay_certificate(&sc.derivator, &sc.field, &sc.domain, cand, &grid, &opts)?
    };
    Ok(Some(report))
}

/// Run the empirical `δ̂`/`σ̂` probe with the scenario's ε list and `t₀`
/// grid (either can be overridden by the caller).
pub fn run_probe(
    sc: &CompiledScenario,
    eps_override: Option<&[f64]>,
    t0_override: Option<&[f64]>,
) -> Result<Option<ProbeTable>> {
    let eps: Vec<f64> = match eps_override {
        Some(e) => e.to_vec(),
        None => sc.config.stability.eps.clone(),
    };
    if eps.is_empty() {
        return Ok(None);
    }
    let t0s: Vec<f64> = match t0_override {
        Some(t) => t.to_vec(),
        None if sc.config.stability.t0_grid.is_empty() => vec![sc.domain.t0],
        None => sc.config.stability.t0_grid.clone(),
    };
    let rays: Vec<Vec<f64>> = if sc.config.initial.rays.is_empty() {
        let mut rays = Vec::new();
        for i in 0..sc.dimension {
            for sign in [1.0, -1.0] {
                let mut r = vec![0.0; sc.dimension];
                r[i] = sign;
                rays.push(r);
            }
        }
        rays
    } else {
        sc.config.initial.rays.clone()
    };
    let table = lyapunov::empirical_stability_probe(
        &sc.derivator,
        &sc.field,
        &sc.domain,
        &eps,
        &t0s,
        &rays,
        sc.config.step,
        &ProbeOptions::default(),
    )?;
    Ok(Some(table))
}

/// Simulate every initial condition, write the artifacts, and return what
/// happened.
pub fn run_scenario(sc: &CompiledScenario, out_override: Option<&Path>) -> Result<RunArtifacts> {
    let out_dir = match out_override {
        Some(p) => p.to_path_buf(),
        None => PathBuf::from(&sc.config.outputs.dir).join(&sc.config.name),
    };
    std::fs::create_dir_all(&out_dir)?;

    let results = batch::map_ordered(&sc.initial_conditions, |_, x0| -> std::result::Result<
        (Trajectory, String, String),
        String,
    > {
        let traj = solver::solve_ivp_with(
            &sc.derivator,
            &sc.field,
            &sc.domain,
            x0,
            sc.config.step,
            &SolveOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        let csv = render_csv(sc, &traj).map_err(|e| e.to_string())?;
        let meta = render_meta(x0, &traj);
        Ok((traj, csv, meta))
    });

    let mut outcomes = Vec::with_capacity(results.len());
    for (i, res) in results.into_iter().enumerate() {
        let x0 = sc.initial_conditions[i].clone();
        match res {
            Err(error) => outcomes.push(TrajectoryOutcome::Failed { x0, error }),
            Ok((traj, csv, meta)) => {
                let stem = format!("{}_ic{i:02}", sc.config.name);
                let csv_path = out_dir.join(format!("{stem}.csv"));
                let meta_path = out_dir.join(format!("{stem}.meta"));
                std::fs::write(&csv_path, csv)?;
                std::fs::write(&meta_path, meta)?;
                outcomes.push(TrajectoryOutcome::Completed {
                    x0,
                    termination: traj.termination,
                    omega_estimate: traj.omega_estimate,
                    samples: traj.samples.len(),
                    csv_path,
                    meta_path,
                });
            }
        }
    }

    let (certificate, certificate_error) = if sc.candidate.is_some() {
        match run_certificate(sc) {
            Ok(report) => (report, None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    if let Some(report) = &certificate {
        std::fs::write(out_dir.join("certificate.txt"), report.render_table())?;
        std::fs::write(out_dir.join("certificate.kv"), report.to_key_values())?;
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "scenario = {}", sc.config.name);
    let _ = writeln!(summary, "step = {}", fmt17(sc.config.step));
    let _ = writeln!(summary, "trajectories = {}", outcomes.len());
    for (i, o) in outcomes.iter().enumerate() {
        match o {
            TrajectoryOutcome::Completed {
                x0,
                termination,
                omega_estimate,
                samples,
                csv_path,
                ..
            } => {
                let x0s: Vec<String> = x0.iter().map(|v| fmt17(*v)).collect();
                let _ = writeln!(summary, "trajectory.{i}.x0 = {}", x0s.join(","));
                let _ = writeln!(summary, "trajectory.{i}.status = completed");
                let _ = writeln!(summary, "trajectory.{i}.termination = {}", termination.as_str());
                let _ = writeln!(
                    summary,
                    "trajectory.{i}.omega_estimate = {}",
                    fmt17(*omega_estimate)
                );
                let _ = writeln!(summary, "trajectory.{i}.samples = {samples}");
                let _ = writeln!(
                    summary,
                    "trajectory.{i}.csv = {}",
                    csv_path.file_name().unwrap_or_default().to_string_lossy()
                );
            }
            TrajectoryOutcome::Failed { x0, error } => {
                let x0s: Vec<String> = x0.iter().map(|v| fmt17(*v)).collect();
                let _ = writeln!(summary, "trajectory.{i}.x0 = {}", x0s.join(","));
                let _ = writeln!(summary, "trajectory.{i}.status = failed");
                let _ = writeln!(summary, "trajectory.{i}.error = {error}");
            }
        }
    }
    match (&certificate, &certificate_error) {
        (Some(report), _) => {
            let _ = writeln!(summary, "certificate.verdict = {}", report.verdict.as_str());
        }
        (None, Some(err)) => {
            let _ = writeln!(summary, "certificate.error = {err}");
        }
        (None, None) => {}
    }
    let summary_path = out_dir.join("summary.txt");
    std::fs::write(&summary_path, summary)?;

    Ok(RunArtifacts {
        out_dir,
        outcomes,
        summary_path,
        certificate,
        certificate_error,
    })
}
