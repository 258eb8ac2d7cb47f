//! Lyapunov candidates, their total `g`-derivative along trajectories, and
//! sampled certificate checks for the four stability verdicts.
//!
//! Off `D_g` (and away from plateau interiors, where `μ_g` carries no mass)
//! the total `g`-derivative of a candidate `V` along the system is
//!
//! ```text
//! V′_g(t, x) = ∂V/∂_g t (t, x) + Σᵢ ∂V/∂xᵢ (t, x) · fᵢ(t, x),
//! ```
//!
//! while at a jump it is the quotient
//! `[V(t⁺, x + μ_g({t})·f_jump(t, x)) − V(t, x)] / μ_g({t})`, with the
//! right-limit value reconstructed from the candidate's partial
//! `g`-derivative: `V(t⁺, u) = V(t, u) + μ_g({t})·∂V/∂_g t(t, u)`.
//!
//! Certificates are verified on sampled evidence: rectangular `(t, u)`
//! grids for the class-K sandwich, dense samples along simulated
//! trajectories for the derivative conditions, and finite-horizon growth
//! probes of `∫ w dμ_g` for the divergence condition. A passing report
//! certifies the sampled evidence; it is never a proof. Grid trajectories
//! fan out one task each and reduce in grid order, so reports are
//! bit-reproducible regardless of parallelism.

use std::sync::Arc;

use crate::batch;
use crate::derivator::{Derivator, PointClass};
use crate::error::{Error, Result};
use crate::exprdsl::{self, Expr};
use crate::gcalc::{self, QuadratureOptions, TwoBranchScalar};
use crate::solver::{
    self, sup_dist, DomainSpec, SolveOptions, Termination, VectorField,
};

pub type ScalarMap = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;
pub type TimeStateMap = Arc<dyn Fn(f64, &[f64]) -> Result<f64> + Send + Sync>;
pub type GradMap = Arc<dyn Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync>;

/// A comparison function `ℝ⁺ → ℝ⁺` used as envelope (`a`, `b`) or decay
/// rate (`φ`). Validation is sampled: zero at zero, nonnegative, strictly
/// increasing on the grid, and a refinement probe for continuity.
#[derive(Clone)]
pub struct ClassKFn {
    f: ScalarMap,
}

impl ClassKFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ClassKFn {
            f: Arc::new(move |s| Ok(f(s))),
        }
    }

    pub fn from_fallible(f: ScalarMap) -> Self {
        ClassKFn { f }
    }

    /// Compile a univariate expression over the radius variable.
    pub fn from_expr(e: &Expr) -> Self {
        let e = e.clone();
        ClassKFn {
            f: Arc::new(move |s| Ok(exprdsl::eval_univariate(&e, s)?)),
        }
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        (self.f)(s)
    }

    /// Sampled class-K validation on `[0, r_max]`.
    pub fn validate_class_k(&self, r_max: f64, points: usize) -> Result<()> {
        let v0 = self.eval(0.0)?;
        if v0.abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "class-K validation: value at 0 is {v0}, expected 0"
            )));
        }
        let n = points.max(8);
        let sample = |count: usize| -> Result<Vec<f64>> {
            (0..=count)
                .map(|i| self.eval(r_max * i as f64 / count as f64))
                .collect()
        };
        let coarse = sample(n)?;
        for (i, v) in coarse.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "class-K validation: negative or non-finite value {v} at s = {}",
                    r_max * i as f64 / n as f64
                )));
            }
            if i > 0 && !(coarse[i] > coarse[i - 1]) {
                return Err(Error::InvalidArgument(format!(
                    "class-K validation: sampled decrease near s = {}",
                    r_max * i as f64 / n as f64
                )));
            }
        }
        // continuity probe: the largest adjacent increment must shrink
        // under grid refinement
        let fine = sample(2 * n)?;
        let max_diff = |v: &[f64]| {
            v.windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .fold(0.0, f64::max)
        };
        let coarse_d = max_diff(&coarse);
        let fine_d = max_diff(&fine);
        if fine_d > 0.75 * coarse_d + 1e-12 * (1.0 + coarse_d) {
            return Err(Error::InvalidArgument(
                "class-K validation: refinement probe suggests a discontinuity".into(),
            ));
        }
        Ok(())
    }

    /// Positive definiteness only: zero at zero, strictly positive away
    /// from it (what the decay rate `φ` needs).
    pub fn validate_positive_definite(&self, r_max: f64, points: usize) -> Result<()> {
        let v0 = self.eval(0.0)?;
        if v0.abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "rate validation: value at 0 is {v0}, expected 0"
            )));
        }
        let n = points.max(8);
        for i in 1..=n {
            let s = r_max * i as f64 / n as f64;
            let v = self.eval(s)?;
            if !v.is_finite() || !(v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "rate validation: non-positive value {v} at s = {s}"
                )));
            }
        }
        Ok(())
    }

    /// `inf` over `[lo, hi)` by grid minimization.
    pub fn grid_inf(&self, lo: f64, hi: f64, points: usize) -> Result<f64> {
        let mut m = f64::INFINITY;
        let n = points.max(2);
        for i in 0..n {
            let s = lo + (hi - lo) * i as f64 / n as f64;
            m = m.min(self.eval(s)?.abs());
        }
        Ok(m)
    }
}

impl std::fmt::Debug for ClassKFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ClassKFn")
    }
}

/// A Lyapunov candidate: `V`, its state gradient, its partial
/// `g`-derivative in time (zero map by default; candidates with genuinely
/// time-dependent `V` must supply it, including its jump quotient), the
/// class-K envelopes, and the optional decay rate/weight pair.
#[derive(Clone)]
pub struct LyapunovCandidate {
    v: TimeStateMap,
    grad_x: GradMap,
    grad_is_fd: bool,
    partial_gt: Option<TimeStateMap>,
    pub lower_env: ClassKFn,
    pub upper_env: Option<ClassKFn>,
    pub rate: Option<ClassKFn>,
    pub weight: Option<TwoBranchScalar>,
}

const FD_GRAD_STEP: f64 = 1e-6;

impl LyapunovCandidate {
    pub fn new(
        v: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        grad_x: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        lower_env: ClassKFn,
    ) -> Self {
        LyapunovCandidate {
            v: Arc::new(move |t, x| Ok(v(t, x))),
            grad_x: Arc::new(move |t, x, out| {
                grad_x(t, x, out);
                Ok(())
            }),
            grad_is_fd: false,
            partial_gt: None,
            lower_env,
            upper_env: None,
            rate: None,
            weight: None,
        }
    }

    pub fn from_parts(
        v: TimeStateMap,
        grad_x: Option<GradMap>,
        partial_gt: Option<TimeStateMap>,
        lower_env: ClassKFn,
    ) -> Self {
        let grad_is_fd = grad_x.is_none();
        let grad = grad_x.unwrap_or_else(|| fd_gradient(v.clone()));
        LyapunovCandidate {
            v,
            grad_x: grad,
            grad_is_fd,
            partial_gt,
            lower_env,
            upper_env: None,
            rate: None,
            weight: None,
        }
    }

    pub fn with_partial_gt(
        mut self,
        p: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.partial_gt = Some(Arc::new(move |t, x| Ok(p(t, x))));
        self
    }

    pub fn with_upper_env(mut self, b: ClassKFn) -> Self {
        self.upper_env = Some(b);
        self
    }

    pub fn with_rate_weight(mut self, phi: ClassKFn, w: TwoBranchScalar) -> Self {
        self.rate = Some(phi);
        self.weight = Some(w);
        self
    }

    pub fn v(&self, t: f64, x: &[f64]) -> Result<f64> {
        (self.v)(t, x)
    }

    pub fn grad(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.grad_x)(t, x, out)
    }

    pub fn partial_gt(&self, t: f64, x: &[f64]) -> Result<f64> {
        match &self.partial_gt {
            Some(p) => p(t, x),
            None => Ok(0.0),
        }
    }

    /// `V(t⁺, x)`, reconstructed from the jump quotient of the partial
    /// `g`-derivative: `V(t⁺, x) = V(t, x) + μ_g({t})·∂V/∂_g t(t, x)`.
    pub fn v_right(&self, t: f64, gap: f64, x: &[f64]) -> Result<f64> {
        Ok(self.v(t, x)? + gap * self.partial_gt(t, x)?)
    }

    /// Whether the state gradient is the central finite-difference
    /// fallback rather than an analytic map (flagged in reports).
    pub fn uses_fd_gradient(&self) -> bool {
        self.grad_is_fd
    }
}

impl std::fmt::Debug for LyapunovCandidate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LyapunovCandidate")
            .field("gradient", &if self.grad_is_fd { "finite-difference" } else { "analytic" })
            .field("has_partial_gt", &self.partial_gt.is_some())
            .field("has_upper_env", &self.upper_env.is_some())
            .field("has_rate_weight", &self.rate.is_some())
            .finish()
    }
}

fn fd_gradient(v: TimeStateMap) -> GradMap {
    Arc::new(move |t, x, out| {
        let mut work = x.to_vec();
        for i in 0..x.len() {
            let h = FD_GRAD_STEP * (1.0 + x[i].abs());
            work[i] = x[i] + h;
            let vp = v(t, &work)?;
            work[i] = x[i] - h;
            let vm = v(t, &work)?;
            work[i] = x[i];
            out[i] = (vp - vm) / (2.0 * h);
        }
        Ok(())
    })
}

/// Total `g`-derivative of the candidate along the system at `(t, x)`.
///
/// Plateau interiors are rejected: `μ_g` carries no mass there and the
/// quotient is undefined.
pub fn vdot_along(
    d: &Derivator,
    f: &VectorField,
    cand: &LyapunovCandidate,
    t: f64,
    x: &[f64],
) -> Result<f64> {
    match d.classify(t)? {
        PointClass::PlateauInterior => Err(Error::InvalidArgument(format!(
            "total g-derivative is undefined at plateau interior t = {t}"
        ))),
        PointClass::JumpPoint => {
            let gap = d.jump_at(t)?;
            let x_plus = solver::jump_map(d, f, t, x)?;
            let v_plus = cand.v_right(t, gap, &x_plus)?;
            Ok((v_plus - cand.v(t, x)?) / gap)
        }
        PointClass::ContinuityPoint | PointClass::PlateauEndpoint => {
            let n = x.len();
            let mut grad = vec![0.0; n];
            let mut fx = vec![0.0; n];
            cand.grad(t, x, &mut grad)?;
            f.eval_continuous(t, x, &mut fx)?;
            let drift: f64 = grad.iter().zip(&fx).map(|(g, v)| g * v).sum();
            Ok(cand.partial_gt(t, x)? + drift)
        }
    }
}

/// Stability verdicts, ordered by strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Inconclusive,
    Stable,
    UniformlyStable,
    AsymptoticallyStable,
    UniformlyAsymptoticallyStable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Inconclusive => "Inconclusive",
            Verdict::Stable => "Stable",
            Verdict::UniformlyStable => "UniformlyStable",
            Verdict::AsymptoticallyStable => "AsymptoticallyStable",
            Verdict::UniformlyAsymptoticallyStable => "UniformlyAsymptoticallyStable",
        }
    }
}

/// Outcome of one checked condition. `worst_margin` is `lhs − rhs` of the
/// condition's inequality at its worst sampled point, so values `≤ tol`
/// pass and negative values show slack.
#[derive(Debug, Clone)]
pub struct ConditionCheck {
    pub id: &'static str,
    pub passed: bool,
    pub worst_margin: f64,
    pub witness: Option<(f64, Vec<f64>)>,
}

/// Grids and modes used to produce the evidence.
#[derive(Debug, Clone, Default)]
pub struct SamplingMeta {
    pub trajectories: usize,
    pub samples_checked: usize,
    pub sandwich_time_points: usize,
    pub sandwich_state_points: usize,
    pub gradient_mode: &'static str,
    pub notes: Vec<String>,
}

/// A certificate verdict plus the condition-by-condition evidence. The
/// verdict always states "certified on sampled evidence"; it is not a
/// proof.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub verdict: Verdict,
    pub checked_conditions: Vec<ConditionCheck>,
    pub sampling_meta: SamplingMeta,
}

impl CertificateReport {
    pub fn condition(&self, id: &str) -> Option<&ConditionCheck> {
        self.checked_conditions.iter().find(|c| c.id == id)
    }

    fn passed(&self, id: &str) -> bool {
        self.condition(id).is_some_and(|c| c.passed)
    }

    /// Human-readable table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "verdict: {} (certified on sampled evidence)\n",
            self.verdict.as_str()
        ));
        out.push_str(&format!(
            "{:<24} {:<6} {:>14}  witness\n",
            "condition", "pass", "worst margin"
        ));
        for c in &self.checked_conditions {
            let witness = match &c.witness {
                Some((t, x)) => format!("t = {t:.6}, x = {x:?}"),
                None => "-".to_string(),
            };
            out.push_str(&format!(
                "{:<24} {:<6} {:>14.6e}  {}\n",
                c.id,
                if c.passed { "yes" } else { "NO" },
                c.worst_margin,
                witness
            ));
        }
        out.push_str(&format!(
            "evidence: {} trajectories, {} samples, sandwich grid {}x{}, gradient {}\n",
            self.sampling_meta.trajectories,
            self.sampling_meta.samples_checked,
            self.sampling_meta.sandwich_time_points,
            self.sampling_meta.sandwich_state_points,
            self.sampling_meta.gradient_mode
        ));
        for n in &self.sampling_meta.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }

    /// Machine-readable key-value form.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("verdict = {}\n", self.verdict.as_str()));
        for c in &self.checked_conditions {
            out.push_str(&format!("condition.{}.passed = {}\n", c.id, c.passed));
            out.push_str(&format!(
                "condition.{}.worst_margin = {:.17e}\n",
                c.id, c.worst_margin
            ));
            if let Some((t, x)) = &c.witness {
                out.push_str(&format!("condition.{}.witness_t = {t:.17e}\n", c.id));
                let xs: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
                out.push_str(&format!(
                    "condition.{}.witness_x = {}\n",
                    c.id,
                    xs.join(",")
                ));
            }
        }
        out.push_str(&format!(
            "meta.trajectories = {}\n",
            self.sampling_meta.trajectories
        ));
        out.push_str(&format!(
            "meta.samples_checked = {}\n",
            self.sampling_meta.samples_checked
        ));
        out.push_str(&format!(
            "meta.gradient_mode = {}\n",
            self.sampling_meta.gradient_mode
        ));
        out
    }
}

/// Inequality slack: absolute 1e−9 plus relative 1e−6 against the scale of
/// the compared quantity.
pub fn ineq_tol(scale: f64) -> f64 {
    1e-9 + 1e-6 * scale.abs()
}

/// Knobs for the certificate checks.
#[derive(Debug, Clone)]
pub struct CertificateOptions {
    /// Solver step for grid trajectories.
    pub step: f64,
    /// Interior-sample thinning for grid trajectories (jumps always kept).
    pub record_every: usize,
    pub sandwich_time_points: usize,
    pub sandwich_radii: usize,
    pub quad: QuadratureOptions,
    /// Divergence target for the condition-(d) probes; `None` derives
    /// `10·max V(t₀,x₀) / inf φ` from the trajectory grid.
    pub divergence_target: Option<f64>,
    /// Extend the uniform probe's `t₀` grid with horizon-scaled points
    /// `{T, 2T, 4T}`; a fixed grid cannot see the infimum stalling.
    pub probe_scaled_t0: bool,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions {
            step: 1e-3,
            record_every: 1,
            sandwich_time_points: 25,
            sandwich_radii: 40,
            quad: QuadratureOptions::default(),
            divergence_target: None,
            probe_scaled_t0: true,
        }
    }
}

struct TrajectoryEvidence {
    vdot_worst: f64,
    vdot_witness: Option<(f64, Vec<f64>)>,
    rate_worst: f64,
    rate_witness: Option<(f64, Vec<f64>)>,
    samples: usize,
    exited: Option<(Termination, f64)>,
}

fn sandwich_directions(dim: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[i] = sign;
            dirs.push(d);
        }
    }
    if dim > 1 {
        dirs.push(vec![1.0; dim]);
        dirs.push(vec![-1.0; dim]);
    }
    dirs
}

fn run_trajectory_checks(
    d: &Derivator,
    f: &VectorField,
    dom: &DomainSpec,
    cand: &LyapunovCandidate,
    traj_grid: &[(f64, Vec<f64>)],
    opts: &CertificateOptions,
    with_rate: bool,
) -> Result<Vec<TrajectoryEvidence>> {
    let solve_opts = SolveOptions {
        record_every: opts.record_every,
    };
    let results = batch::map_ordered(traj_grid, |_, (t0, x0)| -> Result<TrajectoryEvidence> {
        let mut dom_k = dom.clone();
        dom_k.t0 = *t0;
        let traj = solver::solve_ivp_with(d, f, &dom_k, x0, opts.step, &solve_opts)?;
        let mut ev = TrajectoryEvidence {
            vdot_worst: f64::NEG_INFINITY,
            vdot_witness: None,
            rate_worst: f64::NEG_INFINITY,
            rate_witness: None,
            samples: 0,
            exited: match traj.termination {
                Termination::Horizon => None,
                other => Some((other, traj.omega_estimate)),
            },
        };
        for s in &traj.samples {
            if d.classify(s.t)? == PointClass::PlateauInterior {
                continue;
            }
            let vdot = vdot_along(d, f, cand, s.t, &s.x_left)?;
            ev.samples += 1;
            let margin = vdot; // against the rhs 0
            if margin > ev.vdot_worst {
                ev.vdot_worst = margin;
                ev.vdot_witness = Some((s.t, s.x_left.clone()));
            }
            if with_rate {
                let w = cand.weight.as_ref().expect("rate checks need a weight");
                let phi = cand.rate.as_ref().expect("rate checks need a rate");
                let is_jump = d.jump_at(s.t)? > 0.0;
                let wv = if is_jump {
                    w.eval_jump(s.t)?
                } else {
                    w.eval_continuous(s.t)?
                };
                let rhs = -wv * phi.eval(sup_dist(&s.x_left, &dom.center))?;
                let margin = vdot - rhs - ineq_tol(rhs);
                if margin > ev.rate_worst {
                    ev.rate_worst = margin;
                    ev.rate_witness = Some((s.t, s.x_left.clone()));
                }
            }
        }
        Ok(ev)
    });
    results.into_iter().collect()
}

/// Check the sandwich `a(‖u − center‖) ≤ V(t, u) ≤ b(‖u − center‖)` and
/// `V′_g ≤ 0` along every grid trajectory.
///
/// Verdict: `Stable` when the lower envelope and derivative conditions
/// pass, escalating to `UniformlyStable` when an upper envelope is present
/// and passes.
pub fn check_decay_certificate(
    d: &Derivator,
    f: &VectorField,
    dom: &DomainSpec,
    cand: &LyapunovCandidate,
    traj_grid: &[(f64, Vec<f64>)],
    opts: &CertificateOptions,
) -> Result<CertificateReport> {
    let mut conditions = Vec::new();
    let mut meta = SamplingMeta {
        gradient_mode: if cand.uses_fd_gradient() {
            "finite-difference"
        } else {
            "analytic"
        },
        ..Default::default()
    };

    // class-K validations
    let classk_lower = cand.lower_env.validate_class_k(dom.r0, 1000);
    conditions.push(ConditionCheck {
        id: "classk_lower_env",
        passed: classk_lower.is_ok(),
        worst_margin: 0.0,
        witness: None,
    });
    if let Err(e) = &classk_lower {
        meta.notes.push(format!("lower envelope: {e}"));
    }
    if let Some(b) = &cand.upper_env {
        let ok = b.validate_class_k(dom.r0, 1000);
        conditions.push(ConditionCheck {
            id: "classk_upper_env",
            passed: ok.is_ok(),
            worst_margin: 0.0,
            witness: None,
        });
        if let Err(e) = &ok {
            meta.notes.push(format!("upper envelope: {e}"));
        }
    }

    // rectangular (t, u) sandwich grid
    let dirs = sandwich_directions(f.dimension());
    let nt = opts.sandwich_time_points.max(2);
    let nr = opts.sandwich_radii.max(2);
    let mut lower_worst = f64::NEG_INFINITY;
    let mut lower_witness = None;
    let mut upper_worst = f64::NEG_INFINITY;
    let mut upper_witness = None;
    let mut order_worst = f64::NEG_INFINITY;
    let mut zero_worst = f64::NEG_INFINITY;
    let mut zero_witness = None;
    for i in 0..nt {
        let t = dom.t0 + (dom.horizon - dom.t0) * i as f64 / (nt - 1) as f64;
        let v_center = cand.v(t, &dom.center)?;
        let m = v_center.abs();
        if m > zero_worst {
            zero_worst = m;
            zero_witness = Some((t, dom.center.clone()));
        }
        for j in 0..=nr {
            let radius = if j == 0 {
                dom.r0 * 1e-6
            } else {
                dom.r0 * (1.0 - 1e-9) * j as f64 / nr as f64
            };
            for dir in &dirs {
                let u: Vec<f64> = dom
                    .center
                    .iter()
                    .zip(dir)
                    .map(|(c, d)| c + radius * d)
                    .collect();
                let s = sup_dist(&u, &dom.center);
                let v = cand.v(t, &u)?;
                let a = cand.lower_env.eval(s)?;
                let margin = a - v - ineq_tol(v.max(a));
                if margin > lower_worst {
                    lower_worst = margin;
                    lower_witness = Some((t, u.clone()));
                }
                if let Some(bf) = &cand.upper_env {
                    let b = bf.eval(s)?;
                    let margin = v - b - ineq_tol(v.max(b));
                    if margin > upper_worst {
                        upper_worst = margin;
                        upper_witness = Some((t, u.clone()));
                    }
                    let order = a - b - ineq_tol(b);
                    order_worst = order_worst.max(order);
                }
            }
        }
    }
    meta.sandwich_time_points = nt;
    meta.sandwich_state_points = (nr + 1) * dirs.len();

    conditions.push(ConditionCheck {
        id: "zero_section",
        passed: zero_worst <= 1e-12,
        worst_margin: zero_worst,
        witness: zero_witness,
    });
    conditions.push(ConditionCheck {
        id: "sandwich_lower",
        passed: lower_worst <= 0.0,
        worst_margin: lower_worst,
        witness: lower_witness,
    });
    if cand.upper_env.is_some() {
        conditions.push(ConditionCheck {
            id: "sandwich_upper",
            passed: upper_worst <= 0.0,
            worst_margin: upper_worst,
            witness: upper_witness,
        });
        conditions.push(ConditionCheck {
            id: "envelope_order",
            passed: order_worst <= 0.0,
            worst_margin: order_worst,
            witness: None,
        });
    }

    // V'_g <= 0 along each grid trajectory
    let evidence = run_trajectory_checks(d, f, dom, cand, traj_grid, opts, false)?;
    let mut vdot_worst = f64::NEG_INFINITY;
    let mut vdot_witness = None;
    for (k, ev) in evidence.iter().enumerate() {
        meta.trajectories += 1;
        meta.samples_checked += ev.samples;
        if ev.vdot_worst > vdot_worst {
            vdot_worst = ev.vdot_worst;
            vdot_witness = ev.vdot_witness.clone();
        }
        if let Some((term, omega)) = &ev.exited {
            meta.notes.push(format!(
                "trajectory {k} terminated {} at t = {omega}",
                term.as_str()
            ));
        }
    }
    let vdot_passed = vdot_worst <= ineq_tol(vdot_worst);
    conditions.push(ConditionCheck {
        id: "vdot_nonpositive",
        passed: vdot_passed,
        worst_margin: vdot_worst,
        witness: vdot_witness,
    });

    let stable = conditions
        .iter()
        .filter(|c| ["classk_lower_env", "zero_section", "sandwich_lower", "vdot_nonpositive"].contains(&c.id))
        .all(|c| c.passed);
    let uniform = stable
        && cand.upper_env.is_some()
        && conditions
            .iter()
            .filter(|c| ["classk_upper_env", "sandwich_upper", "envelope_order"].contains(&c.id))
            .all(|c| c.passed);
    let verdict = if uniform {
        Verdict::UniformlyStable
    } else if stable {
        Verdict::Stable
    } else {
        Verdict::Inconclusive
    };

    Ok(CertificateReport {
        verdict,
        checked_conditions: conditions,
        sampling_meta: meta,
    })
}

/// Check the decay-rate condition `V′_g ≤ −w(t)·φ(‖x‖)` along trajectories
/// and probe the divergence condition on `W(t₀, T) = ∫_[t₀,t₀+T) w dμ_g`
/// over the given increasing horizon schedule.
///
/// The fixed-`t₀` probe grows `T` for each grid `t₀` separately (the
/// asymptotic-stability reading of the condition); the uniform probe takes
/// the minimum over the `t₀` grid — extended with horizon-scaled points —
/// at each `T` (the uniform reading). Both must reach the divergence
/// target and still be growing at the final horizon.
pub fn check_asymptotic_certificate(
    d: &Derivator,
    f: &VectorField,
    dom: &DomainSpec,
    cand: &LyapunovCandidate,
    traj_grid: &[(f64, Vec<f64>)],
    horizons: &[f64],
    opts: &CertificateOptions,
) -> Result<CertificateReport> {
    let w = cand
        .weight
        .as_ref()
        .ok_or_else(|| Error::config("candidate.w", "asymptotic checks need a weight"))?
        .clone();
    let phi = cand
        .rate
        .as_ref()
        .ok_or_else(|| Error::config("candidate.phi", "asymptotic checks need a rate"))?
        .clone();
    if horizons.len() < 2 || horizons.windows(2).any(|h| h[0] >= h[1]) {
        return Err(Error::InvalidArgument(
            "horizons must be an increasing schedule of at least two values".into(),
        ));
    }

    let mut report = check_decay_certificate(d, f, dom, cand, traj_grid, opts)?;
    let decay_verdict = report.verdict;

    let rate_ok = phi.validate_positive_definite(dom.r0, 1000);
    report.checked_conditions.push(ConditionCheck {
        id: "rate_positive_definite",
        passed: rate_ok.is_ok(),
        worst_margin: 0.0,
        witness: None,
    });
    if let Err(e) = &rate_ok {
        report.sampling_meta.notes.push(format!("rate: {e}"));
    }

    // w >= 0, sampled over the first probe window plus its jumps
    let t_max = dom.t0 + horizons[horizons.len() - 1];
    let mut weight_worst = f64::NEG_INFINITY;
    let mut weight_witness = None;
    for i in 0..=1000 {
        let t = dom.t0 + (t_max - dom.t0) * i as f64 / 1000.0;
        let wv = w.eval_continuous(t)?;
        if -wv > weight_worst {
            weight_worst = -wv;
            weight_witness = Some((t, Vec::new()));
        }
    }
    for e in d.jumps_in(dom.t0, t_max)? {
        let wv = w.eval_jump(e.time)?;
        if -wv > weight_worst {
            weight_worst = -wv;
            weight_witness = Some((e.time, Vec::new()));
        }
    }
    report.checked_conditions.push(ConditionCheck {
        id: "weight_nonnegative",
        passed: weight_worst <= ineq_tol(weight_worst),
        worst_margin: weight_worst,
        witness: weight_witness,
    });

    // condition (c) along the trajectory grid
    let evidence = run_trajectory_checks(d, f, dom, cand, traj_grid, opts, true)?;
    let mut rate_worst = f64::NEG_INFINITY;
    let mut rate_witness = None;
    for ev in &evidence {
        if ev.rate_worst > rate_worst {
            rate_worst = ev.rate_worst;
            rate_witness = ev.rate_witness.clone();
        }
    }
    report.checked_conditions.push(ConditionCheck {
        id: "vdot_rate_bound",
        passed: rate_worst <= 0.0,
        worst_margin: rate_worst,
        witness: rate_witness,
    });

    // divergence target: 10·max V(t0,x0) / inf φ over [δ, r0)
    let target = match opts.divergence_target {
        Some(t) => t,
        None => {
            let mut v_max = 0.0f64;
            let mut delta = f64::INFINITY;
            for (t0, x0) in traj_grid {
                v_max = v_max.max(cand.v(*t0, x0)?);
                let radius = sup_dist(x0, &dom.center);
                if radius > 0.0 {
                    delta = delta.min(radius);
                }
            }
            if !delta.is_finite() {
                return Err(Error::InvalidArgument(
                    "divergence target needs a grid state away from the equilibrium".into(),
                ));
            }
            let m = phi.grid_inf(delta, dom.r0, 10_000)?;
            if !(m > 0.0) {
                return Err(Error::InvalidArgument(
                    "rate infimum vanishes on the probe annulus".into(),
                ));
            }
            10.0 * v_max / m
        }
    };
    report
        .sampling_meta
        .notes
        .push(format!("divergence target = {target:.6e}"));

    let stall_tol = |w_last: f64| 1e-9 * (1.0 + w_last.abs());
    let probe_t0: Vec<f64> = {
        let mut v: Vec<f64> = traj_grid.iter().map(|(t0, _)| *t0).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };

    // fixed-t0 probe: every grid t0 must reach the target and keep growing
    let mut fixed_min_last = f64::INFINITY;
    let mut fixed_witness_t0 = probe_t0[0];
    let mut fixed_growing = true;
    for &t0 in &probe_t0 {
        let mut prev = 0.0;
        let mut last = 0.0;
        for (i, &horizon) in horizons.iter().enumerate() {
            prev = if i == 0 { 0.0 } else { last };
            last = gcalc::ls_integrate(d, &w, t0, t0 + horizon, &opts.quad)?;
        }
        if last < fixed_min_last {
            fixed_min_last = last;
            fixed_witness_t0 = t0;
        }
        if last - prev <= stall_tol(last) {
            fixed_growing = false;
        }
    }
    let fixed_margin = target - fixed_min_last;
    report.checked_conditions.push(ConditionCheck {
        id: "probe_fixed_t0",
        passed: fixed_margin <= 0.0 && fixed_growing,
        worst_margin: fixed_margin,
        witness: Some((fixed_witness_t0, Vec::new())),
    });
    report.sampling_meta.notes.push(format!(
        "fixed-t0 probe: min W at final horizon = {fixed_min_last:.6e}{}",
        if fixed_growing { "" } else { " (growth stalled)" }
    ));

    // uniform probe: min over the (scaled) t0 grid at each horizon
    let mut uniform_prev = 0.0;
    let mut uniform_last = 0.0;
    let mut uniform_witness_t0 = probe_t0[0];
    for (i, &horizon) in horizons.iter().enumerate() {
        let mut candidates = probe_t0.clone();
        if opts.probe_scaled_t0 {
            for scale in [1.0, 2.0, 4.0] {
                candidates.push(dom.t0 + scale * horizon);
            }
        }
        let mut m = f64::INFINITY;
        for &t0 in &candidates {
            let wv = gcalc::ls_integrate(d, &w, t0, t0 + horizon, &opts.quad)?;
            if wv < m {
                m = wv;
                if i + 1 == horizons.len() {
                    uniform_witness_t0 = t0;
                }
            }
        }
        uniform_prev = if i == 0 { 0.0 } else { uniform_last };
        uniform_last = m;
    }
    let uniform_growing = uniform_last - uniform_prev > stall_tol(uniform_last);
    let uniform_margin = target - uniform_last;
    report.checked_conditions.push(ConditionCheck {
        id: "probe_uniform",
        passed: uniform_margin <= 0.0 && uniform_growing,
        worst_margin: uniform_margin,
        witness: Some((uniform_witness_t0, Vec::new())),
    });
    report.sampling_meta.notes.push(format!(
        "uniform probe: min W at final horizon = {uniform_last:.6e}{}",
        if uniform_growing { "" } else { " (growth stalled)" }
    ));

    // escalation: the asymptotic theorems assume uniform stability
    let base_ok = decay_verdict >= Verdict::UniformlyStable
        && report.passed("rate_positive_definite")
        && report.passed("weight_nonnegative")
        && report.passed("vdot_rate_bound");
    report.verdict = if base_ok && report.passed("probe_fixed_t0") {
        if report.passed("probe_uniform") {
            Verdict::UniformlyAsymptoticallyStable
        } else {
            Verdict::AsymptoticallyStable
        }
    } else {
        decay_verdict
    };
    Ok(report)
}

/// Options for [`empirical_stability_probe`].
#[derive(Debug, Clone)]
pub struct ProbeOptions {
    pub bisection_iters: usize,
    /// `σ̂` trajectories start at this fraction of the admissible radius.
    pub attract_fraction: f64,
    pub record_every: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            bisection_iters: 12,
            attract_fraction: 0.5,
            record_every: 10,
        }
    }
}

/// One row of the empirical probe table.
#[derive(Debug, Clone)]
pub struct ProbeRow {
    pub eps: f64,
    pub t0: f64,
    /// Largest radius verified safe by bisection.
    pub delta_hat: f64,
    /// Unresolved bracket `(safe, unsafe-or-untested)` around `δ̂`.
    pub delta_interval: (f64, f64),
    /// Earliest elapsed time after which `‖x − center‖ < ε` held to the
    /// horizon, from trajectories started at the attractivity radius;
    /// `None` when the bound never locked in.
    pub sigma_hat: Option<f64>,
}

/// Empirical `δ̂(ε, t₀)` / `σ̂(ε, t₀)` table with per-ε spread diagnostics.
#[derive(Debug, Clone)]
pub struct ProbeTable {
    pub rows: Vec<ProbeRow>,
    /// `(ε, spread of δ̂ over t₀, spread of σ̂ over t₀ when all finite)`.
    pub spreads: Vec<(f64, f64, Option<f64>)>,
}

impl ProbeTable {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:>10} {:>10} {:>14} {:>26} {:>12}\n",
            "eps", "t0", "delta_hat", "delta_interval", "sigma_hat"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:>10.4} {:>10.4} {:>14.6e} ({:>11.4e},{:>11.4e}) {:>12}\n",
                r.eps,
                r.t0,
                r.delta_hat,
                r.delta_interval.0,
                r.delta_interval.1,
                match r.sigma_hat {
                    Some(s) => format!("{s:.4}"),
                    None => "none".to_string(),
                }
            ));
        }
        for (eps, dspread, sspread) in &self.spreads {
            out.push_str(&format!(
                "spread eps = {eps}: delta {dspread:.6e}, sigma {}\n",
                match sspread {
                    Some(s) => format!("{s:.4}"),
                    None => "n/a".to_string(),
                }
            ));
        }
        out
    }
}

/// Probe the stability definitions directly: `δ̂` is the largest bisected
/// radius whose trajectories stay below `ε` up to the horizon, `σ̂` the
/// earliest elapsed time after which they stay below `ε`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_stability_probe(
    d: &Derivator,
    f: &VectorField,
    dom: &DomainSpec,
    eps_list: &[f64],
    t0_grid: &[f64],
    x0_rays: &[Vec<f64>],
    step: f64,
    opts: &ProbeOptions,
) -> Result<ProbeTable> {
    if eps_list.is_empty() || t0_grid.is_empty() || x0_rays.is_empty() {
        return Err(Error::InvalidArgument(
            "probe needs eps values, t0 values and rays".into(),
        ));
    }
    let mut rays = Vec::with_capacity(x0_rays.len());
    for ray in x0_rays {
        if ray.len() != f.dimension() {
            return Err(Error::InvalidArgument(
                "ray dimension does not match the system".into(),
            ));
        }
        let norm = solver::sup_norm(ray);
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("zero ray".into()));
        }
        rays.push(ray.iter().map(|v| v / norm).collect::<Vec<f64>>());
    }

    let solve_opts = SolveOptions {
        record_every: opts.record_every,
    };

    let tasks: Vec<(f64, f64)> = eps_list
        .iter()
        .flat_map(|e| t0_grid.iter().map(move |t0| (*e, *t0)))
        .collect();

    let rows = batch::map_ordered(&tasks, |_, &(eps, t0)| -> Result<ProbeRow> {
        let mut dom_k = dom.clone();
        dom_k.t0 = t0;

        let stays_below = |radius: f64| -> Result<bool> {
            for ray in &rays {
                let x0: Vec<f64> = dom_k
                    .center
                    .iter()
                    .zip(ray)
                    .map(|(c, r)| c + radius * r)
                    .collect();
                let traj = solver::solve_ivp_with(d, f, &dom_k, &x0, step, &solve_opts)?;
                if traj.termination != Termination::Horizon {
                    return Ok(false);
                }
                for s in &traj.samples {
                    if sup_dist(&s.x_left, &dom_k.center) >= eps
                        || sup_dist(&s.x_right, &dom_k.center) >= eps
                    {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        };

        let mut lo = 0.0f64;
        let mut hi = dom.r;
        for _ in 0..opts.bisection_iters {
            let mid = 0.5 * (lo + hi);
            if stays_below(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }

        // settle time from the attractivity radius
        let radius = opts.attract_fraction * dom.r;
        let mut sigma: Option<f64> = Some(0.0);
        for ray in &rays {
            let x0: Vec<f64> = dom_k
                .center
                .iter()
                .zip(ray)
                .map(|(c, r)| c + radius * r)
                .collect();
            let traj = solver::solve_ivp_with(d, f, &dom_k, &x0, step, &solve_opts)?;
            if traj.termination != Termination::Horizon {
                sigma = None;
                break;
            }
            let exceeds = |s: &solver::Sample| {
                sup_dist(&s.x_left, &dom_k.center) >= eps
                    || sup_dist(&s.x_right, &dom_k.center) >= eps
            };
            let last_exceed = traj.samples.iter().rposition(exceeds);
            match last_exceed {
                None => {} // below eps the whole way: sigma 0 for this ray
                Some(i) if i + 1 >= traj.samples.len() => {
                    // still at or above eps at the horizon
                    sigma = None;
                    break;
                }
                Some(i) => {
                    let settle = traj.samples[i + 1].t - t0;
                    sigma = Some(sigma.unwrap_or(0.0).max(settle));
                }
            }
        }

        Ok(ProbeRow {
            eps,
            t0,
            delta_hat: lo,
            delta_interval: (lo, hi),
            sigma_hat: sigma,
        })
    });
    let rows: Vec<ProbeRow> = rows.into_iter().collect::<Result<_>>()?;

    let mut spreads = Vec::new();
    for eps in eps_list {
        let group: Vec<&ProbeRow> = rows.iter().filter(|r| r.eps == *eps).collect();
        let dmin = group.iter().map(|r| r.delta_hat).fold(f64::INFINITY, f64::min);
        let dmax = group
            .iter()
            .map(|r| r.delta_hat)
            .fold(f64::NEG_INFINITY, f64::max);
        let sigma_spread = if group.iter().all(|r| r.sigma_hat.is_some()) {
            let smin = group
                .iter()
                .map(|r| r.sigma_hat.unwrap())
                .fold(f64::INFINITY, f64::min);
            let smax = group
                .iter()
                .map(|r| r.sigma_hat.unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            Some(smax - smin)
        } else {
            None
        };
        spreads.push((*eps, dmax - dmin, sigma_spread));
    }
    Ok(ProbeTable { rows, spreads })
}

/// Doubling horizon schedule `T₀, 2T₀, …` with `n` entries.
pub fn doubling_horizons(t_initial: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t_initial * (1u64 << k) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivator::{ContinuousPiece, JumpRule};

    fn unit_jump_derivator() -> Derivator {
        Derivator::new(
            vec![ContinuousPiece::linear(0.0, f64::INFINITY, 1.0)],
            JumpRule::Periodic {
                period: 1.0,
                offsets: vec![(0.0, 1.0)],
                start: 1.0,
            },
            0.0,
        )
        .unwrap()
    }

    /// Population-with-impulses field: logistic-with-threshold flow, linear
    /// culling at jumps.
    fn train_field(rho: f64, k: f64, m: f64, dd: f64) -> VectorField {
        VectorField::with_jump(
            1,
            move |_, x, out| out[0] = rho * x[0] * (1.0 - x[0] / k) * (x[0] / m - 1.0),
            move |_, x, out| out[0] = -dd * x[0],
        )
    }

    fn square_candidate() -> LyapunovCandidate {
        LyapunovCandidate::new(
            |_, x| x[0] * x[0],
            |_, x, out| out[0] = 2.0 * x[0],
            ClassKFn::new(|s| s * s),
        )
    }

    #[test]
    fn vdot_off_jump_matches_hand_formula() {
        let d = unit_jump_derivator();
        let f = train_field(0.001, 100.0, 50.0, 0.03);
        let cand = square_candidate();
        let v = vdot_along(&d, &f, &cand, 0.5, &[25.0]).unwrap();
        // 2ρx²(1 − x/K)(x/M − 1) at x = 25
        assert!((v - (-0.46875)).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn vdot_at_jump_matches_quotient() {
        let d = unit_jump_derivator();
        let f = train_field(0.001, 100.0, 50.0, 0.03);
        let cand = square_candidate();
        let v = vdot_along(&d, &f, &cand, 1.0, &[10.0]).unwrap();
        // (−2d + d²)·x² at x = 10
        assert!((v - (-5.91)).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn vdot_zero_field() {
        let d = unit_jump_derivator();
        let f = VectorField::new(1, |_, _, out| out[0] = 0.0);
        let cand = square_candidate();
        for t in [0.25, 0.75, 2.5] {
            assert_eq!(vdot_along(&d, &f, &cand, t, &[3.0]).unwrap(), 0.0);
        }
    }

    #[test]
    fn vdot_rejects_plateau_interior() {
        let d = Derivator::new(
            vec![
                ContinuousPiece::linear(0.0, 1.0, 1.0),
                ContinuousPiece::plateau(1.0, 2.0),
            ],
            JumpRule::none(),
            0.0,
        )
        .unwrap();
        let f = VectorField::new(1, |_, x, out| out[0] = -x[0]);
        let cand = square_candidate();
        assert!(matches!(
            vdot_along(&d, &f, &cand, 1.5, &[0.5]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn fd_gradient_fallback_is_close_and_flagged() {
        let v: TimeStateMap = Arc::new(|_, x: &[f64]| Ok(x[0] * x[0] + 3.0 * x[1]));
        let cand =
            LyapunovCandidate::from_parts(v, None, None, ClassKFn::new(|s| s * s));
        assert!(cand.uses_fd_gradient());
        let mut g = vec![0.0; 2];
        cand.grad(0.0, &[1.5, -2.0], &mut g).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-7);
        assert!((g[1] - 3.0).abs() < 1e-7);
    }

    #[test]
    fn decay_certificate_train_model_is_uniformly_stable() {
        let d = unit_jump_derivator();
        let f = train_field(0.001, 100.0, 50.0, 0.03);
        let cand = square_candidate().with_upper_env(ClassKFn::new(|s| s * s));
        let dom = DomainSpec::new(0.0, 40.0, vec![0.0], 48.0, 48.0).unwrap();
        let grid: Vec<(f64, Vec<f64>)> = vec![
            (0.0, vec![30.0]),
            (0.0, vec![-20.0]),
            (0.5, vec![45.0]),
        ];
        let opts = CertificateOptions {
            step: 1e-2,
            ..Default::default()
        };
        let report = check_decay_certificate(&d, &f, &dom, &cand, &grid, &opts).unwrap();
        assert_eq!(report.verdict, Verdict::UniformlyStable, "{}", report.render_table());
    }

    #[test]
    fn decay_certificate_flags_growth() {
        let d = Derivator::identity();
        let f = VectorField::new(1, |_, x, out| out[0] = x[0]);
        let cand = square_candidate();
        let dom = DomainSpec::new(0.0, 3.0, vec![0.0], 10.0, 5.0).unwrap();
        let grid = vec![(0.0, vec![0.5])];
        let opts = CertificateOptions {
            step: 1e-2,
            ..Default::default()
        };
        let report = check_decay_certificate(&d, &f, &dom, &cand, &grid, &opts).unwrap();
        assert_eq!(report.verdict, Verdict::Inconclusive);
        let c = report.condition("vdot_nonpositive").unwrap();
        assert!(!c.passed);
        assert!(c.worst_margin > 0.0);
    }

    #[test]
    fn uniform_asymptotic_via_constant_weight() {
        // x' = −x with V = x², w ≡ 1, φ = s²: W(t0, T) = T for every t0
        let d = Derivator::identity();
        let f = VectorField::new(1, |_, x, out| out[0] = -x[0]);
        let cand = square_candidate()
            .with_upper_env(ClassKFn::new(|s| s * s))
            .with_rate_weight(
                ClassKFn::new(|s| s * s),
                TwoBranchScalar::constant(2.0),
            );
        let dom = DomainSpec::new(0.0, 10.0, vec![0.0], 2.0, 1.0).unwrap();
        let grid = vec![(0.0, vec![0.5]), (1.0, vec![-0.5])];
        let opts = CertificateOptions {
            step: 1e-2,
            ..Default::default()
        };
        let horizons = doubling_horizons(1.0, 9);
        let report =
            check_asymptotic_certificate(&d, &f, &dom, &cand, &grid, &horizons, &opts).unwrap();
        assert_eq!(
            report.verdict,
            Verdict::UniformlyAsymptoticallyStable,
            "{}",
            report.render_table()
        );
    }

    #[test]
    fn probe_delta_tracks_eps_for_contractions() {
        // |x(t)| <= |x0| for x' = -x: the stability radius is eps itself
        let d = Derivator::identity();
        let f = VectorField::new(1, |_, x, out| out[0] = -x[0]);
        let dom = DomainSpec::new(0.0, 5.0, vec![0.0], 2.0, 1.0).unwrap();
        let table = empirical_stability_probe(
            &d,
            &f,
            &dom,
            &[0.5, 0.25],
            &[0.0],
            &[vec![1.0], vec![-1.0]],
            1e-2,
            &ProbeOptions::default(),
        )
        .unwrap();
        for row in &table.rows {
            assert!(
                (row.delta_hat - row.eps).abs() <= 1.0 / 2f64.powi(12) * dom.r + 1e-9,
                "delta {} should track eps {}",
                row.delta_hat,
                row.eps
            );
        }
        // settle times from the attractivity radius 0.5: |x(t)| = 0.5·e^{−t}
        let sigma_large = table.rows[0].sigma_hat.unwrap();
        assert!(sigma_large <= 0.2, "eps = 0.5 settles almost immediately");
        let sigma_small = table.rows[1].sigma_hat.unwrap();
        assert!(
            (sigma_small - 2f64.ln()).abs() < 0.15,
            "eps = 0.25 settles near ln 2, got {sigma_small}"
        );
    }

    #[test]
    fn probe_sigma_missing_when_g_plateaus_forever() {
        // g frozen after t = 1: x(t) = x0·e^{c(g(t)−g(t0))} never reaches
        // below eps < |x(1)|
        let d = Derivator::new(
            vec![
                ContinuousPiece::linear(0.0, 1.0, 1.0),
                ContinuousPiece::plateau(1.0, f64::INFINITY),
            ],
            JumpRule::none(),
            0.0,
        )
        .unwrap();
        let f = VectorField::new(1, |_, x, out| out[0] = -2.0 * x[0]);
        let dom = DomainSpec::new(0.0, 20.0, vec![0.0], 2.0, 1.0).unwrap();
        // from 0.5, x(1) = 0.5·e^{-2} ≈ 0.0677
        let table = empirical_stability_probe(
            &d,
            &f,
            &dom,
            &[0.05],
            &[0.0],
            &[vec![1.0]],
            1e-2,
            &ProbeOptions::default(),
        )
        .unwrap();
        assert_eq!(table.rows[0].sigma_hat, None);
        // while a larger eps is reached before the freeze
        let table = empirical_stability_probe(
            &d,
            &f,
            &dom,
            &[0.1],
            &[0.0],
            &[vec![1.0]],
            1e-2,
            &ProbeOptions::default(),
        )
        .unwrap();
        assert!(table.rows[0].sigma_hat.is_some());
    }
}
