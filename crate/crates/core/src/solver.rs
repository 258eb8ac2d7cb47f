//! Fixed-step integration of Stieltjes initial value problems.
//!
//! The solution path is advanced in three regimes dictated by the
//! derivator: on smooth non-plateau sub-segments the state follows
//! `dx/dt = f(t, x)·g′(t)` under classical 4th-order one-step integration
//! (the last partial step shortened to land exactly on segment ends and
//! jump times); on plateaus the state is copied forward unchanged; at a
//! jump time `t` the left value is recorded and the state is reset to
//! `x⁺ = x + μ_g({t})·f_jump(t, x)` before flow resumes.
//!
//! Integration is in `t` with the `g′` weight rather than reparameterized
//! by `τ = g(t)`, which keeps jump and plateau boundaries at exact `t`
//! values. No error-adaptive step control is used; runs are deterministic.

use std::sync::Arc;

use crate::derivator::{Derivator, Segment};
use crate::error::{Error, Result};
use crate::exprdsl::{self, TwoBranchExpr};
use crate::gcalc::{self, QuadratureOptions, TwoBranchScalar};

type FieldFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync>;

/// A two-branch right-hand side: the continuous-time branch drives the flow
/// off `D_g`, the jump branch (defaulting to the continuous one) drives the
/// state update at jumps.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    continuous: FieldFn,
    jump: Option<FieldFn>,
}

impl VectorField {
    pub fn new(dim: usize, f: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        VectorField {
            dim,
            continuous: Arc::new(move |t, x, out| {
                f(t, x, out);
                Ok(())
            }),
            jump: None,
        }
    }

    pub fn with_jump(
        dim: usize,
        continuous: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        jump: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        VectorField {
            dim,
            continuous: Arc::new(move |t, x, out| {
                continuous(t, x, out);
                Ok(())
            }),
            jump: Some(Arc::new(move |t, x, out| {
                jump(t, x, out);
                Ok(())
            })),
        }
    }

    pub fn from_fallible(dim: usize, continuous: FieldFn, jump: Option<FieldFn>) -> Self {
        VectorField {
            dim,
            continuous,
            jump,
        }
    }

    /// Compile one [`TwoBranchExpr`] per state component.
    pub fn from_exprs(fields: &[TwoBranchExpr]) -> Result<Self> {
        let dim = fields.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("empty vector field".into()));
        }
        for (i, f) in fields.iter().enumerate() {
            if let Some(max) = f.max_var_index() {
                if max >= dim {
                    return Err(Error::InvalidArgument(format!(
                        "field component {} references x{} but the system has dimension {dim}",
                        i + 1,
                        max + 1
                    )));
                }
            }
        }
        let cont: Vec<_> = fields.iter().map(|f| f.continuous.clone()).collect();
        let jump: Vec<_> = fields.iter().map(|f| f.jump_branch().clone()).collect();
        let has_jump_branch = fields.iter().any(|f| f.jump.is_some());
        let continuous: FieldFn = Arc::new(move |t, x: &[f64], out: &mut [f64]| {
            for (o, e) in out.iter_mut().zip(&cont) {
                *o = exprdsl::eval(e, t, x)?;
            }
            Ok(())
        });
        let jump_fn: FieldFn = Arc::new(move |t, x: &[f64], out: &mut [f64]| {
            for (o, e) in out.iter_mut().zip(&jump) {
                *o = exprdsl::eval(e, t, x)?;
            }
            Ok(())
        });
        Ok(VectorField {
            dim,
            continuous,
            jump: has_jump_branch.then_some(jump_fn),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn eval_continuous(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.continuous)(t, x, out)
    }

    pub fn eval_jump(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.jump {
            Some(j) => j(t, x, out),
            None => (self.continuous)(t, x, out),
        }
    }
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &self.dim)
            .field("has_jump_branch", &self.jump.is_some())
            .finish()
    }
}

/// Time window and state region on which the problem is posed.
///
/// Domain exits are measured in the sup norm from `center` against the
/// closed ball of radius `r0`; admissible initial states lie strictly
/// inside radius `r ≤ r0`. The blow-up threshold operationalizes the
/// unbounded alternative at desk scale.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub t0: f64,
    pub horizon: f64,
    pub center: Vec<f64>,
    pub r0: f64,
    pub r: f64,
    pub blowup_threshold: f64,
}

impl DomainSpec {
    pub fn new(t0: f64, horizon: f64, center: Vec<f64>, r0: f64, r: f64) -> Result<Self> {
        if !(t0 < horizon) {
            return Err(Error::InvalidArgument(format!(
                "t0 = {t0} must be < horizon = {horizon}"
            )));
        }
        if !(r > 0.0 && r <= r0) {
            return Err(Error::InvalidArgument(format!(
                "radii must satisfy 0 < r <= r0, got r = {r}, r0 = {r0}"
            )));
        }
        Ok(DomainSpec {
            t0,
            horizon,
            center,
            r0,
            r,
            blowup_threshold: 1e8,
        })
    }

    pub fn with_blowup_threshold(mut self, threshold: f64) -> Self {
        self.blowup_threshold = threshold;
        self
    }
}

/// Why integration stopped, mirroring the maximal-solution alternatives:
/// the horizon proxies global existence, `BlowUp` the unbounded case, and
/// the two exits the leaves-the-domain case (by flow or by jump).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Horizon,
    BlowUp,
    DomainExitContinuous,
    DomainExitJump,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Horizon => "Horizon",
            Termination::BlowUp => "BlowUp",
            Termination::DomainExitContinuous => "DomainExitContinuous",
            Termination::DomainExitJump => "DomainExitJump",
        }
    }
}

/// One recorded point: `x_right` differs from `x_left` only at jump times.
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub g: f64,
    pub x_left: Vec<f64>,
    pub x_right: Vec<f64>,
}

/// A computed solution path.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub termination: Termination,
    pub omega_estimate: f64,
}

impl Trajectory {
    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("a trajectory has samples")
    }

    /// The recorded sample at exactly `t`, if any.
    pub fn sample_at(&self, t: f64) -> Option<&Sample> {
        self.samples
            .binary_search_by(|s| s.t.total_cmp(&t))
            .ok()
            .map(|i| &self.samples[i])
    }

    /// Piecewise-linear interpolation of the state at `t` (post-jump values
    /// are used to the right of each jump).
    pub fn interpolate(&self, t: f64) -> Option<Vec<f64>> {
        let samples = &self.samples;
        if samples.is_empty() || t < samples[0].t || t > samples[samples.len() - 1].t {
            return None;
        }
        let i = match samples.binary_search_by(|s| s.t.total_cmp(&t)) {
            Ok(i) => return Some(samples[i].x_left.clone()),
            Err(i) => i,
        };
        let (a, b) = (&samples[i - 1], &samples[i]);
        let w = (t - a.t) / (b.t - a.t);
        Some(
            a.x_right
                .iter()
                .zip(&b.x_left)
                .map(|(l, r)| l + w * (r - l))
                .collect(),
        )
    }
}

/// Recording options; segment boundaries, jumps and the final time are
/// always recorded regardless of thinning.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Record every `record_every`-th interior step (1 = all).
    pub record_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { record_every: 1 }
    }
}

pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sup_dist(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// The jump update `x⁺ = x + μ_g({t})·f_jump(t, x)`.
pub fn jump_map(d: &Derivator, f: &VectorField, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    let gap = d.jump_at(t)?;
    if gap <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "jump_map called at t = {t}, which is not a jump time"
        )));
    }
    let mut fx = vec![0.0; x.len()];
    f.eval_jump(t, x, &mut fx)?;
    Ok(x.iter().zip(&fx).map(|(xi, fi)| xi + gap * fi).collect())
}

/// Solve with full recording.
pub fn solve_ivp(
    d: &Derivator,
    f: &VectorField,
    dom: &DomainSpec,
    x0: &[f64],
    step: f64,
) -> Result<Trajectory> {
    solve_ivp_with(d, f, dom, x0, step, &SolveOptions::default())
}

struct Rk4Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
    next: Vec<f64>,
}

impl Rk4Work {
    fn new(dim: usize) -> Self {
        Rk4Work {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
            next: vec![0.0; dim],
        }
    }
}

/// One classical step of `dx/dt = f(t, x)·g′(t)` over `[t, t+h]`, writing
/// the result to `w.next`. The slope is queried through the segment so the
/// final stage at a boundary uses this piece's slope, not the next one's.
fn rk4_step(
    d: &Derivator,
    seg: &Segment,
    f: &VectorField,
    t: f64,
    h: f64,
    x: &[f64],
    w: &mut Rk4Work,
) -> Result<()> {
    let s0 = d.segment_slope(seg, t)?;
    let sm = d.segment_slope(seg, t + 0.5 * h)?;
    let s1 = d.segment_slope(seg, t + h)?;

    fn axpy(out: &mut [f64], x: &[f64], h: f64, k: &[f64]) {
        for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
            *o = xi + h * ki;
        }
    }

    f.eval_continuous(t, x, &mut w.k1)?;
    for k in w.k1.iter_mut() {
        *k *= s0;
    }
    axpy(&mut w.tmp, x, 0.5 * h, &w.k1);
    f.eval_continuous(t + 0.5 * h, &w.tmp, &mut w.k2)?;
    for k in w.k2.iter_mut() {
        *k *= sm;
    }
    axpy(&mut w.tmp, x, 0.5 * h, &w.k2);
    f.eval_continuous(t + 0.5 * h, &w.tmp, &mut w.k3)?;
    for k in w.k3.iter_mut() {
        *k *= sm;
    }
    axpy(&mut w.tmp, x, h, &w.k3);
    f.eval_continuous(t + h, &w.tmp, &mut w.k4)?;
    for k in w.k4.iter_mut() {
        *k *= s1;
    }
    for (i, (o, xi)) in w.next.iter_mut().zip(x).enumerate() {
        *o = xi + h / 6.0 * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
    }
    Ok(())
}

/// Integrate the IVP from `x0` at `dom.t0` to `dom.horizon`.
///
/// If `t0 ∈ D_g` the jump update applies first. A jump exactly at the
/// horizon is applied and its post-jump value recorded. Returns the
/// left-continuous path with per-sample `g` values, a termination status,
/// and the last advanced time as the `ω(t₀, x₀)` estimate.
pub fn solve_ivp_with(
    d: &Derivator,
    f: &VectorField,
    dom: &DomainSpec,
    x0: &[f64],
    step: f64,
    opts: &SolveOptions,
) -> Result<Trajectory> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "step must be > 0, got {step}"
        )));
    }
    if opts.record_every == 0 {
        return Err(Error::InvalidArgument("record_every must be >= 1".into()));
    }
    if x0.len() != f.dimension() || dom.center.len() != f.dimension() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: field {}, x0 {}, center {}",
            f.dimension(),
            x0.len(),
            dom.center.len()
        )));
    }
    if !(sup_dist(x0, &dom.center) < dom.r) {
        return Err(Error::InvalidArgument(format!(
            "initial state must satisfy ||x0 - center|| < r = {}",
            dom.r
        )));
    }

    let mut samples: Vec<Sample> = Vec::new();
    let mut x = x0.to_vec();
    let mut work = Rk4Work::new(f.dimension());
    let mut step_count: usize = 0;

    fn record(samples: &mut Vec<Sample>, t: f64, g: f64, xl: &[f64], xr: &[f64]) {
        samples.push(Sample {
            t,
            g,
            x_left: xl.to_vec(),
            x_right: xr.to_vec(),
        });
    }

    let done = |samples: Vec<Sample>, termination: Termination, omega: f64| {
        Ok(Trajectory {
            samples,
            termination,
            omega_estimate: omega,
        })
    };

    // initial sample, with the jump at t0 applied first when t0 ∈ D_g
    {
        let g0 = d.eval(dom.t0)?;
        if d.jump_at(dom.t0)? > 0.0 {
            let xr = jump_map(d, f, dom.t0, &x)?;
            if !xr.iter().all(|v| v.is_finite()) {
                return done(samples, Termination::BlowUp, dom.t0);
            }
            record(&mut samples, dom.t0, g0, &x, &xr);
            if sup_norm(&xr) > dom.blowup_threshold {
                return done(samples, Termination::BlowUp, dom.t0);
            }
            if sup_dist(&xr, &dom.center) > dom.r0 {
                return done(samples, Termination::DomainExitJump, dom.t0);
            }
            x = xr;
        } else {
            record(&mut samples, dom.t0, g0, &x, &x);
        }
    }

    for seg in d.segments(dom.t0, dom.horizon)? {
        let mut t_cur = seg.start;
        while t_cur < seg.end {
            let t_next = (t_cur + step).min(seg.end);
            let h = t_next - t_cur;
            if h < step * 1e-12 {
                break;
            }
            if seg.plateau {
                work.next.copy_from_slice(&x);
            } else {
                rk4_step(d, &seg, f, t_cur, h, &x, &mut work)?;
            }
            if !work.next.iter().all(|v| v.is_finite()) {
                return done(samples, Termination::BlowUp, t_next);
            }
            x.copy_from_slice(&work.next);
            step_count += 1;
            let interior = t_next < seg.end;

            if sup_norm(&x) > dom.blowup_threshold {
                record(&mut samples, t_next, d.eval(t_next)?, &x, &x);
                return done(samples, Termination::BlowUp, t_next);
            }
            if sup_dist(&x, &dom.center) > dom.r0 {
                record(&mut samples, t_next, d.eval(t_next)?, &x, &x);
                return done(samples, Termination::DomainExitContinuous, t_next);
            }
            if interior && step_count.is_multiple_of(opts.record_every) {
                record(&mut samples, t_next, d.eval(t_next)?, &x, &x);
            }
            t_cur = t_next;
        }

        // segment end: a jump, an interior piece boundary, or the horizon
        let at_horizon = seg.end >= dom.horizon;
        if !at_horizon {
            if d.jump_at(seg.end)? > 0.0 {
                let xl = x.clone();
                let xr = jump_map(d, f, seg.end, &xl)?;
                if !xr.iter().all(|v| v.is_finite()) {
                    return done(samples, Termination::BlowUp, seg.end);
                }
                record(&mut samples, seg.end, d.eval(seg.end)?, &xl, &xr);
                if sup_norm(&xr) > dom.blowup_threshold {
                    return done(samples, Termination::BlowUp, seg.end);
                }
                if sup_dist(&xr, &dom.center) > dom.r0 {
                    return done(samples, Termination::DomainExitJump, seg.end);
                }
                x = xr;
            } else {
                record(&mut samples, seg.end, d.eval(seg.end)?, &x, &x);
            }
        }
    }

    // horizon sample; a jump exactly at the horizon is applied and recorded
    let gh = d.eval(dom.horizon)?;
    if d.jump_at(dom.horizon)? > 0.0 {
        let xl = x.clone();
        let xr = jump_map(d, f, dom.horizon, &xl)?;
        if !xr.iter().all(|v| v.is_finite()) {
            return done(samples, Termination::BlowUp, dom.horizon);
        }
        record(&mut samples, dom.horizon, gh, &xl, &xr);
        if sup_norm(&xr) > dom.blowup_threshold {
            return done(samples, Termination::BlowUp, dom.horizon);
        }
        if sup_dist(&xr, &dom.center) > dom.r0 {
            return done(samples, Termination::DomainExitJump, dom.horizon);
        }
    } else {
        record(&mut samples, dom.horizon, gh, &x, &x);
    }
    done(samples, Termination::Horizon, dom.horizon)
}

/// Closed-form solution of the linear system `x′_g = c·x` off jumps,
/// `ν·x` at jumps: `x₀ · e_p(t, t₀)` with `p = c` off `D_g` and `ν` on it.
/// This is the oracle the acceptance tests compare the solver against.
pub fn linear_closed_form(
    d: &Derivator,
    c: f64,
    nu: f64,
    t0: f64,
    x0: f64,
    t: f64,
) -> Result<f64> {
    let p = TwoBranchScalar::constant_with_jump(c, nu);
    Ok(x0 * gcalc::g_exp(d, &p, t0, t, &QuadratureOptions::default())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivator::{ContinuousPiece, JumpEvent, JumpRule};

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

    fn linear_field(c: f64, nu: f64) -> VectorField {
        VectorField::with_jump(
            1,
            move |_, x, out| out[0] = c * x[0],
            move |_, x, out| out[0] = nu * x[0],
        )
    }

    fn wide_domain(t0: f64, horizon: f64) -> DomainSpec {
        DomainSpec::new(t0, horizon, vec![0.0], 1e9, 1e9)
            .unwrap()
            .with_blowup_threshold(1e12)
    }

    #[test]
    fn jump_map_examples() {
        // train model: x = 30, d = 0.03, unit gap -> 29.1
        let d = unit_jump_derivator();
        let f = VectorField::with_jump(
            1,
            |_, x, out| out[0] = x[0],
            |_, x, out| out[0] = -0.03 * x[0],
        );
        let v = jump_map(&d, &f, 1.0, &[30.0]).unwrap();
        assert!((v[0] - 29.1).abs() < 1e-12);

        let f = linear_field(0.0, -0.5);
        let v = jump_map(&d, &f, 2.0, &[2.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15);

        let f = VectorField::with_jump(1, |_, x, out| out[0] = x[0], |_, _, out| out[0] = 0.0);
        let v = jump_map(&d, &f, 1.0, &[7.0]).unwrap();
        assert_eq!(v[0], 7.0);

        assert!(matches!(
            jump_map(&d, &f, 0.5, &[1.0]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn classical_linear_ode() {
        let d = Derivator::identity();
        let f = linear_field(-0.4, 0.0);
        let dom = wide_domain(0.0, 5.0);
        let traj = solve_ivp(&d, &f, &dom, &[1.0], 1e-3).unwrap();
        let want = (-2.0f64).exp();
        let got = traj.final_sample().x_left[0];
        assert!(((got - want) / want).abs() <= 1e-9, "got {got}, want {want}");
        assert_eq!(traj.termination, Termination::Horizon);
        assert_eq!(traj.omega_estimate, 5.0);
    }

    #[test]
    fn linear_with_impulses_matches_closed_form_at_right_limit() {
        // two jumps in [0, 2] (the jump at the horizon is applied):
        // x(2⁺)/x0 = e^{−0.8}·0.25
        let d = unit_jump_derivator();
        let f = linear_field(-0.4, -0.5);
        let dom = wide_domain(0.0, 2.0);
        let traj = solve_ivp(&d, &f, &dom, &[1.0], 1e-3).unwrap();
        let got = traj.final_sample().x_right[0];
        let want = (-0.8f64).exp() * 0.25;
        assert!(((got - want) / want).abs() <= 1e-9, "got {got}, want {want}");
        // the left value at the horizon excludes that jump
        let left = traj.final_sample().x_left[0];
        let want_left = (-0.8f64).exp() * 0.5;
        assert!(((left - want_left) / want_left).abs() <= 1e-9);
    }

    #[test]
    fn jump_exactness_along_trajectory() {
        let d = unit_jump_derivator();
        let f = linear_field(-0.4, -0.5);
        let dom = wide_domain(0.0, 5.0);
        let traj = solve_ivp(&d, &f, &dom, &[1.0], 1e-2).unwrap();
        let mut jumps_seen = 0;
        for s in &traj.samples {
            if s.x_left != s.x_right {
                let gap = d.jump_at(s.t).unwrap();
                let mut fx = vec![0.0];
                f.eval_jump(s.t, &s.x_left, &mut fx).unwrap();
                let expect = s.x_left[0] + gap * fx[0];
                assert_eq!(s.x_right[0], expect, "exact jump identity at t = {}", s.t);
                jumps_seen += 1;
            }
        }
        assert_eq!(jumps_seen, 5);
    }

    #[test]
    fn state_frozen_on_plateaus() {
        // g constant on [1, 2): any c leaves the state untouched there
        let d = Derivator::new(
            vec![
                ContinuousPiece::linear(0.0, 1.0, 1.0),
                ContinuousPiece::plateau(1.0, 2.0),
                ContinuousPiece::linear(2.0, 3.0, 1.0),
            ],
            JumpRule::none(),
            0.0,
        )
        .unwrap();
        let f = linear_field(-2.0, 0.0);
        let dom = wide_domain(0.0, 3.0);
        let traj = solve_ivp(&d, &f, &dom, &[1.0], 1e-3).unwrap();
        let x_at_1 = traj.sample_at(1.0).unwrap().x_left[0];
        for s in traj.samples.iter().filter(|s| s.t >= 1.0 && s.t <= 2.0) {
            assert_eq!(s.x_left[0], x_at_1, "plateau must freeze the state");
        }
        // and flow resumes after the plateau
        let x_end = traj.final_sample().x_left[0];
        assert!(((x_end - (-4.0f64).exp()) / (-4.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn closed_form_examples() {
        let id = Derivator::identity();
        let v = linear_closed_form(&id, -0.7, 0.0, 1.0, 2.0, 4.0).unwrap();
        let want = 2.0 * (-0.7f64 * 3.0).exp();
        assert!((v - want).abs() < 1e-10 * want.abs());

        // c = 0, one unit jump with ν = 1: doubling
        let d = Derivator::new(
            vec![ContinuousPiece::linear(0.0, 10.0, 1.0)],
            JumpRule::List(vec![JumpEvent {
                time: 3.0,
                gap: 1.0,
            }]),
            0.0,
        )
        .unwrap();
        let v = linear_closed_form(&d, 0.0, 1.0, 0.0, 1.5, 5.0).unwrap();
        assert!((v - 3.0).abs() < 1e-12);

        let d = unit_jump_derivator();
        let v = linear_closed_form(&d, -0.4, -0.5, 0.0, 1.0, 2.5).unwrap();
        let want = (-1.0f64).exp() * 0.25;
        assert!(((v - want) / want).abs() < 1e-9, "got {v}, want {want}");
    }

    #[test]
    fn jump_at_t0_applies_first() {
        let d = Derivator::new(
            vec![ContinuousPiece::linear(0.0, 10.0, 1.0)],
            JumpRule::List(vec![JumpEvent {
                time: 0.0,
                gap: 1.0,
            }]),
            0.0,
        )
        .unwrap();
        let f = linear_field(0.0, -0.5);
        let dom = wide_domain(0.0, 1.0);
        let traj = solve_ivp(&d, &f, &dom, &[2.0], 1e-2).unwrap();
        let first = &traj.samples[0];
        assert_eq!(first.x_left[0], 2.0);
        assert_eq!(first.x_right[0], 1.0);
        assert_eq!(traj.final_sample().x_left[0], 1.0);
    }

    #[test]
    fn termination_statuses_are_sound() {
        let id = Derivator::identity();

        // blow-up: x' = x² from x0 = 2 blows up near t = 0.5
        let f = VectorField::new(1, |_, x, out| out[0] = x[0] * x[0]);
        let dom = DomainSpec::new(0.0, 1.0, vec![0.0], 1e9, 1e9)
            .unwrap()
            .with_blowup_threshold(1e6);
        let traj = solve_ivp(&id, &f, &dom, &[2.0], 1e-4).unwrap();
        assert_eq!(traj.termination, Termination::BlowUp);
        assert!(traj.omega_estimate < 0.55);
        assert!(sup_norm(&traj.final_sample().x_left) > 1e6);

        // continuous domain exit: constant drift leaves the r0 ball
        let f = VectorField::new(1, |_, _, out| out[0] = 1.0);
        let dom = DomainSpec::new(0.0, 10.0, vec![0.0], 2.0, 1.0).unwrap();
        let traj = solve_ivp(&id, &f, &dom, &[0.5], 1e-3).unwrap();
        assert_eq!(traj.termination, Termination::DomainExitContinuous);
        assert!(sup_dist(&traj.final_sample().x_left, &dom.center) > 2.0);
        assert!((traj.omega_estimate - 1.5).abs() < 0.01);

        // jump domain exit
        let d = Derivator::new(
            vec![ContinuousPiece::linear(0.0, 10.0, 1.0)],
            JumpRule::List(vec![JumpEvent {
                time: 1.0,
                gap: 1.0,
            }]),
            0.0,
        )
        .unwrap();
        let f = VectorField::with_jump(1, |_, _, out| out[0] = 0.0, |_, _, out| out[0] = 100.0);
        let dom = DomainSpec::new(0.0, 10.0, vec![0.0], 2.0, 1.0).unwrap();
        let traj = solve_ivp(&d, &f, &dom, &[0.5], 1e-2).unwrap();
        assert_eq!(traj.termination, Termination::DomainExitJump);
        assert_eq!(traj.omega_estimate, 1.0);
        assert!(sup_dist(&traj.final_sample().x_right, &dom.center) > 2.0);

        // horizon: nothing ever tripped
        let f = VectorField::new(1, |_, x, out| out[0] = -x[0]);
        let dom = DomainSpec::new(0.0, 3.0, vec![0.0], 2.0, 1.0).unwrap();
        let traj = solve_ivp(&id, &f, &dom, &[0.5], 1e-3).unwrap();
        assert_eq!(traj.termination, Termination::Horizon);
    }

    #[test]
    fn argument_errors() {
        let id = Derivator::identity();
        let f = linear_field(-1.0, 0.0);
        let dom = wide_domain(0.0, 1.0);
        assert!(matches!(
            solve_ivp(&id, &f, &dom, &[1.0], 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            solve_ivp(&id, &f, &dom, &[1.0], -0.1),
            Err(Error::InvalidArgument(_))
        ));
        let tight = DomainSpec::new(0.0, 1.0, vec![0.0], 2.0, 1.0).unwrap();
        assert!(matches!(
            solve_ivp(&id, &f, &tight, &[1.5], 1e-3),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn sample_times_strictly_increase_and_thinning_keeps_jumps() {
        let d = unit_jump_derivator();
        let f = linear_field(-0.4, -0.5);
        let dom = wide_domain(0.0, 5.0);
        let traj = solve_ivp_with(
            &d,
            &f,
            &dom,
            &[1.0],
            1e-3,
            &SolveOptions { record_every: 100 },
        )
        .unwrap();
        assert!(traj.samples.windows(2).all(|w| w[0].t < w[1].t));
        let jump_times: Vec<f64> = traj
            .samples
            .iter()
            .filter(|s| s.x_left != s.x_right)
            .map(|s| s.t)
            .collect();
        // the jump exactly at the horizon is applied and recorded too
        assert_eq!(jump_times, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        // g column matches the derivator at every sample
        for s in &traj.samples {
            assert_eq!(s.g, d.eval(s.t).unwrap());
        }
    }
}
