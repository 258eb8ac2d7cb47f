//! Lebesgue–Stieltjes quadrature, the `g`-exponential `e_p(t, a)`, and the
//! Grönwall a-priori bound.
//!
//! Integrals follow the `∫_[a,b)` convention everywhere: the jump at `a` is
//! included, the jump at `b` excluded. The absolutely continuous part is
//! `Σ ∫ h(t)·g′(t) dt` over the smooth sub-segments of the window (adaptive
//! composite Gauss–Legendre, bisected until the relative tolerance holds;
//! plateau segments contribute nothing), and each jump `t_k ∈ [a, b)` adds
//! `h_jump(t_k)·μ_g({t_k})`.

use std::sync::Arc;

use crate::derivator::Derivator;
use crate::error::{Error, Result};
use crate::exprdsl::{self, TwoBranchExpr};

/// A fallible scalar function of time.
pub type ScalarFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// A scalar function of time with separate on/off-jump branches; the jump
/// branch defaults to the continuous one. This is how piecewise-on-`D_g`
/// data (`p`, `w`, `k`) enters the calculus.
#[derive(Clone)]
pub struct TwoBranchScalar {
    continuous: ScalarFn,
    jump: Option<ScalarFn>,
}

impl TwoBranchScalar {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TwoBranchScalar {
            continuous: Arc::new(move |t| Ok(f(t))),
            jump: None,
        }
    }

    pub fn with_jump(
        continuous: impl Fn(f64) -> f64 + Send + Sync + 'static,
        jump: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TwoBranchScalar {
            continuous: Arc::new(move |t| Ok(continuous(t))),
            jump: Some(Arc::new(move |t| Ok(jump(t)))),
        }
    }

    pub fn from_fallible(continuous: ScalarFn, jump: Option<ScalarFn>) -> Self {
        TwoBranchScalar { continuous, jump }
    }

    pub fn constant(c: f64) -> Self {
        TwoBranchScalar::new(move |_| c)
    }

    pub fn constant_with_jump(c: f64, j: f64) -> Self {
        TwoBranchScalar::with_jump(move |_| c, move |_| j)
    }

    /// Compile a [`TwoBranchExpr`] over `t` only.
    pub fn from_expr(e: &TwoBranchExpr) -> Self {
        let cont = e.continuous.clone();
        let jump = e.jump.clone();
        TwoBranchScalar {
            continuous: Arc::new(move |t| Ok(exprdsl::eval(&cont, t, &[])?)),
            jump: jump.map(|j| -> ScalarFn {
                Arc::new(move |t| Ok(exprdsl::eval(&j, t, &[])?))
            }),
        }
    }

    pub fn eval_continuous(&self, t: f64) -> Result<f64> {
        (self.continuous)(t)
    }

    pub fn eval_jump(&self, t: f64) -> Result<f64> {
        match &self.jump {
            Some(j) => j(t),
            None => (self.continuous)(t),
        }
    }
}

impl std::fmt::Debug for TwoBranchScalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TwoBranchScalar")
            .field("has_jump_branch", &self.jump.is_some())
            .finish()
    }
}

/// Options for the adaptive composite quadrature.
#[derive(Debug, Clone)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    /// Maximum bisection depth per smooth sub-segment.
    pub max_subdivisions: u32,
    /// Gauss–Legendre order of each panel.
    pub panel_order: usize,
    nodes: Vec<(f64, f64)>,
}

impl QuadratureOptions {
    pub fn new(rel_tol: f64, max_subdivisions: u32, panel_order: usize) -> Result<Self> {
        if !(rel_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "quadrature rel_tol must be > 0, got {rel_tol}"
            )));
        }
        if !(2..=64).contains(&panel_order) {
            return Err(Error::InvalidArgument(format!(
                "quadrature panel order must be in 2..=64, got {panel_order}"
            )));
        }
        Ok(QuadratureOptions {
            rel_tol,
            max_subdivisions,
            panel_order,
            nodes: legendre_nodes(panel_order),
        })
    }
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions::new(1e-10, 40, 15).expect("default options are valid")
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
fn legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_eval(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_eval(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out
}

/// `(P_n(x), P_n'(x))` via the three-term recurrence.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

struct Quadrature<'a, F: Fn(f64) -> Result<f64>> {
    f: F,
    opts: &'a QuadratureOptions,
}

impl<'a, F: Fn(f64) -> Result<f64>> Quadrature<'a, F> {
    fn panel(&self, a: f64, b: f64) -> Result<f64> {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in &self.opts.nodes {
            acc += w * (self.f)(mid + half * x)?;
        }
        Ok(acc * half)
    }

    fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let whole = self.panel(a, b)?;
        self.refine(a, b, whole, 0)
    }

    fn refine(&self, a: f64, b: f64, whole: f64, depth: u32) -> Result<f64> {
        let mid = 0.5 * (a + b);
        let left = self.panel(a, mid)?;
        let right = self.panel(mid, b)?;
        let refined = left + right;
        let err = (refined - whole).abs();
        // The f64::EPSILON·scale term keeps panels with internal cancellation
        // from recursing past what the arithmetic can distinguish.
        let scale = left.abs() + right.abs();
        if err == 0.0
            || err <= self.opts.rel_tol * refined.abs() + f64::EPSILON * scale
            || mid <= a
            || mid >= b
        {
            return Ok(refined);
        }
        if depth >= self.opts.max_subdivisions {
            return Err(Error::QuadratureDepth {
                a,
                b,
                max_subdivisions: self.opts.max_subdivisions,
            });
        }
        Ok(self.refine(a, mid, left, depth + 1)? + self.refine(mid, b, right, depth + 1)?)
    }
}

/// `∫_[a,b) h dμ_g`.
pub fn ls_integrate(
    d: &Derivator,
    h: &TwoBranchScalar,
    a: f64,
    b: f64,
    opts: &QuadratureOptions,
) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::InvalidInterval { a, b });
    }
    let mut total = 0.0;
    for seg in d.segments(a, b)? {
        if seg.plateau {
            continue;
        }
        let q = Quadrature {
            f: |t: f64| -> Result<f64> {
                let hv = h.eval_continuous(t)?;
                if !hv.is_finite() {
                    return Err(Error::NonFinite {
                        context: "integrand".into(),
                        t,
                    });
                }
                Ok(hv * d.segment_slope(&seg, t)?)
            },
            opts,
        };
        total += q.integrate(seg.start, seg.end)?;
    }
    for e in d.jumps_in(a, b)? {
        let hv = h.eval_jump(e.time)?;
        if !hv.is_finite() {
            return Err(Error::NonFinite {
                context: "integrand (jump branch)".into(),
                t: e.time,
            });
        }
        total += hv * e.gap;
    }
    Ok(total)
}

/// Jump times in `[a, b)` where `1 + p(t)·μ_g({t}) > 0` fails.
pub fn nonresonance_check(
    d: &Derivator,
    p: &TwoBranchScalar,
    a: f64,
    b: f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for e in d.jumps_in(a, b)? {
        let pj = p.eval_jump(e.time)?;
        if !(1.0 + pj * e.gap > 0.0) {
            out.push(e.time);
        }
    }
    Ok(out)
}

/// The `g`-exponential `e_p(t, a) = exp(∫_[a,t) p̃ dμ_g)` with
/// `p̃ = log(1 + p·μ_g({·}))/μ_g({·})` on `D_g` and `p̃ = p` elsewhere.
///
/// Errors with [`Error::Resonance`] at the first jump violating the
/// nonresonance condition.
pub fn g_exp(
    d: &Derivator,
    p: &TwoBranchScalar,
    a: f64,
    t: f64,
    opts: &QuadratureOptions,
) -> Result<f64> {
    if !(a <= t) {
        return Err(Error::InvalidInterval { a, b: t });
    }
    if a == t {
        return Ok(1.0);
    }
    let mut exponent = 0.0;
    for seg in d.segments(a, t)? {
        if seg.plateau {
            continue;
        }
        let q = Quadrature {
            f: |s: f64| -> Result<f64> {
                let pv = p.eval_continuous(s)?;
                if !pv.is_finite() {
                    return Err(Error::NonFinite {
                        context: "exponent of e_p".into(),
                        t: s,
                    });
                }
                Ok(pv * d.segment_slope(&seg, s)?)
            },
            opts,
        };
        exponent += q.integrate(seg.start, seg.end)?;
    }
    for e in d.jumps_in(a, t)? {
        let pj = p.eval_jump(e.time)?;
        let factor = 1.0 + pj * e.gap;
        if !(factor > 0.0) {
            return Err(Error::Resonance { t: e.time });
        }
        exponent += factor.ln();
    }
    Ok(exponent.exp())
}

/// The Grönwall bound
/// `e_p(t, t₀) · ( ∫_[t₀,t) e_p(s, t₀)⁻¹ · k(s) / (1 + p(s)·μ_g({s})) dμ_g(s) + u₀ )`,
/// dominating any `u` with `u′_g ≤ k + p·u` and `u(t₀) = u₀`.
///
/// Precondition: `p ≥ 0` μ_g-a.e. (which makes nonresonance automatic).
pub fn apriori_bound(
    d: &Derivator,
    k: &TwoBranchScalar,
    p: &TwoBranchScalar,
    u0: f64,
    t0: f64,
    t: f64,
    opts: &QuadratureOptions,
) -> Result<f64> {
    if !(t0 <= t) {
        return Err(Error::InvalidInterval { a: t0, b: t });
    }
    let d2 = d.clone();
    let d3 = d.clone();
    let k2 = k.clone();
    let k3 = k.clone();
    let p2 = p.clone();
    let p3 = p.clone();
    let opts2 = opts.clone();
    let opts3 = opts.clone();
    let integrand = TwoBranchScalar::from_fallible(
        Arc::new(move |s: f64| -> Result<f64> {
            // off jumps the divisor 1 + p·μ_g({s}) is 1
            let ep = g_exp(&d2, &p2, t0, s, &opts2)?;
            Ok(k2.eval_continuous(s)? / ep)
        }),
        Some(Arc::new(move |s: f64| -> Result<f64> {
            let ep = g_exp(&d3, &p3, t0, s, &opts3)?;
            let gap = d3.jump_at(s)?;
            let div = 1.0 + p3.eval_jump(s)? * gap;
            if !(div > 0.0) {
                return Err(Error::Resonance { t: s });
            }
            Ok(k3.eval_jump(s)? / (ep * div))
        })),
    );
    let integral = ls_integrate(d, &integrand, t0, t, opts)?;
    Ok(g_exp(d, p, t0, t, opts)? * (integral + u0))
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

    fn opts() -> QuadratureOptions {
        QuadratureOptions::default()
    }

    #[test]
    fn lebesgue_measure_of_constant_one() {
        let d = Derivator::identity();
        let one = TwoBranchScalar::constant(1.0);
        let v = ls_integrate(&d, &one, 0.0, 3.0, &opts()).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_one_integral_equals_measure() {
        let d = unit_jump_derivator();
        let one = TwoBranchScalar::constant(1.0);
        let v = ls_integrate(&d, &one, 0.0, 2.5, &opts()).unwrap();
        assert!((v - 4.5).abs() < 1e-10);
        let m = d.measure_interval(0.0, 2.5).unwrap();
        assert!((v - m).abs() < 1e-10);
    }

    #[test]
    fn rational_weight_with_impulses() {
        // w = 2t/(1+t²) off jumps, −ν(2+ν) = 3/4 at jumps (ν = −3/2);
        // ∫_[0,3) = log(10) + 2·(3/4)
        let d = unit_jump_derivator();
        let nu = -1.5f64;
        let w = TwoBranchScalar::with_jump(
            |t| 2.0 * t / (1.0 + t * t),
            move |_| -nu * (2.0 + nu),
        );
        let v = ls_integrate(&d, &w, 0.0, 3.0, &opts()).unwrap();
        let expect = 10.0f64.ln() + 1.5;
        assert!((v - expect).abs() < 1e-9 * expect, "got {v}, want {expect}");
    }

    #[test]
    fn non_finite_integrand_reports_offending_time() {
        let d = Derivator::identity();
        let bad = TwoBranchScalar::new(|t| if t > 0.5 { f64::INFINITY } else { 1.0 });
        match ls_integrate(&d, &bad, 0.0, 1.0, &opts()) {
            Err(Error::NonFinite { t, .. }) => assert!(t > 0.5),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn classical_exponential() {
        let d = Derivator::identity();
        for c in [-1.5, -0.4, 0.0, 0.7] {
            let p = TwoBranchScalar::constant(c);
            for t in [0.0, 0.5, 2.0, 5.0] {
                let v = g_exp(&d, &p, 0.0, t, &opts()).unwrap();
                let want = (c * t).exp();
                assert!((v - want).abs() <= 1e-11 * want.max(1.0));
            }
        }
    }

    #[test]
    fn g_exponential_with_impulses() {
        // c = −0.4 off jumps, ν = −0.5 at jumps, D_g = ℕ: one jump in [0,2)
        let d = unit_jump_derivator();
        let p = TwoBranchScalar::constant_with_jump(-0.4, -0.5);
        let v = g_exp(&d, &p, 0.0, 2.0, &opts()).unwrap();
        let want = (-0.8f64).exp() * 0.5;
        assert!((v - want).abs() < 1e-9 * want, "got {v}, want {want}");
        assert!(v > 0.0);
        assert_eq!(g_exp(&d, &p, 1.5, 1.5, &opts()).unwrap(), 1.0);
    }

    #[test]
    fn nonresonance_examples() {
        let d = unit_jump_derivator();
        let fine = TwoBranchScalar::constant_with_jump(0.0, -0.5);
        assert!(nonresonance_check(&d, &fine, 0.0, 10.0).unwrap().is_empty());

        let critical = TwoBranchScalar::constant_with_jump(0.0, -1.0);
        assert_eq!(nonresonance_check(&d, &critical, 0.0, 10.5).unwrap().len(), 10);

        let negative = TwoBranchScalar::constant_with_jump(0.0, -2.0);
        assert_eq!(nonresonance_check(&d, &negative, 0.0, 10.5).unwrap().len(), 10);
        assert!(matches!(
            g_exp(&d, &negative, 0.0, 2.0, &opts()),
            Err(Error::Resonance { t }) if t == 1.0
        ));
    }

    #[test]
    fn apriori_bound_degenerate_cases() {
        let d = unit_jump_derivator();
        let zero = TwoBranchScalar::constant(0.0);
        let p = TwoBranchScalar::constant_with_jump(0.3, 0.2);
        let u0 = 2.0;

        // k ≡ 0: homogeneous case
        let b = apriori_bound(&d, &zero, &p, u0, 0.0, 3.5, &opts()).unwrap();
        let want = u0 * g_exp(&d, &p, 0.0, 3.5, &opts()).unwrap();
        assert!((b - want).abs() < 1e-9 * want);

        // k ≡ 0, p ≡ 0: constant
        let b = apriori_bound(&d, &zero, &zero, u0, 0.0, 7.0, &opts()).unwrap();
        assert!((b - u0).abs() < 1e-12);

        // k ≡ 1, p ≡ 0, g identity: plain integration
        let id = Derivator::identity();
        let one = TwoBranchScalar::constant(1.0);
        let b = apriori_bound(&id, &one, &zero, u0, 1.0, 4.0, &opts()).unwrap();
        assert!((b - (u0 + 3.0)).abs() < 1e-10);
    }

    #[test]
    fn semigroup_and_linearity() {
        let d = unit_jump_derivator();
        let p = TwoBranchScalar::with_jump(|t| -0.3 + 0.05 * t.sin(), |_| 0.4);
        let (a, s, t) = (0.25, 2.7, 6.3);
        let o = opts();
        let lhs = g_exp(&d, &p, a, t, &o).unwrap();
        let rhs = g_exp(&d, &p, a, s, &o).unwrap() * g_exp(&d, &p, s, t, &o).unwrap();
        assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs());

        let h1 = TwoBranchScalar::new(|t| t.cos());
        let h2 = TwoBranchScalar::new(|t| 1.0 / (1.0 + t));
        let combo = TwoBranchScalar::new(|t| 2.0 * t.cos() - 3.0 / (1.0 + t));
        let v1 = ls_integrate(&d, &h1, 0.0, 5.0, &o).unwrap();
        let v2 = ls_integrate(&d, &h2, 0.0, 5.0, &o).unwrap();
        let vc = ls_integrate(&d, &combo, 0.0, 5.0, &o).unwrap();
        assert!((vc - (2.0 * v1 - 3.0 * v2)).abs() <= 1e-9 * vc.abs().max(1.0));
    }

    #[test]
    fn plateau_segments_contribute_nothing() {
        let d = Derivator::new(
            vec![
                ContinuousPiece::linear(0.0, 1.0, 2.0),
                ContinuousPiece::plateau(1.0, 3.0),
                ContinuousPiece::linear(3.0, 5.0, 1.0),
            ],
            JumpRule::none(),
            0.0,
        )
        .unwrap();
        let one = TwoBranchScalar::constant(1.0);
        let o = opts();
        assert!(ls_integrate(&d, &one, 1.0, 3.0, &o).unwrap().abs() < 1e-14);
        let v = ls_integrate(&d, &one, 0.0, 5.0, &o).unwrap();
        assert!((v - 4.0).abs() < 1e-10);
    }
}
