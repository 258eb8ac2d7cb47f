//! Left-continuous nondecreasing derivators `g`.
//!
//! A derivator is represented constructively: an ordered list of continuous
//! pieces (linear, plateau, or smooth with an analytic slope) tiling the
//! working window, plus a jump rule carrying the gaps `g(t⁺) − g(t)`. The
//! gap at a jump is never baked into a piece's value map, which keeps `g`
//! left-continuous mechanically: `eval(t)` accumulates gaps of jumps
//! *strictly before* `t`, and the gap at `t` itself is carried by
//! [`Derivator::right_limit`].
//!
//! Numerical differentiation of `g` is never performed; smooth pieces must
//! supply their slope analytically, and quadrature downstream consumes that
//! slope at its nodes.

use crate::error::{Error, Result};
use crate::exprdsl::{self, Expr};

/// Shape of `g` on one continuous piece.
#[derive(Debug, Clone)]
pub enum PieceProfile {
    /// Strictly increasing linear growth; a zero slope must be written as
    /// [`PieceProfile::Plateau`].
    Linear { slope: f64 },
    /// `g` constant on the piece.
    Plateau,
    /// Analytic value and slope maps of `t` (univariate expressions).
    Smooth { value: Expr, slope: Expr },
}

/// One continuous piece of `g` on the half-open interval `[start, end)`.
///
/// The last piece of a non-repeating derivator may have `end = +∞` when its
/// profile is `Linear` or `Plateau`.
#[derive(Debug, Clone)]
pub struct ContinuousPiece {
    pub start: f64,
    pub end: f64,
    pub profile: PieceProfile,
}

impl ContinuousPiece {
    pub fn linear(start: f64, end: f64, slope: f64) -> Self {
        ContinuousPiece {
            start,
            end,
            profile: PieceProfile::Linear { slope },
        }
    }

    pub fn plateau(start: f64, end: f64) -> Self {
        ContinuousPiece {
            start,
            end,
            profile: PieceProfile::Plateau,
        }
    }

    pub fn smooth(start: f64, end: f64, value: Expr, slope: Expr) -> Self {
        ContinuousPiece {
            start,
            end,
            profile: PieceProfile::Smooth { value, slope },
        }
    }
}

/// A single jump of `g`: `gap = g(time⁺) − g(time) > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub gap: f64,
}

/// Where the jumps of `g` live. Periodic rules resolve lazily per query
/// window, so long horizons never materialize the full jump set.
#[derive(Debug, Clone)]
pub enum JumpRule {
    /// Explicit strictly increasing jump times.
    List(Vec<JumpEvent>),
    /// Jump times `start + offset + k·period` for integer `k ≥ 0`, one
    /// arithmetic train per `(offset, gap)` entry with `offset ∈ [0, period)`.
    Periodic {
        period: f64,
        offsets: Vec<(f64, f64)>,
        start: f64,
    },
}

impl JumpRule {
    pub fn none() -> Self {
        JumpRule::List(Vec::new())
    }
}

/// Classification of a time point relative to `D_g` (jumps) and the plateau
/// set (interiors plus their endpoints).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    ContinuityPoint,
    JumpPoint,
    PlateauInterior,
    PlateauEndpoint,
}

/// A maximal sub-interval of a query window on which `g` is a single
/// continuous piece with no interior jump. Produced by
/// [`Derivator::segments`]; slope queries go through
/// [`Derivator::segment_slope`] so boundary evaluations (e.g. the final
/// Runge-Kutta stage of a step landing on the segment end) use this piece's
/// slope, not the next one's.
#[derive(Debug, Clone)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub plateau: bool,
    piece_index: usize,
    shift: f64,
}

/// A left-continuous nondecreasing derivator.
#[derive(Debug, Clone)]
pub struct Derivator {
    pieces: Vec<ContinuousPiece>,
    jumps: JumpRule,
    anchor: f64,
    /// cumulative continuous increment at each piece start
    prefix: Vec<f64>,
    /// value map at piece start, cached for smooth pieces
    value_at_start: Vec<f64>,
    /// `Some((span, increment))` when the piece layout repeats forever
    repeat: Option<(f64, f64)>,
}

const SMOOTH_SAMPLES: usize = 33;

impl Derivator {
    /// Build a derivator whose pieces tile `[pieces[0].start, last.end)`.
    pub fn new(pieces: Vec<ContinuousPiece>, jumps: JumpRule, anchor: f64) -> Result<Self> {
        Self::build(pieces, jumps, anchor, false)
    }

    /// Build a derivator whose (finite) piece layout repeats with period
    /// equal to the layout span, forever to the right.
    pub fn with_repeat(pieces: Vec<ContinuousPiece>, jumps: JumpRule, anchor: f64) -> Result<Self> {
        Self::build(pieces, jumps, anchor, true)
    }

    /// `g(t) = t` on `[0, ∞)`, no jumps.
    pub fn identity() -> Self {
        Self::new(
            vec![ContinuousPiece::linear(0.0, f64::INFINITY, 1.0)],
            JumpRule::none(),
            0.0,
        )
        .expect("identity derivator is valid")
    }

    fn build(
        pieces: Vec<ContinuousPiece>,
        jumps: JumpRule,
        anchor: f64,
        repeat: bool,
    ) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidDerivator("no pieces".into()));
        }
        if !anchor.is_finite() {
            return Err(Error::InvalidDerivator("anchor value must be finite".into()));
        }
        let n = pieces.len();
        for (i, p) in pieces.iter().enumerate() {
            if !p.start.is_finite() {
                return Err(Error::InvalidDerivator(format!(
                    "piece {i}: start must be finite"
                )));
            }
            if !(p.start < p.end) {
                return Err(Error::InvalidDerivator(format!(
                    "piece {i}: start {} must be < end {}",
                    p.start, p.end
                )));
            }
            if p.end.is_infinite() && (i + 1 != n || repeat) {
                return Err(Error::InvalidDerivator(format!(
                    "piece {i}: only the last piece of a non-repeating derivator may be unbounded"
                )));
            }
            if i + 1 < n && pieces[i + 1].start != p.end {
                return Err(Error::InvalidDerivator(format!(
                    "pieces {i} and {} do not tile: end {} vs start {}",
                    i + 1,
                    p.end,
                    pieces[i + 1].start
                )));
            }
            match &p.profile {
                PieceProfile::Linear { slope } => {
                    if !slope.is_finite() || *slope <= 0.0 {
                        return Err(Error::InvalidDerivator(format!(
                            "piece {i}: linear slope must be finite and > 0 (use a plateau piece for slope 0), got {slope}"
                        )));
                    }
                }
                PieceProfile::Plateau => {}
                PieceProfile::Smooth { value, slope } => {
                    validate_smooth(i, p, value, slope)?;
                }
            }
        }

        match &jumps {
            JumpRule::List(events) => {
                for (i, e) in events.iter().enumerate() {
                    if !e.time.is_finite() || !(e.gap > 0.0) || !e.gap.is_finite() {
                        return Err(Error::InvalidDerivator(format!(
                            "jump {i}: time must be finite and gap strictly positive"
                        )));
                    }
                    if i > 0 && !(events[i - 1].time < e.time) {
                        return Err(Error::InvalidDerivator(format!(
                            "jump times must be strictly increasing at index {i}"
                        )));
                    }
                }
            }
            JumpRule::Periodic {
                period,
                offsets,
                start,
            } => {
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::InvalidDerivator("periodic jump rule: period must be > 0".into()));
                }
                if !start.is_finite() {
                    return Err(Error::InvalidDerivator("periodic jump rule: start must be finite".into()));
                }
                for (i, (off, gap)) in offsets.iter().enumerate() {
                    if !(*off >= 0.0 && *off < *period) {
                        return Err(Error::InvalidDerivator(format!(
                            "periodic jump rule: offset {i} = {off} must lie in [0, period)"
                        )));
                    }
                    if !(*gap > 0.0) || !gap.is_finite() {
                        return Err(Error::InvalidDerivator(format!(
                            "periodic jump rule: gap {i} must be strictly positive"
                        )));
                    }
                    if i > 0 && !(offsets[i - 1].0 < *off) {
                        return Err(Error::InvalidDerivator(
                            "periodic jump rule: offsets must be strictly increasing".into(),
                        ));
                    }
                }
            }
        }

        let mut value_at_start = Vec::with_capacity(n);
        for p in &pieces {
            let v = match &p.profile {
                PieceProfile::Smooth { value, .. } => exprdsl::eval_univariate(value, p.start)
                    .map_err(|e| Error::InvalidDerivator(format!("smooth value map: {e}")))?,
                _ => 0.0,
            };
            value_at_start.push(v);
        }

        let mut prefix = Vec::with_capacity(n);
        let mut acc = 0.0;
        for (i, p) in pieces.iter().enumerate() {
            prefix.push(acc);
            if p.end.is_finite() {
                acc += piece_increment_raw(p, value_at_start[i], p.end)?;
            } else {
                acc = f64::INFINITY;
            }
        }

        let repeat = if repeat {
            let span = pieces[n - 1].end - pieces[0].start;
            if !acc.is_finite() {
                return Err(Error::InvalidDerivator(
                    "repeating layout must have a finite increment".into(),
                ));
            }
            Some((span, acc))
        } else {
            None
        };

        Ok(Derivator {
            pieces,
            jumps,
            anchor,
            prefix,
            value_at_start,
            repeat,
        })
    }

    /// The working window `[start, end)`; `end` is `+∞` for unbounded or
    /// repeating layouts.
    pub fn window(&self) -> (f64, f64) {
        let start = self.pieces[0].start;
        let end = if self.repeat.is_some() {
            f64::INFINITY
        } else {
            self.pieces[self.pieces.len() - 1].end
        };
        (start, end)
    }

    fn check_window(&self, t: f64) -> Result<()> {
        let (start, end) = self.window();
        if !t.is_finite() || t < start || t > end {
            return Err(Error::OutOfWindow { t, start, end });
        }
        Ok(())
    }

    /// Reduce `t` to `(tau, base)` where `tau` lies in the base layout and
    /// `base` is the continuous increment of the skipped periods.
    fn reduce(&self, t: f64) -> (f64, f64) {
        match self.repeat {
            None => (t, 0.0),
            Some((span, inc)) => {
                let start = self.pieces[0].start;
                let base_end = start + span;
                if t < base_end {
                    return (t, 0.0);
                }
                let mut n = ((t - start) / span).floor();
                let mut tau = t - n * span;
                if tau >= base_end {
                    n += 1.0;
                    tau = t - n * span;
                }
                if tau < start {
                    tau = start;
                }
                (tau, n * inc)
            }
        }
    }

    /// Index of the piece containing `tau`; the closed right end of the base
    /// layout maps to the last piece.
    fn piece_index(&self, tau: f64) -> usize {
        let mut lo = 0usize;
        let mut hi = self.pieces.len();
        while lo + 1 < hi {
            let mid = (lo + hi) / 2;
            if self.pieces[mid].start <= tau {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn continuous_part(&self, tau: f64) -> Result<f64> {
        let i = self.piece_index(tau);
        let p = &self.pieces[i];
        let inc = piece_increment_raw(p, self.value_at_start[i], tau.min(p.end))?;
        Ok(self.prefix[i] + inc)
    }

    /// `g(t)`. Gaps at jump times `s < t` are included; the gap at `t`
    /// itself is excluded (left continuity).
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_window(t)?;
        let (tau, base) = self.reduce(t);
        let cont = self.continuous_part(tau)?;
        Ok(self.anchor + base + cont + self.jump_mass_before(t))
    }

    /// `g(t⁺) = g(t) + μ_g({t})`.
    pub fn right_limit(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)? + self.jump_at(t)?)
    }

    /// `μ_g({t})`: the gap at `t`, zero iff `t ∉ D_g`.
    pub fn jump_at(&self, t: f64) -> Result<f64> {
        self.check_window(t)?;
        match &self.jumps {
            JumpRule::List(events) => Ok(events
                .iter()
                .find(|e| e.time == t)
                .map(|e| e.gap)
                .unwrap_or(0.0)),
            JumpRule::Periodic {
                period,
                offsets,
                start,
            } => {
                for (off, gap) in offsets {
                    let k = ((t - start - off) / period).round();
                    if k >= 0.0 && start + off + k * period == t {
                        return Ok(*gap);
                    }
                }
                Ok(0.0)
            }
        }
    }

    /// `μ_g([a, b)) = g(b) − g(a)`.
    pub fn measure_interval(&self, a: f64, b: f64) -> Result<f64> {
        if !(a <= b) {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(self.eval(b)? - self.eval(a)?)
    }

    /// Sum of gaps at jump times strictly before `t` (within the window).
    fn jump_mass_before(&self, t: f64) -> f64 {
        let (wstart, _) = self.window();
        match &self.jumps {
            JumpRule::List(events) => events
                .iter()
                .filter(|e| e.time >= wstart && e.time < t)
                .map(|e| e.gap)
                .sum(),
            JumpRule::Periodic {
                period,
                offsets,
                start,
            } => {
                let mut total = 0.0;
                for (off, gap) in offsets {
                    let first = start + off;
                    if first >= t {
                        continue;
                    }
                    // count of k >= 0 with first + k*period < t, with the
                    // boundary adjusted so it agrees bitwise with the
                    // enumeration in `jumps_in`
                    let mut k = ((t - first) / period).ceil();
                    if k < 0.0 {
                        k = 0.0;
                    }
                    while k > 0.0 && first + (k - 1.0) * period >= t {
                        k -= 1.0;
                    }
                    while first + k * period < t {
                        k += 1.0;
                    }
                    total += gap * k;
                }
                total
            }
        }
    }

    /// The jumps of `[a, b)`, strictly increasing.
    pub fn jumps_in(&self, a: f64, b: f64) -> Result<Vec<JumpEvent>> {
        if !(a <= b) {
            return Err(Error::InvalidInterval { a, b });
        }
        let (wstart, wend) = self.window();
        let lo = a.max(wstart);
        let hi = b.min(wend);
        if lo >= hi {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        match &self.jumps {
            JumpRule::List(events) => {
                out.extend(
                    events
                        .iter()
                        .filter(|e| e.time >= lo && e.time < hi)
                        .copied(),
                );
            }
            JumpRule::Periodic {
                period,
                offsets,
                start,
            } => {
                for (off, gap) in offsets {
                    let first = start + off;
                    let mut k = ((lo - first) / period).ceil();
                    if k < 0.0 {
                        k = 0.0;
                    }
                    while k > 0.0 && first + (k - 1.0) * period >= lo {
                        k -= 1.0;
                    }
                    while first + k * period < lo {
                        k += 1.0;
                    }
                    loop {
                        let time = first + k * period;
                        if time >= hi {
                            break;
                        }
                        out.push(JumpEvent { time, gap: *gap });
                        k += 1.0;
                    }
                }
                out.sort_by(|x, y| x.time.total_cmp(&y.time));
            }
        }
        Ok(out)
    }

    /// Classify `t` as a jump, plateau interior, plateau endpoint, or plain
    /// continuity point. Jumps win over plateau classifications.
    pub fn classify(&self, t: f64) -> Result<PointClass> {
        if self.jump_at(t)? > 0.0 {
            return Ok(PointClass::JumpPoint);
        }
        let (tau, _) = self.reduce(t);
        let i = self.piece_index(tau);
        let here_plateau = matches!(self.pieces[i].profile, PieceProfile::Plateau);
        if here_plateau && tau > self.pieces[i].start && tau < self.pieces[i].end {
            return Ok(PointClass::PlateauInterior);
        }
        // `tau` sits on a piece boundary (or the window edge): look at the
        // neighbor to the left, wrapping across the repeat period.
        let prev_plateau = if tau == self.pieces[i].start {
            if i > 0 {
                matches!(self.pieces[i - 1].profile, PieceProfile::Plateau)
            } else if self.repeat.is_some() && t > tau {
                matches!(
                    self.pieces[self.pieces.len() - 1].profile,
                    PieceProfile::Plateau
                )
            } else {
                false
            }
        } else {
            false
        };
        match (here_plateau, prev_plateau) {
            (true, true) => Ok(PointClass::PlateauInterior),
            (true, false) | (false, true) => Ok(PointClass::PlateauEndpoint),
            (false, false) => Ok(PointClass::ContinuityPoint),
        }
    }

    /// Split `[a, b)` at piece boundaries and jump times. Returned segments
    /// are contiguous, cover `[a, b)`, and each lies inside one piece with
    /// no interior jump.
    pub fn segments(&self, a: f64, b: f64) -> Result<Vec<Segment>> {
        if !(a <= b) {
            return Err(Error::InvalidInterval { a, b });
        }
        self.check_window(a)?;
        self.check_window(b)?;
        if a == b {
            return Ok(Vec::new());
        }
        let mut cuts: Vec<f64> = Vec::new();
        // piece boundaries in (a, b)
        match self.repeat {
            None => {
                for p in &self.pieces {
                    if p.start > a && p.start < b {
                        cuts.push(p.start);
                    }
                }
            }
            Some((span, _)) => {
                let start = self.pieces[0].start;
                let mut n = ((a - start) / span).floor();
                if n < 0.0 {
                    n = 0.0;
                }
                'outer: loop {
                    for p in &self.pieces {
                        let s = p.start + n * span;
                        if s >= b {
                            break 'outer;
                        }
                        if s > a {
                            cuts.push(s);
                        }
                    }
                    n += 1.0;
                }
            }
        }
        for e in self.jumps_in(a, b)? {
            if e.time > a {
                cuts.push(e.time);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut out = Vec::with_capacity(cuts.len() + 1);
        let mut lo = a;
        for cut in cuts.into_iter().chain(std::iter::once(b)) {
            if cut <= lo {
                continue;
            }
            let (tau, _) = self.reduce(lo);
            let i = self.piece_index(tau);
            out.push(Segment {
                start: lo,
                end: cut,
                plateau: matches!(self.pieces[i].profile, PieceProfile::Plateau),
                piece_index: i,
                shift: lo - tau,
            });
            lo = cut;
        }
        Ok(out)
    }

    /// Slope of `g` on a segment, valid on the closed interval
    /// `[segment.start, segment.end]`.
    pub fn segment_slope(&self, seg: &Segment, t: f64) -> Result<f64> {
        match &self.pieces[seg.piece_index].profile {
            PieceProfile::Linear { slope } => Ok(*slope),
            PieceProfile::Plateau => Ok(0.0),
            PieceProfile::Smooth { slope, .. } => {
                let v = exprdsl::eval_univariate(slope, t - seg.shift)?;
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        context: "derivator slope".into(),
                        t,
                    });
                }
                Ok(v)
            }
        }
    }

    /// Width of the widest plateau piece (0 when there is none).
    pub fn largest_plateau_span(&self) -> f64 {
        self.pieces
            .iter()
            .filter(|p| matches!(p.profile, PieceProfile::Plateau))
            .map(|p| p.end - p.start)
            .fold(0.0, f64::max)
    }

    pub fn pieces(&self) -> &[ContinuousPiece] {
        &self.pieces
    }

    pub fn jump_rule(&self) -> &JumpRule {
        &self.jumps
    }

    pub fn anchor_value(&self) -> f64 {
        self.anchor
    }

    pub fn repeats(&self) -> bool {
        self.repeat.is_some()
    }
}

fn piece_increment_raw(p: &ContinuousPiece, value_at_start: f64, tau: f64) -> Result<f64> {
    Ok(match &p.profile {
        PieceProfile::Linear { slope } => slope * (tau - p.start),
        PieceProfile::Plateau => 0.0,
        PieceProfile::Smooth { value, .. } => {
            exprdsl::eval_univariate(value, tau)? - value_at_start
        }
    })
}

fn validate_smooth(i: usize, p: &ContinuousPiece, value: &Expr, slope: &Expr) -> Result<()> {
    let end = if p.end.is_finite() {
        p.end
    } else {
        p.start + 100.0
    };
    let span = end - p.start;
    let h = (span * 1e-7).max(1e-9);
    for k in 0..SMOOTH_SAMPLES {
        let t = p.start + span * (k as f64 + 0.5) / SMOOTH_SAMPLES as f64;
        let s = exprdsl::eval_univariate(slope, t)
            .map_err(|e| Error::InvalidDerivator(format!("piece {i}: slope map: {e}")))?;
        if !s.is_finite() || s < -1e-12 {
            return Err(Error::InvalidDerivator(format!(
                "piece {i}: slope must be finite and >= 0 on the piece, got {s} at t = {t}"
            )));
        }
        // cheap typo catcher: the slope map should agree with a central
        // difference of the value map
        if k % 8 == 0 {
            let vp = exprdsl::eval_univariate(value, t + h)
                .map_err(|e| Error::InvalidDerivator(format!("piece {i}: value map: {e}")))?;
            let vm = exprdsl::eval_univariate(value, t - h)
                .map_err(|e| Error::InvalidDerivator(format!("piece {i}: value map: {e}")))?;
            let fd = (vp - vm) / (2.0 * h);
            if (fd - s).abs() > 1e-3 * (1.0 + s.abs()) {
                return Err(Error::InvalidDerivator(format!(
                    "piece {i}: slope map disagrees with value map at t = {t} (slope {s}, finite difference {fd})"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprdsl::parse_univariate;

    /// `g(t) = t + Σ_{k≥1} χ_[k,∞)(t)` on `[0, ∞)`.
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

    /// The day/night derivator: sine ramp on `[0,1)`, plateau on `[1,2)`,
    /// repeated with period 2.
    fn day_night_derivator() -> Derivator {
        let pi = std::f64::consts::PI;
        let value = parse_univariate(
            &format!("(sin({pi:?}*(t-0.5))+1)/2"),
            "t",
        )
        .unwrap();
        let slope = parse_univariate(
            &format!("{:?}*cos({pi:?}*(t-0.5))", pi / 2.0),
            "t",
        )
        .unwrap();
        Derivator::with_repeat(
            vec![
                ContinuousPiece::smooth(0.0, 1.0, value, slope),
                ContinuousPiece::plateau(1.0, 2.0),
            ],
            JumpRule::none(),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn eval_without_jumps_in_range() {
        let d = unit_jump_derivator();
        assert_eq!(d.eval(0.5).unwrap(), 0.5);
    }

    #[test]
    fn eval_accumulates_strictly_earlier_gaps() {
        let d = unit_jump_derivator();
        assert_eq!(d.eval(2.5).unwrap(), 4.5);
        // left continuity: the gap at 2 itself is excluded at t = 2
        assert_eq!(d.eval(2.0).unwrap(), 3.0);
        assert_eq!(d.right_limit(2.0).unwrap(), 4.0);
    }

    #[test]
    fn day_night_plateau_freezes_g() {
        let d = day_night_derivator();
        assert!((d.eval(1.75).unwrap() - 1.0).abs() < 1e-12);
        assert!((d.right_limit(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(d.measure_interval(1.0, 2.0).unwrap().abs() < 1e-12);
        // periodic extension: g(2.5) = g(1) + g(0.5)
        assert!((d.eval(2.5).unwrap() - 1.5).abs() < 1e-12);
        assert!((d.eval(200.0).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn right_limit_at_jump() {
        let d = Derivator::new(
            vec![ContinuousPiece::linear(0.0, f64::INFINITY, 1.0)],
            JumpRule::List(vec![JumpEvent {
                time: 1.0,
                gap: 1.0,
            }]),
            0.0,
        )
        .unwrap();
        assert_eq!(d.right_limit(1.0).unwrap(), 2.0);
        assert_eq!(d.right_limit(0.5).unwrap(), 0.5);
    }

    #[test]
    fn jump_at_reports_stored_gap() {
        let d = unit_jump_derivator();
        assert_eq!(d.jump_at(3.0).unwrap(), 1.0);
        assert_eq!(d.jump_at(3.5).unwrap(), 0.0);

        let e = Derivator::new(
            vec![ContinuousPiece::linear(0.0, 10.0, 1.0)],
            JumpRule::List(vec![JumpEvent {
                time: 2.0,
                gap: 0.25,
            }]),
            0.0,
        )
        .unwrap();
        assert_eq!(e.jump_at(2.0).unwrap(), 0.25);
    }

    #[test]
    fn measure_interval_examples() {
        let d = unit_jump_derivator();
        assert_eq!(d.measure_interval(0.5, 2.5).unwrap(), 4.0);
        assert_eq!(d.measure_interval(1.25, 1.25).unwrap(), 0.0);
    }

    #[test]
    fn jumps_in_periodic_day_cycle() {
        let d = Derivator::new(
            vec![ContinuousPiece::linear(0.0, f64::INFINITY, 1.0)],
            JumpRule::Periodic {
                period: 24.0,
                offsets: vec![(6.0, 1.0), (12.5, 1.0), (18.0, 1.0)],
                start: 0.0,
            },
            0.0,
        )
        .unwrap();
        let events = d.jumps_in(0.0, 48.0).unwrap();
        assert_eq!(events.len(), 6);
        assert!(events.windows(2).all(|w| w[0].time < w[1].time));
    }

    #[test]
    fn jumps_in_identity_empty_and_integer_window() {
        assert!(Derivator::identity().jumps_in(0.0, 100.0).unwrap().is_empty());
        let d = unit_jump_derivator();
        let times: Vec<f64> = d
            .jumps_in(0.5, 3.5)
            .unwrap()
            .iter()
            .map(|e| e.time)
            .collect();
        assert_eq!(times, vec![1.0, 2.0, 3.0]);
        // jump at the left endpoint is included, at the right excluded
        let times: Vec<f64> = d
            .jumps_in(1.0, 3.0)
            .unwrap()
            .iter()
            .map(|e| e.time)
            .collect();
        assert_eq!(times, vec![1.0, 2.0]);
    }

    #[test]
    fn classify_examples() {
        let day = day_night_derivator();
        assert_eq!(day.classify(1.5).unwrap(), PointClass::PlateauInterior);
        assert_eq!(day.classify(2.0).unwrap(), PointClass::PlateauEndpoint);
        assert_eq!(day.classify(1.0).unwrap(), PointClass::PlateauEndpoint);
        assert_eq!(day.classify(0.5).unwrap(), PointClass::ContinuityPoint);
        assert_eq!(day.classify(3.25).unwrap(), PointClass::PlateauInterior);

        let d = unit_jump_derivator();
        assert_eq!(d.classify(4.0).unwrap(), PointClass::JumpPoint);
    }

    #[test]
    fn out_of_window_is_an_error() {
        let d = Derivator::new(
            vec![ContinuousPiece::linear(0.0, 5.0, 1.0)],
            JumpRule::none(),
            0.0,
        )
        .unwrap();
        assert!(matches!(
            d.eval(5.5),
            Err(Error::OutOfWindow { .. })
        ));
        assert!(matches!(d.eval(-0.1), Err(Error::OutOfWindow { .. })));
        // the closed right end is still queryable (needed by measures)
        assert_eq!(d.eval(5.0).unwrap(), 5.0);
    }

    #[test]
    fn invalid_constructions_rejected() {
        // zero slope must be a plateau
        assert!(Derivator::new(
            vec![ContinuousPiece::linear(0.0, 1.0, 0.0)],
            JumpRule::none(),
            0.0
        )
        .is_err());
        // gap in the tiling
        assert!(Derivator::new(
            vec![
                ContinuousPiece::linear(0.0, 1.0, 1.0),
                ContinuousPiece::linear(1.5, 2.0, 1.0)
            ],
            JumpRule::none(),
            0.0
        )
        .is_err());
        // nonpositive jump gap
        assert!(Derivator::new(
            vec![ContinuousPiece::linear(0.0, 10.0, 1.0)],
            JumpRule::List(vec![JumpEvent {
                time: 1.0,
                gap: 0.0
            }]),
            0.0
        )
        .is_err());
        // periodic offset outside [0, period)
        assert!(Derivator::new(
            vec![ContinuousPiece::linear(0.0, 10.0, 1.0)],
            JumpRule::Periodic {
                period: 1.0,
                offsets: vec![(1.0, 1.0)],
                start: 0.0
            },
            0.0
        )
        .is_err());
        // slope map inconsistent with value map
        let value = parse_univariate("t*t", "t").unwrap();
        let slope = parse_univariate("3*t", "t").unwrap();
        assert!(Derivator::new(
            vec![ContinuousPiece::smooth(0.0, 1.0, value, slope)],
            JumpRule::none(),
            0.0
        )
        .is_err());
    }

    #[test]
    fn segments_split_at_jumps_and_boundaries() {
        let d = day_night_derivator();
        let segs = d.segments(0.5, 3.5).unwrap();
        let bounds: Vec<(f64, f64)> = segs.iter().map(|s| (s.start, s.end)).collect();
        assert_eq!(bounds, vec![(0.5, 1.0), (1.0, 2.0), (2.0, 3.0), (3.0, 3.5)]);
        assert!(!segs[0].plateau);
        assert!(segs[1].plateau);
        // slope at a segment's closed right end comes from that piece
        let s0 = &segs[0];
        let slope_end = d.segment_slope(s0, 1.0).unwrap();
        assert!(slope_end.abs() < 1e-12);

        let j = unit_jump_derivator();
        let segs = j.segments(0.5, 2.5).unwrap();
        let bounds: Vec<(f64, f64)> = segs.iter().map(|s| (s.start, s.end)).collect();
        assert_eq!(bounds, vec![(0.5, 1.0), (1.0, 2.0), (2.0, 2.5)]);
    }

    #[test]
    fn monotone_and_left_continuous_at_jumps() {
        let d = unit_jump_derivator();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=500 {
            let t = k as f64 * 0.01;
            let v = d.eval(t).unwrap();
            assert!(v >= prev, "monotonicity violated at t = {t}");
            prev = v;
        }
        // eval(t - h) -> eval(t) as h -> 0+ at the jump t = 2
        let target = d.eval(2.0).unwrap();
        for h in [1e-3, 1e-6, 1e-9] {
            assert!((d.eval(2.0 - h).unwrap() - target).abs() <= 2.0 * h);
        }
        // jump accounting
        let gap_sum: f64 = d
            .jumps_in(0.0, 4.5)
            .unwrap()
            .iter()
            .map(|e| e.gap)
            .sum();
        assert!(d.measure_interval(0.0, 4.5).unwrap() >= gap_sum);
    }
}
