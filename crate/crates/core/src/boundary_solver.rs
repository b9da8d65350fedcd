//! Phase boundaries in the (T, B) plane.
//!
//! Four boundary kinds, each the zero set of a scalar residual:
//!
//! | kind              | residual                                  |
//! |-------------------|-------------------------------------------|
//! | `ZeroBoundary`    | `S''(0)`                                  |
//! | `HalfPiBoundary`  | `S''(pi/2)`                               |
//! | `EqualEndpoints`  | `S_0 - S_pi/2`                            |
//! | `ZeroPrime`       | `S_0 - S_theta`, `-inf` with no interior minimum |
//!
//! Roots are found by scanning a line for sign changes and bisecting each
//! one. The `ZeroPrime` residual jumps to `-inf` wherever the interior
//! minimum disappears, and the other residuals can jump where a state
//! degenerates, so bisection may converge onto a discontinuity instead of
//! a zero. Such candidates are told apart by the size of the residual at
//! the converged bracket and dropped.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::deficit_optimizer::{Branch, Optimizer};
use crate::entropy::log_ratio_over_difference;
use crate::error::{Error, Result};
use crate::golden;
use crate::measurement_entropy::{
    branch_s0, branch_shalfpi, second_derivative_at_0, second_derivative_at_halfpi,
};
use crate::spin_model::{thermal_state, ModelParams};

/// Lowest temperature a bracket is clipped to.
pub const T_BRACKET_FLOOR: f64 = 1e-3;

/// Offset used to read the branch labels on either side of a curve point.
pub const PHYSICAL_PROBE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BoundaryKind {
    ZeroBoundary,
    HalfPiBoundary,
    EqualEndpoints,
    ZeroPrime,
}

impl BoundaryKind {
    pub const ALL: [BoundaryKind; 4] = [
        BoundaryKind::ZeroBoundary,
        BoundaryKind::HalfPiBoundary,
        BoundaryKind::EqualEndpoints,
        BoundaryKind::ZeroPrime,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BoundaryKind::ZeroBoundary => "zero",
            BoundaryKind::HalfPiBoundary => "halfpi",
            BoundaryKind::EqualEndpoints => "equal-endpoints",
            BoundaryKind::ZeroPrime => "zero-prime",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == s)
    }

    /// Residual a converged root must reach.
    pub fn residual_tolerance(self) -> f64 {
        match self {
            BoundaryKind::ZeroPrime => 1e-10,
            _ => 1e-8,
        }
    }

    /// The two branches a physical stretch of this curve separates.
    pub fn separates(self) -> (Branch, Branch) {
        match self {
            BoundaryKind::ZeroBoundary | BoundaryKind::ZeroPrime => {
                (Branch::Zero, Branch::Interior)
            }
            BoundaryKind::HalfPiBoundary => (Branch::Interior, Branch::HalfPi),
            BoundaryKind::EqualEndpoints => (Branch::Zero, Branch::HalfPi),
        }
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Defining residual of `kind` at `p`. NaN where the kind carries no
/// information (fully degenerate state).
pub fn residual(kind: BoundaryKind, p: &ModelParams) -> f64 {
    residual_with(kind, p, &Optimizer::default())
}

fn residual_with(kind: BoundaryKind, p: &ModelParams, optimizer: &Optimizer) -> f64 {
    let s = thermal_state(p);
    match kind {
        BoundaryKind::ZeroBoundary => second_derivative_at_0(&s),
        BoundaryKind::HalfPiBoundary => second_derivative_at_halfpi(&s).unwrap_or(f64::NAN),
        BoundaryKind::EqualEndpoints => branch_s0(&s) - branch_shalfpi(&s),
        BoundaryKind::ZeroPrime => match optimizer.scan_profile(&s) {
            Ok(profile) => match profile.deepest_minimum() {
                Some(m) => branch_s0(&s) - m.entropy,
                None => f64::NEG_INFINITY,
            },
            Err(_) => f64::NAN,
        },
    }
}

/// A scan line: one coordinate held fixed, the other unknown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ScanLine {
    /// Fixed field, solve for temperature.
    AtB(f64),
    /// Fixed temperature, solve for field.
    AtT(f64),
}

impl ScanLine {
    pub fn point(self, x: f64) -> (f64, f64) {
        match self {
            ScanLine::AtB(b) => (x, b),
            ScanLine::AtT(t) => (t, x),
        }
    }

    fn params(self, template: &ModelParams, x: f64) -> Result<ModelParams> {
        let (t, b) = self.point(x);
        template.at(t, b)
    }

    fn clip(self, lo: f64, hi: f64) -> (f64, f64) {
        match self {
            ScanLine::AtB(_) => (lo.max(T_BRACKET_FLOOR), hi.max(T_BRACKET_FLOOR)),
            ScanLine::AtT(_) => (lo, hi),
        }
    }
}

/// A converged root. `lo`/`hi` is the final bracket in the unknown
/// coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub t: f64,
    pub b: f64,
    pub residual: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solver {
    pub scan_points: usize,
    pub width_tolerance: f64,
    /// Converged candidates with a larger residual are discontinuities.
    pub reject_above: f64,
    pub optimizer: Optimizer,
}

impl Default for Solver {
    fn default() -> Self {
        Self {
            scan_points: 32,
            width_tolerance: 1e-7,
            reject_above: 1e-6,
            optimizer: Optimizer::default(),
        }
    }
}

#[derive(Clone, Copy)]
struct Sample {
    x: f64,
    f: f64,
}

fn positive(f: f64) -> bool {
    f >= 0.0
}

impl Solver {
    fn eval(&self, kind: BoundaryKind, template: &ModelParams, line: ScanLine, x: f64) -> f64 {
        match line.params(template, x) {
            Ok(p) => residual_with(kind, &p, &self.optimizer),
            Err(_) => f64::NAN,
        }
    }

    /// Every converged root of `kind` on `line` within `bracket`, in
    /// increasing order of the unknown.
    pub fn roots(
        &self,
        kind: BoundaryKind,
        template: &ModelParams,
        line: ScanLine,
        bracket: (f64, f64),
    ) -> Result<Vec<Root>> {
        let (lo, hi) = line.clip(bracket.0.min(bracket.1), bracket.0.max(bracket.1));
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::InvalidArgument(format!(
                "empty bracket [{lo}, {hi}]"
            )));
        }
        let n = self.scan_points.max(2);
        let samples: Vec<Sample> = (0..=n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / n as f64;
                Sample {
                    x,
                    f: self.eval(kind, template, line, x),
                }
            })
            .filter(|s| !s.f.is_nan())
            .collect();
        let mut roots = Vec::new();
        for pair in samples.windows(2) {
            if positive(pair[0].f) != positive(pair[1].f) {
                if let Some(root) = self.bisect(kind, template, line, pair[0], pair[1]) {
                    roots.push(root);
                }
            }
        }
        Ok(roots)
    }

    fn bisect(
        &self,
        kind: BoundaryKind,
        template: &ModelParams,
        line: ScanLine,
        mut lo: Sample,
        mut hi: Sample,
    ) -> Option<Root> {
        let tol = kind.residual_tolerance();
        let best = |lo: &Sample, hi: &Sample| {
            if lo.f.abs() <= hi.f.abs() {
                *lo
            } else {
                *hi
            }
        };
        for _ in 0..200 {
            let width = hi.x - lo.x;
            if width <= self.width_tolerance && best(&lo, &hi).f.abs() <= tol {
                break;
            }
            let mid = 0.5 * (lo.x + hi.x);
            if mid <= lo.x || mid >= hi.x {
                break;
            }
            let f = self.eval(kind, template, line, mid);
            if f.is_nan() {
                log::debug!("{kind} residual undefined at {mid} on {line:?}");
                return None;
            }
            let s = Sample { x: mid, f };
            if positive(f) == positive(lo.f) {
                lo = s;
            } else {
                hi = s;
            }
        }
        let root = best(&lo, &hi);
        if root.f.is_nan() || root.f.abs() > self.reject_above {
            log::debug!(
                "{kind}: discarding discontinuity near {} on {line:?} (residual {:e})",
                root.x,
                root.f
            );
            return None;
        }
        if root.f.abs() > tol {
            log::warn!(
                "{kind}: root at {} on {line:?} only reached residual {:e}",
                root.x,
                root.f
            );
        }
        let (t, b) = line.point(root.x);
        Some(Root {
            t,
            b,
            residual: root.f,
            lo: lo.x,
            hi: hi.x,
        })
    }

    /// The single root in `bracket`.
    pub fn solve(
        &self,
        kind: BoundaryKind,
        template: &ModelParams,
        line: ScanLine,
        bracket: (f64, f64),
    ) -> Result<Root> {
        let mut roots = self.roots(kind, template, line, bracket)?;
        match roots.len() {
            0 => Err(Error::NoRoot {
                kind: kind.label().into(),
                lo: bracket.0,
                hi: bracket.1,
            }),
            1 => Ok(roots.remove(0)),
            count => Err(Error::AmbiguousBracket {
                kind: kind.label().into(),
                lo: bracket.0,
                hi: bracket.1,
                count,
            }),
        }
    }

    /// Root nearest to `guess`, searched in growing windows around it.
    pub fn solve_near(
        &self,
        kind: BoundaryKind,
        template: &ModelParams,
        line: ScanLine,
        guess: f64,
    ) -> Result<Root> {
        const WINDOWS: [f64; 6] = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2];
        for w in WINDOWS {
            let roots = self.roots(kind, template, line, (guess - w, guess + w))?;
            let unknown = |r: &Root| match line {
                ScanLine::AtB(_) => r.t,
                ScanLine::AtT(_) => r.b,
            };
            if let Some(r) = roots.into_iter().min_by(|x, y| {
                (unknown(x) - guess)
                    .abs()
                    .total_cmp(&(unknown(y) - guess).abs())
            }) {
                return Ok(r);
            }
        }
        Err(Error::NoRoot {
            kind: kind.label().into(),
            lo: guess - WINDOWS[WINDOWS.len() - 1],
            hi: guess + WINDOWS[WINDOWS.len() - 1],
        })
    }
}

/// Single root of `kind` on `line` inside `bracket`, with default settings.
pub fn solve_boundary_on_line(
    kind: BoundaryKind,
    template: &ModelParams,
    line: ScanLine,
    bracket: (f64, f64),
) -> Result<Root> {
    Solver::default().solve(kind, template, line, bracket)
}

/// Which coordinate a trace steps through. The other one is solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MarchAxis {
    B,
    T,
}

impl MarchAxis {
    fn line(self, x: f64) -> ScanLine {
        match self {
            MarchAxis::B => ScanLine::AtB(x),
            MarchAxis::T => ScanLine::AtT(x),
        }
    }

    fn split(self, t: f64, b: f64) -> (f64, f64) {
        match self {
            MarchAxis::B => (b, t),
            MarchAxis::T => (t, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct March {
    pub axis: MarchAxis,
    pub start: f64,
    pub end: f64,
    /// Magnitude; the sign follows `end - start`.
    pub step: f64,
    /// Bracket in the unknown coordinate for the first root.
    pub seed: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub b: f64,
    pub residual: f64,
    pub is_physical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Termination {
    /// March coordinate of the last attempted step.
    pub at: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCurve {
    pub kind: BoundaryKind,
    pub j: f64,
    pub jz: f64,
    pub axis: MarchAxis,
    pub points: Vec<CurvePoint>,
    /// Set when the curve stopped before the end of the march.
    pub termination: Option<Termination>,
}

impl BoundaryCurve {
    pub fn is_physical(&self) -> bool {
        self.points.iter().any(|p| p.is_physical)
    }

    pub fn is_complete(&self) -> bool {
        self.termination.is_none()
    }

    /// Unknown coordinate interpolated linearly at march coordinate `x`,
    /// if `x` lies within the traced span.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .map(|p| self.axis.split(p.t, p.b))
            .collect();
        pts.windows(2).find_map(|w| {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            let inside = (x0 <= x && x <= x1) || (x1 <= x && x <= x0);
            if !inside {
                return None;
            }
            if x1 == x0 {
                return Some(y0);
            }
            Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
        })
    }

    fn template(&self) -> Result<ModelParams> {
        ModelParams::new(self.j, self.jz, 0.0, 1.0)
    }
}

/// Whether the optimizer labels on both sides of `(t, b)` are the pair of
/// branches `kind` separates.
pub fn is_physical_at(kind: BoundaryKind, template: &ModelParams, t: f64, b: f64) -> bool {
    let opt = Optimizer::default();
    let label = |t: f64, b: f64| {
        template
            .at(t.max(T_BRACKET_FLOOR), b)
            .and_then(|p| opt.optimize(&p))
            .map(|r| r.branch)
            .ok()
    };
    let (x, y) = kind.separates();
    let matches = |l: Option<Branch>, r: Option<Branch>| match (l, r) {
        (Some(l), Some(r)) => (l == x && r == y) || (l == y && r == x),
        _ => false,
    };
    let h = PHYSICAL_PROBE;
    matches(label(t - h, b), label(t + h, b)) || matches(label(t, b - h), label(t, b + h))
}

/// Follows a curve of `kind` through the march, seeding each bracket from
/// the previous roots. Steps are halved on failure; the curve ends where
/// no root turns up even at 1/64 of the step.
pub fn trace_boundary(
    kind: BoundaryKind,
    template: &ModelParams,
    march: March,
) -> Result<BoundaryCurve> {
    trace_with(&Solver::default(), kind, template, march)
}

pub fn trace_with(
    solver: &Solver,
    kind: BoundaryKind,
    template: &ModelParams,
    march: March,
) -> Result<BoundaryCurve> {
    if march.step.is_nan()
        || march.step <= 0.0
        || !march.start.is_finite()
        || !march.end.is_finite()
    {
        return Err(Error::InvalidArgument(format!("invalid march {march:?}")));
    }
    let dir = if march.end >= march.start { 1.0 } else { -1.0 };
    let past_end = |x: f64| (x - march.end) * dir > -1e-9 * march.step;
    let min_step = march.step / 64.0;

    let mut found: Vec<(f64, Root)> = Vec::new();
    let mut termination = None;
    let mut x = march.start;
    let mut step = march.step;
    loop {
        let line = march.axis.line(x);
        let attempt = match found.as_slice() {
            [] => solver.solve(kind, template, line, march.seed),
            [(_, last)] => {
                solver.solve_near(kind, template, line, march.axis.split(last.t, last.b).1)
            }
            [.., (x0, r0), (x1, r1)] => {
                let (y0, y1) = (
                    march.axis.split(r0.t, r0.b).1,
                    march.axis.split(r1.t, r1.b).1,
                );
                let guess = if x1 != x0 {
                    y1 + (y1 - y0) * (x - x1) / (x1 - x0)
                } else {
                    y1
                };
                solver.solve_near(kind, template, line, guess)
            }
        };
        match attempt {
            Ok(root) => {
                found.push((x, root));
                if x == march.end {
                    break;
                }
                step = (step * 2.0).min(march.step);
            }
            Err(e) if found.is_empty() => {
                if matches!(e, Error::AmbiguousBracket { .. }) {
                    return Err(e);
                }
                // keep looking for the start of the curve
            }
            Err(e) => {
                let last = found.last().map(|(x, _)| *x).unwrap_or(march.start);
                if step / 2.0 < min_step {
                    termination = Some(Termination {
                        at: x,
                        reason: e.to_string(),
                    });
                    break;
                }
                step /= 2.0;
                x = last;
            }
        }
        if x == march.end {
            if found.is_empty() {
                termination = Some(Termination {
                    at: x,
                    reason: format!("no {kind} root anywhere along the march"),
                });
            }
            break;
        }
        x += dir * step;
        if past_end(x) {
            x = march.end;
        }
    }

    let points = found
        .into_iter()
        .map(|(_, r)| CurvePoint {
            t: r.t,
            b: r.b,
            residual: r.residual,
            is_physical: is_physical_at(kind, template, r.t, r.b),
        })
        .collect();
    Ok(BoundaryCurve {
        kind,
        j: template.j(),
        jz: template.jz(),
        axis: march.axis,
        points,
        termination,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriplePoint {
    pub t: f64,
    pub b: f64,
    pub meeting_kinds: Vec<BoundaryKind>,
}

/// Distance within which every supplied curve must pass the triple point.
pub const TRIPLE_POINT_TOLERANCE: f64 = 1e-4;

/// Intersection of the first two curves (both marched in B), refined by
/// bisection on the difference of their freshly solved temperatures.
/// Every supplied curve is then re-solved at the crossing field and must
/// pass within [`TRIPLE_POINT_TOLERANCE`].
pub fn find_triple_point(curves: &[BoundaryCurve]) -> Option<TriplePoint> {
    find_triple_point_with(&Solver::default(), curves)
}

pub fn find_triple_point_with(solver: &Solver, curves: &[BoundaryCurve]) -> Option<TriplePoint> {
    let (c1, c2) = match curves {
        [c1, c2, ..] if c1.axis == MarchAxis::B && c2.axis == MarchAxis::B => (c1, c2),
        _ => return None,
    };
    let template = c1.template().ok()?;

    let diff_on_polyline = |b: f64| Some(c1.interpolate(b)? - c2.interpolate(b)?);
    let mut bs: Vec<f64> = c1.points.iter().map(|p| p.b).collect();
    bs.sort_by(f64::total_cmp);
    let mut bracket = None;
    let mut prev: Option<(f64, f64)> = None;
    for &b in &bs {
        let Some(d) = diff_on_polyline(b) else {
            continue;
        };
        if let Some((b0, d0)) = prev {
            if (d0 >= 0.0) != (d >= 0.0) {
                bracket = Some((b0, b));
                break;
            }
        }
        prev = Some((b, d));
    }
    let (mut lo, mut hi) = bracket?;

    let fresh = |b: f64| -> Option<(f64, f64)> {
        let g1 = c1.interpolate(b)?;
        let g2 = c2.interpolate(b)?;
        let t1 = solver
            .solve_near(c1.kind, &template, ScanLine::AtB(b), g1)
            .ok()?
            .t;
        let t2 = solver
            .solve_near(c2.kind, &template, ScanLine::AtB(b), g2)
            .ok()?
            .t;
        Some((t1, t2))
    };
    let sign_at = |b: f64| fresh(b).map(|(t1, t2)| t1 - t2 >= 0.0);
    let s_lo = sign_at(lo)?;
    if sign_at(hi)? == s_lo {
        return None;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        match sign_at(mid) {
            Some(s) if s == s_lo => lo = mid,
            Some(_) => hi = mid,
            None => return None,
        }
    }
    let b = 0.5 * (lo + hi);
    let (t1, t2) = fresh(b)?;
    let t = 0.5 * (t1 + t2);

    let mut meeting_kinds = Vec::new();
    for c in curves {
        let guess = c.interpolate(b).unwrap_or(t);
        let passes = c.axis == MarchAxis::B
            && solver
                .solve_near(c.kind, &template, ScanLine::AtB(b), guess)
                .is_ok_and(|r| (r.t - t).abs() <= TRIPLE_POINT_TOLERANCE);
        if !passes {
            log::warn!("{} curve misses the crossing at ({t}, {b})", c.kind);
            return None;
        }
        if !meeting_kinds.contains(&c.kind) {
            meeting_kinds.push(c.kind);
        }
    }
    Some(TriplePoint {
        t,
        b,
        meeting_kinds,
    })
}

/// Zero-boundary equation at `Jz = 0` written in elementary functions:
/// right side minus left side of
/// `sinh^2(J/T) [ln(e^{B/T}/c)/(e^{B/T}-c) + ln(c/e^{-B/T})/(c-e^{-B/T})]
///   = 2(B/T) sinh(B/T) - 2 (cosh(B/T) - c) ln c`, `c = cosh(J/T)`.
/// Equal to `2 Z S''(0)`, so it shares the sign of the zero-boundary
/// residual.
pub fn xx_boundary_residual(p: &ModelParams) -> Result<f64> {
    if p.jz() != 0.0 {
        return Err(Error::InvalidParams(format!(
            "the XX residual needs Jz = 0, got {}",
            p.jz()
        )));
    }
    let (x, y) = (p.b() / p.t(), p.j() / p.t());
    let c = y.cosh();
    let lhs = y.sinh().powi(2)
        * (log_ratio_over_difference(x.exp(), c) + log_ratio_over_difference(c, (-x).exp()));
    let rhs = 2.0 * x * x.sinh() - 2.0 * (x.cosh() - c) * c.ln();
    Ok(rhs - lhs)
}

/// Extremum of a curve's unknown coordinate as a function of the march
/// coordinate over `range`, each evaluation a fresh solve inside
/// `bracket`. Returns `(t, b)`.
pub fn locate_curve_extremum(
    kind: BoundaryKind,
    template: &ModelParams,
    axis: MarchAxis,
    range: (f64, f64),
    bracket: (f64, f64),
    find_max: bool,
) -> Result<(f64, f64)> {
    let solver = Solver {
        width_tolerance: 1e-13,
        ..Solver::default()
    };
    let sign = if find_max { -1.0 } else { 1.0 };
    let unknown = |x: f64| -> f64 {
        solver
            .solve(kind, template, axis.line(x), bracket)
            .map(|r| sign * axis.split(r.t, r.b).1)
            .unwrap_or(f64::INFINITY)
    };
    let (x, v) = golden::minimize(unknown, range.0, range.1, 1e-8);
    if !v.is_finite() {
        return Err(Error::NoRoot {
            kind: kind.label().into(),
            lo: bracket.0,
            hi: bracket.1,
        });
    }
    let y = sign * v;
    Ok(match axis {
        MarchAxis::B => (y, x),
        MarchAxis::T => (x, y),
    })
}

/// Where the optimal angle leaves the zero branch as T decreases at
/// fixed B, and the size of the angle jump there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleJump {
    pub b: f64,
    pub t: f64,
    /// Final bracket in T; `t_hi` is on the zero branch.
    pub t_lo: f64,
    pub t_hi: f64,
    pub branch_below: Branch,
    pub theta_below: f64,
    pub jump: f64,
}

/// Scans T downward from `t_range.1` for the first cell off the zero
/// branch, then bisects the branch predicate to `1e-7`. The jump is the
/// angle difference across the final bracket.
pub fn zero_departure_jump(
    template: &ModelParams,
    b: f64,
    t_range: (f64, f64),
) -> Result<AngleJump> {
    let opt = Optimizer::default();
    let eval = |t: f64| template.at(t, b).and_then(|p| opt.optimize(&p));
    let (t_min, t_max) = (t_range.0.min(t_range.1), t_range.0.max(t_range.1));
    let n = 400;
    let mut hi = t_max;
    if eval(hi)?.branch != Branch::Zero {
        return Err(Error::NoRoot {
            kind: "zero-departure".into(),
            lo: t_min,
            hi: t_max,
        });
    }
    let mut lo = None;
    for i in 1..=n {
        let t = t_max - (t_max - t_min) * i as f64 / n as f64;
        if eval(t)?.branch != Branch::Zero {
            lo = Some(t);
            break;
        }
        hi = t;
    }
    let mut lo = lo.ok_or(Error::NoRoot {
        kind: "zero-departure".into(),
        lo: t_min,
        hi: t_max,
    })?;
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if eval(mid)?.branch == Branch::Zero {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (below, above) = (eval(lo)?, eval(hi)?);
    Ok(AngleJump {
        b,
        t: 0.5 * (lo + hi),
        t_lo: lo,
        t_hi: hi,
        branch_below: below.branch,
        theta_below: below.optimal_theta,
        jump: (below.optimal_theta - above.optimal_theta).abs(),
    })
}

/// All roots of every kind along rows (fixed B) or columns (fixed T),
/// linked into curves by [`link_roots`].
pub fn scan_curves(
    solver: &Solver,
    kinds: &[BoundaryKind],
    template: &ModelParams,
    axis: MarchAxis,
    lines: &[f64],
    bracket: (f64, f64),
    link_distance: f64,
) -> Result<Vec<BoundaryCurve>> {
    let mut curves = Vec::new();
    for &kind in kinds {
        let per_line: Vec<(f64, Vec<Root>)> = lines
            .iter()
            .map(|&x| Ok((x, solver.roots(kind, template, axis.line(x), bracket)?)))
            .collect::<Result<_>>()?;
        for mut c in link_roots(kind, template, axis, &per_line, link_distance) {
            mark_physical(&mut c, template);
            curves.push(c);
        }
    }
    Ok(curves)
}

/// Links roots found on consecutive scan lines into curves. A root joins
/// the curve whose last point lies on the preceding line and is nearest
/// in the unknown, within `link_distance`; otherwise it starts a new
/// curve. Physical flags are left unset.
pub fn link_roots(
    kind: BoundaryKind,
    template: &ModelParams,
    axis: MarchAxis,
    per_line: &[(f64, Vec<Root>)],
    link_distance: f64,
) -> Vec<BoundaryCurve> {
    // roots of each curve and the index of the line holding its last point
    let mut open: Vec<(Vec<Root>, usize)> = Vec::new();
    for (li, (_, roots)) in per_line.iter().enumerate() {
        let mut taken = vec![false; open.len()];
        for root in roots {
            let y = axis.split(root.t, root.b).1;
            let nearest = open
                .iter()
                .enumerate()
                .filter(|(ci, (_, last_line))| !taken[*ci] && *last_line + 1 == li)
                .map(|(ci, (pts, _))| {
                    let last = pts.last().expect("curves are never empty");
                    (ci, (axis.split(last.t, last.b).1 - y).abs())
                })
                .filter(|(_, d)| *d <= link_distance)
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal));
            match nearest {
                Some((ci, _)) => {
                    taken[ci] = true;
                    open[ci].0.push(*root);
                    open[ci].1 = li;
                }
                None => {
                    open.push((vec![*root], li));
                    taken.push(true);
                }
            }
        }
    }
    open.into_iter()
        .map(|(roots, _)| BoundaryCurve {
            kind,
            j: template.j(),
            jz: template.jz(),
            axis,
            points: roots
                .iter()
                .map(|r| CurvePoint {
                    t: r.t,
                    b: r.b,
                    residual: r.residual,
                    is_physical: false,
                })
                .collect(),
            termination: None,
        })
        .collect()
}

/// Sets every point's physical flag from the optimizer labels around it.
pub fn mark_physical(curve: &mut BoundaryCurve, template: &ModelParams) {
    for p in &mut curve.points {
        p.is_physical = is_physical_at(curve.kind, template, p.t, p.b);
    }
}

/// Writes curves as CSV with columns `kind,T,B,residual,is_physical`.
/// Each curve is introduced by a `# curve` comment line. Coordinates are
/// divided by `scale` (1 for raw energy units).
pub fn write_curves_csv<W: Write>(
    mut w: W,
    curves: &[BoundaryCurve],
    scale: f64,
) -> std::io::Result<()> {
    writeln!(w, "kind,T,B,residual,is_physical")?;
    for (i, c) in curves.iter().enumerate() {
        let end = match &c.termination {
            Some(term) => format!(
                "terminated at {} ({})",
                crate::format::sig9(term.at / scale),
                term.reason
            ),
            None => "complete".to_string(),
        };
        writeln!(
            w,
            "# curve {i} kind={} march={:?} points={} {end}",
            c.kind,
            c.axis,
            c.points.len()
        )?;
        for p in &c.points {
            writeln!(
                w,
                "{},{},{},{},{}",
                c.kind,
                crate::format::sig9(p.t / scale),
                crate::format::sig9(p.b / scale),
                crate::format::sig9(p.residual),
                p.is_physical
            )?;
        }
    }
    Ok(())
}
