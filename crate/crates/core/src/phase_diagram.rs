//! Temperature-field phase diagrams.
//!
//! A sweep evaluates the optimizer at every cell centre of a regular
//! (T, B) grid, then optionally extracts boundary curves by root scans
//! along every grid row and column, searches their pairwise crossings for
//! triple points, and checks interior/pi-half neighbours for a
//! discontinuous angle switch. Cells are independent; they run on a
//! fixed-size worker pool and are collected in (row, column) order, so
//! the result does not depend on the worker count.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary_solver::{
    find_triple_point_with, link_roots, mark_physical, write_curves_csv, BoundaryCurve,
    BoundaryKind, MarchAxis, Root, ScanLine, Solver, TriplePoint,
};
use crate::contour::{self, Field, Polyline};
use crate::deficit_optimizer::{Branch, Optimizer, Shape};
use crate::entropy::nats_to_bits;
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::spin_model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Normalization {
    J,
    Jz,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::J => "|J|",
            Normalization::Jz => "|Jz|",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagramParams {
    pub j: f64,
    pub jz: f64,
    pub normalization: Normalization,
    #[serde(skip)]
    pub t_floor: f64,
}

impl DiagramParams {
    pub fn new(j: f64, jz: f64, normalization: Normalization) -> Self {
        Self {
            j,
            jz,
            normalization,
            t_floor: crate::spin_model::DEFAULT_T_FLOOR,
        }
    }

    /// The energy unit outputs are divided by.
    pub fn scale(&self) -> Result<f64> {
        let c = match self.normalization {
            Normalization::J => self.j.abs(),
            Normalization::Jz => self.jz.abs(),
        };
        if c > 0.0 && c.is_finite() {
            Ok(c)
        } else {
            Err(Error::InvalidArgument(format!(
                "cannot normalize by {} = {c}",
                self.normalization
            )))
        }
    }

    pub fn template(&self) -> Result<ModelParams> {
        ModelParams::with_floor(self.j, self.jz, 0.0, 1.0, self.t_floor)
    }
}

/// Ranges in energy units. Cells are centred: the i-th of `nt` columns
/// sits at `t_lo + (i + 1/2)(t_hi - t_lo)/nt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub t_range: (f64, f64),
    pub b_range: (f64, f64),
    pub nt: usize,
    pub nb: usize,
}

impl GridSpec {
    pub fn validate(&self, t_floor: f64) -> Result<()> {
        let (t0, t1) = self.t_range;
        let (b0, b1) = self.b_range;
        if self.nt < 2 || self.nb < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2x2 cells, got {}x{}",
                self.nt, self.nb
            )));
        }
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(Error::InvalidGrid(format!("empty T range {t0}:{t1}")));
        }
        if !(b0.is_finite() && b1.is_finite() && b0 < b1) {
            return Err(Error::InvalidGrid(format!("empty B range {b0}:{b1}")));
        }
        if t0 < t_floor {
            return Err(Error::InvalidGrid(format!(
                "T range starts at {t0}, below the floor {t_floor}"
            )));
        }
        Ok(())
    }

    pub fn t_center(&self, i: usize) -> f64 {
        let (lo, hi) = self.t_range;
        lo + (i as f64 + 0.5) * (hi - lo) / self.nt as f64
    }

    pub fn b_center(&self, k: usize) -> f64 {
        let (lo, hi) = self.b_range;
        lo + (k as f64 + 0.5) * (hi - lo) / self.nb as f64
    }

    pub fn t_centers(&self) -> Vec<f64> {
        (0..self.nt).map(|i| self.t_center(i)).collect()
    }

    pub fn b_centers(&self) -> Vec<f64> {
        (0..self.nb).map(|k| self.b_center(k)).collect()
    }

    pub fn t_step(&self) -> f64 {
        (self.t_range.1 - self.t_range.0) / self.nt as f64
    }

    pub fn b_step(&self) -> f64 {
        (self.b_range.1 - self.b_range.0) / self.nb as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub t: f64,
    pub b: f64,
    pub branch: Branch,
    pub theta_opt: f64,
    pub deficit_nats: f64,
    pub deficit_bits: f64,
    pub shape: Shape,
    /// Interior minimum tied with the pi/2 endpoint at this cell.
    pub tie: bool,
}

/// A place where the optimal angle switches discontinuously between the
/// interior and pi/2 branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Anomaly {
    pub t: f64,
    pub b: f64,
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub params: DiagramParams,
    /// 1 for raw energy units; otherwise the normalization constant all
    /// coordinates have been divided by.
    pub scale: f64,
    pub grid: GridSpec,
    /// Row-major: B index major, T index minor.
    pub cells: Vec<Cell>,
    pub boundaries: Vec<BoundaryCurve>,
    pub triple_points: Vec<TriplePoint>,
    pub anomalies: Vec<Anomaly>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub workers: usize,
    pub boundaries: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            boundaries: true,
        }
    }
}

/// Anomalies: jumps larger than this across an interior/pi-half pair.
pub const ANOMALY_JUMP: f64 = 0.05;

pub fn sweep(params: DiagramParams, grid: GridSpec, opts: SweepOptions) -> Result<PhaseDiagram> {
    grid.validate(params.t_floor)?;
    if opts.workers == 0 {
        return Err(Error::InvalidArgument(
            "worker count must be at least 1".into(),
        ));
    }
    let template = params.template()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    pool.install(|| {
        let cells = evaluate_cells(&template, &grid)?;
        let (boundaries, triple_points) = if opts.boundaries {
            let curves = extract_boundaries(&template, &grid)?;
            let triples = find_triple_points(&template, &curves);
            (curves, triples)
        } else {
            (Vec::new(), Vec::new())
        };
        let anomalies = find_anomalies(&template, &grid, &cells)?;
        Ok(PhaseDiagram {
            params,
            scale: 1.0,
            grid,
            cells,
            boundaries,
            triple_points,
            anomalies,
        })
    })
}

fn evaluate_cells(template: &ModelParams, grid: &GridSpec) -> Result<Vec<Cell>> {
    let opt = Optimizer::default();
    (0..grid.nt * grid.nb)
        .into_par_iter()
        .map(|n| {
            let (t, b) = (grid.t_center(n % grid.nt), grid.b_center(n / grid.nt));
            let r = opt.optimize(&template.at(t, b)?)?;
            Ok(Cell {
                t,
                b,
                branch: r.branch,
                theta_opt: r.optimal_theta,
                deficit_nats: r.deficit,
                deficit_bits: r.deficit_bits(),
                shape: r.shape,
                tie: r.interior_halfpi_tie,
            })
        })
        .collect()
}

fn extract_boundaries(template: &ModelParams, grid: &GridSpec) -> Result<Vec<BoundaryCurve>> {
    let scans = [
        (MarchAxis::B, grid.b_centers(), grid.t_range, grid.nt),
        (MarchAxis::T, grid.t_centers(), grid.b_range, grid.nb),
    ];
    let mut curves = Vec::new();
    for (axis, lines, bracket, resolution) in scans {
        curves.extend(scan_lines(template, axis, &lines, bracket, resolution)?);
    }
    Ok(curves)
}

/// Roots of every kind on each line, linked into curves and flagged.
/// Runs on the current rayon pool.
pub fn scan_lines(
    template: &ModelParams,
    axis: MarchAxis,
    lines: &[f64],
    bracket: (f64, f64),
    resolution: usize,
) -> Result<Vec<BoundaryCurve>> {
    let solver = Solver {
        scan_points: resolution,
        ..Solver::default()
    };
    let link = 0.1 * (bracket.1 - bracket.0);
    let mut curves = Vec::new();
    for kind in BoundaryKind::ALL {
        let per_line: Vec<(f64, Vec<Root>)> = lines
            .par_iter()
            .map(|&x| {
                let line = match axis {
                    MarchAxis::B => ScanLine::AtB(x),
                    MarchAxis::T => ScanLine::AtT(x),
                };
                Ok((x, solver.roots(kind, template, line, bracket)?))
            })
            .collect::<Result<_>>()?;
        curves.extend(link_roots(kind, template, axis, &per_line, link));
    }
    curves
        .par_iter_mut()
        .for_each(|c| mark_physical(c, template));
    Ok(curves)
}

/// Triple points inside `b_range` x `t_range`, from `rows` row scans.
pub fn search_triple_points(
    template: &ModelParams,
    t_range: (f64, f64),
    b_range: (f64, f64),
    rows: usize,
) -> Result<Vec<TriplePoint>> {
    let rows = rows.max(2);
    let bs: Vec<f64> = (0..rows)
        .map(|k| b_range.0 + (b_range.1 - b_range.0) * k as f64 / (rows - 1) as f64)
        .collect();
    let curves = scan_lines(template, MarchAxis::B, &bs, t_range, 64)?;
    Ok(find_triple_points(template, &curves))
}

/// Branch labels on a small circle around `(t, b)`.
fn labels_around(template: &ModelParams, t: f64, b: f64, radius: f64) -> Vec<Branch> {
    let opt = Optimizer::default();
    let mut seen = Vec::new();
    // the interior region can close in a narrow wedge at a triple point
    for n in 0..120 {
        let phi = std::f64::consts::TAU * n as f64 / 120.0;
        let (pt, pb) = (t + radius * phi.cos(), b + radius * phi.sin());
        if let Ok(r) = template.at(pt, pb).and_then(|p| opt.optimize(&p)) {
            if !seen.contains(&r.branch) {
                seen.push(r.branch);
            }
        }
    }
    seen
}

/// Triple points among curves marched in B: pairwise crossings of curves
/// of different kinds, kept where three branches meet.
pub fn find_triple_points(template: &ModelParams, curves: &[BoundaryCurve]) -> Vec<TriplePoint> {
    let rows: Vec<&BoundaryCurve> = curves
        .iter()
        .filter(|c| c.axis == MarchAxis::B && c.points.len() >= 3)
        .collect();
    let mut pairs = Vec::new();
    for (n, c1) in rows.iter().enumerate() {
        for c2 in &rows[n + 1..] {
            if c1.kind != c2.kind {
                pairs.push((*c1, *c2));
            }
        }
    }
    let found: Vec<TriplePoint> = pairs
        .par_iter()
        .filter_map(|(c1, c2)| {
            let tp = find_triple_point_with(&Solver::default(), &[(*c1).clone(), (*c2).clone()])?;
            (labels_around(template, tp.t, tp.b, 2e-3).len() == 3).then_some(tp)
        })
        .collect();
    let mut unique: Vec<TriplePoint> = Vec::new();
    for tp in found {
        match unique
            .iter_mut()
            .find(|u| (u.t - tp.t).abs() < 1e-3 && (u.b - tp.b).abs() < 1e-3)
        {
            Some(u) => {
                for k in tp.meeting_kinds {
                    if !u.meeting_kinds.contains(&k) {
                        u.meeting_kinds.push(k);
                    }
                }
            }
            None => unique.push(tp),
        }
    }
    for u in &mut unique {
        u.meeting_kinds.sort();
    }
    unique
}

/// Bisects the branch switch between two neighbouring cells and measures
/// the angle jump across it.
fn switch_jump(template: &ModelParams, from: &Cell, to: &Cell) -> Result<Anomaly> {
    let opt = Optimizer::default();
    let at = |s: f64| {
        let (t, b) = (from.t + s * (to.t - from.t), from.b + s * (to.b - from.b));
        opt.optimize(&template.at(t, b)?).map(|r| (t, b, r))
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let scale = (to.t - from.t).hypot(to.b - from.b);
    while (hi - lo) * scale > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if at(mid)?.2.branch == from.branch {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (_, _, a) = at(lo)?;
    let (t, b, c) = at(hi)?;
    Ok(Anomaly {
        t,
        b,
        jump: (a.optimal_theta - c.optimal_theta).abs(),
    })
}

fn find_anomalies(template: &ModelParams, grid: &GridSpec, cells: &[Cell]) -> Result<Vec<Anomaly>> {
    let idx = |i: usize, k: usize| k * grid.nt + i;
    let mut pairs = Vec::new();
    for k in 0..grid.nb {
        for i in 0..grid.nt {
            let here = &cells[idx(i, k)];
            for (ni, nk) in [(i + 1, k), (i, k + 1)] {
                if ni >= grid.nt || nk >= grid.nb {
                    continue;
                }
                let there = &cells[idx(ni, nk)];
                let pair = (here.branch, there.branch);
                let switch = matches!(
                    pair,
                    (Branch::Interior, Branch::HalfPi) | (Branch::HalfPi, Branch::Interior)
                );
                // a continuous switch leaves the interior angle close to pi/2
                let interior = if here.branch == Branch::Interior {
                    here
                } else {
                    there
                };
                if switch && FRAC_PI_2 - interior.theta_opt > ANOMALY_JUMP {
                    pairs.push((*here, *there));
                }
            }
        }
    }
    let mut anomalies: Vec<Anomaly> = pairs
        .par_iter()
        .map(|(a, b)| switch_jump(template, a, b))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|a| a.jump > ANOMALY_JUMP)
        .collect();
    anomalies.extend(cells.iter().filter(|c| c.tie).map(|c| Anomaly {
        t: c.t,
        b: c.b,
        jump: f64::NAN,
    }));
    for a in &anomalies {
        log::warn!(
            "interior/pi-half switch with angle jump {} at T = {}, B = {}",
            a.jump,
            a.t,
            a.b
        );
    }
    Ok(anomalies)
}

impl PhaseDiagram {
    pub fn cell(&self, i: usize, k: usize) -> &Cell {
        &self.cells[k * self.grid.nt + i]
    }

    /// Copy with every coordinate divided by the normalization constant.
    pub fn normalized(&self) -> Result<PhaseDiagram> {
        let c = self.params.scale()? / self.scale;
        let mut out = self.clone();
        out.scale = self.scale * c;
        out.grid.t_range = (self.grid.t_range.0 / c, self.grid.t_range.1 / c);
        out.grid.b_range = (self.grid.b_range.0 / c, self.grid.b_range.1 / c);
        for cell in &mut out.cells {
            cell.t /= c;
            cell.b /= c;
        }
        for curve in &mut out.boundaries {
            for p in &mut curve.points {
                p.t /= c;
                p.b /= c;
            }
            if let Some(term) = &mut curve.termination {
                term.at /= c;
            }
        }
        for tp in &mut out.triple_points {
            tp.t /= c;
            tp.b /= c;
        }
        for a in &mut out.anomalies {
            a.t /= c;
            a.b /= c;
        }
        Ok(out)
    }

    /// Level lines of the deficit field (nats).
    pub fn level_lines(&self, levels: &[f64]) -> Result<Vec<Polyline>> {
        if let Some(bad) = levels
            .iter()
            .find(|l| !(0.0..=std::f64::consts::LN_2).contains(*l))
        {
            return Err(Error::InvalidArgument(format!(
                "level {bad} outside [0, ln 2]"
            )));
        }
        let xs: Vec<f64> = (0..self.grid.nt).map(|i| self.cell(i, 0).t).collect();
        let ys: Vec<f64> = (0..self.grid.nb).map(|k| self.cell(0, k).b).collect();
        let z: Vec<f64> = self.cells.iter().map(|c| c.deficit_nats).collect();
        Ok(contour::level_lines(
            &Field {
                xs: &xs,
                ys: &ys,
                z: &z,
            },
            levels,
        ))
    }

    fn header(&self) -> Vec<String> {
        let unit = if self.scale == 1.0 && self.params.scale().ok() != Some(1.0) {
            "energy units".to_string()
        } else {
            format!("units of {}", self.params.normalization)
        };
        let mut lines = vec![
            "# qwd phase diagram".to_string(),
            format!(
                "# J={} Jz={} normalization={} scale={}",
                sig9(self.params.j),
                sig9(self.params.jz),
                self.params.normalization,
                sig9(self.scale)
            ),
            format!(
                "# T_range={}:{} B_range={}:{} grid={}x{} coordinates in {unit}",
                sig9(self.grid.t_range.0),
                sig9(self.grid.t_range.1),
                sig9(self.grid.b_range.0),
                sig9(self.grid.b_range.1),
                self.grid.nt,
                self.grid.nb
            ),
        ];
        for tp in &self.triple_points {
            let kinds: Vec<&str> = tp.meeting_kinds.iter().map(|k| k.label()).collect();
            lines.push(format!(
                "# triple_point T={} B={} kinds={}",
                sig9(tp.t),
                sig9(tp.b),
                kinds.join("+")
            ));
        }
        for a in &self.anomalies {
            lines.push(format!(
                "# anomaly interior/halfpi switch T={} B={} jump={}",
                sig9(a.t),
                sig9(a.b),
                sig9(a.jump)
            ));
        }
        lines
    }

    /// Cell table: comment header, then `T,B,branch,theta_opt,deficit_nats,deficit_bits`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for line in self.header() {
            writeln!(w, "{line}")?;
        }
        writeln!(w, "T,B,branch,theta_opt,deficit_nats,deficit_bits")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                sig9(c.t),
                sig9(c.b),
                c.branch,
                sig9(c.theta_opt),
                sig9(c.deficit_nats),
                sig9(c.deficit_bits)
            )?;
        }
        Ok(())
    }

    pub fn write_boundaries_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_curves_csv(w, &self.boundaries, 1.0)
    }

    pub fn write_json<W: Write>(&self, w: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(w, self)
    }
}

/// Contours as CSV rows `level,polyline,T,B`, one polyline index per
/// connected piece, points in order.
pub fn write_contours_csv<W: Write>(
    mut w: W,
    lines: &[Polyline],
    bits: bool,
) -> std::io::Result<()> {
    writeln!(w, "level,polyline,T,B")?;
    for (n, l) in lines.iter().enumerate() {
        let level = if bits { nats_to_bits(l.level) } else { l.level };
        for (t, b) in &l.points {
            writeln!(w, "{},{n},{},{}", sig9(level), sig9(*t), sig9(*b))?;
        }
    }
    Ok(())
}
