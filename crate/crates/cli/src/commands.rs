use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qwd_core::boundary_solver::{
    trace_boundary, write_curves_csv, zero_departure_jump, AngleJump, March, MarchAxis,
};
use qwd_core::deficit_optimizer::{sample_window, Optimizer};
use qwd_core::entropy::nats_to_bits;
use qwd_core::format::sig9;
use qwd_core::measurement_entropy::{
    endpoint_first_derivatives, second_derivative_at_0, second_derivative_at_halfpi,
};
use qwd_core::phase_diagram::{
    search_triple_points, sweep, write_contours_csv, DiagramParams, GridSpec, Normalization,
    SweepOptions,
};
use qwd_core::spin_model::{pre_measurement_entropy, thermal_state, ModelParams};
use serde_json::{json, Value};

use crate::args::{
    BoundaryArgs, DiagramArgs, Format, JumpsArgs, Model, Norm, PointArgs, ProfileArgs, TripleArgs,
    Units,
};

/// Everything a command produces, held in memory until the command has
/// finished so that nothing is written on failure.
pub struct Rendered {
    pub files: Vec<(Option<PathBuf>, String)>,
    /// Some requested result could not be produced.
    pub partial: bool,
}

impl Rendered {
    fn single(out: &Option<PathBuf>, text: String) -> Self {
        Self {
            files: vec![(out.clone(), text)],
            partial: false,
        }
    }
}

pub struct Env {
    pub t_floor: f64,
}

fn template(m: &Model, env: &Env) -> Result<ModelParams> {
    Ok(ModelParams::with_floor(m.j, m.jz, 0.0, 1.0, env.t_floor)?)
}

fn scale(m: &Model, norm: Norm) -> Result<f64> {
    Ok(DiagramParams::new(m.j, m.jz, norm.into()).scale()?)
}

fn in_units(x: f64, units: Units) -> f64 {
    match units {
        Units::Nats => x,
        Units::Bits => nats_to_bits(x),
    }
}

fn from_units(x: f64, units: Units) -> f64 {
    match units {
        Units::Nats => x,
        Units::Bits => x * std::f64::consts::LN_2,
    }
}

fn opt_sig9(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}

/// Rounds every float in a JSON document to 9 significant digits.
fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| sig9(x).parse::<f64>().ok())
            .and_then(serde_json::Number::from_f64)
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn json_text<T: serde::Serialize>(value: &T) -> Result<String> {
    let v = round_json(serde_json::to_value(value)?);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn check_positive_range(name: &str, (lo, hi): (f64, f64), floor: f64) -> Result<()> {
    if lo.min(hi) < floor {
        bail!("{name} range {lo}:{hi} reaches below the temperature floor {floor}");
    }
    Ok(())
}

pub fn point(a: &PointArgs, env: &Env) -> Result<Rendered> {
    let p = ModelParams::with_floor(a.model.j, a.model.jz, a.b, a.t, env.t_floor)?;
    let r = Optimizer::default().optimize(&p)?;
    let u = |x: f64| in_units(x, a.output.units);
    let text = match a.output.format {
        Format::Csv => {
            let mut s = String::from(
                "J,Jz,T,B,branch,theta_opt,deficit_nats,deficit_bits,S,S0,S_theta,S_halfpi,\
                 delta0,delta_theta,delta_halfpi,shape\n",
            );
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                sig9(p.j()),
                sig9(p.jz()),
                sig9(p.t()),
                sig9(p.b()),
                r.branch,
                sig9(r.optimal_theta),
                sig9(r.deficit),
                sig9(r.deficit_bits()),
                sig9(u(r.entropy)),
                sig9(u(r.s0)),
                opt_sig9(r.s_theta.map(u)),
                sig9(u(r.s_halfpi)),
                sig9(u(r.delta0)),
                opt_sig9(r.delta_theta.map(u)),
                sig9(u(r.delta_halfpi)),
                r.shape
            )?;
            s
        }
        Format::Json => json_text(&json!({
            "J": p.j(), "Jz": p.jz(), "T": p.t(), "B": p.b(),
            "units": format!("{:?}", a.output.units).to_lowercase(),
            "branch": r.branch.to_string(),
            "theta_opt": r.optimal_theta,
            "deficit_nats": r.deficit,
            "deficit_bits": r.deficit_bits(),
            "S": u(r.entropy),
            "S0": u(r.s0),
            "S_theta": r.s_theta.map(u),
            "S_halfpi": u(r.s_halfpi),
            "delta0": u(r.delta0),
            "delta_theta": r.delta_theta.map(u),
            "delta_halfpi": u(r.delta_halfpi),
            "shape": r.shape.to_string(),
            "interior_halfpi_tie": r.interior_halfpi_tie,
        }))?,
    };
    Ok(Rendered::single(&a.output.out, text))
}

pub fn profile(a: &ProfileArgs, env: &Env) -> Result<Rendered> {
    let p = ModelParams::with_floor(a.model.j, a.model.jz, a.b, a.t, env.t_floor)?;
    let s = thermal_state(&p);
    let opt = Optimizer {
        samples: a.samples,
        ..Optimizer::default()
    };
    let prof = opt.scan_profile(&s)?;
    let samples = if a.extended {
        sample_window(&s, -FRAC_PI_2, FRAC_PI_2, 2 * a.samples - 1)
    } else {
        prof.samples.clone()
    };
    let (slope0, slope_half) = endpoint_first_derivatives(&s);
    let curv0 = second_derivative_at_0(&s);
    let curv_half = second_derivative_at_halfpi(&s).ok();
    // discrete second difference at theta = 0 from the symmetric samples
    let h = FRAC_PI_2 / (a.samples - 1) as f64;
    let s_at = |x: f64| qwd_core::measurement_entropy::post_meas_entropy(&s, x);
    let discrete0 = (s_at(h) - 2.0 * s_at(0.0) + s_at(-h)) / (h * h);
    let u = |x: f64| in_units(x, a.output.units);
    let units = format!("{:?}", a.output.units).to_lowercase();

    let text = match a.output.format {
        Format::Csv => {
            let mut t = String::new();
            writeln!(
                t,
                "# J={} Jz={} T={} B={}",
                sig9(p.j()),
                sig9(p.jz()),
                sig9(p.t()),
                sig9(p.b())
            )?;
            writeln!(
                t,
                "# shape={} anomalous={} units={units} S_pre={}",
                prof.shape,
                prof.anomalous,
                sig9(u(pre_measurement_entropy(&s)))
            )?;
            writeln!(t, "theta,S")?;
            for (th, v) in &samples {
                writeln!(t, "{},{}", sig9(*th), sig9(u(*v)))?;
            }
            for m in &prof.interior_minima {
                writeln!(
                    t,
                    "# minimum theta={} S={}",
                    sig9(m.theta),
                    sig9(u(m.entropy))
                )?;
            }
            for m in &prof.interior_maxima {
                writeln!(
                    t,
                    "# maximum theta={} S={}",
                    sig9(m.theta),
                    sig9(u(m.entropy))
                )?;
            }
            writeln!(
                t,
                "# slope_0={} slope_halfpi={}",
                sig9(u(slope0)),
                sig9(u(slope_half))
            )?;
            writeln!(
                t,
                "# curvature_0={} curvature_halfpi={} discrete_curvature_0={}",
                sig9(u(curv0)),
                curv_half
                    .map(|c| sig9(u(c)))
                    .unwrap_or_else(|| "undefined".into()),
                sig9(u(discrete0))
            )?;
            t
        }
        Format::Json => json_text(&json!({
            "J": p.j(), "Jz": p.jz(), "T": p.t(), "B": p.b(),
            "units": units,
            "shape": prof.shape.to_string(),
            "anomalous": prof.anomalous,
            "samples": samples.iter().map(|(th, v)| json!([th, u(*v)])).collect::<Vec<_>>(),
            "interior_minima": prof.interior_minima.iter().map(|m| json!({"theta": m.theta, "S": u(m.entropy)})).collect::<Vec<_>>(),
            "interior_maxima": prof.interior_maxima.iter().map(|m| json!({"theta": m.theta, "S": u(m.entropy)})).collect::<Vec<_>>(),
            "slope_0": u(slope0),
            "slope_halfpi": u(slope_half),
            "curvature_0": u(curv0),
            "curvature_halfpi": curv_half.map(u),
            "discrete_curvature_0": u(discrete0),
        }))?,
    };
    Ok(Rendered::single(&a.output.out, text))
}

pub fn boundary(a: &BoundaryArgs, env: &Env) -> Result<Rendered> {
    let tpl = template(&a.model, env)?;
    let c = scale(&a.model, a.norm)?;
    if !(a.step > 0.0 && a.step.is_finite()) {
        bail!("--step must be positive, got {}", a.step);
    }
    let axis: MarchAxis = a.march.into();
    let (range, seed) = match axis {
        MarchAxis::B => (a.b_range, a.t_range),
        MarchAxis::T => (a.t_range, a.b_range),
    };
    check_positive_range("T", a.t_range, env.t_floor)?;
    let curve = trace_boundary(
        a.kind,
        &tpl,
        March {
            axis,
            start: range.0,
            end: range.1,
            step: a.step,
            seed,
        },
    )?;
    let partial = curve.points.is_empty() || !curve.is_complete();
    let text = match a.output.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_curves_csv(&mut buf, std::slice::from_ref(&curve), c)?;
            String::from_utf8(buf)?
        }
        Format::Json => {
            let mut scaled = curve.clone();
            for p in &mut scaled.points {
                p.t /= c;
                p.b /= c;
            }
            json_text(&json!({ "scale": c, "curve": scaled }))?
        }
    };
    Ok(Rendered {
        files: vec![(a.output.out.clone(), text)],
        partial,
    })
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
    Ok(pool.install(f))
}

pub fn triple(a: &TripleArgs, env: &Env) -> Result<Rendered> {
    let tpl = template(&a.model, env)?;
    let c = scale(&a.model, a.norm)?;
    check_positive_range("T", a.t_range, env.t_floor)?;
    if a.rows < 2 {
        bail!("--rows must be at least 2");
    }
    let t_range = (a.t_range.0.min(a.t_range.1), a.t_range.0.max(a.t_range.1));
    let b_range = (a.b_range.0.min(a.b_range.1), a.b_range.0.max(a.b_range.1));
    let found = single_threaded(|| search_triple_points(&tpl, t_range, b_range, a.rows))??;
    let mut rows = Vec::new();
    for tp in &found {
        let jump = zero_departure_jump(&tpl, tp.b, t_range)
            .ok()
            .map(|j| j.jump);
        rows.push((tp, jump));
    }
    let text = match a.output.format {
        Format::Csv => {
            let mut t = format!(
                "# J={} Jz={} normalization={} scale={}\nT,B,kinds,jump\n",
                sig9(tpl.j()),
                sig9(tpl.jz()),
                Normalization::from(a.norm),
                sig9(c)
            );
            for (tp, jump) in &rows {
                let kinds: Vec<&str> = tp.meeting_kinds.iter().map(|k| k.label()).collect();
                writeln!(
                    t,
                    "{},{},{},{}",
                    sig9(tp.t / c),
                    sig9(tp.b / c),
                    kinds.join("+"),
                    opt_sig9(*jump)
                )?;
            }
            t
        }
        Format::Json => json_text(&json!({
            "J": tpl.j(), "Jz": tpl.jz(), "scale": c,
            "triple_points": rows.iter().map(|(tp, jump)| json!({
                "T": tp.t / c, "B": tp.b / c,
                "kinds": tp.meeting_kinds.iter().map(|k| k.label()).collect::<Vec<_>>(),
                "jump": jump,
            })).collect::<Vec<_>>(),
        }))?,
    };
    Ok(Rendered {
        files: vec![(a.output.out.clone(), text)],
        partial: found.is_empty(),
    })
}

pub fn jumps(a: &JumpsArgs, env: &Env) -> Result<Rendered> {
    let tpl = template(&a.model, env)?;
    let c = scale(&a.model, a.norm)?;
    check_positive_range("T", a.t_range, env.t_floor)?;
    let results: Vec<(f64, Option<AngleJump>)> = a
        .b_list
        .iter()
        .map(|&b| match zero_departure_jump(&tpl, b, a.t_range) {
            Ok(j) => (b, Some(j)),
            Err(e) => {
                log::warn!("B = {b}: {e}");
                (b, None)
            }
        })
        .collect();
    let partial = results.iter().any(|(_, j)| j.is_none());
    let text = match a.output.format {
        Format::Csv => {
            let mut t = format!(
                "# J={} Jz={} normalization={} scale={}\nB,T,jump,branch_below,theta_below\n",
                sig9(tpl.j()),
                sig9(tpl.jz()),
                Normalization::from(a.norm),
                sig9(c)
            );
            for (b, j) in &results {
                match j {
                    Some(j) => writeln!(
                        t,
                        "{},{},{},{},{}",
                        sig9(b / c),
                        sig9(j.t / c),
                        sig9(j.jump),
                        j.branch_below,
                        sig9(j.theta_below)
                    )?,
                    None => writeln!(t, "{},,,,", sig9(b / c))?,
                }
            }
            t
        }
        Format::Json => json_text(&json!({
            "J": tpl.j(), "Jz": tpl.jz(), "scale": c,
            "jumps": results.iter().map(|(b, j)| match j {
                Some(j) => json!({"B": b / c, "T": j.t / c, "jump": j.jump,
                    "branch_below": j.branch_below.to_string(), "theta_below": j.theta_below}),
                None => json!({"B": b / c, "T": null, "jump": null}),
            }).collect::<Vec<_>>(),
        }))?,
    };
    Ok(Rendered {
        files: vec![(a.output.out.clone(), text)],
        partial,
    })
}

/// `OUT` with its extension replaced by `suffix`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

pub fn diagram(a: &DiagramArgs, env: &Env) -> Result<Rendered> {
    let mut params = DiagramParams::new(a.model.j, a.model.jz, a.norm.into());
    params.t_floor = env.t_floor;
    params.scale()?;
    let grid = GridSpec {
        t_range: (a.t_range.0.min(a.t_range.1), a.t_range.0.max(a.t_range.1)),
        b_range: (a.b_range.0.min(a.b_range.1), a.b_range.0.max(a.b_range.1)),
        nt: a.grid.0,
        nb: a.grid.1,
    };
    grid.validate(env.t_floor)?;
    let levels: Vec<f64> = a
        .levels
        .iter()
        .map(|&l| from_units(l, a.output.units))
        .collect();
    if let Some(bad) = levels
        .iter()
        .find(|l| !(0.0..=std::f64::consts::LN_2).contains(*l))
    {
        bail!("contour level {bad} nats lies outside [0, ln 2]");
    }
    let workers = match a.workers {
        Some(0) => bail!("--workers must be at least 1"),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    if a.output.format == Format::Csv
        && a.output.out.is_none()
        && (!a.no_boundaries || !levels.is_empty())
    {
        bail!("CSV diagrams with boundaries or contours need --out (several files are written)");
    }

    let d = sweep(
        params,
        grid,
        SweepOptions {
            workers,
            boundaries: !a.no_boundaries,
        },
    )?;
    let contours = d.level_lines(&levels)?;
    let n = d.normalized()?;
    let c = n.scale;
    let contours: Vec<_> = contours
        .into_iter()
        .map(|mut l| {
            for p in &mut l.points {
                p.0 /= c;
                p.1 /= c;
            }
            l
        })
        .collect();
    let bits = a.output.units == Units::Bits;

    let mut files = Vec::new();
    match a.output.format {
        Format::Csv => {
            let mut cells = Vec::new();
            n.write_csv(&mut cells)?;
            files.push((a.output.out.clone(), String::from_utf8(cells)?));
            if let Some(out) = &a.output.out {
                if !a.no_boundaries {
                    let mut b = Vec::new();
                    n.write_boundaries_csv(&mut b)?;
                    files.push((Some(sibling(out, "boundaries.csv")), String::from_utf8(b)?));
                }
                if !contours.is_empty() || !levels.is_empty() {
                    let mut buf = Vec::new();
                    write_contours_csv(&mut buf, &contours, bits)?;
                    files.push((Some(sibling(out, "contours.csv")), String::from_utf8(buf)?));
                }
            }
        }
        Format::Json => {
            let contours_json: Vec<Value> = contours
                .iter()
                .map(|l| json!({"level": in_units(l.level, a.output.units), "closed": l.closed, "points": l.points}))
                .collect();
            let text = json_text(&json!({ "diagram": n, "contours": contours_json }))?;
            files.push((a.output.out.clone(), text));
        }
    }
    Ok(Rendered {
        files,
        partial: false,
    })
}

pub fn write(rendered: &Rendered) -> Result<()> {
    use std::io::Write;
    for (path, text) in &rendered.files {
        match path {
            Some(p) => {
                std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?
            }
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
    }
    Ok(())
}
