use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qwd_core::boundary_solver::{BoundaryKind, MarchAxis};
use qwd_core::phase_diagram::Normalization;

#[derive(Debug, Parser)]
#[command(
    name = "qwd",
    version,
    about = "One-way quantum work deficit of the thermal XXZ dimer",
    long_about = "One-way quantum work deficit of a two-qubit XXZ dimer in a field at \
                  thermal equilibrium: optimal measurement angles, phase boundaries, \
                  triple points and temperature-field phase diagrams.\n\n\
                  Energies (J, Jz, B, T) share one unit. Entropies are in nats unless \
                  --units bits is given. Set QWD_T_FLOOR to change the lowest \
                  temperature accepted (default 1e-8).",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deficit, branch values and optimal angle at one (T, B) point.
    #[command(
        after_help = "CSV columns: J,Jz,T,B,branch,theta_opt,deficit_nats,deficit_bits,\
                            S,S0,S_theta,S_halfpi,delta0,delta_theta,delta_halfpi,shape\n\
                            Entropies in the S and delta columns follow --units."
    )]
    Point(PointArgs),

    /// Post-measurement entropy S(theta) sampled over [0, pi/2].
    #[command(
        after_help = "CSV columns: theta,S. Comment lines (#) before the table give the \
                            point and shape; comment lines after it list refined extrema, \
                            endpoint slopes and endpoint curvatures."
    )]
    Profile(ProfileArgs),

    /// Trace one boundary curve by marching a coordinate.
    #[command(
        after_help = "CSV columns: kind,T,B,residual,is_physical. A '# curve' comment \
                            line opens the curve and records where it terminated.\n\
                            Exit code 2 when the curve ends early or has no points."
    )]
    Boundary(BoundaryArgs),

    /// Locate triple points from row scans of all boundary kinds.
    #[command(
        after_help = "CSV columns: T,B,kinds,jump. 'jump' is the optimal-angle jump \
                            where the zero branch is left at that field.\n\
                            Exit code 2 when no triple point is found."
    )]
    Triple(TripleArgs),

    /// Optimal-angle jumps where the zero branch is left, one row per field.
    #[command(after_help = "CSV columns: B,T,jump,branch_below,theta_below.\n\
                            Exit code 2 when some fields have no departure from the zero branch.")]
    Jumps(JumpsArgs),

    /// Sweep a (T, B) grid and write the classified diagram.
    #[command(after_help = "CSV output writes up to three files:\n  \
                            OUT                  T,B,branch,theta_opt,deficit_nats,deficit_bits\n  \
                            OUT.boundaries.csv   kind,T,B,residual,is_physical\n  \
                            OUT.contours.csv     level,polyline,T,B  (with --levels)\n\
                            where OUT.x means OUT with its extension replaced by .x. Header \
                            comment lines record J, Jz, the normalization constant and the \
                            grid. JSON output writes everything to one document.")]
    Diagram(DiagramArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Units {
    Nats,
    Bits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Norm {
    #[value(name = "J")]
    J,
    #[value(name = "Jz")]
    Jz,
}

impl From<Norm> for Normalization {
    fn from(n: Norm) -> Self {
        match n {
            Norm::J => Normalization::J,
            Norm::Jz => Normalization::Jz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    #[value(name = "B")]
    B,
    #[value(name = "T")]
    T,
}

impl From<Axis> for MarchAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::B => MarchAxis::B,
            Axis::T => MarchAxis::T,
        }
    }
}

#[derive(Debug, Args)]
pub struct Model {
    /// Transverse coupling.
    #[arg(long = "J", allow_negative_numbers = true)]
    pub j: f64,
    /// Longitudinal coupling.
    #[arg(long = "Jz", allow_negative_numbers = true)]
    pub jz: f64,
}

#[derive(Debug, Args)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, value_enum, default_value_t = Units::Nats)]
    pub units: Units,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub model: Model,
    #[arg(long = "B", allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long = "T", allow_negative_numbers = true)]
    pub t: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub model: Model,
    #[arg(long = "B", allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long = "T", allow_negative_numbers = true)]
    pub t: f64,
    /// Samples over [0, pi/2] (at least 51).
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    /// Sample [-pi/2, pi/2] instead, at the same spacing.
    #[arg(long)]
    pub extended: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct BoundaryArgs {
    #[command(flatten)]
    pub model: Model,
    /// zero | halfpi | equal-endpoints | zero-prime
    #[arg(long, value_parser = parse_kind)]
    pub kind: BoundaryKind,
    /// Coordinate stepped along the curve; the other one is solved for.
    #[arg(long, value_enum, default_value_t = Axis::B)]
    pub march: Axis,
    /// Field range, start:end. The march range when marching B, else the
    /// bracket for the first root.
    #[arg(long = "B-range", value_parser = parse_range, allow_hyphen_values = true)]
    pub b_range: (f64, f64),
    /// Temperature range, start:end. The march range when marching T, else
    /// the bracket for the first root.
    #[arg(long = "T-range", value_parser = parse_range, allow_hyphen_values = true)]
    pub t_range: (f64, f64),
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long, value_enum, default_value_t = Norm::J)]
    pub norm: Norm,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct TripleArgs {
    #[command(flatten)]
    pub model: Model,
    #[arg(long = "T-range", value_parser = parse_range, allow_hyphen_values = true, default_value = "0.05:2")]
    pub t_range: (f64, f64),
    #[arg(long = "B-range", value_parser = parse_range, allow_hyphen_values = true, default_value = "0:3")]
    pub b_range: (f64, f64),
    /// Number of field rows scanned.
    #[arg(long, default_value_t = 61)]
    pub rows: usize,
    #[arg(long, value_enum, default_value_t = Norm::J)]
    pub norm: Norm,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct JumpsArgs {
    #[command(flatten)]
    pub model: Model,
    /// Comma-separated fields.
    #[arg(
        long = "B-list",
        value_delimiter = ',',
        allow_negative_numbers = true,
        required = true
    )]
    pub b_list: Vec<f64>,
    /// Temperatures searched, scanning down from the upper end.
    #[arg(long = "T-range", value_parser = parse_range, allow_hyphen_values = true, default_value = "0.05:2")]
    pub t_range: (f64, f64),
    #[arg(long, value_enum, default_value_t = Norm::J)]
    pub norm: Norm,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct DiagramArgs {
    #[command(flatten)]
    pub model: Model,
    #[arg(long = "T-range", value_parser = parse_range, allow_hyphen_values = true, default_value = "0.05:2")]
    pub t_range: (f64, f64),
    #[arg(long = "B-range", value_parser = parse_range, allow_hyphen_values = true, default_value = "0:3")]
    pub b_range: (f64, f64),
    /// Cells as NTxNB.
    #[arg(long, value_parser = parse_grid, default_value = "200x200")]
    pub grid: (usize, usize),
    #[arg(long, value_enum, default_value_t = Norm::J)]
    pub norm: Norm,
    /// Comma-separated deficit levels for contour lines, in --units.
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<f64>,
    /// Worker threads for the sweep; all cores when omitted.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Skip boundary curves and triple points.
    #[arg(long)]
    pub no_boundaries: bool,
    #[command(flatten)]
    pub output: Output,
}

pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected start:end, got '{s}'"))?;
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("'{x}' is not a finite number"))
    };
    let (lo, hi) = (num(lo)?, num(hi)?);
    if lo == hi {
        return Err(format!("range '{s}' is empty"));
    }
    Ok((lo, hi))
}

pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NTxNB, got '{s}'"))?;
    let n = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("'{x}': {e}"));
    let (nt, nb) = (n(a)?, n(b)?);
    if nt < 2 || nb < 2 {
        return Err(format!("grid '{s}' needs at least 2x2 cells"));
    }
    Ok((nt, nb))
}

fn parse_kind(s: &str) -> Result<BoundaryKind, String> {
    BoundaryKind::parse(s)
        .ok_or_else(|| format!("unknown kind '{s}' (zero, halfpi, equal-endpoints, zero-prime)"))
}
