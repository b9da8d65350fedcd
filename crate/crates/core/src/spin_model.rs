//! Thermal equilibrium of the XXZ dimer in a uniform field.
//!
//! `H = -1/2 [J (XX + YY) + Jz ZZ] - 1/2 B (Z1 + Z2)`. The Gibbs state is an
//! X matrix with diagonal `(a, b, b, d)` and a single coherence `v` between
//! |01> and |10>. A local phase rotation flips the sign of `v`, so it is
//! always stored non-negative (built from `|J|`) and the rotation itself is
//! never formed.
//!
//! Boltzmann weights are computed relative to the ground level, which keeps
//! every entry finite however small `T` gets.

use log::warn;
use serde::Serialize;

use crate::entropy::shannon;
use crate::error::{Error, Result};

/// Lowest temperature accepted by default. Smaller requests are clamped.
pub const DEFAULT_T_FLOOR: f64 = 1e-8;

/// Ratio `max|E|/T` above which the partition function is evaluated through
/// its logarithm.
pub const LOG_SPACE_THRESHOLD: f64 = 600.0;

/// Physical inputs `(J, Jz, B, T)` in a common energy unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    j: f64,
    jz: f64,
    b: f64,
    t: f64,
    #[serde(skip)]
    t_floor: f64,
}

impl ModelParams {
    pub fn new(j: f64, jz: f64, b: f64, t: f64) -> Result<Self> {
        Self::with_floor(j, jz, b, t, DEFAULT_T_FLOOR)
    }

    /// Like [`ModelParams::new`] with a custom temperature floor. Requests
    /// with `0 <= t < t_floor` are clamped to `t_floor` with a warning.
    pub fn with_floor(j: f64, jz: f64, b: f64, t: f64, t_floor: f64) -> Result<Self> {
        if !(t_floor.is_finite() && t_floor > 0.0) {
            return Err(Error::InvalidParams(format!(
                "temperature floor must be positive and finite, got {t_floor}"
            )));
        }
        for (name, value) in [("J", j), ("Jz", jz), ("B", b), ("T", t)] {
            if !value.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        if t < 0.0 {
            return Err(Error::InvalidParams(format!("T must be positive, got {t}")));
        }
        let t = if t < t_floor {
            warn!("T = {t} is below the floor {t_floor}; clamping");
            t_floor
        } else {
            t
        };
        Ok(Self {
            j,
            jz,
            b,
            t,
            t_floor,
        })
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn jz(&self) -> f64 {
        self.jz
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn t_floor(&self) -> f64 {
        self.t_floor
    }

    /// Same couplings and floor at a different `(T, B)`.
    pub fn at(&self, t: f64, b: f64) -> Result<Self> {
        Self::with_floor(self.j, self.jz, b, t, self.t_floor)
    }

    pub fn with_t(&self, t: f64) -> Result<Self> {
        self.at(t, self.b)
    }

    pub fn with_b(&self, b: f64) -> Result<Self> {
        self.at(self.t, b)
    }

    /// The `J -> -J` partner. Every observable here is invariant under it.
    pub fn flip_j(&self) -> Self {
        Self {
            j: -self.j,
            ..*self
        }
    }

    pub fn flip_b(&self) -> Self {
        Self {
            b: -self.b,
            ..*self
        }
    }
}

/// The four energy levels. `e1 + e2 = -Jz`, `e3 + e4 = Jz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyLevels {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
}

impl EnergyLevels {
    pub fn as_array(&self) -> [f64; 4] {
        [self.e1, self.e2, self.e3, self.e4]
    }
}

pub fn energy_levels(p: &ModelParams) -> EnergyLevels {
    EnergyLevels {
        e1: -p.jz / 2.0 + p.b,
        e2: -p.jz / 2.0 - p.b,
        e3: p.jz / 2.0 + p.j,
        e4: p.jz / 2.0 - p.j,
    }
}

/// Normalized Boltzmann weights in the order `(d, a, b + v, b - v)`, i.e.
/// levels `E1`, `E2`, `Jz/2 - |J|`, `Jz/2 + |J|`, plus `ln Z`.
struct Populations {
    probs: [f64; 4],
    log_z: f64,
}

fn populations(p: &ModelParams) -> Populations {
    let aj = p.j.abs();
    let energies = [
        -p.jz / 2.0 + p.b,
        -p.jz / 2.0 - p.b,
        p.jz / 2.0 - aj,
        p.jz / 2.0 + aj,
    ];
    let exponents = energies.map(|e| -e / p.t);
    let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights = exponents.map(|y| (y - shift).exp());
    let sum: f64 = weights.iter().sum();
    Populations {
        probs: weights.map(|w| w / sum),
        log_z: shift + sum.ln(),
    }
}

/// `ln Z`, always evaluated in shifted (log-sum-exp) form.
pub fn log_partition_function(p: &ModelParams) -> f64 {
    populations(p).log_z
}

/// `Z = 2 (e^{Jz/2T} cosh(B/T) + e^{-Jz/2T} cosh(J/T))`.
///
/// Uses the closed form unless `max|E_i|/T` exceeds
/// [`LOG_SPACE_THRESHOLD`], in which case `exp(ln Z)` is returned (and may
/// legitimately be `inf`).
pub fn partition_function(p: &ModelParams) -> f64 {
    let levels = energy_levels(p).as_array();
    let max_ratio = levels.iter().map(|e| e.abs() / p.t).fold(0.0, f64::max);
    if max_ratio > LOG_SPACE_THRESHOLD {
        return log_partition_function(p).exp();
    }
    let t = p.t;
    2.0 * ((p.jz / (2.0 * t)).exp() * (p.b / t).cosh()
        + (-p.jz / (2.0 * t)).exp() * (p.j / t).cosh())
}

/// The independent entries of the Gibbs density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XThermalState {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub v: f64,
}

impl XThermalState {
    /// Validates trace, range and positivity (`b >= v >= 0`) to `1e-12`.
    pub fn new(a: f64, b: f64, d: f64, v: f64) -> Result<Self> {
        let tol = 1e-12;
        let s = Self { a, b, d, v };
        if ![a, b, d, v].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        if (a + 2.0 * b + d - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!(
                "trace a + 2b + d = {} != 1",
                a + 2.0 * b + d
            )));
        }
        if [a, b, d].iter().any(|&x| !(-tol..=1.0 + tol).contains(&x)) {
            return Err(Error::InvalidState("diagonal entry outside [0, 1]".into()));
        }
        if v < -tol || b - v < -tol {
            return Err(Error::InvalidState(format!(
                "need 0 <= v <= b, got b = {b}, v = {v}"
            )));
        }
        Ok(s)
    }

    /// Bloch-like length `r = sqrt((a - d)^2 + 4 v^2)`.
    pub fn r(&self) -> f64 {
        (self.a - self.d).hypot(2.0 * self.v)
    }

    /// Same state with `a` and `d` exchanged (the `B -> -B` image).
    pub fn mirrored(&self) -> Self {
        Self {
            a: self.d,
            d: self.a,
            ..*self
        }
    }
}

pub fn thermal_state(p: &ModelParams) -> XThermalState {
    let pops = populations(p).probs;
    let [d, a, upper, lower] = pops;
    XThermalState {
        a,
        b: 0.5 * (upper + lower),
        d,
        v: 0.5 * (upper - lower),
    }
}

/// Eigenvalues of the Gibbs state in the fixed order `(a, d, b + v, b - v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalSpectrum {
    pub lambda: [f64; 4],
}

pub fn thermal_spectrum(s: &XThermalState) -> ThermalSpectrum {
    ThermalSpectrum {
        lambda: [s.a, s.d, s.b + s.v, (s.b - s.v).max(0.0)],
    }
}

/// `S(rho) = -sum lambda ln lambda` in nats.
pub fn pre_measurement_entropy(s: &XThermalState) -> f64 {
    shannon(&thermal_spectrum(s).lambda)
}

/// Thermodynamic entropy `S = -dF/dT` in its closed form, written in terms
/// of `x_k e^{x_k}` for the four Boltzmann exponents. Independent of the
/// spectral route through [`thermal_state`].
pub fn thermodynamic_entropy(p: &ModelParams) -> f64 {
    let t = p.t;
    let half = p.jz / 2.0;
    let x1 = (p.b + half) / t;
    let x2 = (p.b - half) / t;
    let x3 = (p.j - half) / t;
    let x4 = (p.j + half) / t;
    // exponents of the four terms, with the sign each term carries
    let terms = [
        (x1, x1, 1.0),
        (-x2, x2, -1.0),
        (x3, x3, 1.0),
        (-x4, x4, -1.0),
    ];
    let shift = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let z_scaled: f64 = terms.iter().map(|t| (t.0 - shift).exp()).sum();
    let bracket: f64 = terms
        .iter()
        .map(|&(expo, x, sign)| sign * x * (expo - shift).exp())
        .sum();
    -bracket / z_scaled + shift + z_scaled.ln()
}

/// Fidelity between two commuting thermal states, eigenvalues paired in the
/// fixed `(a, d, b+v, b-v)` order. Only meaningful for states of the same
/// Hamiltonian family, whose eigenbases coincide.
pub fn fidelity(s1: &ThermalSpectrum, s2: &ThermalSpectrum) -> f64 {
    let overlap: f64 = s1
        .lambda
        .iter()
        .zip(&s2.lambda)
        .map(|(x, y)| (x * y).max(0.0).sqrt())
        .sum();
    (overlap * overlap).clamp(0.0, 1.0)
}

/// Bures distance `sqrt(2 (1 - sqrt F))`.
pub fn bures_distance(f: f64) -> f64 {
    (2.0 * (1.0 - f.clamp(0.0, 1.0).sqrt())).sqrt()
}

/// Entropy of the diagonal part only; handy when checking `S0 >= S`.
#[cfg(test)]
fn diagonal_entropy(s: &XThermalState) -> f64 {
    use crate::entropy::neg_x_ln_x;
    neg_x_ln_x(s.a) + neg_x_ln_x(s.d) + 2.0 * neg_x_ln_x(s.b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(j: f64, jz: f64, b: f64, t: f64) -> ModelParams {
        ModelParams::new(j, jz, b, t).unwrap()
    }

    #[test]
    fn energy_levels_by_substitution() {
        let e = energy_levels(&params(1.0, 2.0, 3.0, 1.0));
        assert_eq!(e.as_array(), [2.0, -4.0, 2.0, 0.0]);
        let zero = energy_levels(&params(0.0, 0.0, 0.0, 1.0));
        assert_eq!(zero.as_array(), [0.0; 4]);
    }

    #[test]
    fn level_crossings_of_the_ising_like_dimer() {
        // E2 meets E3 at B = 2.5 and E4 at B = 0.5 when J = -1, Jz = -1.5
        let at = |b| energy_levels(&params(-1.0, -1.5, b, 1.0));
        assert_abs_diff_eq!(at(2.5).e2, at(2.5).e3, epsilon = 1e-15);
        assert_abs_diff_eq!(at(0.5).e2, at(0.5).e4, epsilon = 1e-15);
    }

    #[test]
    fn level_sums() {
        let e = energy_levels(&params(0.3, -1.7, 0.9, 1.0));
        assert_abs_diff_eq!(e.e1 + e.e2, 1.7, epsilon = 1e-15);
        assert_abs_diff_eq!(e.e3 + e.e4, -1.7, epsilon = 1e-15);
    }

    #[test]
    fn high_temperature_partition_function() {
        assert_abs_diff_eq!(
            partition_function(&params(1.0, -1.0, 1.4, 1e9)),
            4.0,
            epsilon = 1e-6
        );
    }

    #[test]
    fn partition_function_matches_brute_force_sum() {
        let p = params(1.0, -1.0, 1.4, 1.0);
        let direct: f64 = energy_levels(&p)
            .as_array()
            .iter()
            .map(|e| (-e / p.t()).exp())
            .sum();
        assert_abs_diff_eq!(partition_function(&p), direct, epsilon = 1e-12);
        assert_abs_diff_eq!(log_partition_function(&p), direct.ln(), epsilon = 1e-12);
    }

    #[test]
    fn partition_function_switches_to_log_space() {
        let p = params(1.0, -1.0, 1.4, 1e-3);
        let z = partition_function(&p);
        assert!(z.is_infinite());
        // ln Z is still finite and dominated by the ground level E4 = -1.5
        assert_abs_diff_eq!(log_partition_function(&p), 1.5 / 1e-3, epsilon = 1e-9);
    }

    #[test]
    fn zero_field_gives_a_equal_d() {
        let s = thermal_state(&params(-1.0, 0.4, 0.0, 0.8));
        assert_eq!(s.a, s.d);
    }

    #[test]
    fn no_transverse_coupling_no_coherence() {
        assert_eq!(thermal_state(&params(0.0, -1.0, 0.7, 0.5)).v, 0.0);
    }

    #[test]
    fn closed_form_entries() {
        let p = params(-1.0, -1.0, 1.4, 1.0);
        let s = thermal_state(&p);
        let z = partition_function(&p);
        let (t, jz, b, j) = (p.t(), p.jz(), p.b(), p.j());
        assert_abs_diff_eq!(s.a, ((jz / 2.0 + b) / t).exp() / z, epsilon = 1e-14);
        assert_abs_diff_eq!(s.d, ((jz / 2.0 - b) / t).exp() / z, epsilon = 1e-14);
        assert_abs_diff_eq!(
            s.b,
            (-jz / (2.0 * t)).exp() * (j / t).cosh() / z,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            s.v,
            (-jz / (2.0 * t)).exp() * (j.abs() / t).sinh() / z,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(s.a + 2.0 * s.b + s.d, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn incoherent_state_has_degenerate_middle_doublet() {
        let s = thermal_state(&params(0.0, 0.5, 0.2, 0.9));
        let sp = thermal_spectrum(&s);
        assert_eq!(sp.lambda[2], sp.lambda[3]);
        assert_eq!(sp.lambda[2], s.b);
    }

    #[test]
    fn bell_ground_state_dominates_at_low_temperature() {
        let sp = thermal_spectrum(&thermal_state(&params(1.0, 0.0, 0.0, 0.01)));
        assert_abs_diff_eq!(sp.lambda[2], 1.0, epsilon = 1e-12);
        assert!(sp.lambda[0] < 1e-40 && sp.lambda[1] < 1e-40 && sp.lambda[3] < 1e-15);
    }

    #[test]
    fn entropy_limits() {
        let hot = thermal_state(&params(1.0, -1.0, 1.4, 1e9));
        assert_abs_diff_eq!(pre_measurement_entropy(&hot), 4f64.ln(), epsilon = 1e-9);
        let cold = thermal_state(&params(1.0, -1.0, 1.4, 1e-3));
        assert_abs_diff_eq!(pre_measurement_entropy(&cold), 0.0, epsilon = 1e-12);
        assert!(diagonal_entropy(&cold) >= pre_measurement_entropy(&cold));
    }

    #[test]
    fn temperature_floor_clamps() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(p.t(), DEFAULT_T_FLOOR);
        let p = ModelParams::with_floor(1.0, 1.0, 1.0, 1e-4, 1e-3).unwrap();
        assert_eq!(p.t(), 1e-3);
        assert!(ModelParams::new(1.0, 1.0, 1.0, -0.1).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(XThermalState::new(0.25, 0.25, 0.25, 0.1).is_ok());
        assert!(XThermalState::new(0.3, 0.25, 0.25, 0.1).is_err());
        assert!(XThermalState::new(0.25, 0.25, 0.25, 0.3).is_err());
    }

    #[test]
    fn fidelity_and_bures_limits() {
        let sp = thermal_spectrum(&thermal_state(&params(1.0, -1.0, 1.4, 0.6)));
        assert_abs_diff_eq!(fidelity(&sp, &sp), 1.0, epsilon = 1e-15);
        assert_eq!(bures_distance(1.0), 0.0);
        assert_abs_diff_eq!(bures_distance(0.0), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn fidelity_landmarks() {
        let spec = |b, t| thermal_spectrum(&thermal_state(&params(1.0, -1.0, b, t)));
        let f = fidelity(&spec(1.8323, 0.5444), &spec(1.6164, 0.4765));
        assert_abs_diff_eq!(f, 0.985645, epsilon = 1e-4);
        // value recorded from the first run of this formula
        assert_abs_diff_eq!(bures_distance(0.985645), 0.1200287033, epsilon = 1e-9);
        let spec0 = |b| thermal_spectrum(&thermal_state(&params(1.0, 0.0, b, 0.404)));
        assert_abs_diff_eq!(
            fidelity(&spec0(0.7716), &spec0(1.0)),
            0.97994,
            epsilon = 1e-4
        );
    }
}
