//! Entropy after a projective measurement of qubit B along polar angle
//! `theta`, and its analytic behaviour at the two endpoints.
//!
//! The azimuthal angle drops out for this family of states, so
//! `S(theta)` is a function of one variable. It is even in `theta` and in
//! `pi - theta`, which is why only `[0, pi/2]` matters for optimization.
//! The closed forms below accept any real `theta` anyway; the extended
//! window is useful for looking at bifurcations around `theta = 0`.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::entropy::{binary_entropy, log_ratio_over_difference, shannon};
use crate::error::{Error, Result};
use crate::spin_model::XThermalState;

/// Below this `r` the state is `theta`-independent.
pub const DEGENERATE_R: f64 = 1e-12;

/// Step for the one-sided first-derivative fits at the endpoints.
pub const FIRST_DERIVATIVE_STEP: f64 = 1e-5;

/// Step for central second differences.
pub const SECOND_DERIVATIVE_STEP: f64 = 1e-4;

/// A polar measurement angle restricted to `[0, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct MeasurementAngle(f64);

impl MeasurementAngle {
    pub fn new(theta: f64) -> Result<Self> {
        if (0.0..=FRAC_PI_2).contains(&theta) {
            Ok(Self(theta))
        } else {
            Err(Error::InvalidArgument(format!(
                "measurement angle {theta} outside [0, pi/2]"
            )))
        }
    }

    pub const ZERO: Self = Self(0.0);
    pub const HALF_PI: Self = Self(FRAC_PI_2);

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Eigenvalues `A1..A4` of the post-measurement state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PostMeasSpectrum {
    pub values: [f64; 4],
}

pub fn post_meas_spectrum(s: &XThermalState, theta: f64) -> PostMeasSpectrum {
    let (sin, cos) = theta.sin_cos();
    let diff = s.a - s.d;
    let beta = 1.0 - 4.0 * s.b;
    let coherence = 4.0 * s.v * s.v * sin * sin;
    let root_plus = ((diff + beta * cos).powi(2) + coherence).sqrt();
    let root_minus = ((diff - beta * cos).powi(2) + coherence).sqrt();
    let up = 1.0 + diff * cos;
    let down = 1.0 - diff * cos;
    // roundoff can push the small eigenvalues a hair below zero
    PostMeasSpectrum {
        values: [
            0.25 * (up + root_plus),
            (0.25 * (up - root_plus)).max(0.0),
            0.25 * (down + root_minus),
            (0.25 * (down - root_minus)).max(0.0),
        ],
    }
}

/// `S(theta)`: quaternary entropy of the post-measurement spectrum, nats.
pub fn post_meas_entropy(s: &XThermalState, theta: f64) -> f64 {
    shannon(&post_meas_spectrum(s, theta).values)
}

/// Entropy after measuring along z: `-a ln a - d ln d - 2 b ln b`.
pub fn branch_s0(s: &XThermalState) -> f64 {
    shannon(&[s.a, s.d, s.b, s.b])
}

/// Entropy after measuring along x: `ln 2 + h((1 + r)/2)`.
pub fn branch_shalfpi(s: &XThermalState) -> f64 {
    std::f64::consts::LN_2 + binary_entropy(0.5 * (1.0 + s.r().min(1.0)))
}

/// One-sided three-point estimates of `S'(0+)` and `S'(pi/2-)`. Both vanish
/// identically for every state; this is a diagnostic, not an input to
/// anything else.
pub fn endpoint_first_derivatives(s: &XThermalState) -> (f64, f64) {
    let h = FIRST_DERIVATIVE_STEP;
    let f = |theta| post_meas_entropy(s, theta);
    let at_zero = (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h);
    let at_half_pi =
        (3.0 * f(FRAC_PI_2) - 4.0 * f(FRAC_PI_2 - h) + f(FRAC_PI_2 - 2.0 * h)) / (2.0 * h);
    (at_zero, at_half_pi)
}

/// Central second difference of `S` at any `theta`.
pub fn finite_difference_second_derivative(s: &XThermalState, theta: f64, h: f64) -> f64 {
    let f = |x| post_meas_entropy(s, x);
    (f(theta + h) - 2.0 * f(theta) + f(theta - h)) / (h * h)
}

/// Closed-form `S''(0)`.
///
/// The difference quotients `ln(a/b)/(a-b)` and `ln(b/d)/(b-d)` go over to
/// their limits `1/b` and `1/d` when the entries coincide.
pub fn second_derivative_at_0(s: &XThermalState) -> f64 {
    let XThermalState { a, b, d, v } = *s;
    let polarization = (a - d) * (a.ln() - d.ln());
    let population = (1.0 - 4.0 * b) * (a.ln() + d.ln() - 2.0 * b.ln());
    let polarization = if a == d { 0.0 } else { polarization };
    let coherence = if v == 0.0 {
        0.0
    } else {
        2.0 * v * v * (log_ratio_over_difference(a, b) + log_ratio_over_difference(b, d))
    };
    0.25 * (polarization + population - coherence)
}

/// Closed-form `S''(pi/2)`.
///
/// The coherence prefactor is `8 v^2 (ab + bd - ad - b^2 + v^2) / r^3`;
/// that is what expanding the eigenvalues around `cos(theta) = 0` gives, and
/// it is what the finite-difference check in the tests confirms.
pub fn second_derivative_at_halfpi(s: &XThermalState) -> Result<f64> {
    let XThermalState { a, b, d, v } = *s;
    let r = s.r();
    if r <= DEGENERATE_R {
        return Err(Error::DegenerateState { r });
    }
    let r = r.min(1.0 - 1e-12);
    let beta = (1.0 - 4.0 * b) / r;
    let log_ratio = (2.0 * r / (1.0 - r)).ln_1p();
    let coherence = 8.0 * v * v * (a * b + b * d - a * d - b * b + v * v) / r.powi(3) * log_ratio;
    let polarization = 0.5
        * (a - d).powi(2)
        * ((1.0 + beta).powi(2) / (1.0 + r) + (1.0 - beta).powi(2) / (1.0 - r));
    Ok(coherence - polarization)
}
