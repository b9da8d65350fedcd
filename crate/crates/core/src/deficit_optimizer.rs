//! Shape of `S(theta)` on `[0, pi/2]` and the optimized deficit.
//!
//! The profile is sampled uniformly and every extremum is bracketed by a
//! sign change of the discrete slope before golden-section refinement.
//! Refinement never runs blindly over the whole interval because `S` can
//! be bimodal.
//!
//! The analytic curvatures at the endpoints serve as virtual slopes just
//! inside `0` and `pi/2`. A minimum that has just split off an endpoint
//! sits inside the first (or last) sample cell, where no pair of samples
//! can see it; the curvature sign still certifies it.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::Serialize;

use crate::entropy::nats_to_bits;
use crate::error::{Error, Result};
use crate::golden;
use crate::measurement_entropy::{
    branch_s0, branch_shalfpi, post_meas_entropy, second_derivative_at_0,
    second_derivative_at_halfpi,
};
use crate::spin_model::{pre_measurement_entropy, thermal_state, ModelParams, XThermalState};

pub const DEFAULT_SAMPLES: usize = 201;
pub const MIN_SAMPLES: usize = 51;
pub const THETA_TOLERANCE: f64 = 1e-10;
pub const DEPTH_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "shape", content = "extrema")]
pub enum Shape {
    MonotoneIncreasing,
    MonotoneDecreasing,
    UnimodalMin,
    UnimodalMax,
    Bimodal,
    Flat,
    /// More than two interior extrema.
    Other(usize),
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::MonotoneIncreasing => write!(f, "monotone-increasing"),
            Shape::MonotoneDecreasing => write!(f, "monotone-decreasing"),
            Shape::UnimodalMin => write!(f, "unimodal-min"),
            Shape::UnimodalMax => write!(f, "unimodal-max"),
            Shape::Bimodal => write!(f, "bimodal"),
            Shape::Flat => write!(f, "flat"),
            Shape::Other(k) => write!(f, "other-{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub theta: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaProfile {
    /// `(theta, S(theta))` on a uniform grid over `[0, pi/2]`.
    pub samples: Vec<(f64, f64)>,
    pub shape: Shape,
    pub interior_minima: Vec<Extremum>,
    pub interior_maxima: Vec<Extremum>,
    /// Set when more than two interior extrema turned up.
    pub anomalous: bool,
}

impl ThetaProfile {
    pub fn deepest_minimum(&self) -> Option<Extremum> {
        self.interior_minima
            .iter()
            .copied()
            .min_by(|x, y| x.entropy.total_cmp(&y.entropy))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    Zero,
    Interior,
    HalfPi,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Zero => "zero",
            Branch::Interior => "interior",
            Branch::HalfPi => "halfpi",
        })
    }
}

/// Optimized deficit at one point of parameter space. Entropies in nats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficitResult {
    pub entropy: f64,
    pub s0: f64,
    pub s_theta: Option<f64>,
    pub s_halfpi: f64,
    pub delta0: f64,
    pub delta_theta: Option<f64>,
    pub delta_halfpi: f64,
    pub branch: Branch,
    pub optimal_theta: f64,
    pub deficit: f64,
    pub shape: Shape,
    /// Interior minimum and the pi/2 endpoint tie (within 1e-9) while both
    /// beat theta = 0 and the interior angle is far from pi/2: the
    /// signature of an interior/pi-half boundary with a finite jump.
    pub interior_halfpi_tie: bool,
}

impl DeficitResult {
    pub fn deficit_bits(&self) -> f64 {
        nats_to_bits(self.deficit)
    }

    /// Entropy of the winning branch.
    pub fn optimized_entropy(&self) -> f64 {
        self.entropy + self.deficit
    }
}

/// Sampling and tolerance settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimizer {
    pub samples: usize,
    pub theta_tolerance: f64,
    pub depth_tolerance: f64,
}

impl Default for Optimizer {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            theta_tolerance: THETA_TOLERANCE,
            depth_tolerance: DEPTH_TOLERANCE,
        }
    }
}

fn sign(x: f64, noise: f64) -> i8 {
    if x > noise {
        1
    } else if x < -noise {
        -1
    } else {
        0
    }
}

/// A slope observation between sample indices `left` and `right`.
#[derive(Clone, Copy)]
struct Slope {
    sign: i8,
    left: usize,
    right: usize,
}

impl Optimizer {
    pub fn scan_profile(&self, s: &XThermalState) -> Result<ThetaProfile> {
        let n = self.samples;
        if n < MIN_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "profile needs at least {MIN_SAMPLES} samples, got {n}"
            )));
        }
        let f = |theta: f64| post_meas_entropy(s, theta);
        let thetas: Vec<f64> = (0..n)
            .map(|i| FRAC_PI_2 * i as f64 / (n - 1) as f64)
            .collect();
        let values: Vec<f64> = thetas.iter().map(|&t| f(t)).collect();
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let noise = 64.0 * f64::EPSILON * scale.max(1e-300);

        let mut slopes = Vec::with_capacity(n + 1);
        slopes.push(Slope {
            sign: sign(second_derivative_at_0(s), 0.0),
            left: 0,
            right: 0,
        });
        let mut all_flat = true;
        for i in 0..n - 1 {
            let sg = sign(values[i + 1] - values[i], noise);
            all_flat &= sg == 0;
            slopes.push(Slope {
                sign: sg,
                left: i,
                right: i + 1,
            });
        }
        let end_curvature = second_derivative_at_halfpi(s).unwrap_or(0.0);
        slopes.push(Slope {
            sign: -sign(end_curvature, 0.0),
            left: n - 1,
            right: n - 1,
        });

        let samples: Vec<(f64, f64)> = thetas.iter().copied().zip(values.iter().copied()).collect();
        if all_flat {
            return Ok(ThetaProfile {
                samples,
                shape: Shape::Flat,
                interior_minima: Vec::new(),
                interior_maxima: Vec::new(),
                anomalous: false,
            });
        }

        let signed: Vec<Slope> = slopes.into_iter().filter(|s| s.sign != 0).collect();
        let mut minima = Vec::new();
        let mut maxima = Vec::new();
        let inner = 2.0 * self.theta_tolerance;
        for pair in signed.windows(2) {
            let (prev, next) = (pair[0], pair[1]);
            if prev.sign == next.sign {
                continue;
            }
            let lo = thetas[prev.left];
            let hi = thetas[next.right];
            let (v_lo, v_hi) = (values[prev.left], values[next.right]);
            if prev.sign < 0 {
                let (theta, entropy) = golden::minimize(f, lo, hi, self.theta_tolerance);
                if theta > inner && theta < FRAC_PI_2 - inner && entropy <= v_lo.min(v_hi) {
                    minima.push(Extremum { theta, entropy });
                }
            } else {
                let (theta, entropy) = golden::maximize(f, lo, hi, self.theta_tolerance);
                if theta > inner && theta < FRAC_PI_2 - inner && entropy >= v_lo.max(v_hi) {
                    maxima.push(Extremum { theta, entropy });
                }
            }
        }

        let first = signed.first().map_or(0, |s| s.sign);
        let shape = match (minima.len(), maxima.len()) {
            (0, 0) if first > 0 => Shape::MonotoneIncreasing,
            (0, 0) => Shape::MonotoneDecreasing,
            (1, 0) => Shape::UnimodalMin,
            (0, 1) => Shape::UnimodalMax,
            (1, 1) => Shape::Bimodal,
            (m, k) => Shape::Other(m + k),
        };
        let anomalous = minima.len() + maxima.len() > 2;
        if anomalous {
            log::warn!(
                "S(theta) has {} interior extrema for state {:?}",
                minima.len() + maxima.len(),
                s
            );
        }
        Ok(ThetaProfile {
            samples,
            shape,
            interior_minima: minima,
            interior_maxima: maxima,
            anomalous,
        })
    }

    pub fn optimize_state(&self, s: &XThermalState) -> Result<DeficitResult> {
        let entropy = pre_measurement_entropy(s);
        let s0 = branch_s0(s);
        let s_halfpi = branch_shalfpi(s);
        let profile = self.scan_profile(s)?;
        let interior = profile.deepest_minimum();

        let tol = self.depth_tolerance;
        let (mut branch, mut best, mut theta) = if s0 <= s_halfpi + tol {
            (Branch::Zero, s0, 0.0)
        } else {
            (Branch::HalfPi, s_halfpi, FRAC_PI_2)
        };
        if profile.shape == Shape::Flat {
            (branch, best, theta) = (Branch::Zero, s0, 0.0);
        } else if let Some(m) = interior {
            if m.entropy < s0.min(s_halfpi) - tol {
                (branch, best, theta) = (Branch::Interior, m.entropy, m.theta);
            }
        }

        let interior_halfpi_tie = interior.is_some_and(|m| {
            (m.entropy - s_halfpi).abs() <= 1e-9
                && m.entropy.max(s_halfpi) < s0 - tol
                && m.theta < FRAC_PI_2 - 0.05
        });
        if interior_halfpi_tie {
            log::warn!(
                "interior minimum ties the pi/2 endpoint away from pi/2: {:?}",
                s
            );
        }

        let to_deficit = |x: f64| (x - entropy).max(0.0);
        Ok(DeficitResult {
            entropy,
            s0,
            s_theta: interior.map(|m| m.entropy),
            s_halfpi,
            delta0: to_deficit(s0),
            delta_theta: interior.map(|m| to_deficit(m.entropy)),
            delta_halfpi: to_deficit(s_halfpi),
            branch,
            optimal_theta: theta,
            deficit: to_deficit(best),
            shape: profile.shape,
            interior_halfpi_tie,
        })
    }

    pub fn optimize(&self, p: &ModelParams) -> Result<DeficitResult> {
        self.optimize_state(&thermal_state(p))
    }
}

/// Profile with `n` samples and default tolerances.
pub fn scan_profile(s: &XThermalState, n: usize) -> Result<ThetaProfile> {
    Optimizer {
        samples: n,
        ..Optimizer::default()
    }
    .scan_profile(s)
}

/// Optimized deficit with default settings.
pub fn optimize_deficit(p: &ModelParams) -> DeficitResult {
    Optimizer::default()
        .optimize(p)
        .expect("default sample count is valid")
}

/// `|theta_opt(after) - theta_opt(before)|`.
pub fn optimal_angle_jump(before: &ModelParams, after: &ModelParams) -> f64 {
    (optimize_deficit(after).optimal_theta - optimize_deficit(before).optimal_theta).abs()
}

/// `S(theta)` sampled on an arbitrary window, e.g. `[-pi/2, pi/2]`.
pub fn sample_window(s: &XThermalState, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let theta = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            (theta, post_meas_entropy(s, theta))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(j: f64, jz: f64, b: f64, t: f64) -> ModelParams {
        ModelParams::new(j, jz, b, t).unwrap()
    }

    fn shape_at(j: f64, jz: f64, b: f64, t: f64) -> Shape {
        scan_profile(&thermal_state(&params(j, jz, b, t)), DEFAULT_SAMPLES)
            .unwrap()
            .shape
    }

    #[test]
    fn too_few_samples() {
        let s = thermal_state(&params(1.0, 0.0, 0.5, 0.5));
        assert!(scan_profile(&s, 50).is_err());
        assert!(scan_profile(&s, 51).is_ok());
    }

    #[test]
    fn profile_shapes_along_landmark_paths() {
        assert_eq!(shape_at(-1.0, -1.0, 1.4, 1.0), Shape::MonotoneIncreasing);
        assert_eq!(shape_at(-1.0, -1.5, 1.9, 0.628), Shape::Bimodal);
        assert_eq!(shape_at(-1.0, -1.0, 1.4, 0.4), Shape::MonotoneDecreasing);
        assert_eq!(shape_at(-1.0, -1.0, 1.4, 0.72), Shape::UnimodalMin);
    }

    #[test]
    fn flat_profile() {
        let s = XThermalState::new(0.25, 0.25, 0.25, 0.0).unwrap();
        let r = Optimizer::default().optimize_state(&s).unwrap();
        assert_eq!(r.shape, Shape::Flat);
        assert_eq!(r.branch, Branch::Zero);
        assert_eq!(r.optimal_theta, 0.0);
        assert_eq!(r.deficit, 0.0);
    }

    #[test]
    fn branches_on_the_antiferromagnetic_path() {
        assert_eq!(
            optimize_deficit(&params(-1.0, -1.0, 1.4, 1.0)).branch,
            Branch::Zero
        );
        let mid = optimize_deficit(&params(-1.0, -1.0, 1.4, 0.72));
        assert_eq!(mid.branch, Branch::Interior);
        assert!(mid.optimal_theta > 0.0 && mid.optimal_theta < FRAC_PI_2);
        assert_eq!(
            optimize_deficit(&params(-1.0, -1.0, 1.4, 0.4)).branch,
            Branch::HalfPi
        );
    }

    #[test]
    fn ferromagnetic_ising_like_dimer_is_all_zero_branch() {
        for i in 0..20 {
            for k in 0..20 {
                let t = 0.05 + 1.95 * i as f64 / 19.0;
                let b = 3.0 * k as f64 / 19.0;
                let r = optimize_deficit(&params(1.0, 1.5, b, t));
                assert_eq!(r.branch, Branch::Zero, "T = {t}, B = {b}");
            }
        }
    }

    #[test]
    fn deficit_reaches_one_bit_at_the_origin() {
        let r = optimize_deficit(&params(1.0, -1.0, 1e-6, 1e-3));
        assert_abs_diff_eq!(r.deficit, std::f64::consts::LN_2, epsilon = 1e-9);
        assert_abs_diff_eq!(r.deficit_bits(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn winning_value_is_minimum_of_present_branches() {
        let r = optimize_deficit(&params(-1.0, -1.5, 1.9, 0.62));
        let mut candidates = vec![r.delta0, r.delta_halfpi];
        candidates.extend(r.delta_theta);
        let min = candidates.iter().copied().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(r.deficit, min, epsilon = 1e-12);
        assert!(!r.interior_halfpi_tie);
    }

    #[test]
    fn jump_vanishes_across_a_continuous_boundary() {
        let at = |t| params(-1.0, -1.0, 1.4, t);
        let tc = 0.742967;
        let wide = optimal_angle_jump(&at(tc + 1e-3), &at(tc - 1e-3));
        let narrow = optimal_angle_jump(&at(tc + 1e-5), &at(tc - 1e-5));
        assert!(narrow < wide);
        assert!(narrow < 0.05, "jump {narrow}");
    }

    #[test]
    fn newborn_minimum_inside_first_cell_is_found() {
        // just below the 0-boundary the minimum sits well inside [0, pi/400]
        let s = thermal_state(&params(-1.0, -1.0, 1.4, 0.742967 - 2e-6));
        let p = scan_profile(&s, DEFAULT_SAMPLES).unwrap();
        let m = p.deepest_minimum().expect("interior minimum");
        assert!(m.theta < FRAC_PI_2 / 200.0);
        assert!(m.entropy < branch_s0(&s));
    }
}
