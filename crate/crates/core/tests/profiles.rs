use std::f64::consts::{FRAC_PI_2, PI};

use qwd_core::deficit_optimizer::{sample_window, scan_profile, Shape, DEFAULT_SAMPLES};
use qwd_core::measurement_entropy::post_meas_entropy;
use qwd_core::spin_model::{thermal_state, ModelParams, XThermalState};

fn state(jz: f64, b: f64, t: f64) -> XThermalState {
    thermal_state(&ModelParams::new(-1.0, jz, b, t).unwrap())
}

fn shape(jz: f64, b: f64, t: f64) -> Shape {
    scan_profile(&state(jz, b, t), DEFAULT_SAMPLES)
        .unwrap()
        .shape
}

#[test]
fn shapes_along_the_field_row_b_1_4() {
    assert_eq!(shape(-1.0, 1.4, 1.0), Shape::MonotoneIncreasing);
    assert_eq!(shape(-1.0, 1.4, 0.72), Shape::UnimodalMin);
    assert_eq!(shape(-1.0, 1.4, 0.4), Shape::MonotoneDecreasing);
}

#[test]
fn horizontal_inflection_near_t_0_637() {
    // above the inflection S(theta) only rises; below it a max/min pair sits inside
    let (mut hi, mut lo) = (0.645, 0.63);
    assert!(matches!(shape(-1.5, 1.9, hi), Shape::MonotoneIncreasing));
    assert_eq!(shape(-1.5, 1.9, lo), Shape::Bimodal);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if shape(-1.5, 1.9, mid) == Shape::Bimodal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((lo - 0.637).abs() < 1e-3, "transition at {lo}");
    assert_eq!(shape(-1.5, 1.9, 0.628), Shape::Bimodal);
}

#[test]
fn bimodal_profiles_carry_one_minimum_and_one_maximum() {
    let p = scan_profile(&state(-1.5, 1.9, 0.628), DEFAULT_SAMPLES).unwrap();
    assert_eq!(p.interior_minima.len(), 1);
    assert_eq!(p.interior_maxima.len(), 1);
    assert!(!p.anomalous);
    for e in p.interior_minima.iter().chain(&p.interior_maxima) {
        assert!(e.theta > 0.0 && e.theta < FRAC_PI_2);
    }
    assert!(p.samples.len() >= DEFAULT_SAMPLES);
    assert_eq!(p.samples.first().unwrap().0, 0.0);
    assert_eq!(p.samples.last().unwrap().0, FRAC_PI_2);
}

#[test]
fn quartic_flat_bottom_on_the_zero_boundary() {
    let s = state(-1.0, 1.4, 0.742967);
    let window = sample_window(&s, -FRAC_PI_2, FRAC_PI_2, 401);
    let mid = window.len() / 2;
    assert!(window[mid].0.abs() < 1e-15);
    let h = window[mid + 1].0 - window[mid].0;
    let curvature = (window[mid + 1].1 - 2.0 * window[mid].1 + window[mid - 1].1) / (h * h);
    assert!(curvature.abs() < 1e-4, "discrete curvature {curvature}");
    // S - S(0) grows like theta^4: doubling theta multiplies it by ~16
    let rise = |k: usize| window[mid + k].1 - window[mid].1;
    let ratio = rise(8) / rise(4);
    assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
}

#[test]
fn profile_is_even_and_periodic_in_theta() {
    let s = state(-1.5, 1.9, 0.628);
    let n = 101;
    for i in 0..n {
        let th = PI * i as f64 / (n - 1) as f64;
        let here = post_meas_entropy(&s, th);
        let (left, right) = (post_meas_entropy(&s, -th), post_meas_entropy(&s, PI - th));
        assert!((left - here).abs() < 1e-13 && (right - here).abs() < 1e-13);
    }
}
