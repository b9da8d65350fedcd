use std::f64::consts::{FRAC_PI_2, PI, TAU};

use qwd_core::deficit_optimizer::optimize_deficit;
use qwd_core::measurement_entropy::post_meas_entropy;
use qwd_core::spin_model::{thermal_spectrum, thermal_state, ModelParams};
use qwd_oracle::{dense_post_measurement, dense_thermal_state, extractable_work, DenseState};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn draw(rng: &mut StdRng) -> ModelParams {
    ModelParams::new(
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-3.0..3.0),
        rng.gen_range(0.05..3.0),
    )
    .unwrap()
}

fn dense(p: &ModelParams) -> DenseState {
    dense_thermal_state(p.j(), p.jz(), p.b(), p.t())
}

fn sorted_desc(mut x: [f64; 4]) -> [f64; 4] {
    x.sort_by(|a, b| b.total_cmp(a));
    x
}

#[test]
fn thermal_spectrum_matches_dense_gibbs_matrix() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..200 {
        let p = draw(&mut rng);
        let analytic = sorted_desc(thermal_spectrum(&thermal_state(&p)).lambda);
        let rho = dense(&p);
        assert!(rho.hermiticity_error() < 1e-12);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        for (x, y) in analytic.iter().zip(rho.eigenvalues()) {
            assert!((x - y).abs() < 1e-10, "{p:?}: {analytic:?}");
        }
    }
}

#[test]
fn post_measurement_entropy_matches_oracle() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..500 {
        let p = draw(&mut rng);
        let theta = rng.gen_range(0.0..PI);
        let phi = rng.gen_range(0.0..TAU);
        let oracle = dense_post_measurement(&dense(&p), theta, phi)
            .averaged
            .entropy();
        let analytic = post_meas_entropy(&thermal_state(&p), theta);
        assert!((oracle - analytic).abs() < 1e-10, "{p:?} theta = {theta}");
    }
}

#[test]
fn oracle_spectrum_is_symmetric_and_azimuth_free() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..100 {
        let p = draw(&mut rng);
        let rho = dense(&p);
        let theta = rng.gen_range(0.0..PI);
        let base = dense_post_measurement(&rho, theta, 0.0)
            .averaged
            .eigenvalues();
        let mirrored = dense_post_measurement(&rho, PI - theta, 0.0)
            .averaged
            .eigenvalues();
        let turned = dense_post_measurement(&rho, theta, rng.gen_range(0.0..TAU))
            .averaged
            .eigenvalues();
        for k in 0..4 {
            assert!((base[k] - mirrored[k]).abs() < 1e-10);
            assert!((base[k] - turned[k]).abs() < 1e-10);
        }
    }
}

#[test]
fn oracle_spectrum_ignores_coherence_sign() {
    let mut rng = StdRng::seed_from_u64(14);
    for _ in 0..100 {
        let p = draw(&mut rng);
        let theta = rng.gen_range(0.0..PI);
        let plus = dense_post_measurement(&dense(&p), theta, 0.0)
            .averaged
            .eigenvalues();
        let minus = dense_post_measurement(&dense(&p.flip_j()), theta, 0.0)
            .averaged
            .eigenvalues();
        for k in 0..4 {
            assert!((plus[k] - minus[k]).abs() < 1e-10);
        }
    }
}

#[test]
fn work_deficit_matches_extractable_work_loss() {
    let mut rng = StdRng::seed_from_u64(15);
    for _ in 0..100 {
        let p = draw(&mut rng);
        let r = optimize_deficit(&p);
        let rho = dense(&p);
        let after = dense_post_measurement(&rho, r.optimal_theta, 0.0).averaged;
        let loss = (extractable_work(&rho, p.t()) - extractable_work(&after, p.t())) / p.t();
        assert!(
            (loss - r.deficit).abs() < 1e-8,
            "{p:?}: {loss} vs {}",
            r.deficit
        );
    }
}

#[test]
fn deficit_is_the_global_minimum_of_a_dense_scan() {
    let mut rng = StdRng::seed_from_u64(16);
    let n = 10_001;
    for _ in 0..200 {
        let p = draw(&mut rng);
        let s = thermal_state(&p);
        let r = optimize_deficit(&p);
        let brute = (0..n)
            .map(|i| post_meas_entropy(&s, FRAC_PI_2 * i as f64 / (n - 1) as f64))
            .fold(f64::INFINITY, f64::min)
            - r.entropy;
        assert!(r.deficit <= brute + 1e-12, "{p:?}");
        assert!(brute - r.deficit < 1e-8, "{p:?}: {brute} vs {}", r.deficit);
    }
}

#[test]
fn oracle_grid_search_agrees_with_optimizer() {
    let mut rng = StdRng::seed_from_u64(17);
    for _ in 0..5 {
        let p = draw(&mut rng);
        let brute = qwd_oracle::brute_force_deficit(&dense(&p), p.t(), 2001, 3);
        let r = optimize_deficit(&p);
        assert!(r.deficit <= brute + 1e-10);
        assert!(brute - r.deficit < 1e-6, "{p:?}: {brute} vs {}", r.deficit);
    }
}

#[test]
fn known_extremes_of_extractable_work() {
    let t = 0.7;
    let mixed = dense_thermal_state(1.0, -1.0, 0.3, 1e6);
    assert!(extractable_work(&mixed, t).abs() < 1e-9);
    let pure = dense_thermal_state(1.0, -1.0, 0.3, 1e-3);
    assert!((extractable_work(&pure, t) - t * 4f64.ln()).abs() < 1e-9);
}
