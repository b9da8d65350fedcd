//! Brute-force reference for the XXZ dimer.
//!
//! Everything here is built from explicit 4x4 complex matrices: the
//! Hamiltonian from Pauli tensor products, the Gibbs state from a numeric
//! eigendecomposition, and the post-measurement state from explicit
//! projectors on the second qubit. Nothing is shared with the analytic
//! code in `qwd-core`, which is the point: this crate exists so the closed
//! forms can be checked against something that does not use them.
//!
//! Not tuned for speed. Never used on the sweep path.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

const I: C64 = C64::new(0.0, 1.0);

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(c(0.0), c(1.0), c(1.0), c(0.0))
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(c(0.0), -I, I, c(0.0))
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(c(1.0), c(0.0), c(0.0), c(-1.0))
}

fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// `H = -1/2 [J (XX + YY) + Jz ZZ] - 1/2 B (Z1 + Z2)` in the basis
/// |00>, |01>, |10>, |11> with Z|0> = |0>.
pub fn hamiltonian(j: f64, jz: f64, b: f64) -> Mat4 {
    let id = Mat2::identity();
    let (x, y, z) = (sigma_x(), sigma_y(), sigma_z());
    let exchange = (kron(&x, &x) + kron(&y, &y)) * c(j) + kron(&z, &z) * c(jz);
    let zeeman = (kron(&z, &id) + kron(&id, &z)) * c(b);
    (exchange + zeeman) * c(-0.5)
}

/// A dense two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub matrix: Mat4,
}

impl DenseState {
    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest |rho - rho^dagger| entry.
    pub fn hermiticity_error(&self) -> f64 {
        let adj = self.matrix.adjoint();
        (self.matrix - adj)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues sorted in descending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let eig = SymmetricEigen::new(self.hermitian_part());
        let mut vals = [0.0; 4];
        for (slot, v) in vals.iter_mut().zip(eig.eigenvalues.iter()) {
            *slot = *v;
        }
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }

    /// von Neumann entropy in nats, with 0 ln 0 = 0 and tiny negative
    /// eigenvalues (roundoff) treated as zero.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| -x * x.ln())
            .sum()
    }

    fn hermitian_part(&self) -> Mat4 {
        (self.matrix + self.matrix.adjoint()) * c(0.5)
    }
}

/// Gibbs state `exp(-H/T)/Z` via eigendecomposition of the explicit
/// Hamiltonian. Energies are shifted by the ground energy before
/// exponentiating, so low temperatures do not overflow.
pub fn dense_thermal_state(j: f64, jz: f64, b: f64, t: f64) -> DenseState {
    assert!(t > 0.0, "temperature must be positive");
    let eig = SymmetricEigen::new(hamiltonian(j, jz, b));
    let e_min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|e| (-(e - e_min) / t).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let mut rho = Mat4::zeros();
    for (k, w) in weights.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        rho += v * v.adjoint() * c(w / z);
    }
    DenseState { matrix: rho }
}

/// `V(theta, phi)` from the SU(2) parametrization of the measurement basis.
pub fn rotation(theta: f64, phi: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    let e = C64::from_polar(1.0, phi);
    Mat2::new(c(co), e * s, c(s), -e * co)
}

/// The two projectors `V |k><k| V^dagger`, k = 0, 1.
pub fn projectors(theta: f64, phi: f64) -> [Mat2; 2] {
    let v = rotation(theta, phi);
    let p0 = Mat2::new(c(1.0), c(0.0), c(0.0), c(0.0));
    let p1 = Mat2::new(c(0.0), c(0.0), c(0.0), c(1.0));
    [v * p0 * v.adjoint(), v * p1 * v.adjoint()]
}

/// Result of a nonselective projective measurement on qubit B.
#[derive(Debug, Clone)]
pub struct Measurement {
    /// Outcome probabilities `p_k`.
    pub probabilities: [f64; 2],
    /// Normalized conditional states `rho^k` (zero matrix when `p_k = 0`).
    pub conditional: [DenseState; 2],
    /// `sum_k (I x Pi_k) rho (I x Pi_k)^dagger`.
    pub averaged: DenseState,
}

pub fn dense_post_measurement(rho: &DenseState, theta: f64, phi: f64) -> Measurement {
    let id = Mat2::identity();
    let mut probabilities = [0.0; 2];
    let mut unnormalized = [Mat4::zeros(), Mat4::zeros()];
    for (k, pi) in projectors(theta, phi).iter().enumerate() {
        let op = kron(&id, pi);
        let branch = op * rho.matrix * op.adjoint();
        probabilities[k] = branch.trace().re;
        unnormalized[k] = branch;
    }
    let averaged = DenseState {
        matrix: unnormalized[0] + unnormalized[1],
    };
    let conditional = [0, 1].map(|k| {
        let p = probabilities[k];
        let m = if p > 0.0 {
            unnormalized[k] * c(1.0 / p)
        } else {
            Mat4::zeros()
        };
        DenseState { matrix: m }
    });
    Measurement {
        probabilities,
        conditional,
        averaged,
    }
}

/// Maximum work extractable from a bath at temperature `t` with a working
/// body in state `rho`: `T (ln 4 - S(rho))`.
pub fn extractable_work(rho: &DenseState, t: f64) -> f64 {
    t * (4.0f64.ln() - rho.entropy())
}

/// Brute-force one-way work deficit: minimum over a `(theta, phi)` grid of
/// the work lost by measuring qubit B, divided by `T`.
pub fn brute_force_deficit(rho: &DenseState, t: f64, n_theta: usize, n_phi: usize) -> f64 {
    let w_before = extractable_work(rho, t);
    let mut best = f64::INFINITY;
    for i in 0..n_theta {
        let theta = std::f64::consts::PI * i as f64 / (n_theta - 1) as f64;
        for k in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n_phi as f64;
            let after = dense_post_measurement(rho, theta, phi).averaged;
            let loss = (w_before - extractable_work(&after, t)) / t;
            best = best.min(loss);
        }
    }
    best
}
