//! Seeded random generators for operators, vectors and covariances.
//!
//! Everything draws from `ChaCha8Rng` so that a seed fixes every sample on
//! every platform.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::opalg::{c, Operator, Vector, C64};

pub type WorkbenchRng = ChaCha8Rng;

pub fn rng(seed: u64) -> WorkbenchRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(rng: &mut WorkbenchRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_complex(rng: &mut WorkbenchRng) -> C64 {
    c(gauss(rng), gauss(rng))
}

pub fn random_vector(rng: &mut WorkbenchRng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| random_complex(rng))
}

pub fn random_real_vector(rng: &mut WorkbenchRng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| c(gauss(rng), 0.0))
}

pub fn random_matrix(rng: &mut WorkbenchRng, rows: usize, cols: usize) -> Operator {
    Operator::from_fn(rows, cols, |_, _| random_complex(rng))
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phase fix).
pub fn random_unitary(rng: &mut WorkbenchRng, n: usize) -> Operator {
    let g = random_matrix(rng, n, n).into_matrix();
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let phases = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                c(1.0, 0.0)
            }
        } else {
            c(0.0, 0.0)
        }
    });
    Operator::from_matrix(q * phases)
}

/// Real orthogonal matrix from the QR of a real Gaussian matrix.
pub fn random_orthogonal(rng: &mut WorkbenchRng, n: usize) -> Operator {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| gauss(rng));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let q = DMatrix::from_fn(n, n, |i, j| {
        let s = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
        c(q[(i, j)] * s, 0.0)
    });
    Operator::from_matrix(q)
}

/// Real symmetric operator with spectrum drawn uniformly from `(lo, hi)`.
pub fn random_covariance_matrix(rng: &mut WorkbenchRng, n: usize, lo: f64, hi: f64) -> Operator {
    let o = random_orthogonal(rng, n);
    let diag: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    let d = Operator::from_real_diagonal(&diag);
    let m = &(&o * &d) * &o.transpose();
    // symmetrize away rounding so the entries are exactly real-symmetric
    Operator::from_fn(n, n, |i, j| {
        c(0.5 * (m.get(i, j).re + m.get(j, i).re), 0.0)
    })
}

pub fn uniform(rng: &mut WorkbenchRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}
