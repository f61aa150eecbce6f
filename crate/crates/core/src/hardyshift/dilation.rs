use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::{orthogonalize, ExponentialBasis, ExponentialFamily};
use crate::bogoliubov::Embedding;
use crate::error::{Error, Result};
use crate::opalg::{c, matmul, Operator, C64};

/// Uniform grid of `N = T/h` cells on `[0, T]` carrying the exponential
/// family. Cell `i` is `[ih, (i+1)h)`; functions are sampled at midpoints and
/// scaled by `h^{1/2}` so that coordinates carry the `L²` norm.
#[derive(Clone, Debug)]
pub struct ShiftModel {
    pub basis: ExponentialBasis,
    pub horizon: f64,
    pub cells: usize,
    /// Orthonormalized samples of `f_n`, `N × N_λ`; the grid `K₁`.
    pub k1: Operator,
    theta: OnceLock<Operator>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DilationKind {
    Shift,
    Approximant,
}

/// Storage of a dilation: the shift is a permutation of coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum DilationMatrix {
    /// Column `j` is the coordinate vector `e_{p[j]}`.
    Permutation(Vec<usize>),
    Dense(Operator),
}

/// Unitary on `C^N ⊕ C^N` (first summand `K`, second the added copy), with
/// coordinates `[f_0, …, f_{N−1}, g_0, …, g_{N−1}]`.
#[derive(Clone, Debug)]
pub struct GridDilation {
    pub kind: DilationKind,
    pub t: f64,
    pub steps: usize,
    pub cells: usize,
    pub repr: DilationMatrix,
}

/// Taylor coefficients of `Π_k (ā_k − z)/(1 − a_k z)` up to `z^{n−1}`.
fn discrete_blaschke_coeffs(a: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![c(0.0, 0.0); n];
    if n == 0 {
        return out;
    }
    out[0] = c(1.0, 0.0);
    for &ak in a {
        let mut factor = vec![c(0.0, 0.0); n];
        factor[0] = ak.conj();
        let mut pw = c(1.0, 0.0);
        for f in factor.iter_mut().skip(1) {
            *f = pw * (ak.norm_sqr() - 1.0);
            pw *= ak;
        }
        let mut next = vec![c(0.0, 0.0); n];
        for (i, &x) in out.iter().enumerate().filter(|(_, x)| x.norm() > 0.0) {
            for (j, &y) in factor.iter().take(n - i).enumerate() {
                next[i + j] += x * y;
            }
        }
        out = next;
    }
    out
}

/// Orthonormalizes columns left to right with positive pivots.
fn orthonormal_columns(a: DMatrix<C64>) -> DMatrix<C64> {
    let qr = a.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..r.ncols() {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for x in q.column_mut(j).iter_mut() {
                *x *= phase;
            }
        }
    }
    q
}

fn lower_shift(n: usize, m: usize) -> Operator {
    Operator::from_fn(n, n, |i, j| if i == j + m { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

impl ShiftModel {
    pub fn new(family: &ExponentialFamily, horizon: f64, h: f64) -> Result<Self> {
        let cells = steps_for("ShiftModel::new", horizon, h)?;
        let basis = orthogonalize(family)?;
        let n_l = basis.len();
        if cells <= 2 * n_l {
            return Err(Error::InvalidArgument {
                op: "ShiftModel::new",
                detail: format!("{cells} cells cannot carry {n_l} exponentials"),
            });
        }
        let sh = h.sqrt();
        let samples = DMatrix::from_fn(cells, n_l, |i, n| {
            let l = family.lambdas[n];
            (-2.0 * l.re).sqrt() * sh * (l * ((i as f64 + 0.5) * h)).exp()
        });
        let k1 = orthonormal_columns(samples);

        Ok(Self {
            basis,
            horizon,
            cells,
            k1: Operator::from_matrix(k1),
            theta: OnceLock::new(),
        })
    }

    /// Isometry `C^{N−N_λ} → C^N` onto `K₁^⊥`, the grid `Θ`; built on first use.
    pub fn theta(&self) -> &Operator {
        self.theta.get_or_init(|| {
            let n_l = self.basis.len();
            let a: Vec<C64> = self.basis.family.lambdas.iter().map(|&l| (l * self.step()).exp()).collect();
            let coeffs = discrete_blaschke_coeffs(&a, self.cells);
            let cols = self.cells - n_l;
            let toeplitz =
                DMatrix::from_fn(self.cells, cols, |i, j| if i >= j { coeffs[i - j] } else { c(0.0, 0.0) });
            let k1 = self.k1.matrix();
            let y = &toeplitz - matmul(k1, &matmul(&k1.adjoint(), &toeplitz));
            let svd = y.svd(true, true);
            Operator::from_matrix(matmul(&svd.u.expect("requested"), &svd.v_t.expect("requested")))
        })
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.cells as f64
    }

    /// Grid `S_t`: the truncated shift by `t/h` cells on the first `N − N_λ`
    /// cells, holding the last `N_λ` cells fixed so that the dilation loops of
    /// `S_t` and `V_t` have the same length.
    pub fn grid_shift(&self, t: f64) -> Result<Operator> {
        let m = self.steps(t)?;
        let n_l = self.basis.len();
        Ok(lower_shift(self.cells - n_l, m).direct_sum(&Operator::identity(n_l)))
    }

    /// Grid `V_t`: phases on `K₁` plus `Θ S_t Θ*` on `K₁^⊥`.
    pub fn grid_approximant(&self, t: f64) -> Result<Operator> {
        let m = self.steps(t)?;
        let n_l = self.basis.len();
        let phases: Vec<C64> = (0..n_l).map(|n| self.basis.phase(n, t)).collect();
        let k1_part = &(&self.k1 * &Operator::from_diagonal(&phases)) * &self.k1.adjoint();
        let k0_part = &(self.theta() * &lower_shift(self.cells - n_l, m)) * &self.theta().adjoint();
        Ok(&k1_part + &k0_part)
    }

    fn steps(&self, t: f64) -> Result<usize> {
        let m = steps_for("unitary_dilation", t, self.step())?;
        if m > self.cells {
            return Err(Error::InvalidArgument {
                op: "unitary_dilation",
                detail: format!("t = {t} exceeds the horizon {}", self.horizon),
            });
        }
        Ok(m)
    }

    /// `K` (first summand) against the part of `K′ ⊖ K` that stays clear of the
    /// far end of the grid for all times up to `t_max`.
    pub fn bulk_embedding(&self, t_max: f64) -> Result<Embedding> {
        let m = self.steps(t_max)?;
        let n = self.cells;
        let k: Vec<usize> = (0..n).collect();
        let emb = Embedding::coordinate(2 * n, &k)?;
        let bulk = Operator::from_fn(2 * n, n - m, |i, j| if i == n + j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        emb.with_complement(bulk)
    }
}

fn steps_for(op: &'static str, t: f64, h: f64) -> Result<usize> {
    if t < 0.0 {
        return Err(Error::NegativeTime { op, t });
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument {
            op,
            detail: format!("grid step {h} must be positive"),
        });
    }
    let m = (t / h).round();
    if (m * h - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::OffGrid { op, t, h });
    }
    Ok(m as usize)
}

impl GridDilation {
    pub fn dim(&self) -> usize {
        2 * self.cells
    }

    pub fn matrix(&self) -> Operator {
        match &self.repr {
            DilationMatrix::Permutation(p) => {
                let mut mat = DMatrix::zeros(p.len(), p.len());
                for (j, &i) in p.iter().enumerate() {
                    mat[(i, j)] = c(1.0, 0.0);
                }
                Operator::from_matrix(mat)
            }
            DilationMatrix::Dense(op) => op.clone(),
        }
    }

    /// Block acting on the first summand.
    pub fn compression(&self) -> Operator {
        let n = self.cells;
        match &self.repr {
            DilationMatrix::Permutation(p) => {
                Operator::from_fn(n, n, |i, j| if p[j] == i { c(1.0, 0.0) } else { c(0.0, 0.0) })
            }
            DilationMatrix::Dense(op) => op.sub_block(0, 0, n, n),
        }
    }

    /// `max(‖U*U − 1‖, ‖UU* − 1‖)`; exact for permutations.
    pub fn unitarity_residual(&self) -> f64 {
        match &self.repr {
            DilationMatrix::Permutation(p) => {
                let mut hit = vec![false; p.len()];
                for &i in p {
                    if i >= p.len() || hit[i] {
                        return 1.0;
                    }
                    hit[i] = true;
                }
                0.0
            }
            DilationMatrix::Dense(op) => op.unitarity_residual(),
        }
    }
}

/// Position of `g_j` on the bilateral line is `N−1−j`, `f_i` sits at `N+i`.
/// `S′_t` is the cyclic shift by `t/h` over the first `2N − N_λ` of those
/// positions. `V′_t` is `Z S″_t Z* ⊕ phases`, where `Z = Θ ⊕ 1` and `S″_t` is
/// the cyclic shift over the `2N − N_λ` positions of `K₁^⊥ ⊕ K`. Off the far
/// end of the grid (the seam of the loop) both act as the bilateral shift on
/// `K′ ⊖ K`, so `U′V′*` is the identity there exactly.
pub fn unitary_dilation(model: &ShiftModel, kind: DilationKind, t: f64) -> Result<GridDilation> {
    let m = model.steps(t)?;
    let n = model.cells;
    let dim = 2 * n;
    let repr = match kind {
        DilationKind::Shift => {
            let len = dim - model.basis.len();
            let target = |coord: usize| {
                let pos = if coord < n { n + coord } else { n - 1 - (coord - n) };
                if pos >= len {
                    return coord;
                }
                let new = (pos + m) % len;
                if new >= n {
                    new - n
                } else {
                    n + (n - 1 - new)
                }
            };
            DilationMatrix::Permutation((0..dim).map(target).collect())
        }
        DilationKind::Approximant => {
            let n_l = model.basis.len();
            let len = dim - n_l;
            let theta = model.theta().matrix();
            // Column `p` of `Z` is loop position `p`.
            let z_col = |p: usize, out: &mut DMatrix<C64>, col: usize| {
                if p < n {
                    out[(n + (n - 1 - p), col)] = c(1.0, 0.0);
                } else {
                    out.view_mut((0, col), (n, 1)).copy_from(&theta.column(p - n));
                }
            };
            let mut z = DMatrix::zeros(dim, len);
            let mut z_shifted = DMatrix::zeros(dim, len);
            for p in 0..len {
                z_col(p, &mut z, p);
                z_col((p + m) % len, &mut z_shifted, p);
            }
            let mut mat = matmul(&z_shifted, &z.adjoint());
            let phases: Vec<C64> = (0..n_l).map(|k| model.basis.phase(k, t)).collect();
            let k1 = model.k1.matrix();
            let k1_part = k1 * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(phases)) * k1.adjoint();
            let mut top = mat.view_mut((0, 0), (n, n));
            top += &k1_part;
            DilationMatrix::Dense(Operator::from_matrix(mat))
        }
    };
    Ok(GridDilation {
        kind,
        t,
        steps: m,
        cells: n,
        repr,
    })
}
