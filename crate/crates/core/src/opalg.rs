//! Dense complex operators on finite-dimensional Hilbert spaces.
//!
//! [`Operator`] is a thin wrapper over a column-major `nalgebra` matrix that
//! carries the handful of operations every other module leans on: adjoints,
//! Kronecker products, the Hilbert–Schmidt and operator norms, functional
//! calculus for Hermitian matrices and the polar decomposition.
//!
//! Antilinear maps are stored as a matrix `M` acting on the entrywise complex
//! conjugate of the input, `x ↦ M·conj(x)`; see [`AntilinearOperator`].

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Vector = DVector<C64>;

/// Tolerance for algebraic identities (CAR, projections, reconstruction).
pub const ALGEBRAIC_TOL: f64 = 1e-10;
/// Tolerance for spectral statements (eigenvalue membership, polar parts).
pub const SPECTRAL_TOL: f64 = 1e-8;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Self {
        Self { mat }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_matrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_matrix(DMatrix::identity(n, n))
    }

    pub fn scalar(n: usize, value: C64) -> Self {
        Self::from_matrix(DMatrix::from_diagonal_element(n, n, value))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::from_matrix(DMatrix::from_fn(rows, cols, f))
    }

    /// Builds an operator from entries listed row by row.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "from_row_major",
                expected: rows * cols,
                actual: entries.len(),
            });
        }
        Ok(Self::from_matrix(DMatrix::from_row_slice(rows, cols, entries)))
    }

    pub fn from_real_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let entries: Vec<C64> = entries.iter().map(|&x| c(x, 0.0)).collect();
        Self::from_row_major(rows, cols, &entries)
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let diag: Vec<C64> = diag.iter().map(|&x| c(x, 0.0)).collect();
        Self::from_diagonal(&diag)
    }

    /// Rank-one operator `|u⟩⟨v|`.
    pub fn outer(u: &Vector, v: &Vector) -> Self {
        Self::from_matrix(u * v.adjoint())
    }

    pub fn rows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn cols(&self) -> usize {
        self.mat.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    /// Row-major copy of the entries.
    pub fn entries(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.mat[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix(self.mat.adjoint())
    }

    pub fn conjugate(&self) -> Self {
        Self::from_matrix(self.mat.map(|z| z.conj()))
    }

    pub fn transpose(&self) -> Self {
        Self::from_matrix(self.mat.transpose())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::from_matrix(&self.mat * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(c(factor, 0.0))
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.mat * v
    }

    pub fn column(&self, j: usize) -> Vector {
        self.mat.column(j).into_owned()
    }

    pub fn kron(&self, other: &Operator) -> Self {
        Self::from_matrix(self.mat.kronecker(&other.mat))
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Checked product; the operator traits panic on mismatched shapes instead.
    pub fn compose(&self, other: &Operator) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch {
                op: "compose",
                expected: self.cols(),
                actual: other.rows(),
            });
        }
        Ok(Self::from_matrix(matmul(&self.mat, &other.mat)))
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        Self::from_matrix(&self.mat * &other.mat - &other.mat * &self.mat)
    }

    pub fn anticommutator(&self, other: &Operator) -> Self {
        Self::from_matrix(&self.mat * &other.mat + &other.mat * &self.mat)
    }

    pub fn direct_sum(&self, other: &Operator) -> Self {
        let (r1, c1) = (self.rows(), self.cols());
        let mut m = DMatrix::zeros(r1 + other.rows(), c1 + other.cols());
        m.view_mut((0, 0), (r1, c1)).copy_from(&self.mat);
        m.view_mut((r1, c1), (other.rows(), other.cols()))
            .copy_from(&other.mat);
        Self::from_matrix(m)
    }

    /// `[[a, b], [c, d]]` assembled from equally shaped square blocks.
    pub fn block2(a: &Operator, b: &Operator, c_: &Operator, d: &Operator) -> Self {
        let n = a.rows();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&a.mat);
        m.view_mut((0, n), (n, n)).copy_from(&b.mat);
        m.view_mut((n, 0), (n, n)).copy_from(&c_.mat);
        m.view_mut((n, n), (n, n)).copy_from(&d.mat);
        Self::from_matrix(m)
    }

    /// Square sub-block `[offset, offset + size)` in both indices.
    pub fn sub_block(&self, row: usize, col: usize, rows: usize, cols: usize) -> Self {
        Self::from_matrix(self.mat.view((row, col), (rows, cols)).into_owned())
    }

    pub fn exp(&self) -> Self {
        Self::from_matrix(self.mat.clone().exp())
    }

    /// `‖A*A − I‖₂`.
    pub fn isometry_residual(&self) -> f64 {
        let n = self.cols();
        hs_norm(&Self::from_matrix(
            matmul(&self.mat.adjoint(), &self.mat) - DMatrix::<C64>::identity(n, n),
        ))
    }

    /// Largest of `‖A*A − I‖₂` and `‖AA* − I‖₂`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.rows();
        let left = self.isometry_residual();
        let right = hs_norm(&Self::from_matrix(
            matmul(&self.mat, &self.mat.adjoint()) - DMatrix::<C64>::identity(n, n),
        ));
        left.max(right)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hs_norm(&(self - &self.adjoint()))
    }

    /// Eigen-decomposition of a Hermitian operator: ascending eigenvalues and
    /// the unitary whose columns are the matching eigenvectors.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, Operator)> {
        self.require_square("hermitian_eigen")?;
        let herm = (&self.mat + self.mat.adjoint()) * c(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let n = self.rows();
        let vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok((values, Self::from_matrix(vecs)))
    }

    /// `f(A)` for Hermitian `A` through its spectral decomposition.
    pub fn hermitian_function(&self, f: impl Fn(f64) -> f64) -> Result<Operator> {
        let (values, vecs) = self.hermitian_eigen()?;
        let fd: Vec<C64> = values.iter().map(|&x| c(f(x), 0.0)).collect();
        Ok(&(&vecs * &Operator::from_diagonal(&fd)) * &vecs.adjoint())
    }

    /// Square root of a positive semidefinite operator; tiny negative
    /// eigenvalues from rounding are clamped to zero.
    pub fn sqrt_psd(&self) -> Result<Operator> {
        self.hermitian_function(|x| x.max(0.0).sqrt())
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.mat.clone().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Numerical rank with singular values below `tol · σ_max` discarded.
    pub fn rank(&self, tol: f64) -> usize {
        let s = self.singular_values();
        let Some(&top) = s.first() else { return 0 };
        if top == 0.0 {
            return 0;
        }
        s.iter().filter(|&&x| x > tol * top).count()
    }

    pub fn inverse(&self) -> Result<Operator> {
        self.require_square("inverse")?;
        self.mat
            .clone()
            .try_inverse()
            .map(Operator::from_matrix)
            .ok_or_else(|| Error::InvalidArgument {
                op: "inverse",
                detail: "operator is singular".into(),
            })
    }

    /// Moore–Penrose pseudo-inverse, singular values below `tol · σ_max` dropped.
    pub fn pseudo_inverse(&self, tol: f64) -> Operator {
        let svd = self.mat.clone().svd(true, true);
        let u = svd.u.expect("svd u");
        let vt = svd.v_t.expect("svd v_t");
        let top = svd.singular_values.iter().fold(0.0_f64, |m, &x| m.max(x));
        let k = svd.singular_values.len();
        let mut inv = DMatrix::zeros(self.cols(), self.rows());
        for idx in 0..k {
            let s = svd.singular_values[idx];
            if top > 0.0 && s > tol * top {
                let col = vt.row(idx).adjoint();
                let row = u.column(idx).adjoint();
                inv += (col * row) * c(1.0 / s, 0.0);
            }
        }
        Operator::from_matrix(inv)
    }

    pub(crate) fn require_square(&self, op: &'static str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NotSquare {
                op,
                rows: self.rows(),
                cols: self.cols(),
            })
        }
    }
}

/// Above this many multiply-adds a complex product goes through four real
/// products, which use the blocked real kernel.
const SPLIT_PRODUCT_WORK: usize = 1 << 18;

/// Complex matrix product.
pub fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    if a.nrows() * a.ncols() * b.ncols() < SPLIT_PRODUCT_WORK {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator::from_matrix(&self.mat + &rhs.mat)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator::from_matrix(&self.mat - &rhs.mat)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator::from_matrix(matmul(&self.mat, &rhs.mat))
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator::from_matrix(-&self.mat)
    }
}

/// Hilbert–Schmidt (Frobenius) norm.
pub fn hs_norm(a: &Operator) -> f64 {
    a.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn operator_norm(a: &Operator) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    a.singular_values().first().copied().unwrap_or(0.0)
}

/// `A = U·P` with `P = (A*A)^{1/2}` and `U` unitary (a partial isometry when
/// `A` is singular; the SVD picks one completion).
pub fn polar_decompose(a: &Operator) -> Result<(Operator, Operator)> {
    a.require_square("polar_decompose")?;
    let n = a.rows();
    if n == 0 {
        return Ok((Operator::zeros(0, 0), Operator::zeros(0, 0)));
    }
    let unitary = match newton_polar(&a.mat) {
        Some(u) => u,
        None => {
            let svd = a.mat.clone().svd(true, true);
            matmul(&svd.u.expect("svd u"), &svd.v_t.expect("svd v_t"))
        }
    };
    let p = matmul(&unitary.adjoint(), &a.mat);
    let positive = (&p + p.adjoint()) * c(0.5, 0.0);
    Ok((Operator::from_matrix(unitary), Operator::from_matrix(positive)))
}

/// Scaled Newton iteration `U ← (ζU + ζ⁻¹U^{-*})/2` for invertible input.
fn newton_polar(a: &DMatrix<C64>) -> Option<DMatrix<C64>> {
    let n = a.nrows();
    let mut u = a.clone();
    let mut settled = false;
    for _ in 0..100 {
        let inv = u.clone().try_inverse()?;
        let (nu, ni) = (u.norm(), inv.norm());
        if !(nu.is_finite() && ni.is_finite()) || nu * ni > 1e12 * n as f64 {
            return None;
        }
        let zeta = (ni / nu).sqrt();
        let next = (&u * c(zeta, 0.0) + inv.adjoint() * c(1.0 / zeta, 0.0)) * c(0.5, 0.0);
        let change = (&next - &u).norm();
        u = next;
        if settled {
            break;
        }
        // quadratic convergence: one more step after this lands at rounding level
        settled = change <= 1e-8 * (n as f64).sqrt();
    }
    Some(u)
}

pub fn inner(u: &Vector, v: &Vector) -> C64 {
    u.dotc(v)
}

pub fn conj_vec(v: &Vector) -> Vector {
    v.map(|z| z.conj())
}

/// An antilinear map `x ↦ M·conj(x)`.
///
/// Composition of two antilinear maps is linear: `(A∘B)x = M_A·conj(M_B)·x`.
#[derive(Clone, Debug, PartialEq)]
pub struct AntilinearOperator {
    matrix: Operator,
}

impl AntilinearOperator {
    pub fn new(matrix: Operator) -> Self {
        Self { matrix }
    }

    /// Entrywise complex conjugation in the computational basis.
    pub fn conjugation(n: usize) -> Self {
        Self::new(Operator::identity(n))
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        self.matrix.apply(&conj_vec(v))
    }

    /// `self ∘ other` for antilinear `other`; the result is linear.
    pub fn compose(&self, other: &AntilinearOperator) -> Operator {
        &self.matrix * &other.matrix.conjugate()
    }

    /// `self ∘ L` for linear `L`.
    pub fn after_linear(&self, l: &Operator) -> AntilinearOperator {
        AntilinearOperator::new(&self.matrix * &l.conjugate())
    }

    /// `L ∘ self` for linear `L`.
    pub fn before_linear(&self, l: &Operator) -> AntilinearOperator {
        AntilinearOperator::new(l * &self.matrix)
    }

    /// `self ∘ X ∘ self` as a linear operator.
    pub fn sandwich(&self, x: &Operator) -> Operator {
        &(&self.matrix * &x.conjugate()) * &self.matrix.conjugate()
    }

    pub fn square(&self) -> Operator {
        self.compose(self)
    }

    /// `‖M‖₂`-distance between two antilinear maps.
    pub fn distance(&self, other: &AntilinearOperator) -> f64 {
        hs_norm(&(&self.matrix - &other.matrix))
    }

    /// Antiunitarity is unitarity of the matrix part.
    pub fn unitarity_residual(&self) -> f64 {
        self.matrix.unitarity_residual()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_matrix, random_unitary, rng};

    #[test]
    fn hs_norm_examples() {
        assert_eq!(hs_norm(&Operator::zeros(3, 3)), 0.0);
        assert!((hs_norm(&Operator::identity(5)) - 5f64.sqrt()).abs() < 1e-15);
        let a = Operator::from_real_row_major(2, 2, &[3.0, 4.0, 0.0, 0.0]).unwrap();
        assert!((hs_norm(&a) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn hs_norm_matches_trace_formula() {
        let mut r = rng(1);
        let a = random_matrix(&mut r, 6, 6);
        let tr = (&a.adjoint() * &a).trace().re;
        assert!((hs_norm(&a) - tr.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&Operator::identity(4)) - 1.0).abs() < 1e-12);
        let d = Operator::from_real_diagonal(&[1.0, 3.0]);
        assert!((operator_norm(&d) - 3.0).abs() < 1e-12);
        let mut r = rng(2);
        let u = random_unitary(&mut r, 5);
        let v = random_unitary(&mut r, 5);
        let rank_one = Operator::outer(&u.column(0), &v.column(2));
        assert!((operator_norm(&rank_one) - 1.0).abs() < 1e-12);
        assert!((hs_norm(&rank_one) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polar_of_scalar_multiples_of_identity() {
        let (u, p) = polar_decompose(&Operator::identity(3)).unwrap();
        assert!(hs_norm(&(&u - &Operator::identity(3))) < 1e-12);
        assert!(hs_norm(&(&p - &Operator::identity(3))) < 1e-12);
        let (u, p) = polar_decompose(&Operator::scalar(3, c(2.0, 0.0))).unwrap();
        assert!(hs_norm(&(&u - &Operator::identity(3))) < 1e-12);
        assert!(hs_norm(&(&p - &Operator::scalar(3, c(2.0, 0.0)))) < 1e-12);
    }

    #[test]
    fn polar_matches_eigen_oracle() {
        let mut r = rng(3);
        let a = random_matrix(&mut r, 4, 4);
        let (u, p) = polar_decompose(&a).unwrap();
        assert!(u.unitarity_residual() < 1e-10);
        assert!(hs_norm(&(&(&u * &p) - &a)) < 1e-10);
        // oracle: P = (A*A)^{1/2} through the Hermitian eigensolver
        let oracle = (&a.adjoint() * &a).sqrt_psd().unwrap();
        assert!(hs_norm(&(&p - &oracle)) < 1e-10);
    }

    #[test]
    fn polar_rejects_rectangular() {
        let err = polar_decompose(&Operator::zeros(2, 3)).unwrap_err();
        assert!(matches!(err, Error::NotSquare { .. }));
    }

    #[test]
    fn antilinear_composition_rule() {
        let mut r = rng(4);
        let a = AntilinearOperator::new(random_matrix(&mut r, 3, 3));
        let b = AntilinearOperator::new(random_matrix(&mut r, 3, 3));
        let v = random_matrix(&mut r, 3, 1).column(0);
        let lhs = a.apply(&b.apply(&v));
        let rhs = a.compose(&b).apply(&v);
        assert!((lhs - rhs).norm() < 1e-12);
        let x = random_matrix(&mut r, 3, 3);
        let lhs = a.apply(&x.apply(&a.apply(&v)));
        assert!((lhs - a.sandwich(&x).apply(&v)).norm() < 1e-12);
    }

    #[test]
    fn conjugation_is_an_involution() {
        let j = AntilinearOperator::conjugation(4);
        assert!(hs_norm(&(&j.square() - &Operator::identity(4))) < 1e-15);
    }
}
