//! Quasi-free states and their doubled (purifying) representation.
//!
//! A covariance `0 < R < 1` with real entries determines the state `ω_R` on the
//! CAR algebra over `K = C^n`. It is realized on `F(K) ⊗ F(K)` with vacuum
//! `Ω⊗Ω` by
//!
//! ```text
//! π(a(f⊕0)) =  a((1−R)^{1/2} f) ⊗ Γ + 1 ⊗ a*(R^{1/2} J f)
//! π(a(0⊕f)) = −a(R^{1/2} f)     ⊗ Γ + 1 ⊗ a*((1−R)^{1/2} J f)
//! ```
//!
//! with `J` entrywise conjugation. Both lines are antilinear in `f`, and the
//! pair satisfies the CAR over `K⊕K`. The second-factor terms are creators;
//! with annihilators there the two-point function would vanish. The relative
//! minus sign in the second line is what makes `π(a(f⊕0))` and `π(a(0⊕g))`
//! anticommute.
//!
//! Under the inner-product convention of this crate (antilinear in the first
//! slot) the two-point functions are `ω(a*(f)a(g)) = ⟨g, R f⟩` and
//! `ω_P(a*(F)a(G)) = ⟨G, P F⟩`.
//!
//! The tensor factorization puts the first factor on the high digits of the
//! basis index: `|i₁⟩⊗|i₂⟩` has index `i₁·2^n + i₂`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::opalg::{c, conj_vec, inner, Operator, Vector, C64, ONE, ZERO};

/// Largest one-particle dimension for which the doubled space fits the mode cap.
pub const MAX_DOUBLED_MODES: usize = 6;

const COVARIANCE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceState {
    r: Operator,
    nu: Option<f64>,
}

impl CovarianceState {
    /// Validates `R = R*`, real entries and spectrum inside `(0, 1)`.
    pub fn new(r: Operator) -> Result<Self> {
        if !r.is_square() {
            return Err(Error::NotSquare {
                op: "CovarianceState::new",
                rows: r.rows(),
                cols: r.cols(),
            });
        }
        let imag = r.entries().iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
        if imag > COVARIANCE_TOL {
            return Err(Error::InvalidCovariance {
                invariant: "real entries",
                detail: format!("largest imaginary part {imag:.3e}"),
            });
        }
        let herm = r.hermiticity_residual();
        if herm > COVARIANCE_TOL {
            return Err(Error::InvalidCovariance {
                invariant: "R = R*",
                detail: format!("hermiticity residual {herm:.3e}"),
            });
        }
        let (values, _) = r.hermitian_eigen()?;
        if let (Some(&lo), Some(&hi)) = (values.first(), values.last()) {
            if lo <= 0.0 {
                return Err(Error::InvalidCovariance {
                    invariant: "ker R = 0",
                    detail: format!("smallest eigenvalue {lo:.3e}"),
                });
            }
            if hi >= 1.0 {
                return Err(Error::InvalidCovariance {
                    invariant: "ker(I − R) = 0",
                    detail: format!("largest eigenvalue {hi:.3e}"),
                });
            }
        }
        // drop rounding noise so the square roots below stay real
        let cleaned = Operator::from_fn(r.rows(), r.cols(), |i, j| {
            c(0.5 * (r.get(i, j).re + r.get(j, i).re), 0.0)
        });
        Ok(Self { r: cleaned, nu: None })
    }

    /// The gauge-invariant state `R = ν·I`.
    pub fn scalar(modes: usize, nu: f64) -> Result<Self> {
        let mut s = Self::new(Operator::scalar(modes, c(nu, 0.0)))?;
        s.nu = Some(nu);
        Ok(s)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Operator::from_real_diagonal(diag))
    }

    pub fn modes(&self) -> usize {
        self.r.rows()
    }

    pub fn covariance(&self) -> &Operator {
        &self.r
    }

    pub fn nu(&self) -> Option<f64> {
        self.nu
    }

    /// `λ = ν/(1−ν)` for scalar states.
    pub fn lambda(&self) -> Option<f64> {
        self.nu.map(|nu| nu / (1.0 - nu))
    }

    pub fn sqrt_r(&self) -> Operator {
        self.r.sqrt_psd().expect("validated covariance is square")
    }

    pub fn sqrt_one_minus_r(&self) -> Operator {
        self.r
            .hermitian_function(|x| (1.0 - x).max(0.0).sqrt())
            .expect("validated covariance is square")
    }

    /// `R^{1/2}(1−R)^{1/2}`.
    pub fn off_diagonal(&self) -> Operator {
        self.r
            .hermitian_function(|x| (x * (1.0 - x)).max(0.0).sqrt())
            .expect("validated covariance is square")
    }

    fn check_len(&self, op: &'static str, f: &Vector) -> Result<()> {
        if f.len() != self.modes() {
            return Err(Error::DimensionMismatch {
                op,
                expected: self.modes(),
                actual: f.len(),
            });
        }
        Ok(())
    }
}

/// `ω_R(a*(f_m)⋯a*(f_1) a(g_1)⋯a(g_n)) = δ_{mn} det(⟨g_j, R f_i⟩)`.
///
/// For real vectors the entry equals `(f_i, R g_j)`.
pub fn quasifree_expectation(state: &CovarianceState, fs: &[Vector], gs: &[Vector]) -> Result<C64> {
    for f in fs.iter().chain(gs) {
        state.check_len("quasifree_expectation", f)?;
    }
    if fs.len() != gs.len() {
        return Ok(ZERO);
    }
    let m = fs.len();
    if m == 0 {
        return Ok(ONE);
    }
    let rf: Vec<Vector> = fs.iter().map(|f| state.r.apply(f)).collect();
    let mat = DMatrix::from_fn(m, m, |i, j| inner(&gs[j], &rf[i]));
    Ok(mat.determinant())
}

/// `P = [[R, R^{1/2}(1−R)^{1/2}], [R^{1/2}(1−R)^{1/2}, 1−R]]` on `K⊕K`.
pub fn purification_projection(state: &CovarianceState) -> Operator {
    let n = state.modes();
    let x = state.off_diagonal();
    let one_minus = &Operator::identity(n) - &state.r;
    Operator::block2(&state.r, &x, &x, &one_minus)
}

/// Split form `A ⊗ Γ + 1 ⊗ B` of a represented field operator, with `A` and
/// `B` acting on a single factor.
#[derive(Clone, Debug)]
struct SplitField {
    first: Operator,
    second: Operator,
}

#[derive(Clone, Debug)]
pub struct DoubledRepresentation {
    state: CovarianceState,
    factor: FockSpace,
    gamma: Operator,
    sqrt_r: Operator,
    sqrt_one_minus_r: Operator,
}

pub fn doubled_representation(state: &CovarianceState) -> Result<DoubledRepresentation> {
    DoubledRepresentation::new(state)
}

/// The GNS representation of `ω_R`: the first-summand restriction
/// `f ↦ π(a(f⊕0))` of the doubled representation.
pub fn gns_representation(state: &CovarianceState) -> Result<DoubledRepresentation> {
    DoubledRepresentation::new(state)
}

impl DoubledRepresentation {
    pub fn new(state: &CovarianceState) -> Result<Self> {
        let n = state.modes();
        if n > MAX_DOUBLED_MODES {
            return Err(Error::TooManyModes {
                modes: 2 * n,
                cap: 2 * MAX_DOUBLED_MODES,
            });
        }
        let factor = FockSpace::new(n)?;
        Ok(Self {
            state: state.clone(),
            gamma: factor.parity(),
            factor,
            sqrt_r: state.sqrt_r(),
            sqrt_one_minus_r: state.sqrt_one_minus_r(),
        })
    }

    pub fn state(&self) -> &CovarianceState {
        &self.state
    }

    pub fn modes(&self) -> usize {
        self.state.modes()
    }

    pub fn factor(&self) -> &FockSpace {
        &self.factor
    }

    /// Dimension of `F(K) ⊗ F(K)`.
    pub fn dim(&self) -> usize {
        self.factor.dim() * self.factor.dim()
    }

    /// `Ω ⊗ Ω`.
    pub fn state_vector(&self) -> Vector {
        let mut v = Vector::zeros(self.dim());
        v[0] = ONE;
        v
    }

    /// `Γ ⊗ Γ`.
    pub fn total_parity(&self) -> Operator {
        self.gamma.kron(&self.gamma)
    }

    /// `Γ ⊗ 1`.
    pub fn first_parity(&self) -> Operator {
        self.gamma.kron(&Operator::identity(self.factor.dim()))
    }

    fn split(&self, f: &Vector, g: &Vector) -> Result<SplitField> {
        self.state.check_len("DoubledRepresentation", f)?;
        self.state.check_len("DoubledRepresentation", g)?;
        let u = &self.sqrt_one_minus_r.apply(f) - &self.sqrt_r.apply(g);
        let w = &self.sqrt_r.apply(&conj_vec(f)) + &self.sqrt_one_minus_r.apply(&conj_vec(g));
        Ok(SplitField {
            first: self.factor.annihilator(&u)?,
            second: self.factor.creator(&w)?,
        })
    }

    fn assemble(&self, s: &SplitField) -> Operator {
        let id = Operator::identity(self.factor.dim());
        &s.first.kron(&self.gamma) + &id.kron(&s.second)
    }

    /// `π(a(f⊕g))`.
    pub fn annihilator(&self, f: &Vector, g: &Vector) -> Result<Operator> {
        Ok(self.assemble(&self.split(f, g)?))
    }

    /// `π(a*(f⊕g))`.
    pub fn creator(&self, f: &Vector, g: &Vector) -> Result<Operator> {
        Ok(self.annihilator(f, g)?.adjoint())
    }

    /// `π_R(a(f)) = π(a(f⊕0))`.
    pub fn first_annihilator(&self, f: &Vector) -> Result<Operator> {
        self.annihilator(f, &Vector::zeros(self.modes()))
    }

    pub fn first_creator(&self, f: &Vector) -> Result<Operator> {
        Ok(self.first_annihilator(f)?.adjoint())
    }

    /// `π(a(0⊕f))`.
    pub fn second_annihilator(&self, f: &Vector) -> Result<Operator> {
        self.annihilator(&Vector::zeros(self.modes()), f)
    }

    pub fn second_creator(&self, f: &Vector) -> Result<Operator> {
        Ok(self.second_annihilator(f)?.adjoint())
    }

    /// Annihilator for a vector of `K⊕K` given as one `2n` vector.
    pub fn annihilator_direct(&self, fg: &Vector) -> Result<Operator> {
        let n = self.modes();
        if fg.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                op: "annihilator_direct",
                expected: 2 * n,
                actual: fg.len(),
            });
        }
        let f = fg.rows(0, n).into_owned();
        let g = fg.rows(n, n).into_owned();
        self.annihilator(&f, &g)
    }

    /// Applies `π(a(f⊕g))` (or its adjoint) to a vector through the split form,
    /// without building the doubled matrix.
    pub fn apply_field(&self, creation: bool, f: &Vector, g: &Vector, v: &Vector) -> Result<Vector> {
        let d = self.factor.dim();
        if v.len() != d * d {
            return Err(Error::DimensionMismatch {
                op: "apply_field",
                expected: d * d,
                actual: v.len(),
            });
        }
        let s = self.split(f, g)?;
        let (a, b) = if creation {
            (s.first.adjoint(), s.second.adjoint())
        } else {
            (s.first, s.second)
        };
        // |i₁⟩⊗|i₂⟩ ↔ V[i₁, i₂]; (A⊗B)vec V = vec(A V Bᵀ)
        let vm = DMatrix::from_row_slice(d, d, v.as_slice());
        let out = a.matrix() * &vm * self.gamma.matrix() + &vm * b.matrix().transpose();
        Ok(Vector::from_row_slice(out.transpose().as_slice()))
    }

    /// `⟨Ω⊗Ω, π(a*(f_m))⋯π(a*(f_1)) π(a(g_1))⋯π(a(g_n)) Ω⊗Ω⟩` over `K⊕0`.
    pub fn monomial_expectation(&self, fs: &[Vector], gs: &[Vector]) -> Result<C64> {
        let zero = Vector::zeros(self.modes());
        let mut v = self.state_vector();
        for g in gs.iter().rev() {
            v = self.apply_field(false, g, &zero, &v)?;
        }
        for f in fs {
            v = self.apply_field(true, f, &zero, &v)?;
        }
        Ok(v[0])
    }

    /// `⟨Ω⊗Ω, X Ω⊗Ω⟩`.
    pub fn vacuum_expectation(&self, x: &Operator) -> C64 {
        x.get(0, 0)
    }

    /// Mode images `π(a(e_j⊕0))`, `j = 0..n`.
    pub fn first_mode_annihilators(&self) -> Vec<Operator> {
        (0..self.modes())
            .map(|j| {
                self.first_annihilator(&self.factor.unit(j))
                    .expect("unit vector has the right length")
            })
            .collect()
    }

    /// Mode images `π(a(0⊕e_j))`.
    pub fn second_mode_annihilators(&self) -> Vec<Operator> {
        (0..self.modes())
            .map(|j| {
                self.second_annihilator(&self.factor.unit(j))
                    .expect("unit vector has the right length")
            })
            .collect()
    }

    /// Normal-ordered monomials `x_{S,T} = Π_{s∈S↑} π(a*(e_s⊕0)) Π_{t∈T↓} π(a(e_t⊕0))`
    /// of the first-summand algebra, with their subset labels.
    pub fn first_monomials(&self) -> Vec<((Vec<usize>, Vec<usize>), Operator)> {
        let ann = self.first_mode_annihilators();
        let cre: Vec<Operator> = ann.iter().map(Operator::adjoint).collect();
        self.factor
            .monomial_subsets()
            .into_iter()
            .map(|(ss, tt)| {
                let mut x = Operator::identity(self.dim());
                for &s in &ss {
                    x = &x * &cre[s];
                }
                for &t in tt.iter().rev() {
                    x = &x * &ann[t];
                }
                ((ss, tt), x)
            })
            .collect()
    }

    /// Rank of `{x Ω⊗Ω}` over the first-summand monomials against the doubled
    /// dimension; equality means the vacuum is cyclic.
    pub fn cyclic_rank(&self) -> (usize, usize) {
        let omega = self.state_vector();
        let vecs: Vec<Vector> = self
            .first_monomials()
            .iter()
            .map(|(_, x)| x.apply(&omega))
            .collect();
        let cols = vecs.len();
        let m = DMatrix::from_fn(self.dim(), cols, |i, j| vecs[j][i]);
        (Operator::from_matrix(m).rank(1e-10), self.dim())
    }

    pub fn check_cyclic(&self) -> Result<()> {
        let (rank, dim) = self.cyclic_rank();
        if rank < dim {
            return Err(Error::NotCyclic {
                rank,
                dim,
                deficit: dim - rank,
            });
        }
        Ok(())
    }
}
