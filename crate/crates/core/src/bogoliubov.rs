//! Quasi-free liftings and the Hilbert–Schmidt criteria built on them.
//!
//! Every criterion here reduces to the HS norm of `R^{1/2}(1−R)^{1/2}·D` for
//! some difference `D` of unitaries, evaluated over a list of truncation sizes.
//! Families are passed as closures `n ↦ operator at size n`; the verdict on
//! `s₂`-membership is read off the trend (see [`Verdict::classify`]).

use crate::error::{Error, Result};
use crate::opalg::{hs_norm, operator_norm, Operator, Vector, C64, ALGEBRAIC_TOL};
use crate::quasifree::DoubledRepresentation;

const ISOMETRY_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-12;
/// Increment decay exponent below which a truncation sequence is read as convergent.
pub const CONVERGENCE_EXPONENT: f64 = -0.5;

#[derive(Clone, Debug)]
pub struct Lifting {
    pub rep: DoubledRepresentation,
    pub v: Operator,
    /// `Γ(V) ⊗ Γ(JVJ)`; every isometry of a finite-dimensional space is unitary,
    /// so this is always present here.
    pub implementer: Option<Operator>,
}

pub fn lift(rep: &DoubledRepresentation, v: &Operator) -> Result<Lifting> {
    let n = rep.modes();
    if v.rows() != n || v.cols() != n {
        return Err(Error::DimensionMismatch {
            op: "lift",
            expected: n,
            actual: v.rows(),
        });
    }
    let residual = v.isometry_residual();
    if residual > ISOMETRY_TOL {
        return Err(Error::NotIsometric { op: "lift", residual });
    }
    let r = rep.state().covariance();
    let residual = hs_norm(&v.commutator(r));
    if residual > ALGEBRAIC_TOL {
        return Err(Error::DoesNotCommute { op: "lift", residual });
    }
    let implementer = if v.unitarity_residual() <= ISOMETRY_TOL {
        let space = rep.factor();
        let first = space.second_quantization(v)?;
        let second = space.second_quantization(&v.conjugate())?;
        Some(first.kron(&second))
    } else {
        None
    };
    Ok(Lifting {
        rep: rep.clone(),
        v: v.clone(),
        implementer,
    })
}

impl Lifting {
    /// `B_R(V)(π(a(f⊕0))) = π(a(Vf⊕0))`.
    pub fn image(&self, f: &Vector) -> Result<Operator> {
        self.rep.first_annihilator(&self.v.apply(f))
    }

    /// Largest `‖U π(a(e_j⊕0)) U* − π(a(Ve_j⊕0))‖₂` over basis vectors.
    pub fn implementer_residual(&self) -> Option<f64> {
        let u = self.implementer.as_ref()?;
        let space = self.rep.factor();
        let worst = (0..self.rep.modes())
            .map(|j| {
                let e = space.unit(j);
                let pi = self.rep.first_annihilator(&e).expect("unit vector");
                let lhs = &(u * &pi) * &u.adjoint();
                hs_norm(&(&lhs - &self.image(&e).expect("unit vector")))
            })
            .fold(0.0, f64::max);
        Some(worst)
    }

    /// `B_R(V)∘B_R(W) = B_R(VW)`.
    pub fn compose(&self, other: &Lifting) -> Result<Lifting> {
        lift(&self.rep, &(&self.v * &other.v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

impl Verdict {
    /// Reads `s₂`-membership off a truncation sequence, in this order:
    ///
    /// 1. fewer than three sizes: inconclusive;
    /// 2. all values below `1e-12`, or all increments below `1e-12·max(1, max value)`: converges;
    /// 3. log-log slope of the nonzero increments against size below −0.5: converges;
    /// 4. log-log slope of the values against size at least 0: diverges;
    /// 5. otherwise inconclusive.
    ///
    /// Returns the verdict and the slope that decided it.
    pub fn classify(sizes: &[usize], values: &[f64]) -> (Verdict, Option<f64>) {
        if sizes.len() < 3 || values.len() != sizes.len() {
            return (Verdict::Inconclusive, None);
        }
        let vmax = values.iter().copied().fold(0.0, f64::max);
        if vmax <= ZERO_TOL {
            return (Verdict::Converges, None);
        }
        let increments: Vec<(f64, f64)> = values
            .windows(2)
            .zip(&sizes[1..])
            .map(|(w, &n)| (n as f64, (w[1] - w[0]).abs()))
            .collect();
        if increments.iter().all(|&(_, d)| d <= ZERO_TOL * vmax.max(1.0)) {
            return (Verdict::Converges, None);
        }
        let positive: Vec<(f64, f64)> = increments
            .iter()
            .filter(|&&(_, d)| d > ZERO_TOL * vmax.max(1.0))
            .map(|&(n, d)| (n.ln(), d.ln()))
            .collect();
        if let Some(slope) = loglog_slope(&positive) {
            if slope < CONVERGENCE_EXPONENT {
                return (Verdict::Converges, Some(slope));
            }
        }
        let vals: Vec<(f64, f64)> = sizes
            .iter()
            .zip(values)
            .filter(|&(_, &v)| v > 0.0)
            .map(|(&n, &v)| ((n as f64).ln(), v.ln()))
            .collect();
        match loglog_slope(&vals) {
            Some(slope) if slope >= 0.0 => (Verdict::Diverges, Some(slope)),
            slope => (Verdict::Inconclusive, slope),
        }
    }
}

/// Least-squares slope through `(x, y)` points; `None` for fewer than two
/// points or a degenerate abscissa.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CriterionReport {
    pub sizes: Vec<usize>,
    pub hs_values: Vec<f64>,
    pub verdict: Verdict,
    pub fit: Option<f64>,
}

impl CriterionReport {
    pub fn from_values(sizes: Vec<usize>, hs_values: Vec<f64>) -> Self {
        let (verdict, fit) = Verdict::classify(&sizes, &hs_values);
        Self {
            sizes,
            hs_values,
            verdict,
            fit,
        }
    }
}

/// `R^{1/2}(1−R)^{1/2}` for Hermitian `0 ≤ R ≤ 1`.
pub fn coupling(r: &Operator) -> Result<Operator> {
    r.require_square("coupling")?;
    let residual = r.hermiticity_residual();
    if residual > ALGEBRAIC_TOL {
        return Err(Error::InvalidCovariance {
            invariant: "R = R*",
            detail: format!("hermiticity residual {residual:.3e}"),
        });
    }
    let (values, _) = r.hermitian_eigen()?;
    if let (Some(&lo), Some(&hi)) = (values.first(), values.last()) {
        if lo < -ALGEBRAIC_TOL || hi > 1.0 + ALGEBRAIC_TOL {
            return Err(Error::InvalidCovariance {
                invariant: "0 ≤ R ≤ 1",
                detail: format!("spectrum in [{lo:.3e}, {hi:.3e}]"),
            });
        }
    }
    r.hermitian_function(|x| (x * (1.0 - x)).max(0.0).sqrt())
}

fn check_unitary(op: &'static str, u: &Operator) -> Result<()> {
    let residual = u.unitarity_residual();
    if residual > UNITARY_TOL {
        return Err(Error::NotUnitary { op, residual });
    }
    Ok(())
}

fn check_commutes(op: &'static str, u: &Operator, r: &Operator) -> Result<()> {
    let residual = hs_norm(&u.commutator(r));
    if residual > ALGEBRAIC_TOL.max(1e-12 * hs_norm(r)) {
        return Err(Error::DoesNotCommute { op, residual });
    }
    Ok(())
}

fn check_shapes(op: &'static str, a: &Operator, b: &Operator) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            op,
            expected: a.rows(),
            actual: b.rows(),
        });
    }
    Ok(())
}

/// `‖R^{1/2}(1−R)^{1/2}(A − B)‖₂` for unitaries `A`, `B` commuting with `R`.
pub fn criterion_value(op: &'static str, r: &Operator, a: &Operator, b: &Operator) -> Result<f64> {
    check_shapes(op, r, a)?;
    check_shapes(op, r, b)?;
    check_unitary(op, a)?;
    check_unitary(op, b)?;
    check_commutes(op, a, r)?;
    check_commutes(op, b, r)?;
    Ok(hs_norm(&(&coupling(r)? * &(a - b))))
}

fn sweep(
    op: &'static str,
    r: &dyn Fn(usize) -> Result<Operator>,
    a: &dyn Fn(usize) -> Result<Operator>,
    b: &dyn Fn(usize) -> Result<Operator>,
    sizes: &[usize],
) -> Result<CriterionReport> {
    let values = sizes
        .iter()
        .map(|&n| criterion_value(op, &r(n)?, &a(n)?, &b(n)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(CriterionReport::from_values(sizes.to_vec(), values))
}

/// `‖R^{1/2}(1−R)^{1/2}(W − I)‖₂` over truncation sizes.
pub fn innerness_norm(
    r: &dyn Fn(usize) -> Result<Operator>,
    w: &dyn Fn(usize) -> Result<Operator>,
    sizes: &[usize],
) -> Result<CriterionReport> {
    let id = |n: usize| Ok(Operator::identity(n));
    sweep("innerness_norm", r, w, &id, sizes)
}

/// Per-`t` reports for `‖R^{1/2}(1−R)^{1/2}(U_t − V_t)‖₂`.
pub fn conjugacy_criterion(
    r: &dyn Fn(usize) -> Result<Operator>,
    u_path: &dyn Fn(f64, usize) -> Result<Operator>,
    v_path: &dyn Fn(f64, usize) -> Result<Operator>,
    t_grid: &[f64],
    sizes: &[usize],
) -> Result<Vec<(f64, CriterionReport)>> {
    t_grid
        .iter()
        .map(|&t| {
            let u = |n: usize| u_path(t, n);
            let v = |n: usize| v_path(t, n);
            Ok((t, sweep("conjugacy_criterion", r, &u, &v, sizes)?))
        })
        .collect()
}

/// `‖R′^{1/2}(1−R′)^{1/2}(V′ − W′)‖₂` over truncation sizes.
pub fn extension_criterion(
    rp: &dyn Fn(usize) -> Result<Operator>,
    vp: &dyn Fn(usize) -> Result<Operator>,
    wp: &dyn Fn(usize) -> Result<Operator>,
    sizes: &[usize],
) -> Result<CriterionReport> {
    sweep("extension_criterion", rp, vp, wp, sizes)
}

/// `P′` for a Hermitian `0 ≤ R′ ≤ 1`.
pub fn projection_from(rp: &Operator) -> Result<Operator> {
    let x = coupling(rp)?;
    let one_minus = &Operator::identity(rp.rows()) - rp;
    Ok(Operator::block2(rp, &x, &x, &one_minus))
}

/// `‖diag(V′, W′)·P′ − P′·diag(V′, W′)‖₂`.
pub fn araki_commutator(p: &Operator, vp: &Operator, wp: &Operator) -> Result<f64> {
    p.require_square("araki_commutator")?;
    let residual = hs_norm(&(&(p * p) - p)).max(p.hermiticity_residual());
    if residual > ALGEBRAIC_TOL {
        return Err(Error::NotProjection {
            op: "araki_commutator",
            residual,
        });
    }
    check_shapes("araki_commutator", vp, wp)?;
    if p.rows() != 2 * vp.rows() {
        return Err(Error::DimensionMismatch {
            op: "araki_commutator",
            expected: p.rows(),
            actual: 2 * vp.rows(),
        });
    }
    let d = vp.direct_sum(wp);
    Ok(hs_norm(&d.commutator(p)))
}

/// [`araki_commutator`] over truncation sizes.
pub fn araki_report(
    rp: &dyn Fn(usize) -> Result<Operator>,
    vp: &dyn Fn(usize) -> Result<Operator>,
    wp: &dyn Fn(usize) -> Result<Operator>,
    sizes: &[usize],
) -> Result<CriterionReport> {
    let values = sizes
        .iter()
        .map(|&n| araki_commutator(&projection_from(&rp(n)?)?, &vp(n)?, &wp(n)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(CriterionReport::from_values(sizes.to_vec(), values))
}

/// A subspace `K ⊂ K′` given by orthonormal bases of `K` and of the part of
/// `K′ ⊖ K` on which `U′V′* = 1` is checked.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub dim: usize,
    pub k_basis: Operator,
    pub complement: Operator,
}

impl Embedding {
    /// `K` spanned by the listed coordinate vectors of `C^dim`.
    pub fn coordinate(dim: usize, k_indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = k_indices.iter().find(|&&i| i >= dim) {
            return Err(Error::DimensionMismatch {
                op: "Embedding::coordinate",
                expected: dim,
                actual: bad + 1,
            });
        }
        let rest: Vec<usize> = (0..dim).filter(|i| !k_indices.contains(i)).collect();
        let pick = |idx: &[usize]| {
            Operator::from_fn(dim, idx.len(), |i, j| if i == idx[j] { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
        };
        Ok(Self {
            dim,
            k_basis: pick(k_indices),
            complement: pick(&rest),
        })
    }

    /// `K` spanned by the orthonormal columns of `basis`; the complement is the
    /// full orthogonal complement.
    pub fn from_basis(basis: Operator) -> Result<Self> {
        let dim = basis.rows();
        let residual = basis.isometry_residual();
        if residual > ALGEBRAIC_TOL {
            return Err(Error::NotIsometric {
                op: "Embedding::from_basis",
                residual,
            });
        }
        let proj = &Operator::identity(dim) - &(&basis * &basis.adjoint());
        let (values, vecs) = proj.hermitian_eigen()?;
        let keep: Vec<usize> = (0..dim).filter(|&i| values[i] > 0.5).collect();
        let complement = Operator::from_fn(dim, keep.len(), |i, j| vecs.get(i, keep[j]));
        Ok(Self {
            dim,
            k_basis: basis,
            complement,
        })
    }

    /// Restricts the identity check to a subspace of `K′ ⊖ K`.
    pub fn with_complement(mut self, complement: Operator) -> Result<Self> {
        if complement.rows() != self.dim {
            return Err(Error::DimensionMismatch {
                op: "Embedding::with_complement",
                expected: self.dim,
                actual: complement.rows(),
            });
        }
        self.complement = complement;
        Ok(self)
    }

    /// `‖(U V* − 1)|_{complement}‖`.
    pub fn deviation(&self, u: &Operator, v: &Operator) -> Result<f64> {
        check_shapes("approximation_check", u, v)?;
        if u.rows() != self.dim {
            return Err(Error::DimensionMismatch {
                op: "approximation_check",
                expected: self.dim,
                actual: u.rows(),
            });
        }
        let d = &(u * &v.adjoint()) - &Operator::identity(self.dim);
        Ok(operator_norm(&(&d * &self.complement)))
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ApproximationPoint {
    pub t: f64,
    pub hs: CriterionReport,
    /// Largest deviation of `U′_tV′_t*` from the identity on `K′⊖K` over sizes.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ApproximationReport {
    pub points: Vec<ApproximationPoint>,
    pub tolerance: f64,
    pub approximates: bool,
}

/// For each `t`: the HS trend of `U′_t − V′_t` and the deviation of
/// `U′_tV′_t*` from the identity on `K′⊖K`. The verdict requires every
/// deviation within `tolerance` and no diverging HS trend.
pub fn approximation_check(
    u_dil: &dyn Fn(f64, usize) -> Result<Operator>,
    v_dil: &dyn Fn(f64, usize) -> Result<Operator>,
    embedding: &dyn Fn(usize) -> Result<Embedding>,
    t_grid: &[f64],
    sizes: &[usize],
    tolerance: f64,
) -> Result<ApproximationReport> {
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut values = Vec::with_capacity(sizes.len());
        let mut deviation: f64 = 0.0;
        for &n in sizes {
            let u = u_dil(t, n)?;
            let v = v_dil(t, n)?;
            check_unitary("approximation_check", &u)?;
            check_unitary("approximation_check", &v)?;
            deviation = deviation.max(embedding(n)?.deviation(&u, &v)?);
            values.push(hs_norm(&(&u - &v)));
        }
        points.push(ApproximationPoint {
            t,
            hs: CriterionReport::from_values(sizes.to_vec(), values),
            deviation,
        });
    }
    let approximates = points
        .iter()
        .all(|p| p.deviation <= tolerance && p.hs.verdict != Verdict::Diverges);
    Ok(ApproximationReport {
        points,
        tolerance,
        approximates,
    })
}

type Family = Box<dyn Fn(usize) -> Result<Operator> + Send + Sync>;

/// A named `(R′, V′, W′)` family with the verdict it is built to produce.
pub struct ExtensionFamily {
    pub name: &'static str,
    pub rp: Family,
    pub vp: Family,
    pub wp: Family,
    pub expected: Verdict,
}

fn scalar_r(nu: f64) -> Family {
    Box::new(move |n| Ok(Operator::scalar(n, C64::new(nu, 0.0))))
}

fn diagonal(f: impl Fn(usize) -> C64 + Send + Sync + 'static) -> Family {
    Box::new(move |n| {
        let d: Vec<C64> = (0..n).map(&f).collect();
        Ok(Operator::from_diagonal(&d))
    })
}

fn identity() -> Family {
    Box::new(|n| Ok(Operator::identity(n)))
}

/// Reference families for the extension / Araki agreement check.
pub fn extension_families() -> Vec<ExtensionFamily> {
    let phase = |x: f64| C64::from_polar(1.0, x);
    let nu = 0.3;
    vec![
        ExtensionFamily {
            name: "identity",
            rp: scalar_r(nu),
            vp: identity(),
            wp: identity(),
            expected: Verdict::Converges,
        },
        ExtensionFamily {
            name: "equal-phases",
            rp: scalar_r(nu),
            vp: diagonal(move |j| phase(0.7 * j as f64)),
            wp: diagonal(move |j| phase(0.7 * j as f64)),
            expected: Verdict::Converges,
        },
        ExtensionFamily {
            name: "minus-identity",
            rp: scalar_r(nu),
            vp: diagonal(|_| C64::new(-1.0, 0.0)),
            wp: identity(),
            expected: Verdict::Diverges,
        },
        ExtensionFamily {
            name: "minus-phases",
            rp: scalar_r(nu),
            vp: diagonal(move |j| -phase(0.3 * j as f64)),
            wp: diagonal(move |j| phase(0.3 * j as f64)),
            expected: Verdict::Diverges,
        },
        ExtensionFamily {
            name: "rank-one",
            rp: scalar_r(nu),
            vp: diagonal(move |j| if j == 0 { phase(1.1) } else { C64::new(1.0, 0.0) }),
            wp: identity(),
            expected: Verdict::Converges,
        },
        ExtensionFamily {
            name: "rank-two",
            rp: scalar_r(nu),
            vp: diagonal(move |j| match j {
                0 => phase(0.4),
                1 => phase(-2.0),
                _ => C64::new(1.0, 0.0),
            }),
            wp: identity(),
            expected: Verdict::Converges,
        },
        ExtensionFamily {
            name: "global-phase",
            rp: scalar_r(nu),
            vp: diagonal(move |_| phase(0.9)),
            wp: identity(),
            expected: Verdict::Diverges,
        },
        ExtensionFamily {
            name: "decaying-covariance",
            rp: Box::new(|n| {
                let d: Vec<f64> = (0..n).map(|j| 1.0 / ((j + 2) as f64).powi(2)).collect();
                Ok(Operator::from_real_diagonal(&d))
            }),
            vp: diagonal(|_| C64::new(-1.0, 0.0)),
            wp: identity(),
            expected: Verdict::Converges,
        },
        ExtensionFamily {
            name: "harmonic-covariance",
            rp: Box::new(|n| {
                let d: Vec<f64> = (0..n).map(|j| 0.5 / (j + 1) as f64).collect();
                Ok(Operator::from_real_diagonal(&d))
            }),
            vp: diagonal(|_| C64::new(-1.0, 0.0)),
            wp: identity(),
            expected: Verdict::Diverges,
        },
        ExtensionFamily {
            name: "decaying-phases",
            rp: scalar_r(nu),
            vp: diagonal(move |j| phase(1.0 / (j + 1) as f64)),
            wp: identity(),
            expected: Verdict::Converges,
        },
        ExtensionFamily {
            name: "growing-phases",
            rp: scalar_r(nu),
            vp: diagonal(move |j| phase((j + 1) as f64)),
            wp: identity(),
            expected: Verdict::Diverges,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::c;
    use crate::quasifree::{doubled_representation, quasifree_expectation, CovarianceState};
    use crate::random::{random_covariance_matrix, random_unitary, random_vector, rng};

    const SIZES: [usize; 5] = [8, 16, 32, 64, 128];

    fn scalar(nu: f64) -> impl Fn(usize) -> Result<Operator> {
        move |n| Ok(Operator::scalar(n, c(nu, 0.0)))
    }

    #[test]
    fn identity_lift() {
        let rep = doubled_representation(&CovarianceState::scalar(2, 0.3).unwrap()).unwrap();
        let l = lift(&rep, &Operator::identity(2)).unwrap();
        assert_eq!(l.implementer.as_ref().unwrap(), &Operator::identity(16));
        assert!(l.implementer_residual().unwrap() < 1e-14);
    }

    #[test]
    fn implementer_reproduces_generator_images() {
        let mut r = rng(61);
        let rep = doubled_representation(&CovarianceState::scalar(3, 0.3).unwrap()).unwrap();
        let v = random_unitary(&mut r, 3);
        let l = lift(&rep, &v).unwrap();
        assert!(l.implementer_residual().unwrap() < 1e-10);
        let u = l.implementer.as_ref().unwrap();
        let f = random_vector(&mut r, 3);
        let lhs = &(u * &rep.first_creator(&f).unwrap()) * &u.adjoint();
        assert!(hs_norm(&(&lhs - &rep.first_creator(&v.apply(&f)).unwrap())) < 1e-10);
    }

    #[test]
    fn lift_rejects_bad_inputs() {
        let mut r = rng(62);
        let state = CovarianceState::from_real_diagonal(&[0.2, 0.6]).unwrap();
        let rep = doubled_representation(&state).unwrap();
        let not_iso = Operator::from_real_diagonal(&[1.0, 2.0]);
        assert!(matches!(lift(&rep, &not_iso), Err(Error::NotIsometric { .. })));
        let v = random_unitary(&mut r, 2);
        assert!(matches!(lift(&rep, &v), Err(Error::DoesNotCommute { .. })));
    }

    #[test]
    fn lifted_state_is_invariant() {
        let mut r = rng(63);
        let state = CovarianceState::new(random_covariance_matrix(&mut r, 3, 0.1, 0.9)).unwrap();
        let rep = doubled_representation(&state).unwrap();
        // a unitary commuting with R: a function of R
        let v = state.covariance().hermitian_function(|x| x).unwrap();
        let gen = Operator::from_fn(3, 3, |i, j| v.get(i, j) * c(0.0, 1.7));
        let v = gen.exp();
        let l = lift(&rep, &v).unwrap();
        let u = l.implementer.as_ref().unwrap();
        let omega = rep.state_vector();
        for _ in 0..5 {
            let fs: Vec<Vector> = (0..2).map(|_| random_vector(&mut r, 3)).collect();
            let gs: Vec<Vector> = (0..2).map(|_| random_vector(&mut r, 3)).collect();
            let vfs: Vec<Vector> = fs.iter().map(|f| v.apply(f)).collect();
            let vgs: Vec<Vector> = gs.iter().map(|g| v.apply(g)).collect();
            let a = quasifree_expectation(&state, &fs, &gs).unwrap();
            let b = quasifree_expectation(&state, &vfs, &vgs).unwrap();
            assert!((a - b).norm() < 1e-10);
            let x = &rep.first_creator(&fs[0]).unwrap() * &rep.first_annihilator(&gs[0]).unwrap();
            let moved = &(u * &x) * &u.adjoint();
            assert!((moved.get(0, 0) - x.get(0, 0)).norm() < 1e-10);
            assert!((u.apply(&omega) - &omega).norm() < 1e-10);
        }
    }

    #[test]
    fn composition_and_semigroup_laws() {
        let mut r = rng(64);
        let rep = doubled_representation(&CovarianceState::scalar(3, 0.4).unwrap()).unwrap();
        let v = random_unitary(&mut r, 3);
        let w = random_unitary(&mut r, 3);
        let lv = lift(&rep, &v).unwrap();
        let lw = lift(&rep, &w).unwrap();
        let lvw = lv.compose(&lw).unwrap();
        let f = random_vector(&mut r, 3);
        let via_images = lv.image(&w.apply(&f)).unwrap();
        assert!(hs_norm(&(&via_images - &lvw.image(&f).unwrap())) < 1e-10);
        let (uv, uw) = (lv.implementer.unwrap(), lw.implementer.unwrap());
        assert!(hs_norm(&(&(&uv * &uw) - lvw.implementer.as_ref().unwrap())) < 1e-10);

        let h = random_unitary(&mut r, 3);
        let gen = &(&h * &Operator::from_real_diagonal(&[0.3, -1.2, 2.0]).scale(c(0.0, 1.0))) * &h.adjoint();
        let path = |t: f64| gen.scale_real(t).exp();
        let (s, t) = (0.4, 1.3);
        let ls = lift(&rep, &path(s)).unwrap();
        let lt = lift(&rep, &path(t)).unwrap();
        let lst = lift(&rep, &path(s + t)).unwrap();
        let lhs = ls.image(&lt.v.apply(&f)).unwrap();
        assert!(hs_norm(&(&lhs - &lst.image(&f).unwrap())) < 1e-10);
    }

    #[test]
    fn verdict_policy() {
        let sizes = [8, 16, 32, 64];
        assert_eq!(Verdict::classify(&sizes[..2], &[1.0, 2.0]).0, Verdict::Inconclusive);
        assert_eq!(Verdict::classify(&sizes, &[0.0; 4]).0, Verdict::Converges);
        assert_eq!(Verdict::classify(&sizes, &[0.5; 4]).0, Verdict::Converges);
        let sqrt: Vec<f64> = sizes.iter().map(|&n| (n as f64).sqrt()).collect();
        assert_eq!(Verdict::classify(&sizes, &sqrt).0, Verdict::Diverges);
        let saturating: Vec<f64> = sizes.iter().map(|&n| 2.0 - 1.0 / n as f64).collect();
        let (v, fit) = Verdict::classify(&sizes, &saturating);
        assert_eq!(v, Verdict::Converges);
        assert!((fit.unwrap() + 1.0).abs() < 1e-9);
        let slow: Vec<f64> = sizes.iter().map(|&n| 2.0 - (n as f64).powf(-0.25)).collect();
        let (v, fit) = Verdict::classify(&sizes, &slow);
        assert_eq!(v, Verdict::Diverges);
        assert!(fit.unwrap() > 0.0);
        let shrinking = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(Verdict::classify(&sizes, &shrinking).0, Verdict::Inconclusive);
    }

    #[test]
    fn innerness_closed_forms() {
        let id = |n: usize| Ok(Operator::identity(n));
        let rep = innerness_norm(&scalar(0.3), &id, &SIZES).unwrap();
        assert!(rep.hs_values.iter().all(|&v| v == 0.0));
        assert_eq!(rep.verdict, Verdict::Converges);

        let minus = |n: usize| Ok(Operator::scalar(n, c(-1.0, 0.0)));
        let rep = innerness_norm(&scalar(0.3), &minus, &SIZES).unwrap();
        for (&n, &v) in rep.sizes.iter().zip(&rep.hs_values) {
            assert!((v - (0.84 * n as f64).sqrt()).abs() < 1e-10);
        }
        assert_eq!(rep.verdict, Verdict::Diverges);
        assert!((rep.fit.unwrap() - 0.5).abs() < 1e-9);

        let theta = std::f64::consts::FRAC_PI_2;
        let single = move |n: usize| {
            let mut d = vec![c(1.0, 0.0); n];
            d[0] = C64::from_polar(1.0, theta);
            Ok(Operator::from_diagonal(&d))
        };
        let rep = innerness_norm(&scalar(0.3), &single, &SIZES).unwrap();
        let expected = (C64::from_polar(1.0, theta) - 1.0).norm() * 0.21_f64.sqrt();
        assert!(rep.hs_values.iter().all(|&v| (v - expected).abs() < 1e-12));
        assert_eq!(rep.verdict, Verdict::Converges);
    }

    #[test]
    fn scalar_covariance_identity() {
        let mut r = rng(65);
        let nu = 0.37;
        for n in [2, 5, 9] {
            let w = random_unitary(&mut r, n);
            let lhs = criterion_value("test", &Operator::scalar(n, c(nu, 0.0)), &w, &Operator::identity(n)).unwrap();
            let rhs = nu * (1.0 - nu) * hs_norm(&(&w - &Operator::identity(n))).powi(2);
            assert!((lhs * lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn conjugacy_families() {
        let t_grid = [0.5, 1.0, 2.0];
        let omega = 1.3;
        let u = move |t: f64, n: usize| Ok(Operator::scalar(n, C64::from_polar(1.0, omega * t)));
        let v = |_: f64, n: usize| Ok(Operator::identity(n));
        let reports = conjugacy_criterion(&scalar(0.3), &u, &v, &t_grid, &SIZES).unwrap();
        for (t, rep) in &reports {
            let factor = (C64::from_polar(1.0, omega * t) - 1.0).norm() * 0.21_f64.sqrt();
            for (&n, &val) in rep.sizes.iter().zip(&rep.hs_values) {
                assert!((val - factor * (n as f64).sqrt()).abs() < 1e-10);
            }
            assert_eq!(rep.verdict, Verdict::Diverges);
        }
        let same = conjugacy_criterion(&scalar(0.3), &v, &v, &t_grid, &SIZES).unwrap();
        assert!(same.iter().all(|(_, r)| r.verdict == Verdict::Converges));

        // A − B supported on the first mode
        let a = |n: usize| {
            let mut d = vec![c(0.0, 0.0); n];
            for (j, x) in d.iter_mut().enumerate() {
                *x = c(0.0, 0.1 * j as f64);
            }
            d[0] = c(0.0, 2.0);
            Operator::from_diagonal(&d)
        };
        let b = |n: usize| {
            let d: Vec<C64> = (0..n).map(|j| c(0.0, 0.1 * j as f64)).collect();
            Operator::from_diagonal(&d)
        };
        let u = move |t: f64, n: usize| Ok(a(n).scale_real(t).exp());
        let v = move |t: f64, n: usize| Ok(b(n).scale_real(t).exp());
        let reports = conjugacy_criterion(&scalar(0.3), &u, &v, &t_grid, &SIZES).unwrap();
        assert!(reports.iter().all(|(_, r)| r.verdict == Verdict::Converges));
    }

    #[test]
    fn non_unitary_sample_rejected() {
        let bad = |n: usize| Ok(Operator::scalar(n, c(2.0, 0.0)));
        assert!(matches!(
            innerness_norm(&scalar(0.3), &bad, &SIZES),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn araki_matches_extension_on_reference_families() {
        let families = extension_families();
        assert!(families.len() >= 10);
        for fam in &families {
            let ext = extension_criterion(&fam.rp, &fam.vp, &fam.wp, &SIZES).unwrap();
            let ara = araki_report(&fam.rp, &fam.vp, &fam.wp, &SIZES).unwrap();
            assert_eq!(ext.verdict, fam.expected, "{}: {ext:?}", fam.name);
            assert_eq!(ara.verdict, ext.verdict, "{}", fam.name);
            for (a, e) in ara.hs_values.iter().zip(&ext.hs_values) {
                assert!((a - std::f64::consts::SQRT_2 * e).abs() < 1e-9, "{}", fam.name);
            }
        }
    }

    #[test]
    fn araki_closed_form_and_errors() {
        let nu = 0.3;
        let n = 16;
        let rp = Operator::scalar(n, c(nu, 0.0));
        let p = projection_from(&rp).unwrap();
        let id = Operator::identity(n);
        assert_eq!(araki_commutator(&p, &id, &id).unwrap(), 0.0);
        let v = id.scale_real(-1.0);
        let got = araki_commutator(&p, &v, &id).unwrap();
        assert!((got - 2.0 * (2.0 * nu * (1.0 - nu) * n as f64).sqrt()).abs() < 1e-10);
        let mut r = rng(66);
        let w = random_unitary(&mut r, n);
        assert!(araki_commutator(&p, &w, &w).unwrap() < 1e-10);
        let not_proj = Operator::identity(2 * n).scale_real(0.5);
        assert!(matches!(araki_commutator(&not_proj, &id, &id), Err(Error::NotProjection { .. })));
    }

    #[test]
    fn approximation_checks() {
        let n_sizes = [4, 8, 16];
        let u = |_: f64, n: usize| Ok(Operator::identity(n));
        let emb = |n: usize| Embedding::coordinate(n, &(0..n / 2).collect::<Vec<_>>());
        let rep = approximation_check(&u, &u, &emb, &[0.5, 1.0], &n_sizes, 1e-10).unwrap();
        assert!(rep.approximates);
        assert!(rep.points.iter().all(|p| p.deviation == 0.0));

        let omega = 2.0;
        let phased = move |t: f64, n: usize| Ok(Operator::scalar(n, C64::from_polar(1.0, omega * t)));
        let rep = approximation_check(&phased, &u, &emb, &[0.5], &n_sizes, 1e-10).unwrap();
        assert!(!rep.approximates);
        assert!((rep.points[0].deviation - (C64::from_polar(1.0, 1.0) - 1.0).norm()).abs() < 1e-12);

        let bad = Embedding::coordinate(4, &[5]);
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
        let e = Embedding::from_basis(Operator::identity(4).sub_block(0, 0, 4, 2)).unwrap();
        assert_eq!(e.complement.cols(), 2);
        assert!(e.deviation(&Operator::identity(3), &Operator::identity(3)).is_err());
    }
}
