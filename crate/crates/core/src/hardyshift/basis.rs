use nalgebra::DMatrix;

use super::ExponentialFamily;
use crate::error::{Error, Result};
use crate::opalg::{c, hs_norm, Operator, C64};

/// Largest accepted condition number of the Gram matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// `(f_m, f_n) = −(a_m a_n)^{1/2}/(λ̄_m + λ_n)` with `a = −2Re λ`.
pub fn gram_exponentials(family: &ExponentialFamily) -> Result<Operator> {
    family.require_valid()?;
    let l = &family.lambdas;
    let a: Vec<f64> = l.iter().map(|x| -2.0 * x.re).collect();
    Ok(Operator::from_fn(l.len(), l.len(), |m, n| {
        if m == n {
            c(1.0, 0.0)
        } else {
            -(a[m] * a[n]).sqrt() / (l[m].conj() + l[n])
        }
    }))
}

/// Orthonormalized exponentials `g_n = Σ_{i≤n} C_{in} f_i`.
#[derive(Clone, Debug)]
pub struct ExponentialBasis {
    pub family: ExponentialFamily,
    pub gram: Operator,
    /// Upper-triangular `C` with positive diagonal, `C*·G·C = 1`.
    pub coeffs: Operator,
    /// `C^{-1}`, the adjoint of the Cholesky factor of `G`.
    pub coeffs_inv: Operator,
    pub condition: f64,
}

/// Successive orthogonalization through the Cholesky factorization `G = LL*`,
/// giving `C = (L*)^{-1}`.
pub fn orthogonalize(family: &ExponentialFamily) -> Result<ExponentialBasis> {
    let gram = gram_exponentials(family)?;
    let n = family.len();
    if n == 0 {
        return Ok(ExponentialBasis {
            family: family.clone(),
            gram,
            coeffs: Operator::zeros(0, 0),
            coeffs_inv: Operator::zeros(0, 0),
            condition: 1.0,
        });
    }
    let (values, _) = gram.hermitian_eigen()?;
    let condition = if values[0] > 0.0 {
        values[n - 1] / values[0]
    } else {
        f64::INFINITY
    };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned {
            cond: condition,
            limit: MAX_CONDITION,
        });
    }
    let chol = gram
        .matrix()
        .clone()
        .cholesky()
        .ok_or(Error::IllConditioned {
            cond: condition,
            limit: MAX_CONDITION,
        })?;
    let l_adj = chol.l().adjoint();
    let coeffs = l_adj
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::IllConditioned {
            cond: condition,
            limit: MAX_CONDITION,
        })?;
    let coeffs = DMatrix::from_fn(n, n, |i, j| if i > j { c(0.0, 0.0) } else { coeffs[(i, j)] });
    Ok(ExponentialBasis {
        family: family.clone(),
        gram,
        coeffs: Operator::from_matrix(coeffs),
        coeffs_inv: Operator::from_matrix(l_adj),
        condition,
    })
}

fn require_time(op: &'static str, t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime { op, t });
    }
    Ok(())
}

/// `1 − Re(e^{a + ib})` without cancellation for small `a`, `b`.
fn one_minus_re_exp(a: f64, b: f64) -> f64 {
    -a.exp_m1() * b.cos() + 2.0 * (0.5 * b).sin().powi(2)
}

impl ExponentialBasis {
    pub fn len(&self) -> usize {
        self.family.len()
    }

    pub fn is_empty(&self) -> bool {
        self.family.is_empty()
    }

    /// `‖C*GC − 1‖₂`.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.len();
        let m = &(&self.coeffs.adjoint() * &self.gram) * &self.coeffs;
        hs_norm(&(&m - &Operator::identity(n)))
    }

    /// `(a_i)^{1/2}·C_{in}`: coefficient of `e^{λ_i x}` in `g_n`.
    pub fn exponential_coeffs(&self, n: usize) -> Vec<(C64, C64)> {
        self.family
            .lambdas
            .iter()
            .enumerate()
            .take(n + 1)
            .map(|(i, &l)| (self.coeffs.get(i, n) * (-2.0 * l.re).sqrt(), l))
            .collect()
    }

    /// `‖P_{[t,∞)} g_n‖² = Σ_{ij} C̄_{in} C_{jn} G_{ij} e^{(λ̄_i + λ_j)t}`.
    pub fn tail_norm_sq(&self, n: usize, t: f64) -> f64 {
        let l = &self.family.lambdas;
        let mut acc = c(0.0, 0.0);
        for i in 0..=n {
            for j in 0..=n {
                acc += self.coeffs.get(i, n).conj()
                    * self.coeffs.get(j, n)
                    * self.gram.get(i, j)
                    * ((l[i].conj() + l[j]) * t).exp();
            }
        }
        acc.re
    }

    /// Phase of `V_t` on `g_n`: `e^{i Im λ_n t}`.
    pub fn phase(&self, n: usize, t: f64) -> C64 {
        C64::from_polar(1.0, self.family.lambdas[n].im * t)
    }

    /// `⟨V_t g_n, S_t g_n⟩ = conj(e^{i Im λ_n t})·e^{λ̄_n t}`.
    pub fn overlap(&self, n: usize, t: f64) -> C64 {
        self.phase(n, t).conj() * (self.family.lambdas[n].conj() * t).exp()
    }

    /// `1 − Re⟨V_t g_n, S_t g_n⟩ = 1 − e^{Re λ t} cos(2 Im λ t)`.
    pub fn one_minus_re_overlap(&self, n: usize, t: f64) -> f64 {
        let l = self.family.lambdas[n];
        one_minus_re_exp(l.re * t, -2.0 * l.im * t)
    }
}

/// Matrix of `S_t*` on `span{g_n}` in the `g`-basis, `C^{-1}·diag(e^{λ_n t})·C`.
pub fn backward_shift_matrix(basis: &ExponentialBasis, t: f64) -> Result<Operator> {
    require_time("backward_shift_matrix", t)?;
    let d: Vec<C64> = basis.family.lambdas.iter().map(|&l| (l * t).exp()).collect();
    Ok(&(&basis.coeffs_inv * &Operator::from_diagonal(&d)) * &basis.coeffs)
}

/// `V_t` on `K₁ = span{g_n}` (phases) together with its overlaps with `S_t`.
/// On `K₀` the approximant coincides with `S_t`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct VtData {
    pub t: f64,
    pub phases: Vec<C64>,
    /// `⟨V_t g_n, S_t g_n⟩`.
    pub overlaps: Vec<C64>,
    /// `‖(V_t − S_t) g_n‖²`.
    pub defect_sq: Vec<f64>,
}

pub fn build_vt(basis: &ExponentialBasis, t: f64) -> Result<VtData> {
    require_time("build_vt", t)?;
    let n = basis.len();
    Ok(VtData {
        t,
        phases: (0..n).map(|k| basis.phase(k, t)).collect(),
        overlaps: (0..n).map(|k| basis.overlap(k, t)).collect(),
        defect_sq: (0..n).map(|k| 2.0 * basis.one_minus_re_overlap(k, t)).collect(),
    })
}

/// `‖V_t − S_t‖₂ = (Σ_n ‖(V_t − S_t) g_n‖²)^{1/2}`; the difference vanishes on `K₀`.
pub fn defect_hs_norm(basis: &ExponentialBasis, t: f64) -> Result<f64> {
    Ok(build_vt(basis, t)?.defect_sq.iter().sum::<f64>().sqrt())
}

/// `‖Δ_{t+δ} − Δ_t‖₂` with `Δ_t = V_t − S_t`, from
/// `⟨S_a g_n, S_b g_n⟩ = e^{λ̄_n (b−a)}` for `a ≤ b`.
pub fn defect_increment(basis: &ExponentialBasis, t: f64, delta: f64) -> Result<f64> {
    require_time("defect_increment", t)?;
    require_time("defect_increment", delta)?;
    let b = t + delta;
    let mut total = 0.0;
    for (n, &l) in basis.family.lambdas.iter().enumerate() {
        let dphi = basis.phase(n, b) - basis.phase(n, t);
        let shift_sq = 2.0 * one_minus_re_exp(l.re * delta, -l.im * delta);
        let ds = (l.conj() * b).exp() - (l.conj() * t).exp();
        let cross = (dphi.conj() * ds).re;
        total += (dphi.norm_sqr() + shift_sq - 2.0 * cross).max(0.0);
    }
    Ok(total.sqrt())
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EstimateRow {
    pub n: usize,
    /// `‖(P_{[t,∞)}V_tS_t* − P_{[t,∞)})S_t g_n‖²`.
    pub lhs3: f64,
    /// `‖P_{[0,t]}V_tS_t*S_t g_n‖²`.
    pub lhs4: f64,
    /// `2(1 − Re⟨V_t g_n, S_t g_n⟩)`, which bounds `lhs3`.
    pub envelope3: f64,
    /// `1 − e^{2Re λ_n t}`.
    pub envelope4: f64,
    /// The printed `2(1 − e^{−Re λ_n})`.
    pub printed3: f64,
    /// The printed `1 − e^{−2Re λ_n t}`.
    pub printed4: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EstimateReport {
    pub t: f64,
    pub rows: Vec<EstimateRow>,
    /// `Σ_n (lhs3 + lhs4)`.
    pub sum: f64,
}

/// Exact left sides of the two per-vector estimates:
/// `lhs3 = ‖P_{[t,∞)} g_n‖² + 1 − 2Re⟨V_t g_n, S_t g_n⟩` and
/// `lhs4 = 1 − ‖P_{[t,∞)} g_n‖²`.
pub fn estimate_inequalities(basis: &ExponentialBasis, t: f64) -> Result<EstimateReport> {
    require_time("estimate_inequalities", t)?;
    let rows: Vec<EstimateRow> = basis
        .family
        .lambdas
        .iter()
        .enumerate()
        .map(|(n, &l)| {
            let tail = basis.tail_norm_sq(n, t).clamp(0.0, 1.0);
            let head = 1.0 - tail;
            let gap = 2.0 * basis.one_minus_re_overlap(n, t);
            EstimateRow {
                n,
                lhs3: (gap - head).max(0.0),
                lhs4: head,
                envelope3: gap,
                envelope4: -(2.0 * l.re * t).exp_m1(),
                printed3: 2.0 * (1.0 - (-l.re).exp()),
                printed4: 1.0 - (-2.0 * l.re * t).exp(),
            }
        })
        .collect();
    let sum = rows.iter().map(|r| r.lhs3 + r.lhs4).sum();
    Ok(EstimateReport { t, rows, sum })
}
