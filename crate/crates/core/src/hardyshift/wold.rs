use crate::bogoliubov::loglog_slope;
use crate::error::{Error, Result};
use crate::opalg::{hs_norm, operator_norm, Operator, ALGEBRAIC_TOL, SPECTRAL_TOL};

/// Wold splitting of a finite partial isometry. `unitary` projects onto the
/// stable range `∩ VⁿK` on which `V` acts unitarily; `cnu` onto its complement.
#[derive(Clone, Debug, PartialEq)]
pub struct WoldDecomposition {
    pub unitary: Operator,
    pub cnu: Operator,
    /// `dim ker V*`.
    pub deficiency: usize,
    pub iterations: usize,
    /// `‖(V*V − 1)P_u‖ + ‖(VV* − 1)P_u‖`.
    pub unitary_residual: f64,
}

/// Orthogonal projector onto the range, keeping singular values above 1/2.
fn range_projector(a: &Operator) -> Operator {
    let svd = a.matrix().clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 0.5)
        .collect();
    let basis = u.select_columns(&keep);
    Operator::from_matrix(crate::opalg::matmul(&basis, &basis.adjoint()))
}

/// Finite matrices are never proper isometries outside the unitary case, so
/// partial isometries (`V*V` a projection) are accepted; a truncated shift is
/// the model completely nonunitary piece.
pub fn wold_decompose(v: &Operator, max_iter: usize) -> Result<WoldDecomposition> {
    v.require_square("wold_decompose")?;
    let n = v.rows();
    let p = &v.adjoint() * v;
    let residual = operator_norm(&(&(&p * &p) - &p)).max(p.hermiticity_residual());
    if residual > ALGEBRAIC_TOL {
        return Err(Error::NotIsometric {
            op: "wold_decompose",
            residual,
        });
    }
    let mut power = v.clone();
    let mut proj = range_projector(&power);
    let mut iterations = 1;
    while iterations < max_iter.max(1) {
        power = v * &power;
        let next = range_projector(&power);
        let change = operator_norm(&(&next - &proj));
        proj = next;
        iterations += 1;
        if change <= ALGEBRAIC_TOL {
            break;
        }
    }
    let id = Operator::identity(n);
    let defect = &id - &(v * &v.adjoint());
    let deficiency = defect.trace().re.round().max(0.0) as usize;
    let unitary_residual =
        operator_norm(&(&(&p - &id) * &proj)) + operator_norm(&(&(&(v * &v.adjoint()) - &id) * &proj));
    Ok(WoldDecomposition {
        cnu: &id - &proj,
        unitary: proj,
        deficiency,
        iterations,
        unitary_residual,
    })
}

/// Modulus of continuity `max ‖U(t_{i+1}) − U(t_i)‖/|t_{i+1} − t_i|` per
/// truncation size, and whether it stays bounded as the size grows.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConditionNReport {
    pub sizes: Vec<usize>,
    pub moduli: Vec<f64>,
    /// Largest distance from unitarity among the samples.
    pub unitarity_residual: f64,
    /// Log-log slope of modulus against size.
    pub growth: Option<f64>,
    pub passes: bool,
}

/// Growth exponent above which the modulus counts as unbounded.
pub const CONDITION_N_GROWTH: f64 = 0.25;

fn verdict(sizes: Vec<usize>, moduli: Vec<f64>, unitarity_residual: f64) -> ConditionNReport {
    let pts: Vec<(f64, f64)> = sizes
        .iter()
        .zip(&moduli)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&s, &m)| ((s as f64).ln(), m.ln()))
        .collect();
    let growth = if pts.len() == sizes.len() { loglog_slope(&pts) } else { None };
    let bounded = match growth {
        Some(g) => g <= CONDITION_N_GROWTH,
        None => moduli.iter().all(|&m| m <= SPECTRAL_TOL) || sizes.len() < 2,
    };
    ConditionNReport {
        sizes,
        moduli,
        unitarity_residual,
        growth,
        passes: bounded && unitarity_residual <= SPECTRAL_TOL,
    }
}

/// Operator-norm continuity of `t ↦ U(t)` sampled on `t_grid` at each size.
pub fn condition_n_check(
    path: &dyn Fn(f64, usize) -> Result<Operator>,
    t_grid: &[f64],
    sizes: &[usize],
) -> Result<ConditionNReport> {
    if t_grid.len() < 2 {
        return Err(Error::InvalidArgument {
            op: "condition_n_check",
            detail: "t grid needs at least two points".into(),
        });
    }
    let mut moduli = Vec::with_capacity(sizes.len());
    let mut worst = 0.0_f64;
    for &size in sizes {
        let samples = t_grid
            .iter()
            .map(|&t| path(t, size))
            .collect::<Result<Vec<_>>>()?;
        worst = samples.iter().map(Operator::unitarity_residual).fold(worst, f64::max);
        let modulus = t_grid
            .windows(2)
            .zip(samples.windows(2))
            .map(|(ts, us)| operator_norm(&(&us[1] - &us[0])) / (ts[1] - ts[0]).abs())
            .fold(0.0, f64::max);
        moduli.push(modulus);
    }
    Ok(verdict(sizes.to_vec(), moduli, worst))
}

/// Uniform continuity of `e^{iAt}` through the norm of the generator `A` at each size.
pub fn condition_n_generator(
    generator: &dyn Fn(usize) -> Result<Operator>,
    sizes: &[usize],
) -> Result<ConditionNReport> {
    let mut moduli = Vec::with_capacity(sizes.len());
    let mut worst = 0.0_f64;
    for &size in sizes {
        let a = generator(size)?;
        a.require_square("condition_n_generator")?;
        worst = worst.max(a.hermiticity_residual() / hs_norm(&a).max(1.0));
        moduli.push(operator_norm(&a));
    }
    Ok(verdict(sizes.to_vec(), moduli, worst))
}
