//! End-to-end check of the shift-approximation hypotheses for one exponential
//! family and one scalar covariance `R = νI`.

use serde::Serialize;

use crate::bogoliubov::{approximation_check, conjugacy_criterion, loglog_slope, Verdict};
use crate::error::{Error, Result};
use crate::hardyshift::{
    condition_n_check, defect_hs_norm, orthogonalize, unitary_dilation, validate_condition1, wold_decompose,
    DilationKind, ExponentialFamily, ShiftModel,
};
use crate::opalg::{c, Operator, SPECTRAL_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub family: ExponentialFamily,
    pub nu: f64,
    /// Grid horizon `T` of the dilations.
    pub horizon: f64,
    /// Cell counts `N`, one grid per entry.
    pub cells: Vec<usize>,
    pub t_grid: Vec<f64>,
    /// `log₂` range and point count of the defect-slope sweep.
    pub defect_log2: (i32, i32),
    pub defect_points: usize,
    pub slope_tolerance: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            family: ExponentialFamily::with_auto_radius(vec![c(-1.0, 0.0)]),
            nu: 0.25,
            horizon: 2.0,
            cells: vec![32, 64, 128],
            t_grid: vec![0.125, 0.25],
            defect_log2: (-12, -4),
            defect_points: 9,
            slope_tolerance: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: &'static str,
    pub passed: bool,
    pub detail: String,
    pub metrics: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineReport {
    /// `"II_1"` at `ν = 1/2`, `"III_lambda"` otherwise.
    pub regime: String,
    pub lambda: f64,
    pub stages: Vec<StageReport>,
}

impl PipelineReport {
    pub fn passed(&self) -> bool {
        self.stages.iter().all(|s| s.passed)
    }
}

fn stage(stage: &'static str, passed: bool, detail: impl Into<String>, metrics: &[(&str, f64)]) -> StageReport {
    StageReport {
        stage,
        passed,
        detail: detail.into(),
        metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

/// Orthonormal basis of the range of a projector.
fn projector_basis(p: &Operator) -> Result<Operator> {
    let (values, vecs) = p.hermitian_eigen()?;
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.5).collect();
    Ok(Operator::from_fn(p.rows(), keep.len(), |i, j| vecs.get(i, keep[j])))
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    if !(config.nu > 0.0 && config.nu < 1.0) {
        return Err(Error::InvalidCovariance {
            invariant: "spectrum of R in (0,1)",
            detail: format!("ν = {}", config.nu),
        });
    }
    if config.cells.len() < 3 || config.t_grid.is_empty() {
        return Err(Error::InvalidArgument {
            op: "run_pipeline",
            detail: "need at least three grids and one time".into(),
        });
    }
    let fam = &config.family;
    let mut stages = Vec::new();

    let c1 = validate_condition1(fam);
    stages.push(stage("condition1", c1.is_valid(), format!("{c1:?}"), &[("clause", c1.clause() as f64)]));
    if !c1.is_valid() {
        return Ok(report(config, stages));
    }

    let models = config
        .cells
        .iter()
        .map(|&n| ShiftModel::new(fam, config.horizon, config.horizon / n as f64))
        .collect::<Result<Vec<_>>>()?;
    let model_cells = |n: usize| {
        models.iter().find(|m| m.cells == n).ok_or(Error::InvalidArgument {
            op: "run_pipeline",
            detail: format!("no grid with {n} cells"),
        })
    };
    let model_for = |dim: usize| model_cells(dim / 2);
    let t_max = config.t_grid.iter().cloned().fold(0.0, f64::max);

    // Condition N on the unitary part of the grid approximant.
    let mut bases = Vec::new();
    let mut wold_residual = 0.0_f64;
    let mut deficiency = 0;
    for m in &models {
        let w = wold_decompose(&m.grid_approximant(t_max)?, 4 * m.cells)?;
        wold_residual = wold_residual.max(w.unitary_residual);
        deficiency = w.deficiency;
        bases.push((m.cells, projector_basis(&w.unitary)?));
    }
    let basis_for = |n: usize| bases.iter().find(|(c, _)| *c == n).map(|(_, b)| b.clone());
    let unitary_path = |t: f64, n: usize| {
        let b = basis_for(n).ok_or(Error::InvalidArgument {
            op: "condition_n_check",
            detail: format!("no grid with {n} cells"),
        })?;
        Ok(&(&b.adjoint() * &model_cells(n)?.grid_approximant(t)?) * &b)
    };
    let mut n_grid = vec![0.0];
    n_grid.extend_from_slice(&config.t_grid);
    let cn = condition_n_check(&unitary_path, &n_grid, &config.cells)?;
    stages.push(stage(
        "condition_n",
        cn.passes && wold_residual <= SPECTRAL_TOL,
        format!("unitary part of rank {}", basis_for(config.cells[0]).map_or(0, |b| b.cols())),
        &[
            ("max_modulus", cn.moduli.iter().cloned().fold(0.0, f64::max)),
            ("wold_residual", wold_residual),
            ("deficiency", deficiency as f64),
        ],
    ));

    let basis = orthogonalize(fam)?;
    let (lo, hi) = config.defect_log2;
    let pts = (0..config.defect_points)
        .map(|i| {
            let e = lo as f64 + (hi - lo) as f64 * i as f64 / (config.defect_points - 1).max(1) as f64;
            let t = e.exp2();
            Ok((t.ln(), defect_hs_norm(&basis, t)?.ln()))
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = loglog_slope(&pts).unwrap_or(f64::NAN);
    let at_zero = defect_hs_norm(&basis, 0.0)?;
    stages.push(stage(
        "defect_slope",
        (slope - 0.5).abs() <= config.slope_tolerance && at_zero == 0.0,
        "log-log slope of the HS defect near 0",
        &[("slope", slope), ("value_at_0", at_zero)],
    ));

    let dims: Vec<usize> = config.cells.iter().map(|n| 2 * n).collect();
    let u_dil = |t: f64, dim: usize| Ok(unitary_dilation(model_for(dim)?, DilationKind::Shift, t)?.matrix());
    let v_dil = |t: f64, dim: usize| Ok(unitary_dilation(model_for(dim)?, DilationKind::Approximant, t)?.matrix());
    let mut unitarity = 0.0_f64;
    let finest = *dims.last().expect("checked non-empty");
    for &t in &config.t_grid {
        for kind in [DilationKind::Shift, DilationKind::Approximant] {
            unitarity = unitarity.max(unitary_dilation(model_for(finest)?, kind, t)?.unitarity_residual());
        }
    }
    stages.push(stage(
        "dilation_unitarity",
        unitarity <= SPECTRAL_TOL,
        "both dilations on the finest grid",
        &[("residual", unitarity)],
    ));

    let embedding = |dim: usize| model_for(dim)?.bulk_embedding(t_max);
    let approx = approximation_check(&u_dil, &v_dil, &embedding, &config.t_grid, &dims, SPECTRAL_TOL)?;
    let worst = approx.points.iter().map(|p| p.deviation).fold(0.0, f64::max);
    stages.push(stage(
        "approximation",
        approx.approximates,
        "U'V'* on the complement of K, HS trend of U' - V'",
        &[("max_deviation", worst)],
    ));

    let nu = config.nu;
    let r = |dim: usize| Ok(Operator::scalar(dim, c(nu, 0.0)));
    let conj = conjugacy_criterion(&r, &u_dil, &v_dil, &config.t_grid, &dims)?;
    let all_converge = conj.iter().all(|(_, rep)| rep.verdict == Verdict::Converges);
    let last = conj
        .iter()
        .filter_map(|(_, rep)| rep.hs_values.last().copied())
        .fold(0.0, f64::max);
    stages.push(stage(
        "conjugacy",
        all_converge,
        format!(
            "verdicts {:?}",
            conj.iter().map(|(_, rep)| rep.verdict).collect::<Vec<_>>()
        ),
        &[("max_final_value", last)],
    ));

    Ok(report(config, stages))
}

fn report(config: &PipelineConfig, stages: Vec<StageReport>) -> PipelineReport {
    let lambda = config.nu / (1.0 - config.nu);
    let regime = if (config.nu - 0.5).abs() < 1e-12 {
        "II_1".to_string()
    } else {
        "III_lambda".to_string()
    };
    PipelineReport { regime, lambda, stages }
}
