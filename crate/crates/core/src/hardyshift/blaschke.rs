use super::ExponentialFamily;
use crate::error::{Error, Result};
use crate::opalg::{c, C64};

/// `B(λ) = Π (λ + λ̄_k)/(λ − λ_k)`.
pub fn blaschke_eval(family: &ExponentialFamily, lambda: C64) -> Result<C64> {
    Ok(blaschke_minus_one(family, lambda)? + 1.0)
}

/// `B(λ) − 1` without the cancellation of forming `B` first. Each factor is
/// `1 + z_k` with `z_k = 2Re λ_k/(λ − λ_k)`, and `q ← q + z_k(1 + q)`.
pub fn blaschke_minus_one(family: &ExponentialFamily, lambda: C64) -> Result<C64> {
    let mut q = c(0.0, 0.0);
    for &lk in &family.lambdas {
        if lambda == lk {
            return Err(Error::AtPole { pole: lk });
        }
        let z = (2.0 * lk.re) / (lambda - lk);
        q += z * (1.0 + q);
    }
    Ok(q)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct AsymptoticsReport {
    pub radii: Vec<f64>,
    /// `r·(1 − B(r))` on the positive axis.
    pub scaled: Vec<C64>,
    /// Intercept of a linear fit of `r(1 − B(r))` against `1/r`.
    pub c3_fit: f64,
    /// `2s`.
    pub c3_expected: f64,
    /// Largest `|B|` sampled on the circles `|λ| = r`.
    pub c1: f64,
    /// Radius outside which `c1` bounds `|B|`.
    pub c2: f64,
}

impl AsymptoticsReport {
    pub fn relative_error(&self) -> f64 {
        if self.c3_expected == 0.0 {
            self.c3_fit.abs()
        } else {
            ((self.c3_fit - self.c3_expected) / self.c3_expected).abs()
        }
    }
}

const CIRCLE_SAMPLES: usize = 64;

pub fn blaschke_asymptotics(family: &ExponentialFamily, radii: &[f64]) -> Result<AsymptoticsReport> {
    let cluster = family.lambdas.iter().fold(0.0_f64, |m, l| m.max(l.norm()));
    let c2 = 2.0 * cluster;
    if radii.is_empty() {
        return Err(Error::InvalidArgument {
            op: "blaschke_asymptotics",
            detail: "no radii".into(),
        });
    }
    if let Some(&r) = radii.iter().find(|&&r| !(r > c2)) {
        return Err(Error::InvalidArgument {
            op: "blaschke_asymptotics",
            detail: format!("radius {r} is inside the pole cluster (must exceed {c2})"),
        });
    }
    let scaled: Vec<C64> = radii
        .iter()
        .map(|&r| blaschke_minus_one(family, c(r, 0.0)).map(|q| -q * r))
        .collect::<Result<_>>()?;
    let c3_fit = if radii.len() == 1 {
        scaled[0].re
    } else {
        let xs: Vec<f64> = radii.iter().map(|r| 1.0 / r).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = scaled.iter().map(|z| z.re).sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&scaled).map(|(x, z)| (x - mx) * (z.re - my)).sum();
        if sxx == 0.0 {
            my
        } else {
            my - (sxy / sxx) * mx
        }
    };
    let mut c1: f64 = 0.0;
    for &r in radii {
        for k in 0..CIRCLE_SAMPLES {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / CIRCLE_SAMPLES as f64;
            c1 = c1.max(blaschke_eval(family, C64::from_polar(r, angle))?.norm());
        }
    }
    Ok(AsymptoticsReport {
        radii: radii.to_vec(),
        scaled,
        c3_fit,
        c3_expected: 2.0 * family.s(),
        c1,
        c2,
    })
}
