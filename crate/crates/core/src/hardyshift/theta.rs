use super::{blaschke_minus_one, ExponentialFamily};
use crate::error::{Error, Result};
use crate::opalg::{c, C64};

/// One summand `c·1_{x≥a}·e^{μ(x−a)}` with `Re μ < 0`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ExpTerm {
    pub coef: C64,
    pub mu: C64,
    pub start: f64,
}

/// A finite sum of shifted, truncated exponentials on `(0, ∞)`.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct ExpCombination {
    pub terms: Vec<ExpTerm>,
}

/// `∫_0^L e^{κy} dy`, with `L = ∞` allowed for `Re κ < 0`.
fn exp_integral(kappa: C64, len: f64) -> C64 {
    if len.is_infinite() {
        return -1.0 / kappa;
    }
    let z = kappa * len;
    if z.norm() < 1e-8 {
        return c(len, 0.0) * (1.0 + z / 2.0);
    }
    (z.exp() - 1.0) / kappa
}

impl ExpCombination {
    pub fn exponential(mu: C64) -> Self {
        Self::term(c(1.0, 0.0), mu, 0.0)
    }

    pub fn term(coef: C64, mu: C64, start: f64) -> Self {
        Self {
            terms: vec![ExpTerm { coef, mu, start }],
        }
    }

    /// `Σ c_j e^{μ_j x}` on `(0, ∞)`.
    pub fn from_terms(terms: &[(C64, C64)]) -> Self {
        Self {
            terms: terms
                .iter()
                .map(|&(coef, mu)| ExpTerm { coef, mu, start: 0.0 })
                .collect(),
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.terms
            .iter()
            .filter(|t| x >= t.start)
            .map(|t| t.coef * (t.mu * (x - t.start)).exp())
            .sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm {
                    coef: t.coef * factor,
                    ..*t
                })
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self { terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    /// `S_t u`.
    pub fn shifted(&self, t: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|term| ExpTerm {
                    start: term.start + t,
                    ..*term
                })
                .collect(),
        }
    }

    /// `∫_p^q conj(u)·v`, with `q = ∞` allowed.
    pub fn window_inner(&self, other: &Self, p: f64, q: f64) -> C64 {
        let mut acc = c(0.0, 0.0);
        for a in &self.terms {
            for b in &other.terms {
                let lower = p.max(a.start).max(b.start);
                if lower >= q {
                    continue;
                }
                let kappa = a.mu.conj() + b.mu;
                let at_lower = a.coef.conj()
                    * b.coef
                    * (a.mu.conj() * (lower - a.start)).exp()
                    * (b.mu * (lower - b.start)).exp();
                acc += at_lower * exp_integral(kappa, q - lower);
            }
        }
        acc
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.window_inner(other, 0.0, f64::INFINITY)
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self).re.max(0.0)
    }

    pub fn window_norm_sq(&self, p: f64, q: f64) -> f64 {
        self.window_inner(self, p, q).re.max(0.0)
    }
}

pub fn window_inner(u: &ExpCombination, v: &ExpCombination, p: f64, q: f64) -> C64 {
    u.window_inner(v, p, q)
}

fn check_exponent(family: &ExponentialFamily, mu: C64) -> Result<()> {
    if !(mu.re < 0.0) {
        return Err(Error::InvalidArgument {
            op: "theta_apply",
            detail: format!("exponent {mu} is not in the left half-plane"),
        });
    }
    if family.lambdas.contains(&mu) {
        return Err(Error::AtPole { pole: mu });
    }
    Ok(())
}

/// `(Θ − 1)u`, from the partial fractions of `(B(s) − 1)/(s − μ)`:
/// `(Θ − 1)e^{μx} = (B(μ) − 1)e^{μx} + Σ_k r_k/(λ_k − μ)·e^{λ_k x}`.
pub fn theta_minus_identity(family: &ExponentialFamily, u: &ExpCombination) -> Result<ExpCombination> {
    let residues: Vec<C64> = (0..family.len()).map(|k| family.residue(k)).collect();
    let mut out = ExpCombination::default();
    for term in &u.terms {
        check_exponent(family, term.mu)?;
        let q = blaschke_minus_one(family, term.mu)?;
        out.terms.push(ExpTerm {
            coef: term.coef * q,
            ..*term
        });
        for (k, &lk) in family.lambdas.iter().enumerate() {
            out.terms.push(ExpTerm {
                coef: term.coef * residues[k] / (lk - term.mu),
                mu: lk,
                start: term.start,
            });
        }
    }
    Ok(out)
}

/// `Θu` for the isometry with Laplace symbol `B`.
pub fn theta_apply(family: &ExponentialFamily, u: &ExpCombination) -> Result<ExpCombination> {
    Ok(u.add(&theta_minus_identity(family, u)?))
}

/// One windowed exponential: `f^{(1)} = c·e^{μx}` on `(t, ∞)` normalized so
/// that `f = f^{(1)} − f^{(2)}`, supported on `[t, t+δ]`, has unit norm, and
/// `f^{(2)} = P_{[t+δ,∞)} f^{(1)}`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Prop2Element {
    pub k: i64,
    pub mu: C64,
    pub f1: ExpCombination,
    pub f2: ExpCombination,
}

/// `⟨Θf, f⟩` for one element against the two closed-form predictions.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LaplacePairing {
    pub computed: C64,
    /// `‖f‖²/B(μ)`, equivalently `conj(B(−μ̄))‖f‖²`.
    pub predicted: C64,
    /// `B(μ)‖f‖²`.
    pub literal: C64,
}

impl Prop2Element {
    pub fn window(&self) -> ExpCombination {
        self.f1.sub(&self.f2)
    }

    pub fn part(&self, which: usize) -> &ExpCombination {
        if which == 1 {
            &self.f1
        } else {
            &self.f2
        }
    }

    pub fn laplace_pairing(&self, family: &ExponentialFamily, which: usize) -> Result<LaplacePairing> {
        let f = self.part(which);
        let norm_sq = f.norm_sq();
        let b = 1.0 + blaschke_minus_one(family, self.mu)?;
        Ok(LaplacePairing {
            computed: theta_apply(family, f)?.inner(f),
            predicted: norm_sq / b,
            literal: b * norm_sq,
        })
    }
}

/// `μ_{k,δ} = −1/(2|k|) + i·2πk/δ` for `0 < |k| ≤ k_max`; `k = 0` has no
/// finite real part and is left out.
pub fn prop2_elements(t: f64, delta: f64, k_max: usize) -> Result<Vec<Prop2Element>> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime { op: "prop2_defect", t });
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument {
            op: "prop2_defect",
            detail: format!("window length {delta} must be positive"),
        });
    }
    let k_max = k_max as i64;
    let mut out = Vec::with_capacity(2 * k_max as usize);
    for k in (-k_max..=k_max).filter(|&k| k != 0) {
        let mu = c(-1.0 / (2.0 * k.abs() as f64), 2.0 * std::f64::consts::PI * k as f64 / delta);
        let amp = (-2.0 * mu.re / -(2.0 * mu.re * delta).exp_m1()).sqrt();
        let coef = C64::from_polar(amp, mu.im * t);
        let f1 = ExpCombination::term(coef, mu, t);
        let f2 = ExpCombination::term(coef * (mu * delta).exp(), mu, t + delta);
        out.push(Prop2Element { k, mu, f1, f2 });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Prop2Report {
    pub t: f64,
    pub delta: f64,
    pub k_max: usize,
    /// `(2Σ_k ‖(Θ−1)f^{(1)}_k‖² + ‖(Θ−1)f^{(2)}_k‖²)^{1/2}`, the split estimate.
    pub value: f64,
    /// `(Σ_k ‖P_{[t,t+δ]}(Θ−1)f_k‖²)^{1/2}`, the windowed quantity itself.
    pub windowed: f64,
    /// Asymptotic bound `4sδ/(π²k_max)` on the omitted `|k| > k_max` part of the squared sum.
    pub tail_bound_sq: f64,
}

/// Hilbert–Schmidt estimate of `Δ_{t,δ} = P_{[t,t+δ]}ΘP_{[t,t+δ]} − P_{[t,t+δ]}`
/// over the windowed exponentials, up to the Riesz constant of that family.
pub fn prop2_defect(family: &ExponentialFamily, t: f64, delta: f64, k_max: usize) -> Result<Prop2Report> {
    if k_max < 8 {
        return Err(Error::InvalidArgument {
            op: "prop2_defect",
            detail: format!("k_max = {k_max} is below 8"),
        });
    }
    family.require_valid()?;
    let elements = prop2_elements(t, delta, k_max)?;
    let mut split = 0.0;
    let mut windowed = 0.0;
    for e in &elements {
        let d1 = theta_minus_identity(family, &e.f1)?;
        let d2 = theta_minus_identity(family, &e.f2)?;
        split += d1.norm_sq() + d2.norm_sq();
        windowed += d1.sub(&d2).window_norm_sq(t, t + delta);
    }
    Ok(Prop2Report {
        t,
        delta,
        k_max,
        value: (2.0 * split).sqrt(),
        windowed: windowed.sqrt(),
        tail_bound_sq: 4.0 * family.s() * delta / (std::f64::consts::PI.powi(2) * k_max as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bogoliubov::loglog_slope;
    use crate::hardyshift::{blaschke_eval, orthogonalize};

    fn single() -> ExponentialFamily {
        ExponentialFamily::with_auto_radius(vec![c(-1.0, 0.0)])
    }

    #[test]
    fn worked_single_factor() {
        let out = theta_apply(&single(), &ExpCombination::exponential(c(-0.5, 0.0))).unwrap();
        assert!((out.eval(0.0) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((out.eval(2.0) - (-3.0 * (-1.0_f64).exp() + 4.0 * (-2.0_f64).exp())).norm() < 1e-14);
        assert!((out.norm_sq() - 1.0).abs() < 1e-14);
        let f = ExpCombination::exponential(c(-0.5, 0.0));
        assert!((out.inner(&f) - c(-1.0 / 3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn empty_family_is_identity() {
        let u = ExpCombination::from_terms(&[(c(1.0, 2.0), c(-0.3, 1.0)), (c(-0.5, 0.0), c(-2.0, 0.0))]);
        let out = theta_minus_identity(&ExponentialFamily::empty(), &u).unwrap();
        assert!(out.terms.iter().all(|t| t.coef.norm() == 0.0));
    }

    #[test]
    fn isometric_intertwining_and_orthogonal() {
        let fam = ExponentialFamily::with_auto_radius(vec![c(-1.0, 0.0), c(-2.0, 0.5), c(-0.4, -1.2)]);
        let basis = orthogonalize(&fam).unwrap();
        let u = ExpCombination::from_terms(&[(c(1.0, -0.5), c(-0.7, 2.0)), (c(0.3, 0.0), c(-3.0, -1.0))]);
        let v = ExpCombination::from_terms(&[(c(0.2, 0.1), c(-1.5, 0.0))]);
        let tu = theta_apply(&fam, &u).unwrap();
        let tv = theta_apply(&fam, &v).unwrap();
        assert!((tu.norm_sq() - u.norm_sq()).abs() < 1e-10);
        assert!((tu.inner(&tv) - u.inner(&v)).norm() < 1e-10);
        let t = 0.8;
        let lhs = theta_apply(&fam, &u.shifted(t)).unwrap();
        let rhs = tu.shifted(t);
        assert!(lhs.sub(&rhs).norm_sq().sqrt() < 1e-10);
        for n in 0..3 {
            let g = ExpCombination::from_terms(&basis.exponential_coeffs(n));
            assert!((g.norm_sq() - 1.0).abs() < 1e-10);
            assert!(g.inner(&tu).norm() < 1e-10);
        }
        assert!(matches!(
            theta_apply(&fam, &ExpCombination::exponential(c(-1.0, 0.0))),
            Err(Error::AtPole { .. })
        ));
        assert!(theta_apply(&fam, &ExpCombination::exponential(c(0.5, 0.0))).is_err());
    }

    #[test]
    fn elements_are_normalized_windows() {
        let es = prop2_elements(1.0, 0.25, 8).unwrap();
        assert_eq!(es.len(), 16);
        assert!(es.iter().all(|e| e.k != 0));
        for e in &es {
            let w = e.window();
            assert!((w.norm_sq() - 1.0).abs() < 1e-10);
            assert!((w.window_norm_sq(1.0, 1.25) - 1.0).abs() < 1e-10);
        }
        assert!(prop2_elements(1.0, 0.0, 8).is_err());
    }

    #[test]
    fn laplace_pairing_forms() {
        let fam = ExponentialFamily::with_auto_radius(vec![c(-1.0, 0.0), c(-0.5, 0.3)]);
        for e in prop2_elements(0.5, 0.5, 8).unwrap().iter().take(4) {
            for which in [1, 2] {
                let p = e.laplace_pairing(&fam, which).unwrap();
                assert!((p.computed - p.predicted).norm() < 1e-10 * p.predicted.norm().max(1.0));
                let b_reflected = blaschke_eval(&fam, -e.mu.conj()).unwrap();
                assert!((p.predicted - b_reflected.conj() * e.part(which).norm_sq()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn prop2_scaling() {
        assert_eq!(prop2_defect(&ExponentialFamily::empty(), 1.0, 0.1, 8).unwrap().value, 0.0);
        let fam = single();
        let pts: Vec<(f64, f64)> = (3..=10)
            .map(|k| {
                let delta = 2.0_f64.powi(-k);
                let rep = prop2_defect(&fam, 1.0, delta, 64).unwrap();
                assert!(rep.windowed <= rep.value);
                (delta.ln(), rep.value.ln())
            })
            .collect();
        let slope = loglog_slope(&pts).unwrap();
        assert!((slope - 0.5).abs() < 0.15, "slope {slope}");
        let a = prop2_defect(&fam, 0.0, 0.1, 16).unwrap();
        let b = prop2_defect(&fam, 3.0, 0.1, 16).unwrap();
        assert!((a.value - b.value).abs() < 1e-10 * a.value);
        assert!(prop2_defect(&fam, 1.0, 0.1, 4).is_err());
    }
}
