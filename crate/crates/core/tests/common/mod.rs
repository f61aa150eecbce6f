#![allow(dead_code)]

use carshift::hardyshift::ExponentialFamily;
use carshift::C64;
use gauss_quad::legendre::GaussLegendre;

pub const GL_NODES: usize = 16;

pub fn rule() -> Vec<(f64, f64)> {
    GaussLegendre::new(GL_NODES.try_into().unwrap())
        .as_node_weight_pairs()
        .to_vec()
}

/// Composite Gauss–Legendre on `[a, b]` with `panels` equal panels.
pub fn integrate(rule: &[(f64, f64)], a: f64, b: f64, panels: usize, f: impl Fn(f64) -> C64) -> C64 {
    let w = (b - a) / panels as f64;
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * w;
        for &(x, wt) in rule {
            acc += f(lo + 0.5 * w * (x + 1.0)) * (0.5 * w * wt);
        }
    }
    acc
}

/// Residue of `B(s) = Π (s + λ̄_j)/(s − λ_j)` at `λ_k`.
pub fn residue(fam: &ExponentialFamily, k: usize) -> C64 {
    let l = &fam.lambdas;
    let mut r = l[k] + l[k].conj();
    for j in 0..l.len() {
        if j != k {
            r *= (l[k] + l[j].conj()) / (l[k] - l[j]);
        }
    }
    r
}

/// `⟨Θf, f⟩` for `f = coef·e^{μ(x−a)}` on `[a, ∞)`, with `Θ` in its time-domain
/// form `(Θu)(x) = u(x) + Σ_k r_k ∫_0^x e^{λ_k(x−y)} u(y) dy`, by composite
/// Gauss–Legendre on `[a, a + len]`. The convolutions are carried across
/// panels by `v(x + w) = e^{λw} v(x) + ∫_x^{x+w} e^{λ(x+w−y)} u(y) dy`.
pub fn theta_pairing_quadrature(fam: &ExponentialFamily, coef: C64, mu: C64, a: f64, len: f64, panels: usize) -> C64 {
    let rule = rule();
    let f = |x: f64| coef * (mu * (x - a)).exp();
    let res: Vec<C64> = (0..fam.len()).map(|k| residue(fam, k)).collect();
    let w = len / panels as f64;
    let mut v = vec![C64::new(0.0, 0.0); fam.len()];
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * w;
        for &(x, wt) in &rule {
            let node = lo + 0.5 * w * (x + 1.0);
            let mut theta_f = f(node);
            for (k, &lk) in fam.lambdas.iter().enumerate() {
                let partial = integrate(&rule, lo, node, 1, |y| (lk * (node - y)).exp() * f(y));
                theta_f += res[k] * ((lk * (node - lo)).exp() * v[k] + partial);
            }
            acc += theta_f.conj() * f(node) * (0.5 * w * wt);
        }
        for (k, &lk) in fam.lambdas.iter().enumerate() {
            let hi = lo + w;
            v[k] = (lk * w).exp() * v[k] + integrate(&rule, lo, hi, 1, |y| (lk * (hi - y)).exp() * f(y));
        }
    }
    acc
}

pub fn loglog(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    carshift::bogoliubov::loglog_slope(&logs).expect("at least two points")
}
