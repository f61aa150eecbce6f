//! Dispatch from experiment kinds to the library checks.

use std::path::PathBuf;
use std::time::Instant;

use carshift::bogoliubov::{
    approximation_check, araki_report, extension_criterion, extension_families, innerness_norm, conjugacy_criterion,
    loglog_slope, Verdict,
};
use carshift::hardyshift::{
    blaschke_asymptotics, blaschke_eval, defect_hs_norm, estimate_inequalities, orthogonalize, prop2_defect,
    prop2_elements, unitary_dilation, validate_condition1, DilationKind, ExponentialFamily, ShiftModel,
};
use carshift::modular::{commutant_generator, commutant_generator_star, modular_involution_formula, tomita_operator, GammaPlacement};
use carshift::opalg::{c, inner};
use carshift::pipeline::{run_pipeline, PipelineConfig};
use carshift::quasifree::{doubled_representation, purification_projection, quasifree_expectation, CovarianceState};
use carshift::random::{random_covariance_matrix, random_real_vector, random_vector, rng, uniform};
use carshift::{hs_norm, operator_norm, AntilinearOperator, FockSpace, Operator, Vector};
use serde::Deserialize;

use crate::config::{ConfigError, ExperimentConfig, Kind};
use crate::report::ExperimentReport;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{kind}: {source}")]
    Module {
        kind: Kind,
        #[source]
        source: carshift::Error,
    },
}

type Outcome = Result<ExperimentReport, RunError>;

/// Runs one experiment; rows come back sorted by parameter tuple.
pub fn run(cfg: &ExperimentConfig) -> Outcome {
    let start = Instant::now();
    let mut report = match cfg.kind {
        Kind::CarCheck => car_check(cfg),
        Kind::QuasifreeVerify => quasifree_verify(cfg),
        Kind::ModularVerify => modular_verify(cfg),
        Kind::Innerness => innerness(cfg),
        Kind::Conjugacy => conjugacy(cfg),
        Kind::Extension => extension(cfg),
        Kind::Approx => approx(cfg),
        Kind::Blaschke => blaschke(cfg),
        Kind::Prop2 => prop2(cfg),
        Kind::DilationCheck => dilation_check(cfg),
        Kind::Pipeline => pipeline(cfg),
    }?;
    report.sort_rows();
    report.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Lines printed by `list`: kind, summary, accepted parameters.
pub fn schemas() -> Vec<(Kind, &'static str)> {
    Kind::ALL
        .iter()
        .map(|&k| {
            let params = match k {
                Kind::CarCheck => "seed*, modes = 4, trials = 100",
                Kind::QuasifreeVerify => "seed*, modes = 3, trials = 100, spectrum = [0.05, 0.95]",
                Kind::ModularVerify => "seed*, modes = 2, generators = 3, nu = 0.25",
                Kind::Innerness => "nu = 0.3, w = \"minus-identity\" | \"finite-rank\" | \"phase\", flips = 2, theta = 1.5707963, sizes = [4, 8, 16, 32, 64]",
                Kind::Conjugacy => "nu = 0.25, t_grid = [0.125, 0.25, 0.5], sizes = [8, 16, 32, 64, 128], amplitude = 1.0, decay = 1.0",
                Kind::Extension => "sizes = [4, 8, 16, 32], families = all",
                Kind::Approx => "family, t_log2 = [-12, -4], points = 9, tolerance = 0.1",
                Kind::Blaschke => "seed*, family, samples = 1000, y_max = 50.0, radii = 8",
                Kind::Prop2 => "family, t = 1.0, delta_log2 = [-10, -3], k_max = 64, tolerance = 0.15",
                Kind::DilationCheck => "family, horizon = 2.0, cells = [64, 128, 256, 512], t = 0.25, t_grid = [0.125, 0.25], tolerance = 1e-8",
                Kind::Pipeline => "family, nu = 0.25, horizon = 2.0, cells = [32, 64, 128], t_grid = [0.125, 0.25], defect_log2 = [-12, -4], defect_points = 9, slope_tolerance = 0.1",
            };
            (k, params)
        })
        .collect()
}

fn module(kind: Kind) -> impl Fn(carshift::Error) -> RunError {
    move |source| RunError::Module { kind, source }
}

fn field_error(field: &str, expected: &str, actual: impl ToString) -> RunError {
    RunError::Config(ConfigError::Field {
        field: field.to_string(),
        expected: expected.to_string(),
        actual: actual.to_string(),
    })
}

fn require(ok: bool, field: &str, expected: &str, actual: impl ToString) -> Result<(), RunError> {
    if ok {
        Ok(())
    } else {
        Err(field_error(field, expected, actual))
    }
}

fn require_sizes(field: &str, sizes: &[usize], min_len: usize) -> Result<(), RunError> {
    require(
        sizes.len() >= min_len && sizes.iter().all(|&n| n > 0),
        field,
        &format!("at least {min_len} positive sizes"),
        format!("{sizes:?}"),
    )
}

/// A λ family from the sidecar that satisfies condition (1); a violation is
/// a config error for every kind except `pipeline`, which reports it as a
/// failed stage.
fn valid_family(cfg: &ExperimentConfig, file: Option<&PathBuf>) -> Result<ExponentialFamily, RunError> {
    let fam = cfg.family(file)?;
    let check = validate_condition1(&fam);
    require(check.is_valid(), "family", "a family satisfying condition (1)", format!("{check:?}"))?;
    Ok(fam)
}

fn log2_grid(field: &str, range: [i32; 2], points: usize) -> Result<Vec<f64>, RunError> {
    require(range[0] < range[1] && points >= 2, field, "[lo, hi] with lo < hi and points ≥ 2", format!("{range:?}, {points} points"))?;
    let (lo, hi) = (range[0] as f64, range[1] as f64);
    Ok((0..points)
        .map(|i| 2.0_f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64))
        .collect())
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    loglog_slope(&logs).unwrap_or(f64::NAN)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Converges => "converges",
        Verdict::Diverges => "diverges",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn verdict_code(v: Verdict) -> f64 {
    match v {
        Verdict::Converges => 0.0,
        Verdict::Diverges => 1.0,
        Verdict::Inconclusive => 2.0,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CarParams {
    modes: usize,
    trials: usize,
}

impl Default for CarParams {
    fn default() -> Self {
        Self { modes: 4, trials: 100 }
    }
}

fn car_check(cfg: &ExperimentConfig) -> Outcome {
    let p: CarParams = cfg.params()?;
    let mut r = rng(cfg.require_seed()?);
    require(p.modes >= 1, "modes", "at least 1", p.modes)?;
    let err = module(cfg.kind);
    let space = FockSpace::new(p.modes).map_err(&err)?;
    let id = Operator::identity(space.dim());
    let mut report = ExperimentReport::new(cfg, &["trial", "modes", "anticommutator_residual", "norm_deviation"]);
    let (mut worst, mut norm_dev) = (0.0_f64, 0.0_f64);
    for trial in 0..p.trials {
        let f = random_vector(&mut r, p.modes);
        let g = random_vector(&mut r, p.modes);
        let af = space.annihilator(&f).map_err(&err)?;
        let ag = space.annihilator(&g).map_err(&err)?;
        let mixed = &af.anticommutator(&ag.adjoint()) - &id.scale(inner(&f, &g));
        let res = mixed.max_abs().max(af.anticommutator(&ag).max_abs());
        let dev = (operator_norm(&af) - f.norm()).abs();
        worst = worst.max(res);
        norm_dev = norm_dev.max(dev);
        report.row(&[trial as f64, p.modes as f64, res, dev]);
    }
    report.verdict(
        "CAR identities",
        1,
        worst <= 1e-12 && norm_dev <= 1e-10,
        format!("anticommutator residual {worst:.1e} (≤ 1e-12), | ‖a(f)‖ − ‖f‖ | {norm_dev:.1e} (≤ 1e-10)"),
    );
    Ok(report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct QuasifreeParams {
    modes: usize,
    trials: usize,
    spectrum: [f64; 2],
}

impl Default for QuasifreeParams {
    fn default() -> Self {
        Self {
            modes: 3,
            trials: 100,
            spectrum: [0.05, 0.95],
        }
    }
}

fn quasifree_verify(cfg: &ExperimentConfig) -> Outcome {
    let p: QuasifreeParams = cfg.params()?;
    let mut r = rng(cfg.require_seed()?);
    require((1..=4).contains(&p.modes), "modes", "1 to 4", p.modes)?;
    let [lo, hi] = p.spectrum;
    require(0.0 <= lo && lo <= hi && hi <= 1.0, "spectrum", "[lo, hi] inside [0, 1]", format!("{:?}", p.spectrum))?;
    let err = module(cfg.kind);
    let mut report = ExperimentReport::new(
        cfg,
        &["trial", "modes", "creators", "annihilators", "det_vs_gns", "projection_residual", "two_point_residual"],
    );
    let (mut det_worst, mut proj_worst, mut two_worst) = (0.0_f64, 0.0_f64, 0.0_f64);
    for trial in 0..p.trials {
        let modes = 1 + trial % p.modes;
        let state = CovarianceState::new(random_covariance_matrix(&mut r, modes, lo, hi)).map_err(&err)?;
        let rep = doubled_representation(&state).map_err(&err)?;
        let m = trial % 4;
        let n = if trial % 7 == 0 { (m + 1) % 4 } else { m }.min(6 - m);
        let fs: Vec<Vector> = (0..m).map(|_| random_real_vector(&mut r, modes)).collect();
        let gs: Vec<Vector> = (0..n).map(|_| random_real_vector(&mut r, modes)).collect();
        let det = quasifree_expectation(&state, &fs, &gs).map_err(&err)?;
        let gns = rep.monomial_expectation(&fs, &gs).map_err(&err)?;
        let det_dev = (det - gns).norm();

        let proj = purification_projection(&state);
        let proj_res = (&(&proj * &proj) - &proj).max_abs().max(proj.hermiticity_residual());
        let (f1, f2) = (random_vector(&mut r, modes), random_vector(&mut r, modes));
        let (g1, g2) = (random_vector(&mut r, modes), random_vector(&mut r, modes));
        let x = &rep.creator(&f1, &f2).map_err(&err)? * &rep.annihilator(&g1, &g2).map_err(&err)?;
        let big_f = Vector::from_iterator(2 * modes, f1.iter().chain(f2.iter()).cloned());
        let big_g = Vector::from_iterator(2 * modes, g1.iter().chain(g2.iter()).cloned());
        let two = (rep.vacuum_expectation(&x) - inner(&big_g, &proj.apply(&big_f))).norm();

        det_worst = det_worst.max(det_dev);
        proj_worst = proj_worst.max(proj_res);
        two_worst = two_worst.max(two);
        report.row(&[trial as f64, modes as f64, m as f64, n as f64, det_dev, proj_res, two]);
    }
    report.verdict("determinant vs GNS", 2, det_worst <= 1e-9, format!("max |det − GNS| {det_worst:.1e} (≤ 1e-9)"));
    report.verdict(
        "purification",
        3,
        proj_worst <= 1e-12 && two_worst <= 1e-10,
        format!("P² = P = P* to {proj_worst:.1e} (≤ 1e-12), two-point residual {two_worst:.1e} (≤ 1e-10)"),
    );
    Ok(report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ModularParams {
    modes: usize,
    generators: usize,
    nu: f64,
}

impl Default for ModularParams {
    fn default() -> Self {
        Self {
            modes: 2,
            generators: 3,
            nu: 0.25,
        }
    }
}

fn modular_verify(cfg: &ExperimentConfig) -> Outcome {
    let p: ModularParams = cfg.params()?;
    let mut r = rng(cfg.require_seed()?);
    require((1..=3).contains(&p.modes), "modes", "1 to 3", p.modes)?;
    require(p.nu > 0.0 && p.nu <= 0.5, "nu", "a value in (0, 1/2]", p.nu)?;
    let err = module(cfg.kind);
    let mut report = ExperimentReport::new(cfg, &["modes", "generator", "j_formula_distance", "jpij_vs_bstar", "jpij_vs_b"]);

    let state = CovarianceState::new(random_covariance_matrix(&mut r, p.modes, 0.1, 0.9)).map_err(&err)?;
    let rep = doubled_representation(&state).map_err(&err)?;
    let data = tomita_operator(&rep).map_err(&err)?;
    let formula = modular_involution_formula(rep.factor(), &AntilinearOperator::conjugation(p.modes)).map_err(&err)?;
    let j_dist = formula.distance(&data.j_mod);
    let (mut star_worst, mut plain_best) = (0.0_f64, f64::INFINITY);
    for k in 0..p.generators {
        let f = random_vector(&mut r, p.modes);
        let conj = data.conjugate_by_j(&rep.first_annihilator(&f).map_err(&err)?);
        let star = hs_norm(&(&conj - &commutant_generator_star(&rep, &f, GammaPlacement::Left).map_err(&err)?));
        let plain = hs_norm(&(&conj - &commutant_generator(&rep, &f).map_err(&err)?));
        star_worst = star_worst.max(star);
        plain_best = plain_best.min(plain);
        report.row(&[p.modes as f64, k as f64, j_dist, star, plain]);
    }

    let scalar = CovarianceState::scalar(p.modes, p.nu).map_err(&err)?;
    let lambda = p.nu / (1.0 - p.nu);
    let spectrum = tomita_operator(&doubled_representation(&scalar).map_err(&err)?)
        .map_err(&err)?
        .delta_spectrum()
        .map_err(&err)?;
    let spec_dev = spectrum
        .iter()
        .map(|&x| {
            let power = if lambda == 1.0 { 0 } else { (x.ln() / lambda.ln()).round() as i32 };
            (x - lambda.powi(power)).abs()
        })
        .fold(0.0, f64::max);
    report.fit("lambda", lambda);
    report.verdict("J formula vs polar", 4, j_dist <= 1e-9, format!("distance {j_dist:.1e} (≤ 1e-9)"));
    report.verdict(
        "JπJ = b*",
        4,
        star_worst <= 1e-10 && plain_best > 1e-3,
        format!("JπJ vs b* {star_worst:.1e} (≤ 1e-10); vs b at least {plain_best:.2} (the b identity does not hold)"),
    );
    report.verdict(
        "Δ spectrum",
        4,
        spec_dev <= 1e-8,
        format!("{} eigenvalues off powers of λ = {lambda:.4} by {spec_dev:.1e} (≤ 1e-8)", spectrum.len()),
    );
    Ok(report)
}

#[derive(Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum WChoice {
    MinusIdentity,
    FiniteRank,
    Phase,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct InnernessParams {
    nu: f64,
    w: WChoice,
    flips: usize,
    theta: f64,
    sizes: Vec<usize>,
}

impl Default for InnernessParams {
    fn default() -> Self {
        Self {
            nu: 0.3,
            w: WChoice::MinusIdentity,
            flips: 2,
            theta: std::f64::consts::FRAC_PI_2,
            sizes: vec![4, 8, 16, 32, 64],
        }
    }
}

fn innerness(cfg: &ExperimentConfig) -> Outcome {
    let p: InnernessParams = cfg.params()?;
    require((0.0..=1.0).contains(&p.nu), "nu", "a value in [0, 1]", p.nu)?;
    require_sizes("sizes", &p.sizes, 3)?;
    let (w, flips, theta) = (p.w, p.flips, p.theta);
    // Diagonal entries of W and how many of them differ from 1.
    let entry = move |k: usize| match w {
        WChoice::MinusIdentity => c(-1.0, 0.0),
        WChoice::FiniteRank if k < flips => c(-1.0, 0.0),
        WChoice::FiniteRank => c(1.0, 0.0),
        WChoice::Phase => c(theta.cos(), theta.sin()),
    };
    let nu = p.nu;
    let r = move |n: usize| Ok(Operator::scalar(n, c(nu, 0.0)));
    let wop = move |n: usize| Ok(Operator::from_diagonal(&(0..n).map(entry).collect::<Vec<_>>()));
    let rep = innerness_norm(&r, &wop, &p.sizes).map_err(module(cfg.kind))?;

    let mut report = ExperimentReport::new(cfg, &["size", "hs_value", "closed_form"]);
    let mut dev = 0.0_f64;
    for (&n, &v) in p.sizes.iter().zip(&rep.hs_values) {
        let sum: f64 = (0..n).map(|k| (entry(k) - c(1.0, 0.0)).norm_sqr()).sum();
        let exact = (nu * (1.0 - nu) * sum).sqrt();
        dev = dev.max((v - exact).abs() / exact.max(1.0));
        report.row(&[n as f64, v, exact]);
    }
    let trivial = nu == 0.0 || nu == 1.0 || (w == WChoice::Phase && (entry(0) - c(1.0, 0.0)).norm() == 0.0);
    let expected = if trivial || w == WChoice::FiniteRank { Verdict::Converges } else { Verdict::Diverges };
    if let Some(fit) = rep.fit {
        report.fit("exponent", fit);
    }
    report.extra("verdict", verdict_name(rep.verdict));
    report.verdict(
        "innerness norm",
        5,
        dev <= 1e-13 && rep.verdict == expected,
        format!(
            "closed form to {dev:.1e} (≤ 1e-13); verdict {} (closed form predicts {})",
            verdict_name(rep.verdict),
            verdict_name(expected)
        ),
    );
    Ok(report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConjugacyParams {
    nu: f64,
    t_grid: Vec<f64>,
    sizes: Vec<usize>,
    amplitude: f64,
    decay: f64,
}

impl Default for ConjugacyParams {
    fn default() -> Self {
        Self {
            nu: 0.25,
            t_grid: vec![0.125, 0.25, 0.5],
            sizes: vec![8, 16, 32, 64, 128],
            amplitude: 1.0,
            decay: 1.0,
        }
    }
}

/// `U_t = diag(e^{itk})` against `V_t = diag(e^{it(k + a(k+1)^{−β})})`; the
/// criterion sum behaves like `t²a² Σ (k+1)^{−2β}`.
fn conjugacy(cfg: &ExperimentConfig) -> Outcome {
    let p: ConjugacyParams = cfg.params()?;
    require(p.nu > 0.0 && p.nu < 1.0, "nu", "a value in (0, 1)", p.nu)?;
    require_sizes("sizes", &p.sizes, 3)?;
    require(p.decay >= 0.0 && (p.decay - 0.5).abs() > 0.05, "decay", "β ≥ 0 away from the threshold 1/2", p.decay)?;
    require(p.amplitude != 0.0, "amplitude", "a nonzero perturbation", p.amplitude)?;
    require(
        !p.t_grid.is_empty() && p.t_grid.iter().all(|&t| t > 0.0),
        "t_grid",
        "positive times",
        format!("{:?}", p.t_grid),
    )?;
    let (nu, a, beta) = (p.nu, p.amplitude, p.decay);
    let perturb = move |k: usize| a * ((k + 1) as f64).powf(-beta);
    let r = move |n: usize| Ok(Operator::scalar(n, c(nu, 0.0)));
    let flow = move |shift: bool| {
        move |t: f64, n: usize| {
            let d: Vec<_> = (0..n)
                .map(|k| {
                    let w = k as f64 + if shift { perturb(k) } else { 0.0 };
                    c(0.0, t * w).exp()
                })
                .collect();
            Ok(Operator::from_diagonal(&d))
        }
    };
    let reports = conjugacy_criterion(&r, &flow(false), &flow(true), &p.t_grid, &p.sizes).map_err(module(cfg.kind))?;
    let expected = if beta > 0.5 { Verdict::Converges } else { Verdict::Diverges };

    let mut report = ExperimentReport::new(cfg, &["t", "size", "hs_value", "closed_form", "verdict_code"]);
    let mut dev = 0.0_f64;
    let mut all_match = true;
    for (t, rep) in &reports {
        for (&n, &v) in rep.sizes.iter().zip(&rep.hs_values) {
            let sum: f64 = (0..n).map(|k| (c(0.0, t * perturb(k)).exp() - c(1.0, 0.0)).norm_sqr()).sum();
            let exact = (nu * (1.0 - nu) * sum).sqrt();
            dev = dev.max((v - exact).abs() / exact.max(1.0));
            report.row(&[*t, n as f64, v, exact, verdict_code(rep.verdict)]);
        }
        all_match &= rep.verdict == expected;
        if let Some(fit) = rep.fit {
            report.fit(&format!("exponent_t{t}"), fit);
        }
    }
    report.verdict(
        "conjugacy criterion",
        12,
        dev <= 1e-12 && all_match,
        format!(
            "closed form to {dev:.1e}; verdicts {:?}, expected {} for β = {beta}",
            reports.iter().map(|(_, r)| verdict_name(r.verdict)).collect::<Vec<_>>(),
            verdict_name(expected)
        ),
    );
    Ok(report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ExtensionParams {
    sizes: Vec<usize>,
    families: Option<Vec<String>>,
}

impl Default for ExtensionParams {
    fn default() -> Self {
        Self {
            sizes: vec![4, 8, 16, 32],
            families: None,
        }
    }
}

fn extension(cfg: &ExperimentConfig) -> Outcome {
    let p: ExtensionParams = cfg.params()?;
    require_sizes("sizes", &p.sizes, 3)?;
    let stock = extension_families();
    let names: Vec<&str> = stock.iter().map(|f| f.name).collect();
    let chosen: Vec<usize> = match &p.families {
        None => (0..stock.len()).collect(),
        Some(list) => list
            .iter()
            .map(|want| {
                names
                    .iter()
                    .position(|n| n == want)
                    .ok_or_else(|| field_error("families", &format!("names from {names:?}"), want))
            })
            .collect::<Result<_, _>>()?,
    };
    let err = module(cfg.kind);
    let mut report = ExperimentReport::new(cfg, &["family", "size", "extension", "araki"]);
    let mut notes = Vec::new();
    let mut agree = 0;
    for &i in &chosen {
        let fam = &stock[i];
        let ext = extension_criterion(&*fam.rp, &*fam.vp, &*fam.wp, &p.sizes).map_err(&err)?;
        let ara = araki_report(&*fam.rp, &*fam.vp, &*fam.wp, &p.sizes).map_err(&err)?;
        for (k, &n) in p.sizes.iter().enumerate() {
            report.row(&[i as f64, n as f64, ext.hs_values[k], ara.hs_values[k]]);
        }
        if ext.verdict == ara.verdict && ext.verdict == fam.expected {
            agree += 1;
        } else {
            notes.push(format!("{}: {}/{}", fam.name, verdict_name(ext.verdict), verdict_name(ara.verdict)));
        }
    }
    report.extra("families", chosen.iter().map(|&i| names[i]).collect::<Vec<_>>());
    report.verdict(
        "extension vs Araki",
        6,
        agree == chosen.len(),
        format!("{agree}/{} families agree{}", chosen.len(), if notes.is_empty() { String::new() } else { format!(" ({})", notes.join(", ")) }),
    );
    Ok(report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ApproxParams {
    family: Option<PathBuf>,
    t_log2: [i32; 2],
    points: usize,
    tolerance: f64,
}

impl Default for ApproxParams {
    fn default() -> Self {
        Self {
            family: None,
            t_log2: [-12, -4],
            points: 9,
            tolerance: 0.1,
        }
    }
}

fn approx(cfg: &ExperimentConfig) -> Outcome {
    let p: ApproxParams = cfg.params()?;
    let fam = valid_family(cfg, p.family.as_ref())?;
    let grid = log2_grid("t_log2", p.t_log2, p.points)?;
    let err = module(cfg.kind);
    let basis = orthogonalize(&fam).map_err(&err)?;
    let mut report = ExperimentReport::new(cfg, &["t", "defect_hs", "estimate_sum"]);
    let (mut defect, mut estimates) = (Vec::new(), Vec::new());
    for &t in &grid {
        let d = defect_hs_norm(&basis, t).map_err(&err)?;
        let e = estimate_inequalities(&basis, t).map_err(&err)?.sum;
        defect.push((t, d));
        estimates.push((t, e));
        report.row(&[t, d, e]);
    }
    let at_zero = defect_hs_norm(&basis, 0.0).map_err(&err)?;
    let (s_defect, s_est) = (slope(&defect), slope(&estimates));
    report.fit("defect_slope", s_defect);
    report.fit("estimate_slope", s_est);
    report.verdict(
        "defect slope",
        8,
        (s_defect - 0.5).abs() <= p.tolerance && at_zero == 0.0,
        format!("slope {s_defect:.3} (0.5 ± {}), value at t = 0: {at_zero}", p.tolerance),
    );
    report.verdict(
        "summed estimates",
        9,
        (s_est - 1.0).abs() <= p.tolerance,
        format!("exponent {s_est:.3} (1.0 ± {})", p.tolerance),
    );
    Ok(report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BlaschkeParams {
    family: Option<PathBuf>,
    samples: usize,
    y_max: f64,
    radii: usize,
}

impl Default for BlaschkeParams {
    fn default() -> Self {
        Self {
            family: None,
            samples: 1000,
            y_max: 50.0,
            radii: 8,
        }
    }
}

fn blaschke(cfg: &ExperimentConfig) -> Outcome {
    let p: BlaschkeParams = cfg.params()?;
    let mut r = rng(cfg.require_seed()?);
    let fam = valid_family(cfg, p.family.as_ref())?;
    require(!fam.is_empty(), "family", "at least one λ", "an empty family")?;
    require(p.y_max > 0.0, "y_max", "a positive bound", p.y_max)?;
    require(p.radii >= 3, "radii", "at least 3", p.radii)?;
    let err = module(cfg.kind);
    let mut report = ExperimentReport::new(cfg, &["sample", "y", "modulus_deviation"]);
    let mut worst = 0.0_f64;
    for k in 0..p.samples {
        let y = uniform(&mut r, -p.y_max, p.y_max);
        let dev = (blaschke_eval(&fam, c(0.0, y)).map_err(&err)?.norm() - 1.0).abs();
        worst = worst.max(dev);
        report.row(&[k as f64, y, dev]);
    }
    let scale = 2.0 * fam.lambdas.iter().fold(0.0_f64, |m, l| m.max(l.norm()));
    let radii: Vec<f64> = (0..p.radii).map(|k| scale * 1e2 * 2.0_f64.powi(k as i32)).collect();
    let asym = blaschke_asymptotics(&fam, &radii).map_err(&err)?;
    let rel = ((asym.c3_fit - asym.c3_expected) / asym.c3_expected).abs();
    report.fit("c3_fit", asym.c3_fit);
    report.fit("c3_expected", asym.c3_expected);
    report.verdict("unimodular on iℝ", 7, worst <= 1e-12, format!("max ||B(iy)| − 1| {worst:.1e} (≤ 1e-12)"));
    report.verdict("C3 = 2s", 7, rel <= 0.01, format!("fit {:.6} vs 2s = {:.6}, relative {rel:.1e} (≤ 1%)", asym.c3_fit, asym.c3_expected));
    Ok(report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Prop2Params {
    family: Option<PathBuf>,
    t: f64,
    delta_log2: [i32; 2],
    k_max: usize,
    tolerance: f64,
}

impl Default for Prop2Params {
    fn default() -> Self {
        Self {
            family: None,
            t: 1.0,
            delta_log2: [-10, -3],
            k_max: 64,
            tolerance: 0.15,
        }
    }
}

fn prop2(cfg: &ExperimentConfig) -> Outcome {
    let p: Prop2Params = cfg.params()?;
    let fam = valid_family(cfg, p.family.as_ref())?;
    let span = (p.delta_log2[1] - p.delta_log2[0]).max(0) as usize + 1;
    let grid = log2_grid("delta_log2", p.delta_log2, span)?;
    let err = module(cfg.kind);
    let mut report = ExperimentReport::new(cfg, &["delta", "split_estimate", "windowed", "tail_bound_sq"]);
    let mut pts = Vec::new();
    let mut below = true;
    for &delta in &grid {
        let rep = prop2_defect(&fam, p.t, delta, p.k_max).map_err(&err)?;
        below &= rep.windowed <= rep.value;
        pts.push((delta, rep.value));
        report.row(&[delta, rep.value, rep.windowed, rep.tail_bound_sq]);
    }
    let s = slope(&pts);
    report.fit("slope", s);

    // ⟨Θf, f⟩ for the first few elements, closed form against both readings.
    let (mut corrected, mut literal) = (0.0_f64, 0.0_f64);
    for e in prop2_elements(p.t, grid[grid.len() - 1], 8).map_err(&err)?.into_iter().filter(|e| e.k.abs() <= 2) {
        for which in [1, 2] {
            let pairing = e.laplace_pairing(&fam, which).map_err(&err)?;
            let scale = e.part(which).norm_sq();
            corrected = corrected.max((pairing.computed - pairing.predicted).norm() / scale);
            literal = literal.max((pairing.computed - pairing.literal).norm() / scale);
        }
    }
    report.fit("pairing_vs_inverse_blaschke", corrected);
    report.fit("pairing_vs_blaschke", literal);
    report.verdict(
        "compression defect slope",
        10,
        (s - 0.5).abs() <= p.tolerance && below,
        format!("slope {s:.3} (0.5 ± {}), windowed norm below the split estimate: {below}", p.tolerance),
    );
    report.verdict(
        "pairing ⟨Θf, f⟩ = ‖f‖²/B(μ)",
        10,
        corrected <= 1e-8,
        format!("relative deviation {corrected:.1e} (≤ 1e-8); the reading B(μ)‖f‖² is off by {literal:.2e}"),
    );
    Ok(report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DilationParams {
    family: Option<PathBuf>,
    horizon: f64,
    cells: Vec<usize>,
    t: f64,
    t_grid: Vec<f64>,
    tolerance: f64,
}

impl Default for DilationParams {
    fn default() -> Self {
        Self {
            family: None,
            horizon: 2.0,
            cells: vec![64, 128, 256, 512],
            t: 0.25,
            t_grid: vec![0.125, 0.25],
            tolerance: 1e-8,
        }
    }
}

fn dilation_check(cfg: &ExperimentConfig) -> Outcome {
    let p: DilationParams = cfg.params()?;
    let fam = valid_family(cfg, p.family.as_ref())?;
    require_sizes("cells", &p.cells, 3)?;
    require(p.horizon > 0.0, "horizon", "a positive horizon", p.horizon)?;
    let t_max = p.t_grid.iter().cloned().fold(p.t, f64::max);
    let err = module(cfg.kind);
    let models = p
        .cells
        .iter()
        .map(|&n| ShiftModel::new(&fam, p.horizon, p.horizon / n as f64))
        .collect::<Result<Vec<_>, _>>()
        .map_err(&err)?;

    let mut report = ExperimentReport::new(
        cfg,
        &["cells", "t", "shift_unitarity", "approximant_unitarity", "shift_compression", "approximant_compression", "bulk_deviation"],
    );
    let mut worst = 0.0_f64;
    for model in &models {
        let u = unitary_dilation(model, DilationKind::Shift, p.t).map_err(&err)?;
        let v = unitary_dilation(model, DilationKind::Approximant, p.t).map_err(&err)?;
        let row = [
            u.unitarity_residual(),
            v.unitarity_residual(),
            hs_norm(&(&u.compression() - &model.grid_shift(p.t).map_err(&err)?)),
            hs_norm(&(&v.compression() - &model.grid_approximant(p.t).map_err(&err)?)),
            model.bulk_embedding(p.t).map_err(&err)?.deviation(&u.matrix(), &v.matrix()).map_err(&err)?,
        ];
        worst = row.iter().cloned().fold(worst, f64::max);
        report.row(&[model.cells as f64, p.t, row[0], row[1], row[2], row[3], row[4]]);
    }

    let dims: Vec<usize> = models.iter().map(|m| 2 * m.cells).collect();
    let pick = |dim: usize| models.iter().find(|m| 2 * m.cells == dim).expect("configured grid");
    let ud = |t: f64, d: usize| Ok(unitary_dilation(pick(d), DilationKind::Shift, t)?.matrix());
    let vd = |t: f64, d: usize| Ok(unitary_dilation(pick(d), DilationKind::Approximant, t)?.matrix());
    let emb = |d: usize| pick(d).bulk_embedding(t_max);
    let approx = approximation_check(&ud, &vd, &emb, &p.t_grid, &dims, p.tolerance).map_err(&err)?;
    report.extra("approximation", &approx);
    report.verdict(
        "dilations unitary, compressions, U′V′* on K′⊖K",
        11,
        worst <= p.tolerance,
        format!("largest residual {worst:.1e} (≤ {:.0e})", p.tolerance),
    );
    report.verdict(
        "approximation check",
        11,
        approx.approximates,
        if approx.approximates { "pass" } else { "fail" },
    );
    Ok(report)
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct PipelineParams {
    family: Option<PathBuf>,
    nu: Option<f64>,
    horizon: Option<f64>,
    cells: Option<Vec<usize>>,
    t_grid: Option<Vec<f64>>,
    defect_log2: Option<[i32; 2]>,
    defect_points: Option<usize>,
    slope_tolerance: Option<f64>,
}

fn pipeline(cfg: &ExperimentConfig) -> Outcome {
    let p: PipelineParams = cfg.params()?;
    let d = PipelineConfig::default();
    let pc = PipelineConfig {
        family: cfg.family(p.family.as_ref())?,
        nu: p.nu.unwrap_or(d.nu),
        horizon: p.horizon.unwrap_or(d.horizon),
        cells: p.cells.unwrap_or(d.cells),
        t_grid: p.t_grid.unwrap_or(d.t_grid),
        defect_log2: p.defect_log2.map(|[a, b]| (a, b)).unwrap_or(d.defect_log2),
        defect_points: p.defect_points.unwrap_or(d.defect_points),
        slope_tolerance: p.slope_tolerance.unwrap_or(d.slope_tolerance),
    };
    require(pc.nu > 0.0 && pc.nu <= 0.5, "nu", "a value in (0, 1/2]", pc.nu)?;
    require_sizes("cells", &pc.cells, 3)?;
    let rep = run_pipeline(&pc).map_err(module(cfg.kind))?;
    let mut report = ExperimentReport::new(cfg, &["stage", "metric", "value"]);
    for (i, s) in rep.stages.iter().enumerate() {
        for (j, (_, v)) in s.metrics.iter().enumerate() {
            report.row(&[i as f64, j as f64, *v]);
        }
        report.verdict(s.stage, 12, s.passed, s.detail.clone());
    }
    report.fit("lambda", rep.lambda);
    report.extra("regime", &rep.regime);
    report.extra("stages", &rep.stages);
    report.verdict(
        "hypotheses verified at scale",
        12,
        rep.passed(),
        format!("regime {}, {} stages", rep.regime, rep.stages.len()),
    );
    Ok(report)
}
