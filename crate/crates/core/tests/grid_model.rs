use carshift::hardyshift::{
    unitary_dilation, wold_decompose, DilationKind, ExponentialFamily, ShiftModel,
};
use carshift::opalg::c;
use carshift::pipeline::{run_pipeline, PipelineConfig};
use carshift::{hs_norm, Operator};

#[test]
fn wold_of_grid_approximant_recovers_k1() {
    let fam = ExponentialFamily::with_auto_radius(vec![c(-1.0, 0.0), c(-2.0, 0.5)]);
    let model = ShiftModel::new(&fam, 2.0, 1.0 / 32.0).unwrap();
    let t = 0.25;
    let w = wold_decompose(&model.grid_approximant(t).unwrap(), 64).unwrap();
    let k1 = &model.k1 * &model.k1.adjoint();
    assert!(hs_norm(&(&w.unitary - &k1)) < 1e-8);
    assert!(w.unitary_residual < 1e-8);
    assert_eq!(w.deficiency, 8);
}

#[test]
fn empty_family_dilations_coincide() {
    let model = ShiftModel::new(&ExponentialFamily::empty(), 1.0, 1.0 / 16.0).unwrap();
    let u = unitary_dilation(&model, DilationKind::Shift, 0.25).unwrap().matrix();
    let v = unitary_dilation(&model, DilationKind::Approximant, 0.25).unwrap().matrix();
    assert!(hs_norm(&(&u - &v)) < 1e-10);
    assert!(hs_norm(&(&unitary_dilation(&model, DilationKind::Shift, 1.0).unwrap().matrix() - &Operator::identity(32))) > 1.0);
}

#[test]
fn trace_regime_pipeline() {
    let cfg = PipelineConfig {
        nu: 0.5,
        family: ExponentialFamily::with_auto_radius(vec![c(-1.0, 0.0), c(-2.0, 0.5)]),
        ..PipelineConfig::default()
    };
    let rep = run_pipeline(&cfg).unwrap();
    assert_eq!(rep.regime, "II_1");
    assert!(rep.passed(), "{:?}", rep.stages);
}
