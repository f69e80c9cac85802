use proptest::prelude::*;
use refinet::cpwl::{ScalarCpwl, SpecialHat};
use refinet::loop_controller::{
    build_controller_field, build_readouts, build_selectors, controller_orbit, embed, min_readout_scalar, FieldLowering,
    LoopConfig, LoopController,
};
use refinet::refinement::residual_iterate;
use refinet::{Error, Rational, Scalar};

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn embedding_examples() {
    assert_eq!(embed(&0.0).unwrap(), [0.0, 0.0]);
    assert_eq!(embed(&1.0).unwrap(), [0.0, 0.0]);
    assert_eq!(embed(&(1.0 / 3.0)).unwrap(), [1.0, 1.0]);
    assert_eq!(embed(&0.5).unwrap(), [1.0, 0.5]);
    assert!(matches!(embed(&1.2), Err(Error::Domain(_))));
}

#[test]
fn config_validation() {
    let cfg = LoopConfig::<f64>::new(3, 2);
    assert!(cfg.validate().is_ok());
    assert_eq!(cfg.delta_n(), 0.5 * 0.25 / 27.0);
    assert!(cfg.in_transition(&(1.0 / 3.0)));
    assert!(!cfg.in_transition(&0.5));
    assert!(LoopConfig::<f64> { epsilon: 0.3, ..cfg.clone() }.validate().is_err());
    assert!(LoopConfig::<f64>::new(1, 2).validate().is_err());
    assert!(LoopConfig::<f64>::new(2, 0).validate().is_err());
}

#[test]
fn controller_field_examples() {
    let f = build_controller_field::<f64>(2).unwrap();
    assert!(close(&f.eval(&embed(&0.25).unwrap()).unwrap(), &[1.0, 0.5], 1e-15));
    for m in 2..6 {
        let f = build_controller_field::<f64>(m).unwrap();
        assert!(close(&f.eval(&[0.0, 0.0]).unwrap(), &[0.0, 0.0], 1e-15));
    }
    let f = build_controller_field::<f64>(3).unwrap();
    let s = 0.01;
    let want = embed(&(3.0 * s)).unwrap();
    assert!(close(&f.eval(&embed(&(1.0 / 3.0 + s)).unwrap()).unwrap(), &want, 1e-12));
}

#[test]
fn orbit_of_seam_and_of_a_third() {
    let lc = LoopController::<f64>::build(&LoopConfig::new(2, 3)).unwrap();
    for z in controller_orbit(&0.0, 6, &lc.controller_net).unwrap() {
        assert_eq!(z, [0.0, 0.0]);
    }
    let exact = LoopController::<Rational>::build(&LoopConfig::new(2, 3)).unwrap();
    let third = Rational::new(1.into(), 3.into());
    let orbit = controller_orbit(&third, 6, &exact.controller_net).unwrap();
    let (a, b) = (embed(&third).unwrap(), embed(&Rational::new(2.into(), 3.into())).unwrap());
    for (j, z) in orbit.iter().enumerate() {
        assert_eq!(*z, if j % 2 == 0 { a.clone() } else { b.clone() });
    }
}

#[test]
fn float_orbit_tracks_residuals() {
    let lc = LoopController::<f64>::build(&LoopConfig::new(3, 3)).unwrap();
    for k in 0..200 {
        let x = (k as f64 * 0.6180339887).fract();
        let orbit = controller_orbit(&x, 10, &lc.controller_net).unwrap();
        let xr = Rational::from_float(x).unwrap();
        let truth = residual_iterate(&xr, 3, 10).unwrap();
        let target = embed(&truth.residuals[10]).unwrap();
        let target = [target[0].to_f64(), target[1].to_f64()];
        assert!(close(&orbit[10], &target, 1e-6));
    }
}

#[test]
fn readout_examples() {
    let r = build_readouts(&0.1f64).unwrap();
    assert_eq!(r.r_minus.eval(&1.0), 0.0);
    assert_eq!(r.r_minus.eval(&0.0), 0.0);
    assert_eq!(r.r_plus.eval(&0.0), 1.0);
    assert_eq!(r.r_plus.eval(&1.0), 1.0);
    assert!((r.r_minus.eval(&0.5) - 0.5).abs() < 1e-15);
}

#[test]
fn readout_identity_needs_small_epsilon() {
    let h = SpecialHat::new(ScalarCpwl::hat(0.3, 0.5, 0.7).unwrap(), 0.25).unwrap();
    assert!(min_readout_scalar(&h, &0.2, 10_000).unwrap() <= 1e-12);
    assert!(matches!(min_readout_scalar(&h, &0.25, 100), Err(Error::Precondition(_))));
}

#[test]
fn selector_examples() {
    let cfg = LoopConfig::<f64>::new(3, 2);
    let s = build_selectors(&cfg).unwrap();
    assert_eq!(s.eval(&0.5), vec![0.0, 1.0, 0.0]);
    assert_eq!(s.eval(&(1.0 / 3.0)), vec![1.0, 0.0, 0.0]);
    assert_eq!(s.eval(&0.0), vec![0.0, 0.0, 1.0]);
    assert_eq!(s.eval(&1.0), vec![0.0, 0.0, 1.0]);
    let mid = 1.0 / 3.0 + cfg.delta_n() / 2.0;
    assert!(close(&s.eval(&mid), &[0.5, 0.5, 0.0], 1e-12));
}

#[test]
fn exact_selectors_are_exact() {
    let cfg = LoopConfig::<Rational>::new(3, 2);
    let lc = LoopController::build(&cfg).unwrap();
    for k in 0..=60 {
        let t = Rational::new(k.into(), 60.into());
        let chi = lc.selector_net.eval(&embed(&t).unwrap()).unwrap();
        assert_eq!(chi, lc.selectors.eval(&t));
    }
}

#[test]
fn nodal_lowering_matches_lattice() {
    let lattice = LoopController::<f64>::build(&LoopConfig::new(3, 2)).unwrap();
    let nodal =
        LoopController::<f64>::build(&LoopConfig { lowering: FieldLowering::Nodal, ..LoopConfig::new(3, 2) }).unwrap();
    for k in 0..=500 {
        let z = embed(&(k as f64 / 500.0)).unwrap();
        assert!(close(&lattice.controller_net.eval(&z).unwrap(), &nodal.controller_net.eval(&z).unwrap(), 1e-10));
        assert!(close(&lattice.selector_net.eval(&z).unwrap(), &nodal.selector_net.eval(&z).unwrap(), 1e-10));
    }
}

proptest! {
    #[test]
    fn selectors_partition_unity(t in 0.0f64..=1.0, m in 2usize..6) {
        let cfg = LoopConfig::<f64>::new(m, 2);
        let s = build_selectors(&cfg).unwrap();
        let v = s.eval(&t);
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(v.iter().all(|x| (-1e-15..=1.0 + 1e-15).contains(x)));
        if !cfg.in_transition(&t) {
            let q = ((m as f64 * t).floor() as usize).min(m - 1);
            for (i, x) in v.iter().enumerate() {
                prop_assert_eq!(*x, if i == q { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn seam_values_agree(m in 2usize..8) {
        let f = build_controller_field::<f64>(m).unwrap();
        let a = f.eval(&embed(&0.0).unwrap()).unwrap();
        let b = f.eval(&embed(&1.0).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}
