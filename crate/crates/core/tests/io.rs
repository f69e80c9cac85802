use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refinet::compiler::compile_homogeneous;
use refinet::cpwl::{CpwlCurve, ScalarCpwl};
use refinet::io::{network_from_json, network_to_json, parse_rule_file, NetworkMeta};
use refinet::matrix::Matrix;
use refinet::network::{Affine, Layer, ReluNetwork};
use refinet::refinement::RefinementOp;
use refinet::reductions::ForcingSchedule;
use refinet::{Config, Error};

fn hat_net(n: usize) -> ReluNetwork<f64> {
    let op = RefinementOp::new(2, 1, 1, vec![(0, Matrix::scalar(1.0)), (1, Matrix::scalar(1.0))]).unwrap();
    let gamma = CpwlCurve::new(vec![ScalarCpwl::hat(0.25, 0.5, 0.75).unwrap()], 1).unwrap();
    compile_homogeneous(&op, &gamma, n, &Config::new(2, n)).unwrap().net
}

#[test]
fn network_round_trip_is_bit_exact() {
    let net = hat_net(3);
    let meta = NetworkMeta::new(net.stats(), "homogeneous", &[("n".into(), "3".into())]);
    let text = network_to_json(&net, &meta).unwrap();
    let (back, meta_back) = network_from_json(&text).unwrap();
    assert_eq!(back, net);
    assert_eq!(meta_back.builder, "homogeneous");
    assert_eq!(meta_back.depth, net.depth());
    assert_eq!(meta_back.params.get("n").map(String::as_str), Some("3"));
    for k in 0..=997 {
        let t = -0.5 + 2.0 * k as f64 / 997.0;
        assert_eq!(back.eval(&[t]).unwrap()[0].to_bits(), net.eval(&[t]).unwrap()[0].to_bits());
    }
}

#[test]
fn large_layers_are_stored_sparse() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<(usize, f64)>> = (0..300).map(|i| vec![(i, rng.gen::<f64>())]).collect();
    let wide = Affine::new(300, rows, vec![0.1; 300]).unwrap();
    let net = ReluNetwork::from_layers(300, vec![Layer::relu(wide.clone()), Layer::linear(wide)]).unwrap();
    let text = network_to_json(&net, &NetworkMeta::new(net.stats(), "test", &[])).unwrap();
    assert!(text.contains("weights_sparse"));
    let (back, _) = network_from_json(&text).unwrap();
    assert_eq!(back, net);
    let small = hat_net(1);
    let text = network_to_json(&small, &NetworkMeta::new(small.stats(), "test", &[])).unwrap();
    assert!(!text.contains("weights_sparse"));
}

#[test]
fn malformed_network_files_are_parse_errors() {
    assert!(matches!(network_from_json("{"), Err(Error::Parse(_))));
    let bad = r#"{"input_dim": 1, "layers": [{"weights": [[1.0, 2.0]], "bias": [0.0], "activation": "relu"}],
        "meta": {"width": 1, "depth": 1, "coeff_max": 2.0, "builder": "x"}}"#;
    assert!(matches!(network_from_json(bad), Err(Error::Parse(_))));
}

#[test]
fn parses_plain_rule_file() {
    let text = r#"{"M": 2, "p": 1, "L": 1,
        "mask": [{"j": 0, "A": [[1.0]]}, {"j": 1, "A": [[1.0]]}],
        "curve": [[0.25, 0.0], [0.5, 1.0], [0.75, 0.0]]}"#;
    let rule = parse_rule_file(text).unwrap();
    assert_eq!((rule.op.m(), rule.op.p(), rule.op.l()), (2, 1, 1));
    assert_eq!(rule.curve.unwrap().eval(&0.5), vec![1.0]);
    assert!(rule.forcing.is_none() && rule.system.is_none());
}

#[test]
fn parses_forcing_and_states() {
    let text = r#"{"M": 2, "p": 1, "L": 1,
        "mask": [{"j": 0, "A": [[0.5]]}],
        "forcing": [{"stage": "all", "curve": [[0.0, 0.0], [0.5, 0.25], [1.0, 0.0]]}]}"#;
    let rule = parse_rule_file(text).unwrap();
    match rule.forcing.unwrap() {
        ForcingSchedule::Constant(b) => assert_eq!(b.eval(&0.5), vec![0.25]),
        other => panic!("unexpected schedule {other:?}"),
    }
    let text = r#"{"M": 2, "p": 1, "L": 1,
        "forcing": [{"stage": 0, "curve": [[0.0, 0.0], [0.5, 1.0], [1.0, 0.0]]},
                    {"stage": 1, "curve": [[0.0, 0.0], [0.5, 2.0], [1.0, 0.0]]}]}"#;
    let rule = parse_rule_file(text).unwrap();
    let f = rule.forcing.unwrap();
    assert_eq!(f.len(), Some(2));
    assert_eq!(f.stage(1).unwrap().eval(&0.5), vec![2.0]);
    let text = r#"{"M": 2, "p": 1, "L": 1,
        "states": {"r": 2, "transitions": [[0, 1], [1, 0]], "C": [[[[0.5]], [[0.5]]], [[[0.5]], [[-0.5]]]]}}"#;
    let rule = parse_rule_file(text).unwrap();
    assert_eq!(rule.system.unwrap().r, 2);
}

#[test]
fn rejects_bad_rule_files() {
    assert!(matches!(parse_rule_file("not json"), Err(Error::Parse(_))));
    assert!(matches!(parse_rule_file(r#"{"M": 2, "p": 1}"#), Err(Error::Parse(_))));
    let wrong_shape = r#"{"M": 2, "p": 2, "L": 1, "mask": [{"j": 0, "A": [[1.0]]}]}"#;
    assert!(parse_rule_file(wrong_shape).is_err());
    let outside = r#"{"M": 2, "p": 1, "L": 1, "mask": [{"j": 5, "A": [[1.0]]}]}"#;
    assert!(parse_rule_file(outside).is_err());
}
