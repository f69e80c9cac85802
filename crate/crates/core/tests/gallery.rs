use refinet::gallery::{self, hilbert_rp_chain, planar_similarity, polygonal_generator, EdgeTransforms, GeneratorChain};
use refinet::instance::{Instance, Mode};
use refinet::loop_controller::LoopConfig;
use refinet::{Error, Rational};

const CAP: f64 = 1e7;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn koch_edge_images() {
    let g = gallery::koch::<f64>().unwrap();
    assert_eq!(g.m(), 4);
    let e = [1.0, 0.0];
    assert!(close(&g.matrices[1].mul_vec(&e), &[1.0 / 6.0, 3f64.sqrt() / 6.0], 1e-15));
    let stage1 = g.vertex_list(1, CAP).unwrap();
    assert!(close(&stage1[2], &[0.5, 3f64.sqrt() / 6.0], 1e-15));
}

#[test]
fn levy_mask_fixes_e1() {
    let g = gallery::levy::<f64>().unwrap();
    let sum = g.op.sum();
    assert!(close(&sum.mul_vec(&[1.0, 0.0]), &[1.0, 0.0], 1e-15));
    let h = gallery::heighway::<f64>().unwrap();
    assert!(close(&h.matrices[1].mul_vec(&[1.0, 0.0]), &[0.5, -0.5], 1e-15));
    assert_ne!(h.matrices[1], g.matrices[1]);
}

#[test]
fn heighway_segments() {
    let g = gallery::heighway::<f64>().unwrap();
    let pts = g.vertex_list(10, CAP).unwrap();
    assert_eq!(pts.len(), 1025);
    for w in pts.windows(2) {
        let d = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
        assert!((norm(&d) - 2f64.powi(-5)).abs() <= 1e-12);
    }
}

#[test]
fn hilbert_type_first_edge() {
    let g = gallery::hilbert_type::<f64>().unwrap();
    assert_eq!(g.matrices[0].mul_vec(&[1.0, 0.0]), vec![0.0, 0.5]);
    let exact = gallery::hilbert_type::<Rational>().unwrap();
    let pts = exact.vertex_list(3, CAP).unwrap();
    assert_eq!(pts.len(), 65);
}

#[test]
fn generator_validation() {
    let bad = GeneratorChain {
        vertices: vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.9, 0.0]],
        edges: EdgeTransforms::Planar(vec![(0.0, false), (0.0, false)]),
    };
    assert!(matches!(polygonal_generator(&bad), Err(Error::Generator(_))));
    let wrong_edge = GeneratorChain {
        vertices: vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]],
        edges: EdgeTransforms::Matrices(vec![planar_similarity(0.5, 0.3, false), planar_similarity(0.5, 0.0, false)]),
    };
    assert!(matches!(polygonal_generator(&wrong_edge), Err(Error::Generator(_))));
    let straight = GeneratorChain {
        vertices: vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]],
        edges: EdgeTransforms::Planar(vec![(0.0, false), (0.0, true)]),
    };
    assert!(polygonal_generator(&straight).is_ok());
}

#[test]
fn gosper_rule() {
    let g = gallery::gosper_system::<f64>().unwrap();
    for sum in g.mask_sums() {
        assert!(close(&sum, &[1.0, 0.0], 1e-12));
    }
    assert_eq!(g.transitions[0], vec![0, 1, 1, 0, 0, 0, 1]);
    let lists = g.vertex_lists(1, CAP).unwrap();
    for list in &lists {
        assert_eq!(list.len(), 8);
        for w in list.windows(2) {
            let d = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
            assert!((norm(&d) - 1.0 / 7f64.sqrt()).abs() <= 1e-12);
        }
        assert!(close(list.last().unwrap(), &[1.0, 0.0], 1e-12));
    }
}

#[test]
fn hilbert_connector_endpoints() {
    let h = gallery::hilbert_connector::<f64>().unwrap();
    assert_eq!(h.rule.m(), 7);
    assert_eq!(h.endpoints(0).0, vec![0.5, 0.5]);
    assert_eq!(h.endpoints(1).0, vec![0.25, 0.25]);
    let (ts, pts) = h.vertex_list(1, CAP).unwrap();
    assert_eq!(ts.len(), pts.len());
    assert_eq!(pts[0], vec![0.25, 0.25]);
}

#[test]
fn morton_line() {
    let m = gallery::morton::<f64>(1).unwrap();
    assert_eq!(m.rule.m(), 3);
    assert_eq!(m.endpoints(0), (vec![0.5], vec![0.5]));
    let (_, pts) = m.vertex_list(2, CAP).unwrap();
    assert_eq!(pts[0], vec![0.125]);
    assert_eq!(*pts.last().unwrap(), vec![0.875]);
    let two = gallery::morton::<f64>(2).unwrap();
    assert_eq!(two.rule.u, vec![vec![0.0, 0.0], vec![0.0, 0.5], vec![0.5, 0.0], vec![0.5, 0.5]]);
    assert!(gallery::morton::<f64>(0).is_err());
}

#[test]
fn hilbert_rp_chain_shapes() {
    let g = gallery::hilbert_rp::<f64>(2).unwrap();
    assert_eq!(g.matrices, gallery::hilbert_type::<f64>().unwrap().matrices);
    let (pts, us) = hilbert_rp_chain(3).unwrap();
    assert_eq!(pts.len(), 9);
    assert_eq!(us.len(), 8);
    assert_eq!(pts[0], vec![0, 0, 0]);
    assert_eq!(pts[8], vec![2, 0, 0]);
    for u in &us {
        for row in u {
            assert_eq!(row.iter().filter(|v| **v != 0).count(), 1);
            assert!(row.iter().all(|v| v.abs() <= 1));
        }
    }
    for w in pts.windows(2) {
        let steps: i64 = w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).sum();
        assert_eq!(steps, 1);
    }
    assert!(matches!(gallery::hilbert_rp::<f64>(1), Err(Error::Generator(_))));
    assert!(matches!(gallery::hilbert_rp::<f64>(5), Err(Error::Generator(_))));
}

#[test]
fn every_example_compiles_at_stage_one() {
    for name in gallery::GALLERY {
        let inst = Instance::<f64>::example(name, None).unwrap();
        let mode = inst.default_mode();
        let c = inst.compile(1, mode, &LoopConfig::new(inst.m(), 1)).unwrap();
        assert_eq!(c.net.output_dim(), inst.output_dim(), "{name}");
        let oracle = inst.oracle(1, mode, CAP).unwrap();
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            assert!(close(&c.net.eval(&[t]).unwrap(), &oracle.eval(&t), 1e-8), "{name} at {t}");
        }
    }
    let koch = Instance::<f64>::example("koch", None).unwrap();
    assert!(matches!(koch.compile(1, Mode::Homogeneous, &LoopConfig::new(4, 1)), Err(Error::Precondition(_))));
    assert!(matches!(Instance::<f64>::example("peano", None), Err(Error::Parse(_))));
}
