use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refinet::cpwl::{CpwlCurve, ScalarCpwl};
use refinet::gallery::{self, straight_anchor};
use refinet::loop_controller::LoopConfig;
use refinet::matrix::Matrix;
use refinet::reductions::{
    anchor_mismatch, compile_affine, compile_anchored, direct_stage_iterate, expand_stage_iterate, job_oracles,
    FiniteStateSystem, ForcingSchedule, JobSource, LambdaRule,
};
use refinet::refinement::RefinementOp;
use refinet::Error;

const CAP: f64 = 1e7;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

fn scalar_curve(points: &[(f64, f64)], window: usize) -> CpwlCurve<f64> {
    CpwlCurve::new(vec![ScalarCpwl::from_f64(points).unwrap()], window).unwrap()
}

fn random_bump(rng: &mut ChaCha8Rng, window: f64) -> CpwlCurve<f64> {
    let mut ts: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..window - 0.05)).collect();
    ts.sort_by(f64::total_cmp);
    let mut pts = vec![(0.0, 0.0)];
    pts.extend(ts.iter().map(|&t| (t, rng.gen_range(-1.0..1.0))));
    pts.push((window, 0.0));
    scalar_curve(&pts, window as usize)
}

fn max_gap(a: &CpwlCurve<f64>, b: &CpwlCurve<f64>, ts: &[f64]) -> f64 {
    ts.iter()
        .flat_map(|t| a.eval(t).into_iter().zip(b.eval(t)).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn halving_op() -> RefinementOp<f64> {
    RefinementOp::new(2, 1, 1, vec![(0, Matrix::scalar(0.5)), (1, Matrix::scalar(-0.5))]).unwrap()
}

#[test]
fn single_stage_jobs() {
    let op = halving_op();
    let gamma = scalar_curve(&[(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)], 1);
    let b = scalar_curve(&[(0.0, 0.0), (0.25, 0.3), (1.0, 0.0)], 1);
    let jobs = expand_stage_iterate(&op, &gamma, &ForcingSchedule::Constant(b.clone()), 1).unwrap();
    assert_eq!(jobs.len(), 2);
    assert_eq!((jobs[0].stage, &jobs[0].source), (1, &JobSource::Initial));
    assert_eq!((jobs[1].stage, &jobs[1].source), (0, &JobSource::Forcing(0)));
    assert_eq!(jobs[1].curve, b);
    let jobs = expand_stage_iterate(&op, &gamma, &ForcingSchedule::zero(1, 1), 5).unwrap();
    assert_eq!(jobs.len(), 1);
}

#[test]
fn schedule_checks() {
    let op = halving_op();
    let gamma = CpwlCurve::zero(1, 1);
    let short = ForcingSchedule::Explicit(vec![CpwlCurve::zero(1, 1)]);
    assert!(matches!(expand_stage_iterate(&op, &gamma, &short, 2), Err(Error::Precondition(_))));
    let tail = ForcingSchedule::Constant(scalar_curve(&[(0.0, 0.0), (1.0, 1.0)], 1));
    assert!(matches!(expand_stage_iterate(&op, &gamma, &tail, 1), Err(Error::NonCompact(_))));
    let template = ForcingSchedule::Template {
        curves: vec![CpwlCurve::zero(1, 1), scalar_curve(&[(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)], 1)],
        lambdas: vec![LambdaRule::Geometric { scale: 3.0, ratio: 0.5 }],
    };
    assert_eq!(template.stage(2).unwrap().eval(&0.5), vec![0.75]);
    assert_eq!(template.len(), None);
}

#[test]
fn job_sum_matches_direct_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mask = (0..=2).map(|j| (j, Matrix::scalar(rng.gen_range(-0.6..0.6)))).collect();
    let op = RefinementOp::new(2, 1, 2, mask).unwrap();
    let gamma = random_bump(&mut rng, 2.0);
    let schedule = ForcingSchedule::Explicit((0..4).map(|_| random_bump(&mut rng, 2.0)).collect());
    let n = 4;
    let parts = job_oracles(&op, &expand_stage_iterate(&op, &gamma, &schedule, n).unwrap(), CAP).unwrap();
    let direct = direct_stage_iterate(&op, &gamma, &schedule, n).unwrap();
    for t in grid(-1.0, 3.0, 4000) {
        let sum: f64 = parts.iter().map(|c| c.eval(&t)[0]).sum();
        assert!((sum - direct.eval(&t)[0]).abs() <= 1e-10, "t = {t}");
    }
}

#[test]
fn affine_compile_with_constant_forcing() {
    let op = halving_op();
    let gamma = scalar_curve(&[(0.0, 0.0), (0.4, 1.0), (1.0, 0.0)], 1);
    let schedule = ForcingSchedule::Constant(scalar_curve(&[(0.0, 0.0), (0.7, -0.5), (1.0, 0.0)], 1));
    let c = compile_affine(&op, &gamma, &schedule, 3, &LoopConfig::new(2, 3)).unwrap();
    assert_eq!(c.builder, "affine");
    let direct = direct_stage_iterate(&op, &gamma, &schedule, 3).unwrap();
    for t in grid(-0.5, 1.5, 5000) {
        assert!((c.net.eval(&[t]).unwrap()[0] - direct.eval(&t)[0]).abs() <= 1e-7, "t = {t}");
    }
}

#[test]
fn mismatch_compactness() {
    let identity = RefinementOp::new(2, 1, 1, vec![(0, Matrix::scalar(0.5)), (1, Matrix::scalar(0.5))]).unwrap();
    let step = scalar_curve(&[(0.0, 0.0), (1.0, 1.0)], 1);
    let (_, compact) = anchor_mismatch(&identity, &CpwlCurve::zero(1, 1), &step).unwrap();
    assert!(compact);
    let koch = gallery::koch::<f64>().unwrap();
    let (e, compact) = anchor_mismatch(&koch.op, &CpwlCurve::zero(2, 1), &straight_anchor(2)).unwrap();
    assert!(compact);
    assert!(e.is_compact());
    let doubling = RefinementOp::new(2, 1, 1, vec![(0, Matrix::scalar(1.0)), (1, Matrix::scalar(1.0))]).unwrap();
    let (_, compact) = anchor_mismatch(&doubling, &CpwlCurve::zero(1, 1), &step).unwrap();
    assert!(!compact);
    let zero = CpwlCurve::zero(1, 1);
    let err = compile_anchored(&doubling, &zero, &step, &zero, 2, &LoopConfig::new(2, 2)).unwrap_err();
    assert!(matches!(err, Error::NonCompactMismatch(_)));
}

#[test]
fn anchored_with_zero_defect_is_the_anchor() {
    let koch = gallery::koch::<f64>().unwrap();
    let zero = CpwlCurve::zero(2, 1);
    let anchor = straight_anchor::<f64>(2);
    let out = compile_anchored(&koch.op, &zero, &anchor, &zero, 0, &LoopConfig::new(4, 1)).unwrap();
    assert_eq!(out.assembled.builder, "anchored");
    for t in grid(-0.5, 1.5, 400) {
        let got = out.assembled.net.eval(&[t]).unwrap();
        let want = anchor.eval(&t);
        assert!(got.iter().zip(&want).all(|(a, b)| (a - b).abs() <= 1e-12));
    }
}

#[test]
fn anchored_identity_against_direct_iteration() {
    let op = halving_op();
    let anchor = scalar_curve(&[(0.0, 0.0), (1.0, 0.0)], 1);
    let b = scalar_curve(&[(0.0, 0.0), (0.3, 0.4), (0.6, -0.2), (1.0, 0.0)], 1);
    let eta = scalar_curve(&[(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)], 1);
    for n in 0..=3 {
        let out = compile_anchored(&op, &b, &anchor, &eta, n, &LoopConfig::new(2, n.max(1))).unwrap();
        let direct = direct_stage_iterate(&op, &anchor.add(&eta).unwrap(), &ForcingSchedule::Constant(b.clone()), n).unwrap();
        let pts = grid(-0.5, 1.5, 2000);
        let net_gap = pts
            .iter()
            .map(|t| (out.assembled.net.eval(&[*t]).unwrap()[0] - direct.eval(t)[0]).abs())
            .fold(0.0, f64::max);
        assert!(net_gap <= 1e-7, "n = {n}: {net_gap:e}");
    }
    let slope = scalar_curve(&[(0.0, 0.0), (1.0, 1.0)], 1);
    let fixed = RefinementOp::new(2, 1, 1, vec![(0, Matrix::scalar(0.5)), (1, Matrix::scalar(0.5))]).unwrap();
    let zero = CpwlCurve::zero(1, 1);
    let (e, _) = anchor_mismatch(&fixed, &zero, &slope).unwrap();
    let direct = direct_stage_iterate(&fixed, &slope.add(&eta).unwrap(), &ForcingSchedule::Constant(zero.clone()), 3).unwrap();
    let defect = direct_stage_iterate(&fixed, &eta, &ForcingSchedule::Constant(e), 3).unwrap();
    assert!(max_gap(&direct, &slope.add(&defect).unwrap(), &grid(-0.5, 1.5, 2000)) <= 1e-12);
}

#[test]
fn single_state_stacking_is_the_rule_itself() {
    let op = halving_op();
    let sys = FiniteStateSystem::deterministic(2, 1, vec![vec![0, 0]], vec![vec![Matrix::scalar(0.5), Matrix::scalar(-0.5)]])
        .unwrap();
    let (stacked, forcing) = sys.stack(1).unwrap();
    assert!(forcing.is_none());
    assert_eq!(stacked.mask(), op.mask());
    let gamma = scalar_curve(&[(0.0, 0.0), (0.3, 1.0), (1.0, 0.0)], 1);
    let via_states = sys.apply(std::slice::from_ref(&gamma)).unwrap();
    assert!(max_gap(&via_states[0], &op.apply(&gamma).unwrap(), &grid(-0.5, 1.5, 500)) <= 1e-15);
}

#[test]
fn deterministic_expansion_places_one_block_per_digit() {
    let g = gallery::gosper_system::<f64>().unwrap();
    for (j, blocks) in &g.system.masks {
        for (a, row) in blocks.iter().enumerate() {
            let filled: Vec<usize> = row.iter().enumerate().filter(|(_, b)| b.is_some()).map(|(b, _)| b).collect();
            assert_eq!(filled, vec![g.transitions[a][*j as usize]]);
        }
    }
    let (op, _) = g.system.stack(1).unwrap();
    let stacked = op.apply(&g.anchor().unwrap()).unwrap();
    let states = g.system.apply(&g.anchor().unwrap().unstack(2)).unwrap();
    let per_state = CpwlCurve::stack(&states).unwrap();
    assert!(max_gap(&stacked, &per_state, &grid(-0.25, 1.25, 700)) <= 1e-12);
    assert!(FiniteStateSystem::<f64>::deterministic(2, 1, vec![vec![0, 3]], vec![vec![Matrix::scalar(1.0); 2]]).is_err());
}
