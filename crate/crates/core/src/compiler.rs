//! Compilation of homogeneous iterates `Vⁿγ` into ReLU networks.

use crate::cpwl::{decompose_atomic, CpwlCurve, SpecialHat};
use crate::error::{Error, Result};
use crate::loop_controller::{LoopConfig, LoopController};
use crate::lowering::{lower_curve, lower_scalar_cpwl};
use crate::network::{min_gadget, Affine, Layer, NetStats, ReluNetwork, Sign};
use crate::refinement::RefinementOp;
use crate::scalar::Scalar;

/// A compiled network together with how it was produced.
#[derive(Clone, Debug)]
pub struct CompiledIterate<T> {
    pub net: ReluNetwork<T>,
    pub n: usize,
    pub builder: String,
    pub params: Vec<(String, String)>,
    pub stats: NetStats,
}

impl<T: Scalar> CompiledIterate<T> {
    pub fn new(net: ReluNetwork<T>, n: usize, builder: &str, params: Vec<(String, String)>) -> Self {
        let stats = net.stats();
        Self { net, n, builder: builder.to_string(), params, stats }
    }
}

/// Saturation bound `a = max(Λ, 1)ⁿ · max h · 2` with `Λ = max_q ‖T_qᵀ‖∞`.
pub fn gadget_bound<T: Scalar>(op: &RefinementOp<T>, h: &SpecialHat<T>, n: usize) -> T {
    let lambda = op
        .block_transitions()
        .iter()
        .map(|t| t.matrix.transpose().inf_norm())
        .fold(T::zero(), T::max_of);
    let a = T::max_of(lambda, T::one()).powi(n as u32) * h.max_value() * T::int(2);
    if a.is_positive() {
        a
    } else {
        T::one()
    }
}

/// `Π_a(λ, y) = −ReLU(λa − y) − ReLU((1 − λ)a − ReLU(−y)) + a` on inputs `(λ, y₁..y_N)`.
pub fn product_gadget<T: Scalar>(a: &T, n: usize) -> ReluNetwork<T> {
    let mut rows = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        rows.push(vec![(0, a.clone()), (1 + i, -T::one())]);
    }
    for i in 0..n {
        rows.push(vec![(1 + i, -T::one())]);
    }
    rows.push(vec![(0, T::one())]);
    let l1 = Affine::new(n + 1, rows, vec![T::zero(); 2 * n + 1]).expect("gadget layer 1");
    let lam = 2 * n;
    let mut rows = Vec::with_capacity(2 * n);
    let mut bias = Vec::with_capacity(2 * n);
    for i in 0..n {
        rows.push(vec![(i, T::one())]);
        bias.push(T::zero());
    }
    for i in 0..n {
        rows.push(vec![(lam, -a.clone()), (n + i, -T::one())]);
        bias.push(a.clone());
    }
    let l2 = Affine::new(2 * n + 1, rows, bias).expect("gadget layer 2");
    let rows = (0..n).map(|i| vec![(i, -T::one()), (n + i, -T::one())]).collect();
    let l3 = Affine::new(2 * n, rows, vec![a.clone(); n]).expect("gadget output");
    ReluNetwork::from_layers(n + 1, vec![Layer::relu(l1), Layer::relu(l2), Layer::linear(l3)])
        .expect("consistent gadget")
}

/// Network `x ↦ (h(Rⁿx), x)`: n controller steps from `E(x)`, both readouts, then a min.
pub fn scalar_factor_net<T: Scalar>(h: &SpecialHat<T>, lc: &LoopController<T>) -> Result<ReluNetwork<T>> {
    let cfg = &lc.cfg;
    if cfg.epsilon >= *h.rho() {
        return Err(Error::Precondition(format!(
            "scalar factor needs epsilon < rho of the hat (epsilon = {}, rho = {})",
            cfg.epsilon,
            h.rho()
        )));
    }
    let nn = Sign::Nonnegative;
    let carry = |d: usize| ReluNetwork::passthrough(1, nn, d);
    let start = ReluNetwork::fan_out_signed(&[lc.embed_net.clone(), carry(1)], &[Sign::General, nn])?;
    let step = ReluNetwork::parallel_signed(&[lc.controller_net.clone(), carry(lc.controller_net.depth())], &[Sign::General, nn])?;
    let h_net = lower_scalar_cpwl(h.base());
    let minus = ReluNetwork::serial(&lc.rho_minus_net, &h_net)?;
    let plus = ReluNetwork::serial(&lc.rho_plus_net, &h_net)?;
    let branches = ReluNetwork::fan_out(&[minus, plus])?;
    let readout = ReluNetwork::parallel_signed(&[branches.clone(), carry(branches.depth())], &[Sign::General, nn])?;
    let min = ReluNetwork::parallel_signed(&[min_gadget(nn), carry(1)], &[Sign::General, nn])?;
    let mut net = start;
    for _ in 0..cfg.n {
        net = ReluNetwork::serial(&net, &step)?;
    }
    net = ReluNetwork::serial(&net, &readout)?;
    ReluNetwork::serial(&net, &min)
}

/// Network `x ↦ Gⁿ(x) ∈ ℝ^{pL}` for the atomic curve `h·e_μ` (μ 0-based).
pub fn atomic_unit_interval_net<T: Scalar>(
    op: &RefinementOp<T>,
    h: &SpecialHat<T>,
    mu: usize,
    lc: &LoopController<T>,
) -> Result<ReluNetwork<T>> {
    let (p, l, m) = (op.p(), op.l(), op.m());
    if mu >= p {
        return Err(Error::Precondition(format!("direction {} out of range for p = {p}", mu + 1)));
    }
    if lc.cfg.m != m {
        return Err(Error::Precondition(format!("controller built for M = {}, operator has M = {m}", lc.cfg.m)));
    }
    let n = lc.cfg.n;
    let big = p * l;
    let phi = big * big;
    let nn = Sign::Nonnegative;
    let factor = scalar_factor_net(h, lc)?;
    // (s, x) -> (z, Φ) with Φ^{(ℓ)} = s e_ℓ.
    let reembed = ReluNetwork::parallel_signed(&[ReluNetwork::passthrough(1, nn, 1), lc.embed_net.clone()], &[nn, Sign::General])?;
    let mut rows: Vec<Vec<(usize, T)>> = vec![vec![(1, T::one())], vec![(2, T::one())]];
    for ell in 0..big {
        for k in 0..big {
            rows.push(if k == ell { vec![(0, T::one())] } else { Vec::new() });
        }
    }
    let state = Affine::new(3, rows, vec![T::zero(); 2 + phi])?;
    let reembed = ReluNetwork::post_affine(&reembed, state)?;

    let loop_nets = ReluNetwork::fan_out(&[lc.controller_net.clone(), lc.selector_net.clone()])?;
    let advance = ReluNetwork::parallel_signed(
        &[loop_nets.clone(), ReluNetwork::passthrough(phi, Sign::General, loop_nets.depth())],
        &[Sign::General, Sign::General],
    )?;

    let a = gadget_bound(op, h, n);
    let transitions = op.block_transitions();
    let mut gadgets = Vec::new();
    let mut select_rows: Vec<Vec<(usize, T)>> = Vec::new();
    let mut sum_rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); phi];
    let mut offset = 0;
    for ell in 0..big {
        for (q, t) in transitions.iter().enumerate() {
            if t.matrix.is_zero() {
                continue;
            }
            select_rows.push(vec![(q, T::one())]);
            let tt = t.matrix.transpose();
            for r in 0..big {
                let row = (0..big)
                    .filter(|c| !tt.get(r, *c).is_zero())
                    .map(|c| (m + ell * big + c, tt.get(r, c).clone()))
                    .collect();
                select_rows.push(row);
                sum_rows[ell * big + r].push((offset + r, T::one()));
            }
            gadgets.push(product_gadget(&a, big));
            offset += big;
        }
    }
    let bank = if gadgets.is_empty() {
        ReluNetwork::affine(Affine::constant(m + phi, vec![T::zero(); phi]))
    } else {
        let bank = ReluNetwork::parallel(&gadgets)?;
        let bank = ReluNetwork::pre_affine(&bank, Affine::new(m + phi, select_rows.clone(), vec![T::zero(); select_rows.len()])?)?;
        ReluNetwork::post_affine(&bank, Affine::new(offset, sum_rows, vec![T::zero(); phi])?)?
    };
    let gate = ReluNetwork::parallel_signed(&[ReluNetwork::passthrough(2, nn, 2), bank], &[nn, Sign::General])?;
    let stage = ReluNetwork::serial(&advance, &gate)?;

    let mut net = ReluNetwork::serial(&factor, &reembed)?;
    for _ in 0..n {
        net = ReluNetwork::serial(&net, &stage)?;
    }
    let out = Affine::select(2 + phi, &(0..big).map(|ell| 2 + ell * big + mu).collect::<Vec<_>>());
    ReluNetwork::post_affine(&net, out)
}

/// `F(t) = f₁(σ₁(t)) + Σ_{k≥2} (f_k(σ_k(t)) − f_k(0))` with `σ_k(t) = ReLU(t−k+1) − ReLU(t−k)`.
pub fn glue_blocks<T: Scalar>(nets: &[ReluNetwork<T>]) -> Result<ReluNetwork<T>> {
    let l = nets.len();
    if l == 0 {
        return Err(Error::Precondition("gluing needs at least one block".into()));
    }
    let p = nets[0].output_dim();
    if nets.iter().any(|n| n.input_dim() != 1 || n.output_dim() != p) {
        return Err(Error::Dimension("glued blocks must map 1 input to a common output dimension".into()));
    }
    let tol = T::lit(1e-9);
    let at = |k: usize, x: T| nets[k].eval(&[x]);
    let max_gap = |u: &[T], v: &[T]| u.iter().zip(v).map(|(a, b)| (a.clone() - b.clone()).abs()).fold(T::zero(), T::max_of);
    let zeros = vec![T::zero(); p];
    let start = at(0, T::zero())?;
    if max_gap(&start, &zeros) > tol {
        return Err(Error::GlueMismatch { junction: 0, detail: "first block does not vanish at 0".into() });
    }
    let mut at_zero = vec![start];
    for k in 1..l {
        let left = at(k - 1, T::one())?;
        let right = at(k, T::zero())?;
        if max_gap(&left, &right) > tol {
            return Err(Error::GlueMismatch { junction: k, detail: format!("blocks {k} and {} disagree", k + 1) });
        }
        at_zero.push(right);
    }
    if max_gap(&at(l - 1, T::one())?, &zeros) > tol {
        return Err(Error::GlueMismatch { junction: l, detail: "last block does not vanish at 1".into() });
    }
    let ramps = Affine::new(1, (0..=l).map(|_| vec![(0, T::one())]).collect(), (0..=l).map(|j| -T::usize(j)).collect())?;
    let sigma = Affine::new(l + 1, (0..l).map(|k| vec![(k, T::one()), (k + 1, -T::one())]).collect(), vec![T::zero(); l])?;
    let ramps = ReluNetwork::from_layers(1, vec![Layer::relu(ramps), Layer::linear(sigma)])?;
    let blocks = ReluNetwork::parallel(nets)?;
    let bias = (0..p)
        .map(|i| at_zero.iter().skip(1).fold(T::zero(), |acc, v| acc - v[i].clone()))
        .collect();
    let sum = Affine::new(l * p, (0..p).map(|i| (0..l).map(|k| (k * p + i, T::one())).collect()).collect(), bias)?;
    let net = ReluNetwork::serial(&ramps, &blocks)?;
    ReluNetwork::post_affine(&net, sum)
}

fn describe<T: Scalar>(op: &RefinementOp<T>, cfg: &LoopConfig<T>) -> Vec<(String, String)> {
    vec![
        ("M".into(), op.m().to_string()),
        ("p".into(), op.p().to_string()),
        ("L".into(), op.l().to_string()),
        ("rho".into(), cfg.rho.to_string()),
        ("epsilon".into(), cfg.epsilon.to_string()),
        ("delta_bar".into(), cfg.delta_bar.to_string()),
    ]
}

/// Exact network for `Vⁿγ`: atomic decomposition, per-term unit-interval networks, gluing,
/// input shifts by `M⁻ⁿδ` and a final sum.
pub fn compile_homogeneous<T: Scalar>(
    op: &RefinementOp<T>,
    gamma: &CpwlCurve<T>,
    n: usize,
    cfg: &LoopConfig<T>,
) -> Result<CompiledIterate<T>> {
    if gamma.dim() != op.p() {
        return Err(Error::Dimension(format!("curve dimension {} does not match p = {}", gamma.dim(), op.p())));
    }
    gamma.check_support(op.l())?;
    let mut params = describe(op, cfg);
    params.push(("n".into(), n.to_string()));
    if n == 0 {
        return Ok(CompiledIterate::new(lower_curve(gamma), 0, "homogeneous", params));
    }
    let cfg = LoopConfig { m: op.m(), n, ..cfg.clone() };
    let terms = decompose_atomic(gamma, &cfg.rho)?;
    let p = op.p();
    if terms.is_empty() {
        let zero = ReluNetwork::affine(Affine::constant(1, vec![T::zero(); p]));
        return Ok(CompiledIterate::new(zero, n, "homogeneous", params));
    }
    let lc = LoopController::build(&cfg)?;
    let scale = T::usize(op.m()).powi(n as u32);
    let mut cache: Vec<(SpecialHat<T>, usize, ReluNetwork<T>)> = Vec::new();
    let mut term_nets = Vec::with_capacity(terms.len());
    for term in &terms {
        let glued = match cache.iter().find(|(h, mu, _)| *h == term.hat && *mu == term.direction) {
            Some((_, _, net)) => net.clone(),
            None => {
                let atomic = atomic_unit_interval_net(op, &term.hat, term.direction, &lc)?;
                let blocks = (0..op.l())
                    .map(|k| ReluNetwork::post_affine(&atomic, Affine::select(p * op.l(), &(k * p..(k + 1) * p).collect::<Vec<_>>())))
                    .collect::<Result<Vec<_>>>()?;
                let glued = glue_blocks(&blocks)?;
                cache.push((term.hat.clone(), term.direction, glued.clone()));
                glued
            }
        };
        let shift = Affine::new(1, vec![vec![(0, T::one())]], vec![-term.shift.clone() / scale.clone()])?;
        let coef = Affine::new(p, (0..p).map(|i| vec![(i, term.coefficient.clone())]).collect(), vec![T::zero(); p])?;
        let net = ReluNetwork::pre_affine(&glued, shift)?;
        term_nets.push(ReluNetwork::post_affine(&net, coef)?);
    }
    let all = ReluNetwork::fan_out(&term_nets)?;
    let k = term_nets.len();
    let sum = Affine::new(k * p, (0..p).map(|i| (0..k).map(|t| (t * p + i, T::one())).collect()).collect(), vec![T::zero(); p])?;
    params.push(("terms".into(), k.to_string()));
    Ok(CompiledIterate::new(ReluNetwork::post_affine(&all, sum)?, n, "homogeneous", params))
}
