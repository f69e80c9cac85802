//! Reductions of affine, anchored and finite-state rules to homogeneous jobs.

use crate::compiler::{compile_homogeneous, CompiledIterate};
use crate::cpwl::CpwlCurve;
use crate::error::{Error, Result};
use crate::loop_controller::LoopConfig;
use crate::lowering::lower_curve;
use crate::matrix::Matrix;
use crate::network::{Affine, ReluNetwork, Sign};
use crate::refinement::RefinementOp;
use crate::scalar::Scalar;

/// Scalar coefficient sequence `λ_r` of a template forcing term.
#[derive(Clone, Debug, PartialEq)]
pub enum LambdaRule<T> {
    Constant(T),
    /// `scale · ratioʳ`.
    Geometric { scale: T, ratio: T },
    Table(Vec<T>),
}

impl<T: Scalar> LambdaRule<T> {
    pub fn at(&self, r: usize) -> Option<T> {
        match self {
            Self::Constant(c) => Some(c.clone()),
            Self::Geometric { scale, ratio } => Some(scale.clone() * ratio.powi(r as u32)),
            Self::Table(v) => v.get(r).cloned(),
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            Self::Table(v) => Some(v.len()),
            _ => None,
        }
    }
}

/// Forcing terms `B_0, B_1, …` of a stage-dependent rule `W_r γ = Vγ + B_r`.
#[derive(Clone, Debug, PartialEq)]
pub enum ForcingSchedule<T> {
    Explicit(Vec<CpwlCurve<T>>),
    Constant(CpwlCurve<T>),
    /// `B_r = B⁽⁰⁾ + Σ_{α≥1} λ_{r,α} B⁽ᵅ⁾`; `lambdas[α − 1]` drives `curves[α]`.
    Template { curves: Vec<CpwlCurve<T>>, lambdas: Vec<LambdaRule<T>> },
}

impl<T: Scalar> ForcingSchedule<T> {
    pub fn zero(p: usize, window: usize) -> Self {
        Self::Constant(CpwlCurve::zero(p, window))
    }

    /// Number of available stages, `None` if unbounded.
    pub fn len(&self) -> Option<usize> {
        match self {
            Self::Explicit(v) => Some(v.len()),
            Self::Constant(_) => None,
            Self::Template { lambdas, .. } => lambdas.iter().filter_map(|l| l.len()).min(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn stage(&self, r: usize) -> Result<CpwlCurve<T>> {
        match self {
            Self::Explicit(v) => v
                .get(r)
                .cloned()
                .ok_or_else(|| Error::Precondition(format!("forcing schedule has no stage {r}"))),
            Self::Constant(b) => Ok(b.clone()),
            Self::Template { curves, lambdas } => {
                if curves.len() != lambdas.len() + 1 {
                    return Err(Error::Dimension(format!(
                        "{} template curves need {} lambda rules",
                        curves.len(),
                        curves.len().saturating_sub(1)
                    )));
                }
                let mut acc = curves[0].clone();
                for (curve, rule) in curves[1..].iter().zip(lambdas) {
                    let lam = rule
                        .at(r)
                        .ok_or_else(|| Error::Precondition(format!("lambda schedule has no stage {r}")))?;
                    acc = acc.add(&curve.scale(&lam))?;
                }
                Ok(acc)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JobSource {
    Initial,
    Forcing(usize),
}

/// One homogeneous piece `V^stage curve` of a stage-dependent iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousJob<T> {
    pub stage: usize,
    pub curve: CpwlCurve<T>,
    pub source: JobSource,
}

/// `W_{n−1}⋯W_0 γ = Vⁿγ + Σ_r V^{n−1−r} B_r`; zero forcing terms are omitted.
pub fn expand_stage_iterate<T: Scalar>(
    op: &RefinementOp<T>,
    gamma: &CpwlCurve<T>,
    schedule: &ForcingSchedule<T>,
    n: usize,
) -> Result<Vec<HomogeneousJob<T>>> {
    if let Some(len) = schedule.len() {
        if len < n {
            return Err(Error::Precondition(format!("forcing schedule has {len} stages, need {n}")));
        }
    }
    let mut jobs = vec![HomogeneousJob { stage: n, curve: gamma.clone(), source: JobSource::Initial }];
    for r in 0..n {
        let b = schedule.stage(r)?;
        if b.dim() != op.p() {
            return Err(Error::Dimension(format!("forcing B_{r} has dimension {}, expected {}", b.dim(), op.p())));
        }
        b.check_support(op.l())
            .map_err(|e| Error::NonCompact(format!("forcing B_{r}: {e}")))?;
        if !b.is_zero() {
            jobs.push(HomogeneousJob { stage: n - 1 - r, curve: b, source: JobSource::Forcing(r) });
        }
    }
    Ok(jobs)
}

/// Direct iteration `γ ↦ Vγ + B_r` on curves (tails allowed).
pub fn direct_stage_iterate<T: Scalar>(
    op: &RefinementOp<T>,
    gamma: &CpwlCurve<T>,
    schedule: &ForcingSchedule<T>,
    n: usize,
) -> Result<CpwlCurve<T>> {
    let mut cur = gamma.clone();
    for r in 0..n {
        cur = op.apply(&cur)?.add(&schedule.stage(r)?)?.with_window(op.l());
    }
    Ok(cur)
}

/// Oracle curves `V^stage curve` for every job.
pub fn job_oracles<T: Scalar>(op: &RefinementOp<T>, jobs: &[HomogeneousJob<T>], cap: f64) -> Result<Vec<CpwlCurve<T>>> {
    jobs.iter().map(|j| op.iterate(&j.curve, j.stage, cap)).collect()
}

/// Serially adds the outputs of scalar-input networks, carrying `t` and a running sum.
pub fn accumulate<T: Scalar>(p: usize, nets: &[ReluNetwork<T>]) -> Result<ReluNetwork<T>> {
    let mut rows = vec![vec![(0, T::one())]];
    rows.extend((0..p).map(|_| Vec::new()));
    let mut acc = ReluNetwork::affine(Affine::new(1, rows, vec![T::zero(); 1 + p])?);
    for net in nets {
        if net.input_dim() != 1 || net.output_dim() != p {
            return Err(Error::Dimension("accumulated networks must map 1 input to p outputs".into()));
        }
        let carry = ReluNetwork::passthrough(1 + p, Sign::General, net.depth());
        let block = ReluNetwork::parallel(&[net.clone(), carry])?;
        let split = Affine::select(1 + p, &std::iter::once(0).chain(0..1 + p).collect::<Vec<_>>());
        let mut rows = vec![vec![(p, T::one())]];
        rows.extend((0..p).map(|i| vec![(i, T::one()), (p + 1 + i, T::one())]));
        let merge = Affine::new(2 * p + 1, rows, vec![T::zero(); 1 + p])?;
        let block = ReluNetwork::post_affine(&ReluNetwork::pre_affine(&block, split)?, merge)?;
        acc = ReluNetwork::serial(&acc, &block)?;
    }
    ReluNetwork::post_affine(&acc, Affine::select(1 + p, &(1..=p).collect::<Vec<_>>()))
}

/// Quadratic-depth network for a stage-dependent iterate; each job uses its own selector width.
pub fn compile_affine<T: Scalar>(
    op: &RefinementOp<T>,
    gamma: &CpwlCurve<T>,
    schedule: &ForcingSchedule<T>,
    n: usize,
    cfg: &LoopConfig<T>,
) -> Result<CompiledIterate<T>> {
    compile_job_sum(op, &expand_stage_iterate(op, gamma, schedule, n)?, n, cfg, None, "affine")
}

/// Serial sum of compiled jobs, plus an optional lowered offset curve.
pub fn compile_job_sum<T: Scalar>(
    op: &RefinementOp<T>,
    jobs: &[HomogeneousJob<T>],
    n: usize,
    cfg: &LoopConfig<T>,
    initial: Option<&CpwlCurve<T>>,
    builder: &str,
) -> Result<CompiledIterate<T>> {
    let mut nets = Vec::new();
    if let Some(c) = initial {
        nets.push(lower_curve(c));
    }
    for job in jobs {
        if job.curve.is_zero() {
            continue;
        }
        nets.push(compile_homogeneous(op, &job.curve, job.stage, cfg)?.net);
    }
    let net = accumulate(op.p(), &nets)?;
    let params = vec![
        ("M".into(), op.m().to_string()),
        ("p".into(), op.p().to_string()),
        ("L".into(), op.l().to_string()),
        ("n".into(), n.to_string()),
        ("jobs".into(), nets.len().to_string()),
    ];
    Ok(CompiledIterate::new(net, n, builder, params))
}

/// `E = VΓ + B − Γ` and whether its tails vanish; when they do the tails are cut to exact zeros.
pub fn anchor_mismatch<T: Scalar>(
    op: &RefinementOp<T>,
    b: &CpwlCurve<T>,
    anchor: &CpwlCurve<T>,
) -> Result<(CpwlCurve<T>, bool)> {
    let e = op.apply(anchor)?.add(b)?.sub(anchor)?.with_window(op.l());
    let tol = if T::is_exact() { T::zero() } else { T::lit(1e-10) };
    let small = |v: Vec<T>| v.iter().all(|x| x.abs() <= tol);
    let compact = small(e.left_tail()) && small(e.right_tail());
    if compact {
        Ok((e.truncate_tails().simplified(), true))
    } else {
        Ok((e, false))
    }
}

/// Defect network and assembled evaluator of an anchored iterate.
#[derive(Clone, Debug)]
pub struct AnchoredIterate<T> {
    pub mismatch: CpwlCurve<T>,
    pub defect: CompiledIterate<T>,
    pub assembled: CompiledIterate<T>,
}

/// `Wⁿ(Γ + η) = Γ + W̄ⁿη` with `W̄ξ = Vξ + E`.
pub fn compile_anchored<T: Scalar>(
    op: &RefinementOp<T>,
    b: &CpwlCurve<T>,
    anchor: &CpwlCurve<T>,
    eta: &CpwlCurve<T>,
    n: usize,
    cfg: &LoopConfig<T>,
) -> Result<AnchoredIterate<T>> {
    let (mismatch, compact) = anchor_mismatch(op, b, anchor)?;
    if !compact {
        return Err(Error::NonCompactMismatch(format!(
            "S·Γ± + B± must equal Γ±; tails are {:?} and {:?}; move the anchor end values onto fixed points of the tail map",
            mismatch.left_tail().iter().map(|v| v.to_f64()).collect::<Vec<_>>(),
            mismatch.right_tail().iter().map(|v| v.to_f64()).collect::<Vec<_>>()
        )));
    }
    let schedule = ForcingSchedule::Constant(mismatch.clone());
    let jobs = expand_stage_iterate(op, eta, &schedule, n)?;
    let defect = compile_job_sum(op, &jobs, n, cfg, None, "anchored-defect")?;
    let assembled = compile_job_sum(op, &jobs, n, cfg, Some(anchor), "anchored")?;
    Ok(AnchoredIterate { mismatch, defect, assembled })
}

/// State-labelled refinement rule `(𝔚Γ)_a = Σ_j Σ_b A_j^{ab} γ_b(M· − j) + B_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteStateSystem<T> {
    pub m: usize,
    pub p: usize,
    pub r: usize,
    /// `(j, blocks[a][b])`.
    pub masks: Vec<(i64, Vec<Vec<Option<Matrix<T>>>>)>,
    pub forcing: Option<Vec<CpwlCurve<T>>>,
    pub transitions: Option<Vec<Vec<usize>>>,
}

impl<T: Scalar> FiniteStateSystem<T> {
    pub fn new(
        m: usize,
        p: usize,
        r: usize,
        masks: Vec<(i64, Vec<Vec<Option<Matrix<T>>>>)>,
        forcing: Option<Vec<CpwlCurve<T>>>,
    ) -> Result<Self> {
        if r == 0 || p == 0 {
            return Err(Error::Precondition("need at least one state and p >= 1".into()));
        }
        for (j, blocks) in &masks {
            if blocks.len() != r || blocks.iter().any(|row| row.len() != r) {
                return Err(Error::Dimension(format!("mask {j} must hold an {r}x{r} block table")));
            }
            for a in blocks.iter().flatten().flatten() {
                if a.rows() != p || a.cols() != p {
                    return Err(Error::Dimension(format!("mask {j} holds a block that is not {p}x{p}")));
                }
            }
        }
        if let Some(f) = &forcing {
            if f.len() != r || f.iter().any(|c| c.dim() != p) {
                return Err(Error::Dimension("forcing needs one p-dimensional curve per state".into()));
            }
        }
        Ok(Self { m, p, r, masks, forcing, transitions: None })
    }

    /// `A_j^{ab} = C_{a,j}` if `b = σ(a, j)`, else zero.
    pub fn deterministic(m: usize, p: usize, transitions: Vec<Vec<usize>>, c: Vec<Vec<Matrix<T>>>) -> Result<Self> {
        let r = transitions.len();
        if c.len() != r || transitions.iter().any(|row| row.len() != m) || c.iter().any(|row| row.len() != m) {
            return Err(Error::Dimension(format!("transitions and C need {r} rows of {m} entries")));
        }
        if transitions.iter().flatten().any(|&b| b >= r) {
            return Err(Error::Precondition("transition targets an unknown state".into()));
        }
        let masks = (0..m)
            .map(|j| {
                let blocks = (0..r)
                    .map(|a| (0..r).map(|b| (transitions[a][j] == b).then(|| c[a][j].clone())).collect())
                    .collect();
                (j as i64, blocks)
            })
            .collect();
        let mut sys = Self::new(m, p, r, masks, None)?;
        sys.transitions = Some(transitions);
        Ok(sys)
    }

    pub fn with_forcing(mut self, forcing: Vec<CpwlCurve<T>>) -> Result<Self> {
        if forcing.len() != self.r || forcing.iter().any(|c| c.dim() != self.p) {
            return Err(Error::Dimension("forcing needs one p-dimensional curve per state".into()));
        }
        self.forcing = Some(forcing);
        Ok(self)
    }

    /// Statewise application, computed from the per-state rule.
    pub fn apply(&self, states: &[CpwlCurve<T>]) -> Result<Vec<CpwlCurve<T>>> {
        if states.len() != self.r {
            return Err(Error::Dimension(format!("expected {} state curves, got {}", self.r, states.len())));
        }
        let m = T::usize(self.m);
        let mut out = Vec::with_capacity(self.r);
        for a in 0..self.r {
            let window = states[a].window();
            let mut acc = CpwlCurve::zero(self.p, window);
            for (j, blocks) in &self.masks {
                for (b, block) in blocks[a].iter().enumerate() {
                    if let Some(mat) = block {
                        let moved = states[b].translate_scale(&T::int(*j), &m)?.apply_matrix(mat)?;
                        acc = acc.add(&moved)?;
                    }
                }
            }
            if let Some(f) = &self.forcing {
                acc = acc.add(&f[a])?;
            }
            out.push(acc.with_window(window));
        }
        Ok(out)
    }

    /// Block mask `𝒜_j` of the stacked operator on `ℝ^{p·r}` and the stacked forcing.
    pub fn stack(&self, l: usize) -> Result<(RefinementOp<T>, Option<ForcingSchedule<T>>)> {
        let d = self.p * self.r;
        let mut mask = Vec::with_capacity(self.masks.len());
        for (j, blocks) in &self.masks {
            let mut big = Matrix::zeros(d, d);
            for (a, row) in blocks.iter().enumerate() {
                for (b, block) in row.iter().enumerate() {
                    if let Some(mat) = block {
                        for i in 0..self.p {
                            for k in 0..self.p {
                                big.set(a * self.p + i, b * self.p + k, mat.get(i, k).clone());
                            }
                        }
                    }
                }
            }
            mask.push((*j, big));
        }
        let op = RefinementOp::new(self.m, d, l, mask)?;
        let forcing = match &self.forcing {
            Some(f) => Some(ForcingSchedule::Constant(CpwlCurve::stack(f)?.with_window(l))),
            None => None,
        };
        Ok((op, forcing))
    }
}
