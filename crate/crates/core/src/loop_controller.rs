//! The triangle loop, its exact controller map, scalar readouts and digit selectors.

use crate::cpwl::{merge_grid, ScalarCpwl, SpecialHat};
use crate::error::{Error, Result};
use crate::lowering::{lower_fan_field, lower_planar_field, PlanarCpwlField, Point};
use crate::network::{Affine, ReluNetwork};
use crate::refinement::digit_residual;
use crate::scalar::Scalar;

/// How planar loop fields are turned into networks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FieldLowering {
    /// Sum of nodal hats on the fan; two hidden layers.
    Nodal,
    /// Max–min lattice form.
    #[default]
    Lattice,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopConfig<T> {
    pub m: usize,
    pub rho: T,
    pub epsilon: T,
    pub delta_bar: T,
    pub n: usize,
    pub lowering: FieldLowering,
}

impl<T: Scalar> LoopConfig<T> {
    /// Defaults `ρ = 1/4`, `ε = 1/8`, `δ̄ = 1/2`.
    pub fn new(m: usize, n: usize) -> Self {
        Self {
            m,
            rho: T::ratio(1, 4),
            epsilon: T::ratio(1, 8),
            delta_bar: T::ratio(1, 2),
            n,
            lowering: FieldLowering::Lattice,
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Precondition(format!("M = {} must be at least 2", self.m)));
        }
        if self.n == 0 {
            return Err(Error::Precondition("target depth n must be at least 1".into()));
        }
        let half = T::ratio(1, 2);
        if !(T::zero() < self.epsilon && self.epsilon < self.rho && self.rho < half) {
            return Err(Error::Precondition(format!(
                "need 0 < epsilon < rho < 1/2 (epsilon = {}, rho = {})",
                self.epsilon, self.rho
            )));
        }
        if !(T::zero() < self.delta_bar && self.delta_bar < T::one()) {
            return Err(Error::Precondition(format!("delta_bar = {} must lie in (0, 1)", self.delta_bar)));
        }
        Ok(())
    }

    /// `δₙ = δ̄ ϱ M^{−(n+1)}`.
    pub fn delta_n(&self) -> T {
        self.delta_bar.clone() * self.rho.clone() / T::usize(self.m).powi(self.n as u32 + 1)
    }

    /// Whether `t` lies in `Jₙ = ∪ₖ [k/M, k/M + δₙ]`.
    pub fn in_transition(&self, t: &T) -> bool {
        let m = T::usize(self.m);
        let k = (m.clone() * t.clone()).floor();
        let left = k / m;
        *t >= left && t.clone() - left <= self.delta_n()
    }
}

/// `E(t)` on the boundary of the triangle `(0,0), (1,1), (1,0)`.
pub fn embed<T: Scalar>(t: &T) -> Result<Point<T>> {
    if *t < T::zero() || *t > T::one() {
        return Err(Error::Domain(t.to_f64()));
    }
    let three = T::int(3);
    let third = T::ratio(1, 3);
    let two_thirds = T::ratio(2, 3);
    Ok(if *t <= third {
        [three.clone() * t.clone(), three * t.clone()]
    } else if *t <= two_thirds {
        [T::one(), T::int(2) - three * t.clone()]
    } else {
        [three.clone() - three * t.clone(), T::zero()]
    })
}

/// `E` as a CPwL curve on the line (constant outside `[0, 1]`).
pub fn embedding_curve<T: Scalar>() -> crate::cpwl::CpwlCurve<T> {
    let ts = [T::zero(), T::ratio(1, 3), T::ratio(2, 3), T::one()];
    let pts: Vec<Vec<T>> = ts.iter().map(|t| embed(t).expect("in range").to_vec()).collect();
    crate::cpwl::CpwlCurve::polyline(&ts, &pts, 1).expect("valid polyline")
}

/// Loop parameters always present as fan vertices: the corners and the side midpoints.
fn base_params<T: Scalar>() -> Vec<T> {
    (0..6).map(|k| T::ratio(k, 6)).collect()
}

/// Fan field over the loop with vertices `E(t)` for the given parameters in `[0, 1)`.
pub fn loop_field<T: Scalar>(params: Vec<T>, value: impl Fn(&T) -> Vec<T>) -> Result<PlanarCpwlField<T>> {
    let mut all = base_params::<T>();
    all.extend(params.into_iter().filter(|t| *t >= T::zero() && *t < T::one()));
    let ts = merge_grid(all);
    let ring: Vec<(Point<T>, Vec<T>)> = ts
        .iter()
        .map(|t| Ok((embed(t)?, value(t))))
        .collect::<Result<Vec<_>>>()?;
    let d = ring[0].1.len();
    let count = T::usize(ring.len());
    let centre_value = (0..d)
        .map(|i| ring.iter().fold(T::zero(), |acc, (_, v)| acc + v[i].clone()) / count.clone())
        .collect();
    PlanarCpwlField::fan([T::ratio(2, 3), T::ratio(1, 3)], centre_value, ring)
}

pub fn lower_field<T: Scalar>(field: &PlanarCpwlField<T>, lowering: FieldLowering) -> Result<ReluNetwork<T>> {
    match lowering {
        FieldLowering::Nodal => lower_fan_field(field),
        FieldLowering::Lattice => Ok(lower_planar_field(field)),
    }
}

/// Fan field for `F` with `F(E(t)) = E(R(t))` on the loop.
pub fn build_controller_field<T: Scalar>(m: usize) -> Result<PlanarCpwlField<T>> {
    if m < 2 {
        return Err(Error::Precondition(format!("M = {m} must be at least 2")));
    }
    let mut params = Vec::with_capacity(3 * m);
    for k in 0..m as i64 {
        let mm = 3 * m as i64;
        params.push(T::ratio(3 * k, mm));
        params.push(T::ratio(3 * k + 1, mm));
        params.push(T::ratio(3 * k + 2, mm));
    }
    loop_field(params, |t| {
        let (_, r) = digit_residual(t, m).expect("loop parameter in [0, 1)");
        embed(&r).expect("residual in [0, 1]").to_vec()
    })
}

/// `z₀ = E(x)`, `z_{j+1} = F(z_j)`.
pub fn controller_orbit<T: Scalar>(x: &T, n: usize, net: &ReluNetwork<T>) -> Result<Vec<Point<T>>> {
    let mut z = embed(x)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(z.clone());
    for _ in 0..n {
        let y = net.eval(&z)?;
        z = [y[0].clone(), y[1].clone()];
        out.push(z.clone());
    }
    Ok(out)
}

/// Scalar readouts `r⁻`, `r⁺` and their loop fields.
#[derive(Clone, Debug)]
pub struct Readouts<T> {
    pub epsilon: T,
    pub r_minus: ScalarCpwl<T>,
    pub r_plus: ScalarCpwl<T>,
    pub rho_minus: PlanarCpwlField<T>,
    pub rho_plus: PlanarCpwlField<T>,
}

pub fn build_readouts<T: Scalar>(epsilon: &T) -> Result<Readouts<T>> {
    if !(*epsilon > T::zero() && *epsilon < T::ratio(1, 2)) {
        return Err(Error::Precondition(format!("epsilon = {epsilon} must lie in (0, 1/2)")));
    }
    let e = epsilon.clone();
    let one = T::one();
    let r_minus = ScalarCpwl::new(vec![
        (T::zero(), T::zero()),
        (one.clone() - e.clone(), one.clone() - e.clone()),
        (one.clone(), T::zero()),
    ])?;
    let r_plus = ScalarCpwl::new(vec![(T::zero(), one.clone()), (e.clone(), e.clone()), (one.clone(), one.clone())])?;
    let params = vec![e.clone(), one.clone() - e.clone()];
    let rm = r_minus.clone();
    let rp = r_plus.clone();
    let rho_minus = loop_field(params.clone(), move |t| vec![rm.eval(t)])?;
    let rho_plus = loop_field(params, move |t| vec![rp.eval(t)])?;
    Ok(Readouts { epsilon: e, r_minus, r_plus, rho_minus, rho_plus })
}

/// Largest deviation of `min{h(r⁻(t)), h(r⁺(t))}` from `h(t)` over `grid + 1` points of `[0, 1]`.
pub fn min_readout_scalar<T: Scalar>(h: &SpecialHat<T>, epsilon: &T, grid: usize) -> Result<f64> {
    if *epsilon >= *h.rho() {
        return Err(Error::Precondition(format!(
            "readout identity needs epsilon < rho (epsilon = {epsilon}, rho = {})",
            h.rho()
        )));
    }
    let r = build_readouts(epsilon)?;
    let mut worst = 0.0f64;
    for i in 0..=grid {
        let t = T::usize(i) / T::usize(grid.max(1));
        let lhs = h.eval(&t);
        let rhs = T::min_of(h.eval(&r.r_minus.eval(&t)), h.eval(&r.r_plus.eval(&t)));
        worst = worst.max((lhs - rhs).abs().to_f64());
    }
    Ok(worst)
}

/// Digit selectors `ϑ_q` and their loop field `χ`.
#[derive(Clone, Debug)]
pub struct SelectorFamily<T> {
    pub m: usize,
    pub delta: T,
    pub thetas: Vec<ScalarCpwl<T>>,
    pub field: PlanarCpwlField<T>,
}

impl<T: Scalar> SelectorFamily<T> {
    pub fn eval(&self, t: &T) -> Vec<T> {
        self.thetas.iter().map(|th| th.eval(t)).collect()
    }
}

pub fn build_selectors<T: Scalar>(cfg: &LoopConfig<T>) -> Result<SelectorFamily<T>> {
    cfg.validate()?;
    let m = cfg.m;
    let mm = T::usize(m);
    let d = cfg.delta_n();
    let cell = |k: usize| T::usize(k) / mm.clone();
    let mut thetas = Vec::with_capacity(m);
    for q in 0..m {
        let pts = if q == m - 1 {
            let mut pts = vec![(T::zero(), T::one()), (d.clone(), T::zero())];
            if q > 0 {
                pts.push((cell(q), T::zero()));
                pts.push((cell(q) + d.clone(), T::one()));
            }
            pts.push((T::one(), T::one()));
            pts
        } else {
            let mut pts = Vec::new();
            if q > 0 {
                pts.push((cell(q), T::zero()));
            } else {
                pts.push((T::zero(), T::zero()));
            }
            pts.push((cell(q) + d.clone(), T::one()));
            pts.push((cell(q + 1), T::one()));
            pts.push((cell(q + 1) + d.clone(), T::zero()));
            pts
        };
        thetas.push(ScalarCpwl::new(pts)?);
    }
    let mut params = Vec::with_capacity(2 * m);
    for k in 0..m {
        params.push(cell(k));
        params.push(cell(k) + d.clone());
    }
    let th = thetas.clone();
    let field = loop_field(params, move |t| th.iter().map(|f| f.eval(t)).collect())?;
    Ok(SelectorFamily { m, delta: d, thetas, field })
}

/// Lowers the first `M − 1` selectors and emits the last one as `1 − Σ χ_q`.
pub fn lower_selector_field<T: Scalar>(field: &PlanarCpwlField<T>, lowering: FieldLowering) -> Result<ReluNetwork<T>> {
    let m = field.out_dim();
    let head = field.select_outputs(&(0..m - 1).collect::<Vec<_>>())?;
    let net = lower_field(&head, lowering)?;
    let mut rows: Vec<Vec<(usize, T)>> = (0..m - 1).map(|i| vec![(i, T::one())]).collect();
    rows.push((0..m - 1).map(|i| (i, -T::one())).collect());
    let mut bias = vec![T::zero(); m - 1];
    bias.push(T::one());
    ReluNetwork::post_affine(&net, Affine::new(m - 1, rows, bias)?)
}

/// All loop fields for one configuration together with their networks.
#[derive(Clone, Debug)]
pub struct LoopController<T> {
    pub cfg: LoopConfig<T>,
    pub controller: PlanarCpwlField<T>,
    pub controller_net: ReluNetwork<T>,
    pub readouts: Readouts<T>,
    pub rho_minus_net: ReluNetwork<T>,
    pub rho_plus_net: ReluNetwork<T>,
    pub selectors: SelectorFamily<T>,
    pub selector_net: ReluNetwork<T>,
    pub embed_net: ReluNetwork<T>,
}

impl<T: Scalar> LoopController<T> {
    pub fn build(cfg: &LoopConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let controller = build_controller_field(cfg.m)?;
        let controller_net = lower_field(&controller, cfg.lowering)?;
        let readouts = build_readouts(&cfg.epsilon)?;
        let rho_minus_net = lower_field(&readouts.rho_minus, cfg.lowering)?;
        let rho_plus_net = lower_field(&readouts.rho_plus, cfg.lowering)?;
        let selectors = build_selectors(cfg)?;
        let selector_net = lower_selector_field(&selectors.field, cfg.lowering)?;
        let embed_net = crate::lowering::lower_curve(&embedding_curve());
        Ok(Self {
            cfg: cfg.clone(),
            controller,
            controller_net,
            readouts,
            rho_minus_net,
            rho_plus_net,
            selectors,
            selector_net,
            embed_net,
        })
    }
}
