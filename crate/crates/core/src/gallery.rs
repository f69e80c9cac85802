//! Geometric curve generators: polygonal, finite-state and connector-based rules.

use crate::cpwl::CpwlCurve;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::reductions::{FiniteStateSystem, ForcingSchedule, LambdaRule};
use crate::refinement::RefinementOp;
use crate::scalar::Scalar;

const EDGE_TOL: f64 = 1e-12;

/// Names accepted by [`crate::instance::Instance::example`].
pub const GALLERY: [&str; 8] = ["koch", "levy", "heighway", "hilbert_type", "hilbert", "gosper", "morton", "hilbert_rp"];

/// Per-edge linear maps of a polygonal generator.
#[derive(Clone, Debug, PartialEq)]
pub enum EdgeTransforms<T> {
    /// `(angle, reflect)` per edge; the scale is the edge length.
    Planar(Vec<(f64, bool)>),
    Matrices(Vec<Matrix<T>>),
}

/// Vertex chain `P_0 = 0, …, P_M = e₁` and one transform per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorChain<T> {
    pub vertices: Vec<Vec<T>>,
    pub edges: EdgeTransforms<T>,
}

/// `(Vγ)(t) = P_j + A_j γ(Mt − j)` on `[j/M, (j+1)/M]`.
#[derive(Clone, Debug)]
pub struct PolygonalGenerator<T> {
    pub vertices: Vec<Vec<T>>,
    pub matrices: Vec<Matrix<T>>,
    pub op: RefinementOp<T>,
}

fn unit<T: Scalar>(p: usize, i: usize) -> Vec<T> {
    (0..p).map(|k| if k == i { T::one() } else { T::zero() }).collect()
}

fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

fn scaled<T: Scalar>(a: &[T], s: &T) -> Vec<T> {
    a.iter().map(|x| x.clone() * s.clone()).collect()
}

fn dist<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.to_f64() - y.to_f64()).abs()).fold(0.0, f64::max)
}

/// `s · R_angle`, right-multiplied by `diag(1, −1)` when reflected.
pub fn planar_similarity<T: Scalar>(scale: f64, angle: f64, reflect: bool) -> Matrix<T> {
    let (s, c) = angle.sin_cos();
    let f = if reflect { -1.0 } else { 1.0 };
    Matrix::from_rows(vec![
        vec![T::lit(scale * c), T::lit(-scale * s * f)],
        vec![T::lit(scale * s), T::lit(scale * c * f)],
    ])
    .expect("2x2")
}

pub fn polygonal_generator<T: Scalar>(chain: &GeneratorChain<T>) -> Result<PolygonalGenerator<T>> {
    let v = &chain.vertices;
    if v.len() < 3 {
        return Err(Error::Generator("a generator needs at least two edges".into()));
    }
    let p = v[0].len();
    if p == 0 || v.iter().any(|x| x.len() != p) {
        return Err(Error::Generator("vertices must share one positive dimension".into()));
    }
    let m = v.len() - 1;
    if dist(&v[0], &vec![T::zero(); p]) > EDGE_TOL || dist(&v[m], &unit(p, 0)) > EDGE_TOL {
        return Err(Error::Generator("vertex chain must run from 0 to e1".into()));
    }
    let matrices = match &chain.edges {
        EdgeTransforms::Planar(list) => {
            if p != 2 {
                return Err(Error::Generator("angle/reflect edges need planar vertices".into()));
            }
            if list.len() != m {
                return Err(Error::Generator(format!("{} edge transforms for {m} edges", list.len())));
            }
            list.iter()
                .enumerate()
                .map(|(j, &(angle, reflect))| {
                    let d = sub(&v[j + 1], &v[j]);
                    let len = d.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt();
                    planar_similarity(len, angle, reflect)
                })
                .collect::<Vec<_>>()
        }
        EdgeTransforms::Matrices(list) => {
            if list.len() != m || list.iter().any(|a| a.rows() != p || a.cols() != p) {
                return Err(Error::Generator(format!("need {m} matrices of size {p}x{p}")));
            }
            list.clone()
        }
    };
    let e = unit::<T>(p, 0);
    let mut total = vec![T::zero(); p];
    for (j, a) in matrices.iter().enumerate() {
        let image = a.mul_vec(&e);
        let d = sub(&v[j + 1], &v[j]);
        let err = dist(&image, &d);
        if err > EDGE_TOL {
            return Err(Error::Generator(format!("edge condition fails at edge {j} by {err:e}")));
        }
        total = add(&total, &image);
    }
    let err = dist(&total, &e);
    if err > EDGE_TOL {
        return Err(Error::Generator(format!("mask sum does not fix e1 (error {err:e})")));
    }
    let op = RefinementOp::new(m, p, 1, matrices.iter().cloned().enumerate().map(|(j, a)| (j as i64, a)).collect())?;
    Ok(PolygonalGenerator { vertices: v.clone(), matrices, op })
}

fn check_cap(count: f64, cap: f64) -> Result<()> {
    if count > cap {
        Err(Error::CapExceeded { needed: count, cap })
    } else {
        Ok(())
    }
}

fn uniform_params<T: Scalar>(count: usize) -> Vec<T> {
    let d = T::usize(count - 1);
    (0..count).map(|k| T::usize(k) / d.clone()).collect()
}

/// `θ(t)·e₁` clamped to `[0, 1]`: the straight anchor of a generator running from 0 to `e₁`.
pub fn straight_anchor<T: Scalar>(p: usize) -> CpwlCurve<T> {
    CpwlCurve::polyline(&[T::zero(), T::one()], &[vec![T::zero(); p], unit(p, 0)], 1).expect("two vertices")
}

impl<T: Scalar> PolygonalGenerator<T> {
    pub fn m(&self) -> usize {
        self.matrices.len()
    }

    pub fn p(&self) -> usize {
        self.vertices[0].len()
    }

    /// Stage-`n` vertex list by direct substitution of the generator into itself.
    pub fn vertex_list(&self, n: usize, cap: f64) -> Result<Vec<Vec<T>>> {
        check_cap((self.m() as f64).powi(n as i32) + 1.0, cap)?;
        let mut pts = vec![vec![T::zero(); self.p()], unit(self.p(), 0)];
        for _ in 0..n {
            let mut next = Vec::with_capacity(self.m() * (pts.len() - 1) + 1);
            next.push(self.vertices[0].clone());
            for (j, a) in self.matrices.iter().enumerate() {
                next.extend(pts[1..].iter().map(|x| add(&self.vertices[j], &a.mul_vec(x))));
            }
            pts = next;
        }
        Ok(pts)
    }

    /// Stage-`n` polyline on `[0, 1]`, vertices at `k/Mⁿ`.
    pub fn oracle(&self, n: usize, cap: f64) -> Result<CpwlCurve<T>> {
        let pts = self.vertex_list(n, cap)?;
        CpwlCurve::polyline(&uniform_params(pts.len()), &pts, 1)
    }
}

pub fn koch<T: Scalar>() -> Result<PolygonalGenerator<T>> {
    let h = T::lit(3f64.sqrt() / 6.0);
    let vertices = vec![
        vec![T::zero(), T::zero()],
        vec![T::ratio(1, 3), T::zero()],
        vec![T::ratio(1, 2), h],
        vec![T::ratio(2, 3), T::zero()],
        vec![T::one(), T::zero()],
    ];
    let third = 1.0 / 3.0;
    let pi3 = std::f64::consts::FRAC_PI_3;
    let matrices = vec![
        Matrix::identity(2).scale(&T::ratio(1, 3)),
        planar_similarity(third, pi3, false),
        planar_similarity(third, -pi3, false),
        Matrix::identity(2).scale(&T::ratio(1, 3)),
    ];
    polygonal_generator(&GeneratorChain { vertices, edges: EdgeTransforms::Matrices(matrices) })
}

fn dragon<T: Scalar>(reflect_second: bool) -> Result<PolygonalGenerator<T>> {
    let vertices = vec![
        vec![T::zero(), T::zero()],
        vec![T::ratio(1, 2), T::ratio(1, 2)],
        vec![T::one(), T::zero()],
    ];
    let q = std::f64::consts::FRAC_PI_4;
    polygonal_generator(&GeneratorChain { vertices, edges: EdgeTransforms::Planar(vec![(q, false), (-q, reflect_second)]) })
}

/// Lévy C curve: `A_0 = R_{π/4}/√2`, `A_1 = R_{−π/4}/√2`.
pub fn levy<T: Scalar>() -> Result<PolygonalGenerator<T>> {
    dragon(false)
}

/// Heighway dragon: the Lévy rule with the second map reflected.
pub fn heighway<T: Scalar>() -> Result<PolygonalGenerator<T>> {
    dragon(true)
}

fn half_matrix<T: Scalar>(rows: &[[i64; 2]; 2]) -> Matrix<T> {
    Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| T::ratio(v, 2)).collect()).collect()).expect("2x2")
}

fn hilbert_matrices<T: Scalar>() -> Vec<Matrix<T>> {
    vec![
        half_matrix(&[[0, 1], [1, 0]]),
        half_matrix(&[[1, 0], [0, 1]]),
        half_matrix(&[[1, 0], [0, 1]]),
        half_matrix(&[[0, -1], [-1, 0]]),
    ]
}

/// Four-piece Hilbert-type generator through the dyadic subsquares.
pub fn hilbert_type<T: Scalar>() -> Result<PolygonalGenerator<T>> {
    let h = T::ratio(1, 2);
    let vertices = vec![
        vec![T::zero(), T::zero()],
        vec![T::zero(), h.clone()],
        vec![h.clone(), h.clone()],
        vec![T::one(), h],
        vec![T::one(), T::zero()],
    ];
    polygonal_generator(&GeneratorChain { vertices, edges: EdgeTransforms::Matrices(hilbert_matrices()) })
}

/// Vertex chain and signed permutations of the `2ᵖ`-piece Hilbert-type rule in `ℝᵖ`.
pub fn hilbert_rp_chain(p: usize) -> Result<(Vec<Vec<i64>>, Vec<Vec<Vec<i64>>>)> {
    if p == 0 {
        return Err(Error::Generator("dimension must be positive".into()));
    }
    // Vertices are stored doubled so that they stay integral.
    let mut pts: Vec<Vec<i64>> = vec![vec![0], vec![1], vec![2]];
    let mut us: Vec<Vec<Vec<i64>>> = vec![vec![vec![1]], vec![vec![1]]];
    for q in 2..=p {
        let n = 1usize << (q - 1);
        let mut next = Vec::with_capacity(2 * n + 1);
        for j in 0..=2 * n {
            let (head, tail) = match j {
                j if j < n => (0, &pts[j]),
                j if j == n => (1, &pts[n - 1]),
                j => (2, &pts[2 * n - j]),
            };
            next.push(std::iter::once(head).chain(tail.iter().copied()).collect());
        }
        let mut next_u = Vec::with_capacity(2 * n);
        for j in 0..2 * n {
            let mut u = vec![vec![0i64; q]; q];
            if j + 1 == n || j == n {
                u[0][0] = 1;
                for r in 0..q - 1 {
                    for c in 0..q - 1 {
                        u[r + 1][c + 1] = us[n - 1][r][c];
                    }
                }
            } else {
                let (k, s) = if j + 2 <= n { (j, 1) } else { (2 * n - 1 - j, -1) };
                u[0][1] = s;
                for r in 0..q - 1 {
                    u[r + 1][0] = s * us[k][r][0];
                    for c in 1..q - 1 {
                        u[r + 1][c + 1] = us[k][r][c];
                    }
                }
            }
            next_u.push(u);
        }
        pts = next;
        us = next_u;
    }
    Ok((pts, us))
}

/// `A_j = ½ U_j` with `U_j` built recursively from the planar rule; `2 ≤ p ≤ 4`.
pub fn hilbert_rp<T: Scalar>(p: usize) -> Result<PolygonalGenerator<T>> {
    if !(2..=4).contains(&p) {
        return Err(Error::Generator(format!("hilbert_rp supports 2 <= p <= 4, got {p}")));
    }
    let (pts, us) = hilbert_rp_chain(p)?;
    let vertices = pts.iter().map(|v| v.iter().map(|&x| T::ratio(x, 2)).collect()).collect();
    let matrices = us
        .iter()
        .map(|u| Matrix::from_rows(u.iter().map(|r| r.iter().map(|&x| T::ratio(x, 2)).collect()).collect()).expect("square"))
        .collect();
    polygonal_generator(&GeneratorChain { vertices, edges: EdgeTransforms::Matrices(matrices) })
}

/// Two-state rule with deterministic transitions; every state starts from the unit segment.
#[derive(Clone, Debug)]
pub struct StateGenerator<T> {
    pub m: usize,
    pub p: usize,
    pub transitions: Vec<Vec<usize>>,
    pub c: Vec<Vec<Matrix<T>>>,
    pub system: FiniteStateSystem<T>,
}

impl<T: Scalar> StateGenerator<T> {
    pub fn states(&self) -> usize {
        self.transitions.len()
    }

    /// Per-state stage-`n` vertex lists `V_a^{n+1} = concat_j (P^a_j + C_{a,j} V^n_{σ(a,j)})`.
    pub fn vertex_lists(&self, n: usize, cap: f64) -> Result<Vec<Vec<Vec<T>>>> {
        check_cap((self.m as f64).powi(n as i32) + 1.0, cap)?;
        let seg = vec![vec![T::zero(); self.p], unit(self.p, 0)];
        let mut lists = vec![seg; self.states()];
        for _ in 0..n {
            let mut next = Vec::with_capacity(self.states());
            for a in 0..self.states() {
                let mut start = vec![T::zero(); self.p];
                let mut out = vec![start.clone()];
                for j in 0..self.m {
                    let c = &self.c[a][j];
                    let src = &lists[self.transitions[a][j]];
                    out.extend(src[1..].iter().map(|x| add(&start, &c.mul_vec(x))));
                    start = add(&start, &c.mul_vec(&unit(self.p, 0)));
                }
                next.push(out);
            }
            lists = next;
        }
        Ok(lists)
    }

    /// Stacked stage-`n` curve `(γ_A, γ_B, …)`.
    pub fn oracle(&self, n: usize, cap: f64) -> Result<CpwlCurve<T>> {
        let lists = self.vertex_lists(n, cap)?;
        let ts = uniform_params(lists[0].len());
        let curves = lists.iter().map(|pts| CpwlCurve::polyline(&ts, pts, 1)).collect::<Result<Vec<_>>>()?;
        CpwlCurve::stack(&curves)
    }

    pub fn anchor(&self) -> Result<CpwlCurve<T>> {
        CpwlCurve::stack(&vec![straight_anchor(self.p); self.states()])
    }

    /// `Σ_j C_{a,j} e₁` for every state.
    pub fn mask_sums(&self) -> Vec<Vec<T>> {
        let e = unit::<T>(self.p, 0);
        self.c
            .iter()
            .map(|row| row.iter().fold(vec![T::zero(); self.p], |acc, c| add(&acc, &c.mul_vec(&e))))
            .collect()
    }
}

/// Two-state Gosper rule: `C_{a,j} = R_{φ+θ_{a,j}}/√7`, `φ = arctan(√3/5)`.
pub fn gosper_system<T: Scalar>() -> Result<StateGenerator<T>> {
    use std::f64::consts::PI;
    let phi = (3f64.sqrt() / 5.0).atan();
    let theta = [
        [0.0, -PI / 3.0, -PI, -2.0 * PI / 3.0, 0.0, 0.0, PI / 3.0],
        [PI / 3.0, 0.0, 0.0, -2.0 * PI / 3.0, -PI, -PI / 3.0, 0.0],
    ];
    let transitions = vec![vec![0, 1, 1, 0, 0, 0, 1], vec![0, 1, 1, 1, 0, 0, 1]];
    let s = 1.0 / 7f64.sqrt();
    let c: Vec<Vec<Matrix<T>>> = theta
        .iter()
        .map(|row| row.iter().map(|&t| planar_similarity(s, phi + t, false)).collect())
        .collect();
    let system = FiniteStateSystem::deterministic(7, 2, transitions.clone(), c.clone())?;
    let g = StateGenerator { m: 7, p: 2, transitions, c, system };
    let e = unit::<T>(2, 0);
    for (a, sum) in g.mask_sums().iter().enumerate() {
        let err = dist(sum, &e);
        if err > EDGE_TOL {
            return Err(Error::Generator(format!("state {a} mask sum misses e1 by {err:e}")));
        }
    }
    Ok(g)
}

/// Copy maps `F_j(x) = A_j x + u_j` on `I_j = [2j/M, (2j+1)/M]`, straight connectors on the gaps.
#[derive(Clone, Debug)]
pub struct ConnectorRule<T> {
    pub a: Vec<Matrix<T>>,
    pub u: Vec<Vec<T>>,
}

impl<T: Scalar> ConnectorRule<T> {
    pub fn new(a: Vec<Matrix<T>>, u: Vec<Vec<T>>) -> Result<Self> {
        if a.len() < 2 || a.len() != u.len() {
            return Err(Error::Generator("connector rules need at least two copies with one offset each".into()));
        }
        let p = u[0].len();
        if a.iter().any(|m| m.rows() != p || m.cols() != p) || u.iter().any(|v| v.len() != p) {
            return Err(Error::Dimension(format!("copy maps must act on R^{p}")));
        }
        Ok(Self { a, u })
    }

    pub fn copies(&self) -> usize {
        self.a.len()
    }

    pub fn m(&self) -> usize {
        2 * self.copies() - 1
    }

    pub fn p(&self) -> usize {
        self.u[0].len()
    }

    pub fn apply(&self, j: usize, x: &[T]) -> Vec<T> {
        add(&self.a[j].mul_vec(x), &self.u[j])
    }

    /// Mask `A_j` at position `2j`, window 1.
    pub fn operator(&self) -> Result<RefinementOp<T>> {
        RefinementOp::new(self.m(), self.p(), 1, self.a.iter().cloned().enumerate().map(|(j, a)| (2 * j as i64, a)).collect())
    }
}

/// Connector rule with endpoint templates `a_n = a⁽⁰⁾ + λ_n a⁽¹⁾`, `b_n = b⁽⁰⁾ + λ_n b⁽¹⁾`, `λ_n = ratioⁿ`.
#[derive(Clone, Debug)]
pub struct ConnectorInstance<T> {
    pub rule: ConnectorRule<T>,
    pub a: [Vec<T>; 2],
    pub b: [Vec<T>; 2],
    pub ratio: T,
    pub op: RefinementOp<T>,
    /// `B⁽⁰⁾`, `B⁽¹⁾`.
    pub templates: [CpwlCurve<T>; 2],
}

fn theta_point<T: Scalar>(a: &[T], b: &[T], t: &T) -> Vec<T> {
    add(a, &scaled(&sub(b, a), t))
}

impl<T: Scalar> ConnectorInstance<T> {
    pub fn new(rule: ConnectorRule<T>, a: [Vec<T>; 2], b: [Vec<T>; 2], ratio: T) -> Result<Self> {
        let op = rule.operator()?;
        let templates = [template_curve(&rule, &a, &b, 0, &ratio)?, template_curve(&rule, &a, &b, 1, &ratio)?];
        let inst = Self { rule, a, b, ratio, op, templates };
        let start = inst.endpoints(0);
        let step = inst.endpoints(1);
        let first = inst.rule.apply(0, &start.0);
        let last = inst.rule.apply(inst.rule.copies() - 1, &start.1);
        if dist(&first, &step.0) > EDGE_TOL || dist(&last, &step.1) > EDGE_TOL {
            return Err(Error::Generator("endpoint templates are not carried by the first and last copy maps".into()));
        }
        Ok(inst)
    }

    pub fn lambda(&self, n: usize) -> T {
        self.ratio.powi(n as u32)
    }

    pub fn endpoints(&self, n: usize) -> (Vec<T>, Vec<T>) {
        let l = self.lambda(n);
        (add(&self.a[0], &scaled(&self.a[1], &l)), add(&self.b[0], &scaled(&self.b[1], &l)))
    }

    /// Straight anchor `Γ_n = a_n + θ(t)(b_n − a_n)`.
    pub fn anchor(&self, n: usize) -> Result<CpwlCurve<T>> {
        let (a, b) = self.endpoints(n);
        CpwlCurve::polyline(&[T::zero(), T::one()], &[a, b], 1)
    }

    /// Stage-`n` vertex list and parameters; stage 0 is the straight segment from `a_0` to `b_0`.
    pub fn vertex_list(&self, n: usize, cap: f64) -> Result<(Vec<T>, Vec<Vec<T>>)> {
        check_cap((self.rule.copies() as f64).powi(n as i32) * 2.0 + 1.0, cap)?;
        let (a0, b0) = self.endpoints(0);
        let mut ts = vec![T::zero(), T::one()];
        let mut pts = vec![a0, b0];
        let m = T::usize(self.rule.m());
        for _ in 0..n {
            let mut nts = Vec::new();
            let mut npts = Vec::new();
            for j in 0..self.rule.copies() {
                let off = T::usize(2 * j);
                for (t, x) in ts.iter().zip(&pts) {
                    nts.push((off.clone() + t.clone()) / m.clone());
                    npts.push(self.rule.apply(j, x));
                }
            }
            ts = nts;
            pts = npts;
        }
        Ok((ts, pts))
    }

    pub fn oracle(&self, n: usize, cap: f64) -> Result<CpwlCurve<T>> {
        let (ts, pts) = self.vertex_list(n, cap)?;
        let mut keep_t = vec![ts[0].clone()];
        let mut keep_p = vec![pts[0].clone()];
        for (t, x) in ts.into_iter().zip(pts).skip(1) {
            if t > *keep_t.last().expect("nonempty") {
                keep_t.push(t);
                keep_p.push(x);
            }
        }
        CpwlCurve::polyline(&keep_t, &keep_p, 1)
    }

    /// `η_n = γ_n − Γ_n`, compactly supported in `[0, 1]`.
    pub fn defect(&self, n: usize, cap: f64) -> Result<CpwlCurve<T>> {
        Ok(self.oracle(n, cap)?.sub(&self.anchor(n)?)?.truncate_tails().simplified())
    }

    /// `B_n = η_{n+1} − Vη_n` computed from the geometric recursion.
    pub fn direct_forcing(&self, n: usize, cap: f64) -> Result<CpwlCurve<T>> {
        let next = self.defect(n + 1, cap)?;
        let prev = self.defect(n, cap)?;
        Ok(next.sub(&self.op.apply(&prev)?)?.with_window(1))
    }

    /// `B_n = B⁽⁰⁾ + λ_n B⁽¹⁾`.
    pub fn schedule(&self) -> ForcingSchedule<T> {
        ForcingSchedule::Template {
            curves: self.templates.to_vec(),
            lambdas: vec![LambdaRule::Geometric { scale: T::one(), ratio: self.ratio.clone() }],
        }
    }
}

/// Template curve `B⁽ᵅ⁾` on the nodes `k/M`; the `α ≥ 1` anchor enters with the factor `λ_{n+1}/λ_n`.
fn template_curve<T: Scalar>(rule: &ConnectorRule<T>, a: &[Vec<T>; 2], b: &[Vec<T>; 2], alpha: usize, ratio: &T) -> Result<CpwlCurve<T>> {
    let m = rule.m();
    let p = rule.p();
    let lift = |j: usize, x: &[T]| if alpha == 0 { rule.apply(j, x) } else { rule.a[j].mul_vec(x) };
    let anchor_scale = if alpha == 0 { T::one() } else { ratio.clone() };
    let nodes: Vec<T> = (0..=m).map(|k| T::ratio(k as i64, m as i64)).collect();
    let mut values = Vec::with_capacity(m + 1);
    for (k, t) in nodes.iter().enumerate() {
        let image = if k == m {
            lift(rule.copies() - 1, &b[alpha])
        } else if k % 2 == 0 {
            lift(k / 2, &a[alpha])
        } else {
            lift(k / 2, &b[alpha])
        };
        let anchor = scaled(&theta_point(&a[alpha], &b[alpha], t), &anchor_scale);
        values.push(sub(&image, &anchor));
    }
    for (k, v) in [(0usize, &values[0]), (m, &values[m])] {
        if dist(v, &vec![T::zero(); p]) > EDGE_TOL {
            return Err(Error::NonCompact(format!("template {alpha} does not vanish at t = {k}/{m}")));
        }
    }
    values[0] = vec![T::zero(); p];
    values[m] = vec![T::zero(); p];
    Ok(CpwlCurve::polyline(&nodes, &values, 1)?.simplified())
}

/// Four-copy Hilbert connector rule, `M = 7`, `λ_n = 2⁻ⁿ`.
pub fn hilbert_connector<T: Scalar>() -> Result<ConnectorInstance<T>> {
    let h = || T::ratio(1, 2);
    let u = vec![vec![T::zero(), T::zero()], vec![T::zero(), h()], vec![h(), h()], vec![T::one(), h()]];
    let rule = ConnectorRule::new(hilbert_matrices(), u)?;
    ConnectorInstance::new(
        rule,
        [vec![T::zero(), T::zero()], vec![h(), h()]],
        [vec![T::one(), T::zero()], vec![-h(), h()]],
        h(),
    )
}

/// Morton rule in `ℝᵖ`: `2ᵖ` copies `½x + ½ε⁽ʳ⁾`, the first bit of `r` driving coordinate 1.
pub fn morton<T: Scalar>(p: usize) -> Result<ConnectorInstance<T>> {
    if p == 0 || p > 6 {
        return Err(Error::Generator(format!("morton supports 1 <= p <= 6, got {p}")));
    }
    let copies = 1usize << p;
    let a = vec![Matrix::identity(p).scale(&T::ratio(1, 2)); copies];
    let u = (0..copies)
        .map(|r| (0..p).map(|i| if (r >> (p - 1 - i)) & 1 == 1 { T::ratio(1, 2) } else { T::zero() }).collect())
        .collect();
    let rule = ConnectorRule::new(a, u)?;
    let ones = |v: T| vec![v; p];
    ConnectorInstance::new(
        rule,
        [ones(T::zero()), ones(T::ratio(1, 2))],
        [ones(T::one()), ones(T::ratio(-1, 2))],
        T::ratio(1, 2),
    )
}
