//! Exact ReLU realizations of 1-D CPwL functions and planar CPwL fields.

use crate::cpwl::{CpwlCurve, ScalarCpwl};
use crate::error::{Error, Result};
use crate::network::{Affine, Layer, ReluNetwork};
use crate::scalar::Scalar;

/// One hidden layer with a unit per breakpoint: `f(x) = f(t₀) + Σ (sᵢ − sᵢ₋₁) ReLU(x − tᵢ)`.
pub fn lower_scalar_cpwl<T: Scalar>(f: &ScalarCpwl<T>) -> ReluNetwork<T> {
    let pts = f.points();
    let m = pts.len();
    let slope = |i: usize| -> T {
        if i + 1 >= m {
            return T::zero();
        }
        (pts[i + 1].1.clone() - pts[i].1.clone()) / (pts[i + 1].0.clone() - pts[i].0.clone())
    };
    let hidden_rows = (0..m).map(|_| vec![(0, T::one())]).collect();
    let hidden_bias = pts.iter().map(|(t, _)| -t.clone()).collect();
    let mut prev = T::zero();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let s = slope(i);
        out.push((i, s.clone() - prev));
        prev = s;
    }
    let hidden = Affine::new(1, hidden_rows, hidden_bias).expect("valid hidden layer");
    let output = Affine::new(m, vec![out], vec![f.left_tail().clone()]).expect("valid output layer");
    ReluNetwork::from_layers(1, vec![Layer::relu(hidden), Layer::linear(output)]).expect("consistent layers")
}

/// All components of a curve side by side on a shared input.
pub fn lower_curve<T: Scalar>(curve: &CpwlCurve<T>) -> ReluNetwork<T> {
    let nets: Vec<ReluNetwork<T>> = curve.components().iter().map(lower_scalar_cpwl).collect();
    ReluNetwork::fan_out(&nets).expect("components share the scalar input")
}

pub type Point<T> = [T; 2];

fn cross<T: Scalar>(a: &Point<T>, b: &Point<T>) -> T {
    a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone()
}

fn sub<T: Scalar>(a: &Point<T>, b: &Point<T>) -> Point<T> {
    [a[0].clone() - b[0].clone(), a[1].clone() - b[1].clone()]
}

/// Affine function `gx·z₀ + gy·z₁ + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePiece<T> {
    pub gx: T,
    pub gy: T,
    pub c: T,
}

impl<T: Scalar> AffinePiece<T> {
    pub fn eval(&self, z: &Point<T>) -> T {
        self.gx.clone() * z[0].clone() + self.gy.clone() * z[1].clone() + self.c.clone()
    }

    fn near(&self, other: &Self) -> bool {
        T::near(&self.gx, &other.gx) && T::near(&self.gy, &other.gy) && T::near(&self.c, &other.c)
    }

    fn scaled(&self, s: &T) -> Self {
        Self { gx: self.gx.clone() * s.clone(), gy: self.gy.clone() * s.clone(), c: self.c.clone() * s.clone() }
    }

    fn plus(&self, other: &Self) -> Self {
        Self {
            gx: self.gx.clone() + other.gx.clone(),
            gy: self.gy.clone() + other.gy.clone(),
            c: self.c.clone() + other.c.clone(),
        }
    }
}

/// Barycentric coordinate of `tri[k]` as an affine function of the plane.
fn barycentric<T: Scalar>(tri: [&Point<T>; 3], k: usize) -> AffinePiece<T> {
    let p0 = tri[k];
    let p1 = tri[(k + 1) % 3];
    let p2 = tri[(k + 2) % 3];
    // λ(z) = cross(p2 − p1, z − p1) / cross(p2 − p1, p0 − p1)
    let e = sub(p2, p1);
    let det = cross(&e, &sub(p0, p1));
    let gx = -e[1].clone() / det.clone();
    let gy = e[0].clone() / det;
    let c = -(gx.clone() * p1[0].clone() + gy.clone() * p1[1].clone());
    AffinePiece { gx, gy, c }
}

#[derive(Clone, Debug, PartialEq)]
struct FanInfo {
    center: usize,
    ring: Vec<usize>,
}

/// CPwL interpolant of vertex values on a triangulated planar complex.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarCpwlField<T> {
    vertices: Vec<Point<T>>,
    triangles: Vec<[usize; 3]>,
    values: Vec<Vec<T>>,
    fan: Option<FanInfo>,
}

impl<T: Scalar> PlanarCpwlField<T> {
    pub fn new(vertices: Vec<Point<T>>, triangles: Vec<[usize; 3]>, values: Vec<Vec<T>>) -> Result<Self> {
        if vertices.len() != values.len() {
            return Err(Error::Dimension(format!("{} vertices but {} value vectors", vertices.len(), values.len())));
        }
        let d = values.first().map(|v| v.len()).unwrap_or(0);
        if d == 0 || values.iter().any(|v| v.len() != d) {
            return Err(Error::Dimension("vertex values must share a positive dimension".into()));
        }
        if triangles.is_empty() {
            return Err(Error::Dimension("a field needs at least one triangle".into()));
        }
        let tol = T::merge_eps() * T::merge_eps();
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&k| k >= vertices.len()) {
                return Err(Error::Dimension(format!("triangle {i} references a missing vertex")));
            }
            let area = cross(&sub(&vertices[t[1]], &vertices[t[0]]), &sub(&vertices[t[2]], &vertices[t[0]]));
            if area.abs() <= tol {
                return Err(Error::DegenerateTriangle(i));
            }
        }
        Ok(Self { vertices, triangles, values, fan: None })
    }

    /// Fan of triangles `(c, ring[i], ring[i+1])`, closed cyclically.
    pub fn fan(center: Point<T>, center_value: Vec<T>, ring: Vec<(Point<T>, Vec<T>)>) -> Result<Self> {
        let k = ring.len();
        if k < 3 {
            return Err(Error::Dimension("a closed fan needs at least three ring vertices".into()));
        }
        let mut vertices = vec![center];
        let mut values = vec![center_value];
        for (p, v) in ring {
            vertices.push(p);
            values.push(v);
        }
        let triangles = (0..k).map(|i| [0, 1 + i, 1 + (i + 1) % k]).collect();
        let mut field = Self::new(vertices, triangles, values)?;
        field.fan = Some(FanInfo { center: 0, ring: (1..=k).collect() });
        Ok(field)
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    pub fn out_dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn is_fan(&self) -> bool {
        self.fan.is_some()
    }

    /// Same complex with only the listed output components.
    pub fn select_outputs(&self, idx: &[usize]) -> Result<Self> {
        let d = self.out_dim();
        if idx.is_empty() || idx.iter().any(|&i| i >= d) {
            return Err(Error::Dimension(format!("output selection {idx:?} does not fit {d} components")));
        }
        let values = self.values.iter().map(|v| idx.iter().map(|&i| v[i].clone()).collect()).collect();
        Ok(Self { values, ..self.clone() })
    }

    fn tri(&self, i: usize) -> [&Point<T>; 3] {
        let t = &self.triangles[i];
        [&self.vertices[t[0]], &self.vertices[t[1]], &self.vertices[t[2]]]
    }

    /// Affine piece of output `comp` on triangle `i`.
    pub fn piece(&self, i: usize, comp: usize) -> AffinePiece<T> {
        let t = self.triangles[i];
        let tri = self.tri(i);
        let zero = AffinePiece { gx: T::zero(), gy: T::zero(), c: T::zero() };
        (0..3).fold(zero, |acc, k| acc.plus(&barycentric(tri, k).scaled(&self.values[t[k]][comp])))
    }

    /// Interpolated value, or `None` outside the complex.
    pub fn eval(&self, z: &Point<T>) -> Option<Vec<T>> {
        let tol = T::snap_eps();
        for i in 0..self.triangles.len() {
            let tri = self.tri(i);
            let lam: Vec<T> = (0..3).map(|k| barycentric(tri, k).eval(z)).collect();
            if lam.iter().all(|l| *l >= -tol.clone()) {
                let t = self.triangles[i];
                let out = (0..self.out_dim())
                    .map(|c| (0..3).fold(T::zero(), |acc, k| acc + lam[k].clone() * self.values[t[k]][c].clone()))
                    .collect();
                return Some(out);
            }
        }
        None
    }

    pub fn eval_point(&self, x: &T, y: &T) -> Option<Vec<T>> {
        self.eval(&[x.clone(), y.clone()])
    }
}

#[derive(Clone, Debug)]
struct Expr<T> {
    row: Vec<(usize, T)>,
    bias: T,
}

impl<T: Scalar> Expr<T> {
    fn minus(&self, other: &Self) -> Self {
        let mut row = self.row.clone();
        row.extend(other.row.iter().map(|(c, v)| (*c, -v.clone())));
        Self { row, bias: self.bias.clone() - other.bias.clone() }
    }

    fn neg(&self) -> Self {
        Self { row: self.row.iter().map(|(c, v)| (*c, -v.clone())).collect(), bias: -self.bias.clone() }
    }

    fn combo(terms: &[(usize, i64)]) -> Self {
        Self { row: terms.iter().map(|&(c, s)| (c, T::int(s))).collect(), bias: T::zero() }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Reduce {
    Min,
    Max,
}

/// Builds ReLU layers that reduce every group to a single expression.
fn reduce_groups<T: Scalar>(
    mut groups: Vec<Vec<Expr<T>>>,
    op: Reduce,
    in_dim: &mut usize,
    layers: &mut Vec<Layer<T>>,
) -> Vec<Expr<T>> {
    while groups.iter().any(|g| g.len() > 1) {
        let mut units: Vec<Expr<T>> = Vec::new();
        let mut next = Vec::with_capacity(groups.len());
        for g in &groups {
            let mut out = Vec::with_capacity(g.len().div_ceil(2));
            for pair in g.chunks(2) {
                let base = units.len();
                if let [u, v] = pair {
                    let diff = match op {
                        Reduce::Min => v.minus(u),
                        Reduce::Max => u.minus(v),
                    };
                    units.push(diff);
                    units.push(v.clone());
                    units.push(v.neg());
                    let s = if op == Reduce::Min { -1 } else { 1 };
                    out.push(Expr::combo(&[(base, s), (base + 1, 1), (base + 2, -1)]));
                } else {
                    units.push(pair[0].clone());
                    units.push(pair[0].neg());
                    out.push(Expr::combo(&[(base, 1), (base + 1, -1)]));
                }
            }
            next.push(out);
        }
        let rows = units.iter().map(|e| e.row.clone()).collect();
        let bias = units.iter().map(|e| e.bias.clone()).collect();
        layers.push(Layer::relu(Affine::new(*in_dim, rows, bias).expect("reduction layer")));
        *in_dim = units.len();
        groups = next;
    }
    groups.into_iter().map(|mut g| g.pop().expect("nonempty group")).collect()
}

/// Max–min lattice realization `f = maxᵢ min_{j∈Sᵢ} ℓⱼ`, exact on the (convex) union of triangles.
pub fn lower_planar_field<T: Scalar>(field: &PlanarCpwlField<T>) -> ReluNetwork<T> {
    let tol = T::snap_eps() * T::lit(10.0);
    let mut min_groups: Vec<Vec<Expr<T>>> = Vec::new();
    let mut owners: Vec<usize> = Vec::new();
    for comp in 0..field.out_dim() {
        let mut pieces: Vec<AffinePiece<T>> = Vec::new();
        let mut tri_piece = Vec::with_capacity(field.triangles.len());
        for i in 0..field.triangles.len() {
            let p = field.piece(i, comp);
            let idx = match pieces.iter().position(|q| q.near(&p)) {
                Some(k) => k,
                None => {
                    pieces.push(p);
                    pieces.len() - 1
                }
            };
            tri_piece.push(idx);
        }
        let mut sets: Vec<Vec<usize>> = Vec::new();
        for (i, &k) in tri_piece.iter().enumerate() {
            let tri = field.tri(i);
            let set: Vec<usize> = (0..pieces.len())
                .filter(|&j| {
                    tri.iter().all(|v| {
                        let d = pieces[j].eval(v) - pieces[k].eval(v);
                        d >= -tol.clone() * T::max_of(T::one(), pieces[k].eval(v).abs())
                    })
                })
                .collect();
            if !sets.contains(&set) {
                sets.push(set);
            }
        }
        let minimal: Vec<Vec<usize>> = sets
            .iter()
            .filter(|s| !sets.iter().any(|o| o != *s && o.iter().all(|j| s.contains(j))))
            .cloned()
            .collect();
        for set in minimal {
            let exprs = set
                .iter()
                .map(|&j| Expr { row: vec![(0, pieces[j].gx.clone()), (1, pieces[j].gy.clone())], bias: pieces[j].c.clone() })
                .collect();
            min_groups.push(exprs);
            owners.push(comp);
        }
    }
    let mut layers = Vec::new();
    let mut in_dim = 2;
    let mins = reduce_groups(min_groups, Reduce::Min, &mut in_dim, &mut layers);
    let mut max_groups: Vec<Vec<Expr<T>>> = vec![Vec::new(); field.out_dim()];
    for (e, c) in mins.into_iter().zip(owners) {
        max_groups[c].push(e);
    }
    let outs = reduce_groups(max_groups, Reduce::Max, &mut in_dim, &mut layers);
    let rows = outs.iter().map(|e| e.row.clone()).collect();
    let bias = outs.iter().map(|e| e.bias.clone()).collect();
    layers.push(Layer::linear(Affine::new(in_dim, rows, bias).expect("output layer")));
    ReluNetwork::from_layers(2, layers).expect("consistent lattice layers")
}

/// Nodal-hat realization of a fan field with two hidden layers.
///
/// Each ring vertex hat is `max(0, min(λ⁻, λ⁺))` built from the barycentric
/// coordinates of its two fan triangles; requires every vertex star to be convex.
pub fn lower_fan_field<T: Scalar>(field: &PlanarCpwlField<T>) -> Result<ReluNetwork<T>> {
    let fan = field
        .fan
        .as_ref()
        .ok_or_else(|| Error::Precondition("nodal lowering needs a fan complex".into()))?;
    let c = &field.vertices[fan.center];
    let k = fan.ring.len();
    let mut first = Vec::with_capacity(k);
    let mut second = Vec::with_capacity(k);
    for i in 0..k {
        let prev = &field.vertices[fan.ring[(i + k - 1) % k]];
        let v = &field.vertices[fan.ring[i]];
        let next = &field.vertices[fan.ring[(i + 1) % k]];
        let a = cross(&sub(prev, c), &sub(v, c));
        let b = cross(&sub(v, c), &sub(next, c));
        let span = cross(&sub(prev, c), &sub(next, c));
        let positive = |x: &T| x.is_positive();
        let negative = |x: &T| x.is_negative();
        let convex = (positive(&a) && positive(&b) && positive(&span)) || (negative(&a) && negative(&b) && negative(&span));
        if !convex {
            return Err(Error::Precondition(format!("vertex star {i} of the fan is not convex")));
        }
        first.push(barycentric([c, prev, v], 2));
        second.push(barycentric([c, v, next], 1));
    }
    let as_row = |p: &AffinePiece<T>, x: usize, y: usize| vec![(x, p.gx.clone()), (y, p.gy.clone())];
    // Layer 1: u_v = ReLU(λ⁺ − λ⁻) and a split copy of z.
    let mut rows = Vec::with_capacity(k + 4);
    let mut bias = Vec::with_capacity(k + 4);
    for i in 0..k {
        let d = AffinePiece {
            gx: second[i].gx.clone() - first[i].gx.clone(),
            gy: second[i].gy.clone() - first[i].gy.clone(),
            c: second[i].c.clone() - first[i].c.clone(),
        };
        rows.push(as_row(&d, 0, 1));
        bias.push(d.c);
    }
    for (col, s) in [(0, 1), (1, 1), (0, -1), (1, -1)] {
        rows.push(vec![(col, T::int(s))]);
        bias.push(T::zero());
    }
    let l1 = Affine::new(2, rows, bias)?;
    // Layer 2: φ_v = ReLU(λ⁺(z) − u_v) with z = z⁺ − z⁻.
    let (zp0, zp1, zn0, zn1) = (k, k + 1, k + 2, k + 3);
    let mut rows = Vec::with_capacity(k);
    let mut bias = Vec::with_capacity(k);
    for (i, s) in second.iter().enumerate() {
        rows.push(vec![
            (zp0, s.gx.clone()),
            (zn0, -s.gx.clone()),
            (zp1, s.gy.clone()),
            (zn1, -s.gy.clone()),
            (i, -T::one()),
        ]);
        bias.push(s.c.clone());
    }
    let l2 = Affine::new(k + 4, rows, bias)?;
    let centre = &field.values[fan.center];
    let out_rows = (0..field.out_dim())
        .map(|q| {
            (0..k)
                .map(|i| (i, field.values[fan.ring[i]][q].clone() - centre[q].clone()))
                .collect()
        })
        .collect();
    let l3 = Affine::new(k, out_rows, centre.clone())?;
    ReluNetwork::from_layers(2, vec![Layer::relu(l1), Layer::relu(l2), Layer::linear(l3)])
}
