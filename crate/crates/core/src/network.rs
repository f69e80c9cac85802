//! Layered affine + ReLU networks and their combinators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// Sign information for channels carried through ReLU layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    /// One unit per channel.
    Nonnegative,
    /// A split pair per channel.
    General,
}

/// Sparse affine map `x ↦ W x + b`, stored by rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine<T> {
    in_dim: usize,
    rows: Vec<Vec<(usize, T)>>,
    bias: Vec<T>,
}

fn compact_row<T: Scalar>(mut row: Vec<(usize, T)>) -> Vec<(usize, T)> {
    row.sort_by_key(|(c, _)| *c);
    let mut out: Vec<(usize, T)> = Vec::with_capacity(row.len());
    for (c, v) in row {
        match out.last_mut() {
            Some((lc, lv)) if *lc == c => *lv = lv.clone() + v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|(_, v)| !v.is_zero());
    out
}

impl<T: Scalar> Affine<T> {
    pub fn new(in_dim: usize, rows: Vec<Vec<(usize, T)>>, bias: Vec<T>) -> Result<Self> {
        if rows.len() != bias.len() {
            return Err(Error::Dimension(format!("{} rows but {} biases", rows.len(), bias.len())));
        }
        let mut clean = Vec::with_capacity(rows.len());
        for row in rows {
            if let Some((c, _)) = row.iter().find(|(c, _)| *c >= in_dim) {
                return Err(Error::Dimension(format!("column {c} out of range for input dimension {in_dim}")));
            }
            clean.push(compact_row(row));
        }
        Ok(Self { in_dim, rows: clean, bias })
    }

    pub fn from_dense(weights: &[Vec<T>], bias: Vec<T>, in_dim: usize) -> Result<Self> {
        let mut rows = Vec::with_capacity(weights.len());
        for w in weights {
            if w.len() != in_dim {
                return Err(Error::Dimension(format!("weight row of length {} for input dimension {in_dim}", w.len())));
            }
            rows.push(w.iter().cloned().enumerate().filter(|(_, v)| !v.is_zero()).collect());
        }
        Self::new(in_dim, rows, bias)
    }

    pub fn identity(d: usize) -> Self {
        Self { in_dim: d, rows: (0..d).map(|i| vec![(i, T::one())]).collect(), bias: vec![T::zero(); d] }
    }

    /// Selects the listed input coordinates.
    pub fn select(in_dim: usize, idx: &[usize]) -> Self {
        Self { in_dim, rows: idx.iter().map(|&i| vec![(i, T::one())]).collect(), bias: vec![T::zero(); idx.len()] }
    }

    pub fn constant(in_dim: usize, values: Vec<T>) -> Self {
        Self { in_dim, rows: vec![Vec::new(); values.len()], bias: values }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, T)>] {
        &self.rows
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn dense(&self) -> Vec<Vec<T>> {
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![T::zero(); self.in_dim];
                for (c, v) in r {
                    d[*c] = v.clone();
                }
                d
            })
            .collect()
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .zip(&self.bias)
            .map(|(r, b)| r.iter().fold(b.clone(), |acc, (c, w)| acc + w.clone() * x[*c].clone()))
            .collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Affine<T>) -> Result<Self> {
        if self.in_dim != inner.out_dim() {
            return Err(Error::Dimension(format!(
                "cannot compose: outer expects {} inputs, inner produces {}",
                self.in_dim,
                inner.out_dim()
            )));
        }
        let mut rows = Vec::with_capacity(self.rows.len());
        let mut bias = Vec::with_capacity(self.rows.len());
        for (r, b) in self.rows.iter().zip(&self.bias) {
            let mut acc: Vec<(usize, T)> = Vec::new();
            let mut bb = b.clone();
            for (k, w) in r {
                bb = bb + w.clone() * inner.bias[*k].clone();
                acc.extend(inner.rows[*k].iter().map(|(c, v)| (*c, w.clone() * v.clone())));
            }
            rows.push(compact_row(acc));
            bias.push(bb);
        }
        Ok(Self { in_dim: inner.in_dim, rows, bias })
    }

    /// Stacks outputs of maps sharing the same input.
    pub fn vstack(maps: &[Affine<T>]) -> Result<Self> {
        let in_dim = maps.first().map(|m| m.in_dim).unwrap_or(0);
        if maps.iter().any(|m| m.in_dim != in_dim) {
            return Err(Error::Dimension("vstack needs equal input dimensions".into()));
        }
        Ok(Self {
            in_dim,
            rows: maps.iter().flat_map(|m| m.rows.iter().cloned()).collect(),
            bias: maps.iter().flat_map(|m| m.bias.iter().cloned()).collect(),
        })
    }

    /// Block-diagonal map acting on concatenated inputs.
    pub fn block_diag(maps: &[Affine<T>]) -> Self {
        let mut offset = 0;
        let mut rows = Vec::new();
        let mut bias = Vec::new();
        for m in maps {
            rows.extend(m.rows.iter().map(|r| r.iter().map(|(c, v)| (c + offset, v.clone())).collect()));
            bias.extend(m.bias.iter().cloned());
            offset += m.in_dim;
        }
        Self { in_dim: offset, rows, bias }
    }

    pub fn coeff_max(&self) -> f64 {
        let w = self.rows.iter().flatten().map(|(_, v)| v.abs().to_f64()).fold(0.0, f64::max);
        self.bias.iter().map(|b| b.abs().to_f64()).fold(w, f64::max)
    }

    pub fn cast<U: Scalar>(&self) -> Affine<U> {
        Affine {
            in_dim: self.in_dim,
            rows: self.rows.iter().map(|r| r.iter().map(|(c, v)| (*c, cast(v))).collect()).collect(),
            bias: self.bias.iter().map(cast).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub map: Affine<T>,
    pub activation: Activation,
}

impl<T: Scalar> Layer<T> {
    pub fn relu(map: Affine<T>) -> Self {
        Self { map, activation: Activation::Relu }
    }

    pub fn linear(map: Affine<T>) -> Self {
        Self { map, activation: Activation::Linear }
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        let y = self.map.apply(x);
        match self.activation {
            Activation::Relu => y.into_iter().map(|v| v.relu()).collect(),
            Activation::Linear => y,
        }
    }
}

/// Feed-forward network; only the final layer may be linear.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluNetwork<T> {
    input_dim: usize,
    layers: Vec<Layer<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetStats {
    pub width: usize,
    pub depth: usize,
    pub coeff_max: f64,
    pub layer_count: usize,
}

impl<T: Scalar> ReluNetwork<T> {
    pub fn identity(d: usize) -> Self {
        Self { input_dim: d, layers: Vec::new() }
    }

    pub fn affine(map: Affine<T>) -> Self {
        Self { input_dim: map.in_dim(), layers: vec![Layer::linear(map)] }
    }

    /// Validates dimensions and folds linear layers into their successors.
    pub fn from_layers(input_dim: usize, layers: Vec<Layer<T>>) -> Result<Self> {
        let mut net = Self::identity(input_dim);
        for layer in layers {
            if layer.map.in_dim() != net.output_dim() {
                return Err(Error::Dimension(format!(
                    "layer expects {} inputs but receives {}",
                    layer.map.in_dim(),
                    net.output_dim()
                )));
            }
            net.push(layer)?;
        }
        Ok(net)
    }

    fn push(&mut self, layer: Layer<T>) -> Result<()> {
        match self.layers.last() {
            Some(last) if last.activation == Activation::Linear => {
                let last = self.layers.pop().expect("nonempty");
                let map = layer.map.compose(&last.map)?;
                self.layers.push(Layer { map, activation: layer.activation });
            }
            _ => self.layers.push(layer),
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.map.out_dim()).unwrap_or(self.input_dim)
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| l.activation == Activation::Relu).count()
    }

    pub fn ends_linear(&self) -> bool {
        self.layers.last().is_none_or(|l| l.activation == Activation::Linear)
    }

    pub fn width(&self) -> usize {
        self.layers.iter().map(|l| l.map.out_dim()).max().unwrap_or(0)
    }

    pub fn coeff_max(&self) -> f64 {
        self.layers.iter().map(|l| l.map.coeff_max()).fold(0.0, f64::max)
    }

    pub fn stats(&self) -> NetStats {
        NetStats { width: self.width(), depth: self.depth(), coeff_max: self.coeff_max(), layer_count: self.layers.len() }
    }

    pub fn nnz(&self) -> usize {
        self.layers.iter().map(|l| l.map.nnz()).sum()
    }

    pub fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension(format!("input has length {}, network expects {}", x.len(), self.input_dim)));
        }
        let mut cur = x.to_vec();
        for layer in &self.layers {
            cur = layer.forward(&cur);
        }
        Ok(cur)
    }

    /// Evaluates a scalar-input network on many points.
    pub fn eval_batch(&self, xs: &[T]) -> Result<Vec<Vec<T>>> {
        xs.iter().map(|x| self.eval(std::slice::from_ref(x))).collect()
    }

    pub fn serial(a: &Self, b: &Self) -> Result<Self> {
        if a.output_dim() != b.input_dim {
            return Err(Error::Dimension(format!(
                "serial: first network outputs {}, second expects {}",
                a.output_dim(),
                b.input_dim
            )));
        }
        let mut net = a.clone();
        for layer in &b.layers {
            net.push(layer.clone())?;
        }
        Ok(net)
    }

    pub fn chain(nets: &[Self]) -> Result<Self> {
        let mut iter = nets.iter();
        let first = iter.next().ok_or_else(|| Error::Dimension("empty chain".into()))?.clone();
        iter.try_fold(first, |acc, n| Self::serial(&acc, n))
    }

    pub fn pre_affine(net: &Self, map: Affine<T>) -> Result<Self> {
        Self::serial(&Self::affine(map), net)
    }

    pub fn post_affine(net: &Self, map: Affine<T>) -> Result<Self> {
        Self::serial(net, &Self::affine(map))
    }

    /// ReLU block of the given depth reproducing its input.
    pub fn passthrough(dim: usize, sign: Sign, depth: usize) -> Self {
        let mut layers = Vec::new();
        if depth == 0 {
            return Self::identity(dim);
        }
        match sign {
            Sign::Nonnegative => {
                for _ in 0..depth {
                    layers.push(Layer::relu(Affine::identity(dim)));
                }
            }
            Sign::General => {
                let rows = (0..dim)
                    .map(|i| vec![(i, T::one())])
                    .chain((0..dim).map(|i| vec![(i, -T::one())]))
                    .collect();
                layers.push(Layer::relu(Affine { in_dim: dim, rows, bias: vec![T::zero(); 2 * dim] }));
                for _ in 1..depth {
                    layers.push(Layer::relu(Affine::identity(2 * dim)));
                }
                let rows = (0..dim).map(|i| vec![(i, T::one()), (i + dim, -T::one())]).collect();
                layers.push(Layer::linear(Affine { in_dim: 2 * dim, rows, bias: vec![T::zero(); dim] }));
            }
        }
        Self { input_dim: dim, layers }
    }

    /// Appends passthrough layers until the depth reaches `target`.
    pub fn pad_depth(&self, target: usize, sign: Sign) -> Result<Self> {
        let d = self.depth();
        if d >= target {
            return Ok(self.clone());
        }
        Self::serial(self, &Self::passthrough(self.output_dim(), sign, target - d))
    }

    /// Runs networks on consecutive slices of the input and concatenates outputs.
    pub fn parallel(nets: &[Self]) -> Result<Self> {
        Self::parallel_signed(nets, &vec![Sign::General; nets.len()])
    }

    /// As [`Self::parallel`], padding shallower members with passthroughs of the given sign.
    pub fn parallel_signed(nets: &[Self], signs: &[Sign]) -> Result<Self> {
        if nets.is_empty() {
            return Ok(Self::identity(0));
        }
        let depth = nets.iter().map(|n| n.depth()).max().unwrap_or(0);
        let padded = nets
            .iter()
            .zip(signs)
            .map(|(n, s)| n.pad_depth(depth, *s))
            .collect::<Result<Vec<_>>>()?;
        let any_linear = padded.iter().any(|n| n.ends_linear());
        let normalized: Vec<Vec<Layer<T>>> = padded
            .into_iter()
            .map(|n| {
                let mut layers = n.layers;
                let out = layers.last().map(|l| l.map.out_dim()).unwrap_or(n.input_dim);
                if any_linear && layers.last().is_none_or(|l| l.activation == Activation::Relu) {
                    layers.push(Layer::linear(Affine::identity(out)));
                }
                layers
            })
            .collect();
        let count = normalized[0].len();
        let mut layers = Vec::with_capacity(count);
        for i in 0..count {
            let maps: Vec<Affine<T>> = normalized.iter().map(|ls| ls[i].map.clone()).collect();
            layers.push(Layer { map: Affine::block_diag(&maps), activation: normalized[0][i].activation });
        }
        Ok(Self { input_dim: nets.iter().map(|n| n.input_dim).sum(), layers })
    }

    /// Runs networks on a shared input and concatenates outputs.
    pub fn fan_out(nets: &[Self]) -> Result<Self> {
        Self::fan_out_signed(nets, &vec![Sign::General; nets.len()])
    }

    pub fn fan_out_signed(nets: &[Self], signs: &[Sign]) -> Result<Self> {
        let d = nets.first().map(|n| n.input_dim).unwrap_or(0);
        if nets.iter().any(|n| n.input_dim != d) {
            return Err(Error::Dimension("fan_out needs equal input dimensions".into()));
        }
        let copy = Affine::vstack(&vec![Affine::identity(d); nets.len()])?;
        Self::pre_affine(&Self::parallel_signed(nets, signs)?, copy)
    }

    pub fn cast<U: Scalar>(&self) -> ReluNetwork<U> {
        ReluNetwork {
            input_dim: self.input_dim,
            layers: self
                .layers
                .iter()
                .map(|l| Layer { map: l.map.cast(), activation: l.activation })
                .collect(),
        }
    }
}

/// `min(u, v) = v − ReLU(v − u)` on inputs `(u, v)`; one unit for `v` when it is nonnegative.
pub fn min_gadget<T: Scalar>(sign: Sign) -> ReluNetwork<T> {
    let one = T::one();
    let (hidden, out) = match sign {
        Sign::Nonnegative => (
            vec![vec![(0, -one.clone()), (1, one.clone())], vec![(1, one.clone())]],
            vec![vec![(0, -one.clone()), (1, one.clone())]],
        ),
        Sign::General => (
            vec![vec![(0, -one.clone()), (1, one.clone())], vec![(1, one.clone())], vec![(1, -one.clone())]],
            vec![vec![(0, -one.clone()), (1, one.clone()), (2, -one.clone())]],
        ),
    };
    let h = hidden.len();
    ReluNetwork {
        input_dim: 2,
        layers: vec![
            Layer::relu(Affine { in_dim: 2, rows: hidden, bias: vec![T::zero(); h] }),
            Layer::linear(Affine { in_dim: h, rows: out, bias: vec![T::zero()] }),
        ],
    }
}
