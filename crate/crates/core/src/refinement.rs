//! Refinement operators, base-M digits and the cascade identity.

use crate::cpwl::{merge_grid, CpwlCurve, ScalarCpwl};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{cast, Scalar};

/// `(Vγ)(t) = Σ_j A_j γ(M t − j)` with a finite matrix mask.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementOp<T> {
    m: usize,
    p: usize,
    l: usize,
    mask: Vec<(i64, Matrix<T>)>,
}

impl<T: Scalar> RefinementOp<T> {
    /// Validates dimensions and support preservation; zero matrices are dropped.
    pub fn new(m: usize, p: usize, l: usize, mask: Vec<(i64, Matrix<T>)>) -> Result<Self> {
        if m < 2 {
            return Err(Error::Precondition(format!("dilation M = {m} must be at least 2")));
        }
        if p == 0 || l == 0 {
            return Err(Error::Precondition("p and L must be positive".into()));
        }
        let max = ((m - 1) * l) as i64;
        let mut entries: Vec<(i64, Matrix<T>)> = Vec::new();
        for (j, a) in mask {
            if a.rows() != p || a.cols() != p {
                return Err(Error::Dimension(format!("A_{j} is {}x{}, expected {p}x{p}", a.rows(), a.cols())));
            }
            if a.is_zero() {
                continue;
            }
            if j < 0 || j > max {
                return Err(Error::SupportViolation { j, max });
            }
            match entries.iter_mut().find(|(k, _)| *k == j) {
                Some((_, existing)) => *existing = existing.add(&a),
                None => entries.push((j, a)),
            }
        }
        entries.sort_by_key(|(j, _)| *j);
        Ok(Self { m, p, l, mask: entries })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn mask(&self) -> &[(i64, Matrix<T>)] {
        &self.mask
    }

    pub fn coefficient(&self, j: i64) -> Option<&Matrix<T>> {
        self.mask.iter().find(|(k, _)| *k == j).map(|(_, a)| a)
    }

    /// `S = Σ_j A_j`.
    pub fn sum(&self) -> Matrix<T> {
        self.mask.iter().fold(Matrix::zeros(self.p, self.p), |acc, (_, a)| acc.add(a))
    }

    /// One application of V. Curves with constant tails are accepted; their tails map through `S`.
    pub fn apply(&self, gamma: &CpwlCurve<T>) -> Result<CpwlCurve<T>> {
        if gamma.dim() != self.p {
            return Err(Error::Dimension(format!("curve dimension {} does not match p = {}", gamma.dim(), self.p)));
        }
        if self.mask.is_empty() {
            return Ok(CpwlCurve::zero(self.p, self.l));
        }
        let m = T::usize(self.m);
        let base = gamma.breakpoints();
        let mut ts = Vec::with_capacity(base.len() * self.mask.len());
        for (j, _) in &self.mask {
            let jj = T::int(*j);
            ts.extend(base.iter().map(|b| (b.clone() + jj.clone()) / m.clone()));
        }
        let grid = merge_grid(ts);
        let values: Vec<Vec<T>> = grid.iter().map(|t| self.apply_pointwise(gamma, t)).collect();
        let components = (0..self.p)
            .map(|i| {
                ScalarCpwl::new(grid.iter().cloned().zip(values.iter().map(|v| v[i].clone())).collect())
                    .map(|c| c.simplified())
            })
            .collect::<Result<Vec<_>>>()?;
        CpwlCurve::new(components, self.l)
    }

    /// `(Vγ)(t)` evaluated directly from the definition.
    pub fn apply_pointwise(&self, gamma: &CpwlCurve<T>, t: &T) -> Vec<T> {
        let m = T::usize(self.m);
        let mut acc = vec![T::zero(); self.p];
        for (j, a) in &self.mask {
            let y = gamma.eval(&(m.clone() * t.clone() - T::int(*j)));
            for (o, v) in acc.iter_mut().zip(a.mul_vec(&y)) {
                *o = o.clone() + v;
            }
        }
        acc
    }

    /// `Vⁿγ` by direct iteration, refusing when the breakpoint estimate exceeds `cap`.
    pub fn iterate(&self, gamma: &CpwlCurve<T>, n: usize, cap: f64) -> Result<CpwlCurve<T>> {
        let needed = self.breakpoint_estimate(gamma.breakpoint_count(), n);
        if needed > cap {
            return Err(Error::CapExceeded { needed, cap });
        }
        let mut cur = gamma.clone();
        for _ in 0..n {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }

    /// `(count + n·|mask|)·Mⁿ`.
    pub fn breakpoint_estimate(&self, count: usize, n: usize) -> f64 {
        (count as f64 + (n * self.mask.len()) as f64) * (self.m as f64).powi(n as i32)
    }

    /// `T_q` with blocks `(T_q)_{kℓ} = A_{q + M k − ℓ}` (0-based k, ℓ).
    pub fn block_transition(&self, q: usize) -> Result<BlockTransition<T>> {
        if q >= self.m {
            return Err(Error::Precondition(format!("digit {q} out of range for M = {}", self.m)));
        }
        let (p, l) = (self.p, self.l);
        let mut t = Matrix::zeros(p * l, p * l);
        for k in 0..l {
            for ell in 0..l {
                let j = (q + self.m * k) as i64 - ell as i64;
                if let Some(a) = self.coefficient(j) {
                    for r in 0..p {
                        for c in 0..p {
                            t.set(k * p + r, ell * p + c, a.get(r, c).clone());
                        }
                    }
                }
            }
        }
        Ok(BlockTransition { q, matrix: t })
    }

    pub fn block_transitions(&self) -> Vec<BlockTransition<T>> {
        (0..self.m).map(|q| self.block_transition(q).expect("digit in range")).collect()
    }

    /// `Gⁿ(x) = T_{q₁}⋯T_{qₙ} G(Rⁿx)`.
    pub fn cascade_eval(&self, gamma: &CpwlCurve<T>, x: &T, n: usize) -> Result<Vec<T>> {
        let stream = residual_iterate(x, self.m, n)?;
        let mut v = vectorize(gamma, self.l).eval(stream.residuals.last().expect("n + 1 residuals"));
        let transitions = self.block_transitions();
        for q in stream.digits.iter().rev() {
            v = transitions[*q].matrix.mul_vec(&v);
        }
        Ok(v)
    }

    pub fn cast<U: Scalar>(&self) -> RefinementOp<U> {
        RefinementOp {
            m: self.m,
            p: self.p,
            l: self.l,
            mask: self.mask.iter().map(|(j, a)| (*j, a.map(|v| cast(v)))).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockTransition<T> {
    pub q: usize,
    pub matrix: Matrix<T>,
}

/// Base-M digits and residuals of a point of `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DigitStream<T> {
    pub x: T,
    pub m: usize,
    pub digits: Vec<usize>,
    /// `R⁰(x) = x, …, Rⁿ(x)`.
    pub residuals: Vec<T>,
}

impl<T: Scalar> DigitStream<T> {
    /// `Σ q_j M^{−j} + M^{−n} Rⁿ(x)`.
    pub fn reconstruct(&self) -> T {
        let m = T::usize(self.m);
        let mut scale = T::one();
        let mut acc = T::zero();
        for q in &self.digits {
            scale = scale / m.clone();
            acc = acc + T::usize(*q) * scale.clone();
        }
        acc + scale * self.residuals.last().cloned().unwrap_or_else(T::zero)
    }

    pub fn last_residual(&self) -> &T {
        self.residuals.last().expect("at least one residual")
    }
}

/// `(Q(x), R(x))` with `Q(1) = M − 1`, `R(1) = 1` and a snap onto cell boundaries.
pub fn digit_residual<T: Scalar>(x: &T, m: usize) -> Result<(usize, T)> {
    if *x < T::zero() || *x > T::one() {
        return Err(Error::Domain(x.to_f64()));
    }
    if x.is_one() {
        return Ok((m - 1, T::one()));
    }
    let y = T::usize(m) * x.clone();
    let nearest = y.round();
    if (y.clone() - nearest.clone()).abs() < T::snap_eps() || y == nearest {
        let q = nearest.to_f64() as usize;
        if q >= m {
            return Ok((m - 1, T::one()));
        }
        return Ok((q, T::zero()));
    }
    let f = y.floor();
    let q = (f.to_f64() as usize).min(m - 1);
    Ok((q, y - T::usize(q)))
}

pub fn residual_iterate<T: Scalar>(x: &T, m: usize, n: usize) -> Result<DigitStream<T>> {
    if *x < T::zero() || *x > T::one() {
        return Err(Error::Domain(x.to_f64()));
    }
    let mut digits = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n + 1);
    residuals.push(x.clone());
    let mut r = x.clone();
    for _ in 0..n {
        let (q, next) = digit_residual(&r, m)?;
        digits.push(q);
        residuals.push(next.clone());
        r = next;
    }
    Ok(DigitStream { x: x.clone(), m, digits, residuals })
}

/// `G(x) = (γ(x), γ(x + 1), …, γ(x + L − 1))` on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct Vectorized<'a, T> {
    curve: &'a CpwlCurve<T>,
    l: usize,
}

pub fn vectorize<T: Scalar>(gamma: &CpwlCurve<T>, l: usize) -> Vectorized<'_, T> {
    Vectorized { curve: gamma, l }
}

impl<T: Scalar> Vectorized<'_, T> {
    pub fn dim(&self) -> usize {
        self.curve.dim() * self.l
    }

    pub fn eval(&self, x: &T) -> Vec<T> {
        (0..self.l).flat_map(|k| self.curve.eval(&(x.clone() + T::usize(k)))).collect()
    }

    /// Block `k` (0-based) as a curve in `x`.
    pub fn block(&self, k: usize) -> CpwlCurve<T> {
        self.curve
            .translate_scale(&-T::usize(k), &T::one())
            .expect("unit dilation")
    }
}
