//! Continuous piecewise-linear functions and curves.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{cast, Scalar};

/// Scalar CPwL function with constant tails.
///
/// The left tail equals the value at the first breakpoint and the right tail the
/// value at the last one, so only the breakpoint list is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarCpwl<T> {
    points: Vec<(T, T)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineOp {
    Sum,
    Min,
    Max,
}

fn cmp<T: PartialOrd>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// Sorted union of abscissae with near-duplicates merged.
pub fn merge_grid<T: Scalar>(mut ts: Vec<T>) -> Vec<T> {
    ts.sort_by(cmp);
    let mut out: Vec<T> = Vec::with_capacity(ts.len());
    for t in ts {
        match out.last() {
            Some(last) if T::near(last, &t) => {}
            _ => out.push(t),
        }
    }
    out
}

impl<T: Scalar> ScalarCpwl<T> {
    pub fn new(points: Vec<(T, T)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Breakpoints("empty breakpoint list".into()));
        }
        for w in points.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(Error::Breakpoints(format!(
                    "abscissae must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn constant(c: T) -> Self {
        Self { points: vec![(T::zero(), c)] }
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    /// Unit-height hat with the given left end, peak and right end.
    pub fn hat(a: T, b: T, c: T) -> Result<Self> {
        Self::new(vec![(a, T::zero()), (b, T::one()), (c, T::zero())])
    }

    pub fn from_f64(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().map(|&(t, v)| (T::lit(t), T::lit(v))).collect())
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn abscissae(&self) -> Vec<T> {
        self.points.iter().map(|p| p.0.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn left_tail(&self) -> &T {
        &self.points[0].1
    }

    pub fn right_tail(&self) -> &T {
        &self.points[self.points.len() - 1].1
    }

    pub fn first_t(&self) -> &T {
        &self.points[0].0
    }

    pub fn last_t(&self) -> &T {
        &self.points[self.points.len() - 1].0
    }

    pub fn eval(&self, t: &T) -> T {
        let idx = self.points.partition_point(|p| p.0 <= *t);
        if idx == 0 {
            return self.points[0].1.clone();
        }
        if idx == self.points.len() {
            return self.points[idx - 1].1.clone();
        }
        let (t0, v0) = &self.points[idx - 1];
        let (t1, v1) = &self.points[idx];
        if t == t0 {
            return v0.clone();
        }
        v0.clone() + (v1.clone() - v0.clone()) * (t.clone() - t0.clone()) / (t1.clone() - t0.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.points.iter().all(|p| p.1.is_zero())
    }

    pub fn has_zero_tails(&self) -> bool {
        self.left_tail().is_zero() && self.right_tail().is_zero()
    }

    pub fn max_abs(&self) -> T {
        self.points.iter().map(|p| p.1.abs()).fold(T::zero(), T::max_of)
    }

    /// Samples `f` on a merged grid of abscissae.
    pub fn sample_on(grid: &[T], f: impl Fn(&T) -> T) -> Self {
        let points: Vec<(T, T)> = grid.iter().map(|t| (t.clone(), f(t))).collect();
        if points.is_empty() {
            return Self::zero();
        }
        Self { points }
    }

    pub fn combine(&self, other: &Self, op: CombineOp) -> Self {
        let mut ts = self.abscissae();
        ts.extend(other.abscissae());
        let grid = merge_grid(ts);
        let mut full = grid.clone();
        if op != CombineOp::Sum {
            for w in grid.windows(2) {
                let da = self.eval(&w[0]) - other.eval(&w[0]);
                let db = self.eval(&w[1]) - other.eval(&w[1]);
                if (da.is_positive() && db.is_negative()) || (da.is_negative() && db.is_positive()) {
                    let s = da.clone() / (da - db);
                    full.push(w[0].clone() + (w[1].clone() - w[0].clone()) * s);
                }
            }
            full = merge_grid(full);
        }
        Self::sample_on(&full, |t| {
            let (a, b) = (self.eval(t), other.eval(t));
            match op {
                CombineOp::Sum => a + b,
                CombineOp::Min => T::min_of(a, b),
                CombineOp::Max => T::max_of(a, b),
            }
        })
        .simplified()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, CombineOp::Sum)
    }

    pub fn scale(&self, s: &T) -> Self {
        let points = self.points.iter().map(|(t, v)| (t.clone(), v.clone() * s.clone())).collect();
        Self { points }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-T::one()))
    }

    /// Returns `t ↦ f(s·t − δ)`.
    pub fn translate_scale(&self, shift: &T, dilation: &T) -> Result<Self> {
        if dilation.is_zero() {
            return Err(Error::DegenerateDilation);
        }
        let mut points: Vec<(T, T)> = self
            .points
            .iter()
            .map(|(t, v)| ((t.clone() + shift.clone()) / dilation.clone(), v.clone()))
            .collect();
        if dilation.is_negative() {
            points.reverse();
        }
        Ok(Self { points })
    }

    /// Drops breakpoints that do not change the function.
    pub fn simplified(&self) -> Self {
        let mut pts: Vec<(T, T)> = Vec::with_capacity(self.points.len());
        for p in &self.points {
            while pts.len() >= 2 {
                let (t0, v0) = &pts[pts.len() - 2];
                let (t1, v1) = &pts[pts.len() - 1];
                let interp = v0.clone()
                    + (p.1.clone() - v0.clone()) * (t1.clone() - t0.clone()) / (p.0.clone() - t0.clone());
                if T::near(&interp, v1) {
                    pts.pop();
                } else {
                    break;
                }
            }
            pts.push(p.clone());
        }
        while pts.len() >= 2 && pts[0].1 == pts[1].1 {
            pts.remove(0);
        }
        while pts.len() >= 2 && pts[pts.len() - 1].1 == pts[pts.len() - 2].1 {
            pts.pop();
        }
        Self { points: pts }
    }

    pub fn cast<U: Scalar>(&self) -> ScalarCpwl<U> {
        ScalarCpwl { points: self.points.iter().map(|(t, v)| (cast(t), cast(v))).collect() }
    }

    /// Sets both tails to exactly zero by zeroing the end values.
    pub fn truncate_tails(&self) -> Self {
        let mut points = self.points.clone();
        let n = points.len();
        points[0].1 = T::zero();
        points[n - 1].1 = T::zero();
        Self { points }
    }
}

/// A p-vector CPwL curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CpwlCurve<T> {
    components: Vec<ScalarCpwl<T>>,
    window: usize,
}

impl<T: Scalar> CpwlCurve<T> {
    pub fn new(components: Vec<ScalarCpwl<T>>, window: usize) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Dimension("a curve needs at least one component".into()));
        }
        if window == 0 {
            return Err(Error::Dimension("support window must be at least 1".into()));
        }
        Ok(Self { components, window })
    }

    pub fn zero(p: usize, window: usize) -> Self {
        Self { components: vec![ScalarCpwl::zero(); p.max(1)], window: window.max(1) }
    }

    /// Constant curve; useful as the initial stage of connector recursions.
    pub fn constant(v: &[T], window: usize) -> Self {
        Self { components: v.iter().map(|c| ScalarCpwl::constant(c.clone())).collect(), window }
    }

    /// Polyline through `points` at parameters `ts`, extended by constants.
    pub fn polyline(ts: &[T], points: &[Vec<T>], window: usize) -> Result<Self> {
        if ts.len() != points.len() || ts.is_empty() {
            return Err(Error::Dimension("polyline needs one parameter per vertex".into()));
        }
        let p = points[0].len();
        let components = (0..p)
            .map(|i| ScalarCpwl::new(ts.iter().cloned().zip(points.iter().map(|x| x[i].clone())).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(components, window)
    }

    pub fn components(&self) -> &[ScalarCpwl<T>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ScalarCpwl<T> {
        &self.components[i]
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window.max(1);
        self
    }

    pub fn eval(&self, t: &T) -> Vec<T> {
        self.components.iter().map(|c| c.eval(t)).collect()
    }

    pub fn left_tail(&self) -> Vec<T> {
        self.components.iter().map(|c| c.left_tail().clone()).collect()
    }

    pub fn right_tail(&self) -> Vec<T> {
        self.components.iter().map(|c| c.right_tail().clone()).collect()
    }

    pub fn is_compact(&self) -> bool {
        self.components.iter().all(|c| c.has_zero_tails())
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    /// Checks that the curve has zero tails and vanishes outside `[0, window]`.
    pub fn check_support(&self, window: usize) -> Result<()> {
        let hi = T::usize(window);
        for (i, c) in self.components.iter().enumerate() {
            if !c.has_zero_tails() {
                return Err(Error::NonCompact(format!("component {} has nonzero tails", i + 1)));
            }
            for w in c.points().windows(2) {
                let ((t0, v0), (t1, v1)) = (&w[0], &w[1]);
                if (!v0.is_zero() || !v1.is_zero()) && (*t0 < T::zero() || *t1 > hi) {
                    return Err(Error::NonCompact(format!(
                        "component {} is nonzero on ({}, {}), outside [0, {}]",
                        i + 1,
                        t0,
                        t1,
                        window
                    )));
                }
            }
        }
        Ok(())
    }

    /// Merged abscissae of all components.
    pub fn breakpoints(&self) -> Vec<T> {
        merge_grid(self.components.iter().flat_map(|c| c.abscissae()).collect())
    }

    pub fn breakpoint_count(&self) -> usize {
        self.components.iter().map(|c| c.len()).sum()
    }

    pub fn max_abs(&self) -> T {
        self.components.iter().map(|c| c.max_abs()).fold(T::zero(), T::max_of)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!("cannot add curves of dimension {} and {}", self.dim(), other.dim())));
        }
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a.add(b)).collect();
        Ok(Self { components, window: self.window.max(other.window) })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-T::one()))
    }

    pub fn scale(&self, s: &T) -> Self {
        Self { components: self.components.iter().map(|c| c.scale(s)).collect(), window: self.window }
    }

    /// Pointwise `A·γ(t)`.
    pub fn apply_matrix(&self, a: &Matrix<T>) -> Result<Self> {
        if a.cols() != self.dim() {
            return Err(Error::Dimension(format!("matrix has {} columns, curve dimension {}", a.cols(), self.dim())));
        }
        let grid = self.breakpoints();
        let values: Vec<Vec<T>> = grid.iter().map(|t| a.mul_vec(&self.eval(t))).collect();
        let components = (0..a.rows())
            .map(|i| {
                let pts = grid.iter().zip(&values).map(|(t, v)| (t.clone(), v[i].clone())).collect();
                ScalarCpwl { points: pts }.simplified()
            })
            .collect();
        Ok(Self { components, window: self.window })
    }

    pub fn translate_scale(&self, shift: &T, dilation: &T) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| c.translate_scale(shift, dilation))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components, window: self.window })
    }

    /// Concatenates the components of several curves.
    pub fn stack(curves: &[Self]) -> Result<Self> {
        let window = curves.iter().map(|c| c.window).max().unwrap_or(1);
        let components = curves.iter().flat_map(|c| c.components.iter().cloned()).collect();
        Self::new(components, window)
    }

    /// Splits a stacked curve into consecutive blocks of `p` components.
    pub fn unstack(&self, p: usize) -> Vec<Self> {
        self.components
            .chunks(p)
            .map(|c| Self { components: c.to_vec(), window: self.window })
            .collect()
    }

    pub fn simplified(&self) -> Self {
        Self { components: self.components.iter().map(|c| c.simplified()).collect(), window: self.window }
    }

    pub fn truncate_tails(&self) -> Self {
        Self { components: self.components.iter().map(|c| c.truncate_tails()).collect(), window: self.window }
    }

    pub fn cast<U: Scalar>(&self) -> CpwlCurve<U> {
        CpwlCurve { components: self.components.iter().map(|c| c.cast()).collect(), window: self.window }
    }
}

/// Nonnegative bump supported in `[rho, 1 - rho]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecialHat<T> {
    base: ScalarCpwl<T>,
    rho: T,
}

impl<T: Scalar> SpecialHat<T> {
    pub fn new(base: ScalarCpwl<T>, rho: T) -> Result<Self> {
        let half = T::ratio(1, 2);
        if !(rho > T::zero() && rho < half) {
            return Err(Error::Precondition(format!("rho = {rho} must lie in (0, 1/2)")));
        }
        if !base.has_zero_tails() {
            return Err(Error::NonCompact("special hat must have zero tails".into()));
        }
        let hi = T::one() - rho.clone();
        for (t, v) in base.points() {
            if v.is_negative() {
                return Err(Error::Precondition(format!("special hat is negative at t = {t}")));
            }
        }
        for w in base.points().windows(2) {
            let ((t0, v0), (t1, v1)) = (&w[0], &w[1]);
            if (!v0.is_zero() || !v1.is_zero()) && (*t0 < rho || *t1 > hi) {
                return Err(Error::Precondition(format!(
                    "special hat is nonzero on ({t0}, {t1}), outside [rho, 1 - rho]"
                )));
            }
        }
        Ok(Self { base, rho })
    }

    pub fn base(&self) -> &ScalarCpwl<T> {
        &self.base
    }

    pub fn rho(&self) -> &T {
        &self.rho
    }

    pub fn eval(&self, t: &T) -> T {
        self.base.eval(t)
    }

    pub fn max_value(&self) -> T {
        self.base.max_abs()
    }
}

/// One summand `a · h(t − δ) · e_μ` of an atomic decomposition. `direction` is 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicTerm<T> {
    pub coefficient: T,
    pub shift: T,
    pub hat: SpecialHat<T>,
    pub direction: usize,
}

impl<T: Scalar> AtomicTerm<T> {
    pub fn eval(&self, t: &T) -> T {
        self.coefficient.clone() * self.hat.eval(&(t.clone() - self.shift.clone()))
    }

    /// The term as a p-dimensional curve.
    pub fn curve(&self, p: usize, window: usize) -> Result<CpwlCurve<T>> {
        let shifted = self.hat.base().translate_scale(&self.shift, &T::one())?.scale(&self.coefficient);
        let mut components = vec![ScalarCpwl::zero(); p];
        components[self.direction] = shifted;
        CpwlCurve::new(components, window)
    }
}

/// Writes a compactly supported curve as a finite sum of translated atomic curves.
///
/// The merged breakpoint grid is refined by midpoints until every nodal hat has
/// support length at most `1 − 2ρ`; each nodal hat is then centred on 1/2 unless
/// it already sits inside `[ρ, 1 − ρ]`.
pub fn decompose_atomic<T: Scalar>(gamma: &CpwlCurve<T>, rho: &T) -> Result<Vec<AtomicTerm<T>>> {
    if !gamma.is_compact() {
        return Err(Error::NonCompact("atomic decomposition needs zero tails".into()));
    }
    let half = T::ratio(1, 2);
    if !(*rho > T::zero() && *rho < half) {
        return Err(Error::Precondition(format!("rho = {rho} must lie in (0, 1/2)")));
    }
    let bound = T::one() - rho.clone() - rho.clone();
    let mut grid = gamma.breakpoints();
    loop {
        let mut refined = false;
        let mut next = Vec::with_capacity(grid.len() * 2);
        next.push(grid[0].clone());
        for i in 1..grid.len() {
            let needs_split = |k: usize| k >= 1 && k + 1 < grid.len() && grid[k + 1].clone() - grid[k - 1].clone() > bound;
            if needs_split(i - 1) || needs_split(i) {
                next.push((grid[i - 1].clone() + grid[i].clone()) * half.clone());
                refined = true;
            }
            next.push(grid[i].clone());
        }
        grid = next;
        if !refined {
            break;
        }
    }
    let lo_ok = rho.clone();
    let hi_ok = T::one() - rho.clone();
    let mut terms = Vec::new();
    for (mu, comp) in gamma.components().iter().enumerate() {
        for i in 1..grid.len().saturating_sub(1) {
            let a = comp.eval(&grid[i]);
            if a.is_zero() {
                continue;
            }
            let (l, c, r) = (&grid[i - 1], &grid[i], &grid[i + 1]);
            let shift = if *l >= lo_ok && *r <= hi_ok {
                T::zero()
            } else {
                (l.clone() + r.clone()) * half.clone() - half.clone()
            };
            let base = ScalarCpwl::hat(l.clone() - shift.clone(), c.clone() - shift.clone(), r.clone() - shift.clone())?;
            let hat = SpecialHat::new(base, rho.clone())?;
            terms.push(AtomicTerm { coefficient: a, shift, hat, direction: mu });
        }
    }
    Ok(terms)
}

/// Sums atomic terms back into a curve.
pub fn reconstruct<T: Scalar>(terms: &[AtomicTerm<T>], p: usize, window: usize) -> Result<CpwlCurve<T>> {
    let mut acc = CpwlCurve::zero(p, window);
    for term in terms {
        acc = acc.add(&term.curve(p, window)?)?;
    }
    Ok(acc)
}
