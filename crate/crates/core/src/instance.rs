//! Named problem instances: how to build their oracle curve and their compiled network at stage `n`.

use std::fmt;
use std::str::FromStr;

use crate::compiler::{compile_homogeneous, CompiledIterate};
use crate::cpwl::CpwlCurve;
use crate::error::{Error, Result};
use crate::gallery::{self, ConnectorInstance, PolygonalGenerator, StateGenerator};
use crate::io::RuleFile;
use crate::loop_controller::LoopConfig;
use crate::reductions::{
    compile_affine, compile_anchored, compile_job_sum, direct_stage_iterate, expand_stage_iterate, FiniteStateSystem,
    ForcingSchedule,
};
use crate::refinement::RefinementOp;
use crate::scalar::Scalar;

/// Default oracle breakpoint cap.
pub const DEFAULT_MAX_BREAKPOINTS: f64 = 1e7;

/// Oracle cap, overridable through `REFINET_MAX_BREAKPOINTS`.
pub fn breakpoint_cap() -> f64 {
    std::env::var("REFINET_MAX_BREAKPOINTS")
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|v| *v > 0.0)
        .unwrap_or(DEFAULT_MAX_BREAKPOINTS)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Homogeneous,
    Affine,
    Anchored,
    Stacked,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homogeneous" => Ok(Self::Homogeneous),
            "affine" => Ok(Self::Affine),
            "anchored" => Ok(Self::Anchored),
            "stacked" => Ok(Self::Stacked),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Homogeneous => "homogeneous",
            Self::Affine => "affine",
            Self::Anchored => "anchored",
            Self::Stacked => "stacked",
        };
        f.write_str(s)
    }
}

/// User-supplied rule read from an rule file.
#[derive(Clone, Debug)]
pub struct CustomRule<T> {
    pub op: RefinementOp<T>,
    pub curve: Option<CpwlCurve<T>>,
    pub anchor: Option<CpwlCurve<T>>,
    pub forcing: Option<ForcingSchedule<T>>,
    pub system: Option<FiniteStateSystem<T>>,
}

#[derive(Clone, Debug)]
pub enum Kind<T> {
    Polygonal(PolygonalGenerator<T>),
    States(StateGenerator<T>),
    Connector(ConnectorInstance<T>),
    Custom(CustomRule<T>),
}

#[derive(Clone, Debug)]
pub struct Instance<T> {
    pub name: String,
    pub kind: Kind<T>,
}

impl Instance<f64> {
    pub fn from_rule_file(name: &str, rule: RuleFile) -> Self {
        Self {
            name: name.to_string(),
            kind: Kind::Custom(CustomRule {
                op: rule.op,
                curve: rule.curve,
                anchor: rule.anchor,
                forcing: rule.forcing,
                system: rule.system,
            }),
        }
    }
}

impl<T: Scalar> Instance<T> {
    /// Gallery example by name; `dim` selects `p` for `morton` and `hilbert_rp`.
    pub fn example(name: &str, dim: Option<usize>) -> Result<Self> {
        let kind = match name {
            "koch" => Kind::Polygonal(gallery::koch()?),
            "levy" => Kind::Polygonal(gallery::levy()?),
            "heighway" => Kind::Polygonal(gallery::heighway()?),
            "hilbert_type" => Kind::Polygonal(gallery::hilbert_type()?),
            "hilbert_rp" => Kind::Polygonal(gallery::hilbert_rp(dim.unwrap_or(3))?),
            "gosper" => Kind::States(gallery::gosper_system()?),
            "hilbert" => Kind::Connector(gallery::hilbert_connector()?),
            "morton" => Kind::Connector(gallery::morton(dim.unwrap_or(2))?),
            other => {
                return Err(Error::Parse(format!(
                    "unknown example {other:?}; choose one of {}",
                    gallery::GALLERY.join(", ")
                )))
            }
        };
        Ok(Self { name: name.to_string(), kind })
    }

    /// Operator whose iterates the compiled network realizes.
    pub fn operator(&self) -> Result<RefinementOp<T>> {
        match &self.kind {
            Kind::Polygonal(g) => Ok(g.op.clone()),
            Kind::States(g) => Ok(g.system.stack(1)?.0),
            Kind::Connector(c) => Ok(c.op.clone()),
            Kind::Custom(c) => Ok(c.op.clone()),
        }
    }

    pub fn m(&self) -> usize {
        match &self.kind {
            Kind::Polygonal(g) => g.m(),
            Kind::States(g) => g.m,
            Kind::Connector(c) => c.rule.m(),
            Kind::Custom(c) => c.op.m(),
        }
    }

    /// Window `L`: the compiled curve is nonconstant only on `[0, L]`.
    pub fn window(&self) -> usize {
        match &self.kind {
            Kind::Custom(c) => c.op.l(),
            _ => 1,
        }
    }

    pub fn output_dim(&self) -> usize {
        match &self.kind {
            Kind::Polygonal(g) => g.p(),
            Kind::States(g) => g.p * g.states(),
            Kind::Connector(c) => c.rule.p(),
            Kind::Custom(c) => c.op.p(),
        }
    }

    pub fn default_mode(&self) -> Mode {
        match &self.kind {
            Kind::Polygonal(_) => Mode::Anchored,
            Kind::States(_) => Mode::Stacked,
            Kind::Connector(_) => Mode::Affine,
            Kind::Custom(c) => {
                if c.system.is_some() {
                    Mode::Stacked
                } else if c.anchor.is_some() {
                    Mode::Anchored
                } else if c.forcing.is_some() {
                    Mode::Affine
                } else {
                    Mode::Homogeneous
                }
            }
        }
    }

    fn unsupported(&self, mode: Mode) -> Error {
        Error::Precondition(format!("instance {} does not support mode {mode}; use {}", self.name, self.default_mode()))
    }

    /// Stage-`n` curve computed without any network.
    pub fn oracle(&self, n: usize, mode: Mode, cap: f64) -> Result<CpwlCurve<T>> {
        match (&self.kind, mode) {
            (Kind::Polygonal(g), Mode::Anchored) => g.oracle(n, cap),
            (Kind::States(g), Mode::Stacked | Mode::Anchored) => g.oracle(n, cap),
            (Kind::Connector(c), Mode::Affine | Mode::Anchored) => c.oracle(n, cap),
            (Kind::Custom(c), _) => self.custom_oracle(c, n, mode, cap),
            _ => Err(self.unsupported(mode)),
        }
    }

    fn custom_oracle(&self, c: &CustomRule<T>, n: usize, mode: Mode, cap: f64) -> Result<CpwlCurve<T>> {
        let p = c.op.p();
        let l = c.op.l();
        let estimate = |count: usize| {
            let needed = c.op.breakpoint_estimate(count, n);
            if needed > cap {
                Err(Error::CapExceeded { needed, cap })
            } else {
                Ok(())
            }
        };
        match mode {
            Mode::Homogeneous => {
                let gamma = c.curve.as_ref().ok_or_else(|| Error::Precondition("homogeneous mode needs a curve".into()))?;
                c.op.iterate(gamma, n, cap)
            }
            Mode::Affine => {
                let gamma = c.curve.clone().unwrap_or_else(|| CpwlCurve::zero(p, l));
                let schedule = c.forcing.clone().unwrap_or_else(|| ForcingSchedule::zero(p, l));
                estimate(gamma.breakpoint_count() + 64)?;
                direct_stage_iterate(&c.op, &gamma, &schedule, n)
            }
            Mode::Anchored => {
                let anchor = c.anchor.as_ref().ok_or_else(|| Error::Precondition("anchored mode needs an anchor".into()))?;
                let eta = c.curve.clone().unwrap_or_else(|| CpwlCurve::zero(p, l));
                let b = constant_forcing(c.forcing.as_ref(), p, l)?;
                estimate(anchor.breakpoint_count() + eta.breakpoint_count() + b.breakpoint_count())?;
                direct_stage_iterate(&c.op, &anchor.add(&eta)?, &ForcingSchedule::Constant(b), n)
            }
            Mode::Stacked => {
                let sys = c.system.as_ref().ok_or_else(|| Error::Precondition("stacked mode needs states".into()))?;
                let start = c
                    .anchor
                    .as_ref()
                    .or(c.curve.as_ref())
                    .ok_or_else(|| Error::Precondition("stacked mode needs a curve or an anchor".into()))?;
                estimate(start.breakpoint_count())?;
                let mut states = start.unstack(sys.p);
                for _ in 0..n {
                    states = sys.apply(&states)?;
                }
                CpwlCurve::stack(&states)
            }
        }
    }

    /// Compiled network for stage `n`.
    pub fn compile(&self, n: usize, mode: Mode, cfg: &LoopConfig<T>) -> Result<CompiledIterate<T>> {
        let mut out = match (&self.kind, mode) {
            (Kind::Polygonal(g), Mode::Anchored) => {
                let zero = CpwlCurve::zero(g.p(), 1);
                compile_anchored(&g.op, &zero, &gallery::straight_anchor(g.p()), &zero, n, cfg)?.assembled
            }
            (Kind::States(g), Mode::Stacked | Mode::Anchored) => {
                let (op, _) = g.system.stack(1)?;
                let zero = CpwlCurve::zero(op.p(), 1);
                let mut out = compile_anchored(&op, &zero, &g.anchor()?, &zero, n, cfg)?.assembled;
                out.builder = "stacked".into();
                out
            }
            (Kind::Connector(c), Mode::Affine | Mode::Anchored) => {
                let zero = CpwlCurve::zero(c.rule.p(), 1);
                let jobs = expand_stage_iterate(&c.op, &zero, &c.schedule(), n)?;
                compile_job_sum(&c.op, &jobs, n, cfg, Some(&c.anchor(n)?), "anchored")?
            }
            (Kind::Custom(c), _) => self.custom_compile(c, n, mode, cfg)?,
            _ => return Err(self.unsupported(mode)),
        };
        out.params.insert(0, ("instance".into(), self.name.clone()));
        Ok(out)
    }

    fn custom_compile(&self, c: &CustomRule<T>, n: usize, mode: Mode, cfg: &LoopConfig<T>) -> Result<CompiledIterate<T>> {
        let p = c.op.p();
        let l = c.op.l();
        match mode {
            Mode::Homogeneous => {
                let gamma = c.curve.as_ref().ok_or_else(|| Error::Precondition("homogeneous mode needs a curve".into()))?;
                compile_homogeneous(&c.op, gamma, n, cfg)
            }
            Mode::Affine => {
                let gamma = c.curve.clone().unwrap_or_else(|| CpwlCurve::zero(p, l));
                let schedule = c.forcing.clone().unwrap_or_else(|| ForcingSchedule::zero(p, l));
                compile_affine(&c.op, &gamma, &schedule, n, cfg)
            }
            Mode::Anchored => {
                let anchor = c.anchor.as_ref().ok_or_else(|| Error::Precondition("anchored mode needs an anchor".into()))?;
                let eta = c.curve.clone().unwrap_or_else(|| CpwlCurve::zero(p, l));
                let b = constant_forcing(c.forcing.as_ref(), p, l)?;
                Ok(compile_anchored(&c.op, &b, anchor, &eta, n, cfg)?.assembled)
            }
            Mode::Stacked => {
                if c.system.is_none() {
                    return Err(Error::Precondition("stacked mode needs states".into()));
                }
                let mut out = match (&c.anchor, &c.curve) {
                    (Some(anchor), _) => {
                        let zero = CpwlCurve::zero(p, l);
                        compile_anchored(&c.op, &zero, anchor, &zero, n, cfg)?.assembled
                    }
                    (None, Some(gamma)) => compile_homogeneous(&c.op, gamma, n, cfg)?,
                    (None, None) => return Err(Error::Precondition("stacked mode needs a curve or an anchor".into())),
                };
                out.builder = "stacked".into();
                Ok(out)
            }
        }
    }
}

fn constant_forcing<T: Scalar>(f: Option<&ForcingSchedule<T>>, p: usize, l: usize) -> Result<CpwlCurve<T>> {
    match f {
        None => Ok(CpwlCurve::zero(p, l)),
        Some(ForcingSchedule::Constant(b)) => Ok(b.clone()),
        Some(_) => Err(Error::Precondition("anchored mode needs a single forcing curve with stage \"all\"".into())),
    }
}
