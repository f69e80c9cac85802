//! Differential verification of compiled networks against oracle curves, plus SVG and CSV output.

use std::fmt;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cpwl::CpwlCurve;
use crate::error::{Error, Result};
use crate::instance::{Instance, Mode};
use crate::loop_controller::LoopConfig;
use crate::network::ReluNetwork;

/// Largest number of stage breakpoints added to a verification grid.
pub const MAX_GRID_BREAKPOINTS: usize = 400_000;

/// Uniform points on `[−½, L + ½]`, every `k/Mⁿ` in `[0, L]`, and probes `k/Mⁿ ± δ/2`.
pub fn verification_grid(m: usize, n: usize, window: usize, uniform: usize, delta: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    let (lo, hi) = (-0.5, window as f64 + 0.5);
    if uniform >= 2 {
        pts.extend((0..uniform).map(|i| lo + (hi - lo) * i as f64 / (uniform - 1) as f64));
    }
    let cells = (m as f64).powi(n as i32) * window as f64;
    if cells <= MAX_GRID_BREAKPOINTS as f64 {
        let cells = cells as usize;
        let scale = (m as f64).powi(n as i32);
        for k in 0..=cells {
            let t = k as f64 / scale;
            pts.push(t);
            if delta > 0.0 {
                pts.push(t - delta / 2.0);
                pts.push(t + delta / 2.0);
            }
        }
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    pts
}

/// Maximum absolute and relative deviation of `net` from `oracle` on `grid`.
pub fn compare(net: &ReluNetwork<f64>, oracle: &CpwlCurve<f64>, grid: &[f64]) -> Result<(f64, f64)> {
    if net.input_dim() != 1 || net.output_dim() != oracle.dim() {
        return Err(Error::Dimension(format!(
            "network maps {} -> {}, oracle has dimension {}",
            net.input_dim(),
            net.output_dim(),
            oracle.dim()
        )));
    }
    let mut abs = 0f64;
    let mut scale = 0f64;
    for t in grid {
        let y = net.eval(&[*t])?;
        let o = oracle.eval(t);
        for (a, b) in y.iter().zip(&o) {
            let d = (a - b).abs();
            abs = if d.is_nan() { f64::INFINITY } else { abs.max(d) };
            scale = scale.max(b.abs());
        }
    }
    Ok((abs, abs / scale.max(1.0)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
}

/// Outcome of one differential run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub instance: String,
    pub mode: String,
    pub stage: usize,
    pub grid_size: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub width: usize,
    pub depth: usize,
    pub coeff_max: f64,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "instance {} ({} mode), stage {}", self.instance, self.mode, self.stage)?;
        writeln!(f, "  grid points   {}", self.grid_size)?;
        writeln!(f, "  max abs error {:.3e} (tolerance {:.1e})", self.max_abs_error, self.tolerance)?;
        writeln!(f, "  max rel error {:.3e}", self.max_rel_error)?;
        writeln!(f, "  width {}  depth {}  coeff_max {:.6e}", self.width, self.depth, self.coeff_max)?;
        for c in &self.checks {
            writeln!(f, "  {:<28} {}", c.name, if c.pass { "PASS" } else { "FAIL" })?;
        }
        write!(f, "  result {} in {:.3}s", if self.pass { "PASS" } else { "FAIL" }, self.wall_time_s)
    }
}

/// Settings of a verification run.
#[derive(Clone, Debug)]
pub struct VerifySettings {
    pub stage: usize,
    pub mode: Mode,
    pub grid: usize,
    pub tol: f64,
    pub cap: f64,
}

/// Checks `net` against the instance oracle; used for freshly compiled and for loaded networks.
pub fn verify_network(
    instance: &Instance<f64>,
    net: &ReluNetwork<f64>,
    settings: &VerifySettings,
    cfg: &LoopConfig<f64>,
    started: Instant,
) -> Result<VerifyReport> {
    let oracle = instance.oracle(settings.stage, settings.mode, settings.cap)?;
    let delta = cfg.with_n(settings.stage.max(1)).delta_n();
    let grid = verification_grid(instance.m(), settings.stage, instance.window(), settings.grid, delta);
    let (abs, rel) = compare(net, &oracle, &grid)?;
    let stats = net.stats();
    let within = abs <= settings.tol;
    let shape = net.input_dim() == 1 && net.output_dim() == instance.output_dim();
    Ok(VerifyReport {
        instance: instance.name.clone(),
        mode: settings.mode.to_string(),
        stage: settings.stage,
        grid_size: grid.len(),
        max_abs_error: abs,
        max_rel_error: rel,
        tolerance: settings.tol,
        width: stats.width,
        depth: stats.depth,
        coeff_max: stats.coeff_max,
        checks: vec![
            CheckResult { name: "shape".into(), pass: shape },
            CheckResult { name: "network matches oracle".into(), pass: within },
        ],
        pass: within && shape,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Compiles the instance at the requested stage and verifies it.
pub fn verify(instance: &Instance<f64>, settings: &VerifySettings, cfg: &LoopConfig<f64>) -> Result<VerifyReport> {
    let started = Instant::now();
    let compiled = instance.compile(settings.stage, settings.mode, cfg)?;
    verify_network(instance, &compiled.net, settings, cfg, started)
}

/// `count + 1` uniform parameters on `[0, L]`.
pub fn sample_parameters(window: usize, count: usize) -> Vec<f64> {
    let count = count.max(1);
    (0..=count).map(|i| window as f64 * i as f64 / count as f64).collect()
}

/// Default sampling resolution `4·L·Mⁿ`, at least 1000.
pub fn default_resolution(m: usize, n: usize, window: usize) -> usize {
    ((m as f64).powi(n as i32) * 4.0 * window as f64).max(1000.0) as usize
}

pub fn sample_oracle(curve: &CpwlCurve<f64>, ts: &[f64]) -> Vec<Vec<f64>> {
    ts.iter().map(|t| curve.eval(t)).collect()
}

pub fn sample_network(net: &ReluNetwork<f64>, ts: &[f64]) -> Result<Vec<Vec<f64>>> {
    ts.iter().map(|t| net.eval(&[*t])).collect()
}

/// Rows `t, y_1, …, y_p` with 17 significant digits.
pub fn to_csv(ts: &[f64], values: &[Vec<f64>]) -> String {
    let p = values.first().map_or(0, |v| v.len());
    let mut out = String::from("t");
    for i in 1..=p {
        let _ = write!(out, ",y{i}");
    }
    out.push('\n');
    for (t, v) in ts.iter().zip(values) {
        let _ = write!(out, "{t:.16e}");
        for y in v {
            let _ = write!(out, ",{y:.16e}");
        }
        out.push('\n');
    }
    out
}

/// Single-polyline SVG in a unit view box with a 5% margin; planar curves use their first two
/// coordinates, scalar curves are drawn as graphs over `t`.
pub fn to_svg(ts: &[f64], values: &[Vec<f64>]) -> String {
    let mut pts = String::new();
    for (t, v) in ts.iter().zip(values) {
        let (x, y) = match v.as_slice() {
            [y] => (*t, *y),
            [x, y, ..] => (*x, *y),
            [] => continue,
        };
        if !pts.is_empty() {
            pts.push(' ');
        }
        let _ = write!(pts, "{:.6},{:.6}", x, 1.0 - y);
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-0.05 -0.05 1.1 1.1\">\n\
         <polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.002\" points=\"{pts}\"/>\n\
         </svg>\n"
    )
}
