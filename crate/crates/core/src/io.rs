//! JSON formats: rule files and network files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cpwl::CpwlCurve;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{Activation, Affine, Layer, NetStats, ReluNetwork};
use crate::reductions::{FiniteStateSystem, ForcingSchedule, LambdaRule};
use crate::refinement::RefinementOp;

/// Layers with more weights than this are written in sparse form.
pub const DENSE_LIMIT: usize = 1 << 16;

#[derive(Debug, Deserialize)]
struct MaskEntry {
    j: i64,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Stage {
    Index(usize),
    Word(String),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LambdaEntry {
    Constant(f64),
    Geometric { scale: f64, ratio: f64 },
    Table(Vec<f64>),
}

#[derive(Debug, Deserialize)]
struct TemplateEntry {
    alpha: usize,
    #[serde(default)]
    lambda: Option<LambdaEntry>,
}

#[derive(Debug, Deserialize)]
struct ForcingEntry {
    #[serde(default)]
    stage: Option<Stage>,
    curve: Vec<Vec<f64>>,
    #[serde(default)]
    template: Option<TemplateEntry>,
}

#[derive(Debug, Deserialize)]
struct StatesEntry {
    r: usize,
    transitions: Vec<Vec<usize>>,
    #[serde(rename = "C")]
    c: Vec<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Deserialize)]
struct RawRule {
    #[serde(rename = "M")]
    m: usize,
    p: usize,
    #[serde(rename = "L")]
    l: usize,
    #[serde(default)]
    mask: Vec<MaskEntry>,
    #[serde(default)]
    curve: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    anchor: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    forcing: Option<Vec<ForcingEntry>>,
    #[serde(default)]
    states: Option<StatesEntry>,
}

/// Parsed rule file.
#[derive(Clone, Debug)]
pub struct RuleFile {
    pub op: RefinementOp<f64>,
    pub curve: Option<CpwlCurve<f64>>,
    pub anchor: Option<CpwlCurve<f64>>,
    pub forcing: Option<ForcingSchedule<f64>>,
    pub system: Option<FiniteStateSystem<f64>>,
}

fn matrix(rows: &[Vec<f64>], p: usize, what: &str) -> Result<Matrix<f64>> {
    let m = Matrix::from_rows(rows.to_vec()).ok_or_else(|| Error::Parse(format!("{what}: ragged or empty matrix")))?;
    if m.rows() != p || m.cols() != p {
        return Err(Error::Parse(format!("{what}: expected a {p}x{p} matrix")));
    }
    Ok(m)
}

/// Breakpoint list `[[t, y_1, …, y_d], …]`.
pub fn curve_from_rows(rows: &[Vec<f64>], dim: usize, window: usize) -> Result<CpwlCurve<f64>> {
    if rows.is_empty() || rows.iter().any(|r| r.len() != dim + 1) {
        return Err(Error::Parse(format!("curve rows must hold t and {dim} values")));
    }
    let ts: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let pts: Vec<Vec<f64>> = rows.iter().map(|r| r[1..].to_vec()).collect();
    CpwlCurve::polyline(&ts, &pts, window).map_err(|e| Error::Parse(e.to_string()))
}

fn forcing(entries: &[ForcingEntry], dim: usize, window: usize) -> Result<ForcingSchedule<f64>> {
    if entries.iter().any(|e| e.template.is_some()) {
        let mut slots: BTreeMap<usize, (CpwlCurve<f64>, Option<LambdaRule<f64>>)> = BTreeMap::new();
        for e in entries {
            let t = e.template.as_ref().ok_or_else(|| Error::Parse("mixed template and explicit forcing".into()))?;
            let rule = t.lambda.as_ref().map(|l| match l {
                LambdaEntry::Constant(c) => LambdaRule::Constant(*c),
                LambdaEntry::Geometric { scale, ratio } => LambdaRule::Geometric { scale: *scale, ratio: *ratio },
                LambdaEntry::Table(v) => LambdaRule::Table(v.clone()),
            });
            if t.alpha > 0 && rule.is_none() {
                return Err(Error::Parse(format!("template {} needs a lambda rule", t.alpha)));
            }
            slots.insert(t.alpha, (curve_from_rows(&e.curve, dim, window)?, rule));
        }
        if slots.keys().copied().ne(0..slots.len()) {
            return Err(Error::Parse("template alphas must be 0, 1, … without gaps".into()));
        }
        let (curves, rules): (Vec<_>, Vec<_>) = slots.into_values().unzip();
        return Ok(ForcingSchedule::Template { curves, lambdas: rules.into_iter().skip(1).flatten().collect() });
    }
    if let [single] = entries {
        if matches!(&single.stage, Some(Stage::Word(w)) if w == "all") {
            return Ok(ForcingSchedule::Constant(curve_from_rows(&single.curve, dim, window)?));
        }
    }
    let mut by_stage = BTreeMap::new();
    for e in entries {
        match &e.stage {
            Some(Stage::Index(k)) => {
                by_stage.insert(*k, curve_from_rows(&e.curve, dim, window)?);
            }
            _ => return Err(Error::Parse("explicit forcing needs integer stages, or a single \"all\" entry".into())),
        }
    }
    let len = by_stage.keys().next_back().map_or(0, |k| k + 1);
    let list = (0..len)
        .map(|k| by_stage.remove(&k).unwrap_or_else(|| CpwlCurve::zero(dim, window)))
        .collect();
    Ok(ForcingSchedule::Explicit(list))
}

pub fn parse_rule_file(text: &str) -> Result<RuleFile> {
    let raw: RawRule = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if raw.m < 2 {
        return Err(Error::DegenerateDilation);
    }
    let system = match &raw.states {
        Some(s) => {
            if s.c.len() != s.r {
                return Err(Error::Parse(format!("states.C needs {} rows", s.r)));
            }
            let c = s
                .c
                .iter()
                .enumerate()
                .map(|(a, row)| row.iter().enumerate().map(|(j, m)| matrix(m, raw.p, &format!("C[{a}][{j}]"))).collect())
                .collect::<Result<Vec<Vec<_>>>>()?;
            Some(FiniteStateSystem::deterministic(raw.m, raw.p, s.transitions.clone(), c).map_err(|e| Error::Parse(e.to_string()))?)
        }
        None => None,
    };
    let (op, dim) = match &system {
        Some(sys) => (sys.stack(raw.l)?.0, raw.p * sys.r),
        None => {
            let mask = raw
                .mask
                .iter()
                .map(|e| Ok((e.j, matrix(&e.a, raw.p, &format!("mask j={}", e.j))?)))
                .collect::<Result<Vec<_>>>()?;
            (RefinementOp::new(raw.m, raw.p, raw.l, mask)?, raw.p)
        }
    };
    let curve = raw.curve.as_deref().map(|c| curve_from_rows(c, dim, raw.l)).transpose()?;
    let anchor = raw.anchor.as_deref().map(|c| curve_from_rows(c, dim, raw.l)).transpose()?;
    let forcing = raw.forcing.as_deref().map(|f| forcing(f, dim, raw.l)).transpose()?;
    Ok(RuleFile { op, curve, anchor, forcing, system })
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights_sparse: Option<SparseWeights>,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Debug, Serialize, Deserialize)]
struct SparseWeights {
    rows: usize,
    cols: usize,
    /// `[row, col, value]`.
    entries: Vec<(usize, usize, f64)>,
}

/// Summary stored next to the layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkMeta {
    pub width: usize,
    pub depth: usize,
    pub coeff_max: f64,
    pub builder: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

impl NetworkMeta {
    pub fn new(stats: NetStats, builder: &str, params: &[(String, String)]) -> Self {
        Self {
            width: stats.width,
            depth: stats.depth,
            coeff_max: stats.coeff_max,
            builder: builder.to_string(),
            params: params.iter().cloned().collect(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    input_dim: usize,
    layers: Vec<LayerFile>,
    meta: NetworkMeta,
}

pub fn network_to_json(net: &ReluNetwork<f64>, meta: &NetworkMeta) -> Result<String> {
    let layers = net
        .layers()
        .iter()
        .map(|layer| {
            let map = &layer.map;
            let (weights, weights_sparse) = if map.out_dim() * map.in_dim() <= DENSE_LIMIT {
                (Some(map.dense()), None)
            } else {
                let entries = map
                    .rows()
                    .iter()
                    .enumerate()
                    .flat_map(|(r, row)| row.iter().map(move |(c, v)| (r, *c, *v)))
                    .collect();
                (None, Some(SparseWeights { rows: map.out_dim(), cols: map.in_dim(), entries }))
            };
            LayerFile { weights, weights_sparse, bias: map.bias().to_vec(), activation: layer.activation }
        })
        .collect();
    let file = NetworkFile { input_dim: net.input_dim(), layers, meta: meta.clone() };
    serde_json::to_string(&file).map_err(|e| Error::Parse(e.to_string()))
}

pub fn network_from_json(text: &str) -> Result<(ReluNetwork<f64>, NetworkMeta)> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let file: NetworkFile = serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut in_dim = file.input_dim;
    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, l) in file.layers.into_iter().enumerate() {
        let map = match (l.weights, l.weights_sparse) {
            (Some(w), None) => Affine::from_dense(&w, l.bias, in_dim),
            (None, Some(s)) => {
                if s.cols != in_dim || s.rows != l.bias.len() {
                    return Err(Error::Parse(format!("layer {i}: sparse shape does not match")));
                }
                let mut rows = vec![Vec::new(); s.rows];
                for (r, c, v) in s.entries {
                    if r >= s.rows || c >= s.cols {
                        return Err(Error::Parse(format!("layer {i}: entry ({r}, {c}) out of range")));
                    }
                    rows[r].push((c, v));
                }
                Affine::new(in_dim, rows, l.bias)
            }
            _ => return Err(Error::Parse(format!("layer {i}: give exactly one of weights and weights_sparse"))),
        }
        .map_err(|e| Error::Parse(format!("layer {i}: {e}")))?;
        in_dim = map.out_dim();
        layers.push(Layer { map, activation: l.activation });
    }
    let net = ReluNetwork::from_layers(file.input_dim, layers).map_err(|e| Error::Parse(e.to_string()))?;
    Ok((net, file.meta))
}
