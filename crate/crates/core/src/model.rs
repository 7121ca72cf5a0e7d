//! Vertex and edge suspiciousness scoring.
//!
//! A model turns raw transaction data into the `a_i` and `c_ij` weights the
//! peeling engine works with. Three built-in metrics are provided:
//!
//! * `dg`: every edge scores 1 (plain edge density).
//! * `dw`: an edge scores its raw weight.
//! * `fd`: an edge scores `1 / ln(x + c)` where `x` is the in-degree of the
//!   target vertex when the edge arrives, discounting edges into popular
//!   objects.
//!
//! Scores are computed once, at insertion time; existing edges are not
//! rescored when degrees change later.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VertexId;

/// What a model may look at when scoring a new edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeContext {
    pub src: VertexId,
    pub dst: VertexId,
    pub raw_weight: f64,
    /// In-degree of `dst` before this edge is applied.
    pub target_degree: u64,
}

pub trait SuspiciousnessModel: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;

    /// Vertex suspiciousness from an externally supplied prior.
    fn vertex_score(&self, v: VertexId, prior: f64) -> Result<f64> {
        vsusp_const(v, prior)
    }

    fn edge_score(&self, ctx: &EdgeContext) -> Result<f64>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdParams {
    pub c: f64,
}

impl FdParams {
    pub fn new(c: f64) -> Result<Self> {
        // x >= 0, so ln(x + c) > 0 for every degree iff c > 1.
        if !c.is_finite() || c <= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "fd constant must be finite and > 1, got {c}"
            )));
        }
        Ok(FdParams { c })
    }
}

impl Default for FdParams {
    fn default() -> Self {
        FdParams { c: 5.0 }
    }
}

pub fn esusp_dg(_src: VertexId, _dst: VertexId) -> f64 {
    1.0
}

pub fn esusp_dw(_src: VertexId, _dst: VertexId, raw_weight: f64) -> Result<f64> {
    if raw_weight > 0.0 && raw_weight.is_finite() {
        Ok(raw_weight)
    } else {
        Err(Error::NonPositiveWeight(raw_weight))
    }
}

pub fn esusp_fd(_src: VertexId, _dst: VertexId, target_degree: u64, params: FdParams) -> Result<f64> {
    let arg = target_degree as f64 + params.c;
    if !(arg > 1.0) {
        return Err(Error::DegenerateLog {
            degree: target_degree,
            c: params.c,
        });
    }
    Ok(1.0 / arg.ln())
}

pub fn vsusp_const(_v: VertexId, a: f64) -> Result<f64> {
    if a >= 0.0 && a.is_finite() {
        Ok(a)
    } else {
        Err(Error::NegativeVertexWeight(a))
    }
}

/// The built-in metrics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "lowercase")]
pub enum Metric {
    Dg,
    Dw,
    Fd(FdParams),
}

impl Metric {
    pub fn fd(c: f64) -> Result<Self> {
        Ok(Metric::Fd(FdParams::new(c)?))
    }
}

impl SuspiciousnessModel for Metric {
    fn name(&self) -> &str {
        match self {
            Metric::Dg => "dg",
            Metric::Dw => "dw",
            Metric::Fd(_) => "fd",
        }
    }

    fn edge_score(&self, ctx: &EdgeContext) -> Result<f64> {
        match *self {
            Metric::Dg => Ok(esusp_dg(ctx.src, ctx.dst)),
            Metric::Dw => esusp_dw(ctx.src, ctx.dst, ctx.raw_weight),
            Metric::Fd(params) => esusp_fd(ctx.src, ctx.dst, ctx.target_degree, params),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    /// Parses `dg`, `dw` or `fd`; `fd` gets the default constant.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dg" => Ok(Metric::Dg),
            "dw" => Ok(Metric::Dw),
            "fd" => Ok(Metric::Fd(FdParams::default())),
            other => Err(Error::InvalidConfig(format!("unknown metric `{other}`"))),
        }
    }
}
