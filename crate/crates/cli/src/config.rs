//! JSON run configuration: alpha, body and dilation specs.

use std::sync::Arc;

use gaplattice::circleset::Alpha;
use gaplattice::diophantine::{cubic_pair, subexp_sequence, SubexpKind};
use gaplattice::geometry::{parse_q, ConvexBody};
use gaplattice::steinhaus::integer_grid;
use gaplattice::{ExactReal, Q};
use serde_json::Value;

use crate::error::CliError;

/// Parsed configuration plus the global overrides from the command line.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub raw: Value,
    pub seed: Option<u64>,
    pub precision_bits: u32,
}

impl RunConfig {
    pub fn new(raw: Value, seed: Option<u64>, precision_bits: Option<u32>) -> Result<Self, CliError> {
        if !raw.is_object() {
            return Err(CliError::Config("config must be a JSON object".into()));
        }
        let seed = seed.or_else(|| raw.get("seed").and_then(Value::as_u64));
        let precision_bits = precision_bits
            .or_else(|| raw.get("precision_bits").and_then(Value::as_u64).map(|p| p as u32))
            .unwrap_or(gaplattice::circleset::DEFAULT_PRECISION);
        if precision_bits < 64 {
            return Err(CliError::Config(format!("precision_bits = {precision_bits} is below 64")));
        }
        Ok(RunConfig {
            raw,
            seed,
            precision_bits,
        })
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.raw.get(key)
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("this run is randomized and needs a seed".into()))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.raw.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| CliError::Config(format!("\"{key}\" must be a non-negative integer"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| CliError::Config(format!("\"{key}\" must be a number"))),
        }
    }

    pub fn dims_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>, CliError> {
        match self.raw.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .as_array()
                .and_then(|a| a.iter().map(|x| x.as_u64().map(|x| x as usize)).collect())
                .ok_or_else(|| CliError::Config(format!("\"{key}\" must be an array of integers"))),
        }
    }

    pub fn alpha(&self) -> Result<Arc<Alpha>, CliError> {
        let spec = self
            .raw
            .get("alpha")
            .ok_or_else(|| CliError::Config("missing \"alpha\"".into()))?;
        Ok(Arc::new(parse_alpha(spec, self.seed)?.with_precision(self.precision_bits)))
    }

    pub fn body(&self) -> Result<ConvexBody, CliError> {
        let spec = self
            .raw
            .get("body")
            .ok_or_else(|| CliError::Config("missing \"body\"".into()))?;
        ConvexBody::from_json(spec).map_err(CliError::from_config)
    }

    /// The configured body, which must live in dimension `d`.
    pub fn body_in(&self, d: usize) -> Result<ConvexBody, CliError> {
        let body = self.body()?;
        if body.dim() != d {
            return Err(CliError::Config(format!("body has dimension {}, alpha has {d}", body.dim())));
        }
        Ok(body)
    }

    pub fn body_or_unit(&self, d: usize) -> Result<ConvexBody, CliError> {
        if self.raw.get("body").is_some() {
            self.body_in(d)
        } else {
            ConvexBody::unit_cube(d).map_err(CliError::from_config)
        }
    }
}

fn real_of(v: &Value) -> Result<ExactReal, CliError> {
    if let Some(n) = v.get("sqrt").and_then(Value::as_u64) {
        return Ok(ExactReal::sqrt(n));
    }
    if v.get("cubic7").and_then(Value::as_bool) == Some(true) {
        return Ok(ExactReal::Cubic7);
    }
    if let Ok(q) = parse_q(v) {
        return Ok(ExactReal::Rational(q));
    }
    Err(CliError::Config(format!("unrecognized real {v}")))
}

fn q_vec(v: Option<&Value>, what: &str) -> Result<Vec<Q>, CliError> {
    v.and_then(Value::as_array)
        .ok_or_else(|| CliError::Config(format!("\"{what}\" must be an array")))?
        .iter()
        .map(|x| parse_q(x).map_err(CliError::from_config))
        .collect()
}

/// Tagged constructors only; decimals need an explicit `numeric_only`.
pub fn parse_alpha(v: &Value, seed: Option<u64>) -> Result<Alpha, CliError> {
    let core = |r: gaplattice::Result<Alpha>| r.map_err(CliError::from_config);
    if let Some(s) = v.get("sqrt") {
        let parts: Vec<u64> = match s {
            Value::Array(a) => a.iter().filter_map(Value::as_u64).collect(),
            other => other.as_u64().into_iter().collect(),
        };
        if parts.is_empty() {
            return Err(CliError::Config("\"sqrt\" needs positive integers".into()));
        }
        return core(Alpha::generic(parts.into_iter().map(ExactReal::sqrt).collect()));
    }
    if v.get("cubic7").and_then(Value::as_bool) == Some(true) {
        return core(cubic_pair());
    }
    if let Some(rb) = v.get("rational_beta") {
        let beta = real_of(rb.get("beta").unwrap_or(&Value::Null))?;
        let r = q_vec(rb.get("r"), "r")?;
        let s = match rb.get("s") {
            Some(s) => q_vec(Some(s), "s")?,
            None => vec![Q::from_integer(0); r.len()],
        };
        return core(Alpha::rational_beta(beta, r, s));
    }
    if let Some(r) = v.get("rational") {
        return core(Alpha::rational(q_vec(Some(r), "rational")?));
    }
    if let Some(r) = v.get("random") {
        let d = r
            .get("d")
            .and_then(Value::as_u64)
            .ok_or_else(|| CliError::Config("\"random\" needs \"d\"".into()))?;
        let seed = seed.ok_or_else(|| CliError::Config("random alpha needs a seed".into()))?;
        return core(Alpha::random(d as usize, seed));
    }
    if let Some(dec) = v.get("decimal") {
        if v.get("numeric_only").and_then(Value::as_bool) != Some(true) {
            return Err(CliError::Config(
                "decimal alpha requires \"numeric_only\": true".into(),
            ));
        }
        let xs: Vec<f64> = dec
            .as_array()
            .and_then(|a| a.iter().map(Value::as_f64).collect())
            .ok_or_else(|| CliError::Config("\"decimal\" must be an array of numbers".into()))?;
        return core(Alpha::decimal(&xs));
    }
    Err(CliError::Config(format!("unrecognized alpha spec {v}")))
}

/// Homothetic factors `R_i` from `{"linear":{"h","count"}}`, `{"exp_sqrt":{"count"}}`,
/// `{"power":{"p","count"}}` or `{"values":[..]}`.
pub fn parse_sequence(v: &Value) -> Result<Vec<f64>, CliError> {
    let count = |x: &Value| {
        x.get("count")
            .and_then(Value::as_u64)
            .map(|c| c as usize)
            .ok_or_else(|| CliError::Config("sequence needs \"count\"".into()))
    };
    let gen = |k, c| subexp_sequence(k, c).map_err(CliError::from_config);
    if let Some(x) = v.get("linear") {
        let h = x.get("h").and_then(Value::as_f64).unwrap_or(1.0);
        return gen(SubexpKind::Linear(h), count(x)?);
    }
    if let Some(x) = v.get("exp_sqrt") {
        return gen(SubexpKind::ExpSqrt, count(x)?);
    }
    if let Some(x) = v.get("power") {
        let p = x.get("p").and_then(Value::as_f64).unwrap_or(1.5);
        return gen(SubexpKind::Power(p), count(x)?);
    }
    if let Some(x) = v.get("values") {
        return x
            .as_array()
            .and_then(|a| a.iter().map(Value::as_f64).collect())
            .ok_or_else(|| CliError::Config("\"values\" must be numbers".into()));
    }
    Err(CliError::Config(format!("unrecognized dilation sequence {v}")))
}

/// Diagonal grid from `{"grid":{"t_max":N}}` or `{"grid":{"values":[[..],..]}}`.
pub fn parse_grid(v: &Value, d: usize) -> Result<Option<Vec<Vec<f64>>>, CliError> {
    let Some(g) = v.get("grid") else {
        return Ok(None);
    };
    if let Some(t) = g.get("t_max").and_then(Value::as_i64) {
        if t < 1 {
            return Err(CliError::Config("t_max must be at least 1".into()));
        }
        return Ok(Some(
            integer_grid(d, t)
                .into_iter()
                .map(|p| p.into_iter().map(|x| x as f64).collect())
                .collect(),
        ));
    }
    if let Some(vals) = g.get("values").and_then(Value::as_array) {
        return vals
            .iter()
            .map(|p| {
                p.as_array()
                    .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
                    .filter(|p| p.len() == d)
                    .ok_or_else(|| CliError::Config("grid values must be d-vectors".into()))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some);
    }
    Err(CliError::Config("grid needs \"t_max\" or \"values\"".into()))
}
