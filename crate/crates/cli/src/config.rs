//! Flat dotted-key config files:
//!
//! ```text
//! # comment
//! model.E = [1.0, 2.0]
//! model.r = [1.0, 1.5]
//! model.lambda = 0.1
//! solver.tol = 1e-12
//! output.format = json
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use qkm_core::{ModelInput, SolveOptions};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    List(Vec<f64>),
    Text(String),
}

#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub entries: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Copy)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub e: Vec<f64>,
    pub r: Vec<f64>,
    pub n: Option<f64>,
    pub lambda: f64,
    pub solver: SolveOptions,
    pub series_order: usize,
    pub format: OutputFormat,
    pub out_path: Option<String>,
    /// Optional overrides applied to the solved spectral data before
    /// verification; used for sensitivity probes.
    pub override_eps: Option<Vec<f64>>,
    pub override_rho: Option<Vec<f64>>,
}

pub fn parse_file(path: &Path) -> Result<RawConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<RawConfig> {
    let mut entries = BTreeMap::new();
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected 'key = value'", lineno + 1))?;
        let key = key.trim().to_string();
        if key.is_empty() || !key.contains('.') {
            bail!("line {}: keys must be dotted, got {key:?}", lineno + 1);
        }
        let value = parse_value(value.trim())
            .with_context(|| format!("line {}: bad value for {key}", lineno + 1))?;
        if entries.insert(key.clone(), value).is_some() {
            bail!("line {}: duplicate key {key}", lineno + 1);
        }
    }
    Ok(RawConfig { entries })
}

fn parse_value(s: &str) -> Result<Value> {
    if let Some(inner) = s.strip_prefix('[') {
        let inner = inner.strip_suffix(']').ok_or_else(|| anyhow!("unterminated list"))?;
        let mut list = Vec::new();
        for item in inner.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            list.push(item.parse::<f64>().with_context(|| format!("bad number {item:?}"))?);
        }
        if list.is_empty() {
            bail!("empty list");
        }
        return Ok(Value::List(list));
    }
    if let Ok(x) = s.parse::<f64>() {
        return Ok(Value::Number(x));
    }
    if s.is_empty() {
        bail!("empty value");
    }
    Ok(Value::Text(s.to_string()))
}

impl RawConfig {
    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::Number(x)) => Ok(Some(*x)),
            Some(v) => bail!("{key} must be a number, got {v:?}"),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::List(v)) => Ok(Some(v.clone())),
            Some(Value::Number(x)) => Ok(Some(vec![*x])),
            Some(v) => bail!("{key} must be a list, got {v:?}"),
        }
    }

    fn text(&self, key: &str) -> Result<Option<String>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::Text(s)) => Ok(Some(s.clone())),
            Some(v) => bail!("{key} must be a string, got {v:?}"),
        }
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let known_prefixes = ["model.", "solver.", "series.", "output.", "override."];
        for key in self.entries.keys() {
            if !known_prefixes.iter().any(|p| key.starts_with(p)) {
                bail!("unknown config key {key}");
            }
        }
        let e = self.list("model.E")?.ok_or_else(|| anyhow!("model.E is required"))?;
        let r = self.list("model.r")?.ok_or_else(|| anyhow!("model.r is required"))?;
        let n = self.number("model.N")?;
        let lambda = self.number("model.lambda")?.unwrap_or(0.0);
        let mut solver = SolveOptions::default();
        if let Some(tol) = self.number("solver.tol")? {
            solver.tol = tol;
        }
        if let Some(mn) = self.number("solver.max_newton")? {
            if mn < 1.0 || mn.fract() != 0.0 {
                bail!("solver.max_newton must be a positive integer");
            }
            solver.max_newton = mn as usize;
        }
        if let Some(ms) = self.number("solver.min_homotopy_step")? {
            solver.min_homotopy_step = ms;
        }
        let series_order = match self.number("series.order")? {
            None => 5,
            Some(o) if o >= 0.0 && o <= 8.0 && o.fract() == 0.0 => o as usize,
            Some(o) => bail!("series.order must be an integer in 0..=8, got {o}"),
        };
        let format = match self.text("output.format")?.as_deref() {
            None | Some("json") => OutputFormat::Json,
            Some("csv") => OutputFormat::Csv,
            Some(other) => bail!("output.format must be json or csv, got {other}"),
        };
        let out_path = self.text("output.path")?;
        Ok(RunConfig {
            e,
            r,
            n,
            lambda,
            solver,
            series_order,
            format,
            out_path,
            override_eps: self.list("override.eps")?,
            override_rho: self.list("override.rho")?,
        })
    }
}

impl RunConfig {
    pub fn model_input(&self) -> qkm_core::Result<ModelInput> {
        ModelInput::new(self.e.clone(), self.r.clone(), self.n, self.lambda)
    }
}
