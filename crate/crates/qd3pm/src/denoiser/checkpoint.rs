//! Parameter checkpoints.
//!
//! Plain-text key-value header followed by one parameter per line in flat
//! order (`w`, singles layer-major, entanglers layer-major). Floats are
//! written with Rust's shortest round-trip formatting, so a reload is
//! bit-exact.
//!
//! ```text
//! format_version: 1
//! model_kind: denoiser
//! n: 4
//! layers: 12
//! topology: all-to-all
//! t_steps: 30
//! s: 0.008
//! posterior_mode: paper-eq17
//! target_kind: step-predictor
//! param_count: 304
//! params:
//! -0.0034095...
//! ```

use super::{param_count, DenoiserParams, Topology, TopologyKind};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

pub const FORMAT_VERSION: u32 = 1;

/// What a trained circuit models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// `p_θ(x_{t-1} | x_t)`.
    StepPredictor,
    /// `p_θ(x_0 | x_t)`.
    X0Predictor,
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetKind::StepPredictor => write!(f, "step-predictor"),
            TargetKind::X0Predictor => write!(f, "x0-predictor"),
        }
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step-predictor" => Ok(TargetKind::StepPredictor),
            "x0-predictor" => Ok(TargetKind::X0Predictor),
            _ => Err(Error::InvalidArgument(format!(
                "unknown target kind '{s}' (expected step-predictor or x0-predictor)"
            ))),
        }
    }
}

/// Checkpoint metadata; `model_kind` distinguishes the circuit checkpoints
/// from factorized-baseline tables sharing the format.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointHeader {
    pub model_kind: String,
    pub n: usize,
    pub layers: usize,
    pub topology: TopologyKind,
    pub t_steps: usize,
    pub s: f64,
    pub posterior_mode: String,
    pub target_kind: TargetKind,
}

/// Header plus the flat parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: Vec<f64>,
}

impl Checkpoint {
    /// Reassembles structured circuit parameters (only valid for
    /// `model_kind: denoiser`).
    pub fn denoiser_params(&self) -> Result<DenoiserParams> {
        if self.header.model_kind != "denoiser" {
            return Err(Error::CheckpointFormat(format!(
                "expected model_kind denoiser, found {}",
                self.header.model_kind
            )));
        }
        let topo = Topology::new(self.header.topology, self.header.n)?;
        DenoiserParams::from_flat(&self.params, self.header.n, self.header.layers, &topo)
    }
}

/// Writes a checkpoint file.
pub fn save_checkpoint(path: &Path, header: &CheckpointHeader, params: &[f64]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "format_version: {FORMAT_VERSION}")?;
    writeln!(out, "model_kind: {}", header.model_kind)?;
    writeln!(out, "n: {}", header.n)?;
    writeln!(out, "layers: {}", header.layers)?;
    writeln!(out, "topology: {}", header.topology)?;
    writeln!(out, "t_steps: {}", header.t_steps)?;
    writeln!(out, "s: {}", header.s)?;
    writeln!(out, "posterior_mode: {}", header.posterior_mode)?;
    writeln!(out, "target_kind: {}", header.target_kind)?;
    writeln!(out, "param_count: {}", params.len())?;
    writeln!(out, "params:")?;
    for p in params {
        writeln!(out, "{p}")?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a checkpoint file and validates its declared shapes.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let mut fields: HashMap<String, String> = HashMap::new();
    for line in lines.by_ref() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "params:" {
            break;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| Error::CheckpointFormat(format!("malformed header line '{line}'")))?;
        fields.insert(key.trim().to_string(), value.trim().to_string());
    }
    let get = |key: &str| -> Result<&String> {
        fields.get(key).ok_or_else(|| Error::CheckpointFormat(format!("missing field '{key}'")))
    };
    let version: u32 = get("format_version")?
        .parse()
        .map_err(|_| Error::CheckpointFormat("bad format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::CheckpointFormat(format!(
            "unsupported format_version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let parse_usize = |key: &str| -> Result<usize> {
        get(key)?.parse().map_err(|_| Error::CheckpointFormat(format!("bad field '{key}'")))
    };
    let header = CheckpointHeader {
        model_kind: get("model_kind")?.clone(),
        n: parse_usize("n")?,
        layers: parse_usize("layers")?,
        topology: get("topology")?.parse()?,
        t_steps: parse_usize("t_steps")?,
        s: get("s")?.parse().map_err(|_| Error::CheckpointFormat("bad field 's'".into()))?,
        posterior_mode: get("posterior_mode")?.clone(),
        target_kind: get("target_kind")?.parse()?,
    };
    let declared = parse_usize("param_count")?;
    let mut params = Vec::with_capacity(declared);
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        params.push(
            line.parse::<f64>()
                .map_err(|_| Error::CheckpointFormat(format!("bad parameter line '{line}'")))?,
        );
    }
    if params.len() != declared {
        return Err(Error::CheckpointFormat(format!(
            "declared {declared} parameters, found {}",
            params.len()
        )));
    }
    if header.model_kind == "denoiser" {
        let topo = Topology::new(header.topology, header.n)?;
        let expected = param_count(header.n, header.layers, &topo);
        if declared != expected {
            return Err(Error::CheckpointFormat(format!(
                "shape mismatch: header implies {expected} parameters, file has {declared}"
            )));
        }
    }
    Ok(Checkpoint { header, params })
}
