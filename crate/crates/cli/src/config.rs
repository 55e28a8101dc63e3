//! Run configuration: one JSON document per invocation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use multinorm::matcore::Mat;
use multinorm::models::{ChuaField, ChuaParams, Graph};
use multinorm::simsw::{LinearField, SwitchedSystem, VectorField};
use multinorm::{ModeId, NormSpec, SwitchingSignal};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Default weights of the weighted-1 norm used for uncoupled Chua nodes.
pub const CHUA_XI: [f64; 3] = [1.0, 3.4042, 1.0369];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub modes: BTreeMap<ModeId, ModeSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub norms: BTreeMap<ModeId, NormSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<SwitchingSignal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifyOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sync: Option<SyncOptions>,
}

/// A mode is either linear `Ax + B` or a Chua node.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Mat>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chua: Option<ChuaParams>,
}

impl ModeSpec {
    pub fn linear(a: Mat) -> Self {
        Self { a: Some(a), ..Self::default() }
    }

    pub fn dim(&self) -> usize {
        match (&self.a, &self.chua) {
            (Some(a), _) => a.rows(),
            _ => 3,
        }
    }

    /// Jacobians the mode can take; one for linear modes, two for Chua.
    pub fn jacobians(&self) -> Vec<Mat> {
        match (&self.a, &self.chua) {
            (Some(a), _) => vec![a.clone()],
            (None, Some(c)) => c.jacobians().to_vec(),
            (None, None) => Vec::new(),
        }
    }

    pub fn field(&self) -> multinorm::Result<Arc<dyn VectorField>> {
        Ok(match (&self.a, &self.chua) {
            (Some(a), _) => {
                let b = self.b.clone().unwrap_or_else(|| vec![0.0; a.rows()]);
                Arc::new(LinearField::new(a.clone(), b)?)
            }
            (None, Some(c)) => Arc::new(ChuaField(*c)),
            (None, None) => return Err(multinorm::Error::InvalidInput("mode has neither A nor chua".into())),
        })
    }

    fn validate(&self, path: &str) -> Result<(), CliError> {
        match (&self.a, &self.chua) {
            (Some(_), Some(_)) | (None, None) => Err(CliError::config(path, "give exactly one of `A` or `chua`")),
            (Some(a), None) => {
                if !a.is_square() || a.rows() == 0 {
                    return Err(CliError::config(format!("{path}.A"), "matrix must be square and nonempty"));
                }
                match &self.b {
                    Some(b) if b.len() != a.rows() => Err(CliError::config(
                        format!("{path}.B"),
                        format!("expected {} entries, got {}", a.rows(), b.len()),
                    )),
                    _ => Ok(()),
                }
            }
            (None, Some(_)) if self.b.is_some() => Err(CliError::config(format!("{path}.B"), "not allowed for chua modes")),
            (None, Some(_)) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaOptions {
    /// Sampled lower estimate alongside each coefficient; 0 disables it.
    #[serde(default)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaOverride {
    pub from: ModeId,
    pub to: ModeId,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyOptions {
    /// Measure bounds; computed from `modes` and `norms` when absent.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub alpha: BTreeMap<ModeId, f64>,
    /// Asserted transaction coefficients; computed from `norms` when absent.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<BetaOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(rename = "T0", default, skip_serializing_if = "Option::is_none")]
    pub big_t0: Option<f64>,
    #[serde(rename = "T_max", default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub c_min: f64,
    /// Explicit α profile and switch costs instead of a signal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub general: Option<GeneralForm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralForm {
    /// `(duration, α)` segments.
    pub alpha_profile: Vec<(f64, f64)>,
    /// `(time, log β)` events.
    #[serde(default)]
    pub events: Vec<(f64, f64)>,
    #[serde(default)]
    pub t0: f64,
    #[serde(rename = "T0")]
    pub big_t0: f64,
    #[serde(rename = "T_max")]
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOptions {
    pub x0: Vec<f64>,
    /// Second initial state for a pair-divergence run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    pub tf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

/// Graph given inline or as a path relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    Inline(Graph),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSource>,
    #[serde(default)]
    pub chua: ChuaParams,
    #[serde(default = "one")]
    pub k: f64,
    #[serde(rename = "Gamma", default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Mat>,
    /// Weights of the uncoupled-mode weighted-1 norm.
    #[serde(default = "chua_xi")]
    pub xi: Vec<f64>,
    pub duty_off: f64,
    #[serde(default)]
    pub c_min: f64,
    /// Blinking period; defaults to `max(2T*, 10 dt)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    /// Constants that replace the recomputed ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta01: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta10: Option<f64>,
    /// Number of periods to simulate; 0 skips the simulation.
    #[serde(default)]
    pub periods: usize,
    /// Half-width of the uniform spread of initial node states.
    #[serde(default = "half")]
    pub spread: f64,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn chua_xi() -> Vec<f64> {
    CHUA_XI.to_vec()
}

impl RunConfig {
    /// Parses and validates a config, naming the JSON path of any problem.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(if path == "." { "$".into() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mut dim = None;
        for (id, m) in &self.modes {
            let path = format!("modes.{id}");
            m.validate(&path)?;
            match dim {
                None => dim = Some(m.dim()),
                Some(d) if d != m.dim() => {
                    return Err(CliError::config(path, format!("dimension {} differs from {d}", m.dim())));
                }
                _ => {}
            }
        }
        for (id, n) in &self.norms {
            if let Some(m) = self.modes.get(id) {
                if n.dim() != m.dim() {
                    return Err(CliError::config(
                        format!("norms.{id}"),
                        format!("norm acts on R^{} but the mode lives in R^{}", n.dim(), m.dim()),
                    ));
                }
            }
        }
        if let Some(sig) = &self.signal {
            if !self.modes.is_empty() {
                if let Some(m) = sig.modes().into_iter().find(|m| !self.modes.contains_key(m)) {
                    return Err(CliError::config("signal.segments", format!("mode {m} is not defined in `modes`")));
                }
            }
        }
        if let Some(c) = &self.certify {
            for (i, b) in c.beta.iter().enumerate() {
                if !(b.value.is_finite() && b.value > 0.0) {
                    return Err(CliError::config(format!("certify.beta[{i}].value"), "must be positive"));
                }
            }
        }
        if let Some(s) = &self.simulate {
            if let Some(d) = dim {
                if s.x0.len() != d {
                    return Err(CliError::config("simulate.x0", format!("expected {d} entries, got {}", s.x0.len())));
                }
                if let Some(y) = &s.y0 {
                    if y.len() != d {
                        return Err(CliError::config("simulate.y0", format!("expected {d} entries, got {}", y.len())));
                    }
                }
            }
        }
        if let Some(s) = &self.sync {
            if !(0.0..1.0).contains(&s.duty_off) {
                return Err(CliError::config("sync.duty_off", "must lie in [0, 1)"));
            }
            if !(s.k.is_finite() && s.k >= 0.0) {
                return Err(CliError::config("sync.k", "must be finite and nonnegative"));
            }
            if s.xi.len() != 3 {
                return Err(CliError::config("sync.xi", "expected 3 weights"));
            }
            if let Some(g) = &s.gamma {
                if g.rows() != 3 || g.cols() != 3 {
                    return Err(CliError::config("sync.Gamma", "must be 3x3"));
                }
            }
        }
        Ok(())
    }

    /// Switched system assembled from `modes`.
    pub fn system(&self) -> Result<SwitchedSystem, CliError> {
        if self.modes.is_empty() {
            return Err(CliError::config("modes", "at least one mode is required"));
        }
        let mut fields = BTreeMap::new();
        for (&id, m) in &self.modes {
            fields.insert(id, m.field()?);
        }
        Ok(SwitchedSystem::new(fields)?)
    }

    /// The configured signal, or the constant signal of a single-mode system.
    pub fn signal(&self) -> Result<SwitchingSignal, CliError> {
        match (&self.signal, self.modes.keys().next()) {
            (Some(s), _) => Ok(s.clone()),
            (None, Some(&m)) if self.modes.len() == 1 => Ok(SwitchingSignal::constant(m, 0.0)),
            _ => Err(CliError::config("signal", "a switching signal is required")),
        }
    }
}
