//! The analysis commands. Each returns the exit code and the text to emit.

use std::path::PathBuf;

use multinorm::certify::{certify_general, certify_staircase, Certificate, ModeBounds};
use multinorm::norms::{matrix_measure, MeasureMethod};
use multinorm::par::Exec;
use multinorm::simsw::{pair_divergence, simulate};
use multinorm::transact::{beta, sampled_sup, BetaKind, BetaResult};
use multinorm::{ModeId, NormSpec};
use serde::Serialize;

use crate::config::{CertifyOptions, RunConfig};
use crate::{repro, sync, to_json, CliError};

pub const DEFAULT_DT: f64 = 1e-3;

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    /// Directory that relative paths in the config resolve against.
    pub base: PathBuf,
    pub seed: u64,
    pub dt: Option<f64>,
}

impl Default for Context {
    fn default() -> Self {
        Self { base: PathBuf::from("."), seed: 0, dt: None }
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// 0 success or certified, 2 valid but not certified.
    pub code: u8,
    /// Main output: JSON, CSV or a text table.
    pub body: String,
    /// JSON summary accompanying a CSV body.
    pub summary: Option<String>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self { code: 0, body, summary: None }
    }
}

#[derive(Debug, Serialize)]
struct ModeMeasure {
    mode: ModeId,
    norm: String,
    value: f64,
    method: MeasureMethod,
}

fn mode_measure(cfg: &RunConfig, id: ModeId, norm: &NormSpec) -> Result<ModeMeasure, CliError> {
    let spec = cfg.modes.get(&id).ok_or_else(|| CliError::config(format!("norms.{id}"), "no such mode"))?;
    let mut best: Option<(f64, MeasureMethod)> = None;
    for j in spec.jacobians() {
        let r = matrix_measure(norm, &j)?;
        if best.is_none_or(|(v, _)| r.value > v) {
            best = Some((r.value, r.method));
        }
    }
    let (value, method) = best.expect("validated mode has a Jacobian");
    Ok(ModeMeasure { mode: id, norm: norm.label(), value, method })
}

pub fn measure(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.norms.is_empty() {
        return Err(CliError::config("norms", "at least one norm is required"));
    }
    let measures = cfg.norms.iter().map(|(&id, n)| mode_measure(cfg, id, n)).collect::<Result<Vec<_>, _>>()?;
    Ok(Outcome::ok(to_json(&serde_json::json!({ "measures": measures }))))
}

#[derive(Debug, Serialize)]
struct ModeBeta {
    from_mode: ModeId,
    to_mode: ModeId,
    #[serde(flatten)]
    beta: BetaResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled_lower: Option<f64>,
}

pub fn beta_cmd(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, CliError> {
    if cfg.norms.len() < 2 {
        return Err(CliError::config("norms", "at least two norms are required"));
    }
    let samples = cfg.beta.as_ref().map_or(0, |b| b.samples);
    let mut out = Vec::new();
    for (&k, a) in &cfg.norms {
        for (&l, b) in &cfg.norms {
            if k == l {
                continue;
            }
            let sampled_lower = match samples {
                0 => None,
                n => Some(sampled_sup(a, b, n, ctx.seed, Exec::default())?.value),
            };
            out.push(ModeBeta { from_mode: k, to_mode: l, beta: beta(a, b)?, sampled_lower });
        }
    }
    Ok(Outcome::ok(to_json(&serde_json::json!({ "betas": out }))))
}

fn certificate_outcome(cert: &Certificate) -> Outcome {
    Outcome { code: if cert.satisfied { 0 } else { 2 }, body: to_json(cert), summary: None }
}

/// Mode bounds from explicit values, falling back to `modes` and `norms`.
pub fn mode_bounds(cfg: &RunConfig, opts: &CertifyOptions) -> Result<ModeBounds, CliError> {
    let signal = cfg.signal()?;
    let mut bounds = ModeBounds::new().with_norms(cfg.norms.clone())?;
    for m in signal.modes() {
        let alpha = match (opts.alpha.get(&m), cfg.norms.get(&m)) {
            (Some(&a), _) => a,
            (None, Some(n)) if cfg.modes.contains_key(&m) => mode_measure(cfg, m, n)?.value,
            _ => {
                return Err(CliError::config(
                    format!("certify.alpha.{m}"),
                    "missing; give it or define both the mode and its norm",
                ))
            }
        };
        bounds = bounds.with_alpha(m, alpha);
    }
    for b in &opts.beta {
        bounds = bounds.with_beta(b.from, b.to, b.value, BetaKind::Asserted);
    }
    Ok(bounds)
}

pub fn certify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let opts = cfg.certify.clone().unwrap_or_default();
    if let Some(g) = &opts.general {
        let mut cert = certify_general(&g.alpha_profile, &g.events, g.t0, g.big_t0, g.t_max)?;
        cert.c_min = opts.c_min;
        cert.satisfied = cert.c > opts.c_min;
        return Ok(certificate_outcome(&cert));
    }
    let signal = cfg.signal()?;
    let bounds = mode_bounds(cfg, &opts)?;
    let t0 = opts.t0.unwrap_or(signal.t0());
    let t_max = match (opts.t_max, signal.period()) {
        (Some(t), _) => t,
        (None, Some(p)) => 100.0 * p,
        (None, None) => signal.end() - t0,
    };
    let cert = certify_staircase(&bounds, &signal, t0, opts.big_t0, t_max, opts.c_min)?;
    Ok(certificate_outcome(&cert))
}

#[derive(Debug, Serialize)]
struct SimulationSummary {
    samples: usize,
    dt: f64,
    t_final: f64,
    x_final: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_error: Option<f64>,
    /// Least-squares slope of the log error over the second half; null when undefined.
    #[serde(skip_serializing_if = "Option::is_none")]
    fitted_rate: Option<f64>,
}

pub fn simulate_cmd(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let opts = cfg.simulate.as_ref().ok_or_else(|| CliError::config("simulate", "section is required"))?;
    let system = cfg.system()?;
    let signal = cfg.signal()?;
    let dt = ctx.dt.or(opts.dt).unwrap_or(DEFAULT_DT);
    let t0 = opts.t0.unwrap_or(signal.t0());
    let traj = simulate(&system, &signal, &opts.x0, t0, opts.tf, dt)?;
    let mut summary = SimulationSummary {
        samples: traj.len(),
        dt,
        t_final: *traj.times.last().expect("nonempty trajectory"),
        x_final: traj.last_state().to_vec(),
        initial_error: None,
        final_error: None,
        fitted_rate: None,
    };
    if let Some(y0) = &opts.y0 {
        let pd = pair_divergence(&system, &signal, &opts.x0, y0, &cfg.norms, t0, opts.tf, dt)?;
        summary.initial_error = pd.error.first().copied();
        summary.final_error = pd.error.last().copied();
        summary.fitted_rate = Some(pd.fitted_rate);
    }
    Ok(Outcome { code: 0, body: traj.to_csv(), summary: Some(to_json(&summary)) })
}

pub fn sync_cmd(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let opts = cfg.sync.as_ref().ok_or_else(|| CliError::config("sync", "section is required"))?;
    let report = sync::run(opts, &ctx.base, ctx.dt.unwrap_or(DEFAULT_DT), ctx.seed)?;
    Ok(Outcome { code: if report.certificate.satisfied { 0 } else { 2 }, body: to_json(&report), summary: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Text,
}

pub fn repro_cmd(format: ReportFormat) -> Result<Outcome, CliError> {
    let report = repro::repro()?;
    Ok(Outcome::ok(match format {
        ReportFormat::Json => to_json(&report),
        ReportFormat::Text => report.to_text(),
    }))
}
