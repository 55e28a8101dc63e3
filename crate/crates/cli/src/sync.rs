//! Blinking Chua network: recomputed constants, period threshold and an
//! optional simulation of the synchronization error.

use std::path::Path;

use multinorm::certify::{solve_min_period, sync_certify, Certificate, SyncInputs};
use multinorm::matcore::Mat;
use multinorm::models::{
    blink_network_field, blink_signal, lambda2, laplacian, sync_error, variational_mode_matrix, BlinkNetConfig,
    ChuaParams, Graph,
};
use multinorm::norms::{matrix_measure, Lp};
use multinorm::simsw::simulate;
use multinorm::transact::beta;
use multinorm::{ModeId, NormSpec, SwitchingSignal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{GraphSource, SyncOptions};
use crate::CliError;

/// Constants entering the blinking-network condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncConstants {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    /// Uncoupled-mode measure, weighted-1 norm, max over both slopes.
    pub mu0: f64,
    /// Coupled-mode Euclidean measure of `Df − kλ2Γ`, max over both slopes.
    pub mu1: f64,
    /// Weighted-1 to Euclidean.
    pub beta01: f64,
    /// Euclidean to weighted-1.
    pub beta10: f64,
    pub gamma_dissipative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncSimulation {
    pub horizon: f64,
    pub dt: f64,
    pub initial_error: f64,
    pub final_error: f64,
    pub min_error: f64,
    /// First time the error drops below `1e-3`, if it does.
    pub time_below_1e_3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncReport {
    pub constants: SyncConstants,
    pub duty_off: f64,
    /// Smallest certifiable period; absent when no period certifies.
    pub t_star: Option<f64>,
    pub period: f64,
    pub certificate: Certificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SyncSimulation>,
}

pub fn resolve_graph(src: &GraphSource, base: &Path) -> Result<Graph, CliError> {
    match src {
        GraphSource::Inline(g) => Ok(g.clone()),
        GraphSource::File(p) => {
            let path = base.join(p);
            let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path, source })?;
            let de = &mut serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize(de).map_err(|e| {
                CliError::config(format!("sync.graph ({}): {}", p.display(), e.path()), e.into_inner().to_string())
            })
        }
    }
}

/// Mode measures and switch costs of a network of Chua nodes.
pub fn chua_constants(chua: &ChuaParams, xi: &[f64], k: f64, lambda: f64, gamma: &Mat) -> multinorm::Result<SyncConstants> {
    let w1 = NormSpec::weighted(Lp::One, xi.to_vec())?;
    let e = NormSpec::euclidean(3);
    let mut mu0 = f64::NEG_INFINITY;
    let mut mu1 = f64::NEG_INFINITY;
    for df in chua.jacobians() {
        mu0 = mu0.max(matrix_measure(&w1, &df)?.value);
        let v = variational_mode_matrix(&df, k, lambda, 1.0, gamma);
        mu1 = mu1.max(matrix_measure(&e, &v)?.value);
    }
    Ok(SyncConstants {
        lambda2: Some(lambda),
        mu0,
        mu1,
        beta01: beta(&w1, &e)?.value,
        beta10: beta(&e, &w1)?.value,
        gamma_dissipative: matrix_measure(&e, &gamma.scale(-1.0))?.value <= 0.0,
    })
}

pub fn run(opts: &SyncOptions, base: &Path, dt: f64, seed: u64) -> Result<SyncReport, CliError> {
    let gamma = opts.gamma.clone().unwrap_or_else(|| Mat::identity(3));
    let graph = opts.graph.as_ref().map(|g| resolve_graph(g, base)).transpose()?;
    let mut constants = match &graph {
        Some(g) => chua_constants(&opts.chua, &opts.xi, opts.k, lambda2(&laplacian(g)?)?, &gamma)?,
        None => {
            let e = NormSpec::euclidean(3);
            SyncConstants {
                lambda2: None,
                mu0: f64::NAN,
                mu1: f64::NAN,
                beta01: f64::NAN,
                beta10: f64::NAN,
                gamma_dissipative: matrix_measure(&e, &gamma.scale(-1.0))?.value <= 0.0,
            }
        }
    };
    for (slot, v, name) in [
        (&mut constants.mu0, opts.mu0, "mu0"),
        (&mut constants.mu1, opts.mu1, "mu1"),
        (&mut constants.beta01, opts.beta01, "beta01"),
        (&mut constants.beta10, opts.beta10, "beta10"),
    ] {
        match v {
            Some(v) => *slot = v,
            None if slot.is_nan() => {
                return Err(CliError::config(format!("sync.{name}"), "required when no graph is given"));
            }
            None => {}
        }
    }
    let inputs = SyncInputs {
        mu0: constants.mu0,
        mu1: constants.mu1,
        beta01: constants.beta01,
        beta10: constants.beta10,
        duty_off: opts.duty_off,
        gamma_dissipative: constants.gamma_dissipative,
    };
    let t_star = match solve_min_period(&inputs, opts.c_min) {
        Ok(t) => Some(t),
        Err(multinorm::Error::Infeasible(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let period = match (opts.period, t_star) {
        (Some(p), _) => p,
        (None, Some(t)) => (2.0 * t).max(10.0 * dt),
        (None, None) => return Err(CliError::config("sync.period", "no period certifies; give one explicitly")),
    };
    let certificate = sync_certify(&inputs, period, opts.c_min)?;
    let simulation = match (&graph, opts.periods) {
        (Some(g), n) if n > 0 => {
            let cfg = BlinkNetConfig { chua: opts.chua, graph: g.clone(), k: opts.k, gamma: Some(gamma) };
            let horizon = period * n as f64;
            Some(simulate_network(&cfg, &blink_signal(period, opts.duty_off)?, horizon, opts.spread, dt, seed)?)
        }
        _ => None,
    };
    Ok(SyncReport { constants, duty_off: opts.duty_off, t_star, period, certificate, simulation })
}

/// Node states spread uniformly around a point near the attractor.
pub fn initial_states(nodes: usize, spread: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = [0.1, 0.0, 0.0];
    (0..nodes).flat_map(|_| base.map(|b| b + rng.random_range(-spread..=spread))).collect()
}

pub fn simulate_network(
    cfg: &BlinkNetConfig,
    signal: &SwitchingSignal,
    horizon: f64,
    spread: f64,
    dt: f64,
    seed: u64,
) -> Result<SyncSimulation, CliError> {
    let sys = blink_network_field(cfg)?;
    let x0 = initial_states(cfg.graph.nodes, spread, seed);
    let traj = simulate(&sys, signal, &x0, 0.0, horizon, dt)?;
    let errs: Vec<f64> = traj.states.iter().map(|x| sync_error(x, cfg.graph.nodes, 3)).collect();
    Ok(SyncSimulation {
        horizon,
        dt,
        initial_error: errs[0],
        final_error: *errs.last().expect("nonempty trajectory"),
        min_error: errs.iter().copied().fold(f64::INFINITY, f64::min),
        time_below_1e_3: errs.iter().position(|&e| e < 1e-3).map(|i| traj.times[i]),
    })
}

/// Signal with the coupling permanently off.
pub fn uncoupled_signal() -> SwitchingSignal {
    SwitchingSignal::constant(ModeId(0), 0.0)
}
