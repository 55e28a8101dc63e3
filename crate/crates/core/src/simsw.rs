//! Fixed-step integration of switched systems and empirical contraction checks.
//!
//! Integration is classical RK4 inside each constant-mode piece of the
//! signal. The step sequence restarts at every piece boundary and its last
//! step is shortened, so switch instants (and period boundaries) are always
//! sample points. The state is continuous across switches; only the field
//! changes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matcore::{norm2, Mat};
use crate::norms::{matrix_measure, norm_eval, NormSpec};
use crate::par::{map_slice, Exec};
use crate::switchsig::{ModeId, SwitchingSignal};
use crate::transact::beta;

/// State norm beyond which integration is abandoned.
pub const DIVERGENCE_GUARD: f64 = 1e12;

/// Vector field of one mode.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn jacobian(&self, t: f64, x: &[f64]) -> Mat;
}

/// Affine field `Ax + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearField {
    pub a: Mat,
    pub b: Vec<f64>,
}

impl LinearField {
    pub fn new(a: Mat, b: Vec<f64>) -> Result<Self> {
        if !a.is_square() || b.len() != a.rows() {
            return invalid(format!("linear field needs square A and matching b, got {}x{} and {}", a.rows(), a.cols(), b.len()));
        }
        Ok(Self { a, b })
    }

    pub fn homogeneous(a: Mat) -> Result<Self> {
        let n = a.rows();
        Self::new(a, vec![0.0; n])
    }
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn eval(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let n = self.a.rows();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = self.b[i] + self.a.row(i).iter().zip(x).map(|(a, x)| a * x).sum::<f64>();
        }
    }

    fn jacobian(&self, _t: f64, _x: &[f64]) -> Mat {
        self.a.clone()
    }
}

/// Collection of modes sharing one state dimension.
#[derive(Clone)]
pub struct SwitchedSystem {
    modes: BTreeMap<ModeId, Arc<dyn VectorField>>,
    dim: usize,
}

impl std::fmt::Debug for SwitchedSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SwitchedSystem").field("modes", &self.modes.keys().collect::<Vec<_>>()).field("dim", &self.dim).finish()
    }
}

impl SwitchedSystem {
    /// Builds the system, checking each Jacobian against central differences
    /// at a few random probes.
    pub fn new(modes: BTreeMap<ModeId, Arc<dyn VectorField>>) -> Result<Self> {
        let Some(dim) = modes.values().next().map(|f| f.dim()) else {
            return invalid("switched system needs at least one mode");
        };
        if dim == 0 {
            return invalid("state dimension must be positive");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x6a61_636f);
        for (id, field) in &modes {
            if field.dim() != dim {
                return invalid(format!("mode {id} has dimension {} but mode set uses {dim}", field.dim()));
            }
            for _ in 0..3 {
                let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                let t = rng.random_range(0.0..1.0);
                check_jacobian(field.as_ref(), t, &x).map_err(|e| match e {
                    Error::InvalidInput(msg) => Error::InvalidInput(format!("mode {id}: {msg}")),
                    other => other,
                })?;
            }
        }
        Ok(Self { modes, dim })
    }

    /// Linear modes `A_k x + b`.
    pub fn linear(modes: BTreeMap<ModeId, LinearField>) -> Result<Self> {
        Self::new(modes.into_iter().map(|(k, f)| (k, Arc::new(f) as Arc<dyn VectorField>)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self, id: ModeId) -> Result<&Arc<dyn VectorField>> {
        self.modes.get(&id).ok_or_else(|| Error::InvalidInput(format!("mode {id} is not defined")))
    }

    pub fn mode_ids(&self) -> Vec<ModeId> {
        self.modes.keys().copied().collect()
    }
}

fn check_jacobian(field: &dyn VectorField, t: f64, x: &[f64]) -> Result<()> {
    let n = x.len();
    let jac = field.jacobian(t, x);
    if jac.rows() != n || jac.cols() != n {
        return invalid("jacobian has the wrong shape");
    }
    let h = 1e-6;
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut xp = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + h;
        field.eval(t, &xp, &mut plus);
        xp[j] = x[j] - h;
        field.eval(t, &xp, &mut minus);
        xp[j] = x[j];
        for i in 0..n {
            let fd = (plus[i] - minus[i]) / (2.0 * h);
            if (fd - jac[(i, j)]).abs() > 1e-5 * (1.0 + jac[(i, j)].abs()) {
                return invalid(format!(
                    "jacobian entry ({i},{j}) is {} but finite differences give {fd}",
                    jac[(i, j)]
                ));
            }
        }
    }
    Ok(())
}

/// Sampled solution of a switched system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Mode active from each sample onwards (right-continuous).
    pub modes: Vec<ModeId>,
    pub dt: f64,
    pub method: String,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial sample")
    }

    /// Index of the sample at time `t`, if one lies within `tol`.
    pub fn index_of(&self, t: f64, tol: f64) -> Option<usize> {
        let i = self.times.partition_point(|&s| s < t - tol);
        (i < self.times.len() && (self.times[i] - t).abs() <= tol).then_some(i)
    }

    /// CSV with header `t,mode,x1..xn`.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t,mode");
        for i in 1..=n {
            let _ = write!(out, ",x{i}");
        }
        out.push('\n');
        for ((t, m), x) in self.times.iter().zip(&self.modes).zip(&self.states) {
            let _ = write!(out, "{t:.12e},{m}");
            for v in x {
                let _ = write!(out, ",{v:.12e}");
            }
            out.push('\n');
        }
        out
    }
}

fn rk4_step(f: &dyn VectorField, t: f64, x: &[f64], h: f64, k: &mut [Vec<f64>; 4], tmp: &mut [f64]) -> Vec<f64> {
    let n = x.len();
    f.eval(t, x, &mut k[0]);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k[0][i];
    }
    f.eval(t + 0.5 * h, tmp, &mut k[1]);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k[1][i];
    }
    f.eval(t + 0.5 * h, tmp, &mut k[2]);
    for i in 0..n {
        tmp[i] = x[i] + h * k[2][i];
    }
    f.eval(t + h, tmp, &mut k[3]);
    (0..n).map(|i| x[i] + h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i])).collect()
}

/// Integrates `ẋ = f(x, r(t))` from `t0` to `tf` with step `dt`.
pub fn simulate(
    system: &SwitchedSystem,
    signal: &SwitchingSignal,
    x0: &[f64],
    t0: f64,
    tf: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid(format!("dt must be positive, got {dt}"));
    }
    if !(tf > t0) {
        return invalid(format!("need tf > t0, got t0 = {t0}, tf = {tf}"));
    }
    if x0.len() != system.dim {
        return invalid(format!("initial state has length {} but the system has dimension {}", x0.len(), system.dim));
    }
    let pieces = signal.pieces(t0, tf)?;
    for p in &pieces {
        system.mode(p.mode)?;
    }
    let n = system.dim;
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![x0.to_vec()],
        modes: vec![pieces[0].mode],
        dt,
        method: "rk4-switch-aligned".into(),
    };
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut tmp = vec![0.0; n];
    let mut x = x0.to_vec();
    for (pi, piece) in pieces.iter().enumerate() {
        let field = system.mode(piece.mode)?.as_ref();
        let span = piece.end - piece.start;
        let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
        for s in 0..steps {
            let t = piece.start + s as f64 * dt;
            let t_next = if s + 1 == steps { piece.end } else { piece.start + (s + 1) as f64 * dt };
            x = rk4_step(field, t, &x, t_next - t, &mut k, &mut tmp);
            let norm = norm2(&x);
            let next_mode = if s + 1 == steps {
                pieces.get(pi + 1).map_or_else(|| signal.value_at(tf).unwrap_or(piece.mode), |p| p.mode)
            } else {
                piece.mode
            };
            traj.times.push(t_next);
            traj.states.push(x.clone());
            traj.modes.push(next_mode);
            if !(norm <= DIVERGENCE_GUARD) {
                return Err(Error::Diverged { at: t_next, partial: Box::new(traj) });
            }
        }
    }
    Ok(traj)
}

/// Error between two trajectories driven by the same signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDivergence {
    pub times: Vec<f64>,
    /// `|x − y|` in the norm of the active mode.
    pub error: Vec<f64>,
    pub error_euclidean: Vec<f64>,
    /// Least-squares slope of `ln error` over the second half of the horizon;
    /// `−∞` when the error vanishes there.
    pub fitted_rate: f64,
}

/// Integrates both initial states and measures their difference.
///
/// Modes missing from `norm_schedule` are measured in the Euclidean norm.
#[allow(clippy::too_many_arguments)]
pub fn pair_divergence(
    system: &SwitchedSystem,
    signal: &SwitchingSignal,
    x0: &[f64],
    y0: &[f64],
    norm_schedule: &BTreeMap<ModeId, NormSpec>,
    t0: f64,
    tf: f64,
    dt: f64,
) -> Result<PairDivergence> {
    let tx = simulate(system, signal, x0, t0, tf, dt)?;
    let ty = simulate(system, signal, y0, t0, tf, dt)?;
    let euclid = NormSpec::euclidean(system.dim);
    for spec in norm_schedule.values() {
        if spec.dim() != system.dim {
            return invalid("norm schedule dimension does not match the system");
        }
    }
    let mut error = Vec::with_capacity(tx.len());
    let mut error_euclidean = Vec::with_capacity(tx.len());
    let mut floor = Vec::with_capacity(tx.len());
    for ((x, y), mode) in tx.states.iter().zip(&ty.states).zip(&tx.modes) {
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let spec = norm_schedule.get(mode).unwrap_or(&euclid);
        error.push(norm_eval(spec, &d)?);
        error_euclidean.push(norm2(&d));
        floor.push(1e2 * f64::EPSILON * norm2(x).max(norm2(y)));
    }
    let half = t0 + 0.5 * (tf - t0);
    let pts: Vec<(f64, f64)> = tx
        .times
        .iter()
        .zip(&error)
        .zip(&error_euclidean)
        .zip(&floor)
        .filter(|(((t, _), eu), fl)| **t >= half && **eu > **fl && **eu > 0.0)
        .map(|(((t, e), _), _)| (*t, e.ln()))
        .collect();
    Ok(PairDivergence { times: tx.times, error, error_euclidean, fitted_rate: fit_slope(&pts) })
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NEG_INFINITY;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return f64::NEG_INFINITY;
    }
    sxy / sxx
}

/// Runs [`pair_divergence`] for many initial pairs.
#[allow(clippy::too_many_arguments)]
pub fn pair_divergence_batch(
    system: &SwitchedSystem,
    signal: &SwitchingSignal,
    pairs: &[(Vec<f64>, Vec<f64>)],
    norm_schedule: &BTreeMap<ModeId, NormSpec>,
    t0: f64,
    tf: f64,
    dt: f64,
    exec: Exec,
) -> Vec<Result<PairDivergence>> {
    map_slice(exec, pairs, |(x0, y0)| pair_divergence(system, signal, x0, y0, norm_schedule, t0, tf, dt))
}

/// One mode of a linear audit: `ẋ = Ax`, claimed bound `α ≥ μ(A)` in `norm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditMode {
    pub a: Mat,
    pub alpha: f64,
    pub norm: NormSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoppelReport {
    /// Largest `|x(t)|_{χ(t)} / bound(t)` over the samples.
    pub max_ratio: f64,
    pub violations: usize,
    pub samples: usize,
    pub tolerance: f64,
    /// Modes whose α is below the actual measure of their matrix.
    pub alpha_too_small: Vec<ModeId>,
}

impl CoppelReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Replays the switched Coppel bound
/// `|x(t)|_{χ(t)} ≤ exp(∫α + Σ ln β) |x(t0)|_{χ(t0)}` along a simulated
/// linear trajectory, with `β` from [`beta`] at each switch.
pub fn coppel_audit(
    modes: &BTreeMap<ModeId, AuditMode>,
    signal: &SwitchingSignal,
    x0: &[f64],
    t0: f64,
    tf: f64,
    dt: f64,
) -> Result<CoppelReport> {
    let mut alpha_too_small = Vec::new();
    for (&id, m) in modes {
        if m.alpha < matrix_measure(&m.norm, &m.a)?.value - 1e-12 {
            alpha_too_small.push(id);
        }
    }
    let system = SwitchedSystem::linear(
        modes.iter().map(|(&k, m)| LinearField::homogeneous(m.a.clone()).map(|f| (k, f))).collect::<Result<_>>()?,
    )?;
    let traj = simulate(&system, signal, x0, t0, tf, dt)?;
    let mut log_betas: BTreeMap<(ModeId, ModeId), f64> = BTreeMap::new();
    for sw in signal.switch_times(t0, tf)? {
        if let std::collections::btree_map::Entry::Vacant(e) = log_betas.entry((sw.from, sw.to)) {
            e.insert(beta(&modes[&sw.from].norm, &modes[&sw.to].norm)?.value.ln());
        }
    }
    let tolerance = 1e-6 + 10.0 * dt.powi(4);
    let start = norm_eval(&modes[&traj.modes[0]].norm, x0)?;
    let mut log_bound = 0.0;
    let mut max_ratio: f64 = 0.0;
    let mut violations = 0;
    for i in 0..traj.len() {
        if i > 0 {
            let prev = traj.modes[i - 1];
            log_bound += modes[&prev].alpha * (traj.times[i] - traj.times[i - 1]);
            if traj.modes[i] != prev {
                log_bound += log_betas.get(&(prev, traj.modes[i])).copied().unwrap_or(0.0);
            }
        }
        let lhs = norm_eval(&modes[&traj.modes[i]].norm, &traj.states[i])?;
        let bound = log_bound.exp() * start;
        let ratio = if bound > 0.0 { lhs / bound } else if lhs == 0.0 { 0.0 } else { f64::INFINITY };
        if ratio > 1.0 + tolerance {
            violations += 1;
        }
        max_ratio = max_ratio.max(ratio);
    }
    Ok(CoppelReport { max_ratio, violations, samples: traj.len(), tolerance, alpha_too_small })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitReport {
    pub period: f64,
    /// Largest `‖x(t + P) − x(t)‖₂ / (1 + ‖x(t)‖₂)` over the checked periods.
    pub max_mismatch: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks that the solution repeats with the signal's period after a transient.
pub fn periodic_orbit_check(
    system: &SwitchedSystem,
    signal: &SwitchingSignal,
    x0: &[f64],
    n_transient: usize,
    n_check: usize,
    dt: f64,
) -> Result<OrbitReport> {
    let Some(period) = signal.period() else {
        return invalid("periodic_orbit_check needs a periodic signal");
    };
    if n_check == 0 {
        return invalid("need at least one checked period");
    }
    let t0 = signal.t0();
    let t_start = t0 + n_transient as f64 * period;
    let tf = t0 + (n_transient + n_check) as f64 * period;
    let traj = simulate(system, signal, x0, t0, tf, dt)?;
    let tol_t = 1e-9 * (1.0 + tf.abs());
    let first = traj.index_of(t_start, tol_t).unwrap_or_else(|| traj.times.partition_point(|&s| s < t_start));
    let mut max_mismatch: f64 = 0.0;
    for i in first..traj.len() {
        let t = traj.times[i];
        if t + period > tf + tol_t {
            break;
        }
        let Some(j) = traj.index_of(t + period, tol_t) else { continue };
        let d: Vec<f64> = traj.states[j].iter().zip(&traj.states[i]).map(|(a, b)| a - b).collect();
        max_mismatch = max_mismatch.max(norm2(&d) / (1.0 + norm2(&traj.states[i])));
    }
    let tolerance = 1e-5;
    Ok(OrbitReport { period, max_mismatch, tolerance, passed: max_mismatch <= tolerance })
}
