//! Averaged contraction conditions over switching schedules.
//!
//! Every path reduces to the same quantity: for a window of length `T`
//! starting at `t0`,
//!
//! ```text
//! R(T) = (1/T) [ ∫ α dt + Σ log β ]
//! ```
//!
//! and the certified rate is `c = −sup_T R(T)`. With piecewise-constant `α`,
//! `T·R(T)` is piecewise linear with jumps at switch events, so `R` is
//! monotone between breakpoints and the supremum is found exactly by
//! checking every breakpoint from both sides.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::norms::NormSpec;
use crate::switchsig::{pair_map, ModeId, SwitchingSignal};
use crate::transact::{beta, BetaKind};

/// Transaction coefficient with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEntry {
    pub value: f64,
    pub kind: BetaKind,
}

/// Per-mode measure bounds and per-switch transaction coefficients.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeBounds {
    pub alpha: BTreeMap<ModeId, f64>,
    #[serde(with = "pair_map", default)]
    pub beta: BTreeMap<(ModeId, ModeId), BetaEntry>,
    /// Optional analysis norm per mode; switches between equal norms cost nothing.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub norms: BTreeMap<ModeId, NormSpec>,
}

impl ModeBounds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_alpha(mut self, mode: ModeId, alpha: f64) -> Self {
        self.alpha.insert(mode, alpha);
        self
    }

    pub fn with_beta(mut self, from: ModeId, to: ModeId, value: f64, kind: BetaKind) -> Self {
        self.beta.insert((from, to), BetaEntry { value, kind });
        self
    }

    /// Fills every ordered pair of the given norms with [`beta`].
    pub fn with_norms(mut self, norms: BTreeMap<ModeId, NormSpec>) -> Result<Self> {
        for (&k, a) in &norms {
            for (&l, b) in &norms {
                if k != l {
                    let r = beta(a, b)?;
                    self.beta.insert((k, l), BetaEntry { value: r.value, kind: r.kind });
                }
            }
        }
        self.norms = norms;
        Ok(self)
    }

    pub fn alpha_of(&self, mode: ModeId) -> Result<f64> {
        self.alpha.get(&mode).copied().ok_or(Error::MissingAlpha(mode))
    }

    pub fn beta_of(&self, from: ModeId, to: ModeId) -> Result<BetaEntry> {
        if let Some(b) = self.beta.get(&(from, to)) {
            return Ok(*b);
        }
        match (self.norms.get(&from), self.norms.get(&to)) {
            (Some(a), Some(b)) if a == b => Ok(BetaEntry { value: 1.0, kind: BetaKind::Exact }),
            _ => Err(Error::MissingBeta(from, to)),
        }
    }

    fn validate(&self) -> Result<()> {
        for (&(k, l), b) in &self.beta {
            if !(b.value.is_finite() && b.value > 0.0) {
                return invalid(format!("beta {k}->{l} must be positive, got {}", b.value));
            }
            if !b.kind.is_sound() {
                return invalid(format!("beta {k}->{l} is a sampled lower estimate and cannot back a certificate"));
            }
        }
        if let Some((m, a)) = self.alpha.iter().find(|(_, a)| !a.is_finite()) {
            return invalid(format!("alpha of mode {m} must be finite, got {a}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    General,
    Staircase,
    Periodic,
    Ltv2,
    Sync,
}

/// Terms of the binding window: `alpha_term + log_beta_term = −c·length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub length: f64,
    pub alpha_term: f64,
    pub log_beta_term: f64,
    /// True when the supremum is the limit from the left of `length`, i.e.
    /// the events at that instant are not included.
    pub left_limit: bool,
}

impl Breakdown {
    fn rate(&self) -> f64 {
        -(self.alpha_term + self.log_beta_term) / self.length
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub c: f64,
    pub c_min: f64,
    pub satisfied: bool,
    pub breakdown: Breakdown,
    /// `(T0, T_max)`; for single-period forms both equal the period.
    pub window: (f64, f64),
    /// Rate from the supremum over windows, when it differs from `c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_rate: Option<f64>,
    /// Literal two-mode formula, reported next to the dwell-consistent `c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub literal_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Certificate {
    fn build(kind: CertificateKind, breakdown: Breakdown, c_min: f64, window: (f64, f64)) -> Self {
        let c = breakdown.rate();
        Self {
            kind,
            c,
            c_min,
            satisfied: c > c_min,
            breakdown,
            window,
            window_rate: None,
            literal_rate: None,
            notes: Vec::new(),
        }
    }
}

/// Piecewise-constant α given as consecutive `(duration, value)` segments.
pub type AlphaProfile = [(f64, f64)];

/// `(time, log β)` switch events.
type Events = Vec<(f64, f64)>;

/// `c = −sup_{T ∈ (T0, T_max]} R(T)` for an explicit α profile and a list of
/// `(time, log β)` events. Event times are absolute; the profile starts at `t0`.
pub fn certify_general(
    alpha_profile: &AlphaProfile,
    log_beta_events: &[(f64, f64)],
    t0: f64,
    big_t0: f64,
    t_max: f64,
) -> Result<Certificate> {
    if alpha_profile.is_empty() {
        return invalid("alpha profile is empty");
    }
    if !(t_max > big_t0 && big_t0 > 0.0) {
        return invalid(format!("need T_max > T0 > 0, got T0 = {big_t0}, T_max = {t_max}"));
    }
    if alpha_profile.iter().any(|(d, a)| !(d.is_finite() && *d > 0.0 && a.is_finite())) {
        return invalid("alpha profile needs positive durations and finite values");
    }
    let covered: f64 = alpha_profile.iter().map(|s| s.0).sum();
    if covered < t_max * (1.0 - 1e-12) {
        return invalid(format!("alpha profile covers {covered} s but the window needs {t_max} s"));
    }
    let mut events: Vec<(f64, f64)> = log_beta_events.iter().map(|&(t, lb)| (t - t0, lb)).collect();
    if events.iter().any(|e| !e.1.is_finite()) {
        return invalid("log beta values must be finite");
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let bd = sup_breakdown(alpha_profile, &events, big_t0, t_max);
    let mut cert = Certificate::build(CertificateKind::General, bd, 0.0, (big_t0, t_max));
    cert.satisfied = cert.c > 0.0;
    Ok(cert)
}

/// Core sweep. Event times are relative to the window start.
fn sup_breakdown(alpha: &AlphaProfile, events: &[(f64, f64)], big_t0: f64, t_max: f64) -> Breakdown {
    // Breakpoints: profile changes and event instants inside (T0, T_max].
    let mut bps: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    for (d, _) in alpha {
        acc += d;
        if acc > big_t0 && acc < t_max {
            bps.push(acc);
        }
    }
    bps.extend(events.iter().map(|e| e.0).filter(|&t| t > big_t0 && t < t_max));
    bps.push(t_max);
    bps.sort_by(f64::total_cmp);
    bps.dedup();

    let integral = |t: f64| -> f64 {
        let mut acc = 0.0;
        let mut start = 0.0;
        for &(d, a) in alpha {
            if start >= t {
                break;
            }
            acc += a * (d.min(t - start));
            start += d;
        }
        acc
    };
    let log_beta = |t: f64, inclusive: bool| -> f64 {
        events.iter().filter(|e| if inclusive { e.0 <= t } else { e.0 < t }).map(|e| e.1).sum()
    };
    let candidate = |t: f64, left: bool| Breakdown {
        length: t,
        alpha_term: integral(t),
        log_beta_term: log_beta(t, !left),
        left_limit: left,
    };

    // T -> T0+ includes any events at T0.
    let mut best = candidate(big_t0, false);
    for &t in &bps {
        for left in [true, false] {
            let c = candidate(t, left);
            if c.rate() < best.rate() {
                best = c;
            }
        }
    }
    best
}

/// Staircase condition over the windows `(t0, t0 + T]`, `T ∈ (T0, T_max]`.
///
/// For periodic signals `c` is the single-period rate over `(t0, t0 + P]`,
/// which is the asymptotic rate; the supremum over windows is reported as
/// `window_rate`. `T0` defaults to one period (periodic) or 1% of `T_max`.
pub fn certify_staircase(
    bounds: &ModeBounds,
    signal: &SwitchingSignal,
    t0: f64,
    big_t0: Option<f64>,
    t_max: f64,
    c_min: f64,
) -> Result<Certificate> {
    bounds.validate()?;
    let big_t0 = big_t0.unwrap_or_else(|| signal.period().unwrap_or(0.01 * t_max));
    if !(t_max > big_t0 && big_t0 > 0.0) {
        return invalid(format!("need T_max > T0 > 0, got T0 = {big_t0}, T_max = {t_max}"));
    }
    let (profile, events) = staircase_terms(bounds, signal, t0, t_max)?;
    let sup = sup_breakdown(&profile, &events, big_t0, t_max);

    let mut notes = Vec::new();
    if bounds.beta.values().any(|b| b.kind == BetaKind::Asserted) {
        notes.push("some transaction coefficients are caller-asserted and unverified".into());
    }
    match signal.period() {
        Some(p) => {
            let (profile, events) = staircase_terms(bounds, signal, t0, p)?;
            let alpha_term = profile.iter().map(|(d, a)| d * a).sum();
            let log_beta_term = events.iter().map(|e| e.1).sum();
            let bd = Breakdown { length: p, alpha_term, log_beta_term, left_limit: false };
            let mut cert = Certificate::build(CertificateKind::Periodic, bd, c_min, (p, p));
            cert.window_rate = Some(sup.rate());
            cert.notes = notes;
            Ok(cert)
        }
        None => {
            let mut cert = Certificate::build(CertificateKind::Staircase, sup, c_min, (big_t0, t_max));
            cert.notes = notes;
            Ok(cert)
        }
    }
}

/// α segments and `(relative time, log β)` events of a signal over `(t0, t0 + len]`.
fn staircase_terms(
    bounds: &ModeBounds,
    signal: &SwitchingSignal,
    t0: f64,
    len: f64,
) -> Result<(Vec<(f64, f64)>, Events)> {
    let mut profile = Vec::new();
    for p in signal.pieces(t0, t0 + len)? {
        profile.push((p.end - p.start, bounds.alpha_of(p.mode)?));
    }
    let mut events = Vec::new();
    for sw in signal.switch_times(t0, t0 + len)? {
        events.push((sw.t - t0, bounds.beta_of(sw.from, sw.to)?.value.ln()));
    }
    Ok((profile, events))
}

/// Two-mode periodic condition with switching frequency `φ_r`.
///
/// `c` is the dwell-consistent rate of the equal-dwell staircase with
/// `Δ = 1/(2φ_r)`; the printed closed form
/// `−½[μ1 + μ2 + φ_r(ln β12 + ln β21)]` is returned as `literal_rate`.
pub fn certify_ltv_two_mode(mu1: f64, mu2: f64, beta12: f64, beta21: f64, phi_r: f64) -> Result<Certificate> {
    if !(beta12 > 0.0 && beta21 > 0.0 && phi_r > 0.0) {
        return invalid("beta values and phi_r must be positive");
    }
    let dwell = 1.0 / (2.0 * phi_r);
    let (m1, m2) = (ModeId(1), ModeId(2));
    let bounds = ModeBounds::new()
        .with_alpha(m1, mu1)
        .with_alpha(m2, mu2)
        .with_beta(m1, m2, beta12, BetaKind::Asserted)
        .with_beta(m2, m1, beta21, BetaKind::Asserted);
    let signal = SwitchingSignal::alternating(m1, dwell, m2, dwell, 0.0)?;
    let mut cert = certify_staircase(&bounds, &signal, 0.0, None, 4.0 * dwell, 0.0)?;
    let literal = -0.5 * (mu1 + mu2 + phi_r * (beta12.ln() + beta21.ln()));
    cert.kind = CertificateKind::Ltv2;
    cert.literal_rate = Some(literal);
    cert.window_rate = None;
    cert.notes.clear();
    if (literal - cert.c).abs() > 1e-9 * (1.0 + cert.c.abs()) {
        cert.notes.push(format!(
            "literal formula gives {literal:.6}, dwell-consistent staircase gives {:.6}",
            cert.c
        ));
    }
    Ok(cert)
}

/// Inputs of the blinking-network condition. Mode 0 is coupling off, mode 1
/// coupling on; `duty_off` is the fraction of each period spent in mode 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncInputs {
    pub mu0: f64,
    pub mu1: f64,
    pub beta01: f64,
    pub beta10: f64,
    pub duty_off: f64,
    /// Caller confirms `μ1(−Γ) ≤ 0` under the mode-1 norm.
    pub gamma_dissipative: bool,
}

impl SyncInputs {
    fn validate(&self) -> Result<()> {
        if !self.gamma_dissipative {
            return invalid("the coupling matrix condition mu1(-Gamma) <= 0 must be asserted");
        }
        if !(self.beta01 > 0.0 && self.beta10 > 0.0) {
            return invalid("beta values must be positive");
        }
        if !(0.0..=1.0).contains(&self.duty_off) {
            return invalid(format!("duty_off must lie in [0, 1], got {}", self.duty_off));
        }
        Ok(())
    }

    fn mean_measure(&self) -> f64 {
        self.mu0 * self.duty_off + self.mu1 * (1.0 - self.duty_off)
    }

    fn log_cost(&self) -> f64 {
        self.beta01.ln() + self.beta10.ln()
    }
}

/// Per-period rate of the blinking network at period `T`.
pub fn sync_certify(inputs: &SyncInputs, period: f64, c_min: f64) -> Result<Certificate> {
    inputs.validate()?;
    if !(period > 0.0) {
        return invalid("period must be positive");
    }
    let d = inputs.duty_off;
    let bd = Breakdown {
        length: period,
        alpha_term: inputs.mu0 * d * period + inputs.mu1 * (1.0 - d) * period,
        log_beta_term: inputs.log_cost(),
        left_limit: false,
    };
    Ok(Certificate::build(CertificateKind::Sync, bd, c_min, (period, period)))
}

/// Smallest period above which the blinking network certifies with rate
/// above `c_min`; zero when switching costs nothing.
pub fn solve_min_period(inputs: &SyncInputs, c_min: f64) -> Result<f64> {
    inputs.validate()?;
    let denom = -inputs.mean_measure() - c_min;
    if !(denom > 0.0) {
        return Err(Error::Infeasible(format!(
            "duty-weighted measure {:.6} leaves no margin for c_min = {c_min}",
            inputs.mean_measure()
        )));
    }
    Ok((inputs.log_cost() / denom).max(0.0))
}
