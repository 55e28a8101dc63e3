//! Staircase switching signals and dwell/switch statistics.
//!
//! Switch instants are attributed to half-open windows `(s, t]`: a switch
//! exactly at `s` is not counted, one exactly at `t` is. This makes window
//! statistics exactly additive.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Mode identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeId(pub u32);

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for ModeId {
    fn from(v: u32) -> Self {
        ModeId(v)
    }
}

/// A switch instant together with the modes on either side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Switch {
    pub t: f64,
    pub from: ModeId,
    pub to: ModeId,
}

/// Maximal interval `[start, end)` on which the mode is constant, clipped to
/// the queried window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub mode: ModeId,
}

/// Piecewise-constant mode schedule, optionally repeated periodically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRepr", into = "SignalRepr")]
pub struct SwitchingSignal {
    segments: Vec<(ModeId, f64)>,
    periodic: bool,
    t0: f64,
    // prefix[i] = start offset of segment i; prefix[len] = total length
    prefix: Vec<f64>,
}

impl SwitchingSignal {
    pub fn new(segments: Vec<(ModeId, f64)>, periodic: bool, t0: f64) -> Result<Self> {
        if segments.is_empty() {
            return invalid("switching signal needs at least one segment");
        }
        if !t0.is_finite() {
            return invalid("t0 must be finite");
        }
        if let Some((m, d)) = segments.iter().find(|(_, d)| !(d.is_finite() && *d > 0.0)) {
            return invalid(format!("dwell of mode {m} must be positive and finite, got {d}"));
        }
        let mut merged: Vec<(ModeId, f64)> = Vec::with_capacity(segments.len());
        for (mode, dwell) in segments {
            match merged.last_mut() {
                Some((m, d)) if *m == mode => *d += dwell,
                _ => merged.push((mode, dwell)),
            }
        }
        let mut prefix = Vec::with_capacity(merged.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for (_, d) in &merged {
            acc += d;
            prefix.push(acc);
        }
        Ok(Self { segments: merged, periodic, t0, prefix })
    }

    /// Constant mode forever.
    pub fn constant(mode: ModeId, t0: f64) -> Self {
        Self::new(vec![(mode, 1.0)], true, t0).expect("valid")
    }

    /// Periodic two-mode signal with the given dwells.
    pub fn alternating(a: ModeId, da: f64, b: ModeId, db: f64, t0: f64) -> Result<Self> {
        Self::new(vec![(a, da), (b, db)], true, t0)
    }

    pub fn segments(&self) -> &[(ModeId, f64)] {
        &self.segments
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Length of one period (periodic) or of the whole schedule.
    pub fn total_length(&self) -> f64 {
        self.prefix[self.segments.len()]
    }

    pub fn period(&self) -> Option<f64> {
        self.periodic.then(|| self.total_length())
    }

    /// End of the domain; infinite for periodic signals.
    pub fn end(&self) -> f64 {
        if self.periodic {
            f64::INFINITY
        } else {
            self.t0 + self.total_length()
        }
    }

    pub fn modes(&self) -> Vec<ModeId> {
        let mut m: Vec<ModeId> = self.segments.iter().map(|s| s.0).collect();
        m.sort();
        m.dedup();
        m
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if !(t >= self.t0 && t <= self.end()) {
            return Err(Error::OutOfDomain { t, start: self.t0, end: self.end() });
        }
        Ok(())
    }

    fn period_start(&self, k: i64) -> f64 {
        self.t0 + k as f64 * self.total_length()
    }

    // Start of segment i in period k; the end of the last segment is the
    // start of the next period so that adjacent pieces share endpoints.
    fn boundary(&self, k: i64, i: usize) -> f64 {
        if i == self.segments.len() && self.periodic {
            self.period_start(k + 1)
        } else {
            self.period_start(k) + self.prefix[i]
        }
    }

    /// Mode at `t`, right-continuous at switch instants.
    pub fn value_at(&self, t: f64) -> Result<ModeId> {
        self.check_domain(t)?;
        let len = self.total_length();
        let (base, offset) = if self.periodic {
            let mut k = ((t - self.t0) / len).floor() as i64;
            // Snap values that land a rounding error short of a period boundary.
            if t >= self.period_start(k + 1) - snap(t) {
                k += 1;
            }
            (self.period_start(k), t - self.period_start(k))
        } else {
            (self.t0, t - self.t0)
        };
        let tol = snap(base.abs().max(t.abs()));
        let idx = (1..self.segments.len())
            .rev()
            .find(|&i| offset >= self.prefix[i] - tol)
            .unwrap_or(0);
        Ok(self.segments[idx].0)
    }

    /// Constant-mode pieces covering `[s, t]`, in order.
    pub fn pieces(&self, s: f64, t: f64) -> Result<Vec<Piece>> {
        self.check_domain(s)?;
        self.check_domain(t)?;
        if t < s {
            return invalid(format!("window end {t} precedes start {s}"));
        }
        let mut out = Vec::new();
        let m = self.segments.len();
        let k_first = if self.periodic {
            (((s - self.t0) / self.total_length()).floor() as i64 - 1).max(0)
        } else {
            0
        };
        let mut k = k_first;
        loop {
            let base = self.period_start(k);
            if base >= t && k > k_first {
                break;
            }
            for i in 0..m {
                let a = self.boundary(k, i).max(s);
                let b = self.boundary(k, i + 1).min(t);
                if b > a {
                    out.push(Piece { start: a, end: b, mode: self.segments[i].0 });
                }
            }
            if !self.periodic {
                break;
            }
            k += 1;
        }
        if out.is_empty() {
            // Degenerate window s == t.
            out.push(Piece { start: s, end: t, mode: self.value_at(s)? });
        }
        Ok(out)
    }

    /// Mode changes in `(s, t]`.
    pub fn switch_times(&self, s: f64, t: f64) -> Result<Vec<Switch>> {
        let pieces = self.pieces(s, t)?;
        let mut out: Vec<Switch> = pieces
            .windows(2)
            .filter(|w| w[0].mode != w[1].mode)
            .map(|w| Switch { t: w[1].start, from: w[0].mode, to: w[1].mode })
            .collect();
        // A switch exactly at t belongs to the window.
        if t < self.end() {
            let last = pieces.last().expect("non-empty").mode;
            let next = self.mode_after(t);
            if next != last && self.is_boundary(t) {
                out.push(Switch { t, from: last, to: next });
            }
        }
        Ok(out)
    }

    fn mode_after(&self, t: f64) -> ModeId {
        self.value_at(t).expect("in domain")
    }

    fn is_boundary(&self, t: f64) -> bool {
        let len = self.total_length();
        let k = if self.periodic { ((t - self.t0) / len).floor() as i64 } else { 0 };
        (k - 1..=k + 1).any(|k| {
            let base = self.period_start(k);
            self.prefix.iter().any(|p| (base + p - t).abs() <= snap(t))
        })
    }

    /// Durations and ordered-pair switch counts over `(s, t]`.
    pub fn dwell_stats(&self, s: f64, t: f64) -> Result<DwellStats> {
        if !(t > s) {
            return invalid(format!("empty window ({s}, {t}]"));
        }
        let mut stats = DwellStats::default();
        for p in self.pieces(s, t)? {
            *stats.durations.entry(p.mode).or_insert(0.0) += p.end - p.start;
        }
        for sw in self.switch_times(s, t)? {
            *stats.transitions.entry((sw.from, sw.to)).or_insert(0) += 1;
            stats.total_switches += 1;
        }
        Ok(stats)
    }
}

fn snap(scale: f64) -> f64 {
    8.0 * f64::EPSILON * scale.max(1.0)
}

/// Window statistics of a switching signal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DwellStats {
    pub durations: BTreeMap<ModeId, f64>,
    #[serde(with = "pair_map")]
    pub transitions: BTreeMap<(ModeId, ModeId), u64>,
    pub total_switches: u64,
}

impl DwellStats {
    pub fn duration(&self, mode: ModeId) -> f64 {
        self.durations.get(&mode).copied().unwrap_or(0.0)
    }

    pub fn count(&self, from: ModeId, to: ModeId) -> u64 {
        self.transitions.get(&(from, to)).copied().unwrap_or(0)
    }

    pub fn window_length(&self) -> f64 {
        self.durations.values().sum()
    }
}

/// Serializes `(from, to) -> value` maps as a list of records.
pub(crate) mod pair_map {
    use super::ModeId;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    #[derive(Serialize, Deserialize)]
    struct Entry<V> {
        from: ModeId,
        to: ModeId,
        value: V,
    }

    pub fn serialize<S: Serializer, V: Serialize + Clone>(
        map: &BTreeMap<(ModeId, ModeId), V>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let v: Vec<Entry<V>> =
            map.iter().map(|(&(from, to), value)| Entry { from, to, value: value.clone() }).collect();
        v.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, V: Deserialize<'de>>(
        de: D,
    ) -> Result<BTreeMap<(ModeId, ModeId), V>, D::Error> {
        let v: Vec<Entry<V>> = Vec::deserialize(de)?;
        Ok(v.into_iter().map(|e| ((e.from, e.to), e.value)).collect())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalRepr {
    segments: Vec<(ModeId, f64)>,
    #[serde(default)]
    periodic: bool,
    #[serde(default)]
    t0: f64,
}

impl TryFrom<SignalRepr> for SwitchingSignal {
    type Error = Error;

    fn try_from(r: SignalRepr) -> Result<Self> {
        SwitchingSignal::new(r.segments, r.periodic, r.t0)
    }
}

impl From<SwitchingSignal> for SignalRepr {
    fn from(s: SwitchingSignal) -> Self {
        SignalRepr { segments: s.segments, periodic: s.periodic, t0: s.t0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(v: u32) -> ModeId {
        ModeId(v)
    }

    fn two_mode() -> SwitchingSignal {
        SwitchingSignal::alternating(m(1), 1.0, m(2), 1.0, 0.0).unwrap()
    }

    #[test]
    fn value_at_examples() {
        let c = SwitchingSignal::constant(m(1), 0.0);
        assert_eq!(c.value_at(123.4).unwrap(), m(1));
        let s = two_mode();
        assert_eq!(s.value_at(0.0).unwrap(), m(1));
        assert_eq!(s.value_at(1.0).unwrap(), m(2));
        assert_eq!(s.value_at(3.5).unwrap(), m(2));
        assert_eq!(s.value_at(2.0).unwrap(), m(1));
        assert_eq!(s.value_at(1.0 - 1e-9).unwrap(), m(1));
        assert!(matches!(s.value_at(-0.1), Err(Error::OutOfDomain { .. })));
        let finite = SwitchingSignal::new(vec![(m(1), 1.0), (m(2), 1.0)], false, 0.0).unwrap();
        assert!(matches!(finite.value_at(2.5), Err(Error::OutOfDomain { .. })));
        assert_eq!(finite.value_at(2.0).unwrap(), m(2));
    }

    #[test]
    fn dwell_stats_examples() {
        let c = SwitchingSignal::constant(m(3), 0.0);
        let st = c.dwell_stats(1.0, 4.0).unwrap();
        assert_eq!(st.duration(m(3)), 3.0);
        assert_eq!(st.total_switches, 0);

        let s = two_mode();
        let st = s.dwell_stats(0.0, 4.0).unwrap();
        assert_eq!((st.duration(m(1)), st.duration(m(2))), (2.0, 2.0));
        assert_eq!((st.count(m(1), m(2)), st.count(m(2), m(1))), (2, 2));
        let st = s.dwell_stats(0.5, 2.5).unwrap();
        assert_eq!((st.duration(m(1)), st.duration(m(2))), (1.0, 1.0));
        assert_eq!((st.count(m(1), m(2)), st.count(m(2), m(1))), (1, 1));
        // Switch at the left edge is excluded, at the right edge included.
        let st = s.dwell_stats(1.0, 2.0).unwrap();
        assert_eq!((st.count(m(1), m(2)), st.count(m(2), m(1))), (0, 1));
    }

    #[test]
    fn equal_neighbours_are_merged() {
        let s = SwitchingSignal::new(vec![(m(1), 1.0), (m(1), 0.5), (m(2), 1.0), (m(1), 1.0)], true, 0.0).unwrap();
        assert_eq!(s.segments(), &[(m(1), 1.5), (m(2), 1.0), (m(1), 1.0)]);
        // The wrap 1 -> 1 is not a switch.
        let st = s.dwell_stats(0.0, s.total_length()).unwrap();
        assert_eq!(st.total_switches, 2);
    }

    #[test]
    fn json_round_trip() {
        let s: SwitchingSignal =
            serde_json::from_str(r#"{"segments":[[1,1.0],[2,1.0]],"periodic":true,"t0":0.0}"#).unwrap();
        assert_eq!(s, two_mode());
        let back: SwitchingSignal = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<SwitchingSignal>(r#"{"segments":[[1,0.0]]}"#).is_err());
        let st = s.dwell_stats(0.0, 2.0).unwrap();
        let v = serde_json::to_value(&st).unwrap();
        assert_eq!(v["transitions"][0]["from"], 1);
    }

    #[test]
    fn pieces_cover_window() {
        let s = SwitchingSignal::new(vec![(m(0), 0.07), (m(1), 0.21)], true, 0.3).unwrap();
        let ps = s.pieces(0.3, 100.0).unwrap();
        assert_eq!(ps.first().unwrap().start, 0.3);
        assert_eq!(ps.last().unwrap().end, 100.0);
        for w in ps.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }

    fn signal_strategy() -> impl Strategy<Value = SwitchingSignal> {
        (prop::collection::vec((0u32..3, 0.1f64..2.0), 1..5), -1.0f64..1.0)
            .prop_map(|(segs, t0)| {
                SwitchingSignal::new(segs.into_iter().map(|(a, d)| (ModeId(a), d)).collect(), true, t0).unwrap()
            })
    }

    proptest! {
        #[test]
        fn additivity(s in signal_strategy(), a in 0.0f64..5.0, b in 0.01f64..5.0, c in 0.01f64..5.0) {
            let (x, y, z) = (s.t0() + a, s.t0() + a + b, s.t0() + a + b + c);
            let left = s.dwell_stats(x, y).unwrap();
            let right = s.dwell_stats(y, z).unwrap();
            let whole = s.dwell_stats(x, z).unwrap();
            prop_assert_eq!(left.total_switches + right.total_switches, whole.total_switches);
            for mode in s.modes() {
                let sum = left.duration(mode) + right.duration(mode);
                prop_assert!((sum - whole.duration(mode)).abs() <= 1e-12 * (1.0 + z.abs()));
            }
            for (&(f, t), &n) in &whole.transitions {
                prop_assert_eq!(left.count(f, t) + right.count(f, t), n);
            }
            prop_assert!((whole.window_length() - (z - x)).abs() <= 1e-12 * (1.0 + z.abs()));
        }

        #[test]
        fn periodic_shift_invariance(s in signal_strategy(), shift in 0.0f64..7.0) {
            let p = s.total_length();
            let start = s.t0() + shift;
            let base = s.dwell_stats(s.t0(), s.t0() + p).unwrap();
            let moved = s.dwell_stats(start, start + p).unwrap();
            prop_assert_eq!(&base.transitions, &moved.transitions);
            let segs = s.segments();
            let wrap_distinct = segs.len() > 1 && segs[0].0 != segs[segs.len() - 1].0;
            let expected = if segs.len() == 1 { 0 } else { segs.len() - 1 + usize::from(wrap_distinct) };
            prop_assert_eq!(base.total_switches as usize, expected);
        }
    }
}
