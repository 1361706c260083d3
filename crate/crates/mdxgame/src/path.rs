//! Exact piecewise-linear path algebra.
//!
//! Controls are represented by their breakpoints, so every operation in the
//! crate (dynamics assembly, reflection, crossing times, cost integrals) is a
//! finite computation on segments with no discretization error.
//!
//! Three path classes:
//! - [`PiecewisePath`]: continuous, strictly increasing breakpoint times
//!   starting at 0. Used for the adversary components `psi1`, `psi2` and for
//!   reflection inputs. Evaluation beyond the last breakpoint extends by the
//!   last value (slope 0).
//! - [`MonotonePath`]: nondecreasing RCLL path with an initial jump at time 0
//!   (`rho(0-) = 0`, `rho(0) = jump0`) and optional interior jumps encoded by
//!   duplicated breakpoint times. Used for `zeta` and `rho`.
//! - [`StatePath`]: the assembled dynamics, RCLL piecewise-linear with jumps,
//!   carrying the admissibility flag.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical slack used when checking box constraints of assembled dynamics.
/// Reflected controls are exact, but recomposing `x + yt + psi + eta` incurs
/// a few ulps of noise, so the flag cannot demand bit-exact containment.
pub const ADMISSIBILITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PathJson {
    t: Vec<f64>,
    v: Vec<f64>,
    #[serde(default)]
    jump0: f64,
}

// ---------------------------------------------------------------------------
// PiecewisePath
// ---------------------------------------------------------------------------

/// Continuous piecewise-linear path with strictly increasing breakpoint times
/// `t_0 = 0 < t_1 < ... < t_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathJson", into = "PathJson")]
pub struct PiecewisePath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<PathJson> for PiecewisePath {
    type Error = Error;
    fn try_from(raw: PathJson) -> Result<Self> {
        if raw.jump0 != 0.0 {
            return Err(Error::InvalidParameter(
                "continuous path cannot carry jump0 != 0".into(),
            ));
        }
        PiecewisePath::new(raw.t, raw.v)
    }
}

impl From<PiecewisePath> for PathJson {
    fn from(p: PiecewisePath) -> Self {
        PathJson { t: p.times, v: p.values, jump0: 0.0 }
    }
}

impl PiecewisePath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidParameter("path needs equally many times and values, at least one".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidParameter(format!("path must start at t = 0, got {}", times[0])));
        }
        for w in times.windows(2) {
            if !(w[1].is_finite() && w[1] > w[0]) {
                return Err(Error::InvalidParameter(format!("breakpoint times must increase strictly: {} then {}", w[0], w[1])));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("path values must be finite".into()));
        }
        Ok(Self { times, values })
    }

    /// The path identically equal to `value` on `[0, horizon]`.
    pub fn constant(value: f64, horizon: f64) -> Self {
        if horizon > 0.0 {
            Self { times: vec![0.0, horizon], values: vec![value, value] }
        } else {
            Self { times: vec![0.0], values: vec![value] }
        }
    }

    /// The zero path on `[0, horizon]`.
    pub fn zero(horizon: f64) -> Self {
        Self::constant(0.0, horizon)
    }

    /// `t -> slope * t` on `[0, horizon]`.
    pub fn linear(slope: f64, horizon: f64) -> Self {
        if horizon > 0.0 {
            Self { times: vec![0.0, horizon], values: vec![0.0, slope * horizon] }
        } else {
            Self { times: vec![0.0], values: vec![0.0] }
        }
    }

    /// Build from an initial value and `(slope, duration)` segments.
    pub fn from_segments(start: f64, segments: &[(f64, f64)]) -> Result<Self> {
        let mut times = vec![0.0];
        let mut values = vec![start];
        let mut t = 0.0;
        let mut v = start;
        for &(slope, dur) in segments {
            if !(dur > 0.0 && dur.is_finite()) {
                return Err(Error::InvalidParameter(format!("segment duration must be > 0, got {dur}")));
            }
            t += dur;
            v += slope * dur;
            times.push(t);
            values.push(v);
        }
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Last breakpoint time. Evaluation past it extends by the last value.
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Exact linear interpolation; constant extension outside `[0, horizon]`.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= self.horizon() {
            return *self.values.last().unwrap();
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        if t == t0 {
            v0
        } else {
            v0 + (t - t0) * (v1 - v0) / (t1 - t0)
        }
    }

    /// Slope of segment `i` (between breakpoints `i` and `i+1`).
    pub fn segment_slope(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / (self.times[i + 1] - self.times[i])
    }

    /// Slope at time `t`, taking the right-hand segment at breakpoints and 0
    /// beyond the horizon.
    pub fn slope_at(&self, t: f64) -> f64 {
        if t >= self.horizon() || self.times.len() == 1 {
            return 0.0;
        }
        let t = t.max(0.0);
        let i = self.times.partition_point(|&x| x <= t).min(self.times.len() - 1) - 1;
        self.segment_slope(i)
    }

    /// Restriction `psi(· ∧ t)` to `[0, t]`: breakpoints beyond `t` are
    /// dropped and an interpolated endpoint is inserted. Evaluation of the
    /// result beyond `t` is constant.
    pub fn truncated(&self, t: f64) -> Self {
        if t >= self.horizon() {
            return self.clone();
        }
        let t = t.max(0.0);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (&ti, &vi) in self.times.iter().zip(&self.values) {
            if ti < t {
                times.push(ti);
                values.push(vi);
            } else {
                break;
            }
        }
        if t > *times.last().unwrap_or(&-1.0) {
            times.push(t);
            values.push(self.eval(t));
        }
        Self { times, values }
    }

    /// Pointwise scaling `k * path`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| k * v).collect(),
        }
    }
}

/// Sorted union of breakpoint times from several paths plus extras, deduped.
pub fn union_times(groups: &[&[f64]], extras: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).chain(extras.iter().copied()).collect();
    all.retain(|t| *t >= 0.0);
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup();
    all
}

// ---------------------------------------------------------------------------
// MonotonePath
// ---------------------------------------------------------------------------

/// Nondecreasing RCLL path. `values[0]` is the jump at time 0 (the path is 0
/// at `0-`); interior jumps are encoded by duplicated breakpoint times, the
/// later entry carrying the post-jump value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathJson", into = "PathJson")]
pub struct MonotonePath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<PathJson> for MonotonePath {
    type Error = Error;
    fn try_from(raw: PathJson) -> Result<Self> {
        let p = MonotonePath::new(raw.t, raw.v)?;
        if raw.jump0 != p.jump0() {
            return Err(Error::InvalidParameter(format!(
                "jump0 = {} disagrees with first value {}",
                raw.jump0,
                p.jump0()
            )));
        }
        Ok(p)
    }
}

impl From<MonotonePath> for PathJson {
    fn from(p: MonotonePath) -> Self {
        let jump0 = p.jump0();
        PathJson { t: p.times, v: p.values, jump0 }
    }
}

impl MonotonePath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidParameter("path needs equally many times and values, at least one".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidParameter(format!("path must start at t = 0, got {}", times[0])));
        }
        if values[0] < 0.0 {
            return Err(Error::InvalidParameter(format!("initial jump must be >= 0, got {}", values[0])));
        }
        for w in times.windows(2) {
            if !(w[1].is_finite() && w[1] >= w[0]) {
                return Err(Error::InvalidParameter(format!("times must be nondecreasing: {} then {}", w[0], w[1])));
            }
        }
        for w in values.windows(2) {
            if !(w[1].is_finite() && w[1] >= w[0]) {
                return Err(Error::InvalidParameter(format!("values must be nondecreasing: {} then {}", w[0], w[1])));
            }
        }
        Ok(Self { times, values })
    }

    /// The identically-zero control.
    pub fn zero() -> Self {
        Self { times: vec![0.0], values: vec![0.0] }
    }

    /// Jump `j0` at time 0, constant afterwards.
    pub fn constant_jump(j0: f64) -> Self {
        Self { times: vec![0.0], values: vec![j0] }
    }

    /// Build from an initial jump and nonnegative `(slope, duration)` ramps.
    /// A segment with `duration == 0` and positive `jump` is inserted with
    /// `(slope, duration) = (jump, 0)` semantics via [`MonotonePath::new`]
    /// directly; this helper only takes ramps.
    pub fn from_ramps(jump0: f64, ramps: &[(f64, f64)]) -> Result<Self> {
        let mut times = vec![0.0];
        let mut values = vec![jump0];
        let mut t = 0.0;
        let mut v = jump0;
        for &(slope, dur) in ramps {
            if slope < 0.0 {
                return Err(Error::InvalidParameter(format!("ramp slope must be >= 0, got {slope}")));
            }
            if !(dur > 0.0 && dur.is_finite()) {
                return Err(Error::InvalidParameter(format!("ramp duration must be > 0, got {dur}")));
            }
            t += dur;
            v += slope * dur;
            times.push(t);
            values.push(v);
        }
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The jump at time 0 (`rho(0)`, with `rho(0-) = 0`).
    pub fn jump0(&self) -> f64 {
        self.values[0]
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// RCLL evaluation: at a duplicated (jump) time the post-jump value.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            // t = 0 is the post-jump value by the jump-at-zero convention
            if t == 0.0 {
                let i = self.times.partition_point(|&x| x <= 0.0) - 1;
                return self.values[i];
            }
            return 0.0;
        }
        if t >= self.horizon() {
            return *self.values.last().unwrap();
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        if t == t0 {
            v0
        } else {
            v0 + (t - t0) * (v1 - v0) / (t1 - t0)
        }
    }

    /// Left limit `rho(t-)`; `rho(0-) = 0` by convention.
    pub fn eval_left(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t > self.horizon() {
            return *self.values.last().unwrap();
        }
        // first breakpoint at exactly t carries the pre-jump value
        let i = self.times.partition_point(|&x| x < t);
        if i < self.times.len() && self.times[i] == t {
            return self.values[i];
        }
        let i = i - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        v0 + (t - t0) * (v1 - v0) / (t1 - t0)
    }

    /// Times at which the path jumps (including 0 when `jump0 > 0`).
    pub fn jump_times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.jump0() > 0.0 {
            out.push(0.0);
        }
        for i in 0..self.times.len() - 1 {
            if self.times[i + 1] == self.times[i] && self.values[i + 1] > self.values[i] {
                out.push(self.times[i]);
            }
        }
        out.dedup();
        out
    }

    /// Adds a constant to all values (used to shift an idleness control).
    /// The result jumps by `jump0 + k` at time 0.
    pub fn plus_constant(&self, k: f64) -> Result<Self> {
        Self::new(self.times.clone(), self.values.iter().map(|v| v + k).collect())
    }
}

// ---------------------------------------------------------------------------
// StatePath
// ---------------------------------------------------------------------------

/// Assembled game dynamics: RCLL piecewise-linear with possible jumps, the
/// pre-jump initial condition, and the box-constraint flag.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    /// `phi(0-) = x`, before any jump at time 0.
    pub initial: f64,
    times: Vec<f64>,
    values: Vec<f64>,
    /// Whether `phi(t) ∈ [0, D]` for all breakpoints (piecewise-linear paths
    /// attain segment extrema at breakpoints), up to [`ADMISSIBILITY_SLACK`].
    pub admissible: bool,
    /// First `(time, value)` leaving the box, when inadmissible.
    pub first_violation: Option<(f64, f64)>,
}

impl StatePath {
    /// Builds from raw breakpoints and records admissibility for the box
    /// `[0, hi]`.
    pub fn from_points(initial: f64, times: Vec<f64>, values: Vec<f64>, hi: f64) -> Result<Self> {
        Self::from_points_in_box(initial, times, values, 0.0, hi)
    }

    /// Builds from raw breakpoints and records admissibility for `[lo, hi]`.
    pub fn from_points_in_box(
        initial: f64,
        times: Vec<f64>,
        values: Vec<f64>,
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidParameter("state path needs equally many times and values".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidParameter("state path must start at t = 0".into()));
        }
        let mut admissible = true;
        let mut first_violation = None;
        for (&t, &v) in times.iter().zip(&values) {
            if v < lo - ADMISSIBILITY_SLACK || v > hi + ADMISSIBILITY_SLACK {
                admissible = false;
                first_violation = Some((t, v));
                break;
            }
        }
        Ok(Self { initial, times, values, admissible, first_violation })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// RCLL evaluation, constant extension beyond the horizon.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            if t == 0.0 {
                let i = self.times.partition_point(|&x| x <= 0.0) - 1;
                return self.values[i];
            }
            return self.initial;
        }
        if t >= self.horizon() {
            return *self.values.last().unwrap();
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        if t == t0 {
            v0
        } else {
            v0 + (t - t0) * (v1 - v0) / (t1 - t0)
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First `t >= 0` with `phi(t) <= level`, solving the crossing segment
    /// exactly. Beyond the last breakpoint the path continues with
    /// `terminal_slope`; `None` means the level is never reached.
    pub fn first_time_at_or_below(&self, level: f64, terminal_slope: f64) -> Option<f64> {
        let n = self.times.len();
        if self.values[0] <= level {
            return Some(self.times[0]);
        }
        for i in 0..n - 1 {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            let (v0, v1) = (self.values[i], self.values[i + 1]);
            if v1 <= level {
                if t1 == t0 || v1 == v0 {
                    return Some(t1);
                }
                // v0 > level >= v1 on a proper segment: one linear solve
                return Some(t0 + (level - v0) * (t1 - t0) / (v1 - v0));
            }
        }
        let v_end = *self.values.last().unwrap();
        if terminal_slope < 0.0 {
            Some(self.horizon() + (level - v_end) / terminal_slope)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_eval_interpolates_exactly() {
        let p = PiecewisePath::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(1.0), 2.0);
        assert_eq!(p.eval(2.0), 1.0);
        assert_eq!(p.eval(10.0), 0.0); // constant extension
        assert_eq!(p.slope_at(0.5), 2.0);
        assert_eq!(p.slope_at(2.5), -1.0);
        assert_eq!(p.slope_at(5.0), 0.0);
    }

    #[test]
    fn piecewise_rejects_bad_times() {
        assert!(PiecewisePath::new(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
        assert!(PiecewisePath::new(vec![0.5, 1.0], vec![0.0, 1.0]).is_err());
        assert!(PiecewisePath::new(vec![], vec![]).is_err());
    }

    #[test]
    fn truncation_matches_frozen_evaluation() {
        let p = PiecewisePath::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0]).unwrap();
        let q = p.truncated(2.0);
        assert_eq!(q.horizon(), 2.0);
        assert_eq!(q.eval(2.0), 1.0);
        assert_eq!(q.eval(3.0), 1.0); // frozen
        assert_eq!(q.eval(0.5), p.eval(0.5));
    }

    #[test]
    fn monotone_jump_conventions() {
        // jump 0.3 at zero, ramp, then jump 0.2 at t = 1
        let m = MonotonePath::new(vec![0.0, 1.0, 1.0, 2.0], vec![0.3, 0.5, 0.7, 0.7]).unwrap();
        assert_eq!(m.jump0(), 0.3);
        assert_eq!(m.eval_left(0.0), 0.0);
        assert_eq!(m.eval(0.0), 0.3);
        assert_eq!(m.eval(0.5), 0.4);
        assert_eq!(m.eval_left(1.0), 0.5);
        assert_eq!(m.eval(1.0), 0.7);
        assert_eq!(m.eval(5.0), 0.7);
        assert_eq!(m.jump_times(), vec![0.0, 1.0]);
    }

    #[test]
    fn monotone_rejects_decreasing() {
        assert!(MonotonePath::new(vec![0.0, 1.0], vec![0.5, 0.2]).is_err());
        assert!(MonotonePath::new(vec![0.0], vec![-0.1]).is_err());
    }

    #[test]
    fn state_path_crossing_is_exact() {
        let s = StatePath::from_points(1.0, vec![0.0, 1.0], vec![1.0, -1.0], 2.0).unwrap();
        assert_eq!(s.first_time_at_or_below(0.0, 0.0), Some(0.5));
        assert!(!s.admissible);
        assert_eq!(s.first_violation, Some((1.0, -1.0)));
        let flat = StatePath::from_points(1.0, vec![0.0, 1.0], vec![1.0, 1.0], 2.0).unwrap();
        assert_eq!(flat.first_time_at_or_below(0.0, 0.0), None);
        assert_eq!(flat.first_time_at_or_below(0.0, -2.0), Some(1.5));
    }

    #[test]
    fn path_json_round_trip() {
        let p = PiecewisePath::new(vec![0.0, 2.0], vec![0.0, 4.0]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"t":[0.0,2.0],"v":[0.0,4.0],"jump0":0.0}"#);
        let back: PiecewisePath = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);

        let m = MonotonePath::new(vec![0.0, 1.0], vec![0.5, 1.0]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: MonotonePath = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        // jump0 that disagrees with v[0] is rejected
        assert!(serde_json::from_str::<MonotonePath>(r#"{"t":[0.0],"v":[0.5],"jump0":0.1}"#).is_err());
    }
}
