//! Trajectory simulation, parameter sweeps, spike detection and regime
//! classification for the full piecewise map.
//!
//! A sweep reproduces the bifurcation-diagram extraction: per parameter value
//! the recorded post-transient `x` range (the two diagram branches) plus a
//! regime label. Spiking at slow time scales comes in short fast episodes, so
//! regime statistics run on episode onsets, not raw threshold crossings.

use crate::error::{Error, Result};
use crate::map::{MapParams, State};
use rayon::prelude::*;
use serde::Serialize;

/// Spike threshold calibrated once at `(a, m, s) = (2.1, 0.02, 1.09)`:
/// midpoint of the subthreshold ceiling (0.398) and the spike peak (2.117).
pub const DEFAULT_SPIKE_THRESHOLD: f64 = 1.2577;
/// Oscillation floor separating silence from subthreshold motion.
pub const DEFAULT_OSC_TOLERANCE: f64 = 1e-5;
/// Crossings closer than this many steps belong to one spike episode.
pub const EPISODE_MERGE_WINDOW: usize = 32;
/// Default transient/record lengths for diagram work; the slow time scale
/// `1/m = 50` steps needs a few hundred slow periods to settle.
pub const DEFAULT_TRANSIENT: u64 = 10_000;
pub const DEFAULT_RECORD: u64 = 10_000;
/// Default total-step budget guaranteeing termination.
pub const DEFAULT_STEP_BUDGET: u64 = 100_000_000;

/// Simulation plan: initial state, transient and recorded lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    /// Explicit initial state; `None` starts at the cell's fixed point `A`
    /// plus the offset `(0.01, 0)`.
    pub initial: Option<State>,
    pub n_transient: u64,
    pub n_record: u64,
    pub record_y: bool,
    pub budget: u64,
}

impl SimConfig {
    pub fn new(n_transient: u64, n_record: u64) -> Self {
        Self {
            initial: None,
            n_transient,
            n_record,
            record_y: false,
            budget: DEFAULT_STEP_BUDGET,
        }
    }

    pub fn with_initial(mut self, st: State) -> Self {
        self.initial = Some(st);
        self
    }

    pub fn with_record_y(mut self, record_y: bool) -> Self {
        self.record_y = record_y;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    fn start_state(&self, p: &MapParams) -> State {
        self.initial.unwrap_or_else(|| {
            let a_pt = p.shift_offset();
            State {
                x: a_pt.x + 0.01,
                y: a_pt.y,
            }
        })
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::new(DEFAULT_TRANSIENT, DEFAULT_RECORD)
    }
}

/// Recorded post-transient trajectory of the full map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub ys: Option<Vec<f64>>,
    pub params: MapParams,
    /// Set when the orbit hit the overflow guard or left the finite range;
    /// the recorded vectors are truncated at that point.
    pub escaped: bool,
}

/// Upward threshold crossings of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpikeTrain {
    /// Strictly increasing indices into the trajectory.
    pub spike_indices: Vec<usize>,
    pub threshold_used: f64,
}

impl SpikeTrain {
    pub fn len(&self) -> usize {
        self.spike_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spike_indices.is_empty()
    }

    /// Onset index of each spike episode: crossings separated by less than
    /// [`EPISODE_MERGE_WINDOW`] steps count as one episode.
    pub fn episode_onsets(&self) -> Vec<usize> {
        let mut onsets: Vec<usize> = Vec::new();
        let mut last = None;
        for &idx in &self.spike_indices {
            match last {
                Some(prev) if idx - prev < EPISODE_MERGE_WINDOW => {}
                _ => onsets.push(idx),
            }
            last = Some(idx);
        }
        onsets
    }
}

/// Activity classes of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RegimeLabel {
    Silence,
    Subthreshold,
    Bursting,
    TonicSpiking,
    Escaped,
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegimeLabel::Silence => "Silence",
            RegimeLabel::Subthreshold => "Subthreshold",
            RegimeLabel::Bursting => "Bursting",
            RegimeLabel::TonicSpiking => "TonicSpiking",
            RegimeLabel::Escaped => "Escaped",
        };
        f.write_str(s)
    }
}

/// Parameter axis of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    A,
    S,
    M,
}

/// One sweep cell: the parameter value, recorded `x` range, regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub value: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub regime: RegimeLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub cells: Vec<SweepCell>,
}

/// Iterates the full map, discarding `n_transient` steps and recording
/// `n_record` `x` values (and `y` when requested). Deterministic.
pub fn simulate(p: &MapParams, cfg: &SimConfig) -> Result<Trajectory> {
    let requested = cfg.n_transient.saturating_add(cfg.n_record);
    if requested > cfg.budget {
        return Err(Error::BudgetExceeded {
            requested,
            budget: cfg.budget,
        });
    }
    let mut st = cfg.start_state(p);
    let mut xs = Vec::with_capacity(cfg.n_record as usize);
    let mut ys = cfg.record_y.then(|| Vec::with_capacity(cfg.n_record as usize));
    let mut escaped = false;
    'run: {
        for _ in 0..cfg.n_transient {
            st = match p.step_full(st) {
                Ok(next) if next.is_finite() => next,
                _ => {
                    escaped = true;
                    break 'run;
                }
            };
        }
        for _ in 0..cfg.n_record {
            st = match p.step_full(st) {
                Ok(next) if next.is_finite() => next,
                _ => {
                    escaped = true;
                    break 'run;
                }
            };
            xs.push(st.x);
            if let Some(ys) = ys.as_mut() {
                ys.push(st.y);
            }
        }
    }
    Ok(Trajectory {
        xs,
        ys,
        params: *p,
        escaped,
    })
}

/// Marks an upward crossing at `i` when `xs[i-1] < threshold <= xs[i]`;
/// crossings closer than 2 steps merge into the earlier one.
pub fn detect_spikes(t: &Trajectory, threshold: f64) -> SpikeTrain {
    debug_assert!(threshold.is_finite());
    let mut spike_indices: Vec<usize> = Vec::new();
    for i in 1..t.xs.len() {
        if t.xs[i - 1] < threshold && threshold <= t.xs[i] {
            if let Some(&prev) = spike_indices.last() {
                if i - prev < 2 {
                    continue;
                }
            }
            spike_indices.push(i);
        }
    }
    SpikeTrain {
        spike_indices,
        threshold_used: threshold,
    }
}

fn isi_stats(onsets: &[usize]) -> Option<(f64, f64, f64)> {
    if onsets.len() < 3 {
        return None;
    }
    let isis: Vec<f64> = onsets.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let mean = isis.iter().sum::<f64>() / isis.len() as f64;
    let var = isis.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / isis.len() as f64;
    let cv = var.sqrt() / mean;
    let mut sorted = isis.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let max = sorted[sorted.len() - 1];
    Some((cv, median, max))
}

/// Classifies a trajectory into one of the five regimes.
///
/// Escaped wins; then Silence when the recorded `x` range is below
/// `osc_tolerance`; then Subthreshold when no crossing reaches the spike
/// threshold. Spiking splits on episode-onset statistics: tonic needs
/// inter-episode CV below 0.5 and no quiescent gap beyond five medians.
pub fn classify_regime(t: &Trajectory, spike_threshold: f64, osc_tolerance: f64) -> RegimeLabel {
    if t.escaped {
        return RegimeLabel::Escaped;
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in &t.xs {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if !(hi - lo).is_finite() || hi - lo < osc_tolerance {
        return RegimeLabel::Silence;
    }
    let spikes = detect_spikes(t, spike_threshold);
    if spikes.is_empty() {
        return RegimeLabel::Subthreshold;
    }
    match isi_stats(&spikes.episode_onsets()) {
        Some((cv, median, max)) if cv < 0.5 && max < 5.0 * median => RegimeLabel::TonicSpiking,
        _ => RegimeLabel::Bursting,
    }
}

fn cell_params(base: &MapParams, axis: SweepAxis, value: f64) -> Result<MapParams> {
    match axis {
        SweepAxis::A => MapParams::new(value, base.s, base.m),
        SweepAxis::S => MapParams::new(base.a, value, base.m),
        SweepAxis::M => MapParams::new(base.a, base.s, value),
    }
}

fn run_cell(base: &MapParams, axis: SweepAxis, value: f64, cfg: &SimConfig) -> SweepCell {
    let escaped_cell = SweepCell {
        value,
        x_min: f64::NAN,
        x_max: f64::NAN,
        regime: RegimeLabel::Escaped,
    };
    let Ok(p) = cell_params(base, axis, value) else {
        return escaped_cell;
    };
    let Ok(t) = simulate(&p, cfg) else {
        return escaped_cell;
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in &t.xs {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    let regime = classify_regime(&t, DEFAULT_SPIKE_THRESHOLD, DEFAULT_OSC_TOLERANCE);
    if t.xs.is_empty() {
        return escaped_cell;
    }
    SweepCell {
        value,
        x_min: lo,
        x_max: hi,
        regime,
    }
}

/// Simulates `n` evenly spaced cells along one axis and extracts the
/// diagram branches plus a regime label per cell.
///
/// Cells run in parallel; output is ordered by cell index and equals the
/// serial result element-wise (cells share no state).
pub fn sweep(
    base: &MapParams,
    axis: SweepAxis,
    lo: f64,
    hi: f64,
    n: usize,
    cfg: &SimConfig,
) -> Result<SweepResult> {
    if !(lo < hi) {
        return Err(Error::InvalidSweep("need lo < hi"));
    }
    if n < 2 {
        return Err(Error::InvalidSweep("need n >= 2"));
    }
    let requested = (cfg.n_transient.saturating_add(cfg.n_record)).saturating_mul(n as u64);
    if requested > cfg.budget {
        return Err(Error::BudgetExceeded {
            requested,
            budget: cfg.budget,
        });
    }
    let step = (hi - lo) / (n - 1) as f64;
    let cells: Vec<SweepCell> = (0..n)
        .into_par_iter()
        .map(|k| run_cell(base, axis, lo + step * k as f64, cfg))
        .collect();
    Ok(SweepResult { axis, cells })
}

/// Serial reference implementation of [`sweep`], kept for equivalence checks.
pub fn sweep_serial(
    base: &MapParams,
    axis: SweepAxis,
    lo: f64,
    hi: f64,
    n: usize,
    cfg: &SimConfig,
) -> Result<SweepResult> {
    if !(lo < hi) {
        return Err(Error::InvalidSweep("need lo < hi"));
    }
    if n < 2 {
        return Err(Error::InvalidSweep("need n >= 2"));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let cells: Vec<SweepCell> = (0..n)
        .map(|k| run_cell(base, axis, lo + step * k as f64, cfg))
        .collect();
    Ok(SweepResult { axis, cells })
}
