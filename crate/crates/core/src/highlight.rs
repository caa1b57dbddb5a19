//! Highlight scoring: cumulative moving averages, max-ratio smoothing, the
//! combined score H(k), and threshold-crossing event detection.
//!
//! Per cue, the raw series is averaged incrementally
//! (`cma[k] = (raw[1] + … + raw[k]) / k`) and then rescaled so the average's
//! peak matches the raw peak: `smoothed[j] = (raw_max / cma_max) * cma[j]`.
//! The maxima are running maxima over the frames seen so far, which keeps the
//! whole thing online; [`CueSeries::smoothed`] re-applies the current scale to
//! the full history, so a whole-round pass is just "call it after the last
//! push". H(k) is the unweighted mean of the six smoothed values.
//!
//! The detector fires on an upward crossing of `tau_high`, holds the event
//! open while it tracks the peak, and re-arms only once the score falls below
//! `tau_low` and the onset cooldown has elapsed. Hysteresis plus cooldown is
//! what keeps score jitter from spamming comments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cues::{CueId, CUE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("non-finite input value")]
pub struct NonFiniteInput;

/// Streaming statistics for one cue across one round.
#[derive(Debug, Clone)]
pub struct CueSeries {
    cue: CueId,
    raw: Vec<f64>,
    cma: Vec<f64>,
    running_sum: f64,
    raw_max: f64,
    cma_max: f64,
}

impl CueSeries {
    pub fn new(cue: CueId) -> Self {
        CueSeries {
            cue,
            raw: Vec::new(),
            cma: Vec::new(),
            running_sum: 0.0,
            raw_max: 0.0,
            cma_max: 0.0,
        }
    }

    pub fn cue(&self) -> CueId {
        self.cue
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn cma(&self) -> &[f64] {
        &self.cma
    }

    pub fn raw_max(&self) -> f64 {
        self.raw_max
    }

    pub fn cma_max(&self) -> f64 {
        self.cma_max
    }

    /// Appends the raw value for frame `k = len() + 1` and updates the
    /// average and both running maxima in O(1).
    pub fn push(&mut self, value: f64) -> Result<(), NonFiniteInput> {
        if !value.is_finite() {
            return Err(NonFiniteInput);
        }
        self.running_sum += value;
        let k = self.raw.len() as f64 + 1.0;
        let cma = self.running_sum / k;
        self.raw.push(value);
        self.cma.push(cma);
        self.raw_max = self.raw_max.max(value);
        self.cma_max = self.cma_max.max(cma);
        Ok(())
    }

    /// `raw_max / cma_max` under the running maxima; 0 while no signal has
    /// been seen (the all-zero series smooths to all zeros).
    pub fn scale(&self) -> f64 {
        if self.cma_max > 0.0 {
            self.raw_max / self.cma_max
        } else {
            0.0
        }
    }

    /// Smoothed value at the latest frame under the running maxima.
    pub fn smoothed_latest(&self) -> f64 {
        match self.cma.last() {
            Some(&cma) => self.scale() * cma,
            None => 0.0,
        }
    }

    /// Full smoothed series under the current maxima. After the round's final
    /// push this is exactly the whole-round (batch) normalization.
    pub fn smoothed(&self) -> Vec<f64> {
        let scale = self.scale();
        self.cma.iter().map(|&c| scale * c).collect()
    }

    pub fn reset(&mut self) {
        self.raw.clear();
        self.cma.clear();
        self.running_sum = 0.0;
        self.raw_max = 0.0;
        self.cma_max = 0.0;
    }
}

/// Mean of the six smoothed cues.
///
/// Computed as a shifted mean (`base + Σ(vᵢ - base) / 6`) so that six equal
/// inputs return that value exactly; a plain sum-then-divide misses that for
/// roughly a sixth of all doubles.
pub fn combine(values: &[f64; CUE_COUNT]) -> Result<f64, NonFiniteInput> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(NonFiniteInput);
    }
    let base = values[0];
    let mut deltas = 0.0;
    for &v in &values[1..] {
        deltas += v - base;
    }
    Ok(base + deltas / CUE_COUNT as f64)
}

/// Detector thresholds. `tau_low < tau_high`; `cooldown` is the minimum
/// number of frames between onsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub tau_high: f64,
    pub tau_low: f64,
    pub cooldown: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            tau_high: 0.6,
            tau_low: 0.45,
            cooldown: 180,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tau_high > 0.0 && self.tau_high < 1.0) {
            return Err(format!("tau_high = {} must lie in (0, 1)", self.tau_high));
        }
        if !(self.tau_low >= 0.0 && self.tau_low < self.tau_high) {
            return Err(format!(
                "tau_low = {} must lie in [0, tau_high = {})",
                self.tau_low, self.tau_high
            ));
        }
        Ok(())
    }
}

/// One detected highlight: where the score crossed up, where it peaked, and
/// whether it has released below `tau_low` yet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighlightEvent {
    pub onset_k: u64,
    pub peak_k: u64,
    pub peak_h: f64,
    pub released: bool,
}

/// Emitted by [`Detector::update`] at the crossing frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Onset {
    pub k: u64,
    pub h: f64,
}

/// Hysteresis threshold detector, fed H(k) in frame order.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: DetectorConfig,
    prev_h: Option<f64>,
    open: Option<HighlightEvent>,
    last_onset_k: Option<u64>,
    events: Vec<HighlightEvent>,
}

impl Detector {
    pub fn new(cfg: DetectorConfig) -> Self {
        Detector {
            cfg,
            prev_h: None,
            open: None,
            last_onset_k: None,
            events: Vec::new(),
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    /// Completed events plus the currently open one, onset order.
    pub fn events(&self) -> Vec<HighlightEvent> {
        let mut all = self.events.clone();
        if let Some(open) = self.open {
            all.push(open);
        }
        all
    }

    pub fn onset_count(&self) -> usize {
        self.events.len() + usize::from(self.open.is_some())
    }

    /// True between an onset and its release.
    pub fn is_open(&self) -> bool {
        self.open.is_some()
    }

    pub fn reset(&mut self) {
        self.prev_h = None;
        self.open = None;
        self.last_onset_k = None;
        self.events.clear();
    }

    /// Advances the detector by one frame, returning the onset if this frame
    /// crossed `tau_high` upward while armed and off cooldown.
    pub fn update(&mut self, h: f64, k: u64) -> Option<Onset> {
        if let Some(event) = self.open.as_mut() {
            if h > event.peak_h {
                event.peak_h = h;
                event.peak_k = k;
            }
            if h < self.cfg.tau_low {
                event.released = true;
                self.events.push(*event);
                self.open = None;
            }
            self.prev_h = Some(h);
            return None;
        }

        let was_below = self.prev_h.map_or(true, |p| p < self.cfg.tau_high);
        let crossed = was_below && h >= self.cfg.tau_high;
        let off_cooldown = self
            .last_onset_k
            .map_or(true, |last| k.saturating_sub(last) >= self.cfg.cooldown);
        self.prev_h = Some(h);

        if crossed && off_cooldown {
            self.open = Some(HighlightEvent {
                onset_k: k,
                peak_k: k,
                peak_h: h,
                released: false,
            });
            self.last_onset_k = Some(k);
            return Some(Onset { k, h });
        }
        None
    }
}

/// Combined score history for one round plus the detected events.
#[derive(Debug, Clone)]
pub struct HighlightTrace {
    pub h: Vec<f64>,
    pub events: Vec<HighlightEvent>,
}

/// Per-round scoring engine: six cue series, the combiner, and the detector.
#[derive(Debug, Clone)]
pub struct HighlightEngine {
    series: [CueSeries; CUE_COUNT],
    detector: Detector,
    h: Vec<f64>,
}

/// What [`HighlightEngine::step`] produced for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighlightStep {
    pub h: f64,
    pub onset: Option<Onset>,
    /// True while an event is open (onset seen, not yet released).
    pub in_highlight: bool,
}

impl HighlightEngine {
    pub fn new(detector: DetectorConfig) -> Self {
        HighlightEngine {
            series: CueId::ALL.map(CueSeries::new),
            detector: Detector::new(detector),
            h: Vec::new(),
        }
    }

    pub fn series(&self, cue: CueId) -> &CueSeries {
        &self.series[cue.as_index()]
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }

    pub fn trace(&self) -> HighlightTrace {
        HighlightTrace {
            h: self.h.clone(),
            events: self.detector.events(),
        }
    }

    /// Feeds one frame's cue values through averaging, smoothing, combination
    /// and detection.
    pub fn step(&mut self, k: u64, cues: &[f64; CUE_COUNT]) -> Result<HighlightStep, NonFiniteInput> {
        let mut smoothed = [0.0; CUE_COUNT];
        for (series, (&value, out)) in self
            .series
            .iter_mut()
            .zip(cues.iter().zip(smoothed.iter_mut()))
        {
            series.push(value)?;
            *out = series.smoothed_latest();
        }
        let h = combine(&smoothed)?;
        self.h.push(h);
        let onset = self.detector.update(h, k);
        Ok(HighlightStep {
            h,
            onset,
            in_highlight: self.detector.is_open(),
        })
    }

    /// Smoothed values at the latest frame, for export.
    pub fn smoothed_latest(&self) -> [f64; CUE_COUNT] {
        let mut out = [0.0; CUE_COUNT];
        for (series, slot) in self.series.iter().zip(out.iter_mut()) {
            *slot = series.smoothed_latest();
        }
        out
    }

    /// Round boundary: drop all history, maxima and detector state.
    pub fn reset(&mut self) {
        for series in &mut self.series {
            series.reset();
        }
        self.detector.reset();
        self.h.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series_from(values: &[f64]) -> CueSeries {
        let mut s = CueSeries::new(CueId::P1Score);
        for &v in values {
            s.push(v).unwrap();
        }
        s
    }

    #[test]
    fn cma_constant_sequence_is_fixed_point() {
        let s = series_from(&[0.5, 0.5, 0.5]);
        assert_eq!(s.cma(), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn cma_matches_direct_summation() {
        // oracle: direct prefix sums of (0.1, 0.2, 0.3)
        let s = series_from(&[0.1, 0.2, 0.3]);
        let expect = [0.1, (0.1 + 0.2) / 2.0, (0.1 + 0.2 + 0.3) / 3.0];
        for (got, want) in s.cma().iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!((s.cma()[1] - 0.15).abs() < 1e-12);
        assert!((s.cma()[2] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn cma_single_value() {
        let s = series_from(&[0.7]);
        assert_eq!(s.cma(), &[0.7]);
    }

    #[test]
    fn push_rejects_non_finite() {
        let mut s = CueSeries::new(CueId::P1Score);
        assert_eq!(s.push(f64::NAN), Err(NonFiniteInput));
        assert_eq!(s.push(f64::INFINITY), Err(NonFiniteInput));
        assert!(s.is_empty());
    }

    #[test]
    fn smooth_rescales_to_raw_peak() {
        // raw (0.1, 0.2, 0.3): cma (0.1, 0.15, 0.2), scale 0.3/0.2 = 1.5
        let s = series_from(&[0.1, 0.2, 0.3]);
        let smoothed = s.smoothed();
        let expect = [0.15, 0.225, 0.3];
        for (got, want) in smoothed.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        let max = smoothed.iter().cloned().fold(f64::MIN, f64::max);
        assert!((max - s.raw_max()).abs() < 1e-9);
    }

    #[test]
    fn smooth_zero_signal_is_all_zero() {
        let s = series_from(&[0.0, 0.0, 0.0]);
        assert_eq!(s.smoothed(), vec![0.0, 0.0, 0.0]);
        assert_eq!(s.smoothed_latest(), 0.0);
    }

    #[test]
    fn smooth_constant_is_identity() {
        let s = series_from(&[0.4, 0.4, 0.4, 0.4]);
        assert_eq!(s.smoothed(), vec![0.4, 0.4, 0.4, 0.4]);
    }

    #[test]
    fn combine_equal_values_exact() {
        for c in [0.0, 0.25, 1.0 / 3.0, 0.5, 0.7, 0.999] {
            assert_eq!(combine(&[c; 6]).unwrap(), c);
        }
    }

    #[test]
    fn combine_single_spike() {
        // oracle: direct sum 1/6
        let h = combine(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((h - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn combine_rejects_non_finite() {
        assert_eq!(
            combine(&[0.0, f64::NAN, 0.0, 0.0, 0.0, 0.0]),
            Err(NonFiniteInput)
        );
    }

    #[test]
    fn detector_never_crossing_yields_no_events() {
        let mut d = Detector::new(DetectorConfig {
            tau_high: 0.6,
            tau_low: 0.4,
            cooldown: 0,
        });
        for (i, h) in [0.1, 0.5, 0.59, 0.2].into_iter().enumerate() {
            assert!(d.update(h, i as u64 + 1).is_none());
        }
        assert_eq!(d.onset_count(), 0);
    }

    #[test]
    fn detector_single_event_with_peak() {
        // oracle: brute-force scan of (0.2, 0.7, 0.8, 0.3) with tau 0.6/0.4
        let mut d = Detector::new(DetectorConfig {
            tau_high: 0.6,
            tau_low: 0.4,
            cooldown: 0,
        });
        let hs = [0.2, 0.7, 0.8, 0.3];
        let mut onsets = Vec::new();
        for (i, h) in hs.into_iter().enumerate() {
            if let Some(onset) = d.update(h, i as u64 + 1) {
                onsets.push(onset);
            }
        }
        assert_eq!(onsets, vec![Onset { k: 2, h: 0.7 }]);
        let events = d.events();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].onset_k, 2);
        assert_eq!(events[0].peak_k, 3);
        assert_eq!(events[0].peak_h, 0.8);
        assert!(events[0].released);
    }

    #[test]
    fn detector_holds_until_release() {
        // oscillation that never dips below tau_low stays one event
        let mut d = Detector::new(DetectorConfig {
            tau_high: 0.6,
            tau_low: 0.4,
            cooldown: 0,
        });
        for (i, h) in [0.7, 0.5, 0.7, 0.5].into_iter().enumerate() {
            d.update(h, i as u64 + 1);
        }
        assert_eq!(d.onset_count(), 1);
        assert!(!d.events()[0].released);
    }

    #[test]
    fn detector_cooldown_blocks_reonset() {
        let mut d = Detector::new(DetectorConfig {
            tau_high: 0.6,
            tau_low: 0.4,
            cooldown: 10,
        });
        let hs = [0.7, 0.3, 0.7, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.7];
        let mut onset_ks = Vec::new();
        for (i, h) in hs.into_iter().enumerate() {
            if let Some(o) = d.update(h, i as u64 + 1) {
                onset_ks.push(o.k);
            }
        }
        // second crossing at k=3 is 2 frames after the first, suppressed;
        // k=11 is 10 frames after, allowed
        assert_eq!(onset_ks, vec![1, 11]);
    }

    #[test]
    fn engine_first_frame_scale_is_identity() {
        let mut engine = HighlightEngine::new(DetectorConfig::default());
        let step = engine.step(1, &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0]).unwrap();
        // k=1: cma == raw, scale 1, H = mean(raw) = 2/6
        assert!((step.h - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn engine_reset_clears_everything() {
        let mut engine = HighlightEngine::new(DetectorConfig {
            tau_high: 0.3,
            tau_low: 0.1,
            cooldown: 0,
        });
        engine.step(1, &[1.0; 6]).unwrap();
        assert_eq!(engine.detector().onset_count(), 1);
        engine.reset();
        assert_eq!(engine.detector().onset_count(), 0);
        assert!(engine.series(CueId::P1Score).is_empty());
        assert!(engine.trace().h.is_empty());
    }
}
