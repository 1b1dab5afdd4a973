//! Mode control and read/write scheduling across network layers.
//!
//! Inference through `L` network layers is a loop of "program the weights, then read
//! the layer out". A single-array (or expansion-mode) engine runs those steps strictly
//! in sequence. In deep-net mode network layer `k` lives on physical layer `k mod 2`;
//! layer `k+1` is programmed on the other physical layer while layer `k` reads, so in
//! steady state each network layer costs only the longer of the two steps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fabric::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingParams {
    /// Current read-out time, seconds.
    pub t_read: f64,
    /// Programming time per network layer used by the schedule, seconds.
    pub t_write_unit: f64,
    /// Device full-switch time, seconds. Informational here; the device model owns it.
    pub t_write_full: f64,
}

impl Default for TimingParams {
    fn default() -> Self {
        Self { t_read: 10e-9, t_write_unit: 25e-9, t_write_full: 250e-9 }
    }
}

impl TimingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_read > 0.0 && self.t_write_unit > 0.0 && self.t_write_full > 0.0) {
            return Err(invalid("all timing parameters must be positive"));
        }
        if !(self.t_read < self.t_write_unit) {
            return Err(invalid(format!(
                "t_read = {} s must be shorter than t_write_unit = {} s for the read to hide under programming",
                self.t_read, self.t_write_unit
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub t_start: f64,
    pub t_end: f64,
    pub kind: EventKind,
    pub physical_layer: usize,
    pub network_layer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timeline {
    pub mode: Mode,
    pub events: Vec<Event>,
}

impl Timeline {
    pub fn total(&self) -> f64 {
        let start = self.events.iter().map(|e| e.t_start).fold(f64::INFINITY, f64::min);
        let end = self.events.iter().map(|e| e.t_end).fold(f64::NEG_INFINITY, f64::max);
        if self.events.is_empty() {
            0.0
        } else {
            end - start
        }
    }

    pub fn network_layers(&self) -> usize {
        self.events.iter().map(|e| e.network_layer + 1).max().unwrap_or(0)
    }

    fn find(&self, kind: EventKind, layer: usize) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind && e.network_layer == layer)
    }

    /// Checks resource exclusivity, complementary read-enable (deep-net) and data
    /// dependencies. Returns the first violation found.
    pub fn check_legal(&self) -> Result<()> {
        let overlaps = |a: &Event, b: &Event| a.t_start < b.t_end && b.t_start < a.t_end;
        for (i, a) in self.events.iter().enumerate() {
            for b in &self.events[i + 1..] {
                if !overlaps(a, b) {
                    continue;
                }
                if a.physical_layer == b.physical_layer {
                    return Err(invalid(format!(
                        "physical layer {} runs network layers {} and {} at once",
                        a.physical_layer, a.network_layer, b.network_layer
                    )));
                }
                if self.mode == Mode::DeepNet && a.kind == b.kind {
                    return Err(Error::ModeViolation(format!(
                        "both physical layers {:?} at once (network layers {} and {}); RE must be complementary",
                        a.kind, a.network_layer, b.network_layer
                    )));
                }
            }
        }
        for k in 0..self.network_layers() {
            let (Some(w), Some(r)) = (self.find(EventKind::Write, k), self.find(EventKind::Read, k)) else {
                return Err(invalid(format!("network layer {k} lacks a write or a read")));
            };
            if r.t_start < w.t_end {
                return Err(invalid(format!("layer {k} reads before its weights are written")));
            }
            if k > 0 {
                let prev = self.find(EventKind::Read, k - 1).expect("checked above");
                if r.t_start < prev.t_end {
                    return Err(invalid(format!("layer {k} reads before layer {} has produced its output", k - 1)));
                }
            }
        }
        Ok(())
    }

    /// `t_start_ns,t_end_ns,kind,physical_layer,network_layer` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_start_ns,t_end_ns,kind,physical_layer,network_layer\n");
        for e in &self.events {
            let _ = writeln!(
                s,
                "{},{},{:?},{},{}",
                e.t_start * 1e9,
                e.t_end * 1e9,
                e.kind,
                e.physical_layer,
                e.network_layer
            );
        }
        s
    }
}

/// Per-layer read-enable levels of a stacked pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeState {
    pub mode: Mode,
    pub re_layer0: bool,
    pub re_layer1: bool,
}

pub fn validate_mode(state: &ModeState) -> Result<()> {
    match state.mode {
        Mode::Planar => Mode::Planar.check_re(&[state.re_layer0]),
        m => m.check_re(&[state.re_layer0, state.re_layer1]),
    }
}

pub fn effective_rows(mode: Mode, rows_per_layer: usize) -> usize {
    mode.effective_rows(rows_per_layer)
}

/// Schedules `num_network_layers` write+read steps.
pub fn plan(mode: Mode, num_network_layers: usize, timing: &TimingParams) -> Result<Timeline> {
    if num_network_layers == 0 {
        return Err(invalid("number of network layers must be >= 1"));
    }
    timing.validate()?;
    let (tw, tr) = (timing.t_write_unit, timing.t_read);
    let mut events = Vec::with_capacity(2 * num_network_layers);
    match mode {
        Mode::Planar | Mode::Expansion => {
            let mut t = 0.0;
            for k in 0..num_network_layers {
                let w_end = t + tw;
                let r_end = w_end + tr;
                events.push(Event { t_start: t, t_end: w_end, kind: EventKind::Write, physical_layer: 0, network_layer: k });
                events.push(Event { t_start: w_end, t_end: r_end, kind: EventKind::Read, physical_layer: 0, network_layer: k });
                t = r_end;
            }
        }
        Mode::DeepNet => {
            // The write of layer k starts when layer k-1 starts reading: that is the RE flip.
            let mut last_read: Option<(f64, f64)> = None;
            for k in 0..num_network_layers {
                let w_start = last_read.map_or(0.0, |(start, _)| start);
                let w_end = w_start + tw;
                let r_start = last_read.map_or(w_end, |(_, end)| w_end.max(end));
                let r_end = r_start + tr;
                let phys = k % 2;
                events.push(Event { t_start: w_start, t_end: w_end, kind: EventKind::Write, physical_layer: phys, network_layer: k });
                events.push(Event { t_start: r_start, t_end: r_end, kind: EventKind::Read, physical_layer: phys, network_layer: k });
                last_read = Some((r_start, r_end));
            }
            events.sort_by(|a, b| a.t_start.total_cmp(&b.t_start).then(a.network_layer.cmp(&b.network_layer)));
        }
    }
    Ok(Timeline { mode, events })
}

/// Fraction of baseline time saved: `1 - total(deepnet) / total(baseline)`.
pub fn speedup(deepnet: &Timeline, baseline: &Timeline) -> Result<f64> {
    if deepnet.network_layers() != baseline.network_layers() {
        return Err(invalid("timelines cover different numbers of network layers"));
    }
    let base = baseline.total();
    if !(base > 0.0) {
        return Err(invalid("baseline timeline has zero duration"));
    }
    Ok(1.0 - deepnet.total() / base)
}

/// Large-`L` limit of [`speedup`]: the read time hidden under each write.
pub fn asymptotic_speedup(timing: &TimingParams) -> f64 {
    timing.t_read.min(timing.t_write_unit) / (timing.t_write_unit + timing.t_read)
}
