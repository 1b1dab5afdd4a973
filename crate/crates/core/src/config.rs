//! Run configuration: sectioned `key = value` text (TOML), every key optional.
//!
//! ```toml
//! seed = 7
//!
//! [fabric]
//! mode = "deepnet"
//! re_layer0 = true
//! re_layer1 = false
//!
//! [device]
//! r_set = 10000.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cell::TransistorParams;
use crate::device::DeviceParams;
use crate::engine::{AdcModel, QuantScheme};
use crate::error::{Error, Result};
use crate::fabric::{FabricGeometry, Mode};
use crate::pipeline::TimingParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FabricConfig {
    pub mode: Mode,
    pub rows_per_layer: usize,
    pub cols: usize,
    pub r_wire_per_cell: f64,
    pub re_layer0: bool,
    pub re_layer1: bool,
}

impl Default for FabricConfig {
    fn default() -> Self {
        Self { mode: Mode::Expansion, rows_per_layer: 10, cols: 10, r_wire_per_cell: 3.2, re_layer0: true, re_layer1: true }
    }
}

impl FabricConfig {
    pub fn geometry(&self) -> FabricGeometry<f64> {
        FabricGeometry::new(self.mode, self.rows_per_layer, self.cols, self.r_wire_per_cell)
    }

    pub fn re(&self) -> Vec<bool> {
        match self.mode {
            Mode::Planar => vec![self.re_layer0],
            _ => vec![self.re_layer0, self.re_layer1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantConfig {
    pub bits_per_cell: f64,
    pub cells_per_weight: usize,
}

impl Default for QuantConfig {
    fn default() -> Self {
        Self { bits_per_cell: 1.0, cells_per_weight: 1 }
    }
}

/// Knobs of the reproduction experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Monte Carlo population size.
    pub mc_trials: usize,
    /// Cells per column for the leakage total.
    pub column_cells: usize,
    pub sweep_max_v: f64,
    pub sweep_points: usize,
    /// Single-cell read input.
    pub read_input_v: f64,
    /// DAC full scale and resolution behind the reported input step.
    pub lsb_reference_v: f64,
    pub lsb_reference_bits: i32,
    /// Read-cycle input samples, volts, one quasi-static solve each.
    pub transient_sequence_v: Vec<f64>,
    pub transient_step_s: f64,
    pub pipeline_layers: usize,
    /// Memristor state of every cell in the IR-drop comparison (1 = set, the worst case).
    pub ir_drop_state_x: f64,
    pub hysteresis_amplitude_v: f64,
    pub hysteresis_frequency_hz: f64,
    pub hysteresis_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let lsb = 0.5 / 128.0;
        Self {
            mc_trials: 200,
            column_cells: 10,
            sweep_max_v: 1.8,
            sweep_points: 37,
            read_input_v: 4e-3,
            lsb_reference_v: 0.5,
            lsb_reference_bits: 7,
            transient_sequence_v: vec![0.0, lsb, 0.0, lsb, 2.0 * lsb, 4.0 * lsb, 0.0, lsb],
            transient_step_s: 1.25e-9,
            pipeline_layers: 10,
            ir_drop_state_x: 1.0,
            hysteresis_amplitude_v: 1.2,
            hysteresis_frequency_hz: 50.0,
            hysteresis_samples: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    pub fabric: FabricConfig,
    pub device: DeviceParams<f64>,
    pub transistor: TransistorParams<f64>,
    pub timing: TimingParams,
    pub quant: QuantConfig,
    pub adc: AdcModel,
    pub experiments: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            out_dir: None,
            fabric: FabricConfig::default(),
            device: DeviceParams::default(),
            transistor: TransistorParams::default(),
            timing: TimingParams::default(),
            quant: QuantConfig::default(),
            adc: AdcModel::default(),
            experiments: ExperimentConfig::default(),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let wrap = |section: &str, r: Result<()>| r.map_err(|e| Error::Config(format!("[{section}] {e}")));
        wrap("device", self.device.validate())?;
        wrap("transistor", self.transistor.validate())?;
        wrap("timing", self.timing.validate())?;
        wrap("adc", self.adc.validate())?;
        wrap("quant", QuantScheme::for_device(self.quant.bits_per_cell, self.quant.cells_per_weight, &self.device).map(|_| ()))?;
        wrap("fabric", self.fabric.geometry().validate())?;
        wrap("fabric", self.fabric.mode.check_re(&self.fabric.re()))?;
        if (self.timing.t_write_full - self.device.t_write_full).abs() > 1e-21 {
            return Err(Error::Config(format!(
                "[timing] t_write_full = {} s disagrees with [device] t_write_full = {} s",
                self.timing.t_write_full, self.device.t_write_full
            )));
        }
        let e = &self.experiments;
        let fail = |msg: String| Err(Error::Config(format!("[experiments] {msg}")));
        if e.mc_trials < 2 {
            return fail(format!("mc_trials = {} must be >= 2", e.mc_trials));
        }
        if e.column_cells == 0 || e.column_cells > e.mc_trials {
            return fail(format!("column_cells must be in 1..=mc_trials, got {}", e.column_cells));
        }
        if !(e.sweep_max_v > 0.0 && e.sweep_max_v <= self.transistor.v_dd) || e.sweep_points < 2 {
            return fail(format!(
                "leakage sweep needs 0 < sweep_max_v <= v_dd ({} V) and sweep_points >= 2",
                self.transistor.v_dd
            ));
        }
        if !(e.sweep_max_v >= self.device.v_write) {
            return fail("sweep_max_v must reach the write voltage".into());
        }
        if e.transient_sequence_v.is_empty() || !e.transient_sequence_v.iter().any(|&v| v != 0.0) {
            return fail("transient_sequence_v needs at least one non-zero input".into());
        }
        if !(e.transient_step_s > 0.0) || e.pipeline_layers == 0 || e.hysteresis_samples < 4 {
            return fail("transient_step_s, pipeline_layers and hysteresis_samples must be positive".into());
        }
        if !(e.hysteresis_frequency_hz > 0.0 && e.hysteresis_amplitude_v > 0.0) {
            return fail("hysteresis drive must have positive frequency and amplitude".into());
        }
        if !(0.0..=1.0).contains(&e.ir_drop_state_x) {
            return fail(format!("ir_drop_state_x = {} must lie in [0, 1]", e.ir_drop_state_x));
        }
        if !(e.read_input_v > 0.0) || !(e.lsb_reference_v > 0.0) || e.lsb_reference_bits < 1 {
            return fail("read_input_v, lsb_reference_v and lsb_reference_bits must be positive".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }
}

/// Reads a config file and applies `key.path=value` overrides on top.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, overrides)
}

pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = text.parse().map_err(config_err)?;
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    let mut cfg: RunConfig = toml::Value::Table(table).try_into().map_err(config_err)?;
    // The pipeline reports the device switch time it was planned against.
    if !text_sets_timing_full(text, overrides) {
        cfg.timing.t_write_full = cfg.device.t_write_full;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn text_sets_timing_full(text: &str, overrides: &[String]) -> bool {
    let in_text = text
        .parse::<toml::Table>()
        .ok()
        .and_then(|t| t.get("timing").and_then(|s| s.get("t_write_full")).map(|_| ()))
        .is_some();
    in_text || overrides.iter().any(|o| o.trim_start().starts_with("timing.t_write_full"))
}

fn apply_override(table: &mut toml::Table, ov: &str) -> Result<()> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{ov}` must look like key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config(format!("empty override key in `{ov}`")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{p}` is not a section")))?;
    }
    cur.insert(leaf.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_config_str("", &[]).unwrap(), RunConfig::default());
    }

    #[test]
    fn negative_r_set_names_invariant() {
        let err = parse_config_str("[device]\nr_set = -1\n", &[]).unwrap_err().to_string();
        assert!(err.contains("r_reset > r_set > 0"), "{err}");
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let err = parse_config_str("[device]\nr_sett = 1.0\n", &[]).unwrap_err().to_string();
        assert!(err.contains("r_sett") && err.contains("r_set"), "{err}");
        let err = parse_config_str("bogus = 1\n", &[]).unwrap_err().to_string();
        assert!(err.contains("fabric"), "{err}");
    }

    #[test]
    fn echoed_config_round_trips() {
        let cfg = parse_config_str("seed = 11\n[fabric]\nmode = \"deepnet\"\nre_layer1 = false\n", &[]).unwrap();
        let again = parse_config_str(&cfg.to_toml().unwrap(), &[]).unwrap();
        assert_eq!(cfg, again);
        let def = RunConfig::default();
        assert_eq!(parse_config_str(&def.to_toml().unwrap(), &[]).unwrap(), def);
    }

    #[test]
    fn deepnet_equal_re_is_rejected() {
        let err = parse_config_str("[fabric]\nmode = \"deepnet\"\n", &[]).unwrap_err().to_string();
        assert!(err.contains("complementary"), "{err}");
    }

    #[test]
    fn overrides_apply() {
        let cfg = parse_config_str(
            "",
            &["device.r_set=12000".into(), "fabric.mode=planar".into(), "seed=3".into(), "adc.allow_over_threshold=true".into()],
        )
        .unwrap();
        assert_eq!(cfg.device.r_set, 12000.0);
        assert_eq!(cfg.fabric.mode, Mode::Planar);
        assert_eq!(cfg.seed, 3);
        assert!(cfg.adc.allow_over_threshold);
        assert!(parse_config_str("", &["nokey".into()]).is_err());
    }

    #[test]
    fn sweep_range_bounded_by_supply() {
        assert!(parse_config_str("[experiments]\nsweep_max_v = 3.5\n", &[]).is_err());
    }
}
