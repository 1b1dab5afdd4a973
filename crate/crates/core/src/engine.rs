//! Weight mapping, programming and digitised read-out.
//!
//! Weights are unipolar, normalised to [0, 1]. A weight is bit-sliced across
//! `cells_per_weight` devices with positional significance in base `levels`; each
//! device realises one of `levels` conductances evenly spaced between the reset and set
//! conductance. The programming controller visits rows one at a time and gates a pulse
//! per cell, so a layer takes `rows * t_row` regardless of how many cells move.

use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::error::{invalid, Error, Result};
use crate::fabric::{Fabric, SolveResult};
use crate::scalar::Scalar;

/// Relative conductance error the write-verify loop accepts.
pub const PROGRAM_TOLERANCE: f64 = 5e-3;

const BITS_PER_CELL: [f64; 4] = [1.0, 2.0, 3.0, 3.5];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantScheme<T> {
    pub bits_per_cell: f64,
    pub cells_per_weight: usize,
    /// Realisable conductances, strictly increasing from reset to set.
    pub g_levels: Vec<T>,
}

impl<T: Scalar> QuantScheme<T> {
    pub fn new(bits_per_cell: f64, cells_per_weight: usize, g_reset: T, g_set: T) -> Result<Self> {
        if !BITS_PER_CELL.contains(&bits_per_cell) {
            return Err(invalid(format!("bits_per_cell = {bits_per_cell} must be one of 1, 2, 3, 3.5")));
        }
        if cells_per_weight == 0 {
            return Err(invalid("cells_per_weight must be >= 1"));
        }
        if !(g_set > g_reset && g_reset > T::zero()) {
            return Err(invalid("quantisation range needs g_set > g_reset > 0"));
        }
        let levels = bits_per_cell.exp2().round() as usize;
        if (levels as f64).powi(cells_per_weight as i32) > 2f64.powi(52) {
            return Err(invalid("cells_per_weight too large for exact slice arithmetic"));
        }
        let step = (g_set - g_reset) / T::from_usize(levels - 1).unwrap();
        let g_levels = (0..levels)
            .map(|k| if k == levels - 1 { g_set } else { g_reset + step * T::from_usize(k).unwrap() })
            .collect();
        Ok(Self { bits_per_cell, cells_per_weight, g_levels })
    }

    pub fn for_device(bits_per_cell: f64, cells_per_weight: usize, device: &DeviceParams<T>) -> Result<Self> {
        Self::new(bits_per_cell, cells_per_weight, device.g_reset(), device.g_set())
    }

    pub fn levels(&self) -> usize {
        self.g_levels.len()
    }

    /// Number of distinct reconstructed values, `levels ^ cells_per_weight`.
    pub fn codes(&self) -> u64 {
        (self.levels() as u64).pow(self.cells_per_weight as u32)
    }

    /// Weight step of the least significant slice.
    pub fn lsb(&self) -> f64 {
        1.0 / self.codes() as f64
    }
}

/// Weights sliced onto cells. Weight `(i, j)` occupies cells `(i, j*c .. j*c + c)`,
/// most significant slice first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlicedWeights<T> {
    pub rows: usize,
    pub weight_cols: usize,
    pub cells_per_weight: usize,
    pub levels: usize,
    pub digits: Vec<Vec<usize>>,
    pub conductances: Vec<Vec<T>>,
}

impl<T: Scalar> SlicedWeights<T> {
    pub fn cell_cols(&self) -> usize {
        self.weight_cols * self.cells_per_weight
    }

    /// Weight value each slice pattern stands for.
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let base = self.levels as f64;
        let full = base.powi(self.cells_per_weight as i32);
        self.digits
            .iter()
            .map(|row| {
                row.chunks(self.cells_per_weight)
                    .map(|slice| slice.iter().fold(0.0, |acc, &d| acc * base + d as f64) / full)
                    .collect()
            })
            .collect()
    }
}

/// Slices each weight to the nearest representable code.
///
/// Codes are `round(w * levels^c)` saturated at the top code, so the reconstruction
/// error is at most half a code step below `1 - lsb/2` and at most one step above it.
pub fn quantize<T: Scalar>(weights: &[Vec<T>], scheme: &QuantScheme<T>) -> Result<SlicedWeights<T>> {
    let rows = weights.len();
    let weight_cols = weights.first().map_or(0, Vec::len);
    if weights.iter().any(|r| r.len() != weight_cols) {
        return Err(invalid("weight matrix rows have unequal lengths"));
    }
    let (levels, c, codes) = (scheme.levels(), scheme.cells_per_weight, scheme.codes());
    let mut digits = Vec::with_capacity(rows);
    let mut conductances = Vec::with_capacity(rows);
    for (i, row) in weights.iter().enumerate() {
        let mut drow = Vec::with_capacity(weight_cols * c);
        for (j, &w) in row.iter().enumerate() {
            let w = w.as_f64();
            if !(0.0..=1.0).contains(&w) {
                return Err(invalid(format!("weight ({i}, {j}) = {w} outside [0, 1]")));
            }
            let mut code = ((w * codes as f64).round() as u64).min(codes - 1);
            let mut slice = vec![0; c];
            for s in (0..c).rev() {
                slice[s] = (code % levels as u64) as usize;
                code /= levels as u64;
            }
            drow.extend(slice);
        }
        conductances.push(drow.iter().map(|&d| scheme.g_levels[d]).collect());
        digits.push(drow);
    }
    Ok(SlicedWeights { rows, weight_cols, cells_per_weight: c, levels, digits, conductances })
}

/// Continuous mapping `g = g_reset + w * (g_set - g_reset)`, one cell per weight.
pub fn analog_targets<T: Scalar>(weights: &[Vec<T>], device: &DeviceParams<T>) -> Result<Vec<Vec<T>>> {
    let (g_r, g_s) = (device.g_reset(), device.g_set());
    weights
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &w)| {
                    if !(w >= T::zero() && w <= T::one()) {
                        Err(invalid(format!("weight ({i}, {j}) = {w} outside [0, 1]")))
                    } else {
                        Ok(g_r + w * (g_s - g_r))
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WriteParams<T> {
    /// Pulse amplitude; the sign is chosen per device from its polarity.
    pub v_write: T,
    /// Time slot for one row.
    pub t_row: T,
}

impl<T: Scalar> WriteParams<T> {
    pub fn from_device(p: &DeviceParams<T>) -> Self {
        Self { v_write: p.v_write, t_row: p.t_write_full }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgramReport<T> {
    pub rows_programmed: usize,
    pub total_time: T,
    pub total_energy: T,
    pub pulses: usize,
    pub achieved: Vec<Vec<T>>,
    pub max_rel_error: T,
}

/// Programs every cell of a write-biased `layer` to `targets` (rows x cols, siemens).
///
/// Cells already within [`PROGRAM_TOLERANCE`] of their target, or that cannot move any
/// closer, receive no pulse. Targets outside a device's sampled range saturate and show
/// up in `max_rel_error`.
pub fn program<T: Scalar>(
    fabric: &mut Fabric<T>,
    layer: usize,
    targets: &[Vec<T>],
    write: &WriteParams<T>,
) -> Result<ProgramReport<T>> {
    let geom = *fabric.geometry();
    if layer >= geom.layers {
        return Err(invalid(format!("layer {layer} does not exist")));
    }
    if fabric.re()[layer] {
        return Err(Error::ModeViolation(format!(
            "layer {layer} is read-biased (RE high); programming requires RE low so the cells are isolated from the columns"
        )));
    }
    if targets.len() != geom.rows_per_layer || targets.iter().any(|r| r.len() != geom.cols) {
        return Err(invalid(format!("targets must be {}x{}", geom.rows_per_layer, geom.cols)));
    }
    let tol = T::lit(PROGRAM_TOLERANCE);
    let slack = T::lit(1e-9);
    let cols = geom.cols;
    let mut total_energy = T::zero();
    let mut pulses = 0;
    let mut max_rel_error = T::zero();
    let mut achieved = vec![Vec::with_capacity(cols); geom.rows_per_layer];

    for (k, cell) in fabric.layer_cells_mut(layer).iter_mut().enumerate() {
        let (r, c) = (k / cols, k % cols);
        let target = targets[r][c];
        let p = cell.device.params;
        if !(target >= p.g_reset() * (T::one() - slack) && target <= p.g_set() * (T::one() + slack)) {
            return Err(invalid(format!(
                "target ({r}, {c}) = {target} S outside [{}, {}] S",
                p.g_reset(),
                p.g_set()
            )));
        }
        if !(write.v_write.abs() > p.v_th) {
            return Err(invalid("write amplitude must exceed the device threshold"));
        }
        let dev = cell.device;
        let g0 = dev.conductance();
        let x_target = dev.state_for_conductance(target);
        if (g0 - target).abs() > tol * target && x_target != dev.x {
            let sign = if x_target > dev.x { T::one() } else { -T::one() };
            let v = sign * T::from_i8(p.polarity).unwrap() * write.v_write.abs();
            let dt = (x_target - dev.x).abs() / dev.drift_rate(v).abs();
            if dt > write.t_row * (T::one() + slack) {
                return Err(invalid(format!(
                    "cell ({r}, {c}) needs a {dt} s pulse, longer than the {} s row slot",
                    write.t_row
                )));
            }
            let mut next = dev.apply_pulse(v, dt);
            next.x = x_target;
            let g1 = next.conductance();
            total_energy = total_energy + v * v * dt * (g0 + g1) / T::lit(2.0);
            cell.device = next;
            pulses += 1;
        }
        let g = cell.device.conductance();
        max_rel_error = max_rel_error.max((g - target).abs() / target);
        achieved[r].push(g);
    }

    Ok(ProgramReport {
        rows_programmed: geom.rows_per_layer,
        total_time: write.t_row * T::from_usize(geom.rows_per_layer).unwrap(),
        total_energy,
        pulses,
        achieved,
        max_rel_error,
    })
}

/// Smallest DAC step, `v_read_max / 2^input_bits`.
pub fn input_lsb<T: Scalar>(v_read_max: T, input_bits: i32) -> Result<T> {
    if input_bits < 1 {
        return Err(invalid(format!("input_bits = {input_bits} must be >= 1")));
    }
    Ok(v_read_max / T::lit(2f64.powi(input_bits)))
}

/// Resolution supported by a relative current error: `log2(1 / e)` rounded down to the
/// nearest half bit.
pub fn effective_bits(rel_error: f64) -> Result<f64> {
    if !(rel_error > 0.0 && rel_error < 1.0) {
        return Err(invalid(format!("relative error {rel_error} must lie in (0, 1)")));
    }
    Ok((2.0 * (1.0 / rel_error).log2()).floor() / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdcModel {
    /// DAC resolution on the row inputs.
    pub input_bits: i32,
    pub v_read_max: f64,
    pub output_bits: u32,
    pub full_scale_a: f64,
    /// Permit reads above the device threshold. Such reads drift the device state.
    pub allow_over_threshold: bool,
}

impl Default for AdcModel {
    fn default() -> Self {
        Self { input_bits: 7, v_read_max: 0.39, output_bits: 8, full_scale_a: 4.0e-4, allow_over_threshold: false }
    }
}

impl AdcModel {
    pub fn validate(&self) -> Result<()> {
        input_lsb(self.v_read_max, self.input_bits)?;
        if !(self.v_read_max > 0.0) {
            return Err(invalid("v_read_max must be positive"));
        }
        if self.output_bits == 0 || self.output_bits > 32 {
            return Err(invalid("output_bits must be in 1..=32"));
        }
        if !(self.full_scale_a > 0.0) {
            return Err(invalid("full_scale_a must be positive"));
        }
        Ok(())
    }

    /// Uniform quantiser against full scale, saturating at both ends.
    pub fn code(&self, current: f64) -> u32 {
        let top = ((1u64 << self.output_bits) - 1) as f64;
        ((current / self.full_scale_a).clamp(0.0, 1.0) * top).round() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Readout<T> {
    pub codes: Vec<u32>,
    pub currents: Vec<T>,
}

/// Expands read-layer inputs to the fabric's full input vector, grounding write-biased
/// rows. Fails if `v_read` also covers rows of a write-biased layer.
fn read_inputs<T: Scalar>(fabric: &Fabric<T>, v_read: &[T], adc: &AdcModel) -> Result<Vec<T>> {
    let geom = fabric.geometry();
    let n = geom.rows_per_layer;
    let reading: Vec<usize> = (0..geom.layers).filter(|&l| fabric.re()[l]).collect();
    if reading.is_empty() {
        return Err(Error::ModeViolation("no layer is read-enabled (RE high); nothing drives the columns".into()));
    }
    if v_read.len() != reading.len() * n {
        if let (true, Some(l)) = (v_read.len() == geom.layers * n, (0..geom.layers).find(|l| !fabric.re()[*l])) {
            return Err(Error::ModeViolation(format!(
                "read-out inputs span layer {l}, which is write-biased (RE low)"
            )));
        }
        return Err(invalid(format!("expected {} read inputs, got {}", reading.len() * n, v_read.len())));
    }
    let v_th = fabric
        .cells()
        .iter()
        .filter(|c| fabric.re()[c.layer])
        .map(|c| c.device.params.v_th.as_f64())
        .fold(f64::INFINITY, f64::min);
    for &v in v_read {
        let a = v.as_f64().abs();
        if a > v_th && !adc.allow_over_threshold {
            return Err(Error::ReadDisturb { volts: a, limit: v_th });
        }
        if a > adc.v_read_max {
            return Err(invalid(format!("read input {a} V exceeds v_read_max = {} V", adc.v_read_max)));
        }
    }
    let mut full = vec![T::zero(); geom.layers * n];
    for (k, &l) in reading.iter().enumerate() {
        full[l * n..(l + 1) * n].copy_from_slice(&v_read[k * n..(k + 1) * n]);
    }
    Ok(full)
}

/// Analog column currents for a sub-threshold read. Leaves every device untouched.
pub fn read_currents<T: Scalar>(fabric: &Fabric<T>, v_read: &[T], adc: &AdcModel) -> Result<SolveResult<T>> {
    let full = read_inputs(fabric, v_read, adc)?;
    fabric.solve(&full)
}

pub fn readout<T: Scalar>(fabric: &Fabric<T>, v_read: &[T], adc: &AdcModel) -> Result<Readout<T>> {
    let res = read_currents(fabric, v_read, adc)?;
    Ok(Readout {
        codes: res.column_currents.iter().map(|i| adc.code(i.as_f64())).collect(),
        currents: res.column_currents,
    })
}

/// Read that may exceed the threshold when `adc.allow_over_threshold` is set; every
/// read-layer device then drifts under its own bias for `t_read`.
pub fn readout_disturbing<T: Scalar>(
    fabric: &mut Fabric<T>,
    v_read: &[T],
    adc: &AdcModel,
    t_read: T,
) -> Result<Readout<T>> {
    let net = fabric.netlist()?;
    let full = read_inputs(fabric, v_read, adc)?;
    let res = crate::fabric::solve_dc(&net, &full)?;
    // Netlist cells follow the fabric's layer-major cell order.
    for (k, taps) in net.cells.iter().enumerate() {
        if taps.reads {
            let b = &net.branches[taps.memristor];
            let v = res.node_voltages[b.a] - res.node_voltages[b.b];
            let cell = &mut fabric.cells_mut()[k];
            cell.device = cell.device.apply_pulse(v, t_read);
        }
    }
    Ok(Readout {
        codes: res.column_currents.iter().map(|i| adc.code(i.as_f64())).collect(),
        currents: res.column_currents,
    })
}
