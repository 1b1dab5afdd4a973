//! Crossbar fabric: geometry, read-enable assignment, netlist assembly and DC solve.
//!
//! Every cell's internal node has its N1 switch to the shared column node and its N2
//! switch to local ground; the RE level decides which of the two is the on switch. The
//! three modes therefore share one netlist topology and differ only in how many layers
//! there are and which RE assignments are legal.

mod mvm;
mod netlist;
mod solver;

pub use mvm::{ideal_mvm, ir_drop_metric, IrDropReport};
pub use netlist::{build_netlist, Admittance, Branch, BranchKind, CellTaps, Netlist, Node, NodeKind};
pub use solver::{solve_dc, SolveResult};

use serde::{Deserialize, Serialize};

use crate::cell::{CellInstance, TransistorParams};
use crate::device::{DeviceInstance, DeviceParams};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Single conventional layer.
    Planar,
    /// Both layers read onto the shared columns together.
    Expansion,
    /// One layer reads while the other is programmed.
    #[serde(alias = "deep-net", alias = "deep_net")]
    DeepNet,
}

impl Mode {
    pub fn layers(self) -> usize {
        match self {
            Mode::Planar => 1,
            Mode::Expansion | Mode::DeepNet => 2,
        }
    }

    /// Checks a per-layer read-enable assignment against this mode's biasing rule.
    pub fn check_re(self, re: &[bool]) -> Result<()> {
        if re.len() != self.layers() {
            return Err(Error::ModeViolation(format!(
                "{self:?} mode has {} layer(s) but {} read-enable levels were given",
                self.layers(),
                re.len()
            )));
        }
        let lvl = |b: bool| if b { "HIGH" } else { "LOW" };
        match self {
            Mode::Planar => Ok(()),
            Mode::Expansion if re[0] != re[1] => Err(Error::ModeViolation(format!(
                "layers 0/1: expansion mode requires the read-enable signal of all cells to be identical \
                 (got layer 0 = {}, layer 1 = {})",
                lvl(re[0]),
                lvl(re[1])
            ))),
            Mode::DeepNet if re[0] == re[1] => Err(Error::ModeViolation(format!(
                "layers 0/1: deep-net mode requires the two layers to have complementary RE signals \
                 (got layer 0 = {}, layer 1 = {})",
                lvl(re[0]),
                lvl(re[1])
            ))),
            _ => Ok(()),
        }
    }

    /// Inputs contributing to each column's read-out current.
    pub fn effective_rows(self, rows_per_layer: usize) -> usize {
        match self {
            Mode::Expansion => 2 * rows_per_layer,
            Mode::Planar | Mode::DeepNet => rows_per_layer,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "planar" => Ok(Mode::Planar),
            "expansion" => Ok(Mode::Expansion),
            "deepnet" | "deep-net" | "deep_net" => Ok(Mode::DeepNet),
            other => Err(invalid(format!("unknown mode `{other}` (expected planar, expansion or deepnet)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FabricGeometry<T> {
    pub rows_per_layer: usize,
    pub cols: usize,
    pub layers: usize,
    /// Wire resistance per cell pitch, applied to row and column segments alike.
    pub r_wire_per_cell: T,
    pub mode: Mode,
}

impl<T: Scalar> FabricGeometry<T> {
    pub fn new(mode: Mode, rows_per_layer: usize, cols: usize, r_wire_per_cell: T) -> Self {
        Self { rows_per_layer, cols, layers: mode.layers(), r_wire_per_cell, mode }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows_per_layer == 0 || self.cols == 0 {
            return Err(invalid("fabric needs at least one row and one column"));
        }
        if self.layers != self.mode.layers() {
            return Err(invalid(format!(
                "{:?} mode needs {} layer(s), geometry has {}",
                self.mode,
                self.mode.layers(),
                self.layers
            )));
        }
        if !(self.r_wire_per_cell >= T::zero() && self.r_wire_per_cell.is_finite()) {
            return Err(invalid("r_wire_per_cell must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn cells_per_layer(&self) -> usize {
        self.rows_per_layer * self.cols
    }

    pub fn cell_count(&self) -> usize {
        self.layers * self.cells_per_layer()
    }

    pub fn effective_rows(&self) -> usize {
        self.mode.effective_rows(self.rows_per_layer)
    }

    pub(crate) fn index(&self, layer: usize, row: usize, col: usize) -> usize {
        (layer * self.rows_per_layer + row) * self.cols + col
    }
}

/// A programmed array: geometry, one cell per crosspoint per layer, and the RE level of
/// each layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fabric<T> {
    geometry: FabricGeometry<T>,
    cells: Vec<CellInstance<T>>,
    re: Vec<bool>,
}

impl<T: Scalar> Fabric<T> {
    /// `cells` are laid out layer-major, then row, then column.
    pub fn new(geometry: FabricGeometry<T>, mut cells: Vec<CellInstance<T>>, re: Vec<bool>) -> Result<Self> {
        geometry.validate()?;
        if cells.len() != geometry.cell_count() {
            return Err(invalid(format!(
                "fabric expects {} cells, got {}",
                geometry.cell_count(),
                cells.len()
            )));
        }
        geometry.mode.check_re(&re)?;
        for l in 0..geometry.layers {
            for r in 0..geometry.rows_per_layer {
                for c in 0..geometry.cols {
                    let k = geometry.index(l, r, c);
                    cells[k] = cells[k].at(l, r, c);
                }
            }
        }
        Ok(Self { geometry, cells, re })
    }

    /// Builds a fabric from per-cell devices. Odd layers get the mirrored device
    /// orientation of the stack.
    pub fn from_devices(
        geometry: FabricGeometry<T>,
        devices: Vec<DeviceInstance<T>>,
        switches: TransistorParams<T>,
        re: Vec<bool>,
    ) -> Result<Self> {
        let per_layer = geometry.cells_per_layer();
        let cells = devices
            .into_iter()
            .enumerate()
            .map(|(k, mut d)| {
                if (k / per_layer.max(1)) % 2 == 1 {
                    d.params = d.params.mirrored();
                }
                CellInstance::new(d, switches)
            })
            .collect();
        Self::new(geometry, cells, re)
    }

    /// Every cell holds a nominal device at state `x`.
    pub fn uniform(
        geometry: FabricGeometry<T>,
        device: DeviceParams<T>,
        switches: TransistorParams<T>,
        x: T,
        re: Vec<bool>,
    ) -> Result<Self> {
        let dev = DeviceInstance::nominal(device).with_state(x);
        Self::from_devices(geometry, vec![dev; geometry.cell_count()], switches, re)
    }

    pub fn geometry(&self) -> &FabricGeometry<T> {
        &self.geometry
    }

    pub fn re(&self) -> &[bool] {
        &self.re
    }

    pub fn set_re(&mut self, re: Vec<bool>) -> Result<()> {
        self.geometry.mode.check_re(&re)?;
        self.re = re;
        Ok(())
    }

    pub fn cells(&self) -> &[CellInstance<T>] {
        &self.cells
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [CellInstance<T>] {
        &mut self.cells
    }

    pub fn cell(&self, layer: usize, row: usize, col: usize) -> &CellInstance<T> {
        &self.cells[self.geometry.index(layer, row, col)]
    }

    pub fn layer_cells(&self, layer: usize) -> &[CellInstance<T>] {
        let n = self.geometry.cells_per_layer();
        &self.cells[layer * n..(layer + 1) * n]
    }

    pub fn layer_cells_mut(&mut self, layer: usize) -> &mut [CellInstance<T>] {
        let n = self.geometry.cells_per_layer();
        &mut self.cells[layer * n..(layer + 1) * n]
    }

    /// Same devices with zero-resistance wires.
    pub fn without_wire_resistance(&self) -> Self {
        let mut f = self.clone();
        f.geometry.r_wire_per_cell = T::zero();
        f
    }

    pub fn with_wire_resistance(&self, r_wire_per_cell: T) -> Self {
        let mut f = self.clone();
        f.geometry.r_wire_per_cell = r_wire_per_cell;
        f
    }

    pub fn netlist(&self) -> Result<Netlist<T>> {
        build_netlist(&self.geometry, &self.cells, &self.re)
    }

    /// DC solve with one input voltage per row of every layer, layer-major.
    pub fn solve(&self, v_inputs: &[T]) -> Result<SolveResult<T>> {
        solve_dc(&self.netlist()?, v_inputs)
    }

    /// Memristor conductances of `layer` as a rows x cols matrix.
    pub fn conductance_matrix(&self, layer: usize) -> Vec<Vec<T>> {
        let cells = self.layer_cells(layer);
        cells
            .chunks(self.geometry.cols)
            .map(|row| row.iter().map(|c| c.device.conductance()).collect())
            .collect()
    }

    /// Conductances of every layer stacked layer-major, matching the input ordering of
    /// [`Fabric::solve`].
    pub fn stacked_conductance_matrix(&self) -> Vec<Vec<T>> {
        (0..self.geometry.layers).flat_map(|l| self.conductance_matrix(l)).collect()
    }
}
