//! Memristor-CMOS hybrid cell: the memristor feeds an internal node that two
//! switches route either to the shared column (N1, read) or to local ground (N2,
//! write), selected by the read-enable line.
//!
//! The transistors are switch-level. The on switch is a series `r_on`; the off switch
//! is a small linear leakage conductance `g_off`.

use serde::{Deserialize, Serialize};

use crate::device::DeviceInstance;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Per-cell leakage into the column observed at the write bias with a set device.
pub const REFERENCE_LEAKAGE_A: f64 = 2.5e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransistorParams<T> {
    /// On-state resistance in ohms. Zero is an ideal switch.
    pub r_on: T,
    /// Off-state leakage conductance in siemens.
    pub g_off: T,
    /// Sizing ratio, informational.
    pub w_over_l: T,
    /// Supply rail bounding every terminal voltage.
    pub v_dd: T,
}

impl<T: Scalar> Default for TransistorParams<T> {
    fn default() -> Self {
        let r_on = T::lit(1.0e3);
        Self {
            r_on,
            g_off: Self::calibrated_g_off(
                T::lit(REFERENCE_LEAKAGE_A),
                T::lit(1.2),
                T::lit(10e3),
                r_on,
            ),
            w_over_l: T::lit(2.5),
            v_dd: T::lit(1.8),
        }
    }
}

impl<T: Scalar> TransistorParams<T> {
    /// Off conductance that leaks `target` amps from a write-biased cell.
    ///
    /// In write mode the internal node sits at the divider voltage
    /// `v_write * r_on / (r_memristor + r_on)`, and the leakage is `g_off` times that.
    pub fn calibrated_g_off(target: T, v_write: T, r_memristor: T, r_on: T) -> T {
        let v_node = v_write * r_on / (r_memristor + r_on);
        target / v_node
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_on >= T::zero() && self.r_on.is_finite()) {
            return Err(invalid(format!("r_on = {} must be finite and >= 0", self.r_on)));
        }
        if !(self.g_off >= T::zero() && self.g_off.is_finite()) {
            return Err(invalid(format!("g_off = {} must be finite and >= 0", self.g_off)));
        }
        if self.g_off * self.r_on > T::lit(1e-6) {
            return Err(invalid(format!(
                "g_off * r_on = {} violates g_off*r_on << 1 (must be <= 1e-6)",
                self.g_off * self.r_on
            )));
        }
        if !(self.v_dd > T::zero()) {
            return Err(invalid("v_dd must be positive"));
        }
        Ok(())
    }

    /// On-state conductance; `None` for an ideal (zero-ohm) switch.
    pub fn g_on(&self) -> Option<T> {
        (self.r_on > T::zero()).then(|| self.r_on.recip())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellInstance<T> {
    pub device: DeviceInstance<T>,
    /// Read-path switch to the shared column.
    pub n1: TransistorParams<T>,
    /// Write-path switch to local ground.
    pub n2: TransistorParams<T>,
    pub row: usize,
    pub col: usize,
    pub layer: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BranchCurrents<T> {
    /// Current into the shared column.
    pub i_col: T,
    /// Current into local ground.
    pub i_gnd: T,
    /// Component carried by the off switch: `i_gnd` when reading, `i_col` when writing.
    pub i_leak: T,
}

impl<T: Scalar> CellInstance<T> {
    pub fn new(device: DeviceInstance<T>, switches: TransistorParams<T>) -> Self {
        Self { device, n1: switches, n2: switches, row: 0, col: 0, layer: 0 }
    }

    pub fn at(mut self, layer: usize, row: usize, col: usize) -> Self {
        self.layer = layer;
        self.row = row;
        self.col = col;
        self
    }

    /// Switch conductances `(to column, to ground)` for the given RE level.
    /// `None` marks an ideal on switch.
    pub fn switch_conductances(&self, re_high: bool) -> (Option<T>, Option<T>) {
        if re_high {
            (self.n1.g_on(), Some(self.n2.g_off))
        } else {
            (Some(self.n1.g_off), self.n2.g_on())
        }
    }

    /// DC branch currents with the row at `v_row` and the column held at `v_col`.
    pub fn branch_currents(&self, v_row: T, v_col: T, re_high: bool) -> Result<BranchCurrents<T>> {
        let v_dd = self.n1.v_dd.min(self.n2.v_dd);
        for (name, v) in [("v_row", v_row), ("v_col", v_col)] {
            if v.abs() > v_dd {
                return Err(invalid(format!("{name} = {v} V outside the +/-{v_dd} V supply range")));
            }
        }
        let g_m = self.device.conductance();
        let (g_col, g_gnd) = self.switch_conductances(re_high);
        // Internal node voltage between the memristor and the two switches.
        let u = match (g_col, g_gnd) {
            (None, _) => v_col,
            (_, None) => T::zero(),
            (Some(gc), Some(gg)) => (g_m * v_row + gc * v_col) / (g_m + gc + gg),
        };
        let i_row = g_m * (v_row - u);
        let (i_col, i_gnd) = match (g_col, g_gnd) {
            (None, Some(gg)) => (i_row - gg * u, gg * u),
            (Some(gc), None) => (gc * (u - v_col), i_row - gc * (u - v_col)),
            (Some(gc), Some(gg)) => (gc * (u - v_col), gg * u),
            (None, None) => unreachable!("an RE level always has exactly one on switch"),
        };
        let i_leak = if re_high { i_gnd } else { i_col };
        Ok(BranchCurrents { i_col, i_gnd, i_leak })
    }
}

/// Total leakage a column collects from write-biased cells whose rows sit at `v_write`.
/// An empty slice leaks nothing.
pub fn column_leakage<T: Scalar>(cells: &[CellInstance<T>], v_write: T) -> Result<T> {
    cells.iter().try_fold(T::zero(), |acc, c| {
        Ok(acc + c.branch_currents(v_write, T::zero(), false)?.i_leak)
    })
}
