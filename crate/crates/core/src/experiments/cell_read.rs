use super::{Check, ExperimentReport};
use crate::cell::CellInstance;
use crate::config::RunConfig;
use crate::device::DeviceInstance;
use crate::engine::input_lsb;
use crate::error::Result;
use crate::fabric::{Fabric, FabricGeometry, Mode};
use crate::io::{num, CsvTable};

/// Column current of one reset cell read through its N1 switch.
pub(crate) fn reset_cell_read_current(cfg: &RunConfig, v_in: f64) -> Result<f64> {
    let cell = CellInstance::new(DeviceInstance::nominal(cfg.device), cfg.transistor);
    Ok(cell.branch_currents(v_in, 0.0, true)?.i_col)
}

/// Single-cell read current and the input resolution of the DAC.
pub fn cell_read(cfg: &RunConfig) -> Result<ExperimentReport> {
    let e = &cfg.experiments;
    let mut rep = ExperimentReport::new("cell_read", cfg.seed);
    let v = e.read_input_v;

    let i_col = reset_cell_read_current(cfg, v)?;
    let ideal = v * cfg.device.g_reset();
    rep.check("read_current", i_col, "A", Check::WithinRel { target: 39.6e-9, rel_tol: 0.005 });
    rep.info("ideal_current", ideal, "A");
    rep.info("deviation_from_ideal", 1.0 - i_col / ideal, "1");

    let geom = FabricGeometry::new(Mode::Planar, 1, 1, cfg.fabric.r_wire_per_cell);
    let fab = Fabric::uniform(geom, cfg.device, cfg.transistor, 0.0, vec![true])?;
    let solved = fab.solve(&[v])?.column_currents[0];
    rep.info("read_current_with_wires", solved, "A");

    let lsb = input_lsb(e.lsb_reference_v, e.lsb_reference_bits)?;
    rep.check("input_lsb", lsb, "V", Check::Within { target: 3.90625e-3, abs_tol: 1e-15 });
    rep.check("input_lsb_rounded", (lsb * 1e3).round(), "mV", Check::Within { target: 4.0, abs_tol: 0.0 });
    rep.note(format!(
        "input step from a {} V full scale at {} bits",
        e.lsb_reference_v, e.lsb_reference_bits
    ));

    let mut csv = CsvTable::new(&["code", "v_in_V", "i_col_A", "i_ideal_A"]);
    for code in 0..=8u32 {
        let vin = code as f64 * lsb;
        csv.push(vec![code.to_string(), num(vin), num(reset_cell_read_current(cfg, vin)?), num(vin * cfg.device.g_reset())]);
    }
    rep.file("codes", csv.render());
    Ok(rep)
}
