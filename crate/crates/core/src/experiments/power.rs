use super::{Check, ExperimentReport};
use crate::config::RunConfig;
use crate::device::DeviceInstance;
use crate::error::{invalid, Result};
use crate::fabric::{Fabric, FabricGeometry, Mode};
use crate::io::{num, CsvTable};

/// `sum v_k^2 * g_k` over devices each biased by its own voltage.
pub fn static_power(devices: &[DeviceInstance<f64>], volts: &[f64]) -> Result<f64> {
    if devices.len() != volts.len() {
        return Err(invalid(format!("{} devices but {} bias voltages", devices.len(), volts.len())));
    }
    Ok(devices.iter().zip(volts).map(|(d, v)| v * v * d.conductance()).sum())
}

/// Dissipation with the write voltage on every row.
pub fn power_worst_case(cfg: &RunConfig) -> Result<ExperimentReport> {
    let p = cfg.device;
    let f = &cfg.fabric;
    let v = p.v_write;
    let mut rep = ExperimentReport::new("power_worst_case", cfg.seed);
    let geom = FabricGeometry::new(Mode::Expansion, f.rows_per_layer, f.cols, f.r_wire_per_cell);
    let n = geom.cell_count();
    let bias = vec![v; n];

    let reset = vec![DeviceInstance::nominal(p).with_state(0.0); n];
    let set = vec![DeviceInstance::nominal(p).with_state(1.0); n];
    let p_reset = static_power(&reset, &bias)?;
    let p_set = static_power(&set, &bias)?;
    let p_zero = static_power(&reset, &vec![0.0; n])?;
    rep.check("all_reset_power", p_reset, "W", Check::WithinRel { target: 2.9e-3, rel_tol: 0.02 });
    rep.info("all_set_power", p_set, "W");
    rep.check("zero_input_power", p_zero, "W", Check::Within { target: 0.0, abs_tol: 0.0 });
    rep.note(format!(
        "all-set devices would dissipate {:.1} mW, {:.0}x the all-reset figure; the 2.9 mW worst case matches all-reset",
        p_set * 1e3,
        p_set / p_reset
    ));

    let fab = Fabric::uniform(geom, p, cfg.transistor, 0.0, vec![true, true])?;
    let inputs = vec![v; geom.layers * geom.rows_per_layer];
    let res = fab.solve(&inputs)?;
    let p_circuit: f64 = inputs.iter().zip(&res.input_currents).map(|(v, i)| (v * i).abs()).sum();
    rep.info("all_reset_circuit_power", p_circuit, "W");
    rep.note(format!("{n} devices at {v} V; circuit power includes switch and wire losses"));

    let mut csv = CsvTable::new(&["case", "devices", "v_row_V", "r_device_ohm", "power_W"]);
    csv.push(vec!["all_reset".into(), n.to_string(), num(v), num(p.r_reset), num(p_reset)]);
    csv.push(vec!["all_set".into(), n.to_string(), num(v), num(p.r_set), num(p_set)]);
    csv.push(vec!["zero_input".into(), n.to_string(), num(0.0), num(p.r_reset), num(p_zero)]);
    rep.file("cases", csv.render());
    Ok(rep)
}
