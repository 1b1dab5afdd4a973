use super::{Check, ExperimentReport};
use crate::config::RunConfig;
use crate::device::sample_devices;
use crate::engine::effective_bits;
use crate::error::{invalid, Result};
use crate::fabric::{Fabric, FabricGeometry, Mode};
use crate::io::{num, CsvTable};

/// Quasi-static read cycle of one deep-net cell while its partner layer is written.
///
/// Every trial pairs a sampled reset device on the read layer with a sampled set device
/// on the write layer, steps the read input through the configured sequence, and keeps
/// the largest relative deviation from the nominal-device current. The reported
/// worst-case deviation is the population mean of those per-trial worst values.
pub fn transient_read(cfg: &RunConfig) -> Result<ExperimentReport> {
    let e = &cfg.experiments;
    let p = cfg.device;
    if e.transient_sequence_v.is_empty() {
        return Err(invalid("transient input sequence is empty"));
    }
    let mut rep = ExperimentReport::new("transient_read", cfg.seed);
    let readers = sample_devices(&p, e.mc_trials, cfg.seed)?;
    let writers = sample_devices(&p, e.mc_trials, cfg.seed.wrapping_add(1))?;
    let geom = FabricGeometry::new(Mode::DeepNet, 1, 1, cfg.fabric.r_wire_per_cell);
    let g_nominal = p.g_reset();

    let mut csv = CsvTable::new(&["trial", "t_ns", "v_in_V", "i_col_A", "i_ideal_A", "deviation"]);
    let mut worst = Vec::with_capacity(e.mc_trials);
    for (t, (r, w)) in readers.into_iter().zip(writers).enumerate() {
        let fab = Fabric::from_devices(geom, vec![r.with_state(0.0), w.with_state(1.0)], cfg.transistor, vec![true, false])?;
        let net = fab.netlist()?;
        let mut trial_worst = 0.0f64;
        for (k, &v) in e.transient_sequence_v.iter().enumerate() {
            let i = crate::fabric::solve_dc(&net, &[v, p.v_write])?.column_currents[0];
            let ideal = v * g_nominal;
            let dev = if ideal != 0.0 { ((i - ideal) / ideal).abs() } else { 0.0 };
            if ideal != 0.0 {
                trial_worst = trial_worst.max(dev);
            }
            csv.push(vec![t.to_string(), num(k as f64 * e.transient_step_s * 1e9), num(v), num(i), num(ideal), num(dev)]);
        }
        worst.push(trial_worst);
    }

    let expected = worst.iter().sum::<f64>() / worst.len() as f64;
    let pop_max = worst.iter().copied().fold(0.0, f64::max);
    rep.check("worst_case_deviation", expected, "1", Check::Within { target: 0.08, abs_tol: 0.015 });
    rep.info("population_max_deviation", pop_max, "1");
    rep.check("effective_bits_measured", effective_bits(expected)?, "bit", Check::Within { target: 3.5, abs_tol: 0.0 });
    rep.check("effective_bits_at_8_percent", effective_bits(0.08)?, "bit", Check::Within { target: 3.5, abs_tol: 0.0 });
    rep.note(format!(
        "{} trials; per-trial worst deviation over {} input steps against v / r_reset(nominal), averaged over trials",
        e.mc_trials,
        e.transient_sequence_v.len()
    ));
    rep.file("samples", csv.render());
    Ok(rep)
}
