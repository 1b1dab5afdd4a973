use super::cell_read::reset_cell_read_current;
use super::{Check, ExperimentReport};
use crate::cell::{column_leakage, CellInstance};
use crate::config::RunConfig;
use crate::device::sample_devices;
use crate::error::Result;
use crate::io::{num, CsvTable};

/// Monte Carlo of the off-switch leakage of write-biased set cells.
pub fn leakage_mc(cfg: &RunConfig) -> Result<ExperimentReport> {
    let e = &cfg.experiments;
    let p = cfg.device;
    let mut rep = ExperimentReport::new("leakage_mc", cfg.seed);

    let cells: Vec<CellInstance<f64>> = sample_devices(&p, e.mc_trials, cfg.seed)?
        .into_iter()
        .map(|d| CellInstance::new(d.with_state(1.0), cfg.transistor))
        .collect();

    let per_cell: Vec<f64> = cells
        .iter()
        .map(|c| c.branch_currents(p.v_write, 0.0, false).map(|b| b.i_leak))
        .collect::<Result<_>>()?;
    let n = per_cell.len() as f64;
    let mean = per_cell.iter().sum::<f64>() / n;
    let std = (per_cell.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    rep.check("per_cell_leakage_mean", mean, "A", Check::WithinRel { target: 2.5e-12, rel_tol: 0.10 });
    rep.info("per_cell_leakage_std", std, "A");

    let columns: Vec<f64> = cells
        .chunks_exact(e.column_cells)
        .map(|col| column_leakage(col, p.v_write))
        .collect::<Result<_>>()?;
    let col_mean = columns.iter().sum::<f64>() / columns.len() as f64;
    let col_target = 2.5e-12 * e.column_cells as f64;
    rep.check("column_leakage_mean", col_mean, "A", Check::WithinRel { target: col_target, rel_tol: 0.10 });
    rep.info("columns_sampled", columns.len() as f64, "1");

    let i_read = reset_cell_read_current(cfg, e.read_input_v)?;
    rep.info("worst_case_read_current", i_read, "A");
    rep.check(
        "column_leakage_to_read_ratio",
        col_mean / i_read,
        "1",
        Check::WithinRel { target: 6.3e-4, rel_tol: 0.05 },
    );
    rep.note(format!(
        "{} set devices, rows at {} V, read-enable low; columns are consecutive groups of {}",
        e.mc_trials, p.v_write, e.column_cells
    ));

    let mut at_write = CsvTable::new(&["trial", "r_set_ohm", "i_leak_A"]);
    for (k, (c, i)) in cells.iter().zip(&per_cell).enumerate() {
        at_write.push(vec![k.to_string(), num(c.device.sampled_r_set), num(*i)]);
    }
    rep.file("cells", at_write.render());

    let mut sweep = CsvTable::new(&["trial", "v_in_V", "i_leak_A"]);
    for (k, c) in cells.iter().enumerate() {
        for s in 0..e.sweep_points {
            let v = e.sweep_max_v * s as f64 / (e.sweep_points - 1) as f64;
            sweep.push(vec![k.to_string(), num(v), num(c.branch_currents(v, 0.0, false)?.i_leak)]);
        }
    }
    rep.file("sweep", sweep.render());
    Ok(rep)
}
