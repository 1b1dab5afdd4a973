use super::{Check, ExperimentReport};
use crate::config::RunConfig;
use crate::error::Result;
use crate::fabric::{ir_drop_metric, Fabric, FabricGeometry, IrDropReport, Mode};
use crate::io::{num, CsvTable};

pub(crate) struct IrDropRun {
    pub actual: Vec<f64>,
    pub ideal: Vec<f64>,
    pub report: IrDropReport<f64>,
}

/// Solves `fabric` with every row at `v` and again with zero wire resistance.
pub(crate) fn ir_drop_run(fabric: &Fabric<f64>, v: f64) -> Result<IrDropRun> {
    let inputs = vec![v; fabric.geometry().layers * fabric.geometry().rows_per_layer];
    let actual = fabric.solve(&inputs)?;
    let ideal = fabric.without_wire_resistance().solve(&inputs)?.column_currents;
    let report = ir_drop_metric(&actual, &ideal)?;
    Ok(IrDropRun { actual: actual.column_currents, ideal, report })
}

/// Worst-case column loss of the stacked expansion array against a planar array
/// holding the same number of rows.
pub fn ir_drop_experiment(cfg: &RunConfig) -> Result<ExperimentReport> {
    let f = &cfg.fabric;
    let x = cfg.experiments.ir_drop_state_x;
    let v = cfg.device.v_write;
    let mut rep = ExperimentReport::new("ir_drop", cfg.seed);

    let exp_geom = FabricGeometry::new(Mode::Expansion, f.rows_per_layer, f.cols, f.r_wire_per_cell);
    let planar_geom = FabricGeometry::new(Mode::Planar, 2 * f.rows_per_layer, f.cols, f.r_wire_per_cell);
    let exp = Fabric::uniform(exp_geom, cfg.device, cfg.transistor, x, vec![true, true])?;
    let planar = Fabric::uniform(planar_geom, cfg.device, cfg.transistor, x, vec![true])?;
    let e = ir_drop_run(&exp, v)?;
    let p = ir_drop_run(&planar, v)?;

    rep.info("expansion_worst_loss", e.report.worst, "1");
    rep.info("planar_worst_loss", p.report.worst, "1");
    rep.info("expansion_worst_column", e.report.worst_column as f64, "1");
    rep.info("planar_worst_column", p.report.worst_column as f64, "1");
    let reduction = if p.report.worst > 0.0 {
        1.0 - e.report.worst / p.report.worst
    } else {
        rep.note("planar loss is zero (no wire resistance); reduction reported as 0");
        0.0
    };
    let target = if p.report.worst > 0.0 { 0.22 } else { 0.0 };
    rep.check("worst_loss_reduction", reduction, "1", Check::Within { target, abs_tol: 0.08 });
    let mean = |l: &[f64]| l.iter().sum::<f64>() / l.len() as f64;
    rep.info("mean_loss_reduction", 1.0 - mean(&e.report.losses) / mean(&p.report.losses).max(f64::MIN_POSITIVE), "1");
    rep.note(format!(
        "{r}x{c}x2 expansion vs {}x{c} planar, state x = {x}, all rows at {v} V, read-enable high; \
         ideal currents are the same arrays solved with zero wire resistance",
        2 * f.rows_per_layer,
        r = f.rows_per_layer,
        c = f.cols
    ));

    let mut csv = CsvTable::new(&[
        "column",
        "i_expansion_A",
        "i_expansion_ideal_A",
        "loss_expansion",
        "i_planar_A",
        "i_planar_ideal_A",
        "loss_planar",
    ]);
    for j in 0..f.cols {
        csv.push(vec![
            j.to_string(),
            num(e.actual[j]),
            num(e.ideal[j]),
            num(e.report.losses[j]),
            num(p.actual[j]),
            num(p.ideal[j]),
            num(p.report.losses[j]),
        ]);
    }
    rep.file("columns", csv.render());
    Ok(rep)
}
