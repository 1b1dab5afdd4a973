use super::{Check, ExperimentReport};
use crate::config::RunConfig;
use crate::error::Result;
use crate::fabric::Mode;
use crate::io::{num, CsvTable};
use crate::pipeline::{asymptotic_speedup, plan, speedup};

const SWEEP_MAX_LAYERS: usize = 64;

/// Deep-net overlap against the sequential write-then-read baseline.
pub fn pipeline_speedup(cfg: &RunConfig) -> Result<ExperimentReport> {
    let t = cfg.timing;
    let l = cfg.experiments.pipeline_layers;
    let mut rep = ExperimentReport::new("pipeline_speedup", cfg.seed);

    let deep = plan(Mode::DeepNet, l, &t)?;
    let base = plan(Mode::Expansion, l, &t)?;
    let violations = [deep.check_legal(), base.check_legal()].iter().filter(|r| r.is_err()).count();
    rep.check("schedule_violations", violations as f64, "1", Check::Within { target: 0.0, abs_tol: 0.0 });

    let lf = l as f64;
    let closed_form = 1.0 - (lf * t.t_write_unit + t.t_read) / (lf * (t.t_write_unit + t.t_read));
    let s = speedup(&deep, &base)?;
    rep.check("finite_speedup", s, "1", Check::Within { target: closed_form, abs_tol: 1e-12 });
    rep.info("network_layers", lf, "1");
    rep.info("deepnet_total", deep.total(), "s");
    rep.info("baseline_total", base.total(), "s");
    rep.check("asymptotic_speedup", asymptotic_speedup(&t), "1", Check::Within { target: 0.29, abs_tol: 0.01 });
    rep.note(format!(
        "t_read = {} ns, t_write_unit = {} ns; the first write is never hidden, so finite pipelines approach the asymptote from below",
        t.t_read * 1e9,
        t.t_write_unit * 1e9
    ));

    rep.file("timeline", deep.to_csv());
    rep.file("baseline", base.to_csv());
    let mut sweep = CsvTable::new(&["layers", "deepnet_total_s", "baseline_total_s", "speedup"]);
    for k in 1..=SWEEP_MAX_LAYERS.max(l) {
        let (d, b) = (plan(Mode::DeepNet, k, &t)?, plan(Mode::Expansion, k, &t)?);
        sweep.push(vec![k.to_string(), num(d.total()), num(b.total()), num(speedup(&d, &b)?)]);
    }
    rep.file("sweep", sweep.render());
    Ok(rep)
}
