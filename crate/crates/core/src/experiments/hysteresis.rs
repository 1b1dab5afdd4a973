use super::{Check, ExperimentReport};
use crate::config::RunConfig;
use crate::device::{hysteresis_loop_area, sinusoid, DeviceInstance};
use crate::error::Result;
use crate::io::{num, CsvTable};

const PERIODS: usize = 3;

/// Single-device I-V loop under a sinusoidal drive.
pub fn hysteresis_experiment(cfg: &RunConfig) -> Result<ExperimentReport> {
    let e = &cfg.experiments;
    let p = cfg.device;
    let spp = e.hysteresis_samples;
    let mut rep = ExperimentReport::new("hysteresis", cfg.seed);

    let dev = DeviceInstance::nominal(p);
    let wave = sinusoid(e.hysteresis_frequency_hz, e.hysteresis_amplitude_v, PERIODS, spp);
    let trace = dev.iv_trace(&wave)?;

    let pinch = trace.iter().filter(|(v, _)| *v == 0.0).map(|(_, i)| i.abs()).fold(0.0, f64::max);
    rep.check("max_abs_current_at_zero_volts", pinch, "A", Check::Below { limit: 1e-18 });

    let first = &trace[..=spp];
    let area = hysteresis_loop_area(first);
    if e.hysteresis_amplitude_v > p.v_th {
        rep.check("loop_area", area, "A*V", Check::Above { limit: 0.0 });
    } else {
        rep.info("loop_area", area, "A*V");
        rep.note("drive amplitude is below v_th, so no loop opening is expected");
    }

    let i_max = trace.iter().map(|(_, i)| i.abs()).fold(0.0, f64::max);
    let p2 = &trace[spp..=2 * spp];
    let p3 = &trace[2 * spp..=3 * spp];
    let cycle_diff = p2.iter().zip(p3).map(|(a, b)| (a.1 - b.1).abs()).fold(0.0, f64::max);
    rep.check(
        "period2_vs_period3_max_current_diff",
        cycle_diff,
        "A",
        Check::Below { limit: 1e-12 * i_max + 1e-30 },
    );

    let sub_amp = 0.75 * p.v_th;
    let sub = dev.iv_trace(&sinusoid(e.hysteresis_frequency_hz, sub_amp, 1, spp))?;
    rep.check("subthreshold_loop_area", hysteresis_loop_area(&sub), "A*V", Check::Below { limit: 1e-15 });
    rep.info("subthreshold_amplitude", sub_amp, "V");
    rep.info("drive_amplitude", e.hysteresis_amplitude_v, "V");
    rep.info("drive_frequency", e.hysteresis_frequency_hz, "Hz");

    let mut csv = CsvTable::new(&["period", "t_s", "v_V", "i_A"]);
    for (k, ((t, _), (v, i))) in wave.iter().zip(&trace).enumerate() {
        let period = (k / spp).min(PERIODS - 1);
        csv.push(vec![period.to_string(), num(*t), num(*v), num(*i)]);
    }
    rep.file("loop", csv.render());
    Ok(rep)
}
