use crossstack::config::parse_config_str;
use crossstack::experiments::{
    cell_read, hysteresis_experiment, ir_drop_experiment, leakage_mc, pipeline_speedup, power_worst_case, run_all,
    static_power, transient_read, Check, ExperimentReport,
};
use crossstack::config::RunConfig;
use crossstack::device::{DeviceInstance, DeviceParams};

fn csv(rep: &ExperimentReport, tag: &str) -> Vec<Vec<f64>> {
    let f = rep.files.iter().find(|f| f.tag == tag).unwrap_or_else(|| panic!("{} has no {tag} csv", rep.name));
    // Label columns read as NaN so every table indexes the same way.
    f.contents.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect()).collect()
}

fn check_of(rep: &ExperimentReport, name: &str) -> (f64, Check, bool) {
    let m = rep.measurement(name).unwrap_or_else(|| panic!("{} lacks {name}", rep.name));
    (m.value, m.check, m.pass.unwrap_or(true))
}

/// Recomputes `name` from the CSV value `v` and confirms both the value and its pass flag.
fn confirm(rep: &ExperimentReport, name: &str, v: f64) {
    let (value, check, pass) = check_of(rep, name);
    assert!((value - v).abs() <= 1e-9 * v.abs().max(1e-30), "{name}: report {value}, csv {v}");
    assert_eq!(check.holds(v).unwrap_or(true), pass, "{name}");
}

#[test]
fn leakage_pass_flags_follow_csv() {
    let cfg = RunConfig::default();
    let rep = leakage_mc(&cfg).unwrap();
    let cells = csv(&rep, "cells");
    assert_eq!(cells.len(), 200);
    let mean = cells.iter().map(|r| r[2]).sum::<f64>() / cells.len() as f64;
    confirm(&rep, "per_cell_leakage_mean", mean);
    let cols: Vec<f64> = cells.chunks(10).map(|c| c.iter().map(|r| r[2]).sum()).collect();
    confirm(&rep, "column_leakage_mean", cols.iter().sum::<f64>() / cols.len() as f64);
    let sweep = csv(&rep, "sweep");
    assert_eq!(sweep.len(), 200 * 37);
    // Leakage grows with the applied voltage for every trial.
    for trial in sweep.chunks(37) {
        assert!(trial.windows(2).all(|w| w[1][2] >= w[0][2]));
        assert_eq!(trial[0][2], 0.0);
    }
}

#[test]
fn transient_pass_flags_follow_csv() {
    let rep = transient_read(&RunConfig::default()).unwrap();
    let rows = csv(&rep, "samples");
    let mut worst = vec![0.0f64; 200];
    for r in &rows {
        if r[4] != 0.0 {
            let d = ((r[3] - r[4]) / r[4]).abs();
            worst[r[0] as usize] = worst[r[0] as usize].max(d);
        }
    }
    confirm(&rep, "worst_case_deviation", worst.iter().sum::<f64>() / 200.0);
    confirm(&rep, "population_max_deviation", worst.iter().copied().fold(0.0, f64::max));
}

#[test]
fn ir_drop_pass_flag_follows_csv() {
    let rep = ir_drop_experiment(&RunConfig::default()).unwrap();
    let rows = csv(&rep, "columns");
    assert_eq!(rows.len(), 10);
    let worst = |k: usize| rows.iter().map(|r| 1.0 - r[k] / r[k + 1]).fold(f64::MIN, f64::max);
    confirm(&rep, "worst_loss_reduction", 1.0 - worst(1) / worst(4));
    // Row drops accumulate away from the drivers and column drops away from the outputs.
    assert!(rows.windows(2).all(|w| w[1][3] >= w[0][3] - 1e-12));
}

#[test]
fn power_cases_follow_csv() {
    let rep = power_worst_case(&RunConfig::default()).unwrap();
    let rows = csv(&rep, "cases");
    let recompute = |r: &Vec<f64>| r[1] * r[2] * r[2] / r[3];
    confirm(&rep, "all_reset_power", recompute(&rows[0]));
    confirm(&rep, "all_set_power", recompute(&rows[1]));
    assert!((rows[0][4] - 2.88e-3).abs() < 1e-15);
    assert!((rows[1][4] - 28.8e-3).abs() < 1e-14);
    assert!(rep.notes.iter().any(|n| n.contains("all-set")));
}

#[test]
fn static_power_edge_cases() {
    let d = DeviceInstance::nominal(DeviceParams::default());
    assert_eq!(static_power(&[d; 3], &[0.0; 3]).unwrap(), 0.0);
    assert!(static_power(&[d; 3], &[0.0; 2]).is_err());
}

#[test]
fn pipeline_sweep_follows_csv() {
    let rep = pipeline_speedup(&RunConfig::default()).unwrap();
    let sweep = csv(&rep, "sweep");
    let ten = sweep.iter().find(|r| r[0] == 10.0).unwrap();
    confirm(&rep, "finite_speedup", 1.0 - ten[1] / ten[2]);
    assert!(sweep.windows(2).all(|w| w[1][3] > w[0][3]));
    let timeline = csv(&rep, "timeline");
    let end = timeline.iter().map(|r| r[1]).fold(0.0, f64::max);
    assert!((end - 260.0).abs() < 1e-9);
}

#[test]
fn hysteresis_follows_csv() {
    let rep = hysteresis_experiment(&RunConfig::default()).unwrap();
    let rows = csv(&rep, "loop");
    let pinch = rows.iter().filter(|r| r[2] == 0.0).map(|r| r[3].abs()).fold(0.0, f64::max);
    confirm(&rep, "max_abs_current_at_zero_volts", pinch);
    assert!(rep.pass);
}

#[test]
fn sub_threshold_drive_has_no_loop() {
    let cfg = parse_config_str("[experiments]\nhysteresis_amplitude_v = 0.3\n", &[]).unwrap();
    let rep = hysteresis_experiment(&cfg).unwrap();
    let (area, check, _) = check_of(&rep, "loop_area");
    assert_eq!(check, Check::Info);
    assert!(area < 1e-15);
}

#[test]
fn zero_variation_population() {
    let cfg = parse_config_str("[device]\nsigma_set = 0.0\nsigma_reset = 0.0\n", &[]).unwrap();
    let leak = leakage_mc(&cfg).unwrap();
    let cells = csv(&leak, "cells");
    assert!(cells.iter().all(|r| r[2] == cells[0][2]));
    assert!(check_of(&leak, "per_cell_leakage_std").0 < 1e-24);

    let tr = transient_read(&cfg).unwrap();
    let dev = check_of(&tr, "worst_case_deviation").0;
    // Only the on-switch resistance and wires separate the cell from its ideal current.
    let r_on = cfg.transistor.r_on;
    assert!((dev - r_on / (1e5 + r_on)).abs() < 2e-4, "{dev}");
    assert_eq!(check_of(&tr, "population_max_deviation").0, dev);
}

#[test]
fn single_trial_deviation_is_its_own_offset() {
    let mut cfg = RunConfig::default();
    cfg.experiments.mc_trials = 1;
    let rep = transient_read(&cfg).unwrap();
    let rows = csv(&rep, "samples");
    let own = rows.iter().filter(|r| r[4] != 0.0).map(|r| r[5]).fold(0.0, f64::max);
    confirm(&rep, "worst_case_deviation", own);
    confirm(&rep, "population_max_deviation", own);
}

#[test]
fn empty_transient_sequence_rejected() {
    assert!(parse_config_str("[experiments]\ntransient_sequence_v = []\n", &[]).is_err());
    let mut cfg = RunConfig::default();
    cfg.experiments.transient_sequence_v.clear();
    assert!(transient_read(&cfg).is_err());
}

#[test]
fn reports_are_deterministic() {
    let cfg = RunConfig::default();
    let a = run_all(&cfg).unwrap();
    let b = run_all(&cfg).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(serde_json::to_string(x).unwrap(), serde_json::to_string(y).unwrap());
        assert_eq!(x.files, y.files);
    }
    let names: Vec<&str> = a.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, crossstack::experiments::EXPERIMENTS);
    let other = leakage_mc(&parse_config_str("seed = 8\n", &[]).unwrap()).unwrap();
    assert_ne!(other.files, a[2].files);
}

#[test]
fn cell_read_codes_are_linear_to_first_order() {
    let rep = cell_read(&RunConfig::default()).unwrap();
    let rows = csv(&rep, "codes");
    assert_eq!(rows[0][2], 0.0);
    for r in &rows[1..] {
        assert!(((r[2] - r[3]) / r[3] + 0.0099).abs() < 2e-4);
    }
}
