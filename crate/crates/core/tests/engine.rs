use crossstack::cell::TransistorParams;
use crossstack::device::{DeviceInstance, DeviceParams};
use crossstack::engine::{
    analog_targets, effective_bits, program, quantize, read_currents, readout, readout_disturbing, AdcModel, QuantScheme,
    WriteParams,
};
use crossstack::fabric::{Fabric, FabricGeometry};
use crossstack::{Error, Mode};
use proptest::prelude::*;

fn fabric(mode: Mode, n: usize, m: usize, re: Vec<bool>) -> Fabric<f64> {
    Fabric::uniform(FabricGeometry::new(mode, n, m, 3.2), DeviceParams::default(), TransistorParams::default(), 0.0, re)
        .unwrap()
}

/// Trapezoid-free numeric integral of `v^2 g(x(t))` over a constant-voltage pulse,
/// stepping the device model itself.
fn energy_by_stepping(p: DeviceParams<f64>, x0: f64, v: f64, t: f64, steps: usize) -> f64 {
    let dt = t / steps as f64;
    let mut d = DeviceInstance::nominal(p).with_state(x0);
    let mut e = 0.0;
    for _ in 0..steps {
        let half = d.apply_pulse(v, dt / 2.0);
        e += v * v * half.conductance() * dt;
        d = d.apply_pulse(v, dt);
    }
    e
}

#[test]
fn full_swing_programming_energy() {
    let p = DeviceParams::default();
    let mut fab = fabric(Mode::Planar, 1, 1, vec![false]);
    let rep = program(&mut fab, 0, &[vec![p.g_set()]], &WriteParams::from_device(&p)).unwrap();
    let oracle = energy_by_stepping(p, 0.0, p.v_write, p.t_write_full, 10_000);
    assert!((rep.total_energy - oracle).abs() <= 1e-6 * oracle, "{} vs {oracle}", rep.total_energy);
    assert!((oracle - 19.8e-12).abs() < 1e-15);
    assert_eq!(rep.pulses, 1);
    assert_eq!(rep.total_time, 250e-9);
}

#[test]
fn programming_reaches_targets() {
    let p = DeviceParams::default();
    let mut fab = fabric(Mode::DeepNet, 10, 10, vec![false, true]);
    let w: Vec<Vec<f64>> = (0..10).map(|i| (0..10).map(|j| ((i * 10 + j) % 11) as f64 / 10.0).collect()).collect();
    let targets = analog_targets(&w, &p).unwrap();
    let rep = program(&mut fab, 0, &targets, &WriteParams::from_device(&p)).unwrap();
    assert!(rep.max_rel_error <= 5e-3);
    assert_eq!(rep.rows_programmed, 10);
    assert!((rep.total_time - 2.5e-6).abs() < 1e-18);
    for (i, row) in fab.conductance_matrix(0).iter().enumerate() {
        for (j, g) in row.iter().enumerate() {
            assert!((g - targets[i][j]).abs() <= 5e-3 * targets[i][j]);
        }
    }
    // The read layer was untouched.
    assert!(fab.layer_cells(1).iter().all(|c| c.device.x == 0.0));
}

#[test]
fn programming_requires_write_bias() {
    let p = DeviceParams::default();
    let mut fab = fabric(Mode::DeepNet, 2, 2, vec![true, false]);
    let t = vec![vec![p.g_set(); 2]; 2];
    assert!(matches!(program(&mut fab, 0, &t, &WriteParams::from_device(&p)), Err(Error::ModeViolation(_))));
    assert!(program(&mut fab, 1, &t, &WriteParams::from_device(&p)).is_ok());
}

#[test]
fn already_programmed_cells_draw_no_energy() {
    let p = DeviceParams::default();
    let mut fab = fabric(Mode::Planar, 2, 2, vec![false]);
    let t = vec![vec![p.g_reset(); 2]; 2];
    let rep = program(&mut fab, 0, &t, &WriteParams::from_device(&p)).unwrap();
    assert_eq!(rep.pulses, 0);
    assert_eq!(rep.total_energy, 0.0);
}

#[test]
fn read_policy() {
    let adc = AdcModel::default();
    let fab = fabric(Mode::Expansion, 2, 2, vec![true, true]);
    assert!(matches!(readout(&fab, &[0.5; 4], &adc), Err(Error::ReadDisturb { .. })));
    assert!(matches!(readout(&fab, &[0.395; 4], &AdcModel { v_read_max: 0.5, ..adc }), Ok(_)));
    assert!(readout(&fab, &[0.395; 4], &adc).is_err());
    let r = readout(&fab, &[0.1; 4], &adc).unwrap();
    assert_eq!(r.codes.len(), 2);
    assert!(r.currents.iter().all(|&i| i > 0.0));

    let deep = fabric(Mode::DeepNet, 2, 2, vec![true, false]);
    assert!(matches!(read_currents(&deep, &[0.1; 4], &adc), Err(Error::ModeViolation(_))));
    assert!(read_currents(&deep, &[0.1; 2], &adc).is_ok());

    let none = fabric(Mode::Expansion, 2, 2, vec![false, false]);
    assert!(matches!(read_currents(&none, &[0.1; 4], &adc), Err(Error::ModeViolation(_))));
}

#[test]
fn over_threshold_read_disturbs_state() {
    let adc = AdcModel { allow_over_threshold: true, v_read_max: 1.2, ..AdcModel::default() };
    let mut fab = fabric(Mode::Planar, 1, 1, vec![true]);
    readout_disturbing(&mut fab, &[1.2], &adc, 100e-9).unwrap();
    assert!(fab.cell(0, 0, 0).device.x > 0.0);
    let mut quiet = fabric(Mode::Planar, 1, 1, vec![true]);
    readout_disturbing(&mut quiet, &[0.3], &adc, 100e-9).unwrap();
    assert_eq!(quiet.cell(0, 0, 0).device.x, 0.0);
}

#[test]
fn precision_from_deviation() {
    assert_eq!(effective_bits(0.08).unwrap(), 3.5);
    assert_eq!(effective_bits(0.01).unwrap(), 6.5);
    assert!(effective_bits(0.0).is_err());
}

fn scheme_strategy() -> impl Strategy<Value = QuantScheme<f64>> {
    (prop::sample::select(vec![1.0, 2.0, 3.0]), 1usize..4)
        .prop_map(|(b, c)| QuantScheme::for_device(b, c, &DeviceParams::default()).unwrap())
}

proptest! {
    #[test]
    fn quantize_round_trip(s in scheme_strategy(), w in prop::collection::vec(0.0f64..=1.0, 1..20)) {
        let q = quantize(&[w.clone()], &s).unwrap();
        let back = &q.reconstruct()[0];
        let lsb = s.lsb();
        for (a, b) in w.iter().zip(back) {
            let bound = if *a <= 1.0 - lsb / 2.0 { lsb / 2.0 } else { lsb };
            prop_assert!((a - b).abs() <= bound + 1e-12, "w {a} -> {b}, lsb {lsb}");
        }
        prop_assert_eq!(q.cell_cols(), w.len() * s.cells_per_weight);
        for (d, g) in q.digits[0].iter().zip(&q.conductances[0]) {
            prop_assert_eq!(*g, s.g_levels[*d]);
        }
    }
}

#[test]
fn sliced_example() {
    let s = QuantScheme::for_device(1.0, 3, &DeviceParams::default()).unwrap();
    let q = quantize(&[vec![0.625]], &s).unwrap();
    assert_eq!(q.digits[0], vec![1, 0, 1]);
    assert_eq!(q.reconstruct()[0][0], 0.625);
}
