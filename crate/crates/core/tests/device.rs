use crossstack::device::{hysteresis_loop_area, sample_devices, sinusoid, DeviceInstance, DeviceParams};
use proptest::prelude::*;

proptest! {
    #[test]
    fn subthreshold_pulses_retain_state(x in 0.0f64..=1.0, frac in -1.0f64..=1.0, dt in 1e-12f64..1.0, pol in prop::bool::ANY) {
        let mut p = DeviceParams::default();
        if pol {
            p = p.mirrored();
        }
        let d = DeviceInstance::nominal(p).with_state(x);
        let next = d.apply_pulse(frac * p.v_th, dt);
        prop_assert_eq!(next.x, x);
    }

    #[test]
    fn state_stays_in_unit_interval(x in 0.0f64..=1.0, v in -3.0f64..3.0, dt in 0.0f64..1e-6) {
        let d = DeviceInstance::nominal(DeviceParams::default()).with_state(x);
        let y = d.apply_pulse(v, dt).x;
        prop_assert!((0.0..=1.0).contains(&y));
        let g = d.apply_pulse(v, dt).conductance();
        prop_assert!(g >= 1e-5 * (1.0 - 1e-12) && g <= 1e-4 * (1.0 + 1e-12));
    }

    #[test]
    fn conductance_inverse_round_trips(x in 0.0f64..=1.0, seed in any::<u64>()) {
        let d = sample_devices(&DeviceParams::default(), 1, seed).unwrap()[0].with_state(x);
        let back = d.state_for_conductance(d.conductance());
        prop_assert!((back - x).abs() < 1e-9);
    }

    #[test]
    fn loops_are_pinched(amp in 0.05f64..1.8, freq in 1.0f64..1e4, spp in 8usize..400) {
        let d = DeviceInstance::nominal(DeviceParams::default());
        let trace = d.iv_trace(&sinusoid(freq, amp, 2, spp)).unwrap();
        for (v, i) in &trace {
            if *v == 0.0 {
                prop_assert!(i.abs() < 1e-18);
            }
        }
        if amp < 0.4 {
            prop_assert!(hysteresis_loop_area(&trace) < 1e-15);
        }
    }
}

#[test]
fn write_pulse_scales_linearly_with_overdrive() {
    let p: DeviceParams<f64> = DeviceParams::default();
    let d = DeviceInstance::nominal(p);
    // Half the overdrive of a full write moves the state half as far.
    let v_half = p.v_th + 0.5 * (p.v_write - p.v_th);
    let x = d.apply_pulse(v_half, p.t_write_full).x;
    assert!((x - 0.5).abs() < 1e-12, "{x}");
}

#[test]
fn sampling_depends_on_seed() {
    let p: DeviceParams<f64> = DeviceParams::default();
    let a = sample_devices(&p, 50, 1).unwrap();
    let b = sample_devices(&p, 50, 2).unwrap();
    assert_ne!(a, b);
    let std = |v: Vec<f64>| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    let big = sample_devices(&p, 4000, 3).unwrap();
    let s_set = std(big.iter().map(|d| d.sampled_r_set).collect());
    let s_reset = std(big.iter().map(|d| d.sampled_r_reset).collect());
    assert!((s_set / 700.0 - 1.0).abs() < 0.06, "{s_set}");
    assert!((s_reset / 10e3 - 1.0).abs() < 0.06, "{s_reset}");
}
