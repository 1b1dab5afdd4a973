//! Single TiO2/TiO2-x memristor: static set/reset resistances with Gaussian
//! device-to-device variation, a threshold-gated linear drift state, and I-V trace
//! generation.
//!
//! The internal state `x` interpolates conductance linearly between the reset
//! (`x = 0`) and set (`x = 1`) levels. Above `v_th` the state drifts at a rate
//! proportional to the overdrive `|v| - v_th`, scaled so that a pulse of `v_write`
//! held for `t_write_full` switches a device completely.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceParams<T> {
    /// Set (low) resistance, ohms.
    pub r_set: T,
    /// Reset (high) resistance, ohms.
    pub r_reset: T,
    /// One relative standard deviation of the set resistance.
    pub sigma_set: T,
    /// One relative standard deviation of the reset resistance.
    pub sigma_reset: T,
    pub v_th: T,
    pub v_write: T,
    /// Time for a `v_write` pulse to move the state across its full range, seconds.
    pub t_write_full: T,
    /// Orientation of the active layer, +1 or -1. Stacked layers are mirrored.
    pub polarity: i8,
}

impl<T: Scalar> Default for DeviceParams<T> {
    fn default() -> Self {
        Self {
            r_set: T::lit(10e3),
            r_reset: T::lit(100e3),
            sigma_set: T::lit(0.07),
            sigma_reset: T::lit(0.10),
            v_th: T::lit(0.4),
            v_write: T::lit(1.2),
            t_write_full: T::lit(250e-9),
            polarity: 1,
        }
    }
}

impl<T: Scalar> DeviceParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_set > T::zero() && self.r_reset > self.r_set) {
            return Err(invalid(format!(
                "device resistances violate r_reset > r_set > 0 (r_set = {}, r_reset = {})",
                self.r_set, self.r_reset
            )));
        }
        let half = T::lit(0.5);
        for (name, s) in [("sigma_set", self.sigma_set), ("sigma_reset", self.sigma_reset)] {
            if !(s >= T::zero() && s < half) {
                return Err(invalid(format!("{name} = {s} violates 0 <= sigma < 0.5")));
            }
        }
        if !(self.v_th > T::zero() && self.v_write > self.v_th) {
            return Err(invalid(format!(
                "device voltages violate v_write > v_th > 0 (v_th = {}, v_write = {})",
                self.v_th, self.v_write
            )));
        }
        if !(self.t_write_full > T::zero()) {
            return Err(invalid("t_write_full must be positive"));
        }
        if self.polarity != 1 && self.polarity != -1 {
            return Err(invalid(format!("polarity must be +1 or -1, got {}", self.polarity)));
        }
        Ok(())
    }

    /// Same device with the active layer flipped.
    pub fn mirrored(&self) -> Self {
        Self { polarity: -self.polarity, ..*self }
    }

    pub fn g_set(&self) -> T {
        self.r_set.recip()
    }

    pub fn g_reset(&self) -> T {
        self.r_reset.recip()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviceInstance<T> {
    pub sampled_r_set: T,
    pub sampled_r_reset: T,
    /// Internal state in [0, 1]; 1 is fully set.
    pub x: T,
    pub params: DeviceParams<T>,
}

impl<T: Scalar> DeviceInstance<T> {
    /// A device sitting exactly at the nominal resistances, fully reset.
    pub fn nominal(params: DeviceParams<T>) -> Self {
        Self { sampled_r_set: params.r_set, sampled_r_reset: params.r_reset, x: T::zero(), params }
    }

    pub fn with_state(mut self, x: T) -> Self {
        self.x = clamp_unit(x);
        self
    }

    pub fn g_min(&self) -> T {
        self.sampled_r_reset.recip()
    }

    pub fn g_max(&self) -> T {
        self.sampled_r_set.recip()
    }

    /// Conductance at the current state, linear in `x` between reset and set.
    pub fn conductance(&self) -> T {
        self.conductance_at(self.x)
    }

    pub fn conductance_at(&self, x: T) -> T {
        x * self.g_max() + (T::one() - x) * self.g_min()
    }

    /// State that realises conductance `g`, clamped to the reachable range.
    pub fn state_for_conductance(&self, g: T) -> T {
        clamp_unit((g - self.g_min()) / (self.g_max() - self.g_min()))
    }

    /// Signed state velocity under a constant bias `v`, in 1/s.
    pub fn drift_rate(&self, v: T) -> T {
        let p = &self.params;
        let overdrive = v.abs() - p.v_th;
        if overdrive <= T::zero() {
            return T::zero();
        }
        let rate = overdrive / ((p.v_write - p.v_th) * p.t_write_full);
        if T::from_i8(p.polarity).unwrap() * v > T::zero() {
            rate
        } else {
            -rate
        }
    }

    /// Holds bias `v` across the device for `dt` seconds.
    pub fn apply_pulse(&self, v: T, dt: T) -> Self {
        let p = &self.params;
        let overdrive = v.abs() - p.v_th;
        if overdrive <= T::zero() || dt <= T::zero() {
            return *self;
        }
        // Product form keeps a full v_write pulse of t_write_full at exactly one unit of state.
        let dx = (overdrive * dt) / ((p.v_write - p.v_th) * p.t_write_full);
        let towards_set = T::from_i8(p.polarity).unwrap() * v > T::zero();
        let x = if towards_set { self.x + dx } else { self.x - dx };
        Self { x: clamp_unit(x), ..*self }
    }

    /// Drives the device with a sampled waveform and reports `(v, i)` at each sample.
    ///
    /// The state is advanced across each interval using the interval's mean voltage,
    /// then the current is read with the sample voltage, so `v = 0` yields `i = 0`
    /// exactly.
    pub fn iv_trace(&self, waveform: &[(T, T)]) -> Result<Vec<(T, T)>> {
        for w in waveform.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(invalid(format!(
                    "waveform times must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        let mut dev = *self;
        let mut out = Vec::with_capacity(waveform.len());
        let two = T::lit(2.0);
        for (k, &(t, v)) in waveform.iter().enumerate() {
            if k > 0 {
                let (t0, v0) = waveform[k - 1];
                dev = dev.apply_pulse((v0 + v) / two, t - t0);
            }
            out.push((v, v * dev.conductance()));
        }
        Ok(out)
    }
}

/// Draws `count` devices with Gaussian resistances truncated to +/-50 % of nominal.
///
/// Each instance draws its set resistance and then its reset resistance from a single
/// seeded stream, so a given `(params, count, seed)` always yields the same sequence.
pub fn sample_devices<T: Scalar>(
    params: &DeviceParams<T>,
    count: usize,
    seed: u64,
) -> Result<Vec<DeviceInstance<T>>> {
    if count == 0 {
        return Err(invalid("sample_devices requires count >= 1"));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = TruncatedNormal::new(params.r_set.as_f64(), params.sigma_set.as_f64())?;
    let reset = TruncatedNormal::new(params.r_reset.as_f64(), params.sigma_reset.as_f64())?;
    Ok((0..count)
        .map(|_| {
            let r_s = set.sample(&mut rng);
            let r_r = reset.sample(&mut rng);
            DeviceInstance {
                sampled_r_set: T::lit(r_s),
                sampled_r_reset: T::lit(r_r),
                x: T::zero(),
                params: *params,
            }
        })
        .collect())
}

struct TruncatedNormal {
    nominal: f64,
    normal: Option<Normal<f64>>,
}

impl TruncatedNormal {
    fn new(nominal: f64, rel_sigma: f64) -> Result<Self> {
        let normal = if rel_sigma > 0.0 {
            Some(Normal::new(nominal, rel_sigma * nominal).map_err(|e| invalid(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { nominal, normal })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let Some(normal) = &self.normal else {
            return self.nominal;
        };
        let (lo, hi) = (0.5 * self.nominal, 1.5 * self.nominal);
        loop {
            let r = normal.sample(rng);
            if (lo..=hi).contains(&r) {
                return r;
            }
        }
    }
}

fn clamp_unit<T: Scalar>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

/// Samples `periods` cycles of `amplitude * sin(2 pi f t)` starting at `t = 0`.
///
/// Zero crossings are emitted as exact zeros so pinching at the origin can be checked
/// without rounding noise.
pub fn sinusoid<T: Scalar>(
    frequency: T,
    amplitude: T,
    periods: usize,
    samples_per_period: usize,
) -> Vec<(T, T)> {
    let spp = samples_per_period.max(2);
    let period = frequency.recip();
    let dt = period / T::from_usize(spp).unwrap();
    let tau = T::lit(std::f64::consts::TAU);
    (0..=periods * spp)
        .map(|k| {
            let t = dt * T::from_usize(k).unwrap();
            let v = if (2 * k) % spp == 0 {
                T::zero()
            } else {
                amplitude * (tau * T::from_usize(k % spp).unwrap() / T::from_usize(spp).unwrap()).sin()
            };
            (t, v)
        })
        .collect()
}

/// Total enclosed area of an I-V trace, in A*V.
///
/// The trace is split into lobes at every sign change of the voltage and the absolute
/// shoelace area of each lobe is summed; the lobes of a pinched loop circulate in
/// opposite senses and would cancel in a single signed sum.
pub fn hysteresis_loop_area<T: Scalar>(trace: &[(T, T)]) -> T {
    let mut total = T::zero();
    let mut lobe: Vec<(T, T)> = Vec::new();
    let close = |lobe: &[(T, T)]| -> T {
        if lobe.len() < 3 {
            return T::zero();
        }
        let mut s = T::zero();
        for k in 0..lobe.len() {
            let (v0, i0) = lobe[k];
            let (v1, i1) = lobe[(k + 1) % lobe.len()];
            s = s + (v0 * i1 - v1 * i0);
        }
        (s / T::lit(2.0)).abs()
    };
    for &p in trace {
        let crossed = lobe
            .last()
            .is_some_and(|&(v_prev, _)| p.0 == T::zero() || (v_prev * p.0) < T::zero());
        lobe.push(p);
        if crossed {
            total = total + close(&lobe);
            lobe = vec![p];
        }
    }
    total + close(&lobe)
}
