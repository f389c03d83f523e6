//! Single-photon scattering off the emitter.
//!
//! In frequency space the emitter multiplies every mode by the unimodular
//! transmission factor `(1 - i chi)/(1 + i chi) = exp(-i h)` with
//! `h = 2 atan(chi)`. In time the same map is `xi - f * xi` with the causal
//! kernel `f`; both routes are provided so that each can check the other.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::emitter::EmitterModel;
use crate::error::{Error, Result};
use crate::grid::SampledField;
use crate::pulse::PulseSpec;

/// Largest time step accepted by `scatter_time`, in units of `1/rate`.
pub const MAX_STEP: f64 = 0.01;
/// Time kept after the pulse support so the re-emitted tail decays.
pub const TAIL_DURATION: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct ScatterResult {
    pub out: SampledField,
    /// `2 atan(chi)` on the grid, principal branch per node.
    pub phase_curve: Vec<f64>,
    /// `| |out|^2 - |in|^2 |`.
    pub norm_error: f64,
}

/// Encoding phase `2 atan(chi(omega))`; `pi` at a pole, 0 at infinity.
pub fn encoding_phase(model: &EmitterModel, omega: f64) -> f64 {
    if omega.is_infinite() {
        return 0.0;
    }
    match model.susceptibility(omega) {
        Ok(chi) => 2.0 * chi.atan(),
        Err(_) => std::f64::consts::PI,
    }
}

pub fn scatter_freq(model: &EmitterModel, input: &SampledField) -> ScatterResult {
    let factors: Vec<(C64, f64)> = input
        .freqs()
        .par_iter()
        .map(|&w| (model.transmission(w), encoding_phase(model, w)))
        .collect();
    let out = SampledField::new(
        input.freqs().to_vec(),
        input.amps().iter().zip(&factors).map(|(a, (t, _))| a * t).collect(),
        input.weights().to_vec(),
    )
    .expect("grid taken from a valid field");
    let norm_error = (out.norm_sqr() - input.norm_sqr()).abs();
    ScatterResult {
        out,
        phase_curve: factors.into_iter().map(|(_, h)| h).collect(),
        norm_error,
    }
}

/// Samples on the uniform grid `t0 + k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<C64>,
}

impl TimeSeries {
    pub fn sample(t0: f64, dt: f64, count: usize, f: impl Fn(f64) -> C64) -> Self {
        Self {
            t0,
            dt,
            samples: (0..count).map(|k| f(t0 + dt * k as f64)).collect(),
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + self.dt * k as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples.len()).map(|k| self.time(k)).collect()
    }

    /// Trapezoid rule for `int |xi|^2 dt`.
    pub fn norm_sqr(&self) -> f64 {
        let s = &self.samples;
        match s.len() {
            0 => 0.0,
            1 => 0.0,
            n => {
                let inner: f64 = s.iter().map(|z| z.norm_sqr()).sum();
                self.dt * (inner - 0.5 * (s[0].norm_sqr() + s[n - 1].norm_sqr()))
            }
        }
    }
}

/// Default time step: resolves both the decay and the fastest internal
/// oscillation.
pub fn time_step(model: &EmitterModel) -> f64 {
    let dt = MAX_STEP / model.gamma_rate();
    let eps = model.spectral().eigenvalues();
    let h_norm = eps[0].abs().max(eps[eps.len() - 1].abs());
    if h_norm > 0.0 {
        dt.min(0.1 / h_norm)
    } else {
        dt
    }
}

/// Samples a pulse on the default time grid: from the start of its temporal
/// support, where a jump is taken by its right limit, to the end of the
/// re-emission tail.
pub fn pulse_time_series(model: &EmitterModel, pulse: &PulseSpec) -> Result<TimeSeries> {
    let (lo, hi) = pulse
        .time_support()
        .ok_or_else(|| Error::InvalidPulse(format!("no compact temporal support for {pulse:?}")))?;
    let dt = time_step(model);
    let end = hi + TAIL_DURATION / model.gamma_rate();
    let count = ((end - lo) / dt).ceil() as usize + 1;
    let mut samples = Vec::with_capacity(count);
    samples.push(pulse.time_amplitude(lo + f64::MIN_POSITIVE.max(lo.abs() * f64::EPSILON))?);
    for k in 1..count {
        samples.push(pulse.time_amplitude(lo + dt * k as f64)?);
    }
    Ok(TimeSeries { t0: lo, dt, samples })
}

/// `xi_out(t) = xi(t) - int xi(t') f(t - t') dt'`, trapezoid rule on the
/// input grid, convolution by FFT.
pub fn scatter_time(model: &EmitterModel, input: &TimeSeries) -> Result<TimeSeries> {
    let max = MAX_STEP / model.gamma_rate();
    if input.dt.is_nan() || input.dt <= 0.0 || input.dt > max * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse { dt: input.dt, max });
    }
    let n = input.samples.len();
    if n == 0 {
        return Ok(input.clone());
    }
    let kernel = model.kernel_time_series(input.dt, n);
    let conv = causal_convolution(&input.samples, &kernel);
    let (x0, f0) = (input.samples[0], kernel[0]);
    let samples = (0..n)
        .map(|k| {
            let endpoints = 0.5 * (input.samples[k] * f0 + x0 * kernel[k]);
            input.samples[k] - (conv[k] - endpoints) * input.dt
        })
        .collect();
    Ok(TimeSeries {
        t0: input.t0,
        dt: input.dt,
        samples,
    })
}

/// `c[k] = sum_{m <= k} a[m] b[k - m]` for `k < a.len()`.
fn causal_convolution(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len();
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let pad = |v: &[C64]| {
        let mut p = vec![C64::new(0.0, 0.0); size];
        p[..n].copy_from_slice(&v[..n]);
        p
    };
    let (mut fa, mut fb) = (pad(a), pad(b));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa.truncate(n);
    fa.iter().map(|z| z * scale).collect()
}

/// `xi(t) = int xi~(w) exp(-i w t) dw / sqrt(2 pi)` by the field's quadrature.
pub fn inverse_fourier(field: &SampledField, times: &[f64]) -> Vec<C64> {
    let norm = (2.0 * std::f64::consts::PI).sqrt().recip();
    times
        .par_iter()
        .map(|&t| {
            field
                .freqs()
                .iter()
                .zip(field.amps().iter().zip(field.weights()))
                .map(|(&w, (a, q))| a * C64::from_polar(*q, -w * t))
                .sum::<C64>()
                * norm
        })
        .collect()
}
