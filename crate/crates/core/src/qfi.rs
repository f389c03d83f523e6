//! Quantum Fisher information of single-photon probes.
//!
//! Scattering imprints the phase `h(w) = 2 atan(chi(w))` on each frequency
//! mode, so for a pure probe the QFI is four times the variance of the
//! response `X = dh/dtheta` under the spectral intensity. Its supremum over
//! all pulses is `(max X - min X)^2`, attained by an equal-weight pair of
//! lines at the two extremizers.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emitter::{EmitterModel, ParameterTag};
use crate::error::{Error, Result};
use crate::grid::{build_grid, default_window, SampledField};
use crate::optimizer::{find_extrema_certified, ExtremaDiagnostics};
use crate::pulse::{PulseSpec, Regularization};
use crate::scattering::scatter_freq;

/// Default finite-difference step of the fidelity oracle, in units of the rate.
pub const FIDELITY_STEP: f64 = 1e-4;
/// Distance of the far branch standing in for a line at infinity, in units
/// of `max(rate, spectral spread)`.
pub const FAR_DETUNING: f64 = 1e3;
const RICHARDSON_REL: f64 = 1e-2;

/// `4 Var(X)` under the intensity `weights |amps|^2`.
pub fn qfi_pulse(model: &EmitterModel, field: &SampledField, theta: ParameterTag) -> Result<f64> {
    let theta = theta.validate(model.n())?;
    let p: Vec<f64> = field.intensity().collect();
    let total: f64 = p.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::ZeroField);
    }
    let x: Vec<f64> = field.freqs().par_iter().map(|&w| model.response(w, theta)).collect();
    let mean = p.iter().zip(&x).map(|(p, x)| p * x).sum::<f64>() / total;
    let var = p.iter().zip(&x).map(|(p, x)| p * (x - mean).powi(2)).sum::<f64>() / total;
    Ok(4.0 * var)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityQfi {
    /// `8 (1 - F) / step^2`.
    pub qfi: f64,
    /// Same estimate at half the step.
    pub half_step_qfi: f64,
    /// The two estimates differ by more than 1%.
    pub step_too_large: bool,
}

fn fidelity_estimate(
    model: &EmitterModel,
    out: &SampledField,
    field: &SampledField,
    theta: ParameterTag,
    step: f64,
) -> Result<f64> {
    let shifted = scatter_freq(&model.shifted(theta, step)?, field).out;
    let f = out.inner(&shifted)?.norm() / (out.norm_sqr() * shifted.norm_sqr()).sqrt();
    Ok(8.0 * (1.0 - f) / (step * step))
}

/// QFI from the overlap of output states at `theta` and `theta + step`.
pub fn qfi_fidelity_oracle(
    model: &EmitterModel,
    field: &SampledField,
    theta: ParameterTag,
    step: f64,
) -> Result<FidelityQfi> {
    let theta = theta.validate(model.n())?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "finite-difference step {step} must be positive"
        )));
    }
    let out = scatter_freq(model, field).out;
    let qfi = fidelity_estimate(model, &out, field, theta, step)?;
    let half_step_qfi = fidelity_estimate(model, &out, field, theta, 0.5 * step)?;
    let scale = qfi.abs().max(half_step_qfi.abs());
    Ok(FidelityQfi {
        qfi,
        half_step_qfi,
        step_too_large: (qfi - half_step_qfi).abs() > RICHARDSON_REL * scale && scale > 1e-12,
    })
}

/// Upper bound on the QFI over all single-photon pulses.
#[derive(Debug, Clone, Serialize)]
pub struct QfiBound {
    pub parameter: ParameterTag,
    /// `(mu_max - mu_min)^2`.
    pub bound: f64,
    pub mu_max: f64,
    pub mu_min: f64,
    pub omega_max: f64,
    /// `+inf` when the minimum is only approached far from resonance.
    pub omega_min: f64,
    pub diagnostics: ExtremaDiagnostics,
}

pub fn qfi_bound(model: &EmitterModel, theta: ParameterTag) -> Result<QfiBound> {
    let e = find_extrema_certified(model, theta)?;
    Ok(QfiBound {
        parameter: theta,
        bound: (e.mu_max - e.mu_min).powi(2),
        mu_max: e.mu_max,
        mu_min: e.mu_min,
        omega_max: e.omega_max,
        omega_min: e.omega_min,
        diagnostics: e.diagnostics,
    })
}

/// QFI of a given pulse alongside its bound.
#[derive(Debug, Clone, Serialize)]
pub struct QfiResult {
    pub value: f64,
    pub bound: f64,
    pub mu_max: f64,
    pub mu_min: f64,
    pub omega_max: f64,
    pub omega_min: f64,
    /// `value / bound`, or 0 for a vanishing bound.
    pub saturation: f64,
}

pub fn evaluate(model: &EmitterModel, field: &SampledField, theta: ParameterTag) -> Result<QfiResult> {
    let b = qfi_bound(model, theta)?;
    let value = qfi_pulse(model, field, theta)?;
    Ok(QfiResult {
        value,
        bound: b.bound,
        mu_max: b.mu_max,
        mu_min: b.mu_min,
        omega_max: b.omega_max,
        omega_min: b.omega_min,
        saturation: if b.bound > 0.0 { value / b.bound } else { 0.0 },
    })
}

/// Finite frequency standing in for a line at infinity.
pub fn far_frequency(model: &EmitterModel) -> f64 {
    let eps = model.spectral().eigenvalues();
    eps[eps.len() - 1] + FAR_DETUNING * model.gamma_rate().max(model.spectral_spread())
}

/// Line pair at the extremizers of an already located bound.
pub fn optimal_pulse_for(model: &EmitterModel, bound: &QfiBound, kappa: f64, reg: Regularization) -> Result<PulseSpec> {
    let finite_or_far = |w: f64| if w.is_finite() { w } else { far_frequency(model) };
    let p = PulseSpec::DeltaPair {
        omega_plus: finite_or_far(bound.omega_max),
        omega_minus: finite_or_far(bound.omega_min),
        kappa,
        reg,
        phase: 0.0,
    };
    p.validate()?;
    Ok(p)
}

pub fn optimal_pulse(model: &EmitterModel, theta: ParameterTag, kappa: f64, reg: Regularization) -> Result<PulseSpec> {
    optimal_pulse_for(model, &qfi_bound(model, theta)?, kappa, reg)
}

/// Samples `pulse` on its default adaptive grid and returns the QFI.
pub fn qfi_of_pulse(model: &EmitterModel, pulse: &PulseSpec, theta: ParameterTag, budget: usize) -> Result<f64> {
    pulse.validate()?;
    let field = build_grid(model, pulse, default_window(model, pulse), budget)?;
    qfi_pulse(model, &field, theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaRow {
    pub reg: Regularization,
    pub kappa_over_gamma: f64,
    /// `rate^2 * QFI`.
    pub qfi_gamma2: f64,
}

/// Optimal-pair QFI for every regularization and width; rows ordered by
/// regularization, then by the given widths (in units of the rate).
pub fn sweep_kappa(
    model: &EmitterModel,
    theta: ParameterTag,
    regs: &[Regularization],
    kappas_over_gamma: &[f64],
    budget: usize,
) -> Result<Vec<KappaRow>> {
    let bound = qfi_bound(model, theta)?;
    let g = model.gamma_rate();
    let cells: Vec<(Regularization, f64)> = regs
        .iter()
        .flat_map(|&r| kappas_over_gamma.iter().map(move |&k| (r, k)))
        .collect();
    cells
        .par_iter()
        .map(|&(reg, k)| {
            let pulse = optimal_pulse_for(model, &bound, k * g, reg)?;
            Ok(KappaRow {
                reg,
                kappa_over_gamma: k,
                qfi_gamma2: g * g * qfi_of_pulse(model, &pulse, theta, budget)?,
            })
        })
        .collect()
}

/// Resonant pulse shapes compared against the optimal pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseFamily {
    /// Gaussian intensity of standard deviation `b`.
    Gaussian,
    /// Flat temporal envelope of duration `2 pi / b`.
    Rectangular,
    /// Decaying exponential of amplitude rate `b`.
    DecayingExp,
    /// Rising exponential of amplitude rate `b`.
    RisingExp,
}

impl PulseFamily {
    pub const ALL: [PulseFamily; 4] = [
        PulseFamily::Gaussian,
        PulseFamily::Rectangular,
        PulseFamily::DecayingExp,
        PulseFamily::RisingExp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PulseFamily::Gaussian => "gaussian",
            PulseFamily::Rectangular => "rectangular",
            PulseFamily::DecayingExp => "decaying_exp",
            PulseFamily::RisingExp => "rising_exp",
        }
    }

    pub fn pulse(self, center: f64, bandwidth: f64) -> PulseSpec {
        match self {
            PulseFamily::Gaussian => PulseSpec::Gaussian { center, bandwidth },
            PulseFamily::Rectangular => PulseSpec::TemporalRect {
                center,
                duration: 2.0 * std::f64::consts::PI / bandwidth,
            },
            PulseFamily::DecayingExp => PulseSpec::DecayingExp {
                center,
                rate: bandwidth,
            },
            PulseFamily::RisingExp => PulseSpec::RisingExp {
                center,
                rate: bandwidth,
            },
        }
    }
}

impl fmt::Display for PulseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PulseFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" => Ok(PulseFamily::Gaussian),
            "rectangular" | "rect" => Ok(PulseFamily::Rectangular),
            "decaying_exp" | "decaying" => Ok(PulseFamily::DecayingExp),
            "rising_exp" | "rising" => Ok(PulseFamily::RisingExp),
            other => Err(Error::Format(format!("unknown pulse family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandwidthRow {
    pub family: PulseFamily,
    pub bandwidth_over_gamma: f64,
    pub qfi_gamma2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandwidthSweep {
    pub rows: Vec<BandwidthRow>,
    /// Largest row per family, in family order; earliest bandwidth on ties.
    pub maxima: Vec<BandwidthRow>,
}

/// QFI of each family centered at `center` over the given bandwidths (in
/// units of the rate).
pub fn bandwidth_sweep(
    model: &EmitterModel,
    theta: ParameterTag,
    families: &[PulseFamily],
    center: f64,
    bandwidths_over_gamma: &[f64],
    budget: usize,
) -> Result<BandwidthSweep> {
    let theta = theta.validate(model.n())?;
    let g = model.gamma_rate();
    let cells: Vec<(PulseFamily, f64)> = families
        .iter()
        .flat_map(|&f| bandwidths_over_gamma.iter().map(move |&b| (f, b)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(family, b)| {
            let pulse = family.pulse(center, b * g);
            Ok(BandwidthRow {
                family,
                bandwidth_over_gamma: b,
                qfi_gamma2: g * g * qfi_of_pulse(model, &pulse, theta, budget)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let maxima = families
        .iter()
        .filter_map(|&f| {
            rows.iter()
                .filter(|r| r.family == f)
                .fold(None, |best: Option<BandwidthRow>, r| match best {
                    Some(b) if b.qfi_gamma2 >= r.qfi_gamma2 => Some(b),
                    _ => Some(*r),
                })
        })
        .collect();
    Ok(BandwidthSweep { rows, maxima })
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
