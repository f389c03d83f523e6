//! Single-photon spectral amplitudes.
//!
//! Conventions: `xi(w) = (2 pi)^-1/2 int xi(t) e^{i w t} dt`, frequencies
//! relative to the carrier. Every parametric shape has unit norm
//! `int |xi(w)|^2 dw = 1`; a delta pair is unit-norm only when its branches
//! do not overlap, otherwise the sampled field is renormalized.

use std::f64::consts::PI;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the sampling window of shapes with `1/x^2` intensity
/// tails, in units of their scale; the truncated weight is below 1e-8.
const LORENTZ_TAIL: f64 = 1e8;

/// Nascent delta function used to regularize an ideal frequency line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularization {
    /// `kappa / (pi (kappa^2 + x^2))`
    Lorentzian,
    /// `exp(-x^2 / 2 kappa^2) / (kappa sqrt(2 pi))`
    Gaussian,
    /// `1 / kappa` on the one-sided support `[0, kappa]`
    Rectangular,
}

impl Regularization {
    pub const ALL: [Regularization; 3] = [
        Regularization::Lorentzian,
        Regularization::Gaussian,
        Regularization::Rectangular,
    ];

    pub fn density(self, kappa: f64, x: f64) -> f64 {
        match self {
            Regularization::Lorentzian => kappa / (PI * (kappa * kappa + x * x)),
            Regularization::Gaussian => (-0.5 * (x / kappa).powi(2)).exp() / (kappa * (2.0 * PI).sqrt()),
            Regularization::Rectangular => {
                if (0.0..=kappa).contains(&x) {
                    1.0 / kappa
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regularization::Lorentzian => "lorentzian",
            Regularization::Gaussian => "gaussian",
            Regularization::Rectangular => "rectangular",
        }
    }
}

impl fmt::Display for Regularization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regularization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lorentzian" => Ok(Regularization::Lorentzian),
            "gaussian" => Ok(Regularization::Gaussian),
            "rectangular" | "rect" => Ok(Regularization::Rectangular),
            other => Err(Error::Format(format!("unknown regularization `{other}`"))),
        }
    }
}

/// Spectral shape of a single-photon pulse. All frequencies and widths are
/// angular frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PulseSpec {
    /// Two regularized lines of weight 1/2 each; `phase` multiplies the
    /// `omega_minus` branch.
    DeltaPair {
        omega_plus: f64,
        omega_minus: f64,
        kappa: f64,
        reg: Regularization,
        #[serde(default)]
        phase: f64,
    },
    /// Gaussian intensity with standard deviation `bandwidth`.
    Gaussian { center: f64, bandwidth: f64 },
    /// Flat spectrum of total width `width`.
    Rectangular { center: f64, width: f64 },
    /// Flat temporal envelope of length `duration` (sinc spectrum).
    TemporalRect { center: f64, duration: f64 },
    /// `e^{-rate t}` amplitude for `t > 0`: Lorentzian intensity of
    /// half-width `rate`.
    DecayingExp { center: f64, rate: f64 },
    /// Time reverse of `DecayingExp`.
    RisingExp { center: f64, rate: f64 },
    /// Linear interpolation of sampled amplitudes; zero outside the table.
    Tabulated {
        freqs: Vec<f64>,
        re: Vec<f64>,
        im: Vec<f64>,
    },
}

/// Where a pulse needs resolution, for grid construction.
#[derive(Debug, Clone, Default)]
pub struct PulseFeatures {
    /// `(center, scale)` pairs around which nodes cluster.
    pub peaks: Vec<(f64, f64)>,
    /// Amplitude discontinuities.
    pub jumps: Vec<f64>,
    /// Nodes that must appear in the grid.
    pub nodes: Vec<f64>,
    /// `(center, period, extent)`: oscillating spectrum to be resolved.
    pub ripple: Option<(f64, f64, f64)>,
    /// Interval carrying the pulse to the advertised normalization accuracy.
    pub window: (f64, f64),
    /// Interval any sampling window must contain.
    pub required: (f64, f64),
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidPulse(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPulse(format!("{name} must be finite, got {v}")))
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Gaussian spectral amplitude of intensity width `sigma`, centred at zero.
fn gaussian_amp(sigma: f64, x: f64) -> f64 {
    (2.0 * PI * sigma * sigma).powf(-0.25) * (-x * x / (4.0 * sigma * sigma)).exp()
}

/// Time-domain form of `gaussian_amp`, centred at zero frequency.
fn gaussian_time(sigma: f64, t: f64) -> f64 {
    (2.0 * sigma * sigma / PI).powf(0.25) * (-sigma * sigma * t * t).exp()
}

/// Heaviside step with the midpoint value at the jump.
fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x == 0.0 {
        0.5
    } else {
        0.0
    }
}

impl PulseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PulseSpec::DeltaPair {
                omega_plus,
                omega_minus,
                kappa,
                phase,
                ..
            } => {
                finite("omega_plus", omega_plus)?;
                finite("omega_minus", omega_minus)?;
                finite("phase", phase)?;
                positive("kappa", kappa)
            }
            PulseSpec::Gaussian { center, bandwidth } => {
                finite("center", center)?;
                positive("bandwidth", bandwidth)
            }
            PulseSpec::Rectangular { center, width } => {
                finite("center", center)?;
                positive("width", width)
            }
            PulseSpec::TemporalRect { center, duration } => {
                finite("center", center)?;
                positive("duration", duration)
            }
            PulseSpec::DecayingExp { center, rate } | PulseSpec::RisingExp { center, rate } => {
                finite("center", center)?;
                positive("rate", rate)
            }
            PulseSpec::Tabulated {
                ref freqs,
                ref re,
                ref im,
            } => {
                if freqs.len() < 2 || re.len() != freqs.len() || im.len() != freqs.len() {
                    return Err(Error::InvalidPulse(format!(
                        "tabulated pulse needs >= 2 rows of equal length (got {}, {}, {})",
                        freqs.len(),
                        re.len(),
                        im.len()
                    )));
                }
                if freqs.iter().chain(re).chain(im).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidPulse("tabulated pulse has non-finite values".into()));
                }
                if freqs.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidPulse(
                        "tabulated frequencies must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Spectral amplitude at `omega`.
    pub fn amplitude(&self, omega: f64) -> C64 {
        match *self {
            PulseSpec::DeltaPair {
                omega_plus,
                omega_minus,
                kappa,
                reg,
                phase,
            } => {
                let plus = (0.5 * reg.density(kappa, omega - omega_plus)).sqrt();
                let minus = (0.5 * reg.density(kappa, omega - omega_minus)).sqrt();
                C64::new(plus, 0.0) + C64::from_polar(minus, phase)
            }
            PulseSpec::Gaussian { center, bandwidth } => C64::new(gaussian_amp(bandwidth, omega - center), 0.0),
            PulseSpec::Rectangular { center, width } => {
                if (omega - center).abs() <= 0.5 * width {
                    C64::new(width.sqrt().recip(), 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            PulseSpec::TemporalRect { center, duration } => {
                let x = omega - center;
                C64::new((duration / (2.0 * PI)).sqrt() * sinc(0.5 * x * duration), 0.0)
            }
            PulseSpec::DecayingExp { center, rate } => {
                C64::new((rate / PI).sqrt(), 0.0) / C64::new(rate, -(omega - center))
            }
            PulseSpec::RisingExp { center, rate } => C64::new((rate / PI).sqrt(), 0.0) / C64::new(rate, omega - center),
            PulseSpec::Tabulated {
                ref freqs,
                ref re,
                ref im,
            } => interpolate(freqs, re, im, omega),
        }
    }

    /// Characteristic spectral width.
    pub fn scale(&self) -> f64 {
        match *self {
            PulseSpec::DeltaPair { kappa, .. } => kappa,
            PulseSpec::Gaussian { bandwidth, .. } => bandwidth,
            PulseSpec::Rectangular { width, .. } => width,
            PulseSpec::TemporalRect { duration, .. } => 2.0 * PI / duration,
            PulseSpec::DecayingExp { rate, .. } | PulseSpec::RisingExp { rate, .. } => rate,
            PulseSpec::Tabulated { ref freqs, .. } => {
                freqs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn features(&self) -> PulseFeatures {
        let mut f = PulseFeatures::default();
        match *self {
            PulseSpec::DeltaPair {
                omega_plus,
                omega_minus,
                kappa,
                reg,
                ..
            } => {
                let mut win = (f64::INFINITY, f64::NEG_INFINITY);
                let mut req = win;
                for line in [omega_plus, omega_minus] {
                    let (w, r) = match reg {
                        Regularization::Lorentzian => {
                            f.peaks.push((line, kappa));
                            f.nodes.push(line);
                            (
                                (line - LORENTZ_TAIL * kappa, line + LORENTZ_TAIL * kappa),
                                (line - 10.0 * kappa, line + 10.0 * kappa),
                            )
                        }
                        Regularization::Gaussian => {
                            f.peaks.push((line, kappa));
                            f.nodes.push(line);
                            (
                                (line - 12.0 * kappa, line + 12.0 * kappa),
                                (line - 10.0 * kappa, line + 10.0 * kappa),
                            )
                        }
                        Regularization::Rectangular => {
                            f.peaks.push((line + 0.5 * kappa, kappa));
                            f.jumps.extend([line, line + kappa]);
                            ((line - kappa, line + 2.0 * kappa), (line, line + kappa))
                        }
                    };
                    win = (win.0.min(w.0), win.1.max(w.1));
                    req = (req.0.min(r.0), req.1.max(r.1));
                }
                f.window = win;
                f.required = req;
            }
            PulseSpec::Gaussian { center, bandwidth } => {
                f.peaks.push((center, bandwidth));
                f.nodes.push(center);
                f.window = (center - 12.0 * bandwidth, center + 12.0 * bandwidth);
                f.required = (center - 10.0 * bandwidth, center + 10.0 * bandwidth);
            }
            PulseSpec::Rectangular { center, width } => {
                f.peaks.push((center, width));
                f.jumps.extend([center - 0.5 * width, center + 0.5 * width]);
                f.window = (center - width, center + width);
                f.required = (center - 0.5 * width, center + 0.5 * width);
            }
            PulseSpec::TemporalRect { center, .. } => {
                let b = self.scale();
                f.peaks.push((center, b));
                f.nodes.push(center);
                f.ripple = Some((center, b, 200.0 * b));
                f.window = (center - LORENTZ_TAIL * b, center + LORENTZ_TAIL * b);
                f.required = (center - 10.0 * b, center + 10.0 * b);
            }
            PulseSpec::DecayingExp { center, rate } | PulseSpec::RisingExp { center, rate } => {
                f.peaks.push((center, rate));
                f.nodes.push(center);
                f.window = (center - LORENTZ_TAIL * rate, center + LORENTZ_TAIL * rate);
                f.required = (center - 10.0 * rate, center + 10.0 * rate);
            }
            PulseSpec::Tabulated { ref freqs, .. } => {
                let (lo, hi) = (freqs[0], freqs[freqs.len() - 1]);
                f.nodes.extend(freqs.iter().copied());
                f.jumps.extend([lo, hi]);
                f.window = (lo, hi);
                f.required = (lo, hi);
            }
        }
        f
    }

    /// Time-domain amplitude `xi(t)`, for shapes with a closed form.
    pub fn time_amplitude(&self, t: f64) -> Result<C64> {
        let carrier = |c: f64| C64::from_polar(1.0, -c * t);
        Ok(match *self {
            PulseSpec::Gaussian { center, bandwidth } => carrier(center) * gaussian_time(bandwidth, t),
            PulseSpec::Rectangular { center, width } => {
                carrier(center) * (width / (2.0 * PI)).sqrt() * sinc(0.5 * width * t)
            }
            PulseSpec::TemporalRect { center, duration } => {
                carrier(center) * step(0.5 * duration - t.abs()) / duration.sqrt()
            }
            PulseSpec::DecayingExp { center, rate } => {
                carrier(center) * (2.0 * rate).sqrt() * (-rate * t.abs()).exp() * step(t)
            }
            PulseSpec::RisingExp { center, rate } => {
                carrier(center) * (2.0 * rate).sqrt() * (-rate * t.abs()).exp() * step(-t)
            }
            PulseSpec::DeltaPair {
                omega_plus,
                omega_minus,
                kappa,
                reg,
                phase,
            } => {
                let branch = |line: f64| -> Result<C64> {
                    match reg {
                        Regularization::Gaussian => Ok(C64::from_polar(gaussian_time(kappa, t), -line * t)),
                        Regularization::Rectangular => {
                            let c = line + 0.5 * kappa;
                            Ok(C64::from_polar(
                                (kappa / (2.0 * PI)).sqrt() * sinc(0.5 * kappa * t),
                                -c * t,
                            ))
                        }
                        Regularization::Lorentzian => Err(Error::InvalidPulse(
                            "no closed time-domain form for a Lorentzian-regularized pair".into(),
                        )),
                    }
                };
                (branch(omega_plus)? + branch(omega_minus)? * C64::from_polar(1.0, phase))
                    * std::f64::consts::FRAC_1_SQRT_2
            }
            PulseSpec::Tabulated { .. } => {
                return Err(Error::InvalidPulse(
                    "tabulated pulses have no closed time-domain form".into(),
                ))
            }
        })
    }

    /// Interval holding all but a negligible part of `|xi(t)|^2`, for shapes
    /// with compact or exponentially decaying temporal support.
    pub fn time_support(&self) -> Option<(f64, f64)> {
        match *self {
            PulseSpec::Gaussian { bandwidth, .. } => Some((-8.0 / bandwidth, 8.0 / bandwidth)),
            PulseSpec::TemporalRect { duration, .. } => Some((-0.5 * duration, 0.5 * duration)),
            PulseSpec::DecayingExp { rate, .. } => Some((0.0, 20.0 / rate)),
            PulseSpec::RisingExp { rate, .. } => Some((-20.0 / rate, 0.0)),
            PulseSpec::DeltaPair {
                kappa,
                reg: Regularization::Gaussian,
                ..
            } => Some((-8.0 / kappa, 8.0 / kappa)),
            _ => None,
        }
    }

    /// Reads a two-column (frequency, complex amplitude as `re,im`) table:
    /// three numeric columns per row, `#` comments and one header row allowed.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let (mut freqs, mut re, mut im) = (Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
            if rec.len() != 3 {
                return Err(Error::Format(format!(
                    "row {}: expected 3 columns (omega, re, im), got {}",
                    line + 1,
                    rec.len()
                )));
            }
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => {
                    freqs.push(v[0]);
                    re.push(v[1]);
                    im.push(v[2]);
                }
                Err(_) if line == 0 => continue,
                Err(e) => return Err(Error::Format(format!("row {}: {e}", line + 1))),
            }
        }
        let spec = PulseSpec::Tabulated { freqs, re, im };
        spec.validate()?;
        Ok(spec)
    }
}

fn interpolate(freqs: &[f64], re: &[f64], im: &[f64], omega: f64) -> C64 {
    let n = freqs.len();
    if !(omega >= freqs[0] && omega <= freqs[n - 1]) {
        return C64::new(0.0, 0.0);
    }
    let i = freqs.partition_point(|&f| f <= omega).clamp(1, n - 1);
    let (x0, x1) = (freqs[i - 1], freqs[i]);
    let s = (omega - x0) / (x1 - x0);
    C64::new(re[i - 1] + s * (re[i] - re[i - 1]), im[i - 1] + s * (im[i] - im[i - 1]))
}
