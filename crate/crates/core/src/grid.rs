//! Nonuniform frequency grids with trapezoidal weights.
//!
//! Nodes cluster geometrically around every bright eigenvalue and every
//! pulse feature: spacing is `scale / ppu` inside a core of each feature and
//! grows by a fixed ratio away from it. Amplitude jumps are bracketed by a
//! pair of nodes a relative 1e-10 apart so the trapezoid rule never straddles
//! a discontinuity.

use num_complex::Complex64 as C64;

use crate::emitter::EmitterModel;
use crate::error::{Error, Result};
use crate::pulse::PulseSpec;

pub const MIN_BUDGET: usize = 512;
pub const DEFAULT_BUDGET: usize = 4096;
/// Minimum nodes per feature scale.
const BASE_PPU: f64 = 32.0;
/// Spacing growth per unit distance at the lowest resolution.
const BASE_GROWTH: f64 = 0.08;
const JUMP_SPLIT: f64 = 1e-10;

/// Complex amplitudes on a strictly increasing frequency grid with positive
/// quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    freqs: Vec<f64>,
    amps: Vec<C64>,
    weights: Vec<f64>,
}

impl SampledField {
    pub fn new(freqs: Vec<f64>, amps: Vec<C64>, weights: Vec<f64>) -> Result<Self> {
        if freqs.len() != amps.len() || freqs.len() != weights.len() || freqs.is_empty() {
            return Err(Error::InvalidGrid(format!(
                "length mismatch: {} freqs, {} amps, {} weights",
                freqs.len(),
                amps.len(),
                weights.len()
            )));
        }
        if freqs.iter().any(|f| !f.is_finite()) || freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(
                "frequencies must be finite and strictly increasing".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidGrid("weights must be positive".into()));
        }
        Ok(Self { freqs, amps, weights })
    }

    /// Trapezoid weights on the given nodes.
    pub fn trapezoid(freqs: Vec<f64>, amps: Vec<C64>) -> Result<Self> {
        let weights = trapezoid_weights(&freqs)?;
        Self::new(freqs, amps, weights)
    }

    /// Samples `f` on `n` equally spaced nodes spanning `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        if n < 2 || hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidGrid(format!("bad uniform grid [{lo}, {hi}] x {n}")));
        }
        let h = (hi - lo) / (n - 1) as f64;
        let freqs: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
        let amps = freqs.iter().map(|&w| f(w)).collect();
        Self::trapezoid(freqs, amps)
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Quadrature weight times spectral intensity, per node.
    pub fn intensity(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().zip(&self.amps).map(|(w, a)| w * a.norm_sqr())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.intensity().sum()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::ZeroField);
        }
        let s = n.sqrt().recip();
        Ok(self.map_amps(|_, a| a * s))
    }

    /// `sum w conj(a) b`; both fields must share the grid.
    pub fn inner(&self, other: &SampledField) -> Result<C64> {
        if self.freqs != other.freqs {
            return Err(Error::InvalidGrid("inner product of fields on different grids".into()));
        }
        Ok(self
            .weights
            .iter()
            .zip(self.amps.iter().zip(&other.amps))
            .map(|(w, (a, b))| a.conj() * b * w)
            .sum())
    }

    pub fn map_amps(&self, f: impl Fn(f64, C64) -> C64) -> Self {
        Self {
            freqs: self.freqs.clone(),
            amps: self.freqs.iter().zip(&self.amps).map(|(&w, &a)| f(w, a)).collect(),
            weights: self.weights.clone(),
        }
    }
}

fn trapezoid_weights(freqs: &[f64]) -> Result<Vec<f64>> {
    let n = freqs.len();
    if n < 2 {
        return Err(Error::InvalidGrid("trapezoid rule needs at least two nodes".into()));
    }
    Ok((0..n)
        .map(|i| {
            let left = if i > 0 { freqs[i] - freqs[i - 1] } else { 0.0 };
            let right = if i + 1 < n { freqs[i + 1] - freqs[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect())
}

/// `[min eps - 25 rate - 10 s, max eps + 25 rate + 10 s]` widened to the
/// pulse's own window, `s` being the pulse scale.
pub fn default_window(model: &EmitterModel, pulse: &PulseSpec) -> (f64, f64) {
    let eps = model.spectral().eigenvalues();
    let g = model.gamma_rate();
    let s = pulse.scale();
    let f = pulse.features();
    (
        (eps[0] - 25.0 * g - 10.0 * s).min(f.window.0),
        (eps[eps.len() - 1] + 25.0 * g + 10.0 * s).max(f.window.1),
    )
}

struct Spacing {
    peaks: Vec<(f64, f64)>,
    ripple: Option<(f64, f64, f64)>,
    ppu: f64,
    growth: f64,
    cap: f64,
}

impl Spacing {
    fn at(&self, x: f64) -> f64 {
        let mut h = self.cap;
        for &(c, s) in &self.peaks {
            h = h.min((s / self.ppu).max(self.growth * (x - c).abs()));
        }
        if let Some((c, period, extent)) = self.ripple {
            if (x - c).abs() <= extent {
                h = h.min(period / 16.0);
            }
        }
        h
    }

    fn nodes(&self, breaks: &[f64]) -> Vec<f64> {
        let mut out = vec![breaks[0]];
        for seg in breaks.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let start = out.len();
            let mut x = a;
            loop {
                let h0 = self.at(x);
                let h = h0.min(self.at(x + h0));
                if x + h >= b {
                    if out.len() > start && b - x < 0.3 * h {
                        out.pop();
                    }
                    break;
                }
                x += h;
                out.push(x);
            }
            out.push(b);
        }
        out
    }
}

/// Frequency nodes for `pulse` scattered by `model` on `window`.
pub fn grid_nodes(model: &EmitterModel, pulse: &PulseSpec, window: (f64, f64), budget: usize) -> Result<Vec<f64>> {
    pulse.validate()?;
    let (lo, hi) = window;
    if budget < MIN_BUDGET {
        return Err(Error::InvalidGrid(format!("budget {budget} is below {MIN_BUDGET}")));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidGrid(format!("bad window [{lo}, {hi}]")));
    }
    let g = model.gamma_rate();
    let eps = model.spectral().eigenvalues();
    let feats = pulse.features();
    let need = [
        (
            eps[0] - 10.0 * g,
            eps[eps.len() - 1] + 10.0 * g,
            "model spectrum +-10 Gamma",
        ),
        (feats.required.0, feats.required.1, "pulse features"),
    ];
    for (a, b, what) in need {
        if a < lo || b > hi {
            return Err(Error::WindowTooSmall(format!(
                "window [{lo}, {hi}] does not cover {what} [{a}, {b}]"
            )));
        }
    }

    let mut peaks: Vec<(f64, f64)> = model
        .poles()
        .iter()
        .map(|p| (p.position, 0.5 * g * p.weight.max(1e-6)))
        .collect();
    peaks.extend(feats.peaks.iter().copied());
    let jump_scale = pulse.scale();
    peaks.extend(feats.jumps.iter().map(|&j| (j, jump_scale)));

    let mut breaks = vec![lo, hi];
    breaks.extend(model.poles().iter().map(|p| p.position));
    breaks.extend(feats.nodes.iter().copied());
    for &j in &feats.jumps {
        let d = JUMP_SPLIT * j.abs().max(jump_scale);
        breaks.extend([j - d, j + d]);
    }
    breaks.retain(|&b| b >= lo && b <= hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE));

    let build = |r: f64| {
        Spacing {
            peaks: peaks.clone(),
            ripple: feats.ripple,
            ppu: BASE_PPU * r,
            growth: BASE_GROWTH / r,
            cap: (hi - lo) / (64.0 * r),
        }
        .nodes(&breaks)
    };
    let coarse = build(1.0);
    if coarse.len() >= budget {
        return Ok(coarse);
    }
    Ok(build(budget as f64 / coarse.len() as f64))
}

/// Samples `pulse` on a feature-aware grid over `window` and normalizes it.
///
/// `budget` is the target node count; the grid never drops below 32 nodes
/// per feature scale, so it can exceed a small budget.
pub fn build_grid(model: &EmitterModel, pulse: &PulseSpec, window: (f64, f64), budget: usize) -> Result<SampledField> {
    let freqs = grid_nodes(model, pulse, window, budget)?;
    let amps = freqs.iter().map(|&w| pulse.amplitude(w)).collect();
    SampledField::trapezoid(freqs, amps)?.normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::Regularization;
    use crate::test_util::rng;
    use rand::Rng;

    #[test]
    fn density_near_shared_feature() {
        let m = EmitterModel::tls(0.0, 1.0).unwrap();
        for sigma in [0.05, 0.3, 1.0, 4.0] {
            let p = PulseSpec::Gaussian {
                center: 0.0,
                bandwidth: sigma,
            };
            let f = build_grid(&m, &p, default_window(&m, &p), 512).unwrap();
            let width = sigma.min(1.0);
            let inside = f.freqs().iter().filter(|w| w.abs() <= 0.5 * width).count();
            assert!(inside >= 32, "sigma {sigma}: {inside}");
        }
    }

    #[test]
    fn built_field_is_normalized() {
        let m = EmitterModel::tls(0.2, 1.0).unwrap();
        let p = PulseSpec::DeltaPair {
            omega_plus: 0.7,
            omega_minus: -0.3,
            kappa: 1e-2,
            reg: Regularization::Rectangular,
            phase: 0.0,
        };
        let f = build_grid(&m, &p, default_window(&m, &p), DEFAULT_BUDGET).unwrap();
        assert!((f.norm_sqr() - 1.0).abs() < 1e-9);
        assert!(f.freqs().windows(2).all(|w| w[1] > w[0]));
        assert!(f.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn budget_sets_node_count() {
        let m = EmitterModel::tls(0.0, 1.0).unwrap();
        let p = PulseSpec::Gaussian {
            center: 0.0,
            bandwidth: 0.5,
        };
        let w = default_window(&m, &p);
        let small = grid_nodes(&m, &p, w, 512).unwrap().len();
        let large = grid_nodes(&m, &p, w, 8192).unwrap().len();
        assert!(large > 4 * small, "{small} {large}");
        assert!((large as f64 - 8192.0).abs() < 0.25 * 8192.0, "{large}");
    }

    #[test]
    fn jumps_are_bracketed() {
        let m = EmitterModel::tls(0.0, 1.0).unwrap();
        let p = PulseSpec::Rectangular {
            center: 0.0,
            width: 0.4,
        };
        let f = build_grid(&m, &p, default_window(&m, &p), 1024).unwrap();
        // the box integrates exactly once jumps are split
        let inside: f64 = f
            .freqs()
            .iter()
            .zip(f.weights())
            .filter(|(w, _)| w.abs() <= 0.2)
            .map(|(_, wt)| wt)
            .sum();
        assert!((inside - 0.4).abs() < 1e-9, "{inside}");
    }

    #[test]
    fn window_too_small() {
        let m = EmitterModel::tls(0.0, 1.0).unwrap();
        let p = PulseSpec::Gaussian {
            center: 0.0,
            bandwidth: 0.5,
        };
        assert!(matches!(
            build_grid(&m, &p, (-5.0, 5.0), 1024),
            Err(Error::WindowTooSmall(_))
        ));
        let q = PulseSpec::Gaussian {
            center: 40.0,
            bandwidth: 0.5,
        };
        assert!(matches!(
            build_grid(&m, &q, (-30.0, 30.0), 1024),
            Err(Error::WindowTooSmall(_))
        ));
        assert!(matches!(
            build_grid(&m, &p, default_window(&m, &p), 100),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn normalize_properties() {
        let mut r = rng(1);
        let n = 300;
        let freqs: Vec<f64> = (0..n).map(|i| i as f64 * 0.1 + r.gen_range(0.0..0.05)).collect();
        let amps: Vec<C64> = (0..n)
            .map(|_| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .collect();
        let f = SampledField::trapezoid(freqs, amps).unwrap();
        let a = f.normalize().unwrap();
        assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
        let b = a.normalize().unwrap();
        for (x, y) in a.amps().iter().zip(b.amps()) {
            assert!((x - y).norm() <= 1e-15);
        }
        let c = f.map_amps(|_, z| z * 3.0).normalize().unwrap();
        for (x, y) in a.amps().iter().zip(c.amps()) {
            assert!((x - y).norm() <= 1e-15);
        }
        let zero = f.map_amps(|_, _| C64::new(0.0, 0.0));
        assert_eq!(zero.normalize(), Err(Error::ZeroField));
    }

    #[test]
    fn rejects_bad_fields() {
        let one = C64::new(1.0, 0.0);
        assert!(SampledField::new(vec![0.0, 0.0], vec![one, one], vec![1.0, 1.0]).is_err());
        assert!(SampledField::new(vec![0.0, 1.0], vec![one, one], vec![1.0, 0.0]).is_err());
        assert!(SampledField::new(vec![0.0, 1.0], vec![one], vec![1.0, 1.0]).is_err());
    }
}
