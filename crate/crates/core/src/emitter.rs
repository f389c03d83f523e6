//! Emitter model: the excited-subspace Hamiltonian, its coupling vector and
//! rate, and everything evaluated directly from them.
//!
//! Frequencies are angular frequencies measured from the carrier, so the
//! diagonal of `h_m` holds the detunings. The susceptibility
//!
//! ```text
//! chi(w) = (rate / 2) <gamma| (w - H)^-1 |gamma>
//! ```
//!
//! is real for real `w` and has simple poles at the eigenvalues of `H` that
//! overlap `|gamma>`. The response `X(w) = 2 d_theta chi / (1 + chi^2)` is
//! finite everywhere; inside the pole guard band it is evaluated from the
//! leading pole coefficients.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pole guard band, relative to the rate.
pub const POLE_GUARD_REL: f64 = 1e-9;
/// Overlaps at or below this are dark: no pole, no bracket boundary.
pub const DARK_OVERLAP: f64 = 1e-14;
const HERMITIAN_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-12;

/// Estimation target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ParameterTag {
    Gamma,
    /// One-based index into the excited-subspace basis.
    Detuning(usize),
}

impl ParameterTag {
    pub fn validate(self, dim: usize) -> Result<Self> {
        match self {
            ParameterTag::Detuning(j) if j == 0 || j > dim => Err(Error::ParameterOutOfRange { index: j, dim }),
            _ => Ok(self),
        }
    }

    /// `Gamma` followed by every `Detuning(j)` of an `n`-level subspace.
    pub fn all(n: usize) -> Vec<ParameterTag> {
        std::iter::once(ParameterTag::Gamma)
            .chain((1..=n).map(ParameterTag::Detuning))
            .collect()
    }
}

impl fmt::Display for ParameterTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParameterTag::Gamma => write!(f, "Gamma"),
            ParameterTag::Detuning(j) => write!(f, "Detuning({j})"),
        }
    }
}

impl FromStr for ParameterTag {
    type Err = Error;

    /// Accepts `gamma`, `Detuning(2)`, `detuning:2` and `delta2`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "gamma" {
            return Ok(ParameterTag::Gamma);
        }
        let index = t
            .strip_prefix("detuning(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| t.strip_prefix("detuning:"))
            .or_else(|| t.strip_prefix("delta_"))
            .or_else(|| t.strip_prefix("delta"));
        index
            .and_then(|i| i.trim().parse::<usize>().ok())
            .map(ParameterTag::Detuning)
            .ok_or_else(|| Error::Format(format!("unrecognised parameter `{s}`")))
    }
}

impl TryFrom<String> for ParameterTag {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ParameterTag> for String {
    fn from(p: ParameterTag) -> String {
        p.to_string()
    }
}

/// Eigen-decomposition of `H` with the populations of `|gamma>` on each
/// eigenvector.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    overlaps: Vec<f64>,
    eigenvectors: DMatrix<C64>,
    coupling: Vec<C64>,
}

impl SpectralDecomposition {
    pub fn new(h: &DMatrix<C64>, gamma_vec: &DVector<C64>) -> Self {
        let eig = h.clone().symmetric_eigen();
        let n = h.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let coupling: Vec<C64> = (0..n).map(|k| eigenvectors.column(k).dotc(gamma_vec)).collect();
        let overlaps = coupling.iter().map(|c| c.norm_sqr()).collect();
        Self {
            eigenvalues,
            overlaps,
            eigenvectors,
            coupling,
        }
    }

    /// Sorted ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `|<eps_k|gamma>|^2`, aligned with `eigenvalues()`.
    pub fn overlaps(&self) -> &[f64] {
        &self.overlaps
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.eigenvectors
    }

    /// Partial-fraction form of the susceptibility.
    pub fn susceptibility(&self, rate: f64, omega: f64) -> Result<f64> {
        let guard = POLE_GUARD_REL * rate;
        let mut sum = 0.0;
        for (&eps, &ov) in self.eigenvalues.iter().zip(&self.overlaps) {
            if ov <= DARK_OVERLAP {
                continue;
            }
            if (omega - eps).abs() <= guard {
                return Err(Error::PoleProximity {
                    omega,
                    pole: eps,
                    guard,
                });
            }
            sum += ov / (omega - eps);
        }
        Ok(0.5 * rate * sum)
    }

    /// `(w - H)^-1 |gamma>` rebuilt from the bright eigenvectors.
    fn resolvent_apply(&self, omega: f64) -> DVector<C64> {
        let n = self.eigenvalues.len();
        let mut x = DVector::zeros(n);
        for k in 0..n {
            if self.overlaps[k] <= DARK_OVERLAP {
                continue;
            }
            let scale = self.coupling[k] / (omega - self.eigenvalues[k]);
            x += self.eigenvectors.column(k) * scale;
        }
        x
    }
}

/// A pole of the susceptibility: one bright eigenvalue, or a cluster of
/// eigenvalues closer than the guard band.
#[derive(Debug, Clone)]
pub struct Pole {
    pub position: f64,
    /// `<gamma|P|gamma>` for the cluster projector `P`.
    pub weight: f64,
    /// `P|gamma>`.
    projected: DVector<C64>,
}

#[derive(Debug, Clone)]
pub struct EmitterModel {
    h: DMatrix<C64>,
    gamma_vec: DVector<C64>,
    rate: f64,
    spectral: SpectralDecomposition,
    poles: Vec<Pole>,
}

impl EmitterModel {
    pub fn new(h_m: DMatrix<C64>, gamma_vec: DVector<C64>, gamma_rate: f64) -> Result<Self> {
        let n = h_m.nrows();
        if n == 0 || h_m.ncols() != n || gamma_vec.len() != n {
            return Err(Error::InvalidModel {
                invariant: "dimension",
                detail: format!(
                    "h_m is {}x{}, gamma_vec has {} entries",
                    h_m.nrows(),
                    h_m.ncols(),
                    gamma_vec.len()
                ),
            });
        }
        if !(gamma_rate.is_finite() && gamma_rate > 0.0) {
            return Err(Error::InvalidModel {
                invariant: "gamma_rate_positive",
                detail: format!("gamma_rate = {gamma_rate}"),
            });
        }
        if h_m
            .iter()
            .chain(gamma_vec.iter())
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::InvalidModel {
                invariant: "finite_entries",
                detail: "h_m or gamma_vec has a non-finite entry".into(),
            });
        }
        let scale = h_m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let asym = (&h_m - h_m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidModel {
                invariant: "h_m_hermitian",
                detail: format!("max |H - H^dagger| = {asym:e}"),
            });
        }
        let norm = gamma_vec.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidModel {
                invariant: "gamma_vec_normalized",
                detail: format!("|gamma| = {norm}"),
            });
        }

        let h = (&h_m + h_m.adjoint()) * C64::new(0.5, 0.0);
        let spectral = SpectralDecomposition::new(&h, &gamma_vec);
        let poles = cluster_poles(&spectral, POLE_GUARD_REL * gamma_rate);
        Ok(Self {
            h,
            gamma_vec,
            rate: gamma_rate,
            spectral,
            poles,
        })
    }

    /// Two-level emitter with detuning `delta`.
    pub fn tls(delta: f64, gamma_rate: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_element(1, 1, C64::new(delta, 0.0)),
            DVector::from_element(1, C64::new(1.0, 0.0)),
            gamma_rate,
        )
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    pub fn h_m(&self) -> &DMatrix<C64> {
        &self.h
    }

    pub fn gamma_vec(&self) -> &DVector<C64> {
        &self.gamma_vec
    }

    pub fn gamma_rate(&self) -> f64 {
        self.rate
    }

    /// `Delta_j = <j|H|j>`, one-based.
    pub fn detuning(&self, j: usize) -> f64 {
        self.h[(j - 1, j - 1)].re
    }

    pub fn pole_guard(&self) -> f64 {
        POLE_GUARD_REL * self.rate
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    /// Poles sorted ascending; never empty for a valid model.
    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    /// Eigenvalues whose eigenvectors do not couple to `|gamma>`.
    pub fn dark_levels(&self) -> Vec<f64> {
        self.spectral
            .eigenvalues
            .iter()
            .zip(&self.spectral.overlaps)
            .filter(|(_, &o)| o <= DARK_OVERLAP)
            .map(|(&e, _)| e)
            .collect()
    }

    /// Width of the spectrum, `max eps - min eps`.
    pub fn spectral_spread(&self) -> f64 {
        let e = &self.spectral.eigenvalues;
        e[e.len() - 1] - e[0]
    }

    /// Copy of the model with `theta` shifted by `delta`.
    pub fn shifted(&self, theta: ParameterTag, delta: f64) -> Result<Self> {
        let theta = theta.validate(self.n())?;
        match theta {
            ParameterTag::Gamma => Self::new(self.h.clone(), self.gamma_vec.clone(), self.rate + delta),
            ParameterTag::Detuning(j) => {
                let mut h = self.h.clone();
                h[(j - 1, j - 1)] += C64::new(delta, 0.0);
                Self::new(h, self.gamma_vec.clone(), self.rate)
            }
        }
    }

    fn pole_near(&self, omega: f64) -> Option<&Pole> {
        let guard = self.pole_guard();
        self.poles.iter().find(|p| (omega - p.position).abs() <= guard)
    }

    fn check_frequency(&self, omega: f64) -> Result<()> {
        if !omega.is_finite() {
            return Err(Error::Format(format!("non-finite frequency {omega}")));
        }
        if let Some(p) = self.pole_near(omega) {
            return Err(Error::PoleProximity {
                omega,
                pole: p.position,
                guard: self.pole_guard(),
            });
        }
        Ok(())
    }

    /// Solves `(w - H) x = |gamma>`.
    fn resolvent_apply(&self, omega: f64) -> DVector<C64> {
        let n = self.n();
        let a = DMatrix::from_diagonal_element(n, n, C64::new(omega, 0.0)) - &self.h;
        match a.lu().solve(&self.gamma_vec) {
            Some(x) if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => x,
            // exactly singular only at a dark level, where |gamma> has no component
            _ => self.spectral.resolvent_apply(omega),
        }
    }

    /// `<gamma|(w - H)^-1|gamma>` as computed, imaginary part included.
    pub fn resolvent_overlap(&self, omega: f64) -> Result<C64> {
        self.check_frequency(omega)?;
        Ok(self.gamma_vec.dotc(&self.resolvent_apply(omega)))
    }

    pub fn susceptibility(&self, omega: f64) -> Result<f64> {
        Ok(0.5 * self.rate * self.resolvent_overlap(omega)?.re)
    }

    pub fn d_susceptibility(&self, omega: f64, theta: ParameterTag) -> Result<f64> {
        let theta = theta.validate(self.n())?;
        self.check_frequency(omega)?;
        let x = self.resolvent_apply(omega);
        Ok(match theta {
            ParameterTag::Gamma => 0.5 * self.gamma_vec.dotc(&x).re,
            ParameterTag::Detuning(j) => 0.5 * self.rate * x[j - 1].norm_sqr(),
        })
    }

    /// `X(w) = 2 d_theta chi / (1 + chi^2)`, total over the extended real
    /// line (zero at infinity).
    ///
    /// Panics if `theta` is out of range for this model.
    pub fn response(&self, omega: f64, theta: ParameterTag) -> f64 {
        if let ParameterTag::Detuning(j) = theta {
            assert!(j >= 1 && j <= self.n(), "{theta} out of range for N = {}", self.n());
        }
        if omega.is_infinite() {
            return 0.0;
        }
        if let Some(p) = self.pole_near(omega) {
            return match theta {
                ParameterTag::Gamma => 0.0,
                ParameterTag::Detuning(j) => 4.0 * p.projected[j - 1].norm_sqr() / (self.rate * p.weight),
            };
        }
        let x = self.resolvent_apply(omega);
        let chi = 0.5 * self.rate * self.gamma_vec.dotc(&x).re;
        match theta {
            ParameterTag::Gamma => 2.0 * (chi / self.rate) / (1.0 + chi * chi),
            ParameterTag::Detuning(j) => self.rate * x[j - 1].norm_sqr() / (1.0 + chi * chi),
        }
    }

    /// `-(i H + rate |gamma><gamma| / 2)`.
    pub fn effective_generator(&self) -> DMatrix<C64> {
        let proj = &self.gamma_vec * self.gamma_vec.adjoint();
        (&self.h * C64::new(0.0, -1.0)) - proj * C64::new(0.5 * self.rate, 0.0)
    }

    /// Time-domain scattering kernel; zero for `t < 0`, equal to the rate at
    /// `t = 0`.
    pub fn kernel_time(&self, t: f64) -> C64 {
        if t < 0.0 {
            return C64::new(0.0, 0.0);
        }
        if t == 0.0 {
            return C64::new(self.rate * self.gamma_vec.norm_squared(), 0.0);
        }
        let prop = (self.effective_generator() * C64::new(t, 0.0)).exp();
        self.gamma_vec.dotc(&(prop * &self.gamma_vec)) * self.rate
    }

    /// `kernel_time(k dt)` for `k = 0..count`, by repeated application of the
    /// one-step propagator.
    pub fn kernel_time_series(&self, dt: f64, count: usize) -> Vec<C64> {
        let step = (self.effective_generator() * C64::new(dt, 0.0)).exp();
        let mut v = self.gamma_vec.clone();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(self.gamma_vec.dotc(&v) * self.rate);
            v = &step * v;
        }
        out
    }

    /// `2 i chi / (1 + i chi)`, with the pole limit 2.
    pub fn kernel_freq(&self, omega: f64) -> C64 {
        if omega.is_infinite() {
            return C64::new(0.0, 0.0);
        }
        if self.pole_near(omega).is_some() {
            return C64::new(2.0, 0.0);
        }
        let chi = self.susceptibility(omega).expect("checked pole guard");
        let ichi = C64::new(0.0, chi);
        2.0 * ichi / (1.0 + ichi)
    }

    /// Transmission factor `(1 - i chi) / (1 + i chi)`, with the pole limit -1.
    pub fn transmission(&self, omega: f64) -> C64 {
        if omega.is_infinite() {
            return C64::new(1.0, 0.0);
        }
        if self.pole_near(omega).is_some() {
            return C64::new(-1.0, 0.0);
        }
        let chi = self.susceptibility(omega).expect("checked pole guard");
        C64::new(1.0, -chi) / C64::new(1.0, chi)
    }
}

fn cluster_poles(spectral: &SpectralDecomposition, tol: f64) -> Vec<Pole> {
    let n = spectral.eigenvalues.len();
    let mut poles = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && spectral.eigenvalues[end] - spectral.eigenvalues[end - 1] <= tol {
            end += 1;
        }
        let mut projected = DVector::zeros(n);
        let mut weight = 0.0;
        let mut moment = 0.0;
        for k in start..end {
            projected += spectral.eigenvectors.column(k) * spectral.coupling[k];
            weight += spectral.overlaps[k];
            moment += spectral.overlaps[k] * spectral.eigenvalues[k];
        }
        if weight > DARK_OVERLAP {
            poles.push(Pole {
                position: moment / weight,
                weight,
                projected,
            });
        }
        start = end;
    }
    poles
}
