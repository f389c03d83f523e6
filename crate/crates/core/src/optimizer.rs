//! Pole-aware search over the susceptibility and the response function.
//!
//! Between consecutive bright poles `chi` is continuous and strictly
//! decreasing from `+inf` to `-inf`, so `chi = c` has exactly one root in
//! every interior gap, plus one outer root on the side where `chi -> 0` with
//! the sign of `c`. The response `X` is scanned on grids that are
//! log-refined towards each pole, refined by golden section, and the result
//! is certified against an analytic envelope of `|X|` beyond the window.

use rayon::prelude::*;
use serde::Serialize;

use crate::emitter::{EmitterModel, ParameterTag, DARK_OVERLAP};
use crate::error::{Error, Result};

/// Scan points per interval.
pub const SCAN_POINTS: usize = 2048;
/// Default outer truncation, in units of the rate, beyond `max |eps|`.
pub const OUTER_EXTENT: f64 = 1e3;
/// Tail envelope must stay below this fraction of the largest `|mu|`.
pub const TAIL_REL: f64 = 1e-6;
/// Relative tolerance under which two extremal values count as a tie.
const TIE_REL: f64 = 1e-10;
const MAX_CANDIDATES: usize = 64;
/// Refined candidates closer than this (in units of the rate) belong to the
/// same extremum.
const SAME_EXTREMUM: f64 = 1e-6;
const ROOT_REL: f64 = 1e-10;

/// Open intervals between consecutive poles, plus the two outer intervals
/// truncated at `+-(max |eps| + extent)`, each shrunk by the pole guard.
#[derive(Debug, Clone, Serialize)]
pub struct BracketSet {
    poles: Vec<f64>,
    intervals: Vec<(f64, f64)>,
    extent: f64,
    half_width: f64,
    /// Distance from the spectrum to the nearer window edge.
    tail_distance: f64,
}

impl BracketSet {
    pub fn new(model: &EmitterModel) -> Self {
        Self::with_extent(model, OUTER_EXTENT * model.gamma_rate())
    }

    pub fn with_extent(model: &EmitterModel, extent: f64) -> Self {
        let g = model.pole_guard();
        let eps = model.spectral().eigenvalues();
        let (emin, emax) = (eps[0], eps[eps.len() - 1]);
        let half_width = emin.abs().max(emax.abs()) + extent;
        let poles: Vec<f64> = model.poles().iter().map(|p| p.position).collect();

        let mut intervals = Vec::with_capacity(poles.len() + 1);
        let mut left = -half_width;
        for &p in &poles {
            if p - g > left {
                intervals.push((left, p - g));
            }
            left = p + g;
        }
        if half_width > left {
            intervals.push((left, half_width));
        }
        Self {
            poles,
            intervals,
            extent,
            half_width,
            tail_distance: (half_width - emax).min(half_width + emin),
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn window(&self) -> (f64, f64) {
        (-self.half_width, self.half_width)
    }

    /// Scan nodes, log-refined towards every pole; poles themselves and the
    /// window edges included.
    fn scan_points(&self, guard: f64) -> Vec<f64> {
        let mut pts = Vec::with_capacity((self.intervals.len() + 1) * SCAN_POINTS);
        let near = 2.0 * guard;
        let geometric = |from: f64, to: f64, n: usize| -> Vec<f64> {
            if to <= from {
                return vec![];
            }
            let ratio = (to / from).ln() / (n - 1).max(1) as f64;
            (0..n).map(|i| from * (ratio * i as f64).exp()).collect()
        };
        for &(lo, hi) in &self.intervals {
            let left_pole = self.poles.iter().any(|&p| (lo - p).abs() <= guard * 1.000001);
            let right_pole = self.poles.iter().any(|&p| (hi - p).abs() <= guard * 1.000001);
            let (pl, pr) = (lo - guard, hi + guard);
            match (left_pole, right_pole) {
                (true, true) => {
                    let half = 0.5 * (pr - pl);
                    pts.extend(geometric(near, half, SCAN_POINTS / 2).into_iter().map(|d| pl + d));
                    pts.extend(geometric(near, half, SCAN_POINTS / 2).into_iter().map(|d| pr - d));
                }
                (true, false) => {
                    pts.extend(geometric(near, hi - pl, SCAN_POINTS).into_iter().map(|d| pl + d));
                }
                (false, true) => {
                    pts.extend(geometric(near, pr - lo, SCAN_POINTS).into_iter().map(|d| pr - d));
                }
                (false, false) => {
                    let h = (hi - lo) / (SCAN_POINTS - 1) as f64;
                    pts.extend((0..SCAN_POINTS).map(|i| lo + h * i as f64));
                }
            }
        }
        pts.extend(self.poles.iter().copied());
        pts.push(-self.half_width);
        pts.push(self.half_width);
        pts.retain(|&w| w >= -self.half_width && w <= self.half_width);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub omega: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtremaDiagnostics {
    pub parameter: String,
    pub intervals: Vec<(f64, f64)>,
    pub window_extent: f64,
    pub tail_envelope: f64,
    pub scan_points: usize,
    pub max_candidates: Vec<Candidate>,
    pub min_candidates: Vec<Candidate>,
    /// Other frequencies attaining `mu_max` within the tie tolerance.
    pub alternative_maximizers: Vec<f64>,
    pub alternative_minimizers: Vec<f64>,
}

/// Global extrema of the response. An extremum attained only in the limit
/// `|w| -> inf` is reported at `omega = +inf`.
#[derive(Debug, Clone, Serialize)]
pub struct Extrema {
    pub mu_max: f64,
    pub omega_max: f64,
    pub mu_min: f64,
    pub omega_min: f64,
    pub diagnostics: ExtremaDiagnostics,
}

/// Upper bound on `|X(w)|` for `w` at least `dist` from the spectrum.
fn tail_envelope(model: &EmitterModel, theta: ParameterTag, dist: f64) -> f64 {
    match theta {
        ParameterTag::Gamma => 1.0 / dist,
        ParameterTag::Detuning(j) => {
            let s = model.spectral();
            let v = s.eigenvectors();
            let c: f64 = s
                .overlaps()
                .iter()
                .enumerate()
                .filter(|(_, &o)| o > DARK_OVERLAP)
                .map(|(k, &o)| v[(j - 1, k)].norm() * o.sqrt())
                .sum();
            model.gamma_rate() * c * c / (dist * dist)
        }
    }
}

/// Maximizes `f` on `[a, b]`: golden section down to 1e-3 of the bracket,
/// then bisection on the sign of a fixed-step fourth-order central
/// difference, which resolves the maximizer well below the `sqrt(eps)` limit
/// of comparisons of function values.
fn refine_max(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let w0 = b - a;
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..64 {
        if b - a <= 1e-3 * w0 || b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let h = 1e-2 * w0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= 4.0 * f64::EPSILON * m.abs().max(w0) {
            break;
        }
        // fourth-order central difference, up to its positive factor
        let slope = 8.0 * (f(m + h) - f(m - h)) - (f(m + 2.0 * h) - f(m - 2.0 * h));
        if slope > 0.0 {
            a = m;
        } else if slope < 0.0 {
            b = m;
        } else {
            a = m;
            b = m;
        }
    }
    let m = 0.5 * (a + b);
    (m, f(m))
}

fn local_extrema(points: &[f64], values: &[f64], sign: f64) -> Vec<usize> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n)
        .filter(|&i| {
            let v = sign * values[i];
            (i == 0 || v >= sign * values[i - 1]) && (i + 1 == n || v >= sign * values[i + 1])
        })
        .collect();
    idx.sort_by(|&a, &b| {
        (sign * values[b])
            .total_cmp(&(sign * values[a]))
            .then(points[a].total_cmp(&points[b]))
    });
    idx.truncate(MAX_CANDIDATES);
    idx
}

struct Pick {
    value: f64,
    omega: f64,
    candidates: Vec<Candidate>,
    alternatives: Vec<f64>,
}

/// Refines the scan's local maxima of `sign * X` and picks the global one.
fn pick(model: &EmitterModel, theta: ParameterTag, points: &[f64], values: &[f64], sign: f64) -> Pick {
    let f = |w: f64| sign * model.response(w, theta);
    let guard = model.pole_guard();
    let idx = local_extrema(points, values, sign);
    // (candidate, sits on a pole)
    let mut found: Vec<(Candidate, bool)> = idx
        .par_iter()
        .map(|&i| {
            let a = points[i.saturating_sub(1)];
            let b = points[(i + 1).min(points.len() - 1)];
            let scanned = (points[i], sign * values[i]);
            let (w, v) = if b > a { refine_max(&f, a, b) } else { scanned };
            let (w, v) = if scanned.1 >= v { scanned } else { (w, v) };
            // inside the guard band the response is the pole limit
            match model.poles().iter().find(|p| (w - p.position).abs() <= guard) {
                Some(p) => (
                    Candidate {
                        omega: p.position,
                        value: v,
                    },
                    true,
                ),
                None => (Candidate { omega: w, value: v }, false),
            }
        })
        .collect();
    // on a top flat to rounding, the pole beats its neighbours
    found.sort_by(|x, y| {
        y.0.value
            .total_cmp(&x.0.value)
            .then(y.1.cmp(&x.1))
            .then(x.0.omega.total_cmp(&y.0.omega))
    });
    let refined: Vec<Candidate> = found.into_iter().map(|(c, _)| c).collect();

    // best candidate per extremum, in order of value
    let mut distinct: Vec<Candidate> = Vec::new();
    let radius = SAME_EXTREMUM * model.gamma_rate();
    for c in &refined {
        if distinct.iter().all(|d| (d.omega - c.omega).abs() > radius) {
            distinct.push(*c);
        }
    }
    let best = distinct[0].value;
    let tol = TIE_REL * best.abs();
    let mut ties: Vec<f64> = distinct
        .iter()
        .filter(|c| c.value >= best - tol)
        .map(|c| c.omega)
        .collect();
    ties.sort_by(f64::total_cmp);
    let mut pick = Pick {
        value: sign * best,
        omega: ties[0],
        candidates: refined
            .iter()
            .map(|c| Candidate {
                omega: c.omega,
                value: sign * c.value,
            })
            .collect(),
        alternatives: ties[1..].to_vec(),
    };
    // X -> 0 as |w| -> inf
    if 0.0 > best + tol {
        pick.value = 0.0;
        pick.omega = f64::INFINITY;
        pick.alternatives.clear();
    }
    pick
}

/// Global extrema of `response(., theta)` over the real line, certified by
/// the tail envelope beyond the bracket window.
pub fn find_extrema(model: &EmitterModel, theta: ParameterTag, brackets: &BracketSet) -> Result<Extrema> {
    let theta = theta.validate(model.n())?;
    let points = brackets.scan_points(model.pole_guard());
    if points.len() < 3 {
        return Err(Error::OptimizerFailure("degenerate scan window".into()));
    }
    let values: Vec<f64> = points.par_iter().map(|&w| model.response(w, theta)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::OptimizerFailure(format!(
            "non-finite response while scanning {theta}"
        )));
    }
    let max = pick(model, theta, &points, &values, 1.0);
    let min = pick(model, theta, &points, &values, -1.0);

    let envelope = tail_envelope(model, theta, brackets.tail_distance);
    let limit = TAIL_REL * max.value.abs().max(min.value.abs());
    if envelope > limit {
        return Err(Error::WindowInsufficient { envelope, limit });
    }
    Ok(Extrema {
        mu_max: max.value,
        omega_max: max.omega,
        mu_min: min.value,
        omega_min: min.omega,
        diagnostics: ExtremaDiagnostics {
            parameter: theta.to_string(),
            intervals: brackets.intervals.clone(),
            window_extent: brackets.extent,
            tail_envelope: envelope,
            scan_points: points.len(),
            max_candidates: max.candidates,
            min_candidates: min.candidates,
            alternative_maximizers: max.alternatives,
            alternative_minimizers: min.alternatives,
        },
    })
}

/// `find_extrema`, widening the outer truncation tenfold until the tail
/// envelope certifies the window.
pub fn find_extrema_certified(model: &EmitterModel, theta: ParameterTag) -> Result<Extrema> {
    let mut extent = OUTER_EXTENT * model.gamma_rate();
    let mut last = None;
    for _ in 0..10 {
        match find_extrema(model, theta, &BracketSet::with_extent(model, extent)) {
            Err(e @ Error::WindowInsufficient { .. }) => last = Some(e),
            other => return other,
        }
        extent *= 10.0;
    }
    Err(last.expect("at least one attempt"))
}

/// Root of a decreasing `f` on `[a, b]` with `f(a) > 0 > f(b)`: secant steps
/// inside the bracket, bisection whenever the bracket fails to halve.
fn decreasing_root(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, stop: f64) -> Result<f64> {
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    let mut last_width = f64::INFINITY;
    for _ in 0..400 {
        let width = b - a;
        if width <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
        let mid = 0.5 * (a + b);
        let secant = a - fa * (b - a) / (fb - fa);
        let x = if width <= 0.5 * last_width && secant > a && secant < b {
            secant
        } else {
            mid
        };
        last_width = width;
        let fx = f(x)?;
        if fx.abs() <= stop {
            return Ok(x);
        }
        if fx > 0.0 {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Ok(if fa.abs() <= fb.abs() { a } else { b })
}

/// Every real root of `chi(w) = c`, ascending: one per gap between poles
/// plus the outer root on the side matching the sign of `c`.
pub fn solve_chi_equals(model: &EmitterModel, c: f64) -> Result<Vec<f64>> {
    if !c.is_finite() || c == 0.0 {
        return Err(Error::NoRootCertified(format!("target {c} must be finite and nonzero")));
    }
    let poles: Vec<f64> = model.poles().iter().map(|p| p.position).collect();
    if poles.is_empty() {
        return Err(Error::NoRootCertified(
            "no eigenvalue overlaps the coupling vector".into(),
        ));
    }
    let g = 2.0 * model.pole_guard();
    let chi = |w: f64| model.susceptibility(w);
    let resid = |w: f64| chi(w).map(|x| x - c);
    let scale = c.abs().max(1.0);

    let mut brackets = Vec::new();
    for pair in poles.windows(2) {
        if pair[1] - pair[0] > 2.0 * g {
            brackets.push((pair[0] + g, pair[1] - g));
        }
    }
    let outer = |from: f64, dir: f64| -> Result<(f64, f64)> {
        let mut d = model.gamma_rate();
        for _ in 0..2000 {
            if (chi(from + dir * d)? - c) * dir < 0.0 {
                return Ok(if dir > 0.0 {
                    (from + g, from + d)
                } else {
                    (from - d, from - g)
                });
            }
            d *= 2.0;
        }
        Err(Error::NoRootCertified(format!("outer root for c = {c} not bracketed")))
    };
    if c > 0.0 {
        brackets.push(outer(poles[poles.len() - 1], 1.0)?);
    } else {
        brackets.insert(0, outer(poles[0], -1.0)?);
    }

    let mut roots = Vec::with_capacity(brackets.len());
    for (a, b) in brackets {
        let (ra, rb) = (resid(a)?, resid(b)?);
        if !(ra > 0.0 && rb < 0.0) {
            return Err(Error::NoRootCertified(format!(
                "chi - c does not change sign on [{a}, {b}] ({ra:e}, {rb:e})"
            )));
        }
        let r = decreasing_root(&resid, a, b, 1e-14 * scale)?;
        let res = resid(r)?.abs();
        if res > ROOT_REL * scale {
            return Err(Error::NoRootCertified(format!("residual {res:e} at {r}")));
        }
        roots.push(r);
    }
    Ok(roots)
}
