//! Support zones of linear-chirp components and the window widths that keep
//! adjacent zones apart.
//!
//! Laws are ordered by increasing instantaneous frequency. Component `k`
//! then sits at smaller scales than component `k-1`, and the pair is
//! separated when the upper scale boundary `u_k` of the faster component does
//! not exceed the lower boundary `l_{k-1}` of the slower one.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signals::IfLaw;
use crate::wavelets::WaveletParams;

/// Quadratic `alpha_k s^2 - beta_k s + gamma_k <= 0` describing the window
/// widths `s` that separate one adjacent pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneCoefficients {
    pub alpha_k: f64,
    pub beta_k: f64,
    pub gamma_k: f64,
    pub upsilon_k: f64,
}

impl ZoneCoefficients {
    /// Coefficients for the pair `(f_lo, r_lo)` (component `k-1`) and
    /// `(f_hi, r_hi)` (component `k`), with IFs in Hz and chirp rates in Hz/s.
    pub fn new(f_lo: f64, r_lo: f64, f_hi: f64, r_hi: f64, params: &WaveletParams) -> Self {
        let (al, mu) = (params.alpha(), params.mu());
        let (ra, rb) = (r_lo.abs(), r_hi.abs());
        let cross = f_hi * ra + f_lo * rb;
        let alpha_k = 2.0 * PI * al * mu * (ra + rb).powi(2);
        let beta_k = cross * (f_hi - f_lo) + 4.0 * PI * al * al * (r_hi * r_hi - r_lo * r_lo);
        let gamma_k = al / mu * (cross * (f_hi + f_lo) + 2.0 * PI * al * al * (rb - ra).powi(2));
        let upsilon_k = beta_k * beta_k - 4.0 * alpha_k * gamma_k;
        ZoneCoefficients { alpha_k, beta_k, gamma_k, upsilon_k }
    }

    /// Closed-form factorisation of the discriminant.
    pub fn upsilon_factored(f_lo: f64, r_lo: f64, f_hi: f64, r_hi: f64, params: &WaveletParams) -> f64 {
        let (ra, rb) = (r_lo.abs(), r_hi.abs());
        let cross = f_hi * ra + f_lo * rb;
        let al = params.alpha();
        cross * cross * ((f_hi - f_lo).powi(2) - 16.0 * PI * al * al * (ra + rb))
    }

    /// Interval of separating widths, if the discriminant allows one.
    pub fn roots(&self) -> Option<(f64, f64)> {
        if self.upsilon_k < 0.0 || self.alpha_k == 0.0 {
            return None;
        }
        let s = self.upsilon_k.sqrt();
        Some(((self.beta_k - s) / (2.0 * self.alpha_k), (self.beta_k + s) / (2.0 * self.alpha_k)))
    }
}

/// Exact set of widths `[lo, hi]` at which the pair does not overlap.
///
/// The lower end is the smaller root of the quadratic (or `alpha/mu`). The
/// larger root can be an artefact of squaring: when the zones are still
/// disjoint just past it, the interval runs on until `u_k` stops existing,
/// at `sigma = (f_hi^2 / (8 pi alpha |r_hi|) - alpha) / mu`.
pub fn separating_interval(f_lo: f64, r_lo: f64, f_hi: f64, r_hi: f64, params: &WaveletParams) -> Option<(f64, f64)> {
    if !(f_hi > f_lo && f_lo > 0.0) {
        return None;
    }
    let (al, mu) = (params.alpha(), params.mu());
    let floor = params.min_sigma();
    if r_lo == 0.0 && r_hi == 0.0 {
        return Some((sinusoidal_bound(f_lo, f_hi, params), f64::INFINITY));
    }
    let (lo, hi) = ZoneCoefficients::new(f_lo, r_lo, f_hi, r_hi, params).roots()?;
    let lo = lo.max(floor);
    let s_max = if r_hi == 0.0 { f64::INFINITY } else { (f_hi * f_hi / (8.0 * PI * al * r_hi.abs()) - al) / mu };
    let disjoint = |s: f64| match (lower_bound(f_lo, r_lo, s, params), upper_bound(f_hi, r_hi, s, params)) {
        (Ok(l), Ok(u)) => u <= l,
        _ => false,
    };
    let hi = if hi < s_max && !disjoint(hi * (1.0 + 1e-7)) { hi } else { s_max };
    (lo <= hi).then_some((lo, hi))
}

/// Upper scale boundary `u` of the support zone of a component with IF
/// `phi1` and chirp rate `phi2` at window width `sigma`.
pub fn upper_bound(phi1: f64, phi2: f64, sigma: f64, params: &WaveletParams) -> Result<f64> {
    check_freq(phi1)?;
    params.check_sigma(sigma)?;
    let (al, mu) = (params.alpha(), params.mu());
    let rad = phi1 * phi1 - 8.0 * PI * al * (al + mu * sigma) * phi2.abs();
    if rad < 0.0 {
        return Err(Error::ZoneUndefined { sigma, freq: phi1, rate: phi2 });
    }
    Ok(2.0 * (mu + al / sigma) / (phi1 + rad.sqrt()))
}

/// Lower scale boundary `l`; defined for every admissible width.
pub fn lower_bound(phi1: f64, phi2: f64, sigma: f64, params: &WaveletParams) -> Result<f64> {
    check_freq(phi1)?;
    params.check_sigma(sigma)?;
    let (al, mu) = (params.alpha(), params.mu());
    let rad = phi1 * phi1 + 8.0 * PI * al * (mu * sigma - al) * phi2.abs();
    Ok((2.0 * (mu - al / sigma) / (phi1 + rad.max(0.0).sqrt())).max(0.0))
}

/// Both boundaries `(l, u)` of the support zone.
pub fn zone_bounds(phi1: f64, phi2: f64, sigma: f64, params: &WaveletParams) -> Result<(f64, f64)> {
    let u = upper_bound(phi1, phi2, sigma, params)?;
    Ok((lower_bound(phi1, phi2, sigma, params)?, u))
}

fn check_freq(phi1: f64) -> Result<()> {
    if !(phi1 > 0.0) {
        return Err(Error::invalid(format!("instantaneous frequency must be positive, got {phi1}")));
    }
    Ok(())
}

fn law_values(laws: &[IfLaw], b: f64) -> Result<Vec<(f64, f64)>> {
    let v: Vec<(f64, f64)> = laws.iter().map(|l| (l.phi1(b), l.phi2(b))).collect();
    if v.iter().any(|&(f, r)| !f.is_finite() || !r.is_finite()) {
        return Err(Error::invalid(format!("non-finite IF law value at t={b}")));
    }
    Ok(v)
}

fn need_pairs(laws: &[IfLaw]) -> Result<()> {
    if laws.len() < 2 {
        return Err(Error::invalid(format!("need at least 2 laws, got {}", laws.len())));
    }
    Ok(())
}

fn sinusoidal_bound(f_lo: f64, f_hi: f64, params: &WaveletParams) -> f64 {
    params.alpha() / params.mu() * (f_hi + f_lo) / (f_hi - f_lo)
}

/// Smallest width separating every adjacent pair under the pure-tone model.
pub fn sigma1(laws: &[IfLaw], b: f64, params: &WaveletParams) -> Result<f64> {
    need_pairs(laws)?;
    let v = law_values(laws, b)?;
    let mut best = f64::NEG_INFINITY;
    for k in 1..v.len() {
        let (f_lo, f_hi) = (v[k - 1].0, v[k].0);
        if !(f_hi > f_lo) {
            return Err(Error::Unseparable { lower: k - 1, upper: k, time: b });
        }
        best = best.max(sinusoidal_bound(f_lo, f_hi, params));
    }
    Ok(best)
}

/// Outcome of the chirp-model width selection at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma2 {
    Separable {
        sigma: f64,
        /// Whether `4 alpha sqrt(pi (|r_k|+|r_{k-1}|)) <= f_k - f_{k-1}` holds
        /// for every pair with a nonzero rate.
        rate_condition: bool,
    },
    Unseparable {
        /// Index `k` of the upper component of the offending pair.
        pair: usize,
    },
}

impl Sigma2 {
    pub fn sigma(&self) -> Option<f64> {
        match *self {
            Sigma2::Separable { sigma, .. } => Some(sigma),
            Sigma2::Unseparable { .. } => None,
        }
    }
}

/// Smallest width separating every adjacent pair under the linear-chirp
/// model, or the first pair for which no width works.
pub fn sigma2(laws: &[IfLaw], b: f64, params: &WaveletParams) -> Result<Sigma2> {
    need_pairs(laws)?;
    let v = law_values(laws, b)?;
    let mut lower = params.min_sigma();
    let mut upper = f64::INFINITY;
    let mut upper_pair = 0;
    let mut rate_condition = true;
    for k in 1..v.len() {
        let ((f_lo, r_lo), (f_hi, r_hi)) = (v[k - 1], v[k]);
        if !(f_hi > f_lo) {
            return Ok(Sigma2::Unseparable { pair: k });
        }
        let rates = r_lo.abs() + r_hi.abs();
        if rates > 0.0 && 4.0 * params.alpha() * (PI * rates).sqrt() > f_hi - f_lo {
            rate_condition = false;
        }
        match separating_interval(f_lo, r_lo, f_hi, r_hi, params) {
            Some((lo, hi)) => {
                lower = lower.max(lo);
                if hi < upper {
                    upper = hi;
                    upper_pair = k;
                }
            }
            None => return Ok(Sigma2::Unseparable { pair: k }),
        }
    }
    if lower > upper {
        return Ok(Sigma2::Unseparable { pair: upper_pair });
    }
    Ok(Sigma2::Separable { sigma: lower, rate_condition })
}

/// Per-pair separation margins `l_{k-1} - u_k` at a given width.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub separated: bool,
    pub margins: Vec<f64>,
}

/// Whether the support zones of all adjacent pairs are disjoint at `sigma`.
/// Margins down to `-1e-9 l_{k-1}` count as touching, not overlapping.
/// Only the boundaries facing a neighbour are evaluated, so a slow chirp at
/// the bottom of the stack whose `u` is undefined does not raise an error.
pub fn check_separated(laws: &[IfLaw], sigma: f64, b: f64, params: &WaveletParams) -> Result<Separation> {
    params.check_sigma(sigma)?;
    let v = law_values(laws, b)?;
    let mut separated = true;
    let mut margins = Vec::with_capacity(v.len().saturating_sub(1));
    for k in 1..v.len() {
        let l_prev = lower_bound(v[k - 1].0, v[k - 1].1, sigma, params)?;
        let u_k = upper_bound(v[k].0, v[k].1, sigma, params)?;
        let m = l_prev - u_k;
        if m < -1e-9 * l_prev.abs().max(f64::MIN_POSITIVE) {
            separated = false;
        }
        margins.push(m);
    }
    Ok(Separation { separated, margins })
}

/// One time step of a separability report.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparabilityRow {
    pub time: f64,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub margins: Vec<f64>,
}

/// `sigma1`, `sigma2` and the margins at `sigma2` for each time.
pub fn separability_track(laws: &[IfLaw], times: &[f64], params: &WaveletParams) -> Result<Vec<SeparabilityRow>> {
    need_pairs(laws)?;
    times
        .iter()
        .map(|&b| {
            let s1 = match sigma1(laws, b, params) {
                Ok(s) => Some(s),
                Err(Error::Unseparable { .. }) => None,
                Err(e) => return Err(e),
            };
            let s2 = sigma2(laws, b, params)?.sigma();
            let margins = match s2 {
                Some(s) => match check_separated(laws, s, b, params) {
                    Ok(sep) => sep.margins,
                    Err(Error::ZoneUndefined { .. }) => vec![f64::NAN; laws.len() - 1],
                    Err(e) => return Err(e),
                },
                None => vec![f64::NAN; laws.len() - 1],
            };
            Ok(SeparabilityRow { time: b, sigma1: s1, sigma2: s2, margins })
        })
        .collect()
}
