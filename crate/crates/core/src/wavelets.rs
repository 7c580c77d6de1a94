//! Simplified Morlet wavelet `psi_hat_sigma(xi) = exp(-2 pi^2 sigma^2 (xi - mu)^2)`
//! and the threshold-based support calculus built on its Gaussian window.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Fourier transform of the unit Gaussian window, `exp(-2 pi^2 xi^2)`.
pub fn g_hat(xi: f64) -> f64 {
    (-2.0 * PI * PI * xi * xi).exp()
}

/// Half-width `alpha` at which `g_hat(alpha) = tau0`.
pub fn alpha_from_tau0(tau0: f64) -> Result<f64> {
    if !(tau0 > 0.0 && tau0 < 1.0) {
        return Err(Error::invalid(format!("tau0 must lie in (0, 1), got {tau0}")));
    }
    Ok((2.0 * (1.0 / tau0).ln()).sqrt() / (2.0 * PI))
}

/// Morlet parameters: centre frequency `mu`, support threshold `tau0` and
/// the derived half-support `alpha` of the window spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletParams {
    mu: f64,
    tau0: f64,
    alpha: f64,
}

impl Default for WaveletParams {
    fn default() -> Self {
        WaveletParams::new(1.0, 0.2).expect("default wavelet parameters are valid")
    }
}

impl WaveletParams {
    pub fn new(mu: f64, tau0: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::invalid(format!("mu must be positive, got {mu}")));
        }
        let alpha = alpha_from_tau0(tau0)?;
        Ok(WaveletParams { mu, tau0, alpha })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Smallest admissible window parameter, `alpha / mu`.
    pub fn min_sigma(&self) -> f64 {
        self.alpha / self.mu
    }

    pub fn check_sigma(&self, sigma: f64) -> Result<()> {
        // a hair of slack so that sigma computed as alpha/mu passes
        let bound = self.min_sigma();
        if !(sigma.is_finite() && sigma >= bound * (1.0 - 1e-12)) {
            return Err(Error::SigmaBelowBound { sigma, bound });
        }
        Ok(())
    }

    pub fn psi_hat(&self, xi: f64, sigma: f64) -> Result<f64> {
        self.check_sigma(sigma)?;
        Ok(self.psi_hat_unchecked(xi, sigma))
    }

    pub(crate) fn psi_hat_unchecked(&self, xi: f64, sigma: f64) -> f64 {
        g_hat(sigma * (xi - self.mu))
    }

    /// Duration `4 pi alpha sigma a` of the scaled wavelet at scale `a`.
    pub fn window_duration(&self, a: f64, sigma: f64) -> Result<f64> {
        if !(a > 0.0) {
            return Err(Error::invalid(format!("scale must be positive, got {a}")));
        }
        self.check_sigma(sigma)?;
        Ok(4.0 * PI * self.alpha * sigma * a)
    }

    /// Reconstruction constant `c_psi = int_0^inf psi_hat_sigma(xi) dxi / xi`.
    ///
    /// The integrand behaves like `psi_hat(0) / xi` near the origin, so the
    /// integral is cut below at the interior minimum of `psi_hat(xi)/xi`,
    /// `xi_lo = mu (1 - sqrt(1 - 1/(pi sigma mu)^2)) / 2` (or `mu/2` when
    /// `sigma mu < 1/pi` and no minimum exists). The upper cut is where the
    /// Gaussian drops below 1e-16. In between, adaptive Simpson to 1e-13.
    pub fn c_psi(&self, sigma: f64) -> Result<Complex64> {
        self.check_sigma(sigma)?;
        let (lo, hi) = self.c_psi_limits(sigma);
        let f = |xi: f64| self.psi_hat_unchecked(xi, sigma) / xi;
        let value = adaptive_simpson(&f, lo, self.mu, 1e-14)? + adaptive_simpson(&f, self.mu, hi, 1e-14)?;
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Quadrature(format!("c_psi evaluated to {value} at sigma={sigma}")));
        }
        Ok(Complex64::new(value, 0.0))
    }

    /// Integration limits used by [`WaveletParams::c_psi`].
    pub fn c_psi_limits(&self, sigma: f64) -> (f64, f64) {
        let s = sigma * self.mu;
        let disc = 1.0 - 1.0 / (PI * PI * s * s);
        let lo = if disc > 0.0 { 0.5 * self.mu * (1.0 - disc.sqrt()) } else { 0.5 * self.mu };
        let hi = self.mu + (16.0 * 10f64.ln() / (2.0 * PI * PI)).sqrt() / sigma;
        (lo, hi)
    }
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if !delta.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        if depth == 0 {
            return Err(Error::Quadrature("recursion limit reached".into()));
        }
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}
