//! Phase transformations and synchrosqueezing onto a linear frequency grid.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::cwt::{adaptive_cwt_bundle, d_scale_array, Kernel, ScaleGrid, SigmaQuantizer, TimeScalePlane};
use crate::error::{Error, Result};
use crate::signals::Signal;
use crate::wavelets::WaveletParams;

/// Default validity threshold relative to the plane maximum.
pub const DEFAULT_GAMMA_REL: f64 = 1e-5;

/// Per-cell reference instantaneous frequency (Hz) and validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePlane {
    omega: Array2<f64>,
    valid: Array2<bool>,
}

impl PhasePlane {
    pub fn omega(&self) -> &Array2<f64> {
        &self.omega
    }

    pub fn valid(&self) -> &Array2<bool> {
        &self.valid
    }

    pub fn dim(&self) -> (usize, usize) {
        self.omega.dim()
    }
}

/// Which phase-transformation formula to use on a plane with a
/// time-varying window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseRule {
    /// Includes the window-rate terms of the adaptive transform.
    Adaptive,
    /// The constant-window formulas applied column by column, with the
    /// window held fixed when differentiating in time.
    Conventional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SstOrder {
    First,
    Second,
}

/// Options for [`synchrosqueeze`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SstConfig {
    pub order: SstOrder,
    pub rule: PhaseRule,
    pub gamma_rel: f64,
    /// Branch threshold for the second-order correction; `None` picks
    /// `1e-8 * median |∂_a(a W^{g1}/W)|` over valid cells.
    pub eps_denom: Option<f64>,
    pub quantizer: SigmaQuantizer,
    /// Number of frequency bins over `[0, fs/2)`; `None` means `N/2`.
    pub freq_bins: Option<usize>,
}

impl Default for SstConfig {
    fn default() -> Self {
        SstConfig {
            order: SstOrder::Second,
            rule: PhaseRule::Adaptive,
            gamma_rel: DEFAULT_GAMMA_REL,
            eps_denom: None,
            quantizer: SigmaQuantizer::Exact,
            freq_bins: None,
        }
    }
}

/// Synchrosqueezed plane `[n_bins x n_times]`; bin `k` covers
/// `[k Δξ, (k+1) Δξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFreqPlane {
    data: Array2<Complex64>,
    bin_width: f64,
    sigma: Vec<f64>,
    leak: Vec<Complex64>,
    t0: f64,
    sample_rate: f64,
}

impl TimeFreqPlane {
    pub(crate) fn from_parts(
        data: Array2<Complex64>,
        bin_width: f64,
        sigma: Vec<f64>,
        leak: Vec<Complex64>,
        t0: f64,
        sample_rate: f64,
    ) -> Result<Self> {
        let nt = data.ncols();
        if sigma.len() != nt || leak.len() != nt {
            return Err(Error::LengthMismatch { expected: nt, found: sigma.len().min(leak.len()) });
        }
        if !(bin_width > 0.0) {
            return Err(Error::invalid("bin width must be positive"));
        }
        Ok(TimeFreqPlane { data, bin_width, sigma, leak, t0, sample_rate })
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn n_bins(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_times(&self) -> usize {
        self.data.ncols()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Lower edge of bin `k` in Hz.
    pub fn frequency(&self, k: usize) -> f64 {
        k as f64 * self.bin_width
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_bins()).map(|k| self.frequency(k)).collect()
    }

    /// Bin containing frequency `f`, if inside the grid.
    pub fn bin_of(&self, f: f64) -> Option<usize> {
        if f >= 0.0 {
            let k = (f / self.bin_width).floor() as usize;
            (k < self.n_bins()).then_some(k)
        } else {
            None
        }
    }

    /// Window width used at each time.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Per-column mass of cells that were not assigned to any bin (invalid
    /// or with a phase outside `[0, fs/2)`), weighted by `Δa/a`.
    pub fn leak(&self) -> &[Complex64] {
        &self.leak
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.sample_rate
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_times()).map(|n| self.time(n)).collect()
    }

    pub fn column_sums(&self) -> Vec<Complex64> {
        (0..self.n_times()).map(|n| self.data.column(n).sum()).collect()
    }

    pub fn magnitude(&self) -> Array2<f64> {
        self.data.mapv(|z| z.norm())
    }
}

/// Cells with `|W| > gamma_rel * max|W|`.
pub fn validity_mask(w: &TimeScalePlane, gamma_rel: f64) -> Result<Array2<bool>> {
    if !(gamma_rel > 0.0 && gamma_rel.is_finite()) {
        return Err(Error::invalid(format!("gamma_rel must be positive, got {gamma_rel}")));
    }
    let threshold = gamma_rel * w.max_abs();
    Ok(w.data().mapv(|z| z.norm() > threshold))
}

fn ratio(num: &Array2<Complex64>, den: &Array2<Complex64>) -> Array2<Complex64> {
    Zip::from(num).and(den).map_collect(|&n, &d| if d.norm_sqr() > 0.0 { n / d } else { Complex64::new(0.0, 0.0) })
}

/// `Re{z / (i 2 pi)}`.
fn re_over_i2pi(z: Complex64) -> f64 {
    z.im / (2.0 * PI)
}

fn check_kernel(plane: &TimeScalePlane, kernel: Kernel) -> Result<()> {
    if plane.kernel() != kernel {
        return Err(Error::GridMismatch(format!(
            "expected a {} plane, got {}",
            kernel.name(),
            plane.kernel().name()
        )));
    }
    Ok(())
}

fn first_order(
    w: &TimeScalePlane,
    w_db: &TimeScalePlane,
    w_g2: Option<&TimeScalePlane>,
) -> Array2<f64> {
    let mut omega = ratio(w_db.data(), w.data()).mapv(re_over_i2pi);
    if let Some(w_g2) = w_g2 {
        let r2 = ratio(w_g2.data(), w.data());
        for (n, (&s, &ds)) in w.sigma().iter().zip(w.sigma_rate()).enumerate() {
            let rho = ds / s;
            if rho != 0.0 {
                let mut col = omega.column_mut(n);
                col.zip_mut_with(&r2.column(n), |o, &z| *o += rho * re_over_i2pi(z));
            }
        }
    }
    omega
}

/// Conventional phase transform `Re{∂_b W / (i 2 pi W)}`.
pub fn phase_conventional(w: &TimeScalePlane, w_db: &TimeScalePlane, gamma_rel: f64) -> Result<PhasePlane> {
    check_kernel(w, Kernel::G)?;
    check_kernel(w_db, Kernel::TimeDerivative)?;
    w.check_aligned(w_db)?;
    let valid = validity_mask(w, gamma_rel)?;
    Ok(PhasePlane { omega: first_order(w, w_db, None), valid })
}

/// First-order adaptive phase transform
/// `Re{∂_b W/(i2πW)} + (σ'/σ) Re{W^{g2}/(i2πW)}`.
pub fn phase_adaptive(
    w: &TimeScalePlane,
    w_db: &TimeScalePlane,
    w_g2: &TimeScalePlane,
    gamma_rel: f64,
) -> Result<PhasePlane> {
    check_kernel(w, Kernel::G)?;
    check_kernel(w_db, Kernel::TimeDerivative)?;
    check_kernel(w_g2, Kernel::G2)?;
    w.check_aligned(w_db)?;
    w.check_aligned(w_g2)?;
    let valid = validity_mask(w, gamma_rel)?;
    Ok(PhasePlane { omega: first_order(w, w_db, Some(w_g2)), valid })
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Shared second-order correction: `omega1 - a Re{ (W^{g1}/(i2πW)) R0 }`
/// where `R0 = num / ∂_a(a W^{g1}/W)`, used when the denominator exceeds
/// the branch threshold.
fn second_order(
    w: &TimeScalePlane,
    w_g1: &Array2<Complex64>,
    num: Array2<Complex64>,
    omega1: Array2<f64>,
    valid: &Array2<bool>,
    eps_denom: Option<f64>,
) -> Result<Array2<f64>> {
    let scales = w.scales();
    let r1 = ratio(w_g1, w.data());
    let a_r1 = Array2::from_shape_fn(r1.dim(), |(j, n)| r1[[j, n]] * scales[j]);
    let denom = d_scale_array(a_r1.view(), scales)?;
    let eps = match eps_denom {
        Some(e) if e >= 0.0 => e,
        Some(e) => return Err(Error::invalid(format!("eps_denom must be non-negative, got {e}"))),
        None => {
            let mags = denom.iter().zip(valid.iter()).filter(|(_, &v)| v).map(|(d, _)| d.norm()).collect();
            1e-8 * median(mags)
        }
    };
    let mut omega = omega1;
    Zip::indexed(&mut omega).for_each(|(j, n), o| {
        let d = denom[[j, n]];
        if d.norm() > eps {
            let r0 = num[[j, n]] / d;
            *o -= scales[j] * re_over_i2pi(r1[[j, n]] * r0);
        }
    });
    Ok(omega)
}

/// Second-order adaptive phase transform with the `R0` correction.
pub fn phase_adaptive_2nd(
    w: &TimeScalePlane,
    w_db: &TimeScalePlane,
    w_g1: &TimeScalePlane,
    w_g2: &TimeScalePlane,
    gamma_rel: f64,
    eps_denom: Option<f64>,
) -> Result<PhasePlane> {
    check_kernel(w, Kernel::G)?;
    check_kernel(w_db, Kernel::TimeDerivative)?;
    check_kernel(w_g1, Kernel::G1)?;
    check_kernel(w_g2, Kernel::G2)?;
    for p in [w_db, w_g1, w_g2] {
        w.check_aligned(p)?;
    }
    let valid = validity_mask(w, gamma_rel)?;
    let omega1 = first_order(w, w_db, Some(w_g2));
    let scales = w.scales();
    let mut num = d_scale_array(ratio(w_db.data(), w.data()).view(), scales)?;
    if w.sigma_rate().iter().any(|&r| r != 0.0) {
        let d2 = d_scale_array(ratio(w_g2.data(), w.data()).view(), scales)?;
        for (n, (&s, &ds)) in w.sigma().iter().zip(w.sigma_rate()).enumerate() {
            let rho = ds / s;
            num.column_mut(n).zip_mut_with(&d2.column(n), |z, &v| *z += v * rho);
        }
    }
    let omega = second_order(w, w_g1.data(), num, omega1, &valid, eps_denom)?;
    Ok(PhasePlane { omega, valid })
}

/// Conventional second-order phase transform built from the `t psi(t)`
/// plane: `U = ∂_a(a W^{ψ1}/W)`.
pub fn phase_conventional_2nd(
    w: &TimeScalePlane,
    w_db: &TimeScalePlane,
    w_psi1: &TimeScalePlane,
    gamma_rel: f64,
    eps_denom: Option<f64>,
) -> Result<PhasePlane> {
    check_kernel(w, Kernel::G)?;
    check_kernel(w_db, Kernel::TimeDerivative)?;
    check_kernel(w_psi1, Kernel::Psi1)?;
    w.check_aligned(w_db)?;
    w.check_aligned(w_psi1)?;
    let valid = validity_mask(w, gamma_rel)?;
    let omega1 = first_order(w, w_db, None);
    let num = d_scale_array(ratio(w_db.data(), w.data()).view(), w.scales())?;
    // W^{ψ1}/U equals W^{g1}/∂_a(a W^{g1}/W) since W^{ψ1} = σ W^{g1}
    let omega = second_order(w, w_psi1.data(), num, omega1, &valid, eps_denom)?;
    Ok(PhasePlane { omega, valid })
}

/// Reassign each valid cell's `W Δa/a` to the bin containing its phase.
pub fn squeeze(w: &TimeScalePlane, phase: &PhasePlane, freq_bins: usize) -> Result<TimeFreqPlane> {
    if freq_bins < 2 {
        return Err(Error::invalid(format!("need at least 2 frequency bins, got {freq_bins}")));
    }
    if phase.dim() != w.data().dim() {
        return Err(Error::GridMismatch(format!("phase {:?} vs plane {:?}", phase.dim(), w.data().dim())));
    }
    let fs = w.sample_rate();
    let bin_width = 0.5 * fs / freq_bins as f64;
    let weights = w.grid().log_weights();
    let nt = w.n_times();
    let mut data = Array2::zeros((freq_bins, nt));
    let mut leak = vec![Complex64::new(0.0, 0.0); nt];
    for n in 0..nt {
        for (j, &wj) in weights.iter().enumerate() {
            let v = w.data()[[j, n]] * wj;
            let om = phase.omega[[j, n]];
            let bin = if phase.valid[[j, n]] && om.is_finite() && om >= 0.0 {
                let k = (om / bin_width).floor();
                (k < freq_bins as f64).then_some(k as usize)
            } else {
                None
            };
            match bin {
                Some(k) => data[[k, n]] += v,
                None => leak[n] += v,
            }
        }
    }
    TimeFreqPlane::from_parts(data, bin_width, w.sigma().to_vec(), leak, w.t0(), fs)
}

/// Everything produced by one synchrosqueezing run.
#[derive(Debug, Clone)]
pub struct SstOutput {
    pub cwt: TimeScalePlane,
    pub phase: PhasePlane,
    pub tf: TimeFreqPlane,
}

/// Adaptive CWT, phase transformation and squeezing in one call.
pub fn synchrosqueeze(
    x: &Signal,
    sigma_of_b: &[f64],
    params: &WaveletParams,
    grid: &ScaleGrid,
    config: &SstConfig,
) -> Result<SstOutput> {
    let varying = sigma_of_b.windows(2).any(|p| p[0] != p[1]);
    let mut kernels = vec![Kernel::G, Kernel::TimeDerivative];
    // G2 is needed for the adaptive rate terms and to undo them for the
    // conventional rule
    if varying {
        kernels.push(Kernel::G2);
    }
    if config.order == SstOrder::Second {
        kernels.push(match config.rule {
            PhaseRule::Adaptive => Kernel::G1,
            PhaseRule::Conventional => Kernel::Psi1,
        });
    }
    let planes = adaptive_cwt_bundle(x, sigma_of_b, params, grid, &kernels, config.quantizer)?;
    let get = |k: Kernel| planes.iter().find(|p| p.kernel() == k).expect("kernel computed");
    let (w, w_db) = (get(Kernel::G), get(Kernel::TimeDerivative));
    let g2 = if varying {
        get(Kernel::G2).clone()
    } else {
        w.with_data(Array2::zeros(w.data().dim()), Kernel::G2)?
    };
    let phase = match (config.rule, config.order) {
        (PhaseRule::Adaptive, SstOrder::First) => phase_adaptive(w, w_db, &g2, config.gamma_rel)?,
        (PhaseRule::Adaptive, SstOrder::Second) => {
            phase_adaptive_2nd(w, w_db, get(Kernel::G1), &g2, config.gamma_rel, config.eps_denom)?
        }
        (PhaseRule::Conventional, order) => {
            let frozen = frozen_time_derivative(w, w_db, &g2)?;
            match order {
                SstOrder::First => phase_conventional(w, &frozen, config.gamma_rel)?,
                SstOrder::Second => {
                    phase_conventional_2nd(w, &frozen, get(Kernel::Psi1), config.gamma_rel, config.eps_denom)?
                }
            }
        }
    };
    let bins = config.freq_bins.unwrap_or(x.len() / 2).max(2);
    let tf = squeeze(w, &phase, bins)?;
    Ok(SstOutput { cwt: w.clone(), phase, tf })
}

/// Time derivative with the window width held fixed at each column:
/// `∂_b W + (σ'/σ)(W + W^{g2})`.
pub fn frozen_time_derivative(
    w: &TimeScalePlane,
    w_db: &TimeScalePlane,
    w_g2: &TimeScalePlane,
) -> Result<TimeScalePlane> {
    w.check_aligned(w_db)?;
    w.check_aligned(w_g2)?;
    let mut d = w_db.data().clone();
    for (n, (&s, &ds)) in w.sigma().iter().zip(w.sigma_rate()).enumerate() {
        let rho = ds / s;
        if rho != 0.0 {
            let extra = (&w.data().column(n) + &w_g2.data().column(n)) * Complex64::new(rho, 0.0);
            d.column_mut(n).zip_mut_with(&extra, |z, &e| *z += e);
        }
    }
    w_db.with_data(d, Kernel::TimeDerivative)
}
