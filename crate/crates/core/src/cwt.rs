//! Adaptive continuous wavelet transform.
//!
//! Every plane is evaluated in the frequency domain: the signal is zero-padded
//! to `M = next_pow2(2N)`, transformed once, multiplied per scale by the
//! kernel's Fourier multiplier on the non-negative frequencies and inverted.
//! A time-varying window is assembled column by column from constant-width
//! planes, one per distinct (quantized) window width.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signals::{LfmComponent, Signal};
use crate::wavelets::{g_hat, WaveletParams};

/// Dyadic scale grid `a_j = 2^{j/n_voices} dt`, `j = 1..=n_voices*floor(log2 N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    values: Vec<f64>,
    n_voices: usize,
    dt: f64,
}

impl ScaleGrid {
    pub fn new(n_samples: usize, n_voices: usize, dt: f64) -> Result<Self> {
        if n_samples < 2 {
            return Err(Error::invalid(format!("need at least 2 samples, got {n_samples}")));
        }
        if n_voices == 0 {
            return Err(Error::invalid("n_voices must be at least 1"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        let octaves = usize::BITS - 1 - n_samples.leading_zeros();
        let count = n_voices * octaves as usize;
        let values = (1..=count).map(|j| 2f64.powf(j as f64 / n_voices as f64) * dt).collect();
        Ok(ScaleGrid { values, n_voices, dt })
    }

    /// Grid matching a signal's length and sampling step.
    pub fn for_signal(x: &Signal, n_voices: usize) -> Result<Self> {
        Self::new(x.len(), n_voices, x.dt())
    }

    pub(crate) fn from_parts(values: Vec<f64>, n_voices: usize, dt: f64) -> Result<Self> {
        if values.is_empty() || values.windows(2).any(|w| !(w[1] > w[0])) || values[0] <= 0.0 {
            return Err(Error::invalid("scales must be positive and strictly increasing"));
        }
        Ok(ScaleGrid { values, n_voices, dt })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_voices(&self) -> usize {
        self.n_voices
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Measure weights `Δa_j / a_j` with `Δa_j = a_{j+1} - a_j`; the last
    /// scale reuses the previous step.
    pub fn log_weights(&self) -> Vec<f64> {
        let a = &self.values;
        let n = a.len();
        (0..n)
            .map(|j| {
                let step = if j + 1 < n {
                    a[j + 1] - a[j]
                } else if n >= 2 {
                    a[j] - a[j - 1]
                } else {
                    0.0
                };
                step / a[j]
            })
            .collect()
    }
}

/// Convenience alias for [`ScaleGrid::new`].
pub fn make_scale_grid(n_samples: usize, n_voices: usize, dt: f64) -> Result<ScaleGrid> {
    ScaleGrid::new(n_samples, n_voices, dt)
}

/// Window kernel used to produce a plane.
///
/// `G1`, `G2` replace the Gaussian `g` by `t g(t)` and `t g'(t)`; `Psi1` is
/// the conventional `t psi(t)` wavelet, equal to `sigma` times the `G1`
/// plane. `TimeDerivative` is the derivative of the `G` plane in `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kernel {
    G,
    G1,
    G2,
    Psi1,
    TimeDerivative,
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::G => "g",
            Kernel::G1 => "g1",
            Kernel::G2 => "g2",
            Kernel::Psi1 => "psi1",
            Kernel::TimeDerivative => "dbg",
        }
    }

    pub fn from_name(name: &str) -> Option<Kernel> {
        [Kernel::G, Kernel::G1, Kernel::G2, Kernel::Psi1, Kernel::TimeDerivative]
            .into_iter()
            .find(|k| k.name() == name)
    }
}

/// How per-time window widths are mapped onto the widths actually computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaQuantizer {
    /// Every distinct requested value gets its own plane.
    Exact,
    /// Round to `origin + k*step`.
    Grid { origin: f64, step: f64 },
}

impl SigmaQuantizer {
    /// Quantize `sigma`, bumping up by whole steps if rounding fell below `bound`.
    pub fn apply(&self, sigma: f64, bound: f64) -> f64 {
        match *self {
            SigmaQuantizer::Exact => sigma,
            SigmaQuantizer::Grid { origin, step } => {
                let mut k = ((sigma - origin) / step).round();
                let mut q = origin + k * step;
                while q < bound * (1.0 - 1e-12) {
                    k += 1.0;
                    q = origin + k * step;
                }
                q
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let SigmaQuantizer::Grid { origin, step } = *self {
            if !(origin.is_finite() && step.is_finite() && step > 0.0) {
                return Err(Error::invalid(format!("bad sigma quantizer origin={origin} step={step}")));
            }
        }
        Ok(())
    }
}

/// Complex time-scale plane `[n_scales x n_times]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScalePlane {
    data: Array2<Complex64>,
    grid: ScaleGrid,
    kernel: Kernel,
    sigma: Vec<f64>,
    sigma_rate: Vec<f64>,
    t0: f64,
    sample_rate: f64,
}

impl TimeScalePlane {
    pub(crate) fn from_parts(
        data: Array2<Complex64>,
        grid: ScaleGrid,
        kernel: Kernel,
        sigma: Vec<f64>,
        sigma_rate: Vec<f64>,
        t0: f64,
        sample_rate: f64,
    ) -> Result<Self> {
        let (ns, nt) = data.dim();
        if ns != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), found: ns });
        }
        if sigma.len() != nt || sigma_rate.len() != nt {
            return Err(Error::LengthMismatch { expected: nt, found: sigma.len().min(sigma_rate.len()) });
        }
        Ok(TimeScalePlane { data, grid, kernel, sigma, sigma_rate, t0, sample_rate })
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn scales(&self) -> &[f64] {
        self.grid.values()
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Window width actually used at each time.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// `d sigma / d b` of the requested track, in 1/s.
    pub fn sigma_rate(&self) -> &[f64] {
        &self.sigma_rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn n_scales(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_times(&self) -> usize {
        self.data.ncols()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.sample_rate
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_times()).map(|n| self.time(n)).collect()
    }

    pub fn magnitude(&self) -> Array2<f64> {
        self.data.mapv(|z| z.norm())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Per-column `sum_j W(a_j, b) Δa_j / a_j`.
    pub fn weighted_column_sums(&self) -> Vec<Complex64> {
        let w = self.grid.log_weights();
        (0..self.n_times())
            .map(|n| self.data.column(n).iter().zip(&w).map(|(z, &wj)| z * wj).sum())
            .collect()
    }

    /// Same plane metadata with new cell values.
    pub fn with_data(&self, data: Array2<Complex64>, kernel: Kernel) -> Result<Self> {
        if data.dim() != self.data.dim() {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", data.dim(), self.data.dim())));
        }
        Ok(TimeScalePlane { data, kernel, ..self.clone_meta() })
    }

    fn clone_meta(&self) -> Self {
        TimeScalePlane {
            data: Array2::zeros((0, 0)),
            grid: self.grid.clone(),
            kernel: self.kernel,
            sigma: self.sigma.clone(),
            sigma_rate: self.sigma_rate.clone(),
            t0: self.t0,
            sample_rate: self.sample_rate,
        }
    }

    /// Error unless both planes share grid, window track and time axis.
    pub fn check_aligned(&self, other: &TimeScalePlane) -> Result<()> {
        if self.data.dim() != other.data.dim() {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.data.dim(), other.data.dim())));
        }
        if self.grid != other.grid {
            return Err(Error::GridMismatch("scale grids differ".into()));
        }
        if self.sigma != other.sigma || self.sigma_rate != other.sigma_rate {
            return Err(Error::GridMismatch("window tracks differ".into()));
        }
        if self.t0 != other.t0 || self.sample_rate != other.sample_rate {
            return Err(Error::GridMismatch("time axes differ".into()));
        }
        Ok(())
    }

    /// True when the cell is free of edge effects: the cell sits at least
    /// `1.5 L` from both ends of the record (`L = 4 pi alpha sigma a`), and
    /// the wavelet spectrum has decayed to `tau0^9` at the Nyquist frequency,
    /// i.e. `(mu + 3 alpha / sigma) / a <= fs / 2`.
    pub fn is_interior(&self, j: usize, n: usize, params: &WaveletParams) -> bool {
        let (a, sigma) = (self.grid.values[j], self.sigma[n]);
        let l = 1.5 * 4.0 * PI * params.alpha() * sigma * a;
        let t = n as f64 / self.sample_rate;
        let end = (self.n_times() - 1) as f64 / self.sample_rate;
        let resolved = (params.mu() + 3.0 * params.alpha() / sigma) / a <= 0.5 * self.sample_rate;
        resolved && t >= l && end - t >= l
    }
}

/// Internal multipliers: the public kernels plus `4 pi^2 eta^2 g_hat(eta)`,
/// the transform of `g + g2` needed for the total time derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Mult {
    K(Kernel),
    Dilation,
}

fn multiplier(m: Mult, eta: f64, xi: f64, sigma: f64) -> Complex64 {
    let gh = g_hat(eta);
    match m {
        Mult::K(Kernel::G) => Complex64::new(gh, 0.0),
        Mult::K(Kernel::G1) => Complex64::new(0.0, -2.0 * PI * eta * gh),
        Mult::K(Kernel::Psi1) => Complex64::new(0.0, -2.0 * PI * eta * gh * sigma),
        Mult::K(Kernel::G2) => Complex64::new((4.0 * PI * PI * eta * eta - 1.0) * gh, 0.0),
        Mult::K(Kernel::TimeDerivative) => Complex64::new(0.0, 2.0 * PI * xi * gh),
        Mult::Dilation => Complex64::new(4.0 * PI * PI * eta * eta * gh, 0.0),
    }
}

/// Zero-padded spectrum of a signal, shared by all planes computed from it.
struct Spectrum {
    x: Vec<Complex64>,
    m: usize,
    fs: f64,
    inverse: Arc<dyn Fft<f64>>,
    twiddle: Vec<Complex64>,
}

impl Spectrum {
    fn new(x: &Signal) -> Self {
        let n = x.len();
        let m = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        buf[..n].copy_from_slice(x.samples());
        forward.process(&mut buf);
        let twiddle = (0..m).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)).collect();
        Spectrum { x: buf, m, fs: x.sample_rate(), inverse, twiddle }
    }

    /// Plane values at scale `a` for each requested multiplier, restricted
    /// to the columns `cols`. Few columns are summed directly, otherwise a
    /// full inverse transform is taken.
    fn rows(&self, a: f64, sigma: f64, mu: f64, mults: &[Mult], cols: &[usize]) -> Vec<Vec<Complex64>> {
        let half = self.m / 2;
        let scale = 1.0 / self.m as f64;
        let direct = cols.len() * 4 < self.m.trailing_zeros() as usize;
        mults
            .iter()
            .map(|&mult| {
                let spec = (0..=half).map(|k| {
                    let xi = k as f64 * self.fs / self.m as f64;
                    self.x[k] * multiplier(mult, sigma * (mu - a * xi), xi, sigma) * scale
                });
                if direct {
                    let spec: Vec<Complex64> = spec.collect();
                    cols.iter()
                        .map(|&n| {
                            spec.iter()
                                .enumerate()
                                .map(|(k, v)| v * self.twiddle[(k * n) % self.m])
                                .sum()
                        })
                        .collect()
                } else {
                    let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
                    for (slot, v) in buf.iter_mut().zip(spec) {
                        *slot = v;
                    }
                    self.inverse.process(&mut buf);
                    cols.iter().map(|&n| buf[n]).collect()
                }
            })
            .collect()
    }
}

/// Central differences of a track sampled at `fs`, one-sided at the ends.
pub(crate) fn track_rate(track: &[f64], fs: f64) -> Vec<f64> {
    let n = track.len();
    (0..n)
        .map(|i| {
            if n < 2 {
                0.0
            } else if i == 0 {
                (track[1] - track[0]) * fs
            } else if i == n - 1 {
                (track[n - 1] - track[n - 2]) * fs
            } else {
                (track[i + 1] - track[i - 1]) * fs * 0.5
            }
        })
        .collect()
}

/// Adaptive CWT planes for several kernels from one shared spectrum.
///
/// The `TimeDerivative` plane is the total derivative in `b`, including the
/// change of window width: `D - (sigma'/sigma)(W + W^{g2})` where `D` is the
/// derivative with the window frozen.
pub fn adaptive_cwt_bundle(
    x: &Signal,
    sigma_of_b: &[f64],
    params: &WaveletParams,
    grid: &ScaleGrid,
    kernels: &[Kernel],
    quantizer: SigmaQuantizer,
) -> Result<Vec<TimeScalePlane>> {
    let n = x.len();
    if sigma_of_b.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: sigma_of_b.len() });
    }
    quantizer.validate()?;
    for &s in sigma_of_b {
        params.check_sigma(s)?;
    }
    let bound = params.min_sigma();
    let effective: Vec<f64> = sigma_of_b.iter().map(|&s| quantizer.apply(s, bound)).collect();
    let rate = track_rate(sigma_of_b, x.sample_rate());

    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (b, s) in effective.iter().enumerate() {
        groups.entry(s.to_bits()).or_default().push(b);
    }
    let needs_dilation =
        kernels.contains(&Kernel::TimeDerivative) && rate.iter().any(|&r| r != 0.0);
    let mut mults: Vec<Mult> = kernels.iter().map(|&k| Mult::K(k)).collect();
    if needs_dilation {
        mults.push(Mult::Dilation);
    }
    mults.sort();
    mults.dedup();

    let spectrum = Spectrum::new(x);
    let scales = grid.values();
    let mu = params.mu();
    let groups: Vec<(f64, Vec<usize>)> = groups.into_iter().map(|(k, v)| (f64::from_bits(k), v)).collect();

    // per sigma group: rows[scale][mult] restricted to the group's columns
    let blocks: Vec<Vec<Vec<Vec<Complex64>>>> = groups
        .par_iter()
        .map(|(sigma, cols)| {
            scales
                .par_iter()
                .map(|&a| {
                    spectrum.rows(a, *sigma, mu, &mults, cols)
                })
                .collect()
        })
        .collect();

    let mut planes: Vec<Array2<Complex64>> = mults.iter().map(|_| Array2::zeros((scales.len(), n))).collect();
    for ((_, cols), block) in groups.iter().zip(&blocks) {
        for (j, per_mult) in block.iter().enumerate() {
            for (mi, vals) in per_mult.iter().enumerate() {
                for (&b, &v) in cols.iter().zip(vals) {
                    planes[mi][[j, b]] = v;
                }
            }
        }
    }

    if needs_dilation {
        let di = mults.iter().position(|&m| m == Mult::Dilation).expect("dilation requested");
        let ti = mults.iter().position(|&m| m == Mult::K(Kernel::TimeDerivative)).expect("derivative requested");
        let dil = std::mem::replace(&mut planes[di], Array2::zeros((0, 0)));
        let der = &mut planes[ti];
        for b in 0..n {
            let rho = rate[b] / effective[b];
            if rho != 0.0 {
                let mut col = der.column_mut(b);
                col.zip_mut_with(&dil.column(b), |d, &e| *d -= e * rho);
            }
        }
    }

    kernels
        .iter()
        .map(|&k| {
            let mi = mults.iter().position(|&m| m == Mult::K(k)).expect("kernel computed");
            TimeScalePlane::from_parts(
                planes[mi].clone(),
                grid.clone(),
                k,
                effective.clone(),
                rate.clone(),
                x.t0(),
                x.sample_rate(),
            )
        })
        .collect()
}

/// Adaptive CWT with per-time window width `sigma_of_b`.
pub fn adaptive_cwt(
    x: &Signal,
    sigma_of_b: &[f64],
    params: &WaveletParams,
    grid: &ScaleGrid,
    kernel: Kernel,
    quantizer: SigmaQuantizer,
) -> Result<TimeScalePlane> {
    let mut planes = adaptive_cwt_bundle(x, sigma_of_b, params, grid, &[kernel], quantizer)?;
    Ok(planes.remove(0))
}

/// Conventional CWT with a constant window width.
pub fn cwt_constant(
    x: &Signal,
    sigma: f64,
    params: &WaveletParams,
    grid: &ScaleGrid,
    kernel: Kernel,
) -> Result<TimeScalePlane> {
    adaptive_cwt(x, &vec![sigma; x.len()], params, grid, kernel, SigmaQuantizer::Exact)
}

/// Constant-width planes for several kernels at once.
pub fn cwt_constant_bundle(
    x: &Signal,
    sigma: f64,
    params: &WaveletParams,
    grid: &ScaleGrid,
    kernels: &[Kernel],
) -> Result<Vec<TimeScalePlane>> {
    adaptive_cwt_bundle(x, &vec![sigma; x.len()], params, grid, kernels, SigmaQuantizer::Exact)
}

/// Closed-form CWT of `A exp(i 2 pi (c t + r t^2 / 2))` at `(a, b)`.
pub fn chirp_cwt_closed_form(
    comp: &LfmComponent,
    a: f64,
    b: f64,
    sigma: f64,
    params: &WaveletParams,
) -> Result<Complex64> {
    if comp.p != 0.0 || comp.q != 0.0 {
        return Err(Error::invalid("closed form needs a constant amplitude (p = q = 0)"));
    }
    if !(a > 0.0) {
        return Err(Error::invalid(format!("scale must be positive, got {a}")));
    }
    params.check_sigma(sigma)?;
    let (c, r, mu) = (comp.c, comp.r, params.mu());
    let kappa = 2.0 * PI * sigma * sigma * a * a * r;
    let prefactor = comp.amplitude / Complex64::new(1.0, -kappa).sqrt();
    let carrier = Complex64::from_polar(1.0, 2.0 * PI * (c * b + 0.5 * r * b * b));
    let d = c + r * b - mu / a;
    let h = (-(2.0 * PI * PI * a * a * sigma * sigma) / (1.0 + kappa * kappa)
        * d
        * d
        * Complex64::new(1.0, kappa))
    .exp();
    Ok(prefactor * carrier * h)
}

/// Derivative along the scale axis on a non-uniform grid: three-point central
/// formula inside, three-point one-sided at both ends.
pub fn d_scale_array(data: ArrayView2<'_, Complex64>, scales: &[f64]) -> Result<Array2<Complex64>> {
    let ns = data.nrows();
    if ns != scales.len() {
        return Err(Error::LengthMismatch { expected: scales.len(), found: ns });
    }
    if ns < 3 {
        return Err(Error::TooFewScales(ns));
    }
    let mut out = Array2::zeros(data.dim());
    for j in 0..ns {
        let (idx, w) = if j == 0 {
            let (h1, h2) = (scales[1] - scales[0], scales[2] - scales[1]);
            (
                [0, 1, 2],
                [-(2.0 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))],
            )
        } else if j == ns - 1 {
            let (h1, h2) = (scales[j] - scales[j - 1], scales[j - 1] - scales[j - 2]);
            (
                [j, j - 1, j - 2],
                [(2.0 * h1 + h2) / (h1 * (h1 + h2)), -(h1 + h2) / (h1 * h2), h1 / (h2 * (h1 + h2))],
            )
        } else {
            let (h1, h2) = (scales[j] - scales[j - 1], scales[j + 1] - scales[j]);
            (
                [j - 1, j, j + 1],
                [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))],
            )
        };
        let mut row = out.row_mut(j);
        for (&i, &wi) in idx.iter().zip(&w) {
            row.zip_mut_with(&data.row(i), |o, &v| *o += v * wi);
        }
    }
    Ok(out)
}

/// `∂/∂a` of a plane; keeps the kernel tag of the input.
pub fn d_scale(plane: &TimeScalePlane) -> Result<TimeScalePlane> {
    let d = d_scale_array(plane.data.view(), plane.scales())?;
    plane.with_data(d, plane.kernel)
}

/// Sum of planes along the time axis, used by tests and diagnostics.
pub fn column_energy(plane: &TimeScalePlane) -> Vec<f64> {
    plane.data.axis_iter(Axis(1)).map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect()
}
