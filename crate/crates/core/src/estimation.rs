//! Blind selection of a time-varying window width.
//!
//! Each candidate width on a [`SigmaGrid`] gets one constant-width CWT.
//! From it we tabulate, per time, the Rényi entropy of the plane and whether
//! the support intervals of the detected components are disjoint. The
//! descent of Algorithm 1 then only reads these tables.

use ndarray::{ArrayView2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::cwt::{cwt_constant, Kernel, ScaleGrid, TimeScalePlane};
use crate::error::{Error, Result};
use crate::signals::Signal;
use crate::sst::{synchrosqueeze, PhaseRule, SstConfig, SstOrder, DEFAULT_GAMMA_REL};
use crate::wavelets::WaveletParams;

/// Uniform grid of candidate widths, stored in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaGrid {
    values: Vec<f64>,
    step: f64,
}

impl SigmaGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min > 0.0 && max >= min) {
            return Err(Error::invalid(format!("bad sigma range [{min}, {max}]")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid(format!("sigma step must be positive, got {step}")));
        }
        let n = ((max - min) / step).round() as usize + 1;
        // exact decimals when the step is 1/m for an integer m
        let m = (1.0 / step).round();
        let values = if (1.0 / step - m).abs() < 1e-9 && m > 0.0 {
            let top = (max * m).round();
            (0..n).map(|j| (top - j as f64) / m).collect()
        } else {
            (0..n).map(|j| max - j as f64 * step).collect()
        };
        Ok(SigmaGrid { values, step })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn validate(&self, params: &WaveletParams) -> Result<()> {
        params.check_sigma(self.min())
    }
}

/// Settings of the estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationConfig {
    pub grid: SigmaGrid,
    pub n_voices: usize,
    /// Half-width of the entropy window, in samples.
    pub zeta: usize,
    /// Rényi order.
    pub ell: f64,
    /// Peak threshold relative to the plane maximum.
    pub gamma3: f64,
    /// Smoothing weights, nonnegative and summing to one.
    pub smoothing: Vec<f64>,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            grid: SigmaGrid::new(0.5, 10.0, 0.05).expect("default grid is valid"),
            n_voices: 32,
            zeta: 4,
            ell: 2.5,
            gamma3: 0.2,
            smoothing: vec![0.2; 5],
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self, params: &WaveletParams) -> Result<()> {
        self.grid.validate(params)?;
        if self.n_voices == 0 {
            return Err(Error::invalid("n_voices must be at least 1"));
        }
        check_order(self.ell)?;
        if !(self.gamma3 > 0.0) {
            return Err(Error::invalid(format!("gamma3 must be positive, got {}", self.gamma3)));
        }
        check_weights(&self.smoothing)
    }
}

fn check_order(ell: f64) -> Result<()> {
    if !(ell.is_finite() && ell > 0.0 && ell != 1.0) {
        return Err(Error::invalid(format!("Renyi order must be positive and not 1, got {ell}")));
    }
    Ok(())
}

fn check_weights(b: &[f64]) -> Result<()> {
    let sum: f64 = b.iter().sum();
    if b.is_empty() || b.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("smoothing weights must be nonnegative and sum to 1"));
    }
    Ok(())
}

/// Result of the estimator, one entry per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaTrack {
    pub times: Vec<f64>,
    /// Entropy-minimising width.
    pub sigma_u: Vec<f64>,
    /// Width reached by the descent.
    pub c: Vec<f64>,
    /// `c` smoothed with `smoothing`.
    pub sigma_est: Vec<f64>,
    pub smoothing: Vec<f64>,
    /// Number of detected components at `sigma_u`.
    pub counts: Vec<usize>,
}

/// Rényi entropy of order `ell` of the cells in columns `t-zeta ..= t+zeta`
/// (clipped), with unit cell measure.
pub fn renyi_entropy(data: ArrayView2<'_, Complex64>, t: usize, zeta: usize, ell: f64) -> Result<f64> {
    check_order(ell)?;
    let n = data.ncols();
    if t >= n {
        return Err(Error::invalid(format!("time index {t} outside 0..{n}")));
    }
    let lo = t.saturating_sub(zeta);
    let hi = (t + zeta).min(n - 1);
    let (mut s2, mut sl) = (0.0, 0.0);
    for col in lo..=hi {
        let (a, b) = column_moments(data.column(col).iter().copied(), ell);
        s2 += a;
        sl += b;
    }
    entropy_from_moments(s2, sl, ell).ok_or(Error::EmptyWindow(t))
}

fn column_moments(values: impl Iterator<Item = Complex64>, ell: f64) -> (f64, f64) {
    values.fold((0.0, 0.0), |(s2, sl), z| {
        let p = z.norm_sqr();
        (s2 + p, sl + p.powf(ell))
    })
}

fn entropy_from_moments(s2: f64, sl: f64, ell: f64) -> Option<f64> {
    (s2 > 0.0).then(|| (sl / s2.powf(ell)).log2() / (1.0 - ell))
}

/// Entropies of every time index, using running window sums.
fn entropy_row(data: ArrayView2<'_, Complex64>, zeta: usize, ell: f64) -> Vec<f64> {
    let moments: Vec<(f64, f64)> = data.axis_iter(Axis(1)).map(|c| column_moments(c.iter().copied(), ell)).collect();
    let n = moments.len();
    (0..n)
        .map(|t| {
            let (lo, hi) = (t.saturating_sub(zeta), (t + zeta).min(n - 1));
            let (s2, sl) = moments[lo..=hi].iter().fold((0.0, 0.0), |acc, m| (acc.0 + m.0, acc.1 + m.1));
            // an empty window never wins the argmin
            entropy_from_moments(s2, sl, ell).unwrap_or(f64::INFINITY)
        })
        .collect()
}

/// Index of the smallest entropy over a decreasing grid, ties going to the
/// smallest width.
fn argmin_entropy(entropies: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, e) in entropies.enumerate() {
        if !e.is_finite() {
            continue;
        }
        // grid is decreasing, so a later index with an equal value is smaller
        if best.is_none_or(|(_, b)| e <= b) {
            best = Some((j, e));
        }
    }
    best.map(|(j, _)| j)
}

/// Entropy-minimising width at time `t` over a stack of constant-width
/// planes, one per grid value in grid order.
pub fn sigma_u(stack: &[TimeScalePlane], grid: &SigmaGrid, t: usize, zeta: usize, ell: f64) -> Result<f64> {
    if stack.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), found: stack.len() });
    }
    let entropies = stack
        .iter()
        .map(|p| renyi_entropy(p.data().view(), t, zeta, ell))
        .collect::<Result<Vec<_>>>()?;
    argmin_entropy(entropies.into_iter()).map(|j| grid.values()[j]).ok_or(Error::EmptyWindow(t))
}

/// Support interval `[g, h]` of one detected component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInterval {
    pub g: f64,
    /// `NaN` when the fitted chirp is too fast for the width.
    pub h: f64,
    /// Scale of the peak.
    pub a: f64,
    pub c_hat: f64,
    pub r_hat: f64,
}

/// Intervals of all peaks in one column, sorted by peak scale.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SupportIntervals {
    pub intervals: Vec<SupportInterval>,
}

impl SupportIntervals {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// `h_k <= g_{k+1}` for all neighbours. An undefined `h_k` that has to
    /// be compared counts as an overlap; the last interval's `h` is never
    /// compared.
    pub fn non_overlapping(&self) -> bool {
        self.intervals.iter().all(|i| i.g.is_finite())
            && self.intervals.windows(2).all(|p| p[0].h.is_finite() && p[0].h <= p[1].g)
    }
}

/// Local maxima of a magnitude column above `threshold`. A plateau counts
/// once, at its smallest index.
fn column_peaks(mag: &[f64], threshold: f64) -> Vec<usize> {
    let n = mag.len();
    let mut peaks = Vec::new();
    let mut j = 1;
    while j + 1 < n {
        if mag[j] > mag[j - 1] && mag[j] > threshold {
            let mut end = j;
            while end + 1 < n && mag[end + 1] == mag[j] {
                end += 1;
            }
            if end + 1 < n && mag[end + 1] < mag[j] {
                peaks.push(j);
            }
            j = end + 1;
        } else {
            j += 1;
        }
    }
    peaks
}

fn local_argmax(mag: ArrayView2<'_, f64>, center: usize, t: usize) -> usize {
    let lo = center.saturating_sub(2);
    let hi = (center + 2).min(mag.nrows() - 1);
    let mut best = lo;
    for j in lo..=hi {
        if mag[[j, t]] > mag[[best, t]] {
            best = j;
        }
    }
    best
}

/// Least-squares line through `(x, y)`: returns (value at x = 0, slope).
fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

fn interval_for(c_hat: f64, r_hat: f64, sigma: f64, a: f64, params: &WaveletParams) -> SupportInterval {
    let (al, mu) = (params.alpha(), params.mu());
    if !(c_hat > 0.0) {
        return SupportInterval { g: f64::NAN, h: f64::NAN, a, c_hat, r_hat };
    }
    let r = r_hat.abs();
    let rad_h = c_hat * c_hat - 8.0 * std::f64::consts::PI * al * (al + mu * sigma) * r;
    let rad_g = c_hat * c_hat + 8.0 * std::f64::consts::PI * al * (mu * sigma - al) * r;
    let h = if rad_h < 0.0 { f64::NAN } else { 2.0 * (mu + al / sigma) / (c_hat + rad_h.sqrt()) };
    let g = 2.0 * (mu - al / sigma) / (c_hat + rad_g.max(0.0).sqrt());
    SupportInterval { g, h, a, c_hat, r_hat }
}

fn intervals_at(
    mag: ArrayView2<'_, f64>,
    scales: &[f64],
    t: usize,
    threshold: f64,
    sigma: f64,
    fs: f64,
    params: &WaveletParams,
) -> SupportIntervals {
    let n_times = mag.ncols();
    let column: Vec<f64> = mag.column(t).to_vec();
    let two_pi_alpha = 2.0 * std::f64::consts::PI * params.alpha();
    let intervals = column_peaks(&column, threshold)
        .into_iter()
        .map(|jk| {
            let a = scales[jk];
            let half = (two_pi_alpha * sigma * a * fs).floor() as usize;
            let mut points = vec![(0.0, params.mu() / a)];
            let mut j = jk;
            for s in (t + 1)..=(t + half).min(n_times - 1) {
                j = local_argmax(mag, j, s);
                points.push(((s - t) as f64 / fs, params.mu() / scales[j]));
            }
            let mut j = jk;
            for s in (t.saturating_sub(half)..t).rev() {
                j = local_argmax(mag, j, s);
                points.push((-((t - s) as f64) / fs, params.mu() / scales[j]));
            }
            let (c_hat, r_hat) = fit_line(&points).unwrap_or((params.mu() / a, 0.0));
            interval_for(c_hat, r_hat, sigma, a, params)
        })
        .collect();
    SupportIntervals { intervals }
}

/// Support intervals of the components visible in column `t` of a
/// constant-width plane. Peaks must exceed `gamma3` times the plane maximum.
pub fn support_intervals(
    plane: &TimeScalePlane,
    t: usize,
    gamma3: f64,
    params: &WaveletParams,
) -> Result<SupportIntervals> {
    if !(gamma3 > 0.0) {
        return Err(Error::invalid(format!("gamma3 must be positive, got {gamma3}")));
    }
    if t >= plane.n_times() {
        return Err(Error::invalid(format!("time index {t} outside 0..{}", plane.n_times())));
    }
    let sigma = plane.sigma()[t];
    let mag = plane.magnitude();
    let threshold = gamma3 * plane.max_abs();
    if plane.max_abs() == 0.0 {
        return Ok(SupportIntervals::default());
    }
    Ok(intervals_at(mag.view(), plane.scales(), t, threshold, sigma, plane.sample_rate(), params))
}

/// Per-width tables: entropy, interval count and disjointness per time.
struct WidthTable {
    entropy: Vec<f64>,
    count: Vec<usize>,
    disjoint: Vec<bool>,
}

fn width_table(x: &Signal, sigma: f64, params: &WaveletParams, scales: &ScaleGrid, config: &EstimationConfig) -> Result<WidthTable> {
    let plane = cwt_constant(x, sigma, params, scales, Kernel::G)?;
    let entropy = entropy_row(plane.data().view(), config.zeta, config.ell);
    let mag = plane.magnitude();
    let threshold = config.gamma3 * plane.max_abs();
    let n = plane.n_times();
    let (mut count, mut disjoint) = (vec![0; n], vec![true; n]);
    if plane.max_abs() > 0.0 {
        for t in 0..n {
            let s = intervals_at(mag.view(), plane.scales(), t, threshold, sigma, x.sample_rate(), params);
            count[t] = s.len();
            disjoint[t] = s.non_overlapping();
        }
    }
    Ok(WidthTable { entropy, count, disjoint })
}

/// Convolution of `c` with centred weights `b`, replicating end values.
pub fn smooth_track(c: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_weights(b)?;
    if c.is_empty() {
        return Ok(Vec::new());
    }
    let off = (b.len() - 1) / 2;
    let last = c.len() as isize - 1;
    Ok((0..c.len())
        .map(|t| {
            b.iter()
                .enumerate()
                .map(|(i, w)| {
                    let k = (t as isize + i as isize - off as isize).clamp(0, last) as usize;
                    w * c[k]
                })
                .sum()
        })
        .collect())
}

/// Separability-driven width estimate for every sample of `x`.
pub fn estimate_sigma(x: &Signal, params: &WaveletParams, config: &EstimationConfig) -> Result<SigmaTrack> {
    config.validate(params)?;
    let scales = ScaleGrid::for_signal(x, config.n_voices)?;
    let grid = &config.grid;
    let tables = grid
        .values()
        .par_iter()
        .map(|&s| width_table(x, s, params, &scales, config))
        .collect::<Result<Vec<_>>>()?;
    let n = x.len();
    let mut sigma_u = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(n);
    for t in 0..n {
        let ju = argmin_entropy(tables.iter().map(|tb| tb.entropy[t])).ok_or(Error::EmptyWindow(t))?;
        let m = tables[ju].count[t];
        let mut z = ju;
        if tables[ju].disjoint[t] {
            while z + 1 < grid.len() && tables[z + 1].count[t] == m && tables[z + 1].disjoint[t] {
                z += 1;
            }
        }
        sigma_u.push(grid.values()[ju]);
        c.push(grid.values()[z]);
        counts.push(m);
    }
    let sigma_est = smooth_track(&c, &config.smoothing)?;
    Ok(SigmaTrack { times: x.times(), sigma_u, c, sigma_est, smoothing: config.smoothing.clone(), counts })
}

/// Width minimising the Rényi entropy of the conventional constant-width
/// synchrosqueezed plane, per time.
pub fn sigma_renyi_sst(
    x: &Signal,
    params: &WaveletParams,
    grid: &SigmaGrid,
    n_voices: usize,
    zeta: usize,
    ell: f64,
    order: SstOrder,
) -> Result<Vec<f64>> {
    grid.validate(params)?;
    check_order(ell)?;
    let scales = ScaleGrid::for_signal(x, n_voices)?;
    let config = SstConfig { order, rule: PhaseRule::Conventional, gamma_rel: DEFAULT_GAMMA_REL, ..SstConfig::default() };
    let rows = grid
        .values()
        .par_iter()
        .map(|&s| {
            let out = synchrosqueeze(x, &vec![s; x.len()], params, &scales, &config)?;
            Ok(entropy_row(out.tf.data().view(), zeta, ell))
        })
        .collect::<Result<Vec<_>>>()?;
    (0..x.len())
        .map(|t| {
            argmin_entropy(rows.iter().map(|r| r[t])).map(|j| grid.values()[j]).ok_or(Error::EmptyWindow(t))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separability::sigma2;
    use crate::signals::{gen_two_chirps, two_chirp_laws, LfmComponent};
    use ndarray::Array2;
    use proptest::prelude::*;

    fn cplx(v: &[f64]) -> Array2<Complex64> {
        Array2::from_shape_fn((v.len(), 1), |(j, _)| Complex64::new(v[j], 0.0))
    }

    fn tone(freq: f64, n: usize) -> Signal {
        let fs = n as f64;
        Signal::from_real((0..n).map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / fs).cos()).collect(), fs, 0.0)
            .unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = SigmaGrid::new(0.5, 10.0, 0.05).unwrap();
        assert_eq!(g.len(), 191);
        assert_eq!(g.max(), 10.0);
        assert_eq!(g.min(), 0.5);
        assert!(g.values().contains(&3.7));
        assert!(g.values().windows(2).all(|w| ((w[0] - w[1]) - 0.05).abs() < 1e-12));
        assert!(SigmaGrid::new(1.0, 0.5, 0.1).is_err());
        assert!(SigmaGrid::new(0.1, 1.0, 0.1).unwrap().validate(&WaveletParams::default()).is_err());
    }

    #[test]
    fn entropy_examples() {
        let one = cplx(&[0.0, 3.0, 0.0]);
        assert!(renyi_entropy(one.view(), 0, 4, 2.5).unwrap().abs() < 1e-15);
        let two = cplx(&[1.5, 1.5, 0.0]);
        assert!((renyi_entropy(two.view(), 0, 4, 2.5).unwrap() - 1.0).abs() < 1e-14);
        for m in 1..20 {
            let v = cplx(&vec![0.7; m]);
            assert!((renyi_entropy(v.view(), 0, 0, 2.5).unwrap() - (m as f64).log2()).abs() < 1e-12);
        }
        assert!(matches!(renyi_entropy(cplx(&[0.0, 0.0]).view(), 0, 1, 2.5), Err(Error::EmptyWindow(0))));
        assert!(renyi_entropy(one.view(), 0, 0, 1.0).is_err());
    }

    #[test]
    fn entropy_window_is_clipped() {
        let d = Array2::from_shape_fn((2, 5), |(j, n)| Complex64::new(if j == 0 && n == 4 { 1.0 } else { 0.0 }, 0.0));
        assert_eq!(renyi_entropy(d.view(), 3, 1, 2.5).unwrap(), 0.0);
        assert!(renyi_entropy(d.view(), 1, 1, 2.5).is_err());
        let row = entropy_row(d.view(), 1, 2.5);
        assert_eq!(row[1], f64::INFINITY);
        assert_eq!(row[4], 0.0);
    }

    #[test]
    fn argmin_prefers_smaller_width_on_ties() {
        assert_eq!(argmin_entropy([1.0, 0.5, 0.5].into_iter()), Some(2));
        assert_eq!(argmin_entropy([0.2, 0.5, f64::INFINITY].into_iter()), Some(0));
        assert_eq!(argmin_entropy([f64::INFINITY; 3].into_iter()), None);
    }

    #[test]
    fn peaks_and_plateaus() {
        assert_eq!(column_peaks(&[0.0, 1.0, 0.0, 2.0, 2.0, 1.0, 0.5], 0.1), vec![1, 3]);
        assert_eq!(column_peaks(&[0.0, 1.0, 0.0], 1.0), Vec::<usize>::new());
        assert_eq!(column_peaks(&[3.0, 2.0, 1.0], 0.0), Vec::<usize>::new());
        assert_eq!(column_peaks(&[0.0, 1.0, 1.0, 2.0, 0.0], 0.0), vec![3]);
    }

    #[test]
    fn line_fit() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 - 4.0, 3.0 + 2.0 * (i as f64 - 4.0))).collect();
        let (c, r) = fit_line(&pts).unwrap();
        assert!((c - 3.0).abs() < 1e-12 && (r - 2.0).abs() < 1e-12);
        assert!(fit_line(&pts[..1]).is_none());
    }

    #[test]
    fn tone_interval() {
        let p = WaveletParams::default();
        let x = tone(20.0, 256);
        let g = ScaleGrid::for_signal(&x, 32).unwrap();
        let plane = cwt_constant(&x, 1.5, &p, &g, Kernel::G).unwrap();
        let s = support_intervals(&plane, 128, 0.2, &p).unwrap();
        assert_eq!(s.len(), 1);
        let i = s.intervals[0];
        assert!((i.c_hat - 20.0).abs() < 0.02 * 20.0, "{i:?}");
        assert!(i.r_hat.abs() * 1.0 < 0.05 * 20.0);
        assert!(i.g <= i.a && i.a <= i.h);
    }

    #[test]
    fn two_tones_separate_above_sigma1() {
        let p = WaveletParams::default();
        let x = tone(5.0, 256).try_add(&tone(25.0, 256)).unwrap();
        let g = ScaleGrid::for_signal(&x, 32).unwrap();
        let plane = cwt_constant(&x, 1.0, &p, &g, Kernel::G).unwrap();
        let s = support_intervals(&plane, 128, 0.2, &p).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.non_overlapping());
        assert!(s.intervals[0].a < s.intervals[1].a);
    }

    #[test]
    fn zero_column_has_no_intervals() {
        let p = WaveletParams::default();
        let x = Signal::from_real(vec![0.0; 64], 64.0, 0.0).unwrap();
        let g = ScaleGrid::for_signal(&x, 8).unwrap();
        let plane = cwt_constant(&x, 1.0, &p, &g, Kernel::G).unwrap();
        assert!(support_intervals(&plane, 10, 0.2, &p).unwrap().is_empty());
        assert!(support_intervals(&plane, 10, 0.0, &p).is_err());
    }

    #[test]
    fn fast_fit_is_an_overlap() {
        let p = WaveletParams::default();
        let slow = interval_for(12.0, 50.0, 1.0, 0.08, &p);
        assert!(slow.h.is_nan());
        // the largest-scale interval has no upper neighbour
        assert!(SupportIntervals { intervals: vec![slow] }.non_overlapping());
        let fast = interval_for(40.0, 0.0, 1.0, 0.025, &p);
        assert!(SupportIntervals { intervals: vec![fast, slow] }.non_overlapping());
        let fastest = interval_for(45.0, 0.0, 1.0, 0.022, &p);
        assert!(!SupportIntervals { intervals: vec![fastest, slow, fast] }.non_overlapping());
        let s = SupportIntervals { intervals: vec![interval_for(20.0, 0.0, 1.0, 0.05, &p)] };
        assert!(s.non_overlapping());
        let al = p.alpha();
        assert!((s.intervals[0].h - (1.0 + al) / 20.0).abs() < 1e-15);
        assert!((s.intervals[0].g - (1.0 - al) / 20.0).abs() < 1e-15);
    }

    #[test]
    fn smoothing() {
        let c = [1.0, 1.0, 1.0, 6.0, 1.0, 1.0, 1.0];
        let s = smooth_track(&c, &[0.2; 5]).unwrap();
        assert_eq!(s[0], 1.0);
        assert!((s[3] - 2.0).abs() < 1e-15);
        assert!((s[1] - 2.0).abs() < 1e-15);
        assert_eq!(smooth_track(&c, &[1.0]).unwrap(), c.to_vec());
        assert!(smooth_track(&c, &[0.5, 0.6]).is_err());
        // edge replication
        let s = smooth_track(&[0.0, 10.0], &[0.2; 5]).unwrap();
        assert!((s[0] - 4.0).abs() < 1e-12);
    }

    fn small_config() -> EstimationConfig {
        EstimationConfig { grid: SigmaGrid::new(0.5, 3.0, 0.1).unwrap(), ..EstimationConfig::default() }
    }

    #[test]
    fn tone_descends_to_bottom() {
        let p = WaveletParams::default();
        let x = tone(20.0, 128);
        let cfg = small_config();
        let track = estimate_sigma(&x, &p, &cfg).unwrap();
        for t in 16..112 {
            assert_eq!(track.c[t], cfg.grid.min(), "t={t}");
            assert_eq!(track.counts[t], 1);
        }
        assert!(track.sigma_u.iter().all(|&s| s >= cfg.grid.min() && s <= cfg.grid.max()));
    }

    #[test]
    fn two_chirp_track_properties() {
        let p = WaveletParams::default();
        let x = gen_two_chirps(128).unwrap();
        let cfg = small_config();
        let track = estimate_sigma(&x, &p, &cfg).unwrap();
        let again = estimate_sigma(&x, &p, &cfg).unwrap();
        assert_eq!(track, again);
        let scales = ScaleGrid::for_signal(&x, cfg.n_voices).unwrap();
        for t in (0..128).step_by(9) {
            assert!(track.c[t] <= track.sigma_u[t]);
            let plane = cwt_constant(&x, track.c[t], &p, &scales, Kernel::G).unwrap();
            let s = support_intervals(&plane, t, cfg.gamma3, &p).unwrap();
            assert!(s.non_overlapping() || track.c[t] == track.sigma_u[t], "t={t}");
        }
        assert_eq!(track.sigma_est, smooth_track(&track.c, &cfg.smoothing).unwrap());
        let lo = cfg.grid.min();
        let hi = cfg.grid.max();
        assert!(track.sigma_est.iter().all(|&s| s >= lo - 1e-12 && s <= hi + 1e-12));
        // the middle of the record is where the separating width is known
        let s2 = sigma2(&two_chirp_laws(), 0.5, &p).unwrap().sigma().unwrap();
        assert!(track.sigma_u[64] >= track.sigma_est[64] - cfg.grid.step());
        assert!(s2 > 0.0);
    }

    #[test]
    fn sigma_u_from_stack() {
        let p = WaveletParams::default();
        let x = LfmComponent::new(1.0, 20.0, 0.0).unwrap().sample(128).unwrap();
        let grid = SigmaGrid::new(0.5, 2.0, 0.5).unwrap();
        let scales = ScaleGrid::for_signal(&x, 16).unwrap();
        let stack: Vec<_> = grid.values().iter().map(|&s| cwt_constant(&x, s, &p, &scales, Kernel::G).unwrap()).collect();
        let s = sigma_u(&stack, &grid, 64, 4, 2.5).unwrap();
        assert!(grid.values().contains(&s));
        assert!(sigma_u(&stack[..2], &grid, 64, 4, 2.5).is_err());
    }

    #[test]
    fn renyi_sst_selector_bounds() {
        let p = WaveletParams::default();
        let x = tone(20.0, 128);
        let grid = SigmaGrid::new(0.5, 2.0, 0.25).unwrap();
        for order in [SstOrder::First, SstOrder::Second] {
            let s = sigma_renyi_sst(&x, &p, &grid, 16, 4, 2.5, order).unwrap();
            assert!(s.iter().all(|&v| v >= grid.min() - 1e-12 && v <= grid.max() + 1e-12));
            let mid = &s[24..104];
            let (lo, hi) = mid.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
            // every value within one step of the midrange
            assert!(hi - lo <= 2.0 * grid.step() + 1e-12, "{order:?}: {lo}..{hi}");
        }
    }

    proptest! {
        #[test]
        fn entropy_scale_invariant(v in proptest::collection::vec(0.0f64..5.0, 2..30), k in 0.01f64..100.0) {
            prop_assume!(v.iter().any(|&x| x > 1e-3));
            let a = renyi_entropy(cplx(&v).view(), 0, 0, 2.5).unwrap();
            let scaled: Vec<f64> = v.iter().map(|x| x * k).collect();
            let b = renyi_entropy(cplx(&scaled).view(), 0, 0, 2.5).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
            prop_assert!(a >= -1e-12 && a <= (v.len() as f64).log2() + 1e-9);
        }

        #[test]
        fn concentrating_mass_lowers_entropy(v in proptest::collection::vec(0.01f64..5.0, 3..30), frac in 0.0f64..1.0) {
            let imax = v.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            let imin = v.iter().enumerate().min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            prop_assume!(imax != imin);
            // move energy from the weakest cell to the strongest
            let mut w = v.clone();
            let moved = frac * w[imin] * w[imin];
            w[imin] = (w[imin] * w[imin] - moved).sqrt();
            w[imax] = (w[imax] * w[imax] + moved).sqrt();
            let before = renyi_entropy(cplx(&v).view(), 0, 0, 2.5).unwrap();
            let after = renyi_entropy(cplx(&w).view(), 0, 0, 2.5).unwrap();
            prop_assert!(after <= before + 1e-12);
        }

        #[test]
        fn smoothing_preserves_bounds(c in proptest::collection::vec(0.5f64..10.0, 1..40)) {
            let s = smooth_track(&c, &[0.2; 5]).unwrap();
            let lo = c.iter().cloned().fold(f64::MAX, f64::min);
            let hi = c.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert!(s.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
        }
    }
}
