//! Recovery of the signal and of its components from time-scale and
//! synchrosqueezed planes, ridge extraction and error metrics.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::cwt::TimeScalePlane;
use crate::error::{Error, Result};
use crate::signals::Signal;
use crate::sst::TimeFreqPlane;
use crate::wavelets::WaveletParams;

/// Whether recovery returns the analytic signal or twice its real part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryMode {
    Analytic,
    Real,
}

/// A plane that can be collapsed to one complex value per time.
pub trait Marginal {
    /// Per-time sums that equal `c_psi` times the analytic signal.
    fn marginal(&self) -> Vec<Complex64>;
    fn sigma(&self) -> &[f64];
    fn t0(&self) -> f64;
    fn sample_rate(&self) -> f64;
}

impl Marginal for TimeScalePlane {
    fn marginal(&self) -> Vec<Complex64> {
        self.weighted_column_sums()
    }
    fn sigma(&self) -> &[f64] {
        TimeScalePlane::sigma(self)
    }
    fn t0(&self) -> f64 {
        TimeScalePlane::t0(self)
    }
    fn sample_rate(&self) -> f64 {
        TimeScalePlane::sample_rate(self)
    }
}

impl Marginal for TimeFreqPlane {
    /// Bin sums plus the unassigned mass, so nothing of the source plane is
    /// lost.
    fn marginal(&self) -> Vec<Complex64> {
        self.column_sums().into_iter().zip(self.leak()).map(|(s, l)| s + l).collect()
    }
    fn sigma(&self) -> &[f64] {
        TimeFreqPlane::sigma(self)
    }
    fn t0(&self) -> f64 {
        TimeFreqPlane::t0(self)
    }
    fn sample_rate(&self) -> f64 {
        TimeFreqPlane::sample_rate(self)
    }
}

/// `c_psi` per time, evaluated once per distinct width.
fn c_psi_track(sigma: &[f64], params: &WaveletParams) -> Result<Vec<f64>> {
    let mut cache: BTreeMap<u64, f64> = BTreeMap::new();
    sigma
        .iter()
        .map(|&s| {
            if let Some(&c) = cache.get(&s.to_bits()) {
                return Ok(c);
            }
            let c = params.c_psi(s)?.re;
            cache.insert(s.to_bits(), c);
            Ok(c)
        })
        .collect()
}

fn finish(sums: &[Complex64], sigma: &[f64], t0: f64, fs: f64, params: &WaveletParams, mode: RecoveryMode) -> Result<Signal> {
    let c = c_psi_track(sigma, params)?;
    match mode {
        RecoveryMode::Analytic => {
            Signal::from_complex(sums.iter().zip(&c).map(|(s, c)| s / *c).collect(), fs, t0)
        }
        RecoveryMode::Real => Signal::from_real(sums.iter().zip(&c).map(|(s, c)| 2.0 * s.re / c).collect(), fs, t0),
    }
}

/// Full-signal recovery from a CWT or synchrosqueezed plane.
pub fn recover_signal<P: Marginal>(plane: &P, params: &WaveletParams, mode: RecoveryMode) -> Result<Signal> {
    finish(&plane.marginal(), plane.sigma(), plane.t0(), plane.sample_rate(), params, mode)
}

/// One extracted ridge: a bin per time, with gaps filled by interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Ridge {
    pub bins: Vec<usize>,
    /// True where the bin was interpolated rather than found.
    pub interpolated: Vec<bool>,
}

impl Ridge {
    /// Ridge frequencies in Hz, at bin centres.
    pub fn frequencies(&self, tf: &TimeFreqPlane) -> Vec<f64> {
        self.bins.iter().map(|&k| (k as f64 + 0.5) * tf.bin_width()).collect()
    }

    pub fn mean_bin(&self) -> f64 {
        self.bins.iter().sum::<usize>() as f64 / self.bins.len().max(1) as f64
    }
}

/// Ridges sorted by increasing mean frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSet {
    pub ridges: Vec<Ridge>,
    /// Half-width `Γ` of the integration band, in bins.
    pub band: usize,
    pub requested: usize,
}

impl RidgeSet {
    /// Fewer ridges were found than requested.
    pub fn is_partial(&self) -> bool {
        self.ridges.len() < self.requested
    }
}

/// Default jump limit between consecutive ridge points, in bins.
pub const DEFAULT_JUMP: usize = 3;

fn window_argmax(col: impl Fn(usize) -> f64, center: usize, jump: usize, n_bins: usize) -> Option<usize> {
    let lo = center.saturating_sub(jump);
    let hi = (center + jump).min(n_bins - 1);
    let mut best: Option<(usize, f64)> = None;
    for k in lo..=hi {
        let v = col(k);
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

fn fill_gaps(found: &[Option<usize>]) -> Option<Ridge> {
    let known: Vec<usize> = (0..found.len()).filter(|&n| found[n].is_some()).collect();
    let (&first, &last) = (known.first()?, known.last()?);
    let mut bins = vec![0; found.len()];
    let mut interpolated = vec![true; found.len()];
    for n in 0..found.len() {
        if let Some(k) = found[n] {
            bins[n] = k;
            interpolated[n] = false;
        } else if n < first {
            bins[n] = found[first].unwrap();
        } else if n > last {
            bins[n] = found[last].unwrap();
        } else {
            let prev = known[known.partition_point(|&m| m < n) - 1];
            let next = known[known.partition_point(|&m| m < n)];
            let (a, b) = (found[prev].unwrap() as f64, found[next].unwrap() as f64);
            let w = (n - prev) as f64 / (next - prev) as f64;
            bins[n] = (a + w * (b - a)).round() as usize;
        }
    }
    Some(Ridge { bins, interpolated })
}

/// Greedy ridge search: seed at the largest remaining coefficient, follow it
/// in both directions allowing `jump` bins per step, then clear `±2Γ` bins
/// around it before looking for the next ridge.
pub fn extract_ridges(tf: &TimeFreqPlane, n_components: usize, band: usize, jump: usize) -> Result<RidgeSet> {
    if n_components == 0 {
        return Err(Error::invalid("need at least one component"));
    }
    let (nb, nt) = (tf.n_bins(), tf.n_times());
    let mut mag = tf.magnitude();
    let mut ridges = Vec::new();
    for _ in 0..n_components {
        let mut seed: Option<((usize, usize), f64)> = None;
        for ((k, n), &v) in mag.indexed_iter() {
            if v > 0.0 && seed.is_none_or(|(_, b)| v > b) {
                seed = Some(((k, n), v));
            }
        }
        let Some(((k0, n0), _)) = seed else { break };
        let mut found = vec![None; nt];
        found[n0] = Some(k0);
        let mut anchor = k0;
        for n in (n0 + 1)..nt {
            if let Some(k) = window_argmax(|k| mag[[k, n]], anchor, jump, nb) {
                found[n] = Some(k);
                anchor = k;
            }
        }
        anchor = k0;
        for n in (0..n0).rev() {
            if let Some(k) = window_argmax(|k| mag[[k, n]], anchor, jump, nb) {
                found[n] = Some(k);
                anchor = k;
            }
        }
        let ridge = fill_gaps(&found).expect("seed point is always found");
        for (n, &k) in ridge.bins.iter().enumerate() {
            let lo = k.saturating_sub(2 * band);
            let hi = (k + 2 * band).min(nb - 1);
            for kk in lo..=hi {
                mag[[kk, n]] = 0.0;
            }
        }
        ridges.push(ridge);
    }
    ridges.sort_by(|a, b| a.mean_bin().total_cmp(&b.mean_bin()));
    Ok(RidgeSet { ridges, band, requested: n_components })
}

/// A recovered component with the ridge it was integrated around.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub signal: Signal,
    pub ridge_hz: Vec<f64>,
    /// The band reached past the first or last bin somewhere.
    pub clipped: bool,
}

/// Integrate `±band` bins around `ridge` and scale by `c_psi`.
pub fn recover_component(
    tf: &TimeFreqPlane,
    ridge: &Ridge,
    band: usize,
    params: &WaveletParams,
    mode: RecoveryMode,
) -> Result<Component> {
    let (nb, nt) = (tf.n_bins(), tf.n_times());
    if ridge.bins.len() != nt {
        return Err(Error::LengthMismatch { expected: nt, found: ridge.bins.len() });
    }
    let mut clipped = false;
    let sums: Vec<Complex64> = ridge
        .bins
        .iter()
        .enumerate()
        .map(|(n, &k)| {
            if k < band || k + band >= nb {
                clipped = true;
            }
            let lo = k.saturating_sub(band);
            let hi = (k + band).min(nb - 1);
            (lo..=hi.max(lo)).filter(|&kk| kk < nb).map(|kk| tf.data()[[kk, n]]).sum()
        })
        .collect();
    let signal = finish(&sums, tf.sigma(), tf.t0(), tf.sample_rate(), params, mode)?;
    Ok(Component { signal, ridge_hz: ridge.frequencies(tf), clipped })
}

/// Components for every ridge of a set, in the set's order.
pub fn recover_components(
    tf: &TimeFreqPlane,
    ridges: &RidgeSet,
    params: &WaveletParams,
    mode: RecoveryMode,
) -> Result<Vec<Component>> {
    ridges.ridges.iter().map(|r| recover_component(tf, r, ridges.band, params, mode)).collect()
}

/// Relative RMSE `||a - b|| / ||a||` over samples with time in `[t_lo, t_hi]`.
pub fn rmse(a: &Signal, b: &Signal, t_lo: f64, t_hi: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), found: b.len() });
    }
    if a.sample_rate() != b.sample_rate() || a.t0() != b.t0() {
        return Err(Error::GridMismatch("signals are sampled differently".into()));
    }
    let range = a.index_range(t_lo, t_hi);
    if range.is_empty() {
        return Err(Error::invalid(format!("no samples in [{t_lo}, {t_hi}]")));
    }
    let (sa, sb) = (&a.samples()[range.clone()], &b.samples()[range]);
    let num: f64 = sa.iter().zip(sb).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = sa.iter().map(|x| x.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::invalid("reference signal is zero on the range"));
    }
    Ok((num / den).sqrt())
}

/// Mean absolute IF error relative to the mean absolute true IF.
pub fn if_error(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), found: estimate.len() });
    }
    let den: f64 = truth.iter().map(|f| f.abs()).sum();
    if den == 0.0 {
        return Err(Error::invalid("true IF is identically zero"));
    }
    Ok(estimate.iter().zip(truth).map(|(e, t)| (e - t).abs()).sum::<f64>() / den)
}
