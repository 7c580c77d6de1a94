//! C interface to `asst`.
//!
//! Signals and synchrosqueezed planes are opaque handles released with their
//! `_free` function. Every call returns an [`AsstStatus`]; on failure the
//! message is available from [`asst_last_error`] on the same thread until the
//! next failing call. Output arrays are caller-allocated and their length is
//! passed alongside; planes are stored row-major, one row per frequency bin.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use asst::cwt::ScaleGrid;
use asst::estimation::{estimate_sigma, EstimationConfig, SigmaGrid};
use asst::reconstruct::{extract_ridges, recover_components, RecoveryMode, DEFAULT_JUMP};
use asst::separability::{sigma2, Sigma2};
use asst::signals::{gen_three_component, gen_two_chirps, load_csv, IfLaw, Signal};
use asst::sst::{synchrosqueeze, PhaseRule, SstConfig, SstOrder, TimeFreqPlane, DEFAULT_GAMMA_REL};
use asst::{Complex64, Error, WaveletParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsstStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Unseparable = 4,
    Parse = 5,
    Io = 6,
    Computation = 7,
    Panic = 8,
}

/// A sampled signal.
pub struct AsstSignal {
    inner: Signal,
}

/// A synchrosqueezed time-frequency plane.
pub struct AsstTimeFreq {
    inner: TimeFreqPlane,
    params: WaveletParams,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AsstEstimationOptions {
    pub mu: f64,
    pub tau0: f64,
    pub n_voices: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub sigma_step: f64,
    pub ell: f64,
    pub zeta: usize,
    pub gamma3: f64,
    /// Length of the uniform smoothing filter.
    pub smooth_len: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AsstSstOptions {
    pub mu: f64,
    pub tau0: f64,
    pub n_voices: usize,
    /// 1 or 2.
    pub order: u32,
    /// Nonzero for the adaptive phase rule, zero for the conventional one.
    pub adaptive: u32,
    pub gamma_rel: f64,
    /// 0 selects N/2 bins.
    pub freq_bins: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: AsstStatus, msg: impl Into<String>) -> AsstStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> AsstStatus {
    let status = match &e {
        Error::InvalidArgument(_)
        | Error::SigmaBelowBound { .. }
        | Error::LengthMismatch { .. }
        | Error::GridMismatch(_)
        | Error::TooFewScales(_)
        | Error::MissingSampleRate => AsstStatus::InvalidArgument,
        Error::Unseparable { .. } | Error::ZoneUndefined { .. } => AsstStatus::Unseparable,
        Error::Parse { .. } => AsstStatus::Parse,
        Error::Io(_) => AsstStatus::Io,
        _ => AsstStatus::Computation,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), AsstStatus> + UnwindSafe) -> AsstStatus {
    match catch_unwind(f) {
        Ok(Ok(())) => AsstStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(AsstStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, AsstStatus>;
}

impl<T> OrStatus<T> for asst::Result<T> {
    fn or_status(self) -> Result<T, AsstStatus> {
        self.map_err(from_error)
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], AsstStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(AsstStatus::NullPointer, "null input array"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, needed: usize) -> Result<&'a mut [T], AsstStatus> {
    if len < needed {
        return Err(fail(AsstStatus::BufferTooSmall, format!("buffer holds {len}, need {needed}")));
    }
    if p.is_null() {
        return Err(fail(AsstStatus::NullPointer, "null output array"));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, AsstStatus> {
    p.as_ref().ok_or_else(|| fail(AsstStatus::NullPointer, "null handle"))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), AsstStatus> {
    if out.is_null() {
        return Err(fail(AsstStatus::NullPointer, "null output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn asst_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn asst_estimation_options_default() -> AsstEstimationOptions {
    let d = EstimationConfig::default();
    let p = WaveletParams::default();
    AsstEstimationOptions {
        mu: p.mu(),
        tau0: p.tau0(),
        n_voices: d.n_voices,
        sigma_min: d.grid.min(),
        sigma_max: d.grid.max(),
        sigma_step: d.grid.step(),
        ell: d.ell,
        zeta: d.zeta,
        gamma3: d.gamma3,
        smooth_len: d.smoothing.len(),
    }
}

#[no_mangle]
pub extern "C" fn asst_sst_options_default() -> AsstSstOptions {
    let p = WaveletParams::default();
    AsstSstOptions { mu: p.mu(), tau0: p.tau0(), n_voices: 32, order: 2, adaptive: 1, gamma_rel: DEFAULT_GAMMA_REL, freq_bins: 0 }
}

/// # Safety
/// `samples` must point to `n` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn asst_signal_from_real(
    samples: *const f64,
    n: usize,
    sample_rate: f64,
    out: *mut *mut AsstSignal,
) -> AsstStatus {
    guard(|| {
        let s = slice(samples, n)?;
        let inner = Signal::from_real(s.to_vec(), sample_rate, 0.0).or_status()?;
        put(out, AsstSignal { inner })
    })
}

/// # Safety
/// `re` and `im` must point to `n` doubles each; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asst_signal_from_complex(
    re: *const f64,
    im: *const f64,
    n: usize,
    sample_rate: f64,
    out: *mut *mut AsstSignal,
) -> AsstStatus {
    guard(|| {
        let (re, im) = (slice(re, n)?, slice(im, n)?);
        let z = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let inner = Signal::from_complex(z, sample_rate, 0.0).or_status()?;
        put(out, AsstSignal { inner })
    })
}

/// Built-in signals: 0 for the two-chirp signal, 1 for the three-component
/// signal, sampled on `[0, 1)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn asst_signal_builtin(which: u32, n: usize, out: *mut *mut AsstSignal) -> AsstStatus {
    guard(|| {
        let inner = match which {
            0 => gen_two_chirps(n),
            1 => gen_three_component(n),
            _ => return Err(fail(AsstStatus::InvalidArgument, format!("unknown signal {which}"))),
        }
        .or_status()?;
        put(out, AsstSignal { inner })
    })
}

/// Reads a signal CSV. A `sample_rate` of 0 takes the rate from the
/// file's `# sample_rate=` header.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asst_signal_load_csv(
    path: *const c_char,
    sample_rate: f64,
    out: *mut *mut AsstSignal,
) -> AsstStatus {
    guard(|| {
        if path.is_null() {
            return Err(fail(AsstStatus::NullPointer, "null path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| fail(AsstStatus::InvalidArgument, "path is not UTF-8"))?;
        let rate = (sample_rate > 0.0).then_some(sample_rate);
        let inner = load_csv(path, rate).or_status()?;
        put(out, AsstSignal { inner })
    })
}

/// # Safety
/// `signal` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn asst_signal_len(signal: *const AsstSignal) -> usize {
    signal.as_ref().map_or(0, |s| s.inner.len())
}

/// # Safety
/// `signal` must be NULL or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn asst_signal_free(signal: *mut AsstSignal) {
    if !signal.is_null() {
        drop(Box::from_raw(signal));
    }
}

/// Estimated width track, one value per sample, written to `sigma_out`.
///
/// # Safety
/// `signal` and `options` must be valid; `sigma_out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn asst_estimate_sigma(
    signal: *const AsstSignal,
    options: *const AsstEstimationOptions,
    sigma_out: *mut f64,
    len: usize,
) -> AsstStatus {
    guard(|| {
        let x = &deref(signal)?.inner;
        let o = deref(options)?;
        let out = slice_mut(sigma_out, len, x.len())?;
        let params = WaveletParams::new(o.mu, o.tau0).or_status()?;
        if o.smooth_len == 0 {
            return Err(fail(AsstStatus::InvalidArgument, "smooth_len must be at least 1"));
        }
        let config = EstimationConfig {
            grid: SigmaGrid::new(o.sigma_min, o.sigma_max, o.sigma_step).or_status()?,
            n_voices: o.n_voices,
            zeta: o.zeta,
            ell: o.ell,
            gamma3: o.gamma3,
            smoothing: vec![1.0 / o.smooth_len as f64; o.smooth_len],
        };
        let track = estimate_sigma(x, &params, &config).or_status()?;
        out[..x.len()].copy_from_slice(&track.sigma_est);
        Ok(())
    })
}

/// Synchrosqueezes `signal` with the per-sample width track `sigma`.
///
/// # Safety
/// `signal` and `options` must be valid, `sigma` must hold `len` doubles and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn asst_sst(
    signal: *const AsstSignal,
    sigma: *const f64,
    len: usize,
    options: *const AsstSstOptions,
    out: *mut *mut AsstTimeFreq,
) -> AsstStatus {
    guard(|| {
        let x = &deref(signal)?.inner;
        let o = deref(options)?;
        let track = slice(sigma, len)?;
        let params = WaveletParams::new(o.mu, o.tau0).or_status()?;
        let order = match o.order {
            1 => SstOrder::First,
            2 => SstOrder::Second,
            k => return Err(fail(AsstStatus::InvalidArgument, format!("order must be 1 or 2, got {k}"))),
        };
        let config = SstConfig {
            order,
            rule: if o.adaptive != 0 { PhaseRule::Adaptive } else { PhaseRule::Conventional },
            gamma_rel: o.gamma_rel,
            freq_bins: (o.freq_bins > 0).then_some(o.freq_bins),
            ..SstConfig::default()
        };
        let grid = ScaleGrid::for_signal(x, o.n_voices).or_status()?;
        let res = synchrosqueeze(x, track, &params, &grid, &config).or_status()?;
        put(out, AsstTimeFreq { inner: res.tf, params })
    })
}

/// # Safety
/// `tf` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn asst_tf_bins(tf: *const AsstTimeFreq) -> usize {
    tf.as_ref().map_or(0, |t| t.inner.n_bins())
}

/// # Safety
/// `tf` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn asst_tf_times(tf: *const AsstTimeFreq) -> usize {
    tf.as_ref().map_or(0, |t| t.inner.n_times())
}

/// Width of one frequency bin in Hz; bin `k` covers `[k w, (k+1) w)`.
///
/// # Safety
/// `tf` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn asst_tf_bin_width(tf: *const AsstTimeFreq) -> f64 {
    tf.as_ref().map_or(0.0, |t| t.inner.bin_width())
}

/// Copies the plane into `re` and `im` (`bins * times` each, row-major).
///
/// # Safety
/// `tf` must be valid; `re` and `im` must hold `len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn asst_tf_data(tf: *const AsstTimeFreq, re: *mut f64, im: *mut f64, len: usize) -> AsstStatus {
    guard(|| {
        let plane = &deref(tf)?.inner;
        let needed = plane.n_bins() * plane.n_times();
        let (re, im) = (slice_mut(re, len, needed)?, slice_mut(im, len, needed)?);
        for (i, z) in plane.data().iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `tf` must be NULL or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn asst_tf_free(tf: *mut AsstTimeFreq) {
    if !tf.is_null() {
        drop(Box::from_raw(tf));
    }
}

/// Extracts up to `n_components` ridges and recovers a component around
/// each, integrating `band` bins either side. Component `k` occupies
/// `[k * times, (k+1) * times)` of `re`, `im` and `ridge_hz`, ordered by
/// mean frequency. `found` receives the number of ridges found.
///
/// # Safety
/// `tf` must be valid; the three arrays must hold `len` doubles each and
/// `found` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn asst_separate(
    tf: *const AsstTimeFreq,
    n_components: usize,
    band: usize,
    real_mode: u32,
    re: *mut f64,
    im: *mut f64,
    ridge_hz: *mut f64,
    len: usize,
    found: *mut usize,
) -> AsstStatus {
    guard(|| {
        let h = deref(tf)?;
        let nt = h.inner.n_times();
        let needed = n_components * nt;
        let (re, im, hz) = (slice_mut(re, len, needed)?, slice_mut(im, len, needed)?, slice_mut(ridge_hz, len, needed)?);
        if found.is_null() {
            return Err(fail(AsstStatus::NullPointer, "null found pointer"));
        }
        let ridges = extract_ridges(&h.inner, n_components, band, DEFAULT_JUMP).or_status()?;
        let mode = if real_mode != 0 { RecoveryMode::Real } else { RecoveryMode::Analytic };
        let comps = recover_components(&h.inner, &ridges, &h.params, mode).or_status()?;
        for (k, c) in comps.iter().enumerate() {
            for (n, z) in c.signal.samples().iter().enumerate() {
                re[k * nt + n] = z.re;
                im[k * nt + n] = z.im;
                hz[k * nt + n] = c.ridge_hz[n];
            }
        }
        *found = comps.len();
        Ok(())
    })
}

/// Smallest window width separating `k` linear chirps with IFs
/// `c[i] + r[i] t` (ordered by increasing frequency) at time `b`.
///
/// # Safety
/// `c` and `r` must hold `k` doubles; `sigma_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asst_sigma2(
    c: *const f64,
    r: *const f64,
    k: usize,
    b: f64,
    mu: f64,
    tau0: f64,
    sigma_out: *mut f64,
) -> AsstStatus {
    guard(|| {
        let (c, r) = (slice(c, k)?, slice(r, k)?);
        if sigma_out.is_null() {
            return Err(fail(AsstStatus::NullPointer, "null output"));
        }
        let params = WaveletParams::new(mu, tau0).or_status()?;
        let laws: Vec<IfLaw> = c.iter().zip(r).map(|(&c, &r)| IfLaw::Linear { c, r }).collect();
        match sigma2(&laws, b, &params).or_status()? {
            Sigma2::Separable { sigma, .. } => {
                *sigma_out = sigma;
                Ok(())
            }
            Sigma2::Unseparable { pair } => {
                Err(fail(AsstStatus::Unseparable, format!("components {} and {pair} cannot be separated", pair - 1)))
            }
        }
    })
}
