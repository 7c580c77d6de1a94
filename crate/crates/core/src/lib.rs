//! Adaptive continuous wavelet transform and synchrosqueezing with a
//! time-varying window parameter.
//!
//! The crate is organised bottom-up:
//!
//! * [`signals`]: sampled signals, synthetic test signals, noise and CSV input.
//! * [`wavelets`]: the simplified Morlet family and its support calculus.
//! * [`cwt`]: adaptive CWT (per-time window width), kernel variants and the
//!   closed-form linear-chirp transform.
//! * [`sst`]: phase transformations (first and second order, adaptive and
//!   conventional) and synchrosqueezing onto a linear frequency grid.
//! * [`separability`]: support zones and the minimal separating window widths
//!   for known instantaneous-frequency laws.
//! * [`estimation`]: blind selection of the window width from the signal.
//! * [`reconstruct`]: full-signal and per-component recovery, ridge extraction.
//! * [`export`], [`plot`], [`cli`]: CSV/PNG output and the command-line front end.

pub mod cli;
pub mod cwt;
pub mod error;
pub mod estimation;
pub mod export;
pub mod plot;
pub mod reconstruct;
pub mod separability;
pub mod signals;
pub mod sst;
pub mod wavelets;

pub use num_complex::Complex64;

pub use cwt::{adaptive_cwt, cwt_constant, Kernel, ScaleGrid, SigmaQuantizer, TimeScalePlane};
pub use error::{Error, Result};
pub use estimation::{estimate_sigma, EstimationConfig, SigmaGrid, SigmaTrack};
pub use reconstruct::{extract_ridges, recover_component, recover_signal, RecoveryMode, RidgeSet};
pub use signals::{IfLaw, LfmComponent, Signal};
pub use sst::{synchrosqueeze, PhasePlane, PhaseRule, SstConfig, SstOrder, TimeFreqPlane};
pub use wavelets::WaveletParams;
