//! Sampled signals, the synthetic test signals and CSV ingestion.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A uniformly sampled, real or complex time series.
///
/// Sample `n` sits at time `t0 + n / sample_rate`. Real signals keep their
/// samples as complex numbers with an exactly zero imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<Complex64>,
    sample_rate: f64,
    t0: f64,
    is_real: bool,
}

impl Signal {
    pub fn from_real(samples: Vec<f64>, sample_rate: f64, t0: f64) -> Result<Self> {
        let samples = samples.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        Self::build(samples, sample_rate, t0, true)
    }

    /// Complex signal. `is_real` stays false even if every imaginary part
    /// happens to be zero.
    pub fn from_complex(samples: Vec<Complex64>, sample_rate: f64, t0: f64) -> Result<Self> {
        Self::build(samples, sample_rate, t0, false)
    }

    fn build(samples: Vec<Complex64>, sample_rate: f64, t0: f64, is_real: bool) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid(format!(
                "a signal needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid(format!("sample rate must be positive, got {sample_rate}")));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("start time must be finite"));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("signal contains non-finite samples"));
        }
        Ok(Signal { samples, sample_rate, t0, is_real })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.sample_rate
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.time(n)).collect()
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    /// Mean of |x|^2.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    /// Index range `[lo, hi)` of the samples whose time lies in `[t_lo, t_hi]`.
    pub fn index_range(&self, t_lo: f64, t_hi: f64) -> std::ops::Range<usize> {
        let lo = ((t_lo - self.t0) * self.sample_rate).ceil().max(0.0) as usize;
        let hi = (((t_hi - self.t0) * self.sample_rate).floor() + 1.0).max(0.0) as usize;
        lo.min(self.len())..hi.min(self.len()).max(lo.min(self.len()))
    }

    /// Elementwise sum of two signals on the same time grid.
    pub fn try_add(&self, other: &Signal) -> Result<Signal> {
        self.check_same_grid(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect();
        Self::build(samples, self.sample_rate, self.t0, self.is_real && other.is_real)
    }

    pub(crate) fn check_same_grid(&self, other: &Signal) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: other.len() });
        }
        if self.sample_rate != other.sample_rate || self.t0 != other.t0 {
            return Err(Error::invalid("signals have different sample rates or start times"));
        }
        Ok(())
    }

    /// Writes the signal in the CSV format read by [`load_csv`].
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# sample_rate={}", self.sample_rate)?;
        writeln!(out, "# t0={}", self.t0)?;
        for z in &self.samples {
            if self.is_real {
                writeln!(out, "{}", z.re)?;
            } else {
                writeln!(out, "{},{}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

/// Linear-frequency-modulated component
/// `A e^{pt + qt^2/2} e^{i 2 pi (ct + rt^2/2)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfmComponent {
    pub amplitude: f64,
    /// Start frequency (Hz).
    pub c: f64,
    /// Chirp rate (Hz/s).
    pub r: f64,
    /// Amplitude growth (1/s).
    pub p: f64,
    /// Amplitude curvature (1/s^2).
    pub q: f64,
}

impl LfmComponent {
    pub fn new(amplitude: f64, c: f64, r: f64) -> Result<Self> {
        Self::with_envelope(amplitude, c, r, 0.0, 0.0)
    }

    pub fn with_envelope(amplitude: f64, c: f64, r: f64, p: f64, q: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::invalid(format!("start frequency must be positive, got {c}")));
        }
        Ok(LfmComponent { amplitude, c, r, p, q })
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let envelope = self.amplitude * (self.p * t + 0.5 * self.q * t * t).exp();
        let phase = 2.0 * PI * (self.c * t + 0.5 * self.r * t * t);
        Complex64::from_polar(envelope, phase)
    }

    pub fn if_law(&self) -> IfLaw {
        IfLaw::Linear { c: self.c, r: self.r }
    }

    /// Analytic samples on `n` points of `[0, 1)` at `n` Hz.
    pub fn sample(&self, n_samples: usize) -> Result<Signal> {
        check_len(n_samples)?;
        let fs = n_samples as f64;
        let samples = (0..n_samples).map(|n| self.eval(n as f64 / fs)).collect();
        Signal::from_complex(samples, fs, 0.0)
    }
}

/// Instantaneous-frequency law of one component: phi'(t) in Hz and
/// phi''(t) in Hz/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IfLaw {
    /// `c + r t`.
    Linear { c: f64, r: f64 },
    /// `center + depth * sin(2 pi rate t)`.
    SinusoidalFm { center: f64, depth: f64, rate: f64 },
}

impl IfLaw {
    pub fn tone(freq: f64) -> Self {
        IfLaw::Linear { c: freq, r: 0.0 }
    }

    pub fn phi1(&self, t: f64) -> f64 {
        match *self {
            IfLaw::Linear { c, r } => c + r * t,
            IfLaw::SinusoidalFm { center, depth, rate } => center + depth * (2.0 * PI * rate * t).sin(),
        }
    }

    pub fn phi2(&self, t: f64) -> f64 {
        match *self {
            IfLaw::Linear { r, .. } => r,
            IfLaw::SinusoidalFm { depth, rate, .. } => depth * 2.0 * PI * rate * (2.0 * PI * rate * t).cos(),
        }
    }
}

/// Parses `"c1,r1;c2,r2;..."` into linear IF laws.
pub fn parse_linear_laws(spec: &str) -> Result<Vec<IfLaw>> {
    let mut laws = Vec::new();
    let mut offset = 0usize;
    for part in spec.split(';') {
        let at = offset;
        offset += part.len() + 1;
        let trimmed = part.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: 1,
                message: format!("law at position {at}: expected `c,r`, got `{trimmed}`"),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: 1,
                message: format!("law at position {at}: `{s}` is not a number"),
            })
        };
        laws.push(IfLaw::Linear { c: parse(fields[0])?, r: parse(fields[1])? });
    }
    if laws.is_empty() {
        return Err(Error::Parse { line: 1, message: "no laws given".into() });
    }
    Ok(laws)
}

fn check_len(n_samples: usize) -> Result<()> {
    if n_samples < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {n_samples}")));
    }
    Ok(())
}

fn sample_unit_interval(n_samples: usize, f: impl Fn(f64) -> f64) -> Result<Signal> {
    check_len(n_samples)?;
    let fs = n_samples as f64;
    let samples = (0..n_samples).map(|n| f(n as f64 / fs)).collect();
    Signal::from_real(samples, fs, 0.0)
}

pub const TWO_CHIRP_STARTS: [f64; 2] = [12.0, 34.0];
pub const TWO_CHIRP_RATES: [f64; 2] = [50.0, 64.0];

/// `cos(2 pi (12 t + 25 t^2)) + cos(2 pi (34 t + 32 t^2))` on `[0, 1)`.
pub fn gen_two_chirps(n_samples: usize) -> Result<Signal> {
    let parts = two_chirp_parts(n_samples)?;
    parts[0].try_add(&parts[1])
}

pub fn two_chirp_parts(n_samples: usize) -> Result<Vec<Signal>> {
    (0..2)
        .map(|k| {
            let (c, r) = (TWO_CHIRP_STARTS[k], TWO_CHIRP_RATES[k]);
            sample_unit_interval(n_samples, |t| (2.0 * PI * (c * t + 0.5 * r * t * t)).cos())
        })
        .collect()
}

pub fn two_chirp_laws() -> Vec<IfLaw> {
    (0..2).map(|k| IfLaw::Linear { c: TWO_CHIRP_STARTS[k], r: TWO_CHIRP_RATES[k] }).collect()
}

/// `cos(16 pi t) + cos(96 pi t + 30 cos(4 pi t)) + cos(180 pi t + 30 cos(4 pi t))`
/// on `[0, 1)`.
pub fn gen_three_component(n_samples: usize) -> Result<Signal> {
    let parts = three_component_parts(n_samples)?;
    parts[0].try_add(&parts[1])?.try_add(&parts[2])
}

pub fn three_component_parts(n_samples: usize) -> Result<Vec<Signal>> {
    Ok(vec![
        sample_unit_interval(n_samples, |t| (16.0 * PI * t).cos())?,
        sample_unit_interval(n_samples, |t| (96.0 * PI * t + 30.0 * (4.0 * PI * t).cos()).cos())?,
        sample_unit_interval(n_samples, |t| (180.0 * PI * t + 30.0 * (4.0 * PI * t).cos()).cos())?,
    ])
}

pub fn three_component_laws() -> Vec<IfLaw> {
    vec![
        IfLaw::tone(8.0),
        IfLaw::SinusoidalFm { center: 48.0, depth: -60.0, rate: 2.0 },
        IfLaw::SinusoidalFm { center: 90.0, depth: -60.0, rate: 2.0 },
    ]
}

/// Adds white Gaussian noise at the requested SNR (total signal power over
/// noise power, in dB).
///
/// Noise is drawn from a ChaCha20 stream seeded with `seed` and rescaled so
/// the realised noise power matches the target exactly. Real signals get real
/// noise; complex signals get circular complex noise.
pub fn add_noise(x: &Signal, snr_db: f64, seed: u64) -> Result<Signal> {
    if !snr_db.is_finite() {
        return Err(Error::invalid(format!("SNR must be finite, got {snr_db}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut noise: Vec<Complex64> = (0..x.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            if x.is_real() {
                Complex64::new(re, 0.0)
            } else {
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            }
        })
        .collect();
    let target = x.power() / 10f64.powf(snr_db / 10.0);
    let realised = noise.iter().map(|z| z.norm_sqr()).sum::<f64>() / noise.len() as f64;
    let gain = if realised > 0.0 { (target / realised).sqrt() } else { 0.0 };
    for z in &mut noise {
        *z *= gain;
    }
    let samples = x.samples().iter().zip(&noise).map(|(a, b)| a + b).collect();
    Signal::build(samples, x.sample_rate(), x.t0(), x.is_real())
}

/// Reads a signal from CSV: one real sample per line, or `re,im` per line.
///
/// Lines starting with `#` are comments; `# sample_rate=<Hz>` and `# t0=<s>`
/// set the sampling metadata. `sample_rate` overrides the header when given.
pub fn load_csv(path: impl AsRef<Path>, sample_rate: Option<f64>) -> Result<Signal> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, sample_rate)
}

pub fn parse_csv(text: &str, sample_rate: Option<f64>) -> Result<Signal> {
    let mut header_rate = None;
    let mut t0 = 0.0;
    let mut columns: Option<usize> = None;
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for item in comment.split(|c: char| c.is_whitespace() || c == ',') {
                if let Some((key, value)) = item.split_once('=') {
                    let parse = || {
                        value.trim().parse::<f64>().map_err(|_| Error::Parse {
                            line: line_no,
                            message: format!("bad value for `{key}`: `{value}`"),
                        })
                    };
                    match key.trim() {
                        "sample_rate" => header_rate = Some(parse()?),
                        "t0" => t0 = parse()?,
                        _ => {}
                    }
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() > 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 1 or 2 columns, found {}", fields.len()),
            });
        }
        match columns {
            None => columns = Some(fields.len()),
            Some(c) if c != fields.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {c} columns, found {}", fields.len()),
                })
            }
            _ => {}
        }
        let mut vals = [0.0; 2];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("`{f}` is not a number"),
            })?;
        }
        samples.push(Complex64::new(vals[0], vals[1]));
    }
    if samples.is_empty() {
        return Err(Error::Parse { line: 0, message: "no samples in input".into() });
    }
    let rate = sample_rate.or(header_rate).ok_or(Error::MissingSampleRate)?;
    if columns == Some(1) {
        Signal::build(samples, rate, t0, true)
    } else {
        Signal::from_complex(samples, rate, t0)
    }
}

/// One-line summary used in CSV metadata headers.
pub fn describe(x: &Signal) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "n={} sample_rate={} t0={} kind={}",
        x.len(),
        x.sample_rate(),
        x.t0(),
        if x.is_real() { "real" } else { "complex" }
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_chirps_shape_and_values() {
        let x = gen_two_chirps(256).unwrap();
        assert_eq!(x.len(), 256);
        assert_eq!(x.sample_rate(), 256.0);
        assert!(x.is_real());
        assert_eq!(x.samples()[0].re, 2.0);
        // t = 0.5 is sample 128: cos(2 pi * 12.25) + cos(2 pi * 25)
        let expect = (2.0 * PI * (12.0 * 0.5 + 25.0 * 0.25)).cos() + (2.0 * PI * (34.0 * 0.5 + 32.0 * 0.25)).cos();
        assert!((x.samples()[128].re - expect).abs() < 1e-12);
        assert!((expect - (24.5f64 * PI).cos() - 1.0).abs() < 1e-9);
        assert!(x.samples().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn generators_reject_short_lengths() {
        assert!(gen_two_chirps(1).is_err());
        assert!(gen_three_component(0).is_err());
    }

    #[test]
    fn two_chirp_laws_are_ordered() {
        let laws = two_chirp_laws();
        for n in 0..256 {
            let t = n as f64 / 256.0;
            assert!(laws[0].phi1(t) < laws[1].phi1(t));
        }
    }

    #[test]
    fn three_component_values() {
        let x = gen_three_component(512).unwrap();
        assert_eq!(x.sample_rate(), 512.0);
        let expect = 1.0 + 2.0 * 30f64.cos();
        assert!((x.samples()[0].re - expect).abs() < 1e-12);
        let law = three_component_laws()[1];
        for &t in &[0.0, 0.1, 0.37] {
            assert!((law.phi1(t) - (48.0 - 60.0 * (4.0 * PI * t).sin())).abs() < 1e-12);
            // finite-difference check of phi2
            let h = 1e-6;
            let fd = (law.phi1(t + h) - law.phi1(t - h)) / (2.0 * h);
            assert!((fd - law.phi2(t)).abs() < 1e-4);
        }
    }

    #[test]
    fn noise_is_deterministic_and_hits_snr() {
        let x = gen_three_component(512).unwrap();
        let a = add_noise(&x, 10.0, 7).unwrap();
        let b = add_noise(&x, 10.0, 7).unwrap();
        assert_eq!(a, b);
        let noise_power = a
            .samples()
            .iter()
            .zip(x.samples())
            .map(|(y, s)| (y - s).norm_sqr())
            .sum::<f64>()
            / 512.0;
        let snr = 10.0 * (x.power() / noise_power).log10();
        assert!((snr - 10.0).abs() < 0.5, "snr {snr}");
        assert_eq!(a.len(), x.len());
        assert_eq!(a.sample_rate(), x.sample_rate());
        assert_eq!(a.t0(), x.t0());
        assert!(a.is_real());
    }

    #[test]
    fn huge_snr_leaves_signal_intact() {
        let x = gen_two_chirps(256).unwrap();
        let y = add_noise(&x, 300.0, 1).unwrap();
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
        }
    }

    #[test]
    fn csv_real_with_header() {
        let mut text = String::from("# sample_rate=142857.14\n");
        for n in 0..400 {
            text.push_str(&format!("{}\n", (n as f64 * 0.1).sin()));
        }
        let x = parse_csv(&text, None).unwrap();
        assert_eq!(x.len(), 400);
        assert!(x.is_real());
        assert_eq!(x.sample_rate(), 142857.14);
    }

    #[test]
    fn csv_errors() {
        assert!(parse_csv("", Some(10.0)).is_err());
        assert!(matches!(parse_csv("1\n2\n", None), Err(Error::MissingSampleRate)));
        match parse_csv("# sample_rate=4\n1\n2\nx\n", None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_csv("# sample_rate=4\n1\n2,3\n", None).is_err());
    }

    #[test]
    fn csv_two_columns_is_complex() {
        let x = parse_csv("# sample_rate=8 t0=0.5\n1,0\n0,1\n-1,0\n", None).unwrap();
        assert!(!x.is_real());
        assert_eq!(x.t0(), 0.5);
        assert_eq!(x.samples()[1], Complex64::new(0.0, 1.0));
        let y = parse_csv("1,0\n0,1\n", Some(3.0)).unwrap();
        assert_eq!(y.sample_rate(), 3.0);
    }

    #[test]
    fn csv_round_trip() {
        let x = gen_two_chirps(64).unwrap();
        let mut buf = Vec::new();
        x.write_csv(&mut buf).unwrap();
        let y = parse_csv(std::str::from_utf8(&buf).unwrap(), None).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn laws_parser() {
        let laws = parse_linear_laws("12,50;34,64").unwrap();
        assert_eq!(laws, two_chirp_laws());
        let err = parse_linear_laws("12,50;34").unwrap_err();
        assert!(err.to_string().contains("position 6"), "{err}");
        assert!(parse_linear_laws("12,a").is_err());
    }

    #[test]
    fn index_range_covers_interval() {
        let x = gen_two_chirps(256).unwrap();
        let r = x.index_range(0.1, 0.9);
        assert_eq!(r.start, 26);
        assert_eq!(r.end, 231);
        assert!(x.time(r.start) >= 0.1 && x.time(r.end - 1) <= 0.9);
    }
}
