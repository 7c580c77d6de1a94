//! Command-line front end: `transform`, `estimate` and `separate`.
//!
//! Every option is validated before any transform runs. Exit code 1 means
//! the configuration was rejected, 2 that a computation or write failed.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cwt::ScaleGrid;
use crate::error::Error;
use crate::estimation::{estimate_sigma, EstimationConfig, SigmaGrid, SigmaTrack};
use crate::export::{
    parse_table, write_component, write_separability, write_sigma_track, write_time_freq_plane,
    write_time_scale_plane, Metadata,
};
use crate::plot::write_heatmap;
use crate::reconstruct::{extract_ridges, if_error, recover_components, rmse, RecoveryMode, DEFAULT_JUMP};
use crate::separability::{separability_track, SeparabilityRow};
use crate::signals::{
    add_noise, gen_three_component, gen_two_chirps, load_csv, parse_linear_laws, three_component_laws,
    three_component_parts, two_chirp_laws, two_chirp_parts, IfLaw, Signal,
};
use crate::sst::{synchrosqueeze, PhaseRule, SstConfig, SstOrder, SstOutput, DEFAULT_GAMMA_REL};
use crate::wavelets::WaveletParams;

/// Time range used for the RMSE and IF-error report.
pub const REPORT_RANGE: (f64, f64) = (0.1, 0.9);

#[derive(Debug, Parser)]
#[command(name = "asst", version, about = "Adaptive CWT and synchrosqueezing with a time-varying window")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write CWT, SST and second-order SST planes with heatmaps.
    Transform(TransformArgs),
    /// Estimate the window-width track.
    Estimate(EstimateArgs),
    /// Estimate the width, squeeze, extract ridges and recover components.
    Separate(SeparateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// `two-chirps`, `three-component` or the path of a signal CSV.
    #[arg(long)]
    pub signal: String,
    /// Sample count for the built-in signals (256 and 512 by default).
    #[arg(long)]
    pub n: Option<usize>,
    /// Sample rate for CSV input without a `# sample_rate=` header.
    #[arg(long)]
    pub sample_rate: Option<f64>,
    /// Add white Gaussian noise at this SNR in dB.
    #[arg(long)]
    pub snr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.2)]
    pub tau0: f64,
    /// Voices per octave.
    #[arg(long, default_value_t = 32)]
    pub voices: usize,
    /// SST validity threshold relative to the plane maximum.
    #[arg(long, default_value_t = DEFAULT_GAMMA_REL)]
    pub gamma_rel: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EstimationArgs {
    #[arg(long, default_value_t = 0.5)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub sigma_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub sigma_step: f64,
    /// Rényi order.
    #[arg(long, default_value_t = 2.5)]
    pub ell: f64,
    /// Entropy half-window in samples.
    #[arg(long, default_value_t = 4)]
    pub zeta: usize,
    /// Peak threshold relative to the plane maximum.
    #[arg(long, default_value_t = 0.2)]
    pub gamma3: f64,
    /// Length of the uniform smoothing filter.
    #[arg(long, default_value_t = 5)]
    pub smooth_len: usize,
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    /// Window width of the conventional planes.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Also write adaptive planes at the estimated width track.
    #[arg(long)]
    pub estimate_sigma: bool,
    /// Also write adaptive planes at the width track in this CSV
    /// (its `sigma_est` column, or its only column).
    #[arg(long, conflicts_with = "estimate_sigma")]
    pub sigma_track: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    /// Linear IF laws `c1,r1;c2,r2;...` for the separability columns.
    #[arg(long)]
    pub laws: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SeparateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    /// Number of components to extract.
    #[arg(long, default_value_t = 3)]
    pub components: usize,
    /// Half-width of the integration band in bins.
    #[arg(long, default_value_t = 2)]
    pub band: usize,
    /// Largest ridge jump between adjacent times, in bins.
    #[arg(long, default_value_t = DEFAULT_JUMP)]
    pub jump: usize,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Compute(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Compute(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Compute(e)
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Errors are printed to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Transform(a) => cmd_transform(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Separate(a) => cmd_separate(a),
    }
}

/// Built-in test signal with its parts and IF laws.
struct Truth {
    parts: Vec<Signal>,
    laws: Vec<IfLaw>,
}

struct Input {
    signal: Signal,
    truth: Option<Truth>,
    params: WaveletParams,
    scales: ScaleGrid,
    meta: Metadata,
}

fn prepare(c: &CommonArgs, command: &str) -> Result<Input, CliError> {
    let params = WaveletParams::new(c.mu, c.tau0).map_err(config_err)?;
    if c.voices == 0 {
        return Err(config_err("--voices must be at least 1"));
    }
    if !(c.gamma_rel > 0.0 && c.gamma_rel < 1.0) {
        return Err(config_err(format!("--gamma-rel must lie in (0, 1), got {}", c.gamma_rel)));
    }
    if let Some(s) = c.snr {
        if !s.is_finite() {
            return Err(config_err("--snr must be finite"));
        }
    }
    let builtin = |default_n: usize| -> Result<usize, CliError> {
        if c.sample_rate.is_some() {
            return Err(config_err("--sample-rate applies to CSV input only"));
        }
        let n = c.n.unwrap_or(default_n);
        if n < 16 {
            return Err(config_err(format!("--n must be at least 16, got {n}")));
        }
        Ok(n)
    };
    let (clean, truth) = match c.signal.as_str() {
        "two-chirps" => {
            let n = builtin(256)?;
            let parts = two_chirp_parts(n).map_err(config_err)?;
            (gen_two_chirps(n).map_err(config_err)?, Some(Truth { parts, laws: two_chirp_laws() }))
        }
        "three-component" => {
            let n = builtin(512)?;
            let parts = three_component_parts(n).map_err(config_err)?;
            (gen_three_component(n).map_err(config_err)?, Some(Truth { parts, laws: three_component_laws() }))
        }
        path => {
            if c.n.is_some() {
                return Err(config_err("--n applies to the built-in signals only"));
            }
            let x = load_csv(path, c.sample_rate).map_err(|e| config_err(format!("{path}: {e}")))?;
            (x, None)
        }
    };
    let signal = match c.snr {
        Some(snr) => add_noise(&clean, snr, c.seed).map_err(config_err)?,
        None => clean,
    };
    let scales = ScaleGrid::for_signal(&signal, c.voices).map_err(config_err)?;
    let meta = Metadata::new()
        .with("asst_version", env!("CARGO_PKG_VERSION"))
        .with("command", command)
        .with("signal", &c.signal)
        .with("n", signal.len())
        .with("sample_rate", signal.sample_rate())
        .with("t0", signal.t0())
        .with("snr_db", c.snr.map_or("none".to_string(), |s| s.to_string()))
        .with("seed", c.seed)
        .with("mu", params.mu())
        .with("tau0", params.tau0())
        .with("n_voices", c.voices)
        .with("gamma_rel", c.gamma_rel);
    Ok(Input { signal, truth, params, scales, meta })
}

fn estimation_config(e: &EstimationArgs, voices: usize, params: &WaveletParams, meta: &mut Metadata) -> Result<EstimationConfig, CliError> {
    if e.smooth_len == 0 {
        return Err(config_err("--smooth-len must be at least 1"));
    }
    let grid = SigmaGrid::new(e.sigma_min, e.sigma_max, e.sigma_step).map_err(config_err)?;
    let config = EstimationConfig {
        grid,
        n_voices: voices,
        zeta: e.zeta,
        ell: e.ell,
        gamma3: e.gamma3,
        smoothing: vec![1.0 / e.smooth_len as f64; e.smooth_len],
    };
    config.validate(params).map_err(config_err)?;
    meta.push("sigma_min", e.sigma_min);
    meta.push("sigma_max", e.sigma_max);
    meta.push("sigma_step", e.sigma_step);
    meta.push("ell", e.ell);
    meta.push("zeta", e.zeta);
    meta.push("gamma3", e.gamma3);
    meta.push("smooth_len", e.smooth_len);
    Ok(config)
}

fn create_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Compute(Error::Io(e)))
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(BufWriter<File>) -> crate::Result<()>) -> Result<(), CliError> {
    let file = File::create(dir.join(name)).map_err(Error::Io)?;
    f(BufWriter::new(file))?;
    Ok(())
}

fn sst_config(order: SstOrder, rule: PhaseRule, gamma_rel: f64) -> SstConfig {
    SstConfig { order, rule, gamma_rel, ..SstConfig::default() }
}

fn write_sst_set(
    input: &Input,
    sigma: &[f64],
    rule: PhaseRule,
    gamma_rel: f64,
    suffix: &str,
    out: &Path,
) -> Result<(), CliError> {
    let run = |order| synchrosqueeze(&input.signal, sigma, &input.params, &input.scales, &sst_config(order, rule, gamma_rel));
    let first: SstOutput = run(SstOrder::First)?;
    let second: SstOutput = run(SstOrder::Second)?;
    let rule_name = match rule {
        PhaseRule::Adaptive => "adaptive",
        PhaseRule::Conventional => "conventional",
    };
    let meta = input.meta.clone().with("phase_rule", rule_name);
    let cwt_name = format!("cwt_{suffix}");
    write_file(out, &format!("{cwt_name}.csv"), |w| {
        write_time_scale_plane(&first.cwt, &meta.clone().with("output", &cwt_name), w)
    })?;
    write_heatmap(&first.cwt.magnitude(), true, out.join(format!("{cwt_name}.png")))?;
    for (label, o) in [("sst1", &first), ("sst2", &second)] {
        let name = format!("{label}_{suffix}");
        write_file(out, &format!("{name}.csv"), |w| {
            write_time_freq_plane(&o.tf, &meta.clone().with("output", &name), w)
        })?;
        write_heatmap(&o.tf.magnitude(), false, out.join(format!("{name}.png")))?;
    }
    Ok(())
}

fn read_track(path: &Path, n: usize) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let table = parse_table(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let track = match table.column("sigma_est") {
        Some(c) => c,
        None if table.columns.len() == 1 => table.rows.iter().map(|r| r[0]).collect(),
        None => return Err(config_err(format!("{}: no `sigma_est` column", path.display()))),
    };
    if track.len() != n {
        return Err(config_err(format!("{}: track has {} values, signal has {n}", path.display(), track.len())));
    }
    Ok(track)
}

fn write_track(track: &SigmaTrack, truth: Option<&[SeparabilityRow]>, out: &Path, meta: &Metadata) -> Result<(), CliError> {
    write_file(out, "sigma_track.csv", |w| write_sigma_track(track, truth, &meta.clone().with("output", "sigma_track"), w))
}

pub fn cmd_transform(a: &TransformArgs) -> Result<(), CliError> {
    let mut input = prepare(&a.common, "transform")?;
    input.params.check_sigma(a.sigma).map_err(config_err)?;
    input.meta.push("sigma", a.sigma);
    let n = input.signal.len();
    let mut meta = input.meta.clone();
    let config = if a.estimate_sigma {
        Some(estimation_config(&a.estimation, a.common.voices, &input.params, &mut meta)?)
    } else {
        None
    };
    let supplied = match &a.sigma_track {
        Some(p) => {
            let t = read_track(p, n)?;
            for &s in &t {
                input.params.check_sigma(s).map_err(config_err)?;
            }
            meta.push("sigma_track", p.display());
            Some(t)
        }
        None => None,
    };
    input.meta = meta.clone();
    let out = &a.common.out;
    create_out(out)?;

    write_sst_set(&input, &vec![a.sigma; n], PhaseRule::Conventional, a.common.gamma_rel, "conventional", out)?;
    let track = match (config, supplied) {
        (Some(config), _) => {
            let track = estimate_sigma(&input.signal, &input.params, &config)?;
            write_track(&track, None, out, &meta)?;
            Some(track.sigma_est)
        }
        (None, Some(t)) => Some(t),
        (None, None) => None,
    };
    if let Some(track) = track {
        write_sst_set(&input, &track, PhaseRule::Adaptive, a.common.gamma_rel, "adaptive", out)?;
    }
    Ok(())
}

pub fn cmd_estimate(a: &EstimateArgs) -> Result<(), CliError> {
    let input = prepare(&a.common, "estimate")?;
    let mut meta = input.meta.clone();
    let config = estimation_config(&a.estimation, a.common.voices, &input.params, &mut meta)?;
    let laws = match &a.laws {
        Some(s) => {
            meta.push("laws", s);
            Some(parse_linear_laws(s).map_err(config_err)?)
        }
        None => None,
    };
    let out = &a.common.out;
    create_out(out)?;
    let track = estimate_sigma(&input.signal, &input.params, &config)?;
    let rows = match &laws {
        Some(laws) => Some(separability_track(laws, &track.times, &input.params)?),
        None => None,
    };
    write_track(&track, rows.as_deref(), out, &meta)?;
    if let Some(rows) = &rows {
        write_file(out, "separability.csv", |w| write_separability(rows, &meta.clone().with("output", "separability"), w))?;
    }
    Ok(())
}

/// Mean IF of a law over the record.
fn mean_if(law: &IfLaw, times: &[f64]) -> f64 {
    times.iter().map(|&t| law.phi1(t)).sum::<f64>() / times.len() as f64
}

pub fn cmd_separate(a: &SeparateArgs) -> Result<(), CliError> {
    let input = prepare(&a.common, "separate")?;
    let mut meta = input.meta.clone();
    let config = estimation_config(&a.estimation, a.common.voices, &input.params, &mut meta)?;
    if a.components == 0 {
        return Err(config_err("--components must be at least 1"));
    }
    meta.push("components", a.components);
    meta.push("band", a.band);
    meta.push("jump", a.jump);
    let out = &a.common.out;
    create_out(out)?;

    let x = &input.signal;
    let track = estimate_sigma(x, &input.params, &config)?;
    write_track(&track, None, out, &meta)?;
    let sst = synchrosqueeze(
        x,
        &track.sigma_est,
        &input.params,
        &input.scales,
        &sst_config(SstOrder::Second, PhaseRule::Adaptive, a.common.gamma_rel),
    )?;
    write_file(out, "sst2_adaptive.csv", |w| {
        write_time_freq_plane(&sst.tf, &meta.clone().with("phase_rule", "adaptive").with("output", "sst2_adaptive"), w)
    })?;
    write_heatmap(&sst.tf.magnitude(), false, out.join("sst2_adaptive.png"))?;

    let ridges = extract_ridges(&sst.tf, a.components, a.band, a.jump)?;
    if ridges.is_partial() {
        eprintln!(
            "warning: found {} of {} requested ridges; writing the ones found",
            ridges.ridges.len(),
            a.components
        );
    }
    let mode = if x.is_real() { RecoveryMode::Real } else { RecoveryMode::Analytic };
    let comps = recover_components(&sst.tf, &ridges, &input.params, mode)?;
    for (i, c) in comps.iter().enumerate() {
        let name = format!("component_{}", i + 1);
        write_file(out, &format!("{name}.csv"), |w| write_component(c, &meta.clone().with("output", &name), w))?;
    }

    if let Some(truth) = &input.truth {
        let times = x.times();
        let (lo, hi) = REPORT_RANGE;
        let range = x.index_range(lo, hi);
        // a full set pairs by frequency order; a partial one takes the
        // unused true component with the nearest mean IF
        let means: Vec<f64> = truth.laws.iter().map(|l| mean_if(l, &times)).collect();
        let mut order: Vec<usize> = (0..means.len()).collect();
        order.sort_by(|&p, &q| means[p].total_cmp(&means[q]));
        let mut used = vec![false; truth.laws.len()];
        let mut lines = Vec::new();
        for (i, c) in comps.iter().enumerate() {
            let mean_est = c.ridge_hz.iter().sum::<f64>() / c.ridge_hz.len() as f64;
            let k = if comps.len() == means.len() {
                order[i]
            } else {
                match (0..means.len())
                    .filter(|&k| !used[k])
                    .min_by(|&p, &q| (means[p] - mean_est).abs().total_cmp(&(means[q] - mean_est).abs()))
                {
                    Some(k) => k,
                    None => break,
                }
            };
            used[k] = true;
            let e = rmse(&truth.parts[k], &c.signal, lo, hi)?;
            let est = &c.ridge_hz[range.clone()];
            let tru: Vec<f64> = times[range.clone()].iter().map(|&t| truth.laws[k].phi1(t)).collect();
            let f = if_error(est, &tru)?;
            lines.push(format!("{},{},{},{}", i + 1, k + 1, e, f));
        }
        write_file(out, "report.csv", |mut w| {
            use std::io::Write;
            meta.clone().with("output", "report").with("metric_range", format!("{lo}..{hi}")).write(&mut w)?;
            writeln!(w, "component,truth,rmse,if_error")?;
            for l in &lines {
                writeln!(w, "{l}")?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("asst").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults_match_the_documented_settings() {
        let Command::Separate(a) = parse(&["separate", "--signal", "two-chirps"]).command else { panic!() };
        assert_eq!((a.common.mu, a.common.tau0, a.common.voices), (1.0, 0.2, 32));
        let e = &a.estimation;
        assert_eq!((e.sigma_min, e.sigma_max, e.sigma_step), (0.5, 10.0, 0.05));
        assert_eq!((e.ell, e.zeta, e.gamma3, e.smooth_len), (2.5, 4, 0.2, 5));
        assert_eq!((a.band, a.components, a.jump), (2, 3, DEFAULT_JUMP));
        assert_eq!(a.common.gamma_rel, DEFAULT_GAMMA_REL);
    }

    #[test]
    fn config_errors_exit_with_one() {
        let code = |args: &[&str]| main_with_args(std::iter::once("asst").chain(args.iter().copied()));
        assert_eq!(code(&["transform", "--signal", "two-chirps", "--sigma", "0.1"]), 1);
        assert_eq!(code(&["transform", "--bogus"]), 1);
        assert_eq!(code(&["estimate", "--signal", "two-chirps", "--laws", "12,50;34"]), 1);
        assert_eq!(code(&["estimate", "--signal", "/no/such/file.csv"]), 1);
        assert_eq!(code(&["estimate", "--signal", "two-chirps", "--n", "8"]), 1);
        assert_eq!(code(&["separate", "--signal", "two-chirps", "--components", "0"]), 1);
        assert_eq!(code(&["estimate", "--signal", "two-chirps", "--sigma-min", "0.1"]), 1);
        assert_eq!(code(&["estimate", "--signal", "two-chirps", "--ell", "1"]), 1);
        assert_eq!(code(&["--help"]), 0);
    }
}
