//! Command-line front end: SNR sweeps, capacity tables, data-driven estimates
//! and post-FEC prediction.
//!
//! Tabular output is CSV with one header row and numbers printed with 12
//! significant digits. Reports from `estimate` are `key: value` lines; the
//! `normalized-MI` / `normalized-GMI` lines can be fed back to `predict`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::air::{AirEstimate, RateKind};
use crate::channel::{awgn_capacity, NoiseSpec, SnrPoint};
use crate::constellation::{load_constellation, ConstellationError, LabeledConstellation};
use crate::datadriven::{
    estimate_noise_variance, gmi_from_data, low_count_points, mi_from_data,
    DEFAULT_MIN_RECORDS_PER_POINT,
};
use crate::metrics::normalize_rate;
use crate::montecarlo::{rate_mc, MonteCarloConfig, NoiseMode};
use crate::predictor::{
    load_calibration, predict_post_fec, CalibrationError, CalibrationTable, MetricKind,
    NormalizedMetric, Prediction,
};
use crate::quadrature::{
    gmi_quadrature, mi_quadrature, QuadratureSpec, DEFAULT_NODES_PER_REAL_DIM,
};
use crate::records::load_records;

pub const DEFAULT_SEED: u64 = 1;

/// Significant digits of every number written to CSV.
pub const CSV_DIGITS: usize = 12;

#[derive(Debug, Parser)]
#[command(
    name = "airate",
    version,
    about = "Achievable information rates over AWGN"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// MI versus SNR, with the AWGN capacity for reference.
    MiSweep(SweepArgs),
    /// GMI versus SNR for a labeled constellation.
    GmiSweep(SweepArgs),
    /// AWGN capacity versus SNR.
    Capacity(CapacityArgs),
    /// Noise variance and MI/GMI estimated from recorded transmissions.
    Estimate(EstimateArgs),
    /// Post-FEC error rate predicted from a normalized MI/GMI.
    Predict(PredictArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseModeArg {
    /// Fresh noise for every constellation point.
    Independent,
    /// One noise batch reused by all points.
    Shared,
}

impl From<NoiseModeArg> for NoiseMode {
    fn from(mode: NoiseModeArg) -> Self {
        match mode {
            NoiseModeArg::Independent => NoiseMode::Independent,
            NoiseModeArg::Shared => NoiseMode::Shared,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Mi,
    Gmi,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Mi,
    Gmi,
}

impl From<KindArg> for MetricKind {
    fn from(kind: KindArg) -> Self {
        match kind {
            KindArg::Mi => MetricKind::NormalizedMi,
            KindArg::Gmi => MetricKind::NormalizedGmi,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Constellation file: 2N real columns per row, optional label column.
    #[arg(long)]
    pub constellation: PathBuf,
    /// Complex dimensions N per symbol.
    #[arg(long, default_value_t = 1)]
    pub dims: usize,
    /// SNR grid in dB as start:step:stop.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    pub snr_db: SnrGrid,
    /// Defaults to quadrature for N <= 2 and monte-carlo otherwise.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Monte Carlo samples per constellation point.
    #[arg(long, env = "AIRATE_SAMPLES")]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Gauss-Hermite nodes per real dimension.
    #[arg(long, default_value_t = DEFAULT_NODES_PER_REAL_DIM)]
    pub nodes: usize,
    #[arg(long = "noise-mode", value_enum, default_value_t = NoiseModeArg::Independent)]
    pub noise_mode: NoiseModeArg,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[arg(long, default_value_t = 1)]
    pub dims: usize,
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    pub snr_db: SnrGrid,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub constellation: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub dims: usize,
    /// Records file: 1-based transmitted index, then 2N received reals.
    #[arg(long)]
    pub records: PathBuf,
    /// Defaults to both for labeled constellations and mi otherwise.
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Points with fewer records than this are reported as unreliable.
    #[arg(long = "min-count", default_value_t = DEFAULT_MIN_RECORDS_PER_POINT)]
    pub min_count: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Calibration table with metric_kind and code_rate headers.
    #[arg(long)]
    pub calibration: PathBuf,
    /// Normalized metric value in [0, 1].
    #[arg(
        long,
        required_unless_present = "report",
        conflicts_with = "report",
        requires = "kind"
    )]
    pub value: Option<f64>,
    /// Kind of --value.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Report written by `estimate`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Target post-FEC error rate.
    #[arg(long = "target-ber")]
    pub target_ber: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// An SNR grid in dB, `start:step:stop` inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrGrid {
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

impl SnrGrid {
    pub fn new(start: f64, step: f64, stop: f64) -> Result<Self, String> {
        if !(start.is_finite() && step.is_finite() && stop.is_finite()) {
            return Err("SNR grid values must be finite".into());
        }
        if step <= 0.0 {
            return Err(format!("SNR step must be positive, got {step}"));
        }
        if start > stop {
            return Err(format!("SNR start {start} exceeds stop {stop}"));
        }
        Ok(Self { start, step, stop })
    }

    /// Grid points `start + k·step` up to `stop`, tolerating rounding at the end.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| self.start + k as f64 * self.step)
            .collect()
    }
}

impl FromStr for SnrGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:step:stop, got `{s}`"));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{t}` is not a number"))
        };
        Self::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

/// Resolved sweep settings.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub constellation: PathBuf,
    pub dims: usize,
    pub grid: SnrGrid,
    pub method: MethodArg,
    pub samples: Option<usize>,
    pub seed: u64,
    pub nodes: usize,
    pub noise_mode: NoiseMode,
}

impl SweepConfig {
    pub fn from_args(args: &SweepArgs) -> Result<Self, clap::Error> {
        let method = args.method.unwrap_or(if args.dims <= 2 {
            MethodArg::Quadrature
        } else {
            MethodArg::MonteCarlo
        });
        if method == MethodArg::MonteCarlo && args.samples.unwrap_or(0) == 0 {
            return Err(Cli::command().error(
                clap::error::ErrorKind::MissingRequiredArgument,
                "monte-carlo needs --samples >= 1 (or AIRATE_SAMPLES)",
            ));
        }
        Ok(Self {
            constellation: args.constellation.clone(),
            dims: args.dims,
            grid: args.snr_db,
            method,
            samples: args.samples,
            seed: args.seed,
            nodes: args.nodes,
            noise_mode: args.noise_mode.into(),
        })
    }
}

/// Usage checks clap cannot express.
pub fn validate(cli: &Cli) -> Result<(), clap::Error> {
    match &cli.command {
        Command::MiSweep(args) | Command::GmiSweep(args) => SweepConfig::from_args(args).map(drop),
        _ => Ok(()),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let (text, output) = match &cli.command {
        Command::MiSweep(args) => (
            mi_sweep(&SweepConfig::from_args(args)?)?,
            args.output.as_deref(),
        ),
        Command::GmiSweep(args) => (
            gmi_sweep(&SweepConfig::from_args(args)?)?,
            args.output.as_deref(),
        ),
        Command::Capacity(args) => (
            capacity_table(args.dims, &args.snr_db)?,
            args.output.as_deref(),
        ),
        Command::Estimate(args) => (estimate_report(args)?, args.output.as_deref()),
        Command::Predict(args) => (predict_line(args)?, args.output.as_deref()),
    };
    emit(&text, output)
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn read_constellation(path: &Path, dims: usize) -> Result<LabeledConstellation> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    load_constellation(BufReader::new(file), dims)
        .with_context(|| format!("invalid constellation file {}", path.display()))
}

/// `%.{digits}g`-style formatting.
pub fn format_g(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Error rates in short scientific form, e.g. `1e-3` or `2.5e-4`.
pub fn format_rate(x: f64) -> String {
    let sci = format!("{x:.3e}");
    match sci.split_once('e') {
        Some((mantissa, exp)) => format!("{}e{exp}", trim_fraction(mantissa)),
        None => sci,
    }
}

fn csv_num(x: f64) -> String {
    format_g(x, CSV_DIGITS)
}

struct SweepRow {
    snr_db: f64,
    estimate: AirEstimate,
    capacity: f64,
}

fn sweep(config: &SweepConfig, kind: RateKind) -> Result<(LabeledConstellation, Vec<SweepRow>)> {
    let c = read_constellation(&config.constellation, config.dims)?;
    if kind == RateKind::Gmi && !c.is_labeled() {
        return Err(ConstellationError::Unlabeled)
            .with_context(|| format!("{} has no bit labels", config.constellation.display()));
    }
    let rows = config
        .grid
        .points()
        .into_par_iter()
        .map(|db| -> Result<SweepRow> {
            let snr = SnrPoint::from_db(db)?;
            let noise = NoiseSpec::for_snr(c.energy(), snr, c.dims())?;
            let estimate = match config.method {
                MethodArg::Quadrature => {
                    let spec = QuadratureSpec::new(&c, noise).with_nodes(config.nodes);
                    match kind {
                        RateKind::Mi => mi_quadrature(&spec)?,
                        RateKind::Gmi => gmi_quadrature(&spec)?,
                    }
                }
                MethodArg::MonteCarlo => {
                    let mc = MonteCarloConfig::new(config.samples.unwrap_or(0), config.seed)
                        .with_noise_mode(config.noise_mode);
                    rate_mc(&c, &noise, kind, &mc)?
                }
            };
            Ok(SweepRow {
                snr_db: db,
                estimate,
                capacity: awgn_capacity(snr, c.dims()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((c, rows))
}

fn stderr_cell(e: &AirEstimate) -> String {
    e.std_error.map(csv_num).unwrap_or_default()
}

/// CSV `snr_db,mi_bits,stderr,capacity_bits`.
pub fn mi_sweep(config: &SweepConfig) -> Result<String> {
    let (_, rows) = sweep(config, RateKind::Mi)?;
    let mut out = String::from("snr_db,mi_bits,stderr,capacity_bits\n");
    for row in &rows {
        writeln!(
            out,
            "{},{},{},{}",
            csv_num(row.snr_db),
            csv_num(row.estimate.value),
            stderr_cell(&row.estimate),
            csv_num(row.capacity)
        )?;
    }
    Ok(out)
}

/// CSV `snr_db,gmi_bits,gmi_normalized,stderr`.
pub fn gmi_sweep(config: &SweepConfig) -> Result<String> {
    let (c, rows) = sweep(config, RateKind::Gmi)?;
    let mut out = String::from("snr_db,gmi_bits,gmi_normalized,stderr\n");
    for row in &rows {
        let normalized = normalize_rate(&row.estimate, c.order())?;
        writeln!(
            out,
            "{},{},{},{}",
            csv_num(row.snr_db),
            csv_num(row.estimate.value),
            csv_num(normalized),
            stderr_cell(&row.estimate)
        )?;
    }
    Ok(out)
}

/// CSV `snr_db,capacity_bits`.
pub fn capacity_table(dims: usize, grid: &SnrGrid) -> Result<String> {
    if dims == 0 {
        bail!("--dims must be at least 1");
    }
    let mut out = String::from("snr_db,capacity_bits\n");
    for db in grid.points() {
        let snr = SnrPoint::from_db(db)?;
        writeln!(out, "{},{}", csv_num(db), csv_num(awgn_capacity(snr, dims)))?;
    }
    Ok(out)
}

fn metric_label(kind: RateKind) -> (&'static str, MetricKind) {
    match kind {
        RateKind::Mi => ("MI", MetricKind::NormalizedMi),
        RateKind::Gmi => ("GMI", MetricKind::NormalizedGmi),
    }
}

/// Text report for a records file.
pub fn estimate_report(args: &EstimateArgs) -> Result<String> {
    let c = read_constellation(&args.constellation, args.dims)?;
    let file = File::open(&args.records)
        .with_context(|| format!("cannot open {}", args.records.display()))?;
    let records = load_records(BufReader::new(file), args.dims)
        .with_context(|| format!("invalid records file {}", args.records.display()))?;

    let metric = args.metric.unwrap_or(if c.is_labeled() {
        MetricArg::Both
    } else {
        MetricArg::Mi
    });
    let kinds: &[RateKind] = match metric {
        MetricArg::Mi => &[RateKind::Mi],
        MetricArg::Gmi => &[RateKind::Gmi],
        MetricArg::Both => &[RateKind::Mi, RateKind::Gmi],
    };

    let noise = estimate_noise_variance(&c, &records)?;
    let counts = records.counts(c.order());
    let mut out = String::new();
    writeln!(out, "records: {}", noise.records)?;
    writeln!(out, "noise_variance: {}", csv_num(noise.total_variance))?;
    let snr = c.energy() / noise.total_variance;
    writeln!(out, "implied_snr: {}", csv_num(snr))?;
    writeln!(out, "implied_snr_db: {}", csv_num(10.0 * snr.log10()))?;
    let counts_text: Vec<String> = counts.iter().map(usize::to_string).collect();
    writeln!(out, "point_counts: {}", counts_text.join(" "))?;

    for &kind in kinds {
        let estimate = match kind {
            RateKind::Mi => mi_from_data(&c, &records)?,
            RateKind::Gmi => gmi_from_data(&c, &records)?,
        };
        let (name, normalized_kind) = metric_label(kind);
        writeln!(out, "{name}_bits: {}", csv_num(estimate.value))?;
        writeln!(out, "{name}_stderr: {}", stderr_cell(&estimate))?;
        if c.order() >= 2 {
            writeln!(
                out,
                "{normalized_kind}: {}",
                csv_num(normalize_rate(&estimate, c.order())?)
            )?;
        }
    }

    let low = low_count_points(&counts, args.min_count);
    if !low.is_empty() {
        let list: Vec<String> = low.iter().map(usize::to_string).collect();
        let message = format!(
            "points {} have fewer than {} records; estimates may be unreliable",
            list.join(", "),
            args.min_count
        );
        log::warn!("{message}");
        writeln!(out, "warning: {message}")?;
    }
    Ok(out)
}

/// Normalized metrics found in an `estimate` report.
pub fn parse_report_metrics(text: &str) -> Vec<NormalizedMetric> {
    text.lines()
        .filter_map(|line| {
            let (key, value) = line.split_once(':')?;
            let kind = match key.trim() {
                "normalized-MI" => MetricKind::NormalizedMi,
                "normalized-GMI" => MetricKind::NormalizedGmi,
                _ => return None,
            };
            let value = value.trim().parse().ok()?;
            Some(NormalizedMetric { kind, value })
        })
        .collect()
}

fn report_metric(path: &Path, table: &CalibrationTable) -> Result<NormalizedMetric> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let metrics = parse_report_metrics(&text);
    let Some(first) = metrics.first() else {
        bail!(
            "{} contains no normalized-MI or normalized-GMI line",
            path.display()
        );
    };
    match metrics.iter().find(|m| m.kind == table.metric_kind()) {
        Some(m) => Ok(*m),
        None => Err(CalibrationError::KindMismatch {
            table: table.metric_kind(),
            query: first.kind,
        }
        .into()),
    }
}

/// One verdict line, e.g. `1e-3, PASS vs 1e-2`.
pub fn render_prediction(prediction: &Prediction, target: f64) -> String {
    let verdict = prediction.verdict(target);
    let target = format_rate(target);
    match *prediction {
        Prediction::Rate(r) => format!("{}, {verdict} vs {target}", format_rate(r)),
        Prediction::AboveWorstCalibrated { bound } => format!(
            "above-worst-calibrated (≥{}), {verdict} vs {target}",
            format_rate(bound)
        ),
        Prediction::BelowBestCalibrated { bound } => format!(
            "below-best-calibrated (≤{}), {verdict} vs {target}",
            format_rate(bound)
        ),
    }
}

pub fn predict_line(args: &PredictArgs) -> Result<String> {
    let file = File::open(&args.calibration)
        .with_context(|| format!("cannot open {}", args.calibration.display()))?;
    let table = load_calibration(BufReader::new(file))
        .with_context(|| format!("invalid calibration file {}", args.calibration.display()))?;
    if !(args.target_ber > 0.0 && args.target_ber < 1.0) {
        return Err(CalibrationError::TargetOutOfRange(args.target_ber).into());
    }
    let metric = match (args.value, &args.report) {
        (Some(value), _) => {
            let kind = args.kind.context("--value needs --kind")?;
            if !(0.0..=1.0).contains(&value) {
                bail!("normalized metric must lie in [0, 1], got {value}");
            }
            NormalizedMetric {
                kind: kind.into(),
                value,
            }
        }
        (None, Some(path)) => report_metric(path, &table)?,
        (None, None) => bail!("give either --value with --kind, or --report"),
    };
    let prediction = predict_post_fec(&table, metric)?;
    Ok(format!(
        "{}\n",
        render_prediction(&prediction, args.target_ber)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format() {
        assert_eq!(format_g(1.0, 12), "1");
        assert_eq!(format_g(0.721451590790, 12), "0.72145159079");
        assert_eq!(format_g(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_g(2.5e-7, 12), "2.5e-07");
        assert_eq!(format_g(1e13, 12), "1e+13");
        assert_eq!(format_g(123456789012.4, 12), "123456789012");
        assert_eq!(format_g(-0.0, 12), "0");
        assert_eq!(format_g(9.999999999999995, 12), "10");
        assert_eq!(format_g(-3.5, 12), "-3.5");
    }

    #[test]
    fn rate_format() {
        assert_eq!(format_rate(1e-3), "1e-3");
        assert_eq!(format_rate(1.0000000000000002e-3), "1e-3");
        assert_eq!(format_rate(2.5e-4), "2.5e-4");
    }

    #[test]
    fn grids() {
        let g: SnrGrid = "0:1:0".parse().unwrap();
        assert_eq!(g.points(), vec![0.0]);
        let g: SnrGrid = "0:0.1:1".parse().unwrap();
        assert_eq!(g.points().len(), 11);
        assert!((g.points()[10] - 1.0).abs() < 1e-12);
        assert!("0:0:1".parse::<SnrGrid>().is_err());
        assert!("5:1:0".parse::<SnrGrid>().is_err());
        assert!("0:1".parse::<SnrGrid>().is_err());
        assert!("a:1:2".parse::<SnrGrid>().is_err());
    }

    #[test]
    fn report_metrics_round_trip() {
        let text = "records: 10\nMI_bits: 1.5\nnormalized-MI: 0.75\nnormalized-GMI: 0.7\n";
        let m = parse_report_metrics(text);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].kind, MetricKind::NormalizedMi);
        assert_eq!(m[1].value, 0.7);
    }

    #[test]
    fn prediction_lines() {
        let p = Prediction::Rate(1e-3);
        assert_eq!(render_prediction(&p, 1e-2), "1e-3, PASS vs 1e-2");
        let p = Prediction::AboveWorstCalibrated { bound: 1e-2 };
        assert_eq!(
            render_prediction(&p, 1e-3),
            "above-worst-calibrated (≥1e-2), FAIL vs 1e-3"
        );
    }
}
