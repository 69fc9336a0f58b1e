//! `apk` command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baseline::{baseline, BaselineMoments};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, parse_qrels, parse_run, BaselineChoice};
use crate::format::sig6;
use crate::metric::Normalization;
use crate::model::ModelSpec;
use crate::oracle::{exact_wor, exact_wr};
use crate::scenarios::{self, GOLDEN_TOLERANCE};
use crate::stochastic::{histogram, monte_carlo, SampleMoments, DEFAULT_BINS};

#[derive(Debug, Parser)]
#[command(name = "apk", version, about = "AP@k / MAP@k against random-ranking baselines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form mean and variance of AP@k under a model.
    Baseline {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "k")]
        k: usize,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// WOR / WR comparison over the scenario grid.
    Scenarios {
        /// Grid file with `label N m p k` lines; defaults to the built-in grid.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Compare against the built-in reference table and fail on deviations.
        #[arg(long)]
        check: bool,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Monte Carlo estimate of AP@k moments.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "k")]
        k: usize,
        #[arg(short = 'n', long = "samples", default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        norm: Option<NormArg>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Exact AP@k distribution by enumeration, as CSV.
    Enumerate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "k")]
        k: usize,
        #[arg(long, value_enum)]
        norm: Option<NormArg>,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Histogram of simulated AP@k values, as CSV.
    Hist {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "k")]
        k: usize,
        #[arg(short = 'n', long = "samples", default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long, value_enum)]
        norm: Option<NormArg>,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a run against qrels and compare MAP@k to the chance baseline.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long = "k")]
        k: usize,
        #[command(flatten)]
        baseline: BaselineArgs,
        #[arg(long, value_enum)]
        norm: Option<NormArg>,
        /// Also write the structured report (JSON) here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ModelArgs {
    /// Sampling without replacement: N items, M relevant.
    #[arg(long, num_args = 2, value_names = ["N", "M"])]
    pub wor: Option<Vec<usize>>,
    /// Bernoulli relevance with probability P.
    #[arg(long, value_name = "P")]
    pub wr: Option<f64>,
}

impl ModelArgs {
    pub fn model(&self) -> Result<ModelSpec> {
        match (&self.wor, self.wr) {
            (Some(v), None) if v.len() == 2 => ModelSpec::wor(v[0], v[1]),
            (None, Some(p)) => ModelSpec::wr(p),
            _ => Err(Error::InvalidArgument("give exactly one of --wor N M or --wr P".into())),
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct BaselineArgs {
    /// WOR baseline over a pool of N items, using each query's relevant count.
    #[arg(long, value_name = "N")]
    pub auto_wor: Option<usize>,
    /// WR baseline with p pooled from the observed top-k prevalence.
    #[arg(long)]
    pub auto_wr: bool,
    /// Fixed WOR model for every query.
    #[arg(long, num_args = 2, value_names = ["N", "M"])]
    pub wor: Option<Vec<usize>>,
    /// Fixed WR model for every query.
    #[arg(long, value_name = "P")]
    pub wr: Option<f64>,
}

impl BaselineArgs {
    pub fn choice(&self) -> Result<BaselineChoice> {
        if let Some(items) = self.auto_wor {
            return Ok(BaselineChoice::AutoWor { items });
        }
        if self.auto_wr {
            return Ok(BaselineChoice::AutoWr);
        }
        let model = ModelArgs {
            wor: self.wor.clone(),
            wr: self.wr,
        }
        .model()?;
        Ok(BaselineChoice::Explicit(model))
    }

    fn natural_normalization(&self) -> Normalization {
        if self.auto_wr || self.wr.is_some() {
            Normalization::ByK
        } else {
            Normalization::ByMinMK
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Byk,
    Bymin,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Byk => Normalization::ByK,
            NormArg::Bymin => Normalization::ByMinMK,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Structured,
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// `--check` found values outside tolerance.
    CheckFailed,
}

fn norm_or_natural(norm: Option<NormArg>, model: &ModelSpec) -> Normalization {
    norm.map_or_else(|| model.natural_normalization(), Into::into)
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out).map_err(|e| Error::io("<stdout>", e))
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn csv_writer<'a>(path: Option<&Path>, out: &'a mut dyn Write) -> Result<csv::Writer<Box<dyn Write + 'a>>> {
    let sink: Box<dyn Write + 'a> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(out),
    };
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink))
}

#[derive(Serialize)]
struct BaselineOutput {
    model: ModelSpec,
    k: usize,
    norm: Normalization,
    #[serde(flatten)]
    moments: BaselineMoments,
}

#[derive(Serialize)]
struct SimulateOutput {
    model: ModelSpec,
    k: usize,
    norm: Normalization,
    seed: u64,
    sample: SampleMoments,
    analytic: Option<BaselineMoments>,
}

#[derive(Serialize)]
struct DistributionRow {
    ap_value: f64,
    probability: f64,
}

#[derive(Serialize)]
struct HistRow {
    bin_lo: f64,
    bin_hi: f64,
    count: u64,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<Outcome> {
    match cli.command {
        Command::Baseline { model, k, format } => {
            let model = model.model()?;
            let moments = baseline(&model, k)?;
            match format {
                OutputFormat::Structured => write_json(
                    out,
                    &BaselineOutput {
                        model,
                        k,
                        norm: model.natural_normalization(),
                        moments,
                    },
                )?,
                OutputFormat::Text => writeln!(
                    out,
                    "model     {model}\nk         {k}\nnorm      {}\nmean      {}\nvariance  {}",
                    model.natural_normalization(),
                    sig6(moments.mean),
                    sig6(moments.variance)
                )
                .map_err(stdout_err)?,
            }
            Ok(Outcome::Success)
        }

        Command::Scenarios { config, check, format } => {
            let grid = match &config {
                Some(path) => scenarios::load_config(path)?,
                None => scenarios::default_grid(),
            };
            let rows = scenarios::compute(&grid)?;
            let (compared, deviations) = scenarios::check_golden(&rows, GOLDEN_TOLERANCE);
            match format {
                OutputFormat::Structured => {
                    #[derive(Serialize)]
                    struct Report<'a> {
                        rows: &'a [scenarios::ScenarioRow],
                        #[serde(skip_serializing_if = "Option::is_none")]
                        deviations: Option<&'a [scenarios::Deviation]>,
                    }
                    write_json(
                        out,
                        &Report {
                            rows: &rows,
                            deviations: check.then_some(deviations.as_slice()),
                        },
                    )?;
                }
                OutputFormat::Text => {
                    writeln!(
                        out,
                        "{:<8} {:>5} {:>5} {:>6} {:>5} {:>10} {:>10} {:>10} {:>10}",
                        "scenario", "N", "m", "p", "k", "WOR mean", "WR mean", "WOR var", "WR var"
                    )
                    .map_err(stdout_err)?;
                    for row in &rows {
                        let c = &row.config;
                        let [a, b, v1, v2] = row.values().map(sig6);
                        writeln!(
                            out,
                            "{:<8} {:>5} {:>5} {:>6} {:>5} {a:>10} {b:>10} {v1:>10} {v2:>10}",
                            c.label, c.items, c.relevant, c.p, c.k
                        )
                        .map_err(stdout_err)?;
                    }
                    if check {
                        writeln!(
                            out,
                            "\ncheck: {compared} row(s) compared against reference values, tolerance {GOLDEN_TOLERANCE:e}"
                        )
                        .map_err(stdout_err)?;
                        for d in &deviations {
                            writeln!(
                                out,
                                "  DEVIATION {} {}: computed {:.7} reference {:.5} |diff| {:.2e}",
                                d.label,
                                d.column,
                                d.computed,
                                d.reference,
                                d.abs_error()
                            )
                            .map_err(stdout_err)?;
                        }
                        let verdict = if deviations.is_empty() { "PASS" } else { "FAIL" };
                        writeln!(out, "check: {verdict}").map_err(stdout_err)?;
                    }
                }
            }
            Ok(if check && !deviations.is_empty() {
                Outcome::CheckFailed
            } else {
                Outcome::Success
            })
        }

        Command::Simulate {
            model,
            k,
            samples,
            seed,
            norm,
            format,
        } => {
            let model = model.model()?;
            let norm = norm_or_natural(norm, &model);
            let sample = monte_carlo(&model, k, norm, samples, seed)?;
            let analytic = if norm == model.natural_normalization() {
                Some(baseline(&model, k)?)
            } else {
                None
            };
            match format {
                OutputFormat::Structured => write_json(
                    out,
                    &SimulateOutput {
                        model,
                        k,
                        norm,
                        seed,
                        sample,
                        analytic,
                    },
                )?,
                OutputFormat::Text => {
                    let mut text = format!(
                        "model           {model}\nk               {k}\nnorm            {norm}\nseed            {seed}\nsamples         {}\n\
                         sample mean     {}\nsample variance {}\nstd error       {}\n",
                        sample.n,
                        sig6(sample.mean),
                        sig6(sample.variance),
                        sig6(sample.std_error),
                    );
                    match analytic {
                        Some(a) => {
                            text.push_str(&format!(
                                "analytic mean   {}\nanalytic var    {}\n",
                                sig6(a.mean),
                                sig6(a.variance)
                            ));
                            if sample.std_error > 0.0 {
                                text.push_str(&format!(
                                    "mean gap / SE   {}\n",
                                    sig6((sample.mean - a.mean) / sample.std_error)
                                ));
                            }
                        }
                        None => text.push_str("analytic        n/a (no closed form for this normalization)\n"),
                    }
                    out.write_all(text.as_bytes()).map_err(stdout_err)?;
                }
            }
            Ok(Outcome::Success)
        }

        Command::Enumerate {
            model,
            k,
            norm,
            out: path,
        } => {
            let model = model.model()?;
            let norm = norm_or_natural(norm, &model);
            model.validate_cutoff(k)?;
            let dist = match model {
                ModelSpec::Wor { items, relevant } => exact_wor(items, relevant, k, norm)?,
                ModelSpec::Wr { p } => exact_wr(p, k, norm)?,
            };
            let mut w = csv_writer(path.as_deref(), out)?;
            for &(ap_value, probability) in &dist.support {
                w.serialize(DistributionRow { ap_value, probability })?;
            }
            w.flush().map_err(stdout_err)?;
            Ok(Outcome::Success)
        }

        Command::Hist {
            model,
            k,
            samples,
            seed,
            bins,
            norm,
            out: path,
        } => {
            let model = model.model()?;
            let norm = norm_or_natural(norm, &model);
            let hist = histogram(&model, k, norm, samples, seed, bins)?;
            {
                let mut w = csv_writer(path.as_deref(), &mut *out)?;
                for (bin_lo, bin_hi, count) in hist.bins() {
                    w.serialize(HistRow { bin_lo, bin_hi, count })?;
                }
                w.flush().map_err(stdout_err)?;
            }
            if let Some(p) = &path {
                writeln!(
                    out,
                    "wrote {} bins ({} samples, {}) to {}",
                    hist.counts.len(),
                    hist.n,
                    hist.model_label,
                    p.display()
                )
                .map_err(stdout_err)?;
            }
            Ok(Outcome::Success)
        }

        Command::Evaluate {
            run,
            qrels,
            k,
            baseline: baseline_args,
            norm,
            out: path,
            format,
        } => {
            let choice = baseline_args.choice()?;
            let norm = norm.map_or_else(|| baseline_args.natural_normalization(), Into::into);
            let ranked = parse_run(&run)?;
            let judgments = parse_qrels(&qrels)?;
            let report = evaluate(&ranked, &judgments, k, norm, choice)?;
            if let Some(p) = &path {
                let file = File::create(p).map_err(|e| Error::io(p, e))?;
                let mut w = BufWriter::new(file);
                serde_json::to_writer_pretty(&mut w, &report)?;
                writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(p, e))?;
            }
            match format {
                OutputFormat::Structured => write_json(out, &report)?,
                OutputFormat::Text => out.write_all(report.to_text().as_bytes()).map_err(stdout_err)?,
            }
            Ok(Outcome::Success)
        }
    }
}
