//! Command-line front end. Every subcommand wraps one library operation;
//! `pipeline` chains them. Durations on the command line are in seconds
//! except where a flag name ends in `-ms`.
//!
//! Exit codes: 0 success, 2 invalid input or flags, 3 numerical failure.
//! Diagnostics go to stderr as `level,module,message` lines; set
//! `RUST_LOG` to change the verbosity (default `warn`).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::baselines::{fit_pareto, generate_pareto_trace, ParetoParams, WSN_MAX_PACKET_MS};
use crate::eval::{
    calibrate_x, calibrate_z, modeled_iats, quantile_rmse, score, write_slot_csv, DEFAULT_SLOT_S,
    DEFAULT_X_GRID_S, DEFAULT_Z_GRID_S, MIN_RMSE_SAMPLES,
};
use crate::hmm::{BaumWelchConfig, HmmModel, ThresholdPolicy, DEFAULT_WINDOW_COUNT};
use crate::mmpp::{fit_from_stats, generate_trace, Mmpp2Params};
use crate::pipeline::{predict_stage, run_pipeline, train_stage, PipelineConfig, PipelineError, Segments, Stage};
use crate::stats::{traffic_stats, HurstConfig, TrafficStats};
use crate::trace::{
    extract_iats, merge_traces, read_trace_csv, window_trace, write_trace_csv, PacketTrace, TraceError,
};
use crate::{derive_seed, seconds_to_us};

#[derive(Debug, Parser)]
#[command(name = "whitespace-kit", version, about = "WiFi interference modelling and white-space prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Merge traces, fit, train, predict and score in one run.
    Pipeline(PipelineArgs),
    /// Validate a trace and write it back normalised (sorted, header, no negative rows).
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Merge per-channel traces into one aggregated trace.
    Merge {
        #[arg(long, num_args = 1.., required = true)]
        traces: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// M1, C and H of a trace's inter-arrival times.
    Stats {
        #[command(flatten)]
        input: TraceInput,
        #[command(flatten)]
        out: Output,
    },
    /// Fit an MMPP(2) to a stats file or to explicit moments.
    FitMmpp {
        #[arg(long, conflicts_with_all = ["m1", "c", "h"])]
        stats: Option<PathBuf>,
        #[arg(long, requires_all = ["c", "h"])]
        m1: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Fixed-scale Pareto fit to a trace's inter-arrival times.
    FitPareto {
        #[command(flatten)]
        input: TraceInput,
        #[arg(long, default_value_t = WSN_MAX_PACKET_MS)]
        scale_ms: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Synthetic trace from a fitted MMPP(2) or Pareto model.
    Generate {
        #[arg(long, conflicts_with = "pareto", required_unless_present = "pareto")]
        mmpp: Option<PathBuf>,
        #[arg(long)]
        pareto: Option<PathBuf>,
        /// Seconds of traffic.
        #[arg(long)]
        duration: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Baum-Welch training on the slots of [x, x+z).
    TrainHmm {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        mmpp: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Per-slot predictions after x+z (HMM and random access).
    Predict {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        hmm: PathBuf,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        z: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score a trained HMM after x+z and the MMPP(2) quantile RMSE.
    Evaluate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        hmm: PathBuf,
        #[arg(long)]
        mmpp: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: Output,
    },
    /// RMSE of the MMPP(2) model against a holdout for each training length x.
    CalibrateX {
        #[arg(long)]
        trace: PathBuf,
        /// Candidate x values in seconds.
        #[arg(long, num_args = 1.., default_values_t = DEFAULT_X_GRID_S)]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// Holdout length in seconds, starting at the largest x.
        #[arg(long, default_value_t = 600.0)]
        holdout: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Hit rate and precision for each HMM training length z.
    CalibrateZ {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        mmpp: PathBuf,
        /// Seconds skipped at the start of the trace (the MMPP training span).
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        #[arg(long, num_args = 1.., default_values_t = DEFAULT_Z_GRID_S)]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long)]
        y_ms: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SLOT_S)]
        t: f64,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    Moving,
    Fixed,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    /// Threshold used after training.
    #[arg(long, value_enum, default_value_t = PolicyKind::Moving)]
    pub policy: PolicyKind,
    #[arg(long, default_value_t = DEFAULT_WINDOW_COUNT)]
    pub window_count: usize,
}

impl PolicyArgs {
    fn policy(&self) -> ThresholdPolicy {
        match self.policy {
            PolicyKind::Fixed => ThresholdPolicy::FixedTrainingAverage,
            PolicyKind::Moving => ThresholdPolicy::MovingAverage {
                window_count: self.window_count,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct TraceInput {
    #[arg(long)]
    pub trace: PathBuf,
    /// Use only the first x seconds.
    #[arg(long)]
    pub x: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Output {
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// MMPP(2) training span, seconds.
    #[arg(long, default_value_t = 300.0)]
    pub x: f64,
    /// y = k·y_lb.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// HMM training span, seconds.
    #[arg(long, default_value_t = 300.0)]
    pub z: f64,
    /// Slot length, seconds.
    #[arg(long, default_value_t = DEFAULT_SLOT_S)]
    pub t: f64,
    /// Observation window in ms; overrides k.
    #[arg(long)]
    pub y_ms: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

impl RunArgs {
    pub fn config(&self) -> PipelineConfig {
        PipelineConfig {
            x_s: self.x,
            k: self.k,
            z_s: self.z,
            t_s: self.t,
            y_override_ms: self.y_ms,
            seed: self.seed,
            threshold_policy: self.policy.policy(),
            ..PipelineConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub traces: Vec<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
    /// json: the report; csv: the per-slot table.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Also write the per-slot table here.
    #[arg(long)]
    pub slots: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Installs the `level,module,message` stderr logger; later calls are no-ops.
pub fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format(|buf, record| {
            let module = record.target().rsplit("::").next().unwrap_or("");
            writeln!(buf, "{},{},{}", record.level(), module, record.args())
        })
        .try_init();
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            log::error!(target: "cli", "{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    init_logging();
    run(std::env::args_os())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io(format!("{}: {e}", path.display()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    serde_json::from_reader(io::BufReader::new(file))
        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, PipelineError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), PipelineError> {
    let mut out = sink(path)?;
    let text = serde_json::to_string_pretty(value).expect("report types serialise");
    writeln!(out, "{text}")
        .and_then(|_| out.flush())
        .map_err(|e| PipelineError::Io(e.to_string()))
}

fn write_trace(trace: &PacketTrace, path: Option<&Path>) -> Result<(), PipelineError> {
    write_trace_csv(trace, sink(path)?).map_err(Into::into)
}

fn load(path: &Path) -> Result<PacketTrace, PipelineError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let (trace, diag) = read_trace_csv(io::BufReader::new(file))?;
    if diag.negative_rows_dropped > 0 {
        log::warn!(
            target: "trace_io",
            "{}: dropped {} rows with negative timestamps",
            path.display(),
            diag.negative_rows_dropped
        );
    }
    if diag.resorted {
        log::info!(target: "trace_io", "{}: rows were out of order and have been sorted", path.display());
    }
    Ok(trace)
}

fn load_merged(paths: &[PathBuf]) -> Result<PacketTrace, PipelineError> {
    let traces = paths.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    Ok(merge_traces(&traces)?)
}

fn leading(trace: &PacketTrace, x_s: Option<f64>) -> Result<PacketTrace, PipelineError> {
    match (x_s, trace.first_timestamp()) {
        (Some(x), Some(t0)) => Ok(window_trace(trace, t0, seconds_to_us(x))?),
        (Some(_), None) => Err(TraceError::EmptyTrace.into()),
        (None, _) => Ok(trace.clone()),
    }
}

fn execute(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Pipeline(args) => {
            let trace = load_merged(&args.traces)?;
            let run = run_pipeline(&trace, &args.run.config())?;
            if let Some(p) = &args.slots {
                write_slot_csv(&run.slots, sink(Some(p))?).map_err(|e| io_err(p, e))?;
            }
            match args.format {
                Format::Json => write_json(&run.report, args.output.as_deref()),
                Format::Csv => write_slot_csv(&run.slots, sink(args.output.as_deref())?)
                    .map_err(|e| PipelineError::Io(e.to_string())),
            }
        }
        Command::Ingest { input, output } => write_trace(&load(&input)?, output.as_deref()),
        Command::Merge { traces, output } => write_trace(&load_merged(&traces)?, output.as_deref()),
        Command::Stats { input, out } => {
            let trace = leading(&load(&input.trace)?, input.x)?;
            let stats = traffic_stats(&extract_iats(&trace)?, &HurstConfig::default())?;
            write_json(&stats, out.output.as_deref())
        }
        Command::FitMmpp { stats, m1, c, h, out } => {
            let stats: TrafficStats = match (stats, m1, c, h) {
                (Some(p), ..) => read_json(&p)?,
                (None, Some(m1), Some(c), Some(h)) => TrafficStats::from_moments(m1, c, h),
                _ => return Err(PipelineError::Config("give --stats or all of --m1 --c --h".into())),
            };
            write_json(&fit_from_stats(&stats)?, out.output.as_deref())
        }
        Command::FitPareto { input, scale_ms, out } => {
            let trace = leading(&load(&input.trace)?, input.x)?;
            write_json(&fit_pareto(&extract_iats(&trace)?, scale_ms)?, out.output.as_deref())
        }
        Command::Generate {
            mmpp,
            pareto,
            duration,
            seed,
            output,
        } => {
            if !(duration > 0.0) {
                return Err(PipelineError::Config(format!("duration must be positive, got {duration}")));
            }
            let trace = match (mmpp, pareto) {
                (Some(p), _) => generate_trace(&read_json::<Mmpp2Params>(&p)?, duration * 1e3, seed),
                (None, Some(p)) => generate_pareto_trace(&read_json::<ParetoParams>(&p)?, duration * 1e3, seed),
                (None, None) => unreachable!("clap requires one model"),
            };
            write_trace(&trace, output.as_deref())
        }
        Command::TrainHmm { trace, mmpp, run, out } => {
            let cfg = run.config();
            cfg.validate()?;
            let trace = load(&trace)?;
            let mmpp: Mmpp2Params = read_json(&mmpp)?;
            let y_ms = cfg.window_ms(&mmpp);
            let grid = Segments::new(&trace, cfg.x_s, cfg.z_s)?.hmm_grid(y_ms, cfg.t_s)?;
            let trained = train_stage(&trace, &grid, &mmpp, y_ms, cfg.t_s, cfg.threshold_policy, &BaumWelchConfig::default())?;
            write_json(&trained.model, out.output.as_deref())
        }
        Command::Predict {
            trace,
            hmm,
            x,
            z,
            seed,
            format,
            output,
        } => {
            let trace = load(&trace)?;
            let model: HmmModel = read_json(&hmm)?;
            let (y_ms, t_s) = model_window(&model)?;
            let grid = Segments::new(&trace, x, z)?.eval_grid(y_ms, t_s)?;
            let prediction = predict_stage(&trace, &grid, &model, seed);
            match format {
                Format::Json => write_json(&prediction.hmm, output.as_deref()),
                Format::Csv => write_slot_csv(&prediction.slot_records(), sink(output.as_deref())?)
                    .map_err(|e| PipelineError::Io(e.to_string())),
            }
        }
        Command::Evaluate { trace, hmm, mmpp, run, out } => {
            let cfg = run.config();
            cfg.validate()?;
            let trace = load(&trace)?;
            let model: HmmModel = read_json(&hmm)?;
            let mmpp: Mmpp2Params = read_json(&mmpp)?;
            let (y_ms, t_s) = model_window(&model)?;
            let segments = Segments::new(&trace, cfg.x_s, cfg.z_s)?;
            let prediction = predict_stage(&trace, &segments.eval_grid(y_ms, t_s)?, &model, cfg.seed);
            let holdout = extract_iats(&segments.holdout(&trace))?;
            let need = holdout.count().max(MIN_RMSE_SAMPLES);
            let modeled = modeled_iats(&mmpp, y_ms, need, Stage::MmppGeneration.seed(cfg.seed))?;
            let report = score(&prediction.hmm, &prediction.truth)?
                .with_rmse(quantile_rmse(&modeled, &holdout)?)
                .with_config(PipelineConfig { t_s, ..cfg }.echo(y_ms));
            write_json(&report, out.output.as_deref())
        }
        Command::CalibrateX {
            trace,
            grid,
            k,
            holdout,
            seed,
            out,
        } => {
            let trace = load(&trace)?;
            let table = calibrate_x(&trace, &grid, k, holdout, derive_seed(seed, 0), &HurstConfig::default())?;
            write_json(&table, out.output.as_deref())
        }
        Command::CalibrateZ {
            trace,
            mmpp,
            x,
            grid,
            k,
            y_ms,
            t,
            policy,
            out,
        } => {
            let trace = load(&trace)?;
            let mmpp: Mmpp2Params = read_json(&mmpp)?;
            let y_ms = y_ms.unwrap_or(k * mmpp.y_lower_bound_ms());
            let rest = match trace.first_timestamp() {
                Some(t0) if x > 0.0 => {
                    let start = t0 + seconds_to_us(x);
                    window_trace(&trace, start, trace.last_timestamp().unwrap_or(start).saturating_sub(start) + 1)?
                }
                _ => trace,
            };
            let table = calibrate_z(&rest, &grid, &mmpp, y_ms, t, policy.policy(), &BaumWelchConfig::default())?;
            write_json(&table, out.output.as_deref())
        }
    }
}

fn model_window(model: &HmmModel) -> Result<(f64, f64), PipelineError> {
    match (model.window_ms, model.slot_s) {
        (Some(y), Some(t)) => Ok((y, t)),
        _ => Err(PipelineError::Config(
            "model file lacks window_ms/slot_s; train it with train-hmm".into(),
        )),
    }
}
