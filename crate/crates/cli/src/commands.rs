//! Subcommand implementations behind the `mukf` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mukf_core::logio::results::{read_results, read_truth, write_results, write_truth, write_updates};
use mukf_core::logio::{read_log, write_log, DenialWindow, ExperimentConfig};
use mukf_core::runner::RunOutput;
use mukf_core::SensorKind;

use crate::error::CliError;
use crate::experiment::{self, SimRun};
use crate::metrics::{self, RunMetrics};
use crate::preset::{PresetRegistry, Variant};

pub const LOG_FILE: &str = "sensors.log";
pub const TRUTH_FILE: &str = "truth.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const RESULTS_FILE: &str = "results.csv";
pub const UPDATES_FILE: &str = "updates.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const COMPARISON_FILE: &str = "comparison.txt";

#[derive(Debug, Parser)]
#[command(name = "mukf", version, about = "Simulate, replay and evaluate AUV navigation runs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a mission and write the sensor log, truth and config.
    Simulate(ExperimentArgs),
    /// Run the filter over a sensor log.
    Run(RunArgs),
    /// Compare results files against truth.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// TOML experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in experiment: gyrocompass, square5x50 or adcp-square.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ignore sensors over a time span, e.g. `dvl,gps:600-1600`. Repeatable.
    #[arg(long, value_name = "SENSORS:T0-T1")]
    pub deny: Vec<DenialWindow>,
    /// Feed a sensor stream to the filter. Repeatable.
    #[arg(long, value_name = "SENSOR")]
    pub enable: Vec<SensorKind>,
    /// Withhold a sensor stream from the filter. Repeatable.
    #[arg(long, value_name = "SENSOR")]
    pub disable: Vec<SensorKind>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Sensor log to replay.
    pub log: PathBuf,
    /// Truth file; fills the difference columns of the results.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Run only the preset variant with this label.
    #[arg(long, conflicts_with_all = ["enable", "disable"])]
    pub variant: Option<String>,
    #[command(flatten)]
    pub exp: ExperimentArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Results files to evaluate.
    #[arg(required = true)]
    pub results: Vec<PathBuf>,
    #[arg(long)]
    pub truth: PathBuf,
    /// Alignment tolerance, s (one IMU period).
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
    /// Also write metrics.csv, comparison.txt and per-run series here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Configuration and variants selected by the common flags.
pub struct Resolved {
    pub config: ExperimentConfig,
    pub variants: Vec<Variant>,
    pub out: PathBuf,
}

pub fn resolve(args: &ExperimentArgs, presets: &PresetRegistry) -> Result<Resolved, CliError> {
    let (mut config, mut variants) = match (&args.preset, &args.config) {
        (Some(name), _) => {
            let p = presets.get(name).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown preset '{name}', expected one of {}",
                    presets.names().join(", ")
                ))
            })?;
            (p.config(), p.variants())
        }
        (None, Some(path)) => {
            let c = ExperimentConfig::load(path)?;
            let v = vec![Variant::new("run", c.enable)];
            (c, v)
        }
        (None, None) => {
            let c = ExperimentConfig::default();
            let v = vec![Variant::new("run", c.enable)];
            (c, v)
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.deny.extend(args.deny.iter().cloned());
    if !args.enable.is_empty() || !args.disable.is_empty() {
        for k in &args.enable {
            config.enable.set(*k, true);
        }
        for k in &args.disable {
            if args.enable.contains(k) {
                return Err(CliError::Usage(format!("{k} both enabled and disabled")));
            }
            config.enable.set(*k, false);
        }
        variants = vec![Variant::new("run", config.enable)];
    }
    if let Some(out) = &args.out {
        config.output.dir = Some(out.clone());
    }
    config.validate()?;
    let out = config.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    Ok(Resolved {
        config,
        variants,
        out,
    })
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub struct SimulateSummary {
    pub out: PathBuf,
    pub path_length: f64,
    pub duration: f64,
    pub records: usize,
}

pub fn simulate(args: &ExperimentArgs, presets: &PresetRegistry) -> Result<SimulateSummary, CliError> {
    let r = resolve(args, presets)?;
    let SimRun {
        log,
        truth,
        path_length,
    } = experiment::simulate(&r.config)?;
    create_dir(&r.out)?;
    write_log(&r.out.join(LOG_FILE), &log)?;
    write_truth(&r.out.join(TRUTH_FILE), &truth)?;
    let cfg_path = r.out.join(CONFIG_FILE);
    std::fs::write(&cfg_path, r.config.to_toml()).map_err(|e| CliError::io(&cfg_path, e))?;
    Ok(SimulateSummary {
        out: r.out,
        path_length,
        duration: log.duration(),
        records: log.records.len(),
    })
}

/// Bookkeeping of one filter run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub dir: PathBuf,
    pub predict_steps: u64,
    pub wall_seconds: f64,
    pub data_seconds: f64,
    pub throughput: f64,
    pub realtime_factor: f64,
    pub updates_accepted: usize,
    pub updates_rejected: usize,
}

pub const SUMMARY_COLUMNS: [&str; 8] = [
    "label",
    "predict_steps",
    "wall_seconds",
    "data_seconds",
    "throughput_steps_per_s",
    "realtime_factor",
    "updates_accepted",
    "updates_rejected",
];

impl RunSummary {
    fn new(label: &str, dir: &Path, out: &RunOutput) -> Self {
        let accepted = out.updates.iter().filter(|u| u.accepted).count();
        RunSummary {
            label: label.to_string(),
            dir: dir.to_path_buf(),
            predict_steps: out.predict_steps,
            wall_seconds: out.wall_seconds,
            data_seconds: out.data_seconds,
            throughput: out.throughput(),
            realtime_factor: out.realtime_factor(),
            updates_accepted: accepted,
            updates_rejected: out.updates.len() - accepted,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let err = |e: csv::Error| CliError::io(path, std::io::Error::other(e.to_string()));
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(SUMMARY_COLUMNS).map_err(err)?;
        w.write_record([
            self.label.clone(),
            self.predict_steps.to_string(),
            self.wall_seconds.to_string(),
            self.data_seconds.to_string(),
            self.throughput.to_string(),
            self.realtime_factor.to_string(),
            self.updates_accepted.to_string(),
            self.updates_rejected.to_string(),
        ])
        .map_err(err)?;
        w.flush().map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let err = |m: String| CliError::io(path, std::io::Error::other(m));
        let mut r = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
        let rec = r
            .records()
            .next()
            .ok_or_else(|| err("empty summary".into()))?
            .map_err(|e| err(e.to_string()))?;
        if rec.len() != SUMMARY_COLUMNS.len() {
            return Err(err(format!("expected {} columns", SUMMARY_COLUMNS.len())));
        }
        let num = |i: usize| -> Result<f64, CliError> {
            rec[i]
                .parse()
                .map_err(|_| err(format!("bad {} '{}'", SUMMARY_COLUMNS[i], &rec[i])))
        };
        Ok(RunSummary {
            label: rec[0].to_string(),
            dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            predict_steps: num(1)? as u64,
            wall_seconds: num(2)?,
            data_seconds: num(3)?,
            throughput: num(4)?,
            realtime_factor: num(5)?,
            updates_accepted: num(6)? as usize,
            updates_rejected: num(7)? as usize,
        })
    }
}

/// Replays the log once per selected variant, in parallel when there are
/// several, each into its own directory. The first failure is returned
/// after every variant has finished and written what it produced.
pub fn run(args: &RunArgs, presets: &PresetRegistry) -> Result<Vec<RunSummary>, CliError> {
    let r = resolve(&args.exp, presets)?;
    let log = read_log(&args.log)?;
    let truth = args.truth.as_deref().map(read_truth).transpose()?;
    let mut variants = r.variants.clone();
    if let Some(label) = &args.variant {
        variants.retain(|v| &v.label == label);
        if variants.is_empty() {
            let known: Vec<_> = r.variants.iter().map(|v| v.label.as_str()).collect();
            return Err(CliError::Usage(format!(
                "unknown variant '{label}', expected one of {}",
                known.join(", ")
            )));
        }
    }
    experiment::check_consistent(&r.config, &log)?;
    let tol = 1.0 / r.config.sim.sensors.imu.rate;
    let single = variants.len() == 1;
    let outcomes = experiment::run_variants(&r.config, &log, &variants);
    let mut summaries = Vec::new();
    let mut first_err = None;
    for (label, outcome) in outcomes {
        let dir = if single { r.out.clone() } else { r.out.join(&label) };
        create_dir(&dir)?;
        match outcome {
            Ok(out) => {
                write_results(&dir.join(RESULTS_FILE), &out.rows, truth.as_deref(), tol)?;
                write_updates(&dir.join(UPDATES_FILE), &out.updates)?;
                let s = RunSummary::new(&label, &dir, &out);
                s.write(&dir.join(SUMMARY_FILE))?;
                summaries.push(s);
            }
            Err(e) => {
                if let CliError::Run(re) = &e {
                    write_results(&dir.join(RESULTS_FILE), &re.partial, truth.as_deref(), tol)?;
                }
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(summaries),
    }
}

/// Label of a results file: the summary beside it, else its directory name.
fn label_for(results: &Path) -> (String, Option<f64>) {
    let dir = results.parent().unwrap_or(Path::new(""));
    if let Ok(s) = RunSummary::read(&dir.join(SUMMARY_FILE)) {
        return (s.label, Some(s.throughput));
    }
    let name = dir
        .file_name()
        .or_else(|| results.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    (name, None)
}

pub fn evaluate(args: &EvaluateArgs) -> Result<Vec<RunMetrics>, CliError> {
    let truth = read_truth(&args.truth)?;
    let mut out = Vec::new();
    for path in &args.results {
        let rows = read_results(path)?;
        let (label, throughput) = label_for(path);
        let mut m = metrics::evaluate(&label, &rows, &truth, args.tol)?;
        m.throughput = throughput;
        out.push(m);
    }
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        let p = dir.join(METRICS_FILE);
        std::fs::write(&p, metrics::table_csv(&out)).map_err(|e| CliError::io(&p, e))?;
        let p = dir.join(COMPARISON_FILE);
        std::fs::write(&p, metrics::comparison_table(&out)).map_err(|e| CliError::io(&p, e))?;
        for (i, m) in out.iter().enumerate() {
            let safe: String = m
                .label
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
                .collect();
            metrics::write_series(&dir.join(format!("series_{i}_{safe}.csv")), m)?;
        }
    }
    Ok(out)
}

/// What a command prints to stdout.
pub fn report_simulate(s: &SimulateSummary) -> String {
    format!(
        "wrote {} ({} records, {:.1} s, {:.1} m horizontal path)\n",
        s.out.display(),
        s.records,
        s.duration,
        s.path_length
    )
}

pub fn report_run(summaries: &[RunSummary]) -> String {
    summaries
        .iter()
        .map(|s| {
            format!(
                "{}: {} steps in {:.2} s, {:.0} steps/s ({:.1}x real time), {} updates accepted, {} rejected -> {}\n",
                s.label,
                s.predict_steps,
                s.wall_seconds,
                s.throughput,
                s.realtime_factor,
                s.updates_accepted,
                s.updates_rejected,
                s.dir.display()
            )
        })
        .collect()
}

pub fn report_evaluate(m: &[RunMetrics]) -> String {
    let mut s = metrics::table_csv(m);
    if m.len() > 1 {
        s.push('\n');
        s.push_str(&metrics::comparison_table(m));
    }
    s
}

/// Parses and executes one command line; returns the text for stdout.
pub fn execute(cli: &Cli, presets: &PresetRegistry) -> Result<String, CliError> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, presets).map(|s| report_simulate(&s)),
        Command::Run(a) => run(a, presets).map(|s| report_run(&s)),
        Command::Evaluate(a) => evaluate(a).map(|m| report_evaluate(&m)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("mukf").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_preset() {
        let cli = parse(&[
            "run",
            "x.log",
            "--preset",
            "adcp-square",
            "--seed",
            "7",
            "--disable",
            "adcp",
            "--deny",
            "pres:10-20",
        ]);
        let Command::Run(a) = cli.command else { panic!() };
        let r = resolve(&a.exp, &PresetRegistry::standard()).unwrap();
        assert_eq!(r.config.seed, 7);
        assert!(!r.config.enable.adcp);
        assert_eq!(r.variants.len(), 1);
        assert_eq!(r.config.deny.len(), 2);
    }

    #[test]
    fn preset_variants_kept_without_flags() {
        let a = ExperimentArgs {
            preset: Some("adcp-square".into()),
            ..Default::default()
        };
        let r = resolve(&a, &PresetRegistry::standard()).unwrap();
        assert_eq!(r.variants.len(), 3);
    }

    #[test]
    fn unknown_preset_is_usage_error() {
        let a = ExperimentArgs {
            preset: Some("nope".into()),
            ..Default::default()
        };
        let e = resolve(&a, &PresetRegistry::standard()).err().unwrap();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn bad_deny_spec_fails_to_parse() {
        let r = Cli::try_parse_from(["mukf", "simulate", "--deny", "dvl:5"]);
        assert!(r.is_err());
    }

    #[test]
    fn conflicting_enable_disable() {
        let a = ExperimentArgs {
            enable: vec![SensorKind::Gps],
            disable: vec![SensorKind::Gps],
            ..Default::default()
        };
        assert!(matches!(
            resolve(&a, &PresetRegistry::standard()),
            Err(CliError::Usage(_))
        ));
    }
}
