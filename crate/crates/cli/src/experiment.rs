//! Simulation and replay of one experiment.

use mukf_core::logio::{EnableFlags, ExperimentConfig, SensorLog};
use mukf_core::nav::AidingRegistry;
use mukf_core::runner::{run_log, run_log_branched, RunOutput, RunSetup};
use mukf_core::sim::{simulate as simulate_truth, TruthRecord};
use mukf_core::ConfigError;

use crate::error::CliError;
use crate::preset::Variant;

pub struct SimRun {
    pub log: SensorLog,
    pub truth: Vec<TruthRecord>,
    /// Horizontal distance travelled, m.
    pub path_length: f64,
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<SimRun, CliError> {
    cfg.validate()?;
    let vehicle = cfg.truth_vehicle()?;
    let out = simulate_truth(&cfg.sim, &vehicle, &cfg.geo, cfg.seed)?;
    Ok(SimRun {
        log: SensorLog {
            latitude: cfg.geo.latitude,
            t0: 0.0,
            records: out.samples,
        },
        truth: out.truth,
        path_length: out.path_length,
    })
}

/// The log must come from the configured latitude and cover every denial
/// window.
pub fn check_consistent(cfg: &ExperimentConfig, log: &SensorLog) -> Result<(), CliError> {
    if (log.latitude - cfg.geo.latitude).abs() > 1e-9 {
        return Err(ConfigError::Invalid(format!(
            "log latitude {} rad differs from configured {} rad",
            log.latitude, cfg.geo.latitude
        ))
        .into());
    }
    let (Some(first), Some(last)) = (log.records.first(), log.records.last()) else {
        return Err(CliError::Usage("log has no records".into()));
    };
    // windows may end at the nominal run length, just past the last sample
    cfg.check_denials_within(first.t, last.t + 1.0)?;
    Ok(())
}

fn setup<'a>(cfg: &'a ExperimentConfig, registry: &'a AidingRegistry) -> Result<RunSetup<'a>, CliError> {
    Ok(RunSetup {
        filter: cfg.filter_config(),
        vehicle: cfg.filter_vehicle()?,
        enable: cfg.enable,
        deny: &cfg.deny,
        decimation: cfg.output.decimation,
        registry,
    })
}

/// Runs the filter over `log` with the config's model, denial windows and
/// the given enable flags.
pub fn run(cfg: &ExperimentConfig, log: &SensorLog, enable: EnableFlags) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    check_consistent(cfg, log)?;
    let registry = AidingRegistry::standard();
    let setup = RunSetup {
        enable,
        ..setup(cfg, &registry)?
    };
    Ok(run_log(log, &setup)?)
}

/// Runs every variant, in order. Variants switching flags at the same time
/// share one replay up to that time.
pub fn run_variants(
    cfg: &ExperimentConfig,
    log: &SensorLog,
    variants: &[Variant],
) -> Vec<(String, Result<RunOutput, CliError>)> {
    let checked = cfg.validate().map_err(CliError::from).and_then(|_| check_consistent(cfg, log));
    let registry = AidingRegistry::standard();
    let setup = match checked.and_then(|_| setup(cfg, &registry)) {
        Ok(s) => s,
        Err(e) => {
            let msg = e.to_string();
            return variants
                .iter()
                .map(|v| (v.label.clone(), Err(CliError::Usage(msg.clone()))))
                .collect();
        }
    };
    let mut out: Vec<Option<Result<RunOutput, CliError>>> = variants.iter().map(|_| None).collect();
    for (i, v) in variants.iter().enumerate() {
        if out[i].is_some() {
            continue;
        }
        let group: Vec<usize> = (i..variants.len())
            .filter(|&j| variants[j].from.total_cmp(&v.from).is_eq())
            .collect();
        let flags: Vec<EnableFlags> = group.iter().map(|&j| variants[j].enable).collect();
        for (j, r) in group.into_iter().zip(run_log_branched(log, &setup, v.from, &flags)) {
            out[j] = Some(r.map_err(CliError::from));
        }
    }
    variants
        .iter()
        .zip(out)
        .map(|(v, r)| (v.label.clone(), r.expect("every variant ran")))
        .collect()
}
