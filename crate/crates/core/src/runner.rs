//! Replays a sensor log through the navigation filter.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::NavError;
use crate::logio::{DenialWindow, EnableFlags, EstimateRow, SensorLog, UpdateRecord};
use crate::manifold::NAV_DIM;
use crate::nav::{AidingRegistry, FilterConfig, NavFilter, VehicleParams};
use crate::sensors::{Payload, SensorKind, SensorSample};

/// Everything a replay needs besides the log.
pub struct RunSetup<'a> {
    pub filter: FilterConfig,
    /// The filter's vehicle model.
    pub vehicle: VehicleParams,
    pub enable: EnableFlags,
    pub deny: &'a [DenialWindow],
    /// One output row every this many IMU steps.
    pub decimation: usize,
    pub registry: &'a AidingRegistry,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub rows: Vec<EstimateRow>,
    pub updates: Vec<UpdateRecord>,
    pub predict_steps: u64,
    /// Wall-clock time spent inside the filter, s.
    pub wall_seconds: f64,
    /// Span of the replayed data, s.
    pub data_seconds: f64,
}

impl RunOutput {
    /// Prediction steps per wall-clock second.
    pub fn throughput(&self) -> f64 {
        if self.wall_seconds > 0.0 {
            self.predict_steps as f64 / self.wall_seconds
        } else {
            f64::INFINITY
        }
    }

    pub fn realtime_factor(&self) -> f64 {
        if self.wall_seconds > 0.0 {
            self.data_seconds / self.wall_seconds
        } else {
            f64::INFINITY
        }
    }

    pub fn last(&self) -> Option<&EstimateRow> {
        self.rows.last()
    }
}

/// Failure during a replay, with the time it happened.
#[derive(Debug, Clone, thiserror::Error)]
#[error("at t = {t:.3} s: {source}")]
pub struct RunError {
    pub t: f64,
    #[source]
    pub source: NavError,
    /// Rows produced before the failure.
    pub partial: Vec<EstimateRow>,
}

pub fn snapshot(f: &NavFilter) -> EstimateRow {
    let p: &DMatrix<f64> = f.covariance();
    EstimateRow {
        t: f.time(),
        state: f.state().clone(),
        sigmas: (0..NAV_DIM).map(|i| p[(i, i)].max(0.0).sqrt()).collect(),
        pos_cov: [
            p[(0, 0)],
            p[(0, 1)],
            p[(0, 2)],
            p[(1, 1)],
            p[(1, 2)],
            p[(2, 2)],
        ],
        heading_sigma: f.heading_sigma(),
        horizontal_2sigma: f.horizontal_2sigma(),
    }
}

/// Filter plus everything recorded so far, resumable record by record.
#[derive(Clone)]
struct Replay {
    filter: NavFilter,
    rows: Vec<EstimateRow>,
    updates: Vec<UpdateRecord>,
    imu_steps: usize,
    wall_seconds: f64,
    t0: f64,
}

impl Replay {
    fn fail(&self, t: f64, source: NavError) -> RunError {
        RunError {
            t,
            source,
            partial: self.rows.clone(),
        }
    }

    /// Processes `records`; `first` is the record the filter was started on.
    fn run(
        &mut self,
        records: &[SensorSample],
        first: Option<&SensorSample>,
        setup: &RunSetup,
        enable: EnableFlags,
    ) -> Result<(), RunError> {
        let started = Instant::now();
        let decimation = setup.decimation.max(1);
        for rec in records {
            let t = rec.t;
            let kind = rec.kind();
            let is_first = first.is_some_and(|f| std::ptr::eq(f, rec));
            if kind == SensorKind::Imu {
                let Payload::Imu(imu) = &rec.payload else { unreachable!() };
                if !is_first {
                    self.filter.propagate_imu(t, imu).map_err(|e| self.fail(t, e))?;
                    self.imu_steps += 1;
                }
            } else if t > self.filter.time() {
                self.filter.predict_to(t).map_err(|e| self.fail(t, e))?;
            }
            if kind == SensorKind::Pressure {
                if let Payload::Pressure { depth } = rec.payload {
                    // surfacing state follows the sensor even when its update is denied
                    self.filter.note_depth(depth);
                }
            }
            let allowed = enable.get(kind) && !setup.deny.iter().any(|w| w.denies(kind, t));
            if allowed {
                if let Some(aiding) = setup.registry.for_kind(kind) {
                    let applied = aiding.apply(&mut self.filter, rec).map_err(|e| self.fail(t, e))?;
                    self.updates.extend(applied.into_iter().map(|a| UpdateRecord {
                        t,
                        kind: a.kind,
                        dim: a.report.innovation.len(),
                        mahalanobis_sq: a.report.mahalanobis_sq,
                        threshold: a.report.threshold,
                        accepted: a.report.accepted,
                    }));
                }
            }
            if kind == SensorKind::Imu && !is_first && self.imu_steps % decimation == 0 {
                self.rows.push(snapshot(&self.filter));
            }
        }
        self.wall_seconds += started.elapsed().as_secs_f64();
        Ok(())
    }

    fn finish(mut self) -> RunOutput {
        if self.rows.last().map(|r| r.t) != Some(self.filter.time()) {
            self.rows.push(snapshot(&self.filter));
        }
        RunOutput {
            rows: self.rows,
            updates: self.updates,
            predict_steps: self.filter.predict_steps(),
            wall_seconds: self.wall_seconds,
            data_seconds: self.filter.time() - self.t0,
        }
    }
}

/// Runs the filter over `log`. The filter starts at the first IMU sample;
/// IMU samples always drive the prediction, and the enable flags and denial
/// windows only gate measurement updates (for `imu`, the accelerometer
/// update).
pub fn run_log(log: &SensorLog, setup: &RunSetup) -> Result<RunOutput, RunError> {
    run_log_branched(log, setup, f64::NEG_INFINITY, &[setup.enable])
        .pop()
        .expect("one branch")
}

/// Replays `log` with `setup` up to `split`, then continues a copy of the
/// filter for each entry of `branches`, whose enable flags replace
/// `setup.enable` from `split` on. Each result equals a separate replay
/// that switches flags at `split`; the shared part is filtered once and its
/// wall time is counted in every branch.
pub fn run_log_branched(
    log: &SensorLog,
    setup: &RunSetup,
    split: f64,
    branches: &[EnableFlags],
) -> Vec<Result<RunOutput, RunError>> {
    let started = Instant::now();
    let prefix = log
        .records
        .iter()
        .position(|r| matches!(r.payload, Payload::Imu(_)))
        .ok_or_else(|| RunError {
            t: 0.0,
            source: NavError::NotInitialized,
            partial: Vec::new(),
        })
        .and_then(|first| {
            let rec = &log.records[first];
            let Payload::Imu(imu) = &rec.payload else { unreachable!() };
            let filter = NavFilter::new(setup.filter.clone(), setup.vehicle.clone(), rec.t, Some(imu))
                .map_err(|source| RunError {
                    t: rec.t,
                    source,
                    partial: Vec::new(),
                })?;
            let mut replay = Replay {
                rows: vec![snapshot(&filter)],
                filter,
                updates: Vec::new(),
                imu_steps: 0,
                wall_seconds: 0.0,
                t0: rec.t,
            };
            // samples logged before the first IMU reading carry no usable time base
            let records = &log.records[first..];
            let cut = records.partition_point(|r| r.t < split);
            replay.wall_seconds = started.elapsed().as_secs_f64();
            replay.run(&records[..cut], Some(rec), setup, setup.enable)?;
            Ok((replay, &records[cut..], rec))
        });
    match prefix {
        Err(e) => branches.iter().map(|_| Err(e.clone())).collect(),
        Ok((shared, rest, first)) => branches
            .iter()
            .map(|&enable| {
                let mut replay = shared.clone();
                replay.run(rest, Some(first), setup, enable)?;
                Ok(replay.finish())
            })
            .collect(),
    }
}
