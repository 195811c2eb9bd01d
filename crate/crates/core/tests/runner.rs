//! Branched replays agree with plain ones.

use mukf_core::logio::{EnableFlags, SensorLog};
use mukf_core::nav::{AidingRegistry, FilterConfig, GeoConfig, VehicleParams};
use mukf_core::runner::{run_log, run_log_branched, RunSetup};
use mukf_core::sim::{simulate, Mission, Segment, SimConfig};

fn short_log() -> SensorLog {
    let geo = GeoConfig::at_latitude(-0.2);
    let cfg = SimConfig {
        mission: Mission {
            start: [0.0, 0.0, 0.0],
            start_heading: 0.0,
            segments: vec![
                Segment::Hold { duration: 10.0 },
                Segment::Goto {
                    north: 30.0,
                    east: 0.0,
                    speed: 1.0,
                },
            ],
        },
        duration: Some(40.0),
        ..Default::default()
    };
    let out = simulate(&cfg, &VehicleParams::default(), &geo, 3).unwrap();
    SensorLog {
        latitude: geo.latitude,
        t0: 0.0,
        records: out.samples,
    }
}

#[test]
fn branches_match_separate_replays() {
    let log = short_log();
    let registry = AidingRegistry::standard();
    let setup = RunSetup {
        filter: FilterConfig {
            geo: GeoConfig::at_latitude(-0.2),
            ..Default::default()
        },
        vehicle: VehicleParams::default(),
        enable: EnableFlags::default(),
        deny: &[],
        decimation: 10,
        registry: &registry,
    };
    let plain = run_log(&log, &setup).unwrap();
    let no_dvl = EnableFlags {
        dvl: false,
        ..EnableFlags::default()
    };
    let split = 20.0;
    let mut b = run_log_branched(&log, &setup, split, &[no_dvl, setup.enable]);
    let same = b.pop().unwrap().unwrap();
    let switched = b.pop().unwrap().unwrap();

    assert_eq!(same.rows, plain.rows);
    assert_eq!(same.updates, plain.updates);
    assert_eq!(same.predict_steps, plain.predict_steps);

    // identical up to the split, then the DVL updates stop
    let before = |rows: &[mukf_core::logio::EstimateRow]| rows.iter().filter(|r| r.t < split).count();
    let n = before(&plain.rows);
    assert_eq!(switched.rows[..n], plain.rows[..n]);
    assert_ne!(switched.rows.last(), plain.rows.last());
    assert!(switched
        .updates
        .iter()
        .all(|u| u.t < split || u.kind != mukf_core::SensorKind::Dvl));
}
