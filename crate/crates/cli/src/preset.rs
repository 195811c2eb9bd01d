//! Built-in experiment presets.

use mukf_core::logio::{DenialWindow, EnableFlags, ExperimentConfig};
use mukf_core::nav::GeoConfig;
use mukf_core::sim::{Bathymetry, CurrentField, Mission, Segment};
use mukf_core::SensorKind;

const DEG: f64 = std::f64::consts::PI / 180.0;

/// Latitude shared by all presets, rad.
pub const LATITUDE: f64 = -13.0 * DEG;

/// A named sensor configuration run against the same log.
#[derive(Clone, Debug, PartialEq)]
pub struct Variant {
    pub label: String,
    pub enable: EnableFlags,
    /// `enable` applies from this time on, s; before it the config's own
    /// flags do. Variants with the same `from` share the replay up to it.
    pub from: f64,
}

impl Variant {
    pub fn new(label: &str, enable: EnableFlags) -> Self {
        Variant {
            label: label.to_string(),
            enable,
            from: f64::NEG_INFINITY,
        }
    }

    pub fn from(mut self, t: f64) -> Self {
        self.from = t;
        self
    }
}

pub trait Preset: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn config(&self) -> ExperimentConfig;
    /// Filter configurations compared on one log. The default is a single
    /// run with the config's enable flags.
    fn variants(&self) -> Vec<Variant> {
        vec![Variant::new("all", self.config().enable)]
    }
}

/// Config with the filter started at the mission start.
fn base(mission: Mission) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        geo: GeoConfig::at_latitude(LATITUDE),
        ..Default::default()
    };
    cfg.filter.init.position = mission.start;
    cfg.filter.init.heading = mission.start_heading;
    cfg.sim.mission = mission;
    cfg
}

fn square(corners: &[(f64, f64)], laps: usize, speed: f64) -> Vec<Segment> {
    (0..laps)
        .flat_map(|_| corners.iter())
        .map(|&(north, east)| Segment::Goto { north, east, speed })
        .collect()
}

/// Stationary alignment at the surface, a long straight surface leg, then a
/// dive and a turn onto a second leg; the filter starts 15° off in heading
/// and sees GPS only while stationary.
pub struct Gyrocompass;

impl Preset for Gyrocompass {
    fn name(&self) -> &'static str {
        "gyrocompass"
    }

    fn description(&self) -> &'static str {
        "heading alignment from a -15 deg offset without GPS after a stationary start (900 s)"
    }

    fn config(&self) -> ExperimentConfig {
        let h = 20.0 * DEG;
        let leg = 240.0;
        let (n1, e1) = (leg * h.cos(), leg * h.sin());
        let h2 = 110.0 * DEG;
        let mission = Mission {
            start: [0.0, 0.0, 0.0],
            start_heading: h,
            segments: vec![
                Segment::Hold { duration: 60.0 },
                Segment::Goto {
                    north: n1,
                    east: e1,
                    speed: 0.5,
                },
                Segment::Depth {
                    depth: 10.0,
                    duration: 60.0,
                },
                Segment::Goto {
                    north: n1 + 112.0 * h2.cos(),
                    east: e1 + 112.0 * h2.sin(),
                    speed: 0.5,
                },
                Segment::Depth {
                    depth: 0.0,
                    duration: 60.0,
                },
                Segment::Hold { duration: 600.0 },
            ],
        };
        let mut cfg = base(mission);
        cfg.sim.duration = Some(900.0);
        cfg.filter.init.heading_offset = -15.0 * DEG;
        cfg.filter.init.sigma.heading = 30.0 * DEG;
        cfg.deny = vec![DenialWindow {
            start: 60.0,
            end: 900.0,
            sensors: vec![SensorKind::Gps],
        }];
        cfg
    }
}

/// Five laps of a 50 m square at 10 m depth after a GPS-aided start at the
/// surface; 1 km of submerged dead reckoning.
pub struct Square5x50;

impl Preset for Square5x50 {
    fn name(&self) -> &'static str {
        "square5x50"
    }

    fn description(&self) -> &'static str {
        "five laps of a 50 m square at 10 m depth, GPS only at the surface start"
    }

    fn config(&self) -> ExperimentConfig {
        let mut segments = vec![
            Segment::Hold { duration: 120.0 },
            Segment::Depth {
                depth: 10.0,
                duration: 60.0,
            },
        ];
        segments.extend(square(
            &[(50.0, 0.0), (50.0, 50.0), (0.0, 50.0), (0.0, 0.0)],
            5,
            1.0,
        ));
        let mut cfg = base(Mission {
            start: [0.0, 0.0, 0.0],
            start_heading: 0.0,
            segments,
        });
        cfg.filter.init.sigma.heading = 2.0 * DEG;
        cfg.sim.current = CurrentField::uniform([0.05, -0.03]);
        cfg
    }
}

/// Shallow-water 250 m square with corner surfacing after a GPS-aided
/// start; DVL and GPS are denied for the last 1000 s. Compares ADCP aiding,
/// model aiding and both over the denial.
pub struct AdcpSquare;

pub const ADCP_SQUARE_INIT: f64 = 600.0;
pub const ADCP_SQUARE_END: f64 = 1600.0;

impl Preset for AdcpSquare {
    fn name(&self) -> &'static str {
        "adcp-square"
    }

    fn description(&self) -> &'static str {
        "600 s GPS/DVL start, then a cornered square with DVL and GPS denied for 1000 s"
    }

    fn config(&self) -> ExperimentConfig {
        let depth = 5.0;
        let side = 250.0;
        let (n0, e0) = (480.0, 0.0);
        let mut segments = vec![
            Segment::Hold { duration: 60.0 },
            Segment::Goto {
                north: n0,
                east: e0,
                speed: 1.0,
            },
            Segment::Depth {
                depth,
                duration: 40.0,
            },
        ];
        let corners = [
            (n0, e0 + side),
            (n0 - side, e0 + side),
            (n0 - side, e0),
            (n0, e0),
        ];
        for (north, east) in corners {
            segments.push(Segment::Goto {
                north,
                east,
                speed: 1.0,
            });
            segments.push(Segment::Depth {
                depth: 0.0,
                duration: 40.0,
            });
            segments.push(Segment::Depth {
                depth,
                duration: 40.0,
            });
        }
        let mut cfg = base(Mission {
            start: [0.0, 0.0, 0.0],
            start_heading: 0.0,
            segments,
        });
        cfg.sim.duration = Some(ADCP_SQUARE_END);
        cfg.sim.bathymetry = Bathymetry {
            depth: 14.0,
            shoals: Vec::new(),
        };
        cfg.sim.current = CurrentField {
            surface: [0.15, 0.05],
            reference: [0.05, -0.05],
            reference_depth: 14.0,
            drift: [0.0, 0.0],
        };
        // the transducer is out of the water at the corners and its bias
        // wanders faster than the stock unit's
        cfg.sim.sensors.adcp.min_depth = 1.0;
        cfg.sim.sensors.adcp.bias.sigma_drift = 0.03;
        cfg.sim.sensors.adcp.bias.tau = 600.0;
        cfg.model_error = 0.2;
        cfg.filter.init.sigma.heading = 2.0 * DEG;
        cfg.filter.markov.adcp_bias.sigma_drift = 0.04;
        cfg.filter.markov.adcp_bias.tau = 600.0;
        // the current is steady over the run
        for c in [&mut cfg.filter.markov.current_vehicle, &mut cfg.filter.markov.current_bottom] {
            c.tau = 1e5;
            c.sigma_drift = 0.01;
        }
        // covers the force error of a ±20 % model once ADCP has pinned the current
        cfg.filter.noise.model_force = 18.0;
        cfg.deny = vec![DenialWindow {
            start: ADCP_SQUARE_INIT,
            end: ADCP_SQUARE_END,
            sensors: vec![SensorKind::Dvl, SensorKind::Gps],
        }];
        cfg
    }

    /// All three share the aided start and differ once DVL and GPS drop out.
    fn variants(&self) -> Vec<Variant> {
        let all = EnableFlags::default();
        vec![
            Variant::new(
                "adcp",
                EnableFlags {
                    thr: false,
                    ..all
                },
            )
            .from(ADCP_SQUARE_INIT),
            Variant::new(
                "model",
                EnableFlags {
                    adcp: false,
                    ..all
                },
            )
            .from(ADCP_SQUARE_INIT),
            Variant::new("model+adcp", all).from(ADCP_SQUARE_INIT),
        ]
    }
}

pub struct PresetRegistry {
    presets: Vec<Box<dyn Preset>>,
}

impl PresetRegistry {
    pub fn empty() -> Self {
        PresetRegistry {
            presets: Vec::new(),
        }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Gyrocompass));
        r.register(Box::new(Square5x50));
        r.register(Box::new(AdcpSquare));
        r
    }

    /// Replaces any preset with the same name.
    pub fn register(&mut self, p: Box<dyn Preset>) {
        self.presets.retain(|q| q.name() != p.name());
        self.presets.push(p);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Preset> {
        self.presets
            .iter()
            .find(|p| p.name() == name)
            .map(|p| p.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.presets.iter().map(|p| p.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Preset> {
        self.presets.iter().map(|p| p.as_ref())
    }
}

impl Default for PresetRegistry {
    fn default() -> Self {
        Self::standard()
    }
}
