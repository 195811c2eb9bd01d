//! Timestamped sensor records shared by the simulator, the log reader and the
//! filter.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Imu,
    Dvl,
    Adcp,
    Gps,
    #[serde(rename = "pres")]
    Pressure,
    #[serde(rename = "thr")]
    Thruster,
}

impl SensorKind {
    pub const ALL: [SensorKind; 6] = [
        SensorKind::Imu,
        SensorKind::Dvl,
        SensorKind::Adcp,
        SensorKind::Gps,
        SensorKind::Pressure,
        SensorKind::Thruster,
    ];

    /// Tag used in log files.
    pub fn tag(&self) -> &'static str {
        match self {
            SensorKind::Imu => "imu",
            SensorKind::Dvl => "dvl",
            SensorKind::Adcp => "adcp",
            SensorKind::Gps => "gps",
            SensorKind::Pressure => "pres",
            SensorKind::Thruster => "thr",
        }
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SensorKind {
    type Err = String;

    /// Accepts log tags plus the aliases `pressure`, `thruster` and `model`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "imu" => Ok(SensorKind::Imu),
            "dvl" => Ok(SensorKind::Dvl),
            "adcp" => Ok(SensorKind::Adcp),
            "gps" => Ok(SensorKind::Gps),
            "pres" | "pressure" => Ok(SensorKind::Pressure),
            "thr" | "thruster" | "model" => Ok(SensorKind::Thruster),
            other => Err(format!("unknown sensor kind '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImuSample {
    /// Body angular rate, rad/s.
    pub gyro: Vector3<f64>,
    /// Specific force, m/s².
    pub accel: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdcpCell {
    /// Range from the transducer, m.
    pub range: f64,
    /// Measured water velocity relative to the vehicle, body frame, m/s.
    pub velocity: Vector3<f64>,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdcpProfile {
    pub cells: Vec<AdcpCell>,
    /// Maximum profiling range, m.
    pub max_range: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Imu(ImuSample),
    /// Bottom-track velocity at the DVL, body frame.
    Dvl { velocity: Vector3<f64>, valid: bool },
    Adcp(AdcpProfile),
    /// Horizontal fix in the local NED frame, m.
    Gps { position: Vector2<f64> },
    /// Depth, m, positive down.
    Pressure { depth: f64 },
    /// Per-thruster forces, N.
    Thruster { forces: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensorSample {
    pub t: f64,
    pub payload: Payload,
}

impl SensorSample {
    pub fn kind(&self) -> SensorKind {
        match self.payload {
            Payload::Imu(_) => SensorKind::Imu,
            Payload::Dvl { .. } => SensorKind::Dvl,
            Payload::Adcp(_) => SensorKind::Adcp,
            Payload::Gps { .. } => SensorKind::Gps,
            Payload::Pressure { .. } => SensorKind::Pressure,
            Payload::Thruster { .. } => SensorKind::Thruster,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_parse_from_tags_and_aliases() {
        for k in SensorKind::ALL {
            assert_eq!(k.tag().parse::<SensorKind>().unwrap(), k);
        }
        assert_eq!("model".parse::<SensorKind>().unwrap(), SensorKind::Thruster);
        assert!("sonar".parse::<SensorKind>().is_err());
    }
}
