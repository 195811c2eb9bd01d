//! Line-oriented sensor log.
//!
//! ```text
//! #mukf-log v1 lat=<rad> t0=<epoch_s>
//! <t> imu gx=.. gy=.. gz=.. ax=.. ay=.. az=..
//! <t> dvl vx=.. vy=.. vz=.. valid=0|1
//! <t> adcp max=<m> c=<range>,<u>,<v>,<w>,<valid> c=...
//! <t> gps n=.. e=..
//! <t> pres d=..
//! <t> thr f=<f1>,<f2>,...
//! ```
//!
//! Numbers are written in shortest round-trip form, so a write followed by
//! a read reproduces every value bit for bit.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use nalgebra::{Vector2, Vector3};

use crate::error::LogError;
use crate::sensors::{AdcpCell, AdcpProfile, ImuSample, Payload, SensorKind, SensorSample};

pub const LOG_MAGIC: &str = "#mukf-log";
pub const LOG_VERSION: &str = "v1";

#[derive(Clone, Debug, PartialEq)]
pub struct SensorLog {
    /// Geodetic latitude, rad.
    pub latitude: f64,
    /// Epoch of `t = 0`, s.
    pub t0: f64,
    pub records: Vec<SensorSample>,
}

impl SensorLog {
    pub fn new(latitude: f64, t0: f64) -> Self {
        SensorLog {
            latitude,
            t0,
            records: Vec::new(),
        }
    }

    pub fn duration(&self) -> f64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn count(&self, kind: SensorKind) -> usize {
        self.records.iter().filter(|r| r.kind() == kind).count()
    }
}

pub fn header_line(latitude: f64, t0: f64) -> String {
    format!("{LOG_MAGIC} {LOG_VERSION} lat={latitude} t0={t0}")
}

/// One record line without the trailing newline.
pub fn format_record(s: &SensorSample) -> String {
    let mut out = format!("{} {}", s.t, s.kind().tag());
    let w = &mut out;
    match &s.payload {
        Payload::Imu(i) => {
            let _ = write!(
                w,
                " gx={} gy={} gz={} ax={} ay={} az={}",
                i.gyro.x, i.gyro.y, i.gyro.z, i.accel.x, i.accel.y, i.accel.z
            );
        }
        Payload::Dvl { velocity, valid } => {
            let _ = write!(
                w,
                " vx={} vy={} vz={} valid={}",
                velocity.x, velocity.y, velocity.z, *valid as u8
            );
        }
        Payload::Adcp(p) => {
            let _ = write!(w, " max={}", p.max_range);
            for c in &p.cells {
                let _ = write!(
                    w,
                    " c={},{},{},{},{}",
                    c.range, c.velocity.x, c.velocity.y, c.velocity.z, c.valid as u8
                );
            }
        }
        Payload::Gps { position } => {
            let _ = write!(w, " n={} e={}", position.x, position.y);
        }
        Payload::Pressure { depth } => {
            let _ = write!(w, " d={depth}");
        }
        Payload::Thruster { forces } => {
            let list: Vec<String> = forces.iter().map(|f| f.to_string()).collect();
            let _ = write!(w, " f={}", list.join(","));
        }
    }
    out
}

pub fn write_log_to(mut w: impl Write, log: &SensorLog) -> std::io::Result<()> {
    writeln!(w, "{}", header_line(log.latitude, log.t0))?;
    for r in &log.records {
        writeln!(w, "{}", format_record(r))?;
    }
    w.flush()
}

pub fn write_log(path: &Path, log: &SensorLog) -> Result<(), LogError> {
    let io = |source| LogError::Io {
        path: path.to_path_buf(),
        source,
    };
    let f = std::fs::File::create(path).map_err(io)?;
    write_log_to(std::io::BufWriter::new(f), log).map_err(io)
}

pub fn read_log(path: &Path) -> Result<SensorLog, LogError> {
    let f = std::fs::File::open(path).map_err(|source| LogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_log_from(BufReader::new(f), path)
}

/// Parses a log; `path` is only used in error messages.
pub fn read_log_from(r: impl BufRead, path: &Path) -> Result<SensorLog, LogError> {
    let mut lines = r.lines();
    let io = |source| LogError::Io {
        path: path.to_path_buf(),
        source,
    };
    let header = match lines.next() {
        Some(l) => l.map_err(io)?,
        None => String::new(),
    };
    let (latitude, t0) = parse_header(&header).ok_or_else(|| LogError::SchemaMismatch {
        path: path.to_path_buf(),
        found: header.clone(),
    })?;
    let mut log = SensorLog::new(latitude, t0);
    let mut prev = f64::NEG_INFINITY;
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io)?;
        let lineno = i + 2;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let rec = parse_record(trimmed).map_err(|reason| LogError::MalformedRecord {
            path: path.to_path_buf(),
            line: lineno,
            reason,
        })?;
        if rec.t < prev {
            return Err(LogError::NonMonotoneTimestamp {
                path: path.to_path_buf(),
                line: lineno,
                t: rec.t,
                prev,
            });
        }
        prev = rec.t;
        log.records.push(rec);
    }
    Ok(log)
}

fn parse_header(line: &str) -> Option<(f64, f64)> {
    let mut it = line.split_whitespace();
    if it.next()? != LOG_MAGIC || it.next()? != LOG_VERSION {
        return None;
    }
    let (mut lat, mut t0) = (None, None);
    for tok in it {
        let (k, v) = tok.split_once('=')?;
        let v: f64 = v.parse().ok()?;
        match k {
            "lat" => lat = Some(v),
            "t0" => t0 = Some(v),
            _ => return None,
        }
    }
    Some((lat?, t0?))
}

struct Fields<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn raw(&self, key: &str) -> Result<&'a str, String> {
        self.pairs
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| format!("missing field '{key}'"))
    }

    fn num(&self, key: &str) -> Result<f64, String> {
        parse_num(self.raw(key)?, key)
    }

    fn flag(&self, key: &str) -> Result<bool, String> {
        parse_flag(self.raw(key)?, key)
    }

    fn all(&self, key: &str) -> impl Iterator<Item = &'a str> + '_ {
        let key = key.to_string();
        self.pairs
            .iter()
            .filter(move |(k, _)| *k == key)
            .map(|(_, v)| *v)
    }
}

fn parse_num(v: &str, key: &str) -> Result<f64, String> {
    let x: f64 = v
        .parse()
        .map_err(|_| format!("field '{key}': '{v}' is not a number"))?;
    if !x.is_finite() {
        return Err(format!("field '{key}' is not finite"));
    }
    Ok(x)
}

fn parse_flag(v: &str, key: &str) -> Result<bool, String> {
    match v {
        "1" => Ok(true),
        "0" => Ok(false),
        _ => Err(format!("field '{key}' must be 0 or 1, got '{v}'")),
    }
}

pub fn parse_record(line: &str) -> Result<SensorSample, String> {
    let mut it = line.split_whitespace();
    let t = parse_num(it.next().ok_or("empty record")?, "t")?;
    let kind: SensorKind = it.next().ok_or("missing sensor kind")?.parse()?;
    let mut pairs = Vec::new();
    for tok in it {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| format!("token '{tok}' is not key=value"))?;
        pairs.push((k, v));
    }
    let f = Fields { pairs };
    let payload = match kind {
        SensorKind::Imu => Payload::Imu(ImuSample {
            gyro: Vector3::new(f.num("gx")?, f.num("gy")?, f.num("gz")?),
            accel: Vector3::new(f.num("ax")?, f.num("ay")?, f.num("az")?),
        }),
        SensorKind::Dvl => Payload::Dvl {
            velocity: Vector3::new(f.num("vx")?, f.num("vy")?, f.num("vz")?),
            valid: f.flag("valid")?,
        },
        SensorKind::Adcp => {
            let max_range = f.num("max")?;
            let mut cells = Vec::new();
            for c in f.all("c") {
                let parts: Vec<&str> = c.split(',').collect();
                if parts.len() != 5 {
                    return Err(format!("ADCP cell '{c}' needs 5 values"));
                }
                cells.push(AdcpCell {
                    range: parse_num(parts[0], "c.range")?,
                    velocity: Vector3::new(
                        parse_num(parts[1], "c.u")?,
                        parse_num(parts[2], "c.v")?,
                        parse_num(parts[3], "c.w")?,
                    ),
                    valid: parse_flag(parts[4], "c.valid")?,
                });
            }
            Payload::Adcp(AdcpProfile { cells, max_range })
        }
        SensorKind::Gps => Payload::Gps {
            position: Vector2::new(f.num("n")?, f.num("e")?),
        },
        SensorKind::Pressure => Payload::Pressure { depth: f.num("d")? },
        SensorKind::Thruster => {
            let v = f.all("f").next().ok_or("missing field 'f'")?;
            let forces = v
                .split(',')
                .map(|x| parse_num(x, "f"))
                .collect::<Result<Vec<_>, _>>()?;
            Payload::Thruster { forces }
        }
    };
    Ok(SensorSample { t, payload })
}

/// Path used in errors for in-memory logs.
pub fn memory_path() -> PathBuf {
    PathBuf::from("<memory>")
}
