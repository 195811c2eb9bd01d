//! Manifold unscented Kalman filter for AUV navigation.
//!
//! The crate holds the filter (`ukf`, `manifold`, `nav`), a vehicle and
//! sensor simulator (`sim`), log and configuration I/O (`logio`) and the
//! log-replay driver (`runner`).

pub mod error;
pub mod logio;
pub mod manifold;
pub mod nav;
pub mod runner;
pub mod sensors;
pub mod sim;
pub mod ukf;

pub use error::{ConfigError, LogError, NavError, SimError, UkfError};
pub use manifold::{NavState, Rotation, NAV_DIM};
pub use sensors::{Payload, SensorKind, SensorSample};
pub use ukf::{GateConfig, GaussianBelief, Ukf, UpdateReport, UtParams};
