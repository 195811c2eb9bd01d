//! AUV navigation filter built on the manifold UKF.

pub mod filter;
pub mod models;
pub mod params;

pub use params::{GeoConfig, MarkovConfig, MarkovProcess, VehicleParams};
pub use filter::{Aiding, AidingRegistry, AppliedUpdate, FilterConfig, NavFilter, NoiseConfig};
