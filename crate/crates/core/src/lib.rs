//! Unit-root testing, Johansen rank testing, two-step VECM estimation and
//! Choleski impulse responses with Monte Carlo bands for monthly macro panels.

pub mod cointegration;
pub mod distributions;
pub mod error;
pub mod ingest;
pub mod irf;
pub mod pipeline;
pub mod regress;
pub mod seasonal;
pub mod series;
pub mod simulate;
pub mod unit_root;
pub mod vecm;

pub use error::{Error, Result};
pub use series::{Frequency, Panel, SampleWindow, TimeSeries, YearMonth};
