//! Engine for a desk-scale weather big-data pipeline built on the GHCN daily archive.
//!
//! Data flows through the modules in this order:
//!
//! 1. [`ingest`]: fetch, decompress and stream-parse by-year CSV files and the
//!    fixed-width station list.
//! 2. [`catalog`]: regions, countries and stations used to scope databases.
//! 3. [`store`]: an embedded document store holding the world database and the
//!    particular-region databases.
//! 4. [`aggregation`]: daily and monthly temporal aggregation, spatial fusion and
//!    unit conversion, with `?` as the missing sentinel.
//! 5. [`view`]: the ARFF minable views (standard, neighbour, test).
//! 6. [`forecast`]: univariate, multivariate and neighbour-based 12 month forecasts.
//! 7. [`metrics`]: NMSE and directional symmetry with per-month reporting.

pub mod aggregation;
pub mod catalog;
pub mod error;
pub mod forecast;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod store;
pub mod synthetic;
pub mod types;
pub mod view;

pub use error::{Error, Result};
pub use types::{Element, MonthValue, Unit, Variable, YearMonth};
