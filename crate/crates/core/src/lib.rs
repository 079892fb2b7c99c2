//! Spatial Lambda-coalescents on the discrete torus: exact-event
//! simulation, infinite-alleles spectra, the non-spatial Kingman reference,
//! and forward Cannings models.

pub mod cannings;
pub mod coalescent;
pub mod error;
pub mod experiments;
pub mod kingman;
pub mod lambda;
pub mod mutation;
pub mod oracles;
pub mod parallel;
pub mod partition;
pub mod plot;
pub mod rng;
pub mod stats;
pub mod torus;
pub mod validation;

pub use coalescent::{Event, EventKind, EventLog, SimOptions, SpatialCoalescent, StepOutcome};
pub use error::{Error, Result};
pub use lambda::{LambdaMeasure, Mechanism, RateTable};
pub use partition::{LabeledPartition, UnlabeledPartition};
pub use torus::{Site, Torus};
