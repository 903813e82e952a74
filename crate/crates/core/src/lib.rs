//! Monte Carlo simulator of partisan-sorting opinion dynamics coupled to SIS
//! epidemic spread on a shared scale-free network, with a campaign runner and
//! the statistics used to read its output.

pub mod agent;
pub mod analysis;
pub mod engine;
pub mod epi;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod info;
pub mod metrics;
pub mod params;
pub mod records;
pub mod seed;

pub use error::{Error, ErrorKind, Result};
pub use graph::{generate_holme_kim, Graph, GraphSpec};
pub use params::Params;
