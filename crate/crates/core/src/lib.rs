//! Ground states of the many-interacting-worlds oscillator recursion
//! `x_{n+1} = x_n − 1/S_n`, their zero-bias densities and distances to the
//! normal law, and the random single replacement chain built on them.

pub mod analysis;
pub mod document;
pub mod metrics;
pub mod normal;
pub mod ou_chain;
pub mod precision;
pub mod solver;
pub mod stats;
pub mod zero_bias;

pub use analysis::{hamiltonian, verify_properties, HamiltonianReport, PropertyReport};
pub use document::{ConfigurationDocument, DocumentError, SCHEMA_VERSION};
pub use metrics::{distance_report, DistanceReport, MetricsError};
pub use normal::normal_upper_quantile;
pub use ou_chain::{PathStatistics, RunSpec, Source};
pub use solver::{solve_ground_state, Configuration, SolverError, SolverOptions};
pub use zero_bias::{build_density, ZeroBiasDensity, ZeroBiasError};
