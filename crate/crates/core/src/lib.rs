//! Approximation scheme for stochastic load balancing with Poisson job sizes.
//!
//! Jobs have independent `Poi(λ_i)` sizes and are assigned to `m` identical
//! machines; the objective is the expected maximum machine load. Since sums of
//! independent Poissons are Poisson, a machine's load is `Poi(μ_j)` with
//! `μ_j` the sum of its rates, and the objective is `E[max_j Poi(μ_j)]`.
//!
//! The solver peels jobs that must run alone, classifies the remaining
//! instance by how the maximum of Poissons concentrates, and dispatches to a
//! deterministic scheme, a configuration integer program with a
//! case-specific objective, or a dynamic program over job and load profiles.
//!
//! ```
//! use pbalance::{instance::JobInstance, ptas::ptas_solve};
//!
//! let inst = JobInstance::new(2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
//! let sol = ptas_solve(&inst, 0.5).unwrap();
//! assert_eq!(sol.loads(), &[2.0, 2.0]);
//! ```

pub mod config_ip;
pub mod det_sched;
pub mod dp_solver;
pub mod error;
pub mod harness;
pub mod instance;
pub mod poisson;
pub mod ptas;
pub mod rounding;
pub mod transition;

pub use error::{Error, Result};
