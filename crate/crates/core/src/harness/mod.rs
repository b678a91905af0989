//! Ground truth and empirical verification: exhaustive optima, sampling,
//! exact checks of the concentration statements, and the counterexample
//! showing that means are not effective job sizes.

pub mod appendix;
pub mod brute;
pub mod lemmas;
pub mod monte_carlo;
pub mod suites;

pub use appendix::{appendix_counterexample, proposition_a1_check, Counterexample, SandwichReport};
pub use brute::{brute_force_makespan, brute_force_opt};
pub use lemmas::{verify_case_lemma, CheckRow, LemmaReport};
pub use monte_carlo::monte_carlo_emax;
