//! Day-ahead shutoff and critical-peak-pricing schedulers over a discrete
//! Markov weather model.

pub mod baselines_sim;
pub mod cpp_sched;
pub mod error;
pub mod ingest;
pub mod markov_model;
pub mod risk_cost;
pub mod scenario1;
pub mod scenario2;
pub mod scenario3;
pub mod synthetic;
pub mod table_io;

pub use error::{Error, Result};
