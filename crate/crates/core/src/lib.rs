//! Thermodynamic formalism for countable-state Markov shifts: pressure,
//! conformal measures, dissipativity certificates, and KMS inverse
//! temperatures, all computed from finite graph presentations with
//! locally constant potentials.

pub mod conformal;
pub mod dissipativity;
pub mod error;
pub mod exp_family;
pub mod formats;
pub mod graph;
pub mod kms;
pub mod numeric;
pub mod oracle;
pub mod potential;
pub mod pressure;
pub mod symbolic;
pub mod transfer;

pub use error::{Error, Result};
