//! Pseudo-spectral solver for the convective Brinkman–Forchheimer equations on
//! the periodic torus, with an inverse-source toolkit, an energy-estimate
//! auditor and a stability harness.

pub mod spectral;
pub mod forward;
pub mod inverse;
pub mod estimates;
pub mod stability;
pub mod io;
pub mod cli;
