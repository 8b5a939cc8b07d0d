//! Fitting, sweeps and reporting built on the physics modules.

pub mod fit;
pub mod lm;
pub mod report;
pub mod sweep;
