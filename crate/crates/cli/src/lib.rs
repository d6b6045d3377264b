//! Experiment driver around the `vem` library: presets for the convergence
//! studies, a flat-file config format, CSV/manifest emission, VTK snapshots
//! and the internal consistency checks.

pub mod check;
pub mod config;
pub mod presets;
pub mod runner;
pub mod tables;
pub mod vtk;
