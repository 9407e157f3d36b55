//! Heterogeneous multicore-fiber true time delay lines.
//!
//! Models the per-core group delay of a dispersion-engineered multicore fiber,
//! the tunable differential delays it provides, the degradations introduced by
//! bends, twists and fabrication errors, and the microwave-photonic filter and
//! beamformer built on top of it. A scalar mode solver and an inverse design
//! search turn target dispersion values into core geometries.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bend_twist;
pub mod config;
pub mod error;
pub mod fiber_model;
pub mod mode_solver;
pub mod mwp_apps;
pub mod roots;
pub mod tolerance_mc;
pub mod units;

pub use error::{Error, Result};
pub use fiber_model::{
    load_table1_link, CoreProfile, DispersionModel, FiberCore, McfLink, Polar, WavelengthWindow,
};
