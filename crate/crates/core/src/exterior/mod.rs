//! Constant-coefficient forms on R^n and form fields on coordinate charts.

pub mod basis;
mod complex;
mod field;
mod form;

pub use complex::{ComplexForm, C64};
pub use field::{chain_integral, fd_partial, grid_sum, Chart, FdConfig, FdScheme, FormField, Orientation, SmoothMap};
pub use form::KForm;
