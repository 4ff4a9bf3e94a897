pub mod depca_engine;
pub mod diagnostics;
pub mod difference_engine;
pub mod matrix_core;
pub mod quadrature;
pub mod reduction;
pub mod signals;
pub mod tolerances;
