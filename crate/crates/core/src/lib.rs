pub mod acceptance;
pub mod config;
pub mod error;
pub mod specfun;
pub mod symbol;
pub mod indicial;
pub mod line;
pub mod modegreen;
pub mod extension;
pub mod neck;
pub mod solver;

pub use error::{Error, Result};
