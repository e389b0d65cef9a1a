pub mod acceptance;
pub mod backward;
pub mod cli;
pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod io;
pub mod mittag_leffler;
mod sum;

pub use error::{Error, Result};
