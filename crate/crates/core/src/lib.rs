pub mod error;
pub mod model;
pub mod operator;

pub use error::{QmeasError, Result};
pub mod quantities;
pub mod random;
pub mod relations;
pub mod audit;
pub mod box_norm;
pub mod io;
pub mod optimize;
pub mod frontier;
pub mod runner;
