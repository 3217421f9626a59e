pub mod bench;
pub mod decomp;
pub mod error;
pub mod marcher;
pub mod modelfile;
pub mod odecore;
pub mod psirep;
pub mod randnet;
pub mod refsolve;
pub mod trainer;

pub use error::{Error, Result};
